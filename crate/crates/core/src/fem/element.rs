//! Linear plane-stress elements: precomputed shape-function gradients,
//! strains, internal forces, and stiffness blocks.
//!
//! Strain tensors carry the tensorial shear component; the engineering-shear
//! convention lives only in the B-operator algebra here, so the factor of two
//! appears exactly once on the way in and once on the way out.

use super::mesh::{ElementConn, Mesh, MeshError};
use crate::tensor::{SymTensor2, Tangent3};

pub const MAX_ELEM_NODES: usize = 4;

const GAUSS_1D: f64 = 0.577_350_269_189_625_8; // 1/sqrt(3)

/// One integration point: cartesian shape-function gradients and the
/// integration weight including thickness.
#[derive(Debug, Clone, Copy)]
pub struct GaussPoint {
    pub grads: [[f64; 2]; MAX_ELEM_NODES],
    pub weight_vol: f64,
    pub coords: [f64; 2],
}

/// Geometry of one element, fixed over the run (small strains).
#[derive(Debug, Clone)]
pub struct ElementGeom {
    pub n_nodes: usize,
    pub gps: Vec<GaussPoint>,
}

pub fn element_geometry(mesh: &Mesh, index: usize) -> Result<ElementGeom, MeshError> {
    let conn = mesh.elements[index];
    let p: Vec<[f64; 2]> = conn.nodes().iter().map(|&n| mesh.nodes[n]).collect();
    match conn {
        ElementConn::Tri3(_) => {
            let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
                - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]);
            if det <= 0.0 {
                return Err(MeshError::Inverted { element: index });
            }
            // Constant gradients of the barycentric shape functions.
            let mut grads = [[0.0; 2]; MAX_ELEM_NODES];
            grads[0] = [(p[1][1] - p[2][1]) / det, (p[2][0] - p[1][0]) / det];
            grads[1] = [(p[2][1] - p[0][1]) / det, (p[0][0] - p[2][0]) / det];
            grads[2] = [(p[0][1] - p[1][1]) / det, (p[1][0] - p[0][0]) / det];
            let coords = [
                (p[0][0] + p[1][0] + p[2][0]) / 3.0,
                (p[0][1] + p[1][1] + p[2][1]) / 3.0,
            ];
            Ok(ElementGeom {
                n_nodes: 3,
                gps: vec![GaussPoint {
                    grads,
                    weight_vol: 0.5 * det * mesh.thickness,
                    coords,
                }],
            })
        }
        ElementConn::Quad4(_) => {
            let xi_eta = [
                (-GAUSS_1D, -GAUSS_1D),
                (GAUSS_1D, -GAUSS_1D),
                (GAUSS_1D, GAUSS_1D),
                (-GAUSS_1D, GAUSS_1D),
            ];
            let corner = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
            let mut gps = Vec::with_capacity(4);
            for (xi, eta) in xi_eta {
                let mut dn = [[0.0; 2]; 4];
                let mut n = [0.0; 4];
                for (i, (cx, cy)) in corner.iter().enumerate() {
                    n[i] = 0.25 * (1.0 + cx * xi) * (1.0 + cy * eta);
                    dn[i] = [0.25 * cx * (1.0 + cy * eta), 0.25 * cy * (1.0 + cx * xi)];
                }
                let mut j = [[0.0; 2]; 2];
                for i in 0..4 {
                    j[0][0] += dn[i][0] * p[i][0];
                    j[0][1] += dn[i][0] * p[i][1];
                    j[1][0] += dn[i][1] * p[i][0];
                    j[1][1] += dn[i][1] * p[i][1];
                }
                let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                if det <= 0.0 {
                    return Err(MeshError::Inverted { element: index });
                }
                let inv = [
                    [j[1][1] / det, -j[0][1] / det],
                    [-j[1][0] / det, j[0][0] / det],
                ];
                let mut grads = [[0.0; 2]; MAX_ELEM_NODES];
                let mut coords = [0.0; 2];
                for i in 0..4 {
                    grads[i] = [
                        inv[0][0] * dn[i][0] + inv[0][1] * dn[i][1],
                        inv[1][0] * dn[i][0] + inv[1][1] * dn[i][1],
                    ];
                    coords[0] += n[i] * p[i][0];
                    coords[1] += n[i] * p[i][1];
                }
                gps.push(GaussPoint {
                    grads,
                    weight_vol: det * mesh.thickness,
                    coords,
                });
            }
            Ok(ElementGeom { n_nodes: 4, gps })
        }
    }
}

/// Strain at one integration point from element nodal displacements,
/// ordered (ux0, uy0, ux1, uy1, ...).
pub fn gp_strain(gp: &GaussPoint, n_nodes: usize, ue: &[f64]) -> SymTensor2 {
    let mut exx = 0.0;
    let mut eyy = 0.0;
    let mut gxy = 0.0;
    for i in 0..n_nodes {
        let (ux, uy) = (ue[2 * i], ue[2 * i + 1]);
        exx += gp.grads[i][0] * ux;
        eyy += gp.grads[i][1] * uy;
        gxy += gp.grads[i][1] * ux + gp.grads[i][0] * uy;
    }
    SymTensor2::new(exx, eyy, 0.5 * gxy)
}

/// Strains at every integration point of one element.
pub fn element_strain(geom: &ElementGeom, ue: &[f64]) -> Vec<SymTensor2> {
    geom.gps
        .iter()
        .map(|gp| gp_strain(gp, geom.n_nodes, ue))
        .collect()
}

/// Accumulate one integration point's contribution to the element internal
/// force, fe += B^T sigma * weight.
pub fn add_gp_force(gp: &GaussPoint, n_nodes: usize, stress: SymTensor2, fe: &mut [f64]) {
    for i in 0..n_nodes {
        fe[2 * i] += (gp.grads[i][0] * stress.xx + gp.grads[i][1] * stress.xy) * gp.weight_vol;
        fe[2 * i + 1] += (gp.grads[i][1] * stress.yy + gp.grads[i][0] * stress.xy) * gp.weight_vol;
    }
}

/// Accumulate one integration point's contribution to the element stiffness,
/// ke += B^T D B * weight, where the tangent maps tensorial strain components
/// and the B columns carry engineering shear.
pub fn add_gp_stiffness(
    gp: &GaussPoint,
    n_nodes: usize,
    tangent: &Tangent3,
    ke: &mut [[f64; 2 * MAX_ELEM_NODES]; 2 * MAX_ELEM_NODES],
) {
    let t = &tangent.0;
    for j in 0..n_nodes {
        let (dx, dy) = (gp.grads[j][0], gp.grads[j][1]);
        // D times the two B-columns of node j; the shear row of B feeds the
        // tensorial-shear column of D with half the engineering value.
        let col_x = [
            t[0][0] * dx + t[0][2] * 0.5 * dy,
            t[1][0] * dx + t[1][2] * 0.5 * dy,
            t[2][0] * dx + t[2][2] * 0.5 * dy,
        ];
        let col_y = [
            t[0][1] * dy + t[0][2] * 0.5 * dx,
            t[1][1] * dy + t[1][2] * 0.5 * dx,
            t[2][1] * dy + t[2][2] * 0.5 * dx,
        ];
        for i in 0..n_nodes {
            let (gx, gy) = (gp.grads[i][0], gp.grads[i][1]);
            ke[2 * i][2 * j] += (gx * col_x[0] + gy * col_x[2]) * gp.weight_vol;
            ke[2 * i + 1][2 * j] += (gy * col_x[1] + gx * col_x[2]) * gp.weight_vol;
            ke[2 * i][2 * j + 1] += (gx * col_y[0] + gy * col_y[2]) * gp.weight_vol;
            ke[2 * i + 1][2 * j + 1] += (gy * col_y[1] + gx * col_y[2]) * gp.weight_vol;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::ElasticOperator;
    use std::collections::BTreeMap;

    fn one_quad(nodes: Vec<[f64; 2]>) -> Mesh {
        Mesh {
            nodes,
            elements: vec![ElementConn::Quad4([0, 1, 2, 3])],
            sets: BTreeMap::new(),
            thickness: 1.0,
        }
    }

    fn one_tri() -> Mesh {
        Mesh {
            nodes: vec![[0.0, 0.0], [2.0, 0.0], [0.0, 1.0]],
            elements: vec![ElementConn::Tri3([0, 1, 2])],
            sets: BTreeMap::new(),
            thickness: 0.5,
        }
    }

    #[test]
    fn rigid_motion_gives_zero_strain() {
        let mesh = one_quad(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        let geom = element_geometry(&mesh, 0).unwrap();
        // Translation plus an infinitesimal rotation about the origin.
        let w = 1.0e-6;
        let ue: Vec<f64> = mesh.nodes[..4]
            .iter()
            .flat_map(|p| [3.0e-3 - w * p[1], -2.0e-3 + w * p[0]])
            .collect();
        for e in element_strain(&geom, &ue) {
            assert!(e.norm() <= 1.0e-18);
        }
    }

    #[test]
    fn linear_field_is_exact_on_a_skewed_quad() {
        let mesh = one_quad(vec![[0.0, 0.0], [1.3, 0.1], [1.5, 1.2], [-0.2, 0.9]]);
        let geom = element_geometry(&mesh, 0).unwrap();
        // ux = a x + b y, uy = c x + d y.
        let (a, b, c, d) = (1.0e-3, -4.0e-4, 2.0e-4, 6.0e-4);
        let ue: Vec<f64> = mesh.nodes[..4]
            .iter()
            .flat_map(|p| [a * p[0] + b * p[1], c * p[0] + d * p[1]])
            .collect();
        for e in element_strain(&geom, &ue) {
            assert!((e.xx - a).abs() <= 1.0e-18);
            assert!((e.yy - d).abs() <= 1.0e-18);
            assert!((e.xy - 0.5 * (b + c)).abs() <= 1.0e-18);
        }
    }

    #[test]
    fn tri_area_and_quad_weights_integrate_volume() {
        let mesh = one_tri();
        let geom = element_geometry(&mesh, 0).unwrap();
        let vol: f64 = geom.gps.iter().map(|g| g.weight_vol).sum();
        assert!((vol - 1.0 * 0.5).abs() <= 1.0e-15);

        let mesh = one_quad(vec![[0.0, 0.0], [2.0, 0.0], [2.0, 3.0], [0.0, 3.0]]);
        let geom = element_geometry(&mesh, 0).unwrap();
        let vol: f64 = geom.gps.iter().map(|g| g.weight_vol).sum();
        assert!((vol - 6.0).abs() <= 1.0e-12);
    }

    #[test]
    fn stiffness_matches_force_differences() {
        let mesh = one_quad(vec![[0.0, 0.0], [1.1, 0.0], [1.2, 1.05], [0.05, 0.95]]);
        let geom = element_geometry(&mesh, 0).unwrap();
        let el = ElasticOperator::new(28.0e9, 0.2).unwrap();
        let d = el.matrix();

        let force = |ue: &[f64]| {
            let mut fe = vec![0.0; 8];
            for gp in &geom.gps {
                let eps = gp_strain(gp, 4, ue);
                add_gp_force(gp, 4, el.apply(eps), &mut fe);
            }
            fe
        };

        let mut ke = [[0.0; 2 * MAX_ELEM_NODES]; 2 * MAX_ELEM_NODES];
        for gp in &geom.gps {
            add_gp_stiffness(gp, 4, &d, &mut ke);
        }

        let h = 1.0e-7;
        for k in 0..8 {
            let mut up = vec![0.0; 8];
            up[k] = h;
            let mut um = vec![0.0; 8];
            um[k] = -h;
            let (fp, fm) = (force(&up), force(&um));
            for i in 0..8 {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                assert!(
                    (ke[i][k] - fd).abs() <= 1.0e-4 * 28.0e9_f64.max(fd.abs()),
                    "K[{i}][{k}] = {} vs fd {}",
                    ke[i][k],
                    fd
                );
            }
        }
    }

    #[test]
    fn uniform_stress_force_matches_edge_tractions() {
        // Unit square at uniform sigma_xx: nodal forces on the right edge must
        // equal sigma * edge length * thickness / 2 per node.
        let mesh = one_quad(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        let geom = element_geometry(&mesh, 0).unwrap();
        let stress = SymTensor2::new(5.0e6, 0.0, 0.0);
        let mut fe = vec![0.0; 8];
        for gp in &geom.gps {
            add_gp_force(gp, 4, stress, &mut fe);
        }
        assert!((fe[2] - 2.5e6).abs() <= 1.0e-6);
        assert!((fe[4] - 2.5e6).abs() <= 1.0e-6);
        assert!((fe[0] + 2.5e6).abs() <= 1.0e-6);
        assert!((fe[6] + 2.5e6).abs() <= 1.0e-6);
        assert!(fe.iter().map(|x| x.abs()).sum::<f64>() <= 1.0e7 + 1.0e-6);
    }
}
