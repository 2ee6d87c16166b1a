//! Columnar field snapshots and a legacy unstructured-grid text writer.

use super::element::ElementGeom;
use super::mesh::{ElementConn, Mesh};
use super::solve::QuadStore;
use crate::fmt;

pub const FIELD_HEADER: &str =
    "element,gauss,x,y,sigma_xx,sigma_yy,sigma_xy,sigma_1,sigma_2,damage,regime";

/// One integration point, flattened for plotting.
#[derive(Debug, Clone)]
pub struct FieldRow {
    pub element: usize,
    pub gauss: usize,
    pub x: f64,
    pub y: f64,
    pub stress: [f64; 3],
    pub principal: [f64; 2],
    pub damage: f64,
    pub regime: &'static str,
}

impl FieldRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{}",
            self.element,
            self.gauss,
            fmt::csv_row(&[
                self.x,
                self.y,
                self.stress[0],
                self.stress[1],
                self.stress[2],
                self.principal[0],
                self.principal[1],
                self.damage,
            ]),
            self.regime
        )
    }
}

pub fn field_rows(geoms: &[ElementGeom], store: &QuadStore) -> Vec<FieldRow> {
    let mut rows = Vec::new();
    for (e, geom) in geoms.iter().enumerate() {
        for (g, gp) in geom.gps.iter().enumerate() {
            let rec = &store.gps[e][g];
            let spec = rec.stress.spectral();
            rows.push(FieldRow {
                element: e,
                gauss: g,
                x: gp.coords[0],
                y: gp.coords[1],
                stress: [rec.stress.xx, rec.stress.yy, rec.stress.xy],
                principal: spec.values,
                damage: rec.damage,
                regime: rec.state.regime.label(),
            });
        }
    }
    rows
}

/// Legacy unstructured-grid text format with per-cell averaged fields, for
/// viewers that do not ingest the columnar file.
pub fn legacy_grid_text(mesh: &Mesh, store: &QuadStore, displacements: &[f64]) -> String {
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\ncracked plane-stress field\nASCII\n");
    s.push_str("DATASET UNSTRUCTURED_GRID\n");
    s.push_str(&format!("POINTS {} double\n", mesh.nodes.len()));
    for p in &mesh.nodes {
        s.push_str(&format!("{} {} 0.0\n", fmt::float(p[0]), fmt::float(p[1])));
    }
    let list_len: usize = mesh
        .elements
        .iter()
        .map(|c| c.nodes().len() + 1)
        .sum();
    s.push_str(&format!("CELLS {} {}\n", mesh.elements.len(), list_len));
    for conn in &mesh.elements {
        let ids = conn.nodes();
        s.push_str(&ids.len().to_string());
        for &n in ids {
            s.push_str(&format!(" {n}"));
        }
        s.push('\n');
    }
    s.push_str(&format!("CELL_TYPES {}\n", mesh.elements.len()));
    for conn in &mesh.elements {
        s.push_str(match conn {
            ElementConn::Tri3(_) => "5\n",
            ElementConn::Quad4(_) => "9\n",
        });
    }
    s.push_str(&format!("POINT_DATA {}\n", mesh.nodes.len()));
    s.push_str("VECTORS displacement double\n");
    for n in 0..mesh.nodes.len() {
        s.push_str(&format!(
            "{} {} 0.0\n",
            fmt::float(displacements[2 * n]),
            fmt::float(displacements[2 * n + 1])
        ));
    }
    s.push_str(&format!("CELL_DATA {}\n", mesh.elements.len()));
    s.push_str("SCALARS damage double 1\nLOOKUP_TABLE default\n");
    for gps in &store.gps {
        let avg = gps.iter().map(|g| g.damage).sum::<f64>() / gps.len() as f64;
        s.push_str(&format!("{}\n", fmt::float(avg)));
    }
    s.push_str("SCALARS sigma_xx double 1\nLOOKUP_TABLE default\n");
    for gps in &store.gps {
        let avg = gps.iter().map(|g| g.stress.xx).sum::<f64>() / gps.len() as f64;
        s.push_str(&format!("{}\n", fmt::float(avg)));
    }
    s
}
