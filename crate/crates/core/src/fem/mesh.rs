//! Plane meshes of linear triangles and quadrilaterals, their text form,
//! and validation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("mesh has no nodes")]
    Empty,
    #[error("thickness must be positive, got {0}")]
    Thickness(f64),
    #[error("node coordinate is not finite")]
    NonFiniteNode,
    #[error("element {element} references node {node} of {count}")]
    IndexOutOfRange {
        element: usize,
        node: usize,
        count: usize,
    },
    #[error("element {element} repeats a node")]
    RepeatedNode { element: usize },
    #[error("element {element} has non-positive area or inverted corners")]
    Inverted { element: usize },
    #[error("element {element} has {count} nodes; only 3 or 4 are supported")]
    BadArity { element: usize, count: usize },
    #[error("set {name:?} references node {node} of {count}")]
    BadSet {
        name: String,
        node: usize,
        count: usize,
    },
    #[error("unknown node set {0:?}")]
    UnknownSet(String),
    #[error("mesh text: {0}")]
    Parse(String),
}

/// Connectivity of one element, counter-clockwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementConn {
    Tri3([usize; 3]),
    Quad4([usize; 4]),
}

impl ElementConn {
    pub fn nodes(&self) -> &[usize] {
        match self {
            ElementConn::Tri3(n) => n,
            ElementConn::Quad4(n) => n,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    pub elements: Vec<ElementConn>,
    pub sets: BTreeMap<String, Vec<usize>>,
    pub thickness: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMesh {
    thickness: f64,
    nodes: Vec<[f64; 2]>,
    elements: Vec<Vec<usize>>,
    #[serde(default)]
    sets: BTreeMap<String, Vec<usize>>,
}

fn cross(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

impl Mesh {
    pub fn validate(&self) -> Result<(), MeshError> {
        if self.nodes.is_empty() || self.elements.is_empty() {
            return Err(MeshError::Empty);
        }
        if !(self.thickness > 0.0 && self.thickness.is_finite()) {
            return Err(MeshError::Thickness(self.thickness));
        }
        if self.nodes.iter().flatten().any(|c| !c.is_finite()) {
            return Err(MeshError::NonFiniteNode);
        }
        let count = self.nodes.len();
        for (element, conn) in self.elements.iter().enumerate() {
            let ids = conn.nodes();
            for &node in ids {
                if node >= count {
                    return Err(MeshError::IndexOutOfRange {
                        element,
                        node,
                        count,
                    });
                }
            }
            for (k, &a) in ids.iter().enumerate() {
                if ids[k + 1..].contains(&a) {
                    return Err(MeshError::RepeatedNode { element });
                }
            }
            let p = |i: usize| self.nodes[ids[i]];
            let ok = match conn {
                ElementConn::Tri3(_) => cross(p(0), p(1), p(2)) > 0.0,
                ElementConn::Quad4(_) => (0..4).all(|k| {
                    cross(p(k), p((k + 1) % 4), p((k + 3) % 4)) > 0.0
                }),
            };
            if !ok {
                return Err(MeshError::Inverted { element });
            }
        }
        for (name, ids) in &self.sets {
            for &node in ids {
                if node >= count {
                    return Err(MeshError::BadSet {
                        name: name.clone(),
                        node,
                        count,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn set(&self, name: &str) -> Result<&[usize], MeshError> {
        self.sets
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| MeshError::UnknownSet(name.to_string()))
    }

    pub fn to_text(&self) -> String {
        let raw = RawMesh {
            thickness: self.thickness,
            nodes: self.nodes.clone(),
            elements: self
                .elements
                .iter()
                .map(|c| c.nodes().to_vec())
                .collect(),
            sets: self.sets.clone(),
        };
        toml::to_string(&raw).expect("mesh serialization cannot fail")
    }

    pub fn from_text(text: &str) -> Result<Mesh, MeshError> {
        let raw: RawMesh =
            toml::from_str(text).map_err(|e| MeshError::Parse(e.to_string()))?;
        let mut elements = Vec::with_capacity(raw.elements.len());
        for (element, ids) in raw.elements.iter().enumerate() {
            elements.push(match ids.len() {
                3 => ElementConn::Tri3([ids[0], ids[1], ids[2]]),
                4 => ElementConn::Quad4([ids[0], ids[1], ids[2], ids[3]]),
                count => return Err(MeshError::BadArity { element, count }),
            });
        }
        let mesh = Mesh {
            nodes: raw.nodes,
            elements,
            sets: raw.sets,
            thickness: raw.thickness,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    /// FNV-1a over the canonical text form; identifies the mesh in run
    /// manifests.
    pub fn checksum(&self) -> u64 {
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        for byte in self.to_text().bytes() {
            hash ^= u64::from(byte);
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
        hash
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_quad() -> Mesh {
        Mesh {
            nodes: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            elements: vec![ElementConn::Quad4([0, 1, 2, 3])],
            sets: BTreeMap::from([("left".to_string(), vec![0, 3])]),
            thickness: 0.05,
        }
    }

    #[test]
    fn accepts_a_valid_mesh() {
        unit_quad().validate().unwrap();
    }

    #[test]
    fn rejects_defects() {
        let mut m = unit_quad();
        m.thickness = 0.0;
        assert!(matches!(m.validate(), Err(MeshError::Thickness(_))));

        let mut m = unit_quad();
        m.elements[0] = ElementConn::Quad4([0, 1, 2, 9]);
        assert!(matches!(
            m.validate(),
            Err(MeshError::IndexOutOfRange { .. })
        ));

        let mut m = unit_quad();
        m.elements[0] = ElementConn::Quad4([0, 3, 2, 1]);
        assert!(matches!(m.validate(), Err(MeshError::Inverted { .. })));

        let mut m = unit_quad();
        m.elements[0] = ElementConn::Quad4([0, 1, 2, 2]);
        assert!(matches!(m.validate(), Err(MeshError::RepeatedNode { .. })));

        let mut m = unit_quad();
        m.sets.insert("bad".into(), vec![77]);
        assert!(matches!(m.validate(), Err(MeshError::BadSet { .. })));
    }

    #[test]
    fn rejects_a_chevron_quad() {
        let mut m = unit_quad();
        m.nodes[2] = [0.25, 0.25];
        assert!(matches!(m.validate(), Err(MeshError::Inverted { .. })));
    }

    #[test]
    fn text_round_trip_preserves_everything() {
        let m = unit_quad();
        let text = m.to_text();
        let back = Mesh::from_text(&text).unwrap();
        assert_eq!(back.nodes, m.nodes);
        assert_eq!(back.elements, m.elements);
        assert_eq!(back.sets, m.sets);
        assert_eq!(back.thickness, m.thickness);
        assert_eq!(back.checksum(), m.checksum());
    }

    #[test]
    fn parse_rejects_bad_arity_and_unknown_keys() {
        let text = "thickness = 1.0\nnodes = [[0.0, 0.0], [1.0, 0.0]]\nelements = [[0, 1]]\n";
        assert!(matches!(
            Mesh::from_text(text),
            Err(MeshError::BadArity { count: 2, .. })
        ));
        let text = "thickness = 1.0\nnodes = [[0.0, 0.0]]\nelements = []\nbogus = 3\n";
        assert!(matches!(Mesh::from_text(text), Err(MeshError::Parse(_))));
    }

    #[test]
    fn checksum_tracks_content() {
        let a = unit_quad();
        let mut b = unit_quad();
        b.nodes[1][0] = 1.0 + 1.0e-12;
        assert_ne!(a.checksum(), b.checksum());
    }
}
