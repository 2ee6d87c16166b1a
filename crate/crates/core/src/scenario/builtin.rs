//! Generators for the three built-in specimens: two notched bending beams
//! and a double-edge-notched plate under axial cycling. All dimensions are
//! meters; meshes are graded so the expected crack path is resolved finely
//! and every feature line (notch, support, gauge line) lies on grid lines.

use std::collections::BTreeMap;

use crate::fem::{ElementConn, Mesh, ProbeDef, ProbeKind, ReactionDef, SolverConfig};
use crate::material::MaterialParams;

use super::{AverageStress, DrivenSet, Generated, ProtocolKind, ProtocolSpec, ScenarioError};

const BEAM_SPAN: f64 = 0.3048;
const BEAM_HEIGHT: f64 = 0.0762;
const BEAM_OVERHANG: f64 = 0.0254;
const BEAM_THICKNESS: f64 = 0.0286;
/// Half-width of the finely meshed band around a bending notch.
const BEAM_FINE_ZONE: f64 = 0.0254;
const MIXED_NOTCH_OFFSET: f64 = 0.0756;

const PLATE_LENGTH: f64 = 0.250;
const PLATE_WIDTH: f64 = 0.060;
const PLATE_THICKNESS: f64 = 0.050;
const PLATE_GAUGE_OFFSET: f64 = 0.0175;
/// Each edge notch cuts 5 mm into the width, leaving a 50 mm ligament.
const PLATE_NOTCH_DEPTH: f64 = 0.005;

/// Node rows along one grid column whose left and right faces are
/// disconnected. The tip row is excluded so the crack tip stays one node.
struct Slit {
    col: usize,
    dup_rows: Vec<usize>,
}

/// Grid-line coordinates for one axis, built from anchor points with a
/// prescribed element count per segment. `line_of[k]` is the grid-line index
/// of anchor `k`, usable for exact node lookups without float matching.
struct Axis {
    coords: Vec<f64>,
    line_of: Vec<usize>,
}

fn axis(anchors: &[f64], counts: &[usize]) -> Axis {
    debug_assert_eq!(anchors.len(), counts.len() + 1);
    debug_assert!(anchors.windows(2).all(|w| w[0] < w[1]));
    let mut coords = vec![anchors[0]];
    let mut line_of = vec![0];
    for (seg, &n) in counts.iter().enumerate() {
        let (a, b) = (anchors[seg], anchors[seg + 1]);
        for k in 1..=n {
            coords.push(if k == n {
                b
            } else {
                a + (b - a) * k as f64 / n as f64
            });
        }
        line_of.push(coords.len() - 1);
    }
    Axis { coords, line_of }
}

struct Grid {
    mesh: Mesh,
    ny: usize,
    /// For each slit, (left-face node, right-face node) per duplicated row,
    /// in the order the rows were given.
    slit_pairs: Vec<Vec<(usize, usize)>>,
}

impl Grid {
    fn node(&self, i: usize, j: usize) -> usize {
        i * (self.ny + 1) + j
    }

    fn column(&self, i: usize) -> Vec<usize> {
        (0..=self.ny).map(|j| self.node(i, j)).collect()
    }
}

fn build_grid(xa: &Axis, ya: &Axis, slits: &[Slit], thickness: f64) -> Grid {
    let (xs, ys) = (&xa.coords, &ya.coords);
    let (nx, ny) = (xs.len() - 1, ys.len() - 1);
    let base = |i: usize, j: usize| i * (ny + 1) + j;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for &x in xs {
        for &y in ys {
            nodes.push([x, y]);
        }
    }
    let mut dup = BTreeMap::new();
    let mut slit_pairs = Vec::new();
    for slit in slits {
        let mut pairs = Vec::new();
        for &j in &slit.dup_rows {
            let id = nodes.len();
            nodes.push([xs[slit.col], ys[j]]);
            dup.insert((slit.col, j), id);
            pairs.push((base(slit.col, j), id));
        }
        slit_pairs.push(pairs);
    }
    // An element's left edge lies on grid column i; where that column is
    // slit, the element sits on the right face of the cut and takes the
    // duplicated nodes.
    let right_face = |i: usize, j: usize| dup.get(&(i, j)).copied().unwrap_or(base(i, j));
    let mut elements = Vec::with_capacity(nx * ny);
    for i in 0..nx {
        for j in 0..ny {
            elements.push(ElementConn::Quad4([
                right_face(i, j),
                base(i + 1, j),
                base(i + 1, j + 1),
                right_face(i, j + 1),
            ]));
        }
    }
    Grid {
        mesh: Mesh {
            nodes,
            elements,
            sets: BTreeMap::new(),
            thickness,
        },
        ny,
        slit_pairs,
    }
}

fn check_refinement(refinement: usize) -> Result<usize, ScenarioError> {
    if refinement == 0 || refinement > 8 {
        return Err(ScenarioError::Invalid(format!(
            "refinement {refinement} out of range 1..=8"
        )));
    }
    Ok(refinement)
}

/// Simply supported notched beam loaded downward at mid-span. The notch is a
/// slit of depth h/3 rising from the bottom fiber at `notch_x`; its mouth
/// carries the opening-displacement probe.
fn bending_beam(notch_x: f64, refinement: usize) -> Result<Generated, ScenarioError> {
    let r = check_refinement(refinement)?;
    let half = BEAM_SPAN / 2.0;
    let end = half + BEAM_OVERHANG;
    let tip_y = BEAM_HEIGHT / 3.0;
    let (xa, notch_anchor) = if notch_x == 0.0 {
        (
            axis(
                &[-end, -half, -BEAM_FINE_ZONE, 0.0, BEAM_FINE_ZONE, half, end],
                &[1, 3 * r, 3 * r, 3 * r, 3 * r, 1],
            ),
            3,
        )
    } else {
        (
            axis(
                &[
                    -end,
                    -half,
                    0.0,
                    notch_x - BEAM_FINE_ZONE,
                    notch_x,
                    notch_x + BEAM_FINE_ZONE,
                    half,
                    end,
                ],
                &[1, 4 * r, 2 * r, 2 * r, 2 * r, 2 * r, 1],
            ),
            4,
        )
    };
    let ya = axis(&[0.0, tip_y, BEAM_HEIGHT], &[2 * r, 4 * r]);
    let slit = Slit {
        col: xa.line_of[notch_anchor],
        dup_rows: (0..2 * r).collect(),
    };
    let mut grid = build_grid(&xa, &ya, &[slit], BEAM_THICKNESS);

    let ny = grid.ny;
    let mid_col = xa.line_of[if notch_x == 0.0 { 3 } else { 2 }];
    let load_node = grid.node(mid_col, ny);
    let sup_left = grid.node(xa.line_of[1], 0);
    let sup_right = grid.node(xa.line_of[xa.line_of.len() - 2], 0);
    let (mouth_a, mouth_b) = grid.slit_pairs[0][0];
    let sets = &mut grid.mesh.sets;
    sets.insert("load".into(), vec![load_node]);
    sets.insert("support_left".into(), vec![sup_left]);
    sets.insert("support_right".into(), vec![sup_right]);
    sets.insert("mouth_a".into(), vec![mouth_a]);
    sets.insert("mouth_b".into(), vec![mouth_b]);
    grid.mesh.validate()?;

    Ok(Generated {
        mesh: grid.mesh,
        drives: vec![
            DrivenSet {
                set: "support_left".into(),
                comp: 0,
                sign: 0.0,
            },
            DrivenSet {
                set: "support_left".into(),
                comp: 1,
                sign: 0.0,
            },
            DrivenSet {
                set: "support_right".into(),
                comp: 1,
                sign: 0.0,
            },
            DrivenSet {
                set: "load".into(),
                comp: 1,
                sign: -1.0,
            },
        ],
        probes: vec![ProbeDef {
            name: "cmd".into(),
            kind: ProbeKind::NodePairAbs {
                a: mouth_a,
                b: mouth_b,
                comp: 0,
            },
        }],
        reactions: vec![
            ReactionDef {
                name: "load".into(),
                set: "load".into(),
                comp: 1,
            },
            ReactionDef {
                name: "support_left".into(),
                set: "support_left".into(),
                comp: 1,
            },
            ReactionDef {
                name: "support_right".into(),
                set: "support_right".into(),
                comp: 1,
            },
        ],
        params: MaterialParams::new(28.0e9, 0.2, 3.8e6, 80.0, 70.0, 1.0)?,
        sweep: vec![1.00, 0.85, 0.60, 0.45],
        protocol: ProtocolSpec {
            kind: ProtocolKind::TwoUnload,
            amplitudes: vec![0.2e-3, 0.5e-3, 0.8e-3],
        },
        solver: SolverConfig {
            steps: 48,
            ..SolverConfig::default()
        },
        average_stress: None,
    })
}

pub fn gen_opening_mode(refinement: usize) -> Result<Generated, ScenarioError> {
    bending_beam(0.0, refinement)
}

pub fn gen_mixed_mode(refinement: usize) -> Result<Generated, ScenarioError> {
    let mut g = bending_beam(MIXED_NOTCH_OFFSET, refinement)?;
    g.params = MaterialParams::new(34.0e9, 0.2, 4.2e6, 110.0, 70.0, 1.0)?;
    Ok(g)
}

/// Plate with a slit notch in each long edge at mid-length, stretched by
/// opposing prescribed displacements on its short edges. Gauge lines either
/// side of the notch section feed the averaged elongation probe; the edge
/// reaction over the cross-section area gives the average stress.
pub fn gen_full_cycle(refinement: usize) -> Result<Generated, ScenarioError> {
    let r = check_refinement(refinement)?;
    let mid = PLATE_LENGTH / 2.0;
    let xa = axis(
        &[
            0.0,
            mid - PLATE_GAUGE_OFFSET,
            mid,
            mid + PLATE_GAUGE_OFFSET,
            PLATE_LENGTH,
        ],
        &[2 * r, 2 * r, 2 * r, 2 * r],
    );
    let ya = axis(
        &[
            0.0,
            PLATE_NOTCH_DEPTH,
            PLATE_WIDTH - PLATE_NOTCH_DEPTH,
            PLATE_WIDTH,
        ],
        &[r, 4 * r, r],
    );
    let rows = ya.coords.len() - 1;
    let slit = Slit {
        col: xa.line_of[2],
        dup_rows: (0..r).chain(5 * r + 1..=rows).collect(),
    };
    let mut grid = build_grid(&xa, &ya, &[slit], PLATE_THICKNESS);

    let left = grid.column(0);
    let right = grid.column(xa.line_of[4]);
    let gauge_left = grid.column(xa.line_of[1]);
    let gauge_right = grid.column(xa.line_of[3]);
    let pins = vec![grid.node(0, 3 * r), grid.node(xa.line_of[4], 3 * r)];
    let sets = &mut grid.mesh.sets;
    sets.insert("left".into(), left);
    sets.insert("right".into(), right);
    sets.insert("gauge_left".into(), gauge_left);
    sets.insert("gauge_right".into(), gauge_right);
    sets.insert("pins".into(), pins);
    grid.mesh.validate()?;

    Ok(Generated {
        mesh: grid.mesh,
        drives: vec![
            DrivenSet {
                set: "left".into(),
                comp: 0,
                sign: -1.0,
            },
            DrivenSet {
                set: "right".into(),
                comp: 0,
                sign: 1.0,
            },
            DrivenSet {
                set: "pins".into(),
                comp: 1,
                sign: 0.0,
            },
        ],
        probes: vec![ProbeDef {
            name: "deflection".into(),
            kind: ProbeKind::LineAvgDiff {
                set_a: "gauge_right".into(),
                set_b: "gauge_left".into(),
                comp: 0,
            },
        }],
        reactions: vec![
            ReactionDef {
                name: "pull".into(),
                set: "right".into(),
                comp: 0,
            },
            ReactionDef {
                name: "anchor".into(),
                set: "left".into(),
                comp: 0,
            },
        ],
        params: MaterialParams::new(25.0e9, 0.2, 3.2e6, 150.0, 140.0, 1.0)?,
        sweep: vec![1.00, 0.60, 0.40, 0.20],
        protocol: ProtocolSpec {
            kind: ProtocolKind::FullReversal,
            amplitudes: vec![0.08e-3, 0.02e-3, 0.12e-3],
        },
        solver: SolverConfig {
            steps: 64,
            ..SolverConfig::default()
        },
        average_stress: Some(AverageStress {
            reaction: "pull".into(),
            area: PLATE_WIDTH * PLATE_THICKNESS,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_generators_validate_at_refinements_one_through_four() {
        for r in 1..=4 {
            for gen in [gen_opening_mode, gen_mixed_mode, gen_full_cycle] {
                let g = gen(r).unwrap();
                g.mesh.validate().unwrap();
            }
        }
    }

    #[test]
    fn refinement_zero_is_rejected() {
        assert!(matches!(
            gen_opening_mode(0),
            Err(ScenarioError::Invalid(_))
        ));
    }

    #[test]
    fn opening_mode_notch_sits_at_mid_span() {
        let g = gen_opening_mode(2).unwrap();
        let mouth_a = g.mesh.set("mouth_a").unwrap()[0];
        let mouth_b = g.mesh.set("mouth_b").unwrap()[0];
        assert_ne!(mouth_a, mouth_b);
        assert_eq!(g.mesh.nodes[mouth_a], g.mesh.nodes[mouth_b]);
        assert_eq!(g.mesh.nodes[mouth_a], [0.0, 0.0]);
        // The two mouth nodes connect only to elements on their own side.
        for (&n, side) in [(&mouth_a, -1.0), (&mouth_b, 1.0)] {
            for conn in &g.mesh.elements {
                if conn.nodes().contains(&n) {
                    let cx: f64 = conn
                        .nodes()
                        .iter()
                        .map(|&k| g.mesh.nodes[k][0])
                        .sum::<f64>()
                        / conn.nodes().len() as f64;
                    assert!(cx * side > 0.0, "element on the wrong side of the slit");
                }
            }
        }
    }

    #[test]
    fn opening_mode_tip_is_a_single_node_at_one_third_height() {
        let g = gen_opening_mode(1).unwrap();
        let tip = BEAM_HEIGHT / 3.0;
        let at_tip: Vec<usize> = (0..g.mesh.nodes.len())
            .filter(|&n| g.mesh.nodes[n] == [0.0, tip])
            .collect();
        assert_eq!(at_tip.len(), 1);
        // Below the tip every slit node is doubled.
        let below: usize = (0..g.mesh.nodes.len())
            .filter(|&n| g.mesh.nodes[n][0] == 0.0 && g.mesh.nodes[n][1] < tip)
            .count();
        assert_eq!(below, 4);
    }

    #[test]
    fn supports_sit_at_the_span_ends() {
        let g = gen_opening_mode(1).unwrap();
        let l = g.mesh.set("support_left").unwrap()[0];
        let r = g.mesh.set("support_right").unwrap()[0];
        assert_eq!(g.mesh.nodes[l], [-BEAM_SPAN / 2.0, 0.0]);
        assert_eq!(g.mesh.nodes[r], [BEAM_SPAN / 2.0, 0.0]);
        let load = g.mesh.set("load").unwrap()[0];
        assert_eq!(g.mesh.nodes[load], [0.0, BEAM_HEIGHT]);
    }

    #[test]
    fn mixed_mode_offsets_the_notch_but_not_the_load() {
        let g = gen_mixed_mode(2).unwrap();
        let mouth = g.mesh.set("mouth_a").unwrap()[0];
        assert_eq!(g.mesh.nodes[mouth], [MIXED_NOTCH_OFFSET, 0.0]);
        let load = g.mesh.set("load").unwrap()[0];
        assert_eq!(g.mesh.nodes[load], [0.0, BEAM_HEIGHT]);
        // Ligament above the tip: 4r grid rows at the notch column.
        let tip = BEAM_HEIGHT / 3.0;
        let above: usize = (0..g.mesh.nodes.len())
            .filter(|&n| {
                g.mesh.nodes[n][0] == MIXED_NOTCH_OFFSET && g.mesh.nodes[n][1] > tip
            })
            .count();
        assert_eq!(above, 8);
    }

    #[test]
    fn full_cycle_gauges_flank_the_notch_section() {
        let g = gen_full_cycle(2).unwrap();
        for (set, x) in [
            ("gauge_left", 0.125 - PLATE_GAUGE_OFFSET),
            ("gauge_right", 0.125 + PLATE_GAUGE_OFFSET),
        ] {
            let nodes = g.mesh.set(set).unwrap();
            assert!(!nodes.is_empty());
            for &n in nodes {
                assert!((g.mesh.nodes[n][0] - x).abs() < 1.0e-12);
            }
        }
        let a = g.average_stress.as_ref().unwrap();
        assert!((a.area - 0.003).abs() < 1.0e-15);
        // Both edge notches are open slits, the mid ligament is connected:
        // mid-column nodes double up only outside the ligament.
        for n in 0..g.mesh.nodes.len() {
            let [x, y] = g.mesh.nodes[n];
            if x == 0.125 {
                let copies = g
                    .mesh
                    .nodes
                    .iter()
                    .filter(|&&p| p == [x, y])
                    .count();
                let in_ligament = (PLATE_NOTCH_DEPTH..=PLATE_WIDTH - PLATE_NOTCH_DEPTH)
                    .contains(&y);
                assert_eq!(copies, if in_ligament { 1 } else { 2 }, "y = {y}");
            }
        }
    }

    #[test]
    fn full_cycle_pins_block_rigid_motion_at_mid_width() {
        let g = gen_full_cycle(1).unwrap();
        let pins = g.mesh.set("pins").unwrap();
        assert_eq!(pins.len(), 2);
        for &n in pins {
            assert!((g.mesh.nodes[n][1] - 0.030).abs() < 1.0e-12);
        }
        assert_eq!(g.mesh.nodes[pins[0]][0], 0.0);
        assert_eq!(g.mesh.nodes[pins[1]][0], PLATE_LENGTH);
    }
}
