//! Symmetric second-order tensors in two dimensions and the plane-stress
//! elastic operator.
//!
//! The shear component is stored tensorially (`xy`, not the engineering
//! shear `2*xy`). Engineering shear appears only at the finite-element
//! boundary, inside strain-displacement matrices; everything in this module
//! and in the constitutive kernel works with tensor components.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use thiserror::Error;

/// Relative eigenvalue gap below which a spectral decomposition is treated
/// as degenerate and the canonical axes are returned.
pub const DEGENERATE_GAP_REL: f64 = 1e-12;

/// Symmetric 2x2 tensor with tensor shear convention.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymTensor2 {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

impl SymTensor2 {
    pub const ZERO: SymTensor2 = SymTensor2 {
        xx: 0.0,
        yy: 0.0,
        xy: 0.0,
    };

    pub fn new(xx: f64, yy: f64, xy: f64) -> Self {
        Self { xx, yy, xy }
    }

    /// Symmetric dyad n (x) n of a direction vector.
    pub fn dyad(n: [f64; 2]) -> Self {
        Self {
            xx: n[0] * n[0],
            yy: n[1] * n[1],
            xy: n[0] * n[1],
        }
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    /// Full double contraction a : b (shear counted twice).
    pub fn ddot(&self, other: &SymTensor2) -> f64 {
        self.xx * other.xx + self.yy * other.yy + 2.0 * self.xy * other.xy
    }

    /// Frobenius norm of the full 2x2 matrix.
    pub fn norm(&self) -> f64 {
        self.ddot(self).sqrt()
    }

    /// Normal component n . T . n for a direction vector.
    pub fn normal_component(&self, n: [f64; 2]) -> f64 {
        self.xx * n[0] * n[0] + self.yy * n[1] * n[1] + 2.0 * self.xy * n[0] * n[1]
    }

    pub fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.yy.is_finite() && self.xy.is_finite()
    }

    /// Component in a flat (xx, yy, xy) indexing, used by the numeric tangent.
    pub fn component(&self, i: usize) -> f64 {
        match i {
            0 => self.xx,
            1 => self.yy,
            2 => self.xy,
            _ => panic!("component index out of range: {i}"),
        }
    }

    /// Unit tensor along one flat component (xx, yy, xy).
    pub fn basis(i: usize) -> Self {
        match i {
            0 => Self::new(1.0, 0.0, 0.0),
            1 => Self::new(0.0, 1.0, 0.0),
            2 => Self::new(0.0, 0.0, 1.0),
            _ => panic!("component index out of range: {i}"),
        }
    }

    /// R T R^T for a rotation by `theta` (counterclockwise).
    pub fn rotated(&self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let xx = c * c * self.xx + s * s * self.yy - 2.0 * s * c * self.xy;
        let yy = s * s * self.xx + c * c * self.yy + 2.0 * s * c * self.xy;
        let xy = s * c * (self.xx - self.yy) + (c * c - s * s) * self.xy;
        Self { xx, yy, xy }
    }

    /// Closed-form eigendecomposition. Eigenvalues are sorted descending;
    /// directions are unit vectors forming a right-handed pair. A degenerate
    /// spectrum (relative gap below [`DEGENERATE_GAP_REL`]) falls back to the
    /// canonical axes.
    pub fn spectral(&self) -> Spectral2 {
        let center = 0.5 * (self.xx + self.yy);
        let half_diff = 0.5 * (self.xx - self.yy);
        let radius = half_diff.hypot(self.xy);
        let values = [center + radius, center - radius];

        let scale = values[0].abs().max(values[1].abs());
        let gap = 2.0 * radius;
        if gap <= DEGENERATE_GAP_REL * scale || gap == 0.0 {
            return Spectral2 {
                values,
                directions: [[1.0, 0.0], [0.0, 1.0]],
            };
        }

        let theta = 0.5 * (2.0 * self.xy).atan2(self.xx - self.yy);
        let (s, c) = theta.sin_cos();
        Spectral2 {
            values,
            directions: [[c, s], [-s, c]],
        }
    }

    /// Spectral split into the tensile part (positive eigenvalues) and the
    /// compressive part (negative eigenvalues). The parts sum back to the
    /// original tensor.
    pub fn split_tension_compression(&self) -> (SymTensor2, SymTensor2) {
        let spec = self.spectral();
        let mut tension = SymTensor2::ZERO;
        let mut compression = SymTensor2::ZERO;
        for k in 0..2 {
            let dyad = SymTensor2::dyad(spec.directions[k]);
            let pos = macaulay(spec.values[k]);
            let neg = spec.values[k] - pos;
            tension += dyad * pos;
            compression += dyad * neg;
        }
        (tension, compression)
    }
}

/// Macaulay bracket `<x> = max(x, 0)`.
pub fn macaulay(x: f64) -> f64 {
    x.max(0.0)
}

/// Result of [`SymTensor2::spectral`].
#[derive(Debug, Clone, Copy)]
pub struct Spectral2 {
    /// Eigenvalues, `values[0] >= values[1]`.
    pub values: [f64; 2],
    /// Unit eigenvectors matching `values`.
    pub directions: [[f64; 2]; 2],
}

impl Spectral2 {
    /// Rebuild the tensor from its eigenpairs.
    pub fn reconstruct(&self) -> SymTensor2 {
        SymTensor2::dyad(self.directions[0]) * self.values[0]
            + SymTensor2::dyad(self.directions[1]) * self.values[1]
    }
}

impl Add for SymTensor2 {
    type Output = SymTensor2;
    fn add(self, rhs: SymTensor2) -> SymTensor2 {
        SymTensor2::new(self.xx + rhs.xx, self.yy + rhs.yy, self.xy + rhs.xy)
    }
}

impl AddAssign for SymTensor2 {
    fn add_assign(&mut self, rhs: SymTensor2) {
        *self = *self + rhs;
    }
}

impl Sub for SymTensor2 {
    type Output = SymTensor2;
    fn sub(self, rhs: SymTensor2) -> SymTensor2 {
        SymTensor2::new(self.xx - rhs.xx, self.yy - rhs.yy, self.xy - rhs.xy)
    }
}

impl SubAssign for SymTensor2 {
    fn sub_assign(&mut self, rhs: SymTensor2) {
        *self = *self - rhs;
    }
}

impl Mul<f64> for SymTensor2 {
    type Output = SymTensor2;
    fn mul(self, rhs: f64) -> SymTensor2 {
        SymTensor2::new(self.xx * rhs, self.yy * rhs, self.xy * rhs)
    }
}

impl Neg for SymTensor2 {
    type Output = SymTensor2;
    fn neg(self) -> SymTensor2 {
        self * -1.0
    }
}

#[derive(Debug, Error)]
pub enum ElasticityError {
    #[error("Young's modulus must be positive, got {0}")]
    NonPositiveYoung(f64),
    #[error("Poisson's ratio must satisfy 0 <= nu < 0.5, got {0}")]
    PoissonOutOfRange(f64),
}

/// Plane-stress isotropic elastic operator.
#[derive(Debug, Clone, Copy)]
pub struct ElasticOperator {
    young: f64,
    poisson: f64,
    /// E / (1 - nu^2)
    plane_modulus: f64,
    /// E / (1 + nu) = 2 G, acting on the tensor shear component.
    shear_modulus2: f64,
}

impl ElasticOperator {
    pub fn new(young: f64, poisson: f64) -> Result<Self, ElasticityError> {
        if !(young > 0.0) || !young.is_finite() {
            return Err(ElasticityError::NonPositiveYoung(young));
        }
        if !(0.0..0.5).contains(&poisson) {
            return Err(ElasticityError::PoissonOutOfRange(poisson));
        }
        Ok(Self {
            young,
            poisson,
            plane_modulus: young / (1.0 - poisson * poisson),
            shear_modulus2: young / (1.0 + poisson),
        })
    }

    pub fn young(&self) -> f64 {
        self.young
    }

    pub fn poisson(&self) -> f64 {
        self.poisson
    }

    /// E / (1 - nu^2), the diagonal entry of the plane-stress stiffness.
    pub fn plane_modulus(&self) -> f64 {
        self.plane_modulus
    }

    /// Stress from elastic strain under the plane-stress assumption.
    pub fn apply(&self, strain: SymTensor2) -> SymTensor2 {
        SymTensor2 {
            xx: self.plane_modulus * (strain.xx + self.poisson * strain.yy),
            yy: self.plane_modulus * (strain.yy + self.poisson * strain.xx),
            xy: self.shear_modulus2 * strain.xy,
        }
    }

    /// 3x3 stiffness in (xx, yy, xy) ordering with tensor shear. The shear
    /// column therefore carries 2G, not G.
    pub fn matrix(&self) -> Tangent3 {
        let e = self.plane_modulus;
        let nu = self.poisson;
        Tangent3([
            [e, nu * e, 0.0],
            [nu * e, e, 0.0],
            [0.0, 0.0, self.shear_modulus2],
        ])
    }
}

/// 3x3 operator relating tensor strain components (xx, yy, xy) to stress
/// components in the same ordering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tangent3(pub [[f64; 3]; 3]);

impl Tangent3 {
    pub const ZERO: Tangent3 = Tangent3([[0.0; 3]; 3]);

    pub fn apply(&self, strain: SymTensor2) -> SymTensor2 {
        let v = [strain.xx, strain.yy, strain.xy];
        let mut out = [0.0; 3];
        for (row, o) in self.0.iter().zip(out.iter_mut()) {
            *o = row[0] * v[0] + row[1] * v[1] + row[2] * v[2];
        }
        SymTensor2::new(out[0], out[1], out[2])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }

    /// Largest absolute entry in one row.
    pub fn row_max_abs(&self, i: usize) -> f64 {
        self.0[i].iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}
