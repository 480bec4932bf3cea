use serde::{Deserialize, Serialize};

use super::params::{mat_mul, SaftParams};
use crate::error::Result;

pub type Mat2 = [[f64; 2]; 2];

/// `L = M1 · L_FT · M2` with `M1 = [b, 0; d, 1/b]`, `M2 = [1, 0; a/b, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FtFactors {
    pub m1: Mat2,
    pub m2: Mat2,
}

impl FtFactors {
    pub fn product(&self) -> Mat2 {
        mat_mul(mat_mul(self.m1, [[0.0, 1.0], [-1.0, 0.0]]), self.m2)
    }
}

pub fn decompose_ft(params: &SaftParams) -> Result<FtFactors> {
    params.require_b()?;
    let (a, b, d) = (params.a(), params.b(), params.d());
    Ok(FtFactors {
        m1: [[b, 0.0], [d, 1.0 / b]],
        m2: [[1.0, 0.0], [a / b, 1.0]],
    })
}

/// `L = R(θ) · diag(Γ, 1/Γ) · [1, u; 0, 1]`, `R(θ) = [cos θ, sin θ; −sin θ, cos θ]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Iwasawa {
    pub theta: f64,
    pub gamma: f64,
    pub shear: f64,
}

impl Iwasawa {
    pub fn product(&self) -> Mat2 {
        let (s, c) = self.theta.sin_cos();
        let rot = [[c, s], [-s, c]];
        let scale = [[self.gamma, 0.0], [0.0, 1.0 / self.gamma]];
        mat_mul(mat_mul(rot, scale), [[1.0, self.shear], [0.0, 1.0]])
    }
}

/// Always defined for unimodular blocks (`a` and `c` cannot both vanish).
pub fn decompose_iwasawa(params: &SaftParams) -> Iwasawa {
    let (a, b, c, d) = (params.a(), params.b(), params.c(), params.d());
    let g2 = a * a + c * c;
    Iwasawa {
        theta: (-c).atan2(a),
        gamma: g2.sqrt(),
        shear: (a * b + c * d) / g2,
    }
}
