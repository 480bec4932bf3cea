use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Result, SaftError};
use crate::math::{cis, J};

/// Tolerance on `ad − bc = 1`.
pub const UNIMODULAR_TOL: f64 = 1e-12;
const B_ZERO_TOL: f64 = 1e-14;

/// Real 2×2 block plus offset `(p, q)` of a special affine transform:
///
/// ```text
/// [ a  b | p ]
/// [ c  d | q ]     with ad − bc = 1
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaftParams {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    p: f64,
    q: f64,
}

/// Named parameter families. `Scaling`, `TimeShift` and `FreqShift` have
/// `b = 0` and only support pointwise evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum Preset {
    Ft,
    OffsetFt { p: f64, q: f64 },
    Frft { theta: f64 },
    OffsetFrft { theta: f64, p: f64, q: f64 },
    Lct { a: f64, b: f64, d: f64 },
    Fresnel { b: f64 },
    Scaling { alpha: f64 },
    TimeShift { tau: f64 },
    FreqShift { xi: f64 },
}

fn finite(vals: &[f64]) -> Result<()> {
    if vals.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(SaftError::InvalidArgument("non-finite parameter".into()))
    }
}

impl SaftParams {
    /// Full constructor; checks unimodularity.
    pub fn new(a: f64, b: f64, c: f64, d: f64, p: f64, q: f64) -> Result<Self> {
        finite(&[a, b, c, d, p, q])?;
        let det = a * d - b * c;
        if (det - 1.0).abs() > UNIMODULAR_TOL {
            return Err(SaftError::UnimodularityViolation { det });
        }
        let b = if b.abs() < B_ZERO_TOL { 0.0 } else { b };
        Ok(SaftParams { a, b, c, d, p, q })
    }

    /// Build from `{a, b, d, p, q}` with `c = (ad − 1)/b`.
    pub fn from_abd(a: f64, b: f64, d: f64, p: f64, q: f64) -> Result<Self> {
        finite(&[a, b, d, p, q])?;
        if b.abs() < B_ZERO_TOL {
            return Err(SaftError::DegenerateB);
        }
        SaftParams::new(a, b, (a * d - 1.0) / b, d, p, q)
    }

    pub fn from_preset(preset: Preset) -> Result<Self> {
        let transform_path = |p: SaftParams| {
            if p.is_b_zero() {
                Err(SaftError::DegenerateB)
            } else {
                Ok(p)
            }
        };
        match preset {
            Preset::Ft => SaftParams::new(0.0, 1.0, -1.0, 0.0, 0.0, 0.0),
            Preset::OffsetFt { p, q } => SaftParams::new(0.0, 1.0, -1.0, 0.0, p, q),
            Preset::Frft { theta } => transform_path(SaftParams::rotation(theta, 0.0, 0.0)?),
            Preset::OffsetFrft { theta, p, q } => {
                transform_path(SaftParams::rotation(theta, p, q)?)
            }
            Preset::Lct { a, b, d } => SaftParams::from_abd(a, b, d, 0.0, 0.0),
            Preset::Fresnel { b } => {
                finite(&[b])?;
                if b.abs() < B_ZERO_TOL {
                    return Err(SaftError::DegenerateB);
                }
                SaftParams::new(1.0, b, 0.0, 1.0, 0.0, 0.0)
            }
            Preset::Scaling { alpha } => {
                finite(&[alpha])?;
                if alpha == 0.0 {
                    return Err(SaftError::InvalidArgument("scaling factor is zero".into()));
                }
                SaftParams::new(1.0 / alpha, 0.0, 0.0, alpha, 0.0, 0.0)
            }
            Preset::TimeShift { tau } => SaftParams::new(1.0, 0.0, 0.0, 1.0, tau, 0.0),
            Preset::FreqShift { xi } => SaftParams::new(1.0, 0.0, 0.0, 1.0, 0.0, xi),
        }
    }

    fn rotation(theta: f64, p: f64, q: f64) -> Result<Self> {
        finite(&[theta])?;
        // Exact entries at the quarter turns keep the FT preset free of rounding.
        let (s, c) = if (theta - FRAC_PI_2).abs() < 1e-15 {
            (1.0, 0.0)
        } else if (theta + FRAC_PI_2).abs() < 1e-15 {
            (-1.0, 0.0)
        } else {
            theta.sin_cos()
        };
        SaftParams::new(c, s, -s, c, p, q)
    }

    pub fn ft() -> Self {
        SaftParams::from_preset(Preset::Ft).expect("valid preset")
    }

    pub fn frft(theta: f64) -> Result<Self> {
        SaftParams::from_preset(Preset::Frft { theta })
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn d(&self) -> f64 {
        self.d
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn block(&self) -> [[f64; 2]; 2] {
        [[self.a, self.b], [self.c, self.d]]
    }

    pub fn offset(&self) -> [f64; 2] {
        [self.p, self.q]
    }

    pub fn is_b_zero(&self) -> bool {
        self.b == 0.0
    }

    pub(crate) fn require_b(&self) -> Result<()> {
        if self.is_b_zero() {
            Err(SaftError::DegenerateB)
        } else {
            Ok(())
        }
    }

    /// `1/√(j2πb)` on the principal branch.
    pub fn chirp_constant(&self) -> Complex64 {
        (J * (2.0 * PI * self.b)).sqrt().inv()
    }

    /// Kernel constant `e^{j d p²/(2b)}/√(j2πb)`.
    ///
    /// The same constant multiplies the spike transform, the chirp
    /// convolution and the interpolation kernels, which keeps the
    /// convolution identities exact when the offset is nonzero.
    pub fn kernel_constant(&self) -> Complex64 {
        self.chirp_constant() * cis(self.d * self.p * self.p / (2.0 * self.b))
    }

    /// Unimodular constant restoring `f` from the inverse-parameter transform:
    /// `exp((j/2)(c d p² + a b q² − 2 a d p q))`.
    pub fn inverse_constant(&self) -> Complex64 {
        let (a, b, c, d, p, q) = (self.a, self.b, self.c, self.d, self.p, self.q);
        cis(0.5 * (c * d * p * p + a * b * q * q - 2.0 * a * d * p * q))
    }

    /// Chirp `e^{j a t²/(2b)}`.
    pub fn chirp(&self, t: f64) -> Complex64 {
        cis(self.a * t * t / (2.0 * self.b))
    }

    /// Phase polynomial `(a t² + 2 p t)/(2b)`.
    pub fn q_poly(&self, t: f64) -> f64 {
        (self.a * t * t + 2.0 * self.p * t) / (2.0 * self.b)
    }

    /// Multiplier `e^{jω(dp − bq)/b} e^{−j d ω²/(2b)}` in the convolution theorem.
    pub fn phi_factor(&self, omega: f64) -> Complex64 {
        let mu = self.d * self.p - self.b * self.q;
        cis(omega * mu / self.b - self.d * omega * omega / (2.0 * self.b))
    }

    /// Quadratic form of the kernel phase: `U = (1/2b)[[a, −1], [−1, d]]`.
    pub fn quadratic_form(&self) -> [[f64; 2]; 2] {
        let s = 1.0 / (2.0 * self.b);
        [[self.a * s, -s], [-s, self.d * s]]
    }

    /// Linear part of the kernel phase: `(1/b)(p, bq − dp)`.
    pub fn linear_form(&self) -> [f64; 2] {
        [
            self.p / self.b,
            (self.b * self.q - self.d * self.p) / self.b,
        ]
    }

    /// `[d, −b | bq − dp; −c, a | cp − aq]`.
    pub fn inverse(&self) -> SaftParams {
        let (a, b, c, d, p, q) = (self.a, self.b, self.c, self.d, self.p, self.q);
        SaftParams {
            a: d,
            b: -b,
            c: -c,
            d: a,
            p: b * q - d * p,
            q: c * p - a * q,
        }
    }

    /// Parameters of `outer ∘ inner`: block `L_outer·L_inner`, offset
    /// `L_outer·λ_inner + λ_outer`.
    pub fn compose(outer: &SaftParams, inner: &SaftParams) -> SaftParams {
        let l = mat_mul(outer.block(), inner.block());
        let o = mat_vec(outer.block(), inner.offset());
        SaftParams {
            a: l[0][0],
            b: if l[0][1].abs() < B_ZERO_TOL { 0.0 } else { l[0][1] },
            c: l[1][0],
            d: l[1][1],
            p: o[0] + outer.p,
            q: o[1] + outer.q,
        }
    }

    /// Block and offset agree entrywise within `tol`.
    pub fn approx_eq(&self, other: &SaftParams, tol: f64) -> bool {
        let x = [self.a, self.b, self.c, self.d, self.p, self.q];
        let y = [other.a, other.b, other.c, other.d, other.p, other.q];
        x.iter().zip(y.iter()).all(|(u, v)| (u - v).abs() <= tol)
    }
}

pub(crate) fn mat_mul(x: [[f64; 2]; 2], y: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [
            x[0][0] * y[0][0] + x[0][1] * y[1][0],
            x[0][0] * y[0][1] + x[0][1] * y[1][1],
        ],
        [
            x[1][0] * y[0][0] + x[1][1] * y[1][0],
            x[1][0] * y[0][1] + x[1][1] * y[1][1],
        ],
    ]
}

fn mat_vec(x: [[f64; 2]; 2], v: [f64; 2]) -> [f64; 2] {
    [
        x[0][0] * v[0] + x[0][1] * v[1],
        x[1][0] * v[0] + x[1][1] * v[1],
    ]
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FullRepr {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    #[serde(default)]
    p: f64,
    #[serde(default)]
    q: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AbdRepr {
    a: f64,
    b: f64,
    d: f64,
    #[serde(default)]
    p: f64,
    #[serde(default)]
    q: f64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ParamsRepr {
    Preset(Preset),
    Full(FullRepr),
    Abd(AbdRepr),
}

impl Serialize for SaftParams {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FullRepr {
            a: self.a,
            b: self.b,
            c: self.c,
            d: self.d,
            p: self.p,
            q: self.q,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SaftParams {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let repr = ParamsRepr::deserialize(de)?;
        let out = match repr {
            ParamsRepr::Preset(p) => SaftParams::from_preset(p),
            ParamsRepr::Full(f) => SaftParams::new(f.a, f.b, f.c, f.d, f.p, f.q),
            ParamsRepr::Abd(f) => SaftParams::from_abd(f.a, f.b, f.d, f.p, f.q),
        };
        out.map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn test_params() -> SaftParams {
        SaftParams::from_abd(1.0, 2.0, 3.0, 0.5, -0.3).unwrap()
    }

    #[test]
    fn completes_c_from_abd() {
        let p = test_params();
        assert_eq!(p.c(), 1.0);
        assert_eq!(p.a() * p.d() - p.b() * p.c(), 1.0);
    }

    #[test]
    fn presets() {
        let ft = SaftParams::ft();
        assert_eq!(ft.block(), [[0.0, 1.0], [-1.0, 0.0]]);
        assert_eq!(ft.offset(), [0.0, 0.0]);
        let r = SaftParams::frft(PI / 3.0).unwrap();
        assert!((r.a() - 0.5).abs() < 1e-15);
        assert!((r.b() - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert!(matches!(
            SaftParams::frft(0.0),
            Err(SaftError::DegenerateB)
        ));
        let s = SaftParams::from_preset(Preset::TimeShift { tau: 0.4 }).unwrap();
        assert!(s.is_b_zero());
        assert_eq!(s.p(), 0.4);
    }

    #[test]
    fn rejects_non_unimodular() {
        let err = SaftParams::new(1.0, 1.0, 1.0, 1.0, 0.0, 0.0).unwrap_err();
        assert_eq!(err, SaftError::UnimodularityViolation { det: 0.0 });
        assert_eq!(
            SaftParams::from_abd(1.0, 0.0, 1.0, 0.0, 0.0),
            Err(SaftError::DegenerateB)
        );
    }

    #[test]
    fn inverse_example() {
        let inv = test_params().inverse();
        let want = SaftParams::new(3.0, -2.0, -1.0, 1.0, -2.1, 0.8).unwrap();
        assert!(inv.approx_eq(&want, 1e-15));
    }

    #[test]
    fn inverse_of_ft() {
        let inv = SaftParams::ft().inverse();
        assert_eq!(inv.block(), [[0.0, -1.0], [1.0, 0.0]]);
    }

    #[test]
    fn kernel_forms() {
        let p = test_params();
        assert_eq!(p.quadratic_form(), [[0.25, -0.25], [-0.25, 0.75]]);
        let v = p.linear_form();
        assert!((v[0] - 0.25).abs() < 1e-15);
        assert!((v[1] - (-1.05)).abs() < 1e-15);
    }

    #[test]
    fn json_forms() {
        let p: SaftParams = serde_json::from_str(r#"{"a":1,"b":2,"d":3,"p":0.5,"q":-0.3}"#).unwrap();
        assert_eq!(p, test_params());
        let f: SaftParams = serde_json::from_str(r#"{"preset":"frft","theta":0.7}"#).unwrap();
        assert_eq!(f, SaftParams::frft(0.7).unwrap());
        let bad: std::result::Result<SaftParams, _> =
            serde_json::from_str(r#"{"a":1,"b":1,"c":1,"d":1}"#);
        assert!(bad.is_err());
    }

    fn arb_params() -> impl Strategy<Value = SaftParams> {
        (
            -3.0..3.0f64,
            prop_oneof![-3.0..-0.2f64, 0.2..3.0f64],
            -3.0..3.0f64,
            -2.0..2.0f64,
            -2.0..2.0f64,
        )
            .prop_map(|(a, b, d, p, q)| SaftParams::from_abd(a, b, d, p, q).unwrap())
    }

    proptest! {
        #[test]
        fn unimodularity_survives_algebra(x in arb_params(), y in arb_params()) {
            for p in [x.inverse(), SaftParams::compose(&x, &y)] {
                let det = p.a() * p.d() - p.b() * p.c();
                prop_assert!((det - 1.0).abs() < 1e-10);
            }
        }

        #[test]
        fn inverse_composes_to_identity(x in arb_params()) {
            for l in [SaftParams::compose(&x.inverse(), &x), SaftParams::compose(&x, &x.inverse())] {
                let id = SaftParams::new(1.0, 0.0, 0.0, 1.0, 0.0, 0.0).unwrap();
                prop_assert!(l.approx_eq(&id, 1e-10), "{l:?}");
            }
        }

        #[test]
        fn json_round_trip_is_bit_stable(x in arb_params()) {
            let s = serde_json::to_string(&x).unwrap();
            let back: SaftParams = serde_json::from_str(&s).unwrap();
            prop_assert_eq!(back, x);
        }

        #[test]
        fn chirp_has_unit_modulus(x in arb_params(), t in -10.0..10.0f64) {
            prop_assert!((x.chirp(t).norm() - 1.0).abs() < 1e-14);
        }
    }
}
