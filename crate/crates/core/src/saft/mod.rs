//! Special affine Fourier transform: parameters, kernel, forward and
//! inverse evaluation, and matrix factorizations.
//!
//! The kernel is
//!
//! ```text
//! κ(t, ω) = K* · exp(−(j/2b)(a t² + d ω² + 2t(p − ω) − 2ω(dp − bq)))
//! K = e^{j d p²/(2b)} / √(j2πb)
//! ```
//!
//! and the forward transform is `F(ω) = ∫ f(t) κ*(t, ω) dt`.

mod decompose;
mod params;
mod transform;

pub use decompose::{decompose_ft, decompose_iwasawa, FtFactors, Iwasawa, Mat2};
pub use params::{Preset, SaftParams, UNIMODULAR_TOL};
pub use transform::{
    dirac_saft, isaft_quadrature, kernel_eval, saft_b0_eval, saft_fast, saft_quadrature,
};
pub(crate) use transform::kernel_unchecked;
