//! Special affine Fourier transform toolkit: transforms, chirp convolution,
//! series expansions, measurement models and sparse spike recovery.

pub mod acquisition;
pub mod convolution;
pub mod error;
pub mod math;
pub mod recovery;
pub mod saft;
pub mod series;
pub mod signal;

pub use error::{Result, SaftError, Stage};
pub use saft::{Preset, SaftParams};
pub use signal::{FourierCoeffs, GridSignal, SafsCoeffs, SampleSet, SparseSignal, Spectrum, Spike};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/overview.md")]
    mod overview {}
    #[doc = include_str!("../../../book/src/transform.md")]
    mod transform {}
    #[doc = include_str!("../../../book/src/convolution.md")]
    mod convolution {}
    #[doc = include_str!("../../../book/src/series.md")]
    mod series {}
    #[doc = include_str!("../../../book/src/sampling.md")]
    mod sampling {}
    #[doc = include_str!("../../../book/src/recovery.md")]
    mod recovery {}
    #[doc = include_str!("../../../book/src/windowed.md")]
    mod windowed {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
