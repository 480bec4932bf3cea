use std::fmt;

use serde::{Deserialize, Serialize};

/// Pipeline stage that raised an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Params,
    Transform,
    Convolution,
    Series,
    Acquisition,
    Demodulate,
    Vandermonde,
    Deconvolve,
    Annihilate,
    Roots,
    Amplitudes,
    Gabor,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok();
        let name = s.as_ref().and_then(|v| v.as_str()).unwrap_or("unknown");
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SaftError {
    #[error("matrix is not unimodular: ad - bc = {det}")]
    UnimodularityViolation { det: f64 },
    #[error("parameter b is zero; integral transform is undefined")]
    DegenerateB,
    #[error("grid is empty")]
    EmptyGrid,
    #[error("evaluation point {x} lies outside the sampled grid")]
    OutOfGrid { x: f64 },
    #[error("degenerate pair: {0}")]
    DegeneratePair(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("sampling step {delta} exceeds the Nyquist limit {limit}")]
    RateViolation { delta: f64, limit: f64 },
    #[error("kernel spectrum vanishes at harmonic {m}")]
    VanishingSpectrum { m: i64 },
    #[error("window pairing violation: b<psi1, psi2> = {pairing} (must be 1)")]
    WindowPairingViolation { pairing: f64 },
    #[error("underdetermined system: {available} samples, need at least {required} (condition C1)")]
    UnderdeterminedSystem { available: usize, required: usize },
    #[error("rank deficient system: numerical rank {rank}, need {required}")]
    RankDeficient { rank: usize, required: usize },
    #[error("kernel gain is zero at harmonic {m}")]
    SingularGain { m: i64 },
    #[error("sparsity violation: cutoff {fc} is below the number of spikes {k} (condition C2)")]
    SparsityViolation { fc: usize, k: usize },
    #[error("ill-conditioned annihilation: singular value gap {gap:e}")]
    IllConditioned { gap: f64 },
    #[error("root off the unit circle: | |u| - 1 | = {deviation:e}")]
    RootOffCircle { deviation: f64 },
    #[error("minimum separation needs at least two spikes")]
    SingleSpike,
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<SaftError>,
    },
}

impl SaftError {
    /// Wrap this error with the stage it came from. Already tagged errors are kept.
    pub fn at(self, stage: Stage) -> SaftError {
        match self {
            SaftError::Stage { .. } => self,
            other => SaftError::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }

    /// The underlying error with any stage tag removed.
    pub fn root(&self) -> &SaftError {
        match self {
            SaftError::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn stage(&self) -> Option<Stage> {
        match self {
            SaftError::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }

    /// Short machine-readable name of the error kind.
    pub fn kind(&self) -> &'static str {
        match self.root() {
            SaftError::UnimodularityViolation { .. } => "UnimodularityViolation",
            SaftError::DegenerateB => "DegenerateB",
            SaftError::EmptyGrid => "EmptyGrid",
            SaftError::OutOfGrid { .. } => "OutOfGrid",
            SaftError::DegeneratePair(_) => "DegeneratePair",
            SaftError::GridMismatch(_) => "GridMismatch",
            SaftError::RateViolation { .. } => "RateViolation",
            SaftError::VanishingSpectrum { .. } => "VanishingSpectrum",
            SaftError::WindowPairingViolation { .. } => "WindowPairingViolation",
            SaftError::UnderdeterminedSystem { .. } => "UnderdeterminedSystem",
            SaftError::RankDeficient { .. } => "RankDeficient",
            SaftError::SingularGain { .. } => "SingularGain",
            SaftError::SparsityViolation { .. } => "SparsityViolation",
            SaftError::IllConditioned { .. } => "IllConditioned",
            SaftError::RootOffCircle { .. } => "RootOffCircle",
            SaftError::SingleSpike => "SingleSpike",
            SaftError::InvalidSignal(_) => "InvalidSignal",
            SaftError::InvalidArgument(_) => "InvalidArgument",
            SaftError::Stage { .. } => unreachable!(),
        }
    }
}

pub type Result<T> = std::result::Result<T, SaftError>;
