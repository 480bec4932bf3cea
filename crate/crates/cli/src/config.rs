//! Experiment configuration: JSON structure, then semantic validation with
//! JSON-pointer locations.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use saftkit::acquisition::{band_cutoff, kernel_gains, CubicBSplineShape, KernelSpec};
use saftkit::recovery::{check_conditions, effective_cutoff};
use saftkit::{FourierCoeffs, Preset, SafsCoeffs, SaftError, SaftParams, SparseSignal, Spike};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Base seed; trial `i` uses `seed + i`.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub trials: usize,
    /// Preset object (`{"preset": "ft"}`), full `{a, b, c, d, p, q}` or
    /// `{a, b, d, p, q}` with `c` completed.
    pub transform: Value,
    pub signal: SignalSpec,
    pub kernel: KernelConfig,
    pub sampling: Sampling,
    pub recovery: RecoveryConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalSpec {
    Explicit {
        #[serde(rename = "T")]
        period: f64,
        spikes: Vec<SpikeConfig>,
    },
    Random {
        k: usize,
        #[serde(rename = "T")]
        period: f64,
        /// Floor on the circular distance between spikes.
        min_separation: f64,
        /// Range of `|c|`; phases are uniform.
        amplitude: [f64; 2],
    },
}

impl SignalSpec {
    pub fn period(&self) -> f64 {
        match self {
            SignalSpec::Explicit { period, .. } | SignalSpec::Random { period, .. } => *period,
        }
    }

    pub fn spike_count(&self) -> usize {
        match self {
            SignalSpec::Explicit { spikes, .. } => spikes.len(),
            SignalSpec::Random { k, .. } => *k,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpikeConfig {
    pub t: f64,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffConfig {
    pub m: i64,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelConfig {
    Sinc,
    CubicBspline,
    /// Explicit harmonic coefficients `m = −M..=M`.
    Coefficients { coeffs: Vec<CoeffConfig> },
    /// `ψ̂[m] = exp(−m²/(2w²))`, `|m| ≤ cutoff`.
    Gaussian { cutoff: usize, width: f64 },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampling {
    pub delta: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Bl,
    Tl,
    Gabor1,
    Gabor2,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoveryConfig {
    pub k: usize,
    pub mode: Mode,
    /// Location tolerance relative to `T`.
    #[serde(default = "default_tol")]
    pub tolerance: f64,
    /// Relative amplitude tolerance.
    #[serde(default = "default_amp_tol")]
    pub amplitude_tolerance: f64,
    /// Frequency rows `ℓ` (multiples of `ω₀`) for `gabor2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<i64>>,
}

fn default_tol() -> f64 {
    1e-7
}

fn default_amp_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default)]
    pub enabled: bool,
    /// Standard deviation of the complex noise magnitude.
    #[serde(default)]
    pub sigma: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

/// One validation finding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub pointer: String,
    pub message: String,
}

impl Issue {
    fn new(pointer: &str, message: impl Into<String>) -> Self {
        Issue {
            pointer: pointer.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = if self.pointer.is_empty() { "/" } else { &self.pointer };
        write!(f, "{p}: {}", self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration")]
    Invalid(Vec<Issue>),
}

/// A config that passed validation, with the derived library objects.
#[derive(Debug, Clone)]
pub struct Validated {
    pub config: ExperimentConfig,
    /// Normalized echo of the input (sorted keys, effective seed).
    pub echo: Value,
    pub params: SaftParams,
    pub kernel: PreparedKernel,
    pub warnings: Vec<Issue>,
}

#[derive(Debug, Clone)]
pub enum PreparedKernel {
    Bandlimited(KernelSpec),
    TimeLimited(KernelSpec),
    Window(FourierCoeffs),
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    let mut out = String::new();
    for seg in path.iter() {
        use serde_path_to_error::Segment;
        let part = match seg {
            Segment::Seq { index } => index.to_string(),
            Segment::Map { key } => key.clone(),
            Segment::Enum { variant } => variant.clone(),
            Segment::Unknown => continue,
        };
        out.push('/');
        out.push_str(&part.replace('~', "~0").replace('/', "~1"));
    }
    out
}

/// Parse and validate JSON text. `seed_override` replaces the base seed.
pub fn parse_config(text: &str, seed_override: Option<u64>) -> Result<Validated, ConfigError> {
    let mut value: Value = serde_json::from_str(text).map_err(|e| {
        ConfigError::Invalid(vec![Issue::new("", format!("malformed JSON: {e}"))])
    })?;
    if let (Some(seed), Some(obj)) = (seed_override, value.as_object_mut()) {
        obj.insert("seed".into(), Value::from(seed));
    }
    let config: ExperimentConfig = serde_path_to_error::deserialize(value.clone()).map_err(|e| {
        ConfigError::Invalid(vec![Issue::new(&pointer_of(e.path()), e.inner().to_string())])
    })?;
    validate(config, value)
}

pub fn load_config(path: &std::path::Path, seed_override: Option<u64>) -> Result<Validated, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text, seed_override)
}

fn number(obj: &serde_json::Map<String, Value>, key: &str, issues: &mut Vec<Issue>) -> Option<f64> {
    match obj.get(key) {
        Some(v) => match v.as_f64() {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                issues.push(Issue::new(&format!("/transform/{key}"), "must be a finite number"));
                None
            }
        },
        None => None,
    }
}

fn parse_transform(v: &Value, issues: &mut Vec<Issue>) -> Option<SaftParams> {
    let Some(obj) = v.as_object() else {
        issues.push(Issue::new("/transform", "must be an object"));
        return None;
    };
    if obj.contains_key("preset") {
        let preset: Preset = match serde_path_to_error::deserialize(v.clone()) {
            Ok(p) => p,
            Err(e) => {
                issues.push(Issue::new(
                    &format!("/transform{}", pointer_of(e.path())),
                    e.inner().to_string(),
                ));
                return None;
            }
        };
        return match SaftParams::from_preset(preset) {
            Ok(p) if p.is_b_zero() => {
                issues.push(Issue::new(
                    "/transform/preset",
                    "preset has b = 0, which no recovery mode supports (DegenerateB)",
                ));
                None
            }
            Ok(p) => Some(p),
            Err(SaftError::DegenerateB) => {
                issues.push(Issue::new("/transform/preset", "preset has b = 0 (DegenerateB)"));
                None
            }
            Err(e) => {
                issues.push(Issue::new("/transform", e.to_string()));
                None
            }
        };
    }
    for key in obj.keys() {
        if !["a", "b", "c", "d", "p", "q"].contains(&key.as_str()) {
            issues.push(Issue::new(&format!("/transform/{key}"), "unknown field"));
        }
    }
    let before = issues.len();
    let mut get = |k: &str, required: bool| {
        let x = number(obj, k, issues);
        if x.is_none() && required && !obj.contains_key(k) {
            issues.push(Issue::new(&format!("/transform/{k}"), "missing field"));
        }
        x
    };
    let a = get("a", true);
    let b = get("b", true);
    let c = get("c", false);
    let d = get("d", true);
    let p = get("p", false).unwrap_or(0.0);
    let q = get("q", false).unwrap_or(0.0);
    if issues.len() > before {
        return None;
    }
    let (a, b, d) = (a?, b?, d?);
    let built = match c {
        Some(c) => SaftParams::new(a, b, c, d, p, q),
        None if b == 0.0 => Err(SaftError::DegenerateB),
        None => SaftParams::from_abd(a, b, d, p, q),
    };
    match built {
        Ok(params) if params.is_b_zero() => {
            issues.push(Issue::new("/transform/b", "b must be nonzero (DegenerateB)"));
            None
        }
        Ok(params) => Some(params),
        Err(SaftError::DegenerateB) => {
            issues.push(Issue::new("/transform/b", "b must be nonzero (DegenerateB)"));
            None
        }
        Err(e) => {
            issues.push(Issue::new("/transform", e.to_string()));
            None
        }
    }
}

fn prepare_coeffs(kernel: &KernelConfig, issues: &mut Vec<Issue>) -> Option<FourierCoeffs> {
    match kernel {
        KernelConfig::Gaussian { cutoff, width } => {
            if !(*width > 0.0 && width.is_finite()) {
                issues.push(Issue::new("/kernel/width", "must be positive"));
                return None;
            }
            Some(FourierCoeffs::from_fn(*cutoff, |m| {
                Complex64::new((-(m * m) as f64 / (2.0 * width * width)).exp(), 0.0)
            }))
        }
        KernelConfig::Coefficients { coeffs } => {
            if coeffs.is_empty() || coeffs.len() % 2 == 0 {
                issues.push(Issue::new("/kernel/coeffs", "need an odd number of entries m = -M..=M"));
                return None;
            }
            let fc = (coeffs.len() / 2) as i64;
            let mut values = vec![None; coeffs.len()];
            for (i, c) in coeffs.iter().enumerate() {
                let ptr = format!("/kernel/coeffs/{i}/m");
                if c.m.abs() > fc {
                    issues.push(Issue::new(&ptr, format!("index outside -{fc}..={fc}")));
                    continue;
                }
                let slot = &mut values[(c.m + fc) as usize];
                if slot.is_some() {
                    issues.push(Issue::new(&ptr, "duplicate index"));
                }
                *slot = Some(Complex64::new(c.re, c.im));
            }
            let values: Option<Vec<Complex64>> = values.into_iter().collect();
            match values {
                Some(v) => FourierCoeffs::new(fc as usize, v).ok(),
                None => {
                    issues.push(Issue::new("/kernel/coeffs", "indices must cover -M..=M"));
                    None
                }
            }
        }
        _ => None,
    }
}

fn validate(config: ExperimentConfig, echo: Value) -> Result<Validated, ConfigError> {
    let mut issues = Vec::new();
    let mut warnings = Vec::new();
    if config.trials == 0 {
        issues.push(Issue::new("/trials", "need at least one trial"));
    }
    let params = parse_transform(&config.transform, &mut issues);

    let period = config.signal.period();
    let period_ok = period > 0.0 && period.is_finite();
    if !period_ok {
        issues.push(Issue::new("/signal/T", "must be positive"));
    }
    let k = config.recovery.k;
    if k == 0 {
        issues.push(Issue::new("/recovery/k", "need at least one spike"));
    }
    match &config.signal {
        SignalSpec::Explicit { spikes, .. } => {
            for (i, s) in spikes.iter().enumerate() {
                if period_ok && !(s.t >= 0.0 && s.t < period) {
                    issues.push(Issue::new(&format!("/signal/spikes/{i}/t"), format!("outside [0, {period})")));
                }
                if Complex64::new(s.re, s.im).norm() == 0.0 {
                    issues.push(Issue::new(&format!("/signal/spikes/{i}"), "amplitude must be nonzero"));
                }
            }
            if period_ok && issues.is_empty() {
                if let Err(e) = explicit_signal(period, spikes) {
                    issues.push(Issue::new("/signal/spikes", e.to_string()));
                }
            }
        }
        SignalSpec::Random {
            min_separation,
            amplitude,
            ..
        } => {
            if !(*min_separation >= 0.0) {
                issues.push(Issue::new("/signal/min_separation", "must be non-negative"));
            } else if period_ok && config.signal.spike_count() as f64 * min_separation >= period {
                issues.push(Issue::new(
                    "/signal/min_separation",
                    "K spikes cannot be separated this much on one period",
                ));
            }
            if !(amplitude[0] > 0.0 && amplitude[0] <= amplitude[1] && amplitude[1].is_finite()) {
                issues.push(Issue::new("/signal/amplitude", "need 0 < low <= high"));
            }
        }
    }
    if config.signal.spike_count() != k {
        issues.push(Issue::new(
            "/recovery/k",
            format!("signal has {} spikes but recovery expects {k}", config.signal.spike_count()),
        ));
    }
    let delta = config.sampling.delta;
    let delta_ok = delta > 0.0 && delta.is_finite();
    if !delta_ok {
        issues.push(Issue::new("/sampling/delta", "must be positive"));
    }
    if config.sampling.count == 0 {
        issues.push(Issue::new("/sampling/count", "need at least one sample"));
    }
    if !(config.recovery.tolerance > 0.0) {
        issues.push(Issue::new("/recovery/tolerance", "must be positive"));
    }
    if !(config.recovery.amplitude_tolerance > 0.0) {
        issues.push(Issue::new("/recovery/amplitude_tolerance", "must be positive"));
    }
    if !(config.noise.sigma >= 0.0 && config.noise.sigma.is_finite()) {
        issues.push(Issue::new("/noise/sigma", "must be non-negative"));
    }
    let mode = config.recovery.mode;
    match (&config.recovery.rows, mode) {
        (None, Mode::Gabor2) => issues.push(Issue::new("/recovery/rows", "gabor2 needs frequency rows")),
        (Some(r), Mode::Gabor2) if r.is_empty() => {
            issues.push(Issue::new("/recovery/rows", "gabor2 needs frequency rows"))
        }
        (Some(_), Mode::Bl | Mode::Tl | Mode::Gabor1) => {
            warnings.push(Issue::new("/recovery/rows", "ignored outside gabor2"))
        }
        _ => {}
    }

    let kernel = match (mode, &config.kernel) {
        (Mode::Bl, KernelConfig::Sinc) => Some(PreparedKernel::Bandlimited(KernelSpec::SincBl)),
        (Mode::Bl, KernelConfig::CubicBspline) => Some(PreparedKernel::Bandlimited(
            KernelSpec::ArbitraryBl(Arc::new(CubicBSplineShape)),
        )),
        (Mode::Bl, _) => {
            issues.push(Issue::new("/kernel/type", "mode bl needs a bandlimited kernel (sinc, cubic_bspline)"));
            None
        }
        (_, KernelConfig::Sinc | KernelConfig::CubicBspline) => {
            issues.push(Issue::new(
                "/kernel/type",
                "this mode needs harmonic coefficients (coefficients, gaussian)",
            ));
            None
        }
        (Mode::Tl, kc) => prepare_coeffs(kc, &mut issues).and_then(|c| {
            if period_ok {
                SafsCoeffs::new(period, c)
                    .ok()
                    .map(|s| PreparedKernel::TimeLimited(KernelSpec::TimeLimited(s)))
            } else {
                None
            }
        }),
        (_, kc) => prepare_coeffs(kc, &mut issues).map(PreparedKernel::Window),
    };

    // Sampling conditions. C2 is a configuration error: no trial could
    // succeed. C1 is left to the pipeline, which reports it per trial.
    if let (Some(p), Some(kern), true, true) = (&params, &kernel, period_ok, delta_ok) {
        let gains = match kern {
            PreparedKernel::Bandlimited(s) | PreparedKernel::TimeLimited(s) => {
                kernel_gains(s, p, period, delta).ok()
            }
            PreparedKernel::Window(w) => Some(FourierCoeffs::from_fn(w.fc, |m| w.get(-m))),
        };
        if let Some(g) = gains {
            let cut = effective_cutoff(&g, period, delta);
            if k > cut.used {
                let why = if cut.aliased {
                    format!("T/Δ = {} merges harmonics ±{}", period / delta, cut.data)
                } else if cut.data < g.fc {
                    format!("kernel gains vanish beyond {}", cut.data)
                } else {
                    format!("fc = {}", cut.data)
                };
                issues.push(Issue::new(
                    "/recovery/k",
                    format!("condition C2 fails: usable cutoff {} < K = {k} ({why})", cut.used),
                ));
            }
            let need = 2 * g.fc + 1;
            if config.sampling.count < need {
                warnings.push(Issue::new(
                    "/sampling/count",
                    format!(
                        "condition C1 fails: N = {} < 2fc+1 = {need}; every trial will report UnderdeterminedSystem",
                        config.sampling.count
                    ),
                ));
            }
            if mode == Mode::Bl && !check_conditions(period, delta, k, config.sampling.count).combined {
                warnings.push(Issue::new(
                    "/sampling/count",
                    format!("combined condition fails: N < T/Δ + 1 = {}", period / delta + 1.0),
                ));
            }
            if mode == Mode::Bl && band_cutoff(period, delta) != g.fc {
                warnings.push(Issue::new("/sampling/delta", "cutoff rounding differs from ⌊T/2Δ⌋"));
            }
        }
    }

    if !issues.is_empty() {
        return Err(ConfigError::Invalid(issues));
    }
    Ok(Validated {
        config,
        echo,
        params: params.expect("validated"),
        kernel: kernel.expect("validated"),
        warnings,
    })
}

pub fn explicit_signal(period: f64, spikes: &[SpikeConfig]) -> saftkit::Result<SparseSignal> {
    SparseSignal::new(
        period,
        spikes
            .iter()
            .map(|s| Spike {
                t: s.t,
                c: Complex64::new(s.re, s.im),
            })
            .collect(),
    )
}
