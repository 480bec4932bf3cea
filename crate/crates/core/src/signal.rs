//! Signal containers: uniform grids, spectra, sample sets, harmonic
//! coefficients and spike trains.

use std::io::{self, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SaftError};
use crate::math::circular_distance;

/// Complex samples on a uniform grid `t_n = t0 + n·dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSignal {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<Complex64>,
}

impl GridSignal {
    pub fn new(t0: f64, dt: f64, values: Vec<Complex64>) -> Result<Self> {
        if values.is_empty() {
            return Err(SaftError::EmptyGrid);
        }
        if !(dt > 0.0) || !dt.is_finite() || !t0.is_finite() {
            return Err(SaftError::InvalidSignal(format!(
                "grid needs finite t0 and dt > 0 (t0 = {t0}, dt = {dt})"
            )));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(SaftError::InvalidSignal("non-finite sample".into()));
        }
        Ok(GridSignal { t0, dt, values })
    }

    /// Sample `f` at `n` points starting from `t0`.
    pub fn from_fn(t0: f64, dt: f64, n: usize, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = (0..n).map(|i| f(t0 + i as f64 * dt)).collect();
        GridSignal::new(t0, dt, values)
    }

    /// Zero signal with a single node of height `1/dt` at `t0 + index·dt`:
    /// a discrete stand-in for a Dirac impulse.
    pub fn delta_proxy(t0: f64, dt: f64, n: usize, index: usize, amp: Complex64) -> Result<Self> {
        if index >= n {
            return Err(SaftError::InvalidArgument("proxy index outside grid".into()));
        }
        let mut values = vec![Complex64::new(0.0, 0.0); n];
        values[index] = amp / dt;
        GridSignal::new(t0, dt, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|n| self.time(n)).collect()
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.len() - 1)
    }

    /// Linear interpolation; `OutOfGrid` outside `[t0, t_end]`.
    pub fn interpolate(&self, t: f64) -> Result<Complex64> {
        let x = (t - self.t0) / self.dt;
        let last = (self.len() - 1) as f64;
        let eps = 1e-9;
        if !(x >= -eps && x <= last + eps) {
            return Err(SaftError::OutOfGrid { x: t });
        }
        let x = x.clamp(0.0, last);
        let i = (x.floor() as usize).min(self.len().saturating_sub(2));
        if self.len() == 1 {
            return Ok(self.values[0]);
        }
        let frac = x - i as f64;
        Ok(self.values[i] * (1.0 - frac) + self.values[i + 1] * frac)
    }

    /// CSV with columns `t, re, im`.
    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "t,re,im")?;
        for (t, v) in self.iter() {
            writeln!(w, "{t:?},{:?},{:?}", v.re, v.im)?;
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, Complex64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(n, &v)| (self.time(n), v))
    }
}

/// Transform values on a strictly increasing ω grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub omegas: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(omegas: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if omegas.is_empty() {
            return Err(SaftError::EmptyGrid);
        }
        if omegas.len() != values.len() {
            return Err(SaftError::GridMismatch(format!(
                "{} frequencies but {} values",
                omegas.len(),
                values.len()
            )));
        }
        if omegas.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(SaftError::InvalidSignal(
                "frequency grid must be strictly increasing".into(),
            ));
        }
        Ok(Spectrum { omegas, values })
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    /// Reinterpret a uniformly spaced spectrum as a grid signal in ω.
    pub fn to_grid(&self) -> Result<GridSignal> {
        let n = self.len();
        if n < 2 {
            return GridSignal::new(self.omegas[0], 1.0, self.values.clone());
        }
        let dw = (self.omegas[n - 1] - self.omegas[0]) / (n - 1) as f64;
        let uniform = self
            .omegas
            .iter()
            .enumerate()
            .all(|(i, &w)| (w - (self.omegas[0] + i as f64 * dw)).abs() <= 1e-9 * dw.max(1.0));
        if !uniform {
            return Err(SaftError::GridMismatch("spectrum grid is not uniform".into()));
        }
        GridSignal::new(self.omegas[0], dw, self.values.clone())
    }
}

/// Uniform samples `y(nΔ)`, `n = 0..N−1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub delta: f64,
    pub values: Vec<Complex64>,
}

impl SampleSet {
    pub fn new(delta: f64, values: Vec<Complex64>) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(SaftError::InvalidArgument(format!(
                "sampling step must be positive, got {delta}"
            )));
        }
        Ok(SampleSet { delta, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.delta
    }

    /// CSV with columns `n, t, re, im`.
    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "n,t,re,im")?;
        for (n, v) in self.values.iter().enumerate() {
            writeln!(w, "{n},{:?},{:?},{:?}", self.time(n), v.re, v.im)?;
        }
        Ok(())
    }
}

/// Harmonic coefficients indexed `m = −fc..=fc`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierCoeffs {
    pub fc: usize,
    pub values: Vec<Complex64>,
}

impl FourierCoeffs {
    pub fn new(fc: usize, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != 2 * fc + 1 {
            return Err(SaftError::InvalidArgument(format!(
                "expected {} coefficients for cutoff {fc}, got {}",
                2 * fc + 1,
                values.len()
            )));
        }
        Ok(FourierCoeffs { fc, values })
    }

    pub fn from_fn(fc: usize, f: impl Fn(i64) -> Complex64) -> Self {
        let fci = fc as i64;
        FourierCoeffs {
            fc,
            values: (-fci..=fci).map(f).collect(),
        }
    }

    pub fn get(&self, m: i64) -> Complex64 {
        self.values[(m + self.fc as i64) as usize]
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> {
        let fc = self.fc as i64;
        -fc..=fc
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.indices().zip(self.values.iter().copied())
    }

    /// CSV with columns `m, re, im`.
    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "m,re,im")?;
        for (m, v) in self.iter() {
            writeln!(w, "{m},{:?},{:?}", v.re, v.im)?;
        }
        Ok(())
    }

    /// Keep only `|m| ≤ fc`.
    pub fn truncate(&self, fc: usize) -> FourierCoeffs {
        let fc = fc.min(self.fc);
        FourierCoeffs::from_fn(fc, |m| self.get(m))
    }
}

/// Series coefficients of a signal on one period `[0, T)`, indexed `n = −M..=M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafsCoeffs {
    pub period: f64,
    pub coeffs: FourierCoeffs,
}

impl SafsCoeffs {
    pub fn new(period: f64, coeffs: FourierCoeffs) -> Result<Self> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(SaftError::InvalidArgument(format!(
                "period must be positive, got {period}"
            )));
        }
        Ok(SafsCoeffs { period, coeffs })
    }

    pub fn cutoff(&self) -> usize {
        self.coeffs.fc
    }

    pub fn get(&self, n: i64) -> Complex64 {
        self.coeffs.get(n)
    }
}

/// Serialized as `{"t": …, "re": …, "im": …}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "SpikeRepr", into = "SpikeRepr")]
pub struct Spike {
    pub t: f64,
    pub c: Complex64,
}

#[derive(Serialize, Deserialize)]
struct SpikeRepr {
    t: f64,
    re: f64,
    im: f64,
}

impl From<SpikeRepr> for Spike {
    fn from(r: SpikeRepr) -> Self {
        Spike {
            t: r.t,
            c: Complex64::new(r.re, r.im),
        }
    }
}

impl From<Spike> for SpikeRepr {
    fn from(s: Spike) -> Self {
        SpikeRepr {
            t: s.t,
            re: s.c.re,
            im: s.c.im,
        }
    }
}

/// K spikes on one period `[0, T)`. Serialized as `{"T": …, "spikes": […]}`;
/// deserialization applies the same validation as [`SparseSignal::new`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SparseSignalRepr")]
pub struct SparseSignal {
    #[serde(rename = "T")]
    pub period: f64,
    pub spikes: Vec<Spike>,
}

#[derive(Deserialize)]
struct SparseSignalRepr {
    #[serde(rename = "T")]
    period: f64,
    spikes: Vec<Spike>,
}

impl TryFrom<SparseSignalRepr> for SparseSignal {
    type Error = SaftError;
    fn try_from(r: SparseSignalRepr) -> Result<Self> {
        SparseSignal::new(r.period, r.spikes)
    }
}

impl SparseSignal {
    pub fn new(period: f64, mut spikes: Vec<Spike>) -> Result<Self> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(SaftError::InvalidSignal(format!(
                "period must be positive, got {period}"
            )));
        }
        if spikes.is_empty() {
            return Err(SaftError::InvalidSignal("no spikes".into()));
        }
        for s in &spikes {
            if !(s.t >= 0.0 && s.t < period) {
                return Err(SaftError::InvalidSignal(format!(
                    "location {} outside [0, {period})",
                    s.t
                )));
            }
            if s.c.norm() == 0.0 || !s.c.re.is_finite() || !s.c.im.is_finite() {
                return Err(SaftError::InvalidSignal(format!(
                    "amplitude at {} must be finite and nonzero",
                    s.t
                )));
            }
        }
        spikes.sort_by(|x, y| x.t.total_cmp(&y.t));
        if spikes.windows(2).any(|w| w[1].t == w[0].t) {
            return Err(SaftError::InvalidSignal("duplicate spike locations".into()));
        }
        Ok(SparseSignal { period, spikes })
    }

    /// Convenience constructor from `(t, c)` pairs.
    pub fn from_pairs(period: f64, pairs: &[(f64, Complex64)]) -> Result<Self> {
        SparseSignal::new(
            period,
            pairs.iter().map(|&(t, c)| Spike { t, c }).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.spikes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spikes.is_empty()
    }

    pub fn locations(&self) -> Vec<f64> {
        self.spikes.iter().map(|s| s.t).collect()
    }

    pub fn amplitudes(&self) -> Vec<Complex64> {
        self.spikes.iter().map(|s| s.c).collect()
    }

    /// Smallest circular gap between locations.
    pub fn min_separation(&self) -> Result<f64> {
        if self.spikes.len() < 2 {
            return Err(SaftError::SingleSpike);
        }
        let mut best = f64::INFINITY;
        for i in 0..self.spikes.len() {
            for j in (i + 1)..self.spikes.len() {
                best = best.min(circular_distance(
                    self.spikes[i].t,
                    self.spikes[j].t,
                    self.period,
                ));
            }
        }
        Ok(best)
    }
}
