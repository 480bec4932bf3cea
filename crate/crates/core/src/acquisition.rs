//! Measurement models: chirp-convolution with a sampling kernel followed by
//! uniform sampling, plus the windowed (Gabor-type) transform.
//!
//! Every kernel family reduces to a finite harmonic sum. After
//! [`demodulate`],
//!
//! ```text
//! g_n = y(nΔ) e^{jQ(nΔ)} / √Δ = Σ_{|m| ≤ fc} D[m] ĥ[m] e^{j2πmnΔ/T}
//! ```
//!
//! where `ĥ` are the spike coefficients from [`crate::series::sparse_safs`]
//! and `D` the gains returned by [`kernel_gains`]:
//!
//! | kernel | `D[m]` | `fc` |
//! |---|---|---|
//! | sinc | `1/T` (`1/(2T)` on a harmonic at the band edge) | `⌊T/(2Δ)⌋` |
//! | bandlimited `ψ` | `ψ̂(2πmΔ/T)/T` | `⌊T/(2Δ)⌋` |
//! | time-limited | `ψ̂[m] Φ(mω₀)/(T√Δ)` | `M` |

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SaftError};
use crate::math::{cis, sinc, trapezoid_weights};
use crate::saft::{kernel_unchecked, SaftParams};
use crate::series::{fundamental, safs_synthesize, sparse_safs, weighted_amplitudes};
use crate::signal::{FourierCoeffs, GridSignal, SafsCoeffs, SampleSet, SparseSignal};

const EDGE_TOL: f64 = 1e-9;

/// Prototype `ψ` of a bandlimited kernel `ψ(t/Δ)`, described by its
/// continuous Fourier transform `ψ̂(ν) = ∫ ψ(x) e^{−jνx} dx` on `|ν| ≤ π`.
pub trait BandlimitedShape: fmt::Debug + Send + Sync {
    fn spectrum(&self, nu: f64) -> Complex64;
    /// Time-domain prototype, when known in closed form.
    fn time(&self, x: f64) -> Option<Complex64>;
    fn name(&self) -> &str;
}

/// `ψ(x) = sinc(x)`, `ψ̂ = 1` on `|ν| < π`, `1/2` at `|ν| = π`.
#[derive(Debug, Clone, Copy)]
pub struct SincShape;

impl BandlimitedShape for SincShape {
    fn spectrum(&self, nu: f64) -> Complex64 {
        let a = nu.abs();
        if (a - PI).abs() <= EDGE_TOL * PI {
            Complex64::new(0.5, 0.0)
        } else if a < PI {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }
    fn time(&self, x: f64) -> Option<Complex64> {
        Some(Complex64::new(sinc(x), 0.0))
    }
    fn name(&self) -> &str {
        "sinc"
    }
}

/// `ψ(x) = sinc⁴(x/4)`; `ψ̂` is a cubic B-spline on `[−π, π]` with
/// `ψ̂(0) = 8/3`. Tails decay like `x⁻⁴`.
#[derive(Debug, Clone, Copy)]
pub struct CubicBSplineShape;

impl BandlimitedShape for CubicBSplineShape {
    fn spectrum(&self, nu: f64) -> Complex64 {
        let u = (2.0 * nu / PI).abs();
        let b = if u < 1.0 {
            2.0 / 3.0 - u * u + u * u * u / 2.0
        } else if u < 2.0 {
            (2.0 - u).powi(3) / 6.0
        } else {
            0.0
        };
        Complex64::new(4.0 * b, 0.0)
    }
    fn time(&self, x: f64) -> Option<Complex64> {
        Some(Complex64::new(sinc(x / 4.0).powi(4), 0.0))
    }
    fn name(&self) -> &str {
        "cubic_bspline"
    }
}

/// Sampling kernel family.
#[derive(Debug, Clone)]
pub enum KernelSpec {
    /// `m*(t) e^{−jpt/b} sinc(t/Δ) / (√Δ K)`.
    SincBl,
    /// `m*(t) e^{−jpt/b} ψ(t/Δ) / (√Δ K)`.
    ArbitraryBl(Arc<dyn BandlimitedShape>),
    /// Series synthesis of the given coefficients on `[0, T)`, zero outside.
    TimeLimited(SafsCoeffs),
}

impl KernelSpec {
    pub fn name(&self) -> &str {
        match self {
            KernelSpec::SincBl => "sinc",
            KernelSpec::ArbitraryBl(s) => s.name(),
            KernelSpec::TimeLimited(_) => "time_limited",
        }
    }

    /// Continuous-time kernel value, used for explicit convolution checks.
    /// `None` for bandlimited shapes without a closed-form prototype.
    pub fn eval(&self, params: &SaftParams, delta: f64, t: f64) -> Option<Complex64> {
        let pre = || {
            params.chirp(t).conj() * cis(-params.p() * t / params.b())
                / (delta.sqrt() * params.kernel_constant())
        };
        match self {
            KernelSpec::SincBl => Some(pre() * sinc(t / delta)),
            KernelSpec::ArbitraryBl(s) => s.time(t / delta).map(|v| pre() * v),
            KernelSpec::TimeLimited(c) => Some(time_limited_window(params, c, t)),
        }
    }
}

/// Series synthesis on `[0, T)`, zero elsewhere.
pub fn time_limited_window(params: &SaftParams, coeffs: &SafsCoeffs, t: f64) -> Complex64 {
    if t >= 0.0 && t < coeffs.period {
        safs_synthesize(params, coeffs, t).unwrap_or_default()
    } else {
        Complex64::new(0.0, 0.0)
    }
}

/// Largest harmonic `m` with `2πmΔ/T ≤ π`, i.e. `⌊T/(2Δ)⌋` up to rounding.
pub fn band_cutoff(period: f64, delta: f64) -> usize {
    (period / (2.0 * delta) + EDGE_TOL).floor().max(0.0) as usize
}

/// Gains `D[m]` relating demodulated samples to the spike coefficients.
pub fn kernel_gains(
    kernel: &KernelSpec,
    params: &SaftParams,
    period: f64,
    delta: f64,
) -> Result<FourierCoeffs> {
    params.require_b()?;
    match kernel {
        KernelSpec::SincBl => {
            let fc = band_cutoff(period, delta);
            Ok(FourierCoeffs::from_fn(fc, |m| {
                SincShape.spectrum(2.0 * PI * m as f64 * delta / period) / period
            }))
        }
        KernelSpec::ArbitraryBl(shape) => {
            let fc = band_cutoff(period, delta);
            Ok(FourierCoeffs::from_fn(fc, |m| {
                shape.spectrum(2.0 * PI * m as f64 * delta / period) / period
            }))
        }
        KernelSpec::TimeLimited(c) => {
            if (c.period - period).abs() > 1e-12 * period {
                return Err(SaftError::GridMismatch(format!(
                    "kernel support {} differs from period {period}",
                    c.period
                )));
            }
            let w0 = fundamental(params, period);
            let scale = 1.0 / (period * delta.sqrt());
            Ok(FourierCoeffs::from_fn(c.cutoff(), |m| {
                c.get(m) * params.phi_factor(m as f64 * w0) * scale
            }))
        }
    }
}

/// Closed-form kernel measurements `y(nΔ)`, `n = 0..N−1`.
pub fn simulate_measurements(
    s: &SparseSignal,
    params: &SaftParams,
    kernel: &KernelSpec,
    delta: f64,
    count: usize,
) -> Result<SampleSet> {
    let period = s.period;
    let gains = kernel_gains(kernel, params, period, delta)?;
    let h = sparse_safs(params, s, gains.fc)?;
    let weighted: Vec<(i64, Complex64)> = gains
        .iter()
        .map(|(m, d)| (m, d * h.get(m)))
        .collect();
    let values = (0..count)
        .map(|n| {
            let t = n as f64 * delta;
            let sum: Complex64 = weighted
                .iter()
                .map(|&(m, v)| v * cis(2.0 * PI * m as f64 * t / period))
                .sum();
            delta.sqrt() * cis(-params.q_poly(t)) * sum
        })
        .collect();
    SampleSet::new(delta, values)
}

/// Same as [`simulate_measurements`]; restricted to bandlimited kernels.
pub fn simulate_bl_measurements(
    s: &SparseSignal,
    params: &SaftParams,
    kernel: &KernelSpec,
    delta: f64,
    count: usize,
) -> Result<SampleSet> {
    if let KernelSpec::TimeLimited(_) = kernel {
        return Err(SaftError::InvalidArgument(
            "time-limited kernel passed to the bandlimited simulator".into(),
        ));
    }
    simulate_measurements(s, params, kernel, delta, count)
}

/// Same as [`simulate_measurements`]; restricted to time-limited kernels.
pub fn simulate_tl_measurements(
    s: &SparseSignal,
    params: &SaftParams,
    kernel: &KernelSpec,
    delta: f64,
    count: usize,
) -> Result<SampleSet> {
    if !matches!(kernel, KernelSpec::TimeLimited(_)) {
        return Err(SaftError::InvalidArgument(
            "bandlimited kernel passed to the time-limited simulator".into(),
        ));
    }
    simulate_measurements(s, params, kernel, delta, count)
}

/// `g_n = y(nΔ) e^{jQ(nΔ)} / √Δ`.
pub fn demodulate(y: &SampleSet, params: &SaftParams) -> Result<SampleSet> {
    params.require_b()?;
    let s = 1.0 / y.delta.sqrt();
    let values = y
        .values
        .iter()
        .enumerate()
        .map(|(n, &v)| v * cis(params.q_poly(n as f64 * y.delta)) * s)
        .collect();
    SampleSet::new(y.delta, values)
}

/// Windowed transform values on a `τ × ω` grid, `values[i][l]` at
/// `(taus[i], omegas[l])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaborMeasurements {
    pub taus: Vec<f64>,
    pub omegas: Vec<f64>,
    pub values: Vec<Vec<Complex64>>,
}

impl GaborMeasurements {
    /// CSV with columns `tau, omega, re, im`, τ-major.
    pub fn write_csv(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "tau,omega,re,im")?;
        for (tau, row) in self.taus.iter().zip(&self.values) {
            for (om, v) in self.omegas.iter().zip(row) {
                writeln!(w, "{tau:?},{om:?},{:?},{:?}", v.re, v.im)?;
            }
        }
        Ok(())
    }

    /// Column at frequency index `l` as a sample set (requires `τ_n = nΔ`).
    pub fn column(&self, l: usize) -> Result<SampleSet> {
        let delta = uniform_step(&self.taus)?;
        SampleSet::new(delta, self.values.iter().map(|row| row[l]).collect())
    }
}

fn uniform_step(taus: &[f64]) -> Result<f64> {
    if taus.len() < 2 {
        return Err(SaftError::UnderdeterminedSystem {
            available: taus.len(),
            required: 2,
        });
    }
    let delta = taus[1] - taus[0];
    let ok = delta > 0.0
        && taus
            .iter()
            .enumerate()
            .all(|(n, &t)| (t - n as f64 * delta).abs() <= 1e-9 * delta.max(1.0));
    if ok {
        Ok(delta)
    } else {
        Err(SaftError::GridMismatch("window shifts must be nΔ, n = 0, 1, ...".into()))
    }
}

/// `V(τ, ω) = ∫ f(t) ψ(t − τ) κ*(t, ω) dt` by the trapezoid rule.
pub fn gabor_saft(
    f: &GridSignal,
    window: impl Fn(f64) -> Complex64,
    params: &SaftParams,
    taus: &[f64],
    omegas: &[f64],
) -> Result<GaborMeasurements> {
    params.require_b()?;
    if taus.is_empty() || omegas.is_empty() {
        return Err(SaftError::EmptyGrid);
    }
    let w = trapezoid_weights(f.len());
    let pts: Vec<(f64, Complex64)> = f
        .iter()
        .zip(&w)
        .filter(|((_, v), _)| v.norm() > 0.0)
        .map(|((t, v), &wt)| (t, v * wt * f.dt))
        .collect();
    let kstar: Vec<Vec<Complex64>> = omegas
        .iter()
        .map(|&om| {
            pts.iter()
                .map(|&(t, _)| kernel_unchecked(params, t, om).conj())
                .collect()
        })
        .collect();
    let values = taus
        .iter()
        .map(|&tau| {
            let shifted: Vec<Complex64> = pts.iter().map(|&(t, v)| v * window(t - tau)).collect();
            kstar
                .iter()
                .map(|row| shifted.iter().zip(row).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();
    Ok(GaborMeasurements {
        taus: taus.to_vec(),
        omegas: omegas.to_vec(),
        values,
    })
}

/// Pairing `b ∫ ψ₁(t) ψ₂(t) dt` on a trapezoid grid.
pub fn window_pairing(
    params: &SaftParams,
    analysis: impl Fn(f64) -> Complex64,
    synthesis: impl Fn(f64) -> Complex64,
    grid: &GridSignal,
) -> Complex64 {
    let w = trapezoid_weights(grid.len());
    let s: Complex64 = grid
        .times()
        .iter()
        .zip(&w)
        .map(|(&t, &wt)| analysis(t) * synthesis(t) * wt)
        .sum();
    s * grid.dt * params.b()
}

/// Inverse of the windowed transform,
/// `f(t) = b ∬ V(τ, ω) ψ₂(t − τ) κ(t, ω) dω dτ`, valid when the windows
/// satisfy `b ∫ ψ₁ψ₂ = 1` (checked to 1e−9 with `pairing`).
pub fn gabor_inverse(
    params: &SaftParams,
    v: &GaborMeasurements,
    synthesis: impl Fn(f64) -> Complex64,
    pairing: Complex64,
    times: &[f64],
) -> Result<Vec<Complex64>> {
    params.require_b()?;
    if (pairing - 1.0).norm() > 1e-9 {
        return Err(SaftError::WindowPairingViolation {
            pairing: pairing.re,
        });
    }
    let wt = trapezoid_weights(v.taus.len());
    let ww = trapezoid_weights(v.omegas.len());
    let dtau = step_or_one(&v.taus);
    let dw = step_or_one(&v.omegas);
    Ok(times
        .iter()
        .map(|&t| {
            let kern: Vec<Complex64> = v
                .omegas
                .iter()
                .zip(&ww)
                .map(|(&om, &w)| kernel_unchecked(params, t, om) * w)
                .collect();
            let s: Complex64 = v
                .taus
                .iter()
                .zip(&v.values)
                .zip(&wt)
                .map(|((&tau, row), &w)| {
                    let inner: Complex64 = row.iter().zip(&kern).map(|(a, b)| a * b).sum();
                    inner * synthesis(t - tau) * w
                })
                .sum();
            s * dtau * dw * params.b()
        })
        .collect())
}

/// Grid spacing as a positive measure; descending grids (e.g. `ω = p + bν`
/// with `b < 0`) integrate the same as ascending ones.
fn step_or_one(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        1.0
    } else {
        ((xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64).abs()
    }
}

/// Periodic window `ψ_M(t) = Σ_{|m| ≤ M} ψ̂[m] e^{j2πmt/T}`.
pub fn gabor_window(coeffs: &FourierCoeffs, period: f64, t: f64) -> Complex64 {
    coeffs
        .iter()
        .map(|(m, c)| c * cis(2.0 * PI * m as f64 * t / period))
        .sum()
}

/// Closed-form windowed transform of a spike train on
/// `τ_n = nΔ (n < N)`, `ω_l = l·ω₀ (l ∈ ls)`:
/// `V(τ, ω) = K Φ*(ω) Σ c'_k ψ_M(t_k − τ) e^{−jωt_k/b}`.
pub fn simulate_gabor_measurements(
    s: &SparseSignal,
    params: &SaftParams,
    window: &FourierCoeffs,
    delta: f64,
    count: usize,
    ls: &[i64],
) -> Result<GaborMeasurements> {
    params.require_b()?;
    let period = s.period;
    let w0 = fundamental(params, period);
    let cw = weighted_amplitudes(params, s);
    let taus: Vec<f64> = (0..count).map(|n| n as f64 * delta).collect();
    let omegas: Vec<f64> = ls.iter().map(|&l| l as f64 * w0).collect();
    let k = params.kernel_constant();
    let values = taus
        .iter()
        .map(|&tau| {
            omegas
                .iter()
                .map(|&om| {
                    let sum: Complex64 = s
                        .spikes
                        .iter()
                        .zip(&cw)
                        .map(|(sp, c)| {
                            c * gabor_window(window, period, sp.t - tau)
                                * cis(-om * sp.t / params.b())
                        })
                        .sum();
                    k * params.phi_factor(om).conj() * sum
                })
                .collect()
        })
        .collect();
    Ok(GaborMeasurements {
        taus,
        omegas,
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    /// `|ψ̂[n]|` for `n = 0..=M`, taking the larger of `±n`.
    pub magnitudes: Vec<f64>,
    /// Smallest `M'` with `max_{|n| > M'} |ψ̂[n]| ≤ threshold · max |ψ̂|`.
    pub cutoff: Option<usize>,
    /// `(n, max |ψ̂| over 2^j ≤ |n| < 2^{j+1})` for each dyadic block.
    pub dyadic_envelope: Vec<(usize, f64)>,
    /// Least-squares slope of log-envelope against log n; about −1 for a
    /// jump discontinuity, steeper and falling for smooth windows.
    pub envelope_slope: f64,
}

/// Relative decay of series coefficients.
pub fn decay_profile(coeffs: &SafsCoeffs, threshold: f64) -> DecayReport {
    let m = coeffs.cutoff();
    let magnitudes: Vec<f64> = (0..=m as i64)
        .map(|n| coeffs.get(n).norm().max(coeffs.get(-n).norm()))
        .collect();
    let peak = magnitudes.iter().copied().fold(0.0, f64::max);
    let mut cutoff = None;
    for start in 0..m {
        let tail = magnitudes[start + 1..].iter().copied().fold(0.0, f64::max);
        if tail <= threshold * peak {
            cutoff = Some(start);
            break;
        }
    }
    let mut dyadic_envelope = Vec::new();
    let mut lo = 1usize;
    while lo <= m {
        let hi = (2 * lo).min(m + 1);
        let env = magnitudes[lo..hi].iter().copied().fold(0.0, f64::max);
        dyadic_envelope.push((lo, env / peak.max(f64::MIN_POSITIVE)));
        lo *= 2;
    }
    let pts: Vec<(f64, f64)> = dyadic_envelope
        .iter()
        .filter(|(_, e)| *e > 0.0)
        .map(|&(n, e)| ((n as f64).ln(), e.ln()))
        .collect();
    let envelope_slope = if pts.len() >= 2 {
        let nx = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / nx;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / nx;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    } else {
        0.0
    };
    DecayReport {
        magnitudes,
        cutoff,
        dyadic_envelope,
        envelope_slope,
    }
}
