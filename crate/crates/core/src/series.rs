//! Shifted-kernel bases, sampling reconstruction and the series expansion
//! on one period.
//!
//! On `[0, T)` the kernels `κ(t, nω₀)`, `ω₀ = 2πb/T`, are orthogonal with
//! squared norm `w₀ = |K|²T`, so
//!
//! ```text
//! ŝ[n] = ∫₀ᵀ s(t) κ*(t, nω₀) dt        s(t) = (1/w₀) Σ ŝ[n] κ(t, nω₀)
//! ```
//!
//! For a spike train `s = Σ c_k δ(t − t_k)` the coefficients reduce to
//! `K Φ*(nω₀) ĥ[n]` with
//! `ĥ[m] = Σ c_k e^{jQ(t_k)} e^{−j2πm t_k/T} = Σ c'_k u_k^m`,
//! `u_k = e^{−j2πt_k/T}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SaftError};
use crate::math::{cis, max_abs, sinc, trapezoid_weights};
use crate::saft::{kernel_unchecked, SaftParams};
use crate::signal::{FourierCoeffs, GridSignal, SafsCoeffs, SampleSet, SparseSignal};

/// Fundamental `ω₀ = 2πb/T`.
pub fn fundamental(params: &SaftParams, period: f64) -> f64 {
    2.0 * PI * params.b() / period
}

/// Shifted basis function
/// `φ_n(t) = e^{−j(p/b)(t − nΔ)} m*(t) m(nΔ) sinc((t − nΔ)/Δ) / √Δ`.
pub fn basis_phi_n(params: &SaftParams, n: i64, delta: f64, t: f64) -> Result<Complex64> {
    params.require_b()?;
    let tn = n as f64 * delta;
    let (p, b) = (params.p(), params.b());
    Ok(cis(-p * (t - tn) / b) * params.chirp(t).conj() * params.chirp(tn) * sinc((t - tn) / delta)
        / delta.sqrt())
}

/// Interpolation kernel `m*(t) e^{−jpt/b} sinc(−t/Δ) / (√Δ K)`.
///
/// Chirp-convolving a signal with it and sampling at `nΔ` gives the
/// coefficient `⟨f, φ_n⟩`.
pub fn phi_bl_eval(params: &SaftParams, delta: f64, t: f64) -> Result<Complex64> {
    params.require_b()?;
    let k = params.kernel_constant();
    Ok(params.chirp(t).conj() * cis(-params.p() * t / params.b()) * sinc(-t / delta)
        / (delta.sqrt() * k))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Largest end-sample magnitude over the largest sample magnitude. A
    /// large ratio means the finite sum truncates significant content.
    pub edge_ratio: f64,
}

/// Sampling reconstruction from `f(nΔ)`:
/// `f(t) = e^{−jat²/(2b)} Σ ↑f(nΔ) e^{−jp(t − nΔ)/b} sinc((t − nΔ)/Δ)`.
///
/// With `bandwidth = Some(Ω)` the step is checked against `π|b|/Ω`.
pub fn shannon_reconstruct(
    params: &SaftParams,
    samples: &SampleSet,
    times: &[f64],
    bandwidth: Option<f64>,
) -> Result<Reconstruction> {
    params.require_b()?;
    if samples.is_empty() || times.is_empty() {
        return Err(SaftError::EmptyGrid);
    }
    let delta = samples.delta;
    if let Some(omega_m) = bandwidth {
        let limit = PI * params.b().abs() / omega_m;
        if delta > limit * (1.0 + 1e-12) {
            return Err(SaftError::RateViolation { delta, limit });
        }
    }
    let up: Vec<(f64, Complex64)> = samples
        .values
        .iter()
        .enumerate()
        .map(|(n, &v)| {
            let tn = n as f64 * delta;
            (tn, v * params.chirp(tn))
        })
        .collect();
    let (p, b) = (params.p(), params.b());
    let values = times
        .iter()
        .map(|&t| {
            let s: Complex64 = up
                .iter()
                .map(|&(tn, v)| v * cis(-p * (t - tn) / b) * sinc((t - tn) / delta))
                .sum();
            params.chirp(t).conj() * s
        })
        .collect();
    let peak = max_abs(&samples.values);
    let ends = samples.values[0]
        .norm()
        .max(samples.values[samples.len() - 1].norm());
    Ok(Reconstruction {
        times: times.to_vec(),
        values,
        edge_ratio: if peak > 0.0 { ends / peak } else { 0.0 },
    })
}

fn check_period_grid(f: &GridSignal, period: f64) -> Result<()> {
    if !(period > 0.0) {
        return Err(SaftError::InvalidArgument("period must be positive".into()));
    }
    let tol = 1e-9 * period.max(1.0);
    if f.t0.abs() > tol || (f.t_end() - period).abs() > tol || f.len() < 2 {
        return Err(SaftError::GridMismatch(format!(
            "series analysis needs a grid spanning [0, {period}], got [{}, {}]",
            f.t0,
            f.t_end()
        )));
    }
    Ok(())
}

/// `ŝ[n] = ∫₀ᵀ f(t) κ*(t, nω₀) dt`, `|n| ≤ M`, by the trapezoid rule on a
/// grid spanning exactly `[0, T]`.
pub fn safs_analyze(
    params: &SaftParams,
    f: &GridSignal,
    period: f64,
    cutoff: usize,
) -> Result<SafsCoeffs> {
    params.require_b()?;
    check_period_grid(f, period)?;
    let w0 = fundamental(params, period);
    let w = trapezoid_weights(f.len());
    let coeffs = FourierCoeffs::from_fn(cutoff, |n| {
        let om = n as f64 * w0;
        let s: Complex64 = f
            .iter()
            .zip(&w)
            .map(|((t, v), &wt)| v * wt * kernel_unchecked(params, t, om).conj())
            .sum();
        s * f.dt
    });
    SafsCoeffs::new(period, coeffs)
}

/// `(1/w₀) Σ ŝ[n] κ(t, nω₀)` with `w₀ = |K|²T`.
pub fn safs_synthesize(params: &SaftParams, coeffs: &SafsCoeffs, t: f64) -> Result<Complex64> {
    params.require_b()?;
    let w0 = fundamental(params, coeffs.period);
    let norm = params.kernel_constant().norm_sqr() * coeffs.period;
    let s: Complex64 = coeffs
        .coeffs
        .iter()
        .map(|(n, v)| v * kernel_unchecked(params, t, n as f64 * w0))
        .sum();
    Ok(s / norm)
}

/// `ĥ[m] = Σ c_k e^{jQ(t_k)} e^{−j2πm t_k/T}`, `|m| ≤ fc`.
pub fn sparse_safs(params: &SaftParams, s: &SparseSignal, fc: usize) -> Result<FourierCoeffs> {
    params.require_b()?;
    let period = s.period;
    let weighted: Vec<(f64, Complex64)> = s
        .spikes
        .iter()
        .map(|sp| (sp.t, sp.c * cis(params.q_poly(sp.t))))
        .collect();
    Ok(FourierCoeffs::from_fn(fc, |m| {
        weighted
            .iter()
            .map(|&(t, c)| c * cis(-2.0 * PI * m as f64 * t / period))
            .sum()
    }))
}

/// Chirp-weighted amplitudes `c'_k = c_k e^{jQ(t_k)}`.
pub fn weighted_amplitudes(params: &SaftParams, s: &SparseSignal) -> Vec<Complex64> {
    s.spikes
        .iter()
        .map(|sp| sp.c * cis(params.q_poly(sp.t)))
        .collect()
}

/// Closed form of `⟨κ(·, nω), κ(·, kω)⟩` over `[0, T)` for an arbitrary
/// spacing `ω`.
pub fn gram_closed_form(params: &SaftParams, period: f64, omega: f64, n: i64, k: i64) -> Complex64 {
    let k2 = params.kernel_constant().norm_sqr();
    let phase = params.phi_factor(n as f64 * omega) * params.phi_factor(k as f64 * omega).conj();
    let y = (n - k) as f64 * omega / params.b();
    let integral = if y == 0.0 {
        Complex64::new(period, 0.0)
    } else {
        (cis(y * period) - 1.0) / Complex64::new(0.0, y)
    };
    k2 * phase * integral
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramReport {
    pub cutoff: usize,
    pub matrix: Vec<Vec<Complex64>>,
    /// Largest off-diagonal magnitude relative to the diagonal.
    pub max_offdiag_rel: f64,
    /// Largest |G[n,n] − |K|²T|.
    pub max_diag_err: f64,
}

/// Gram matrix of `κ(·, nω)`, `|n| ≤ M`, over `[0, T)` by `points`-node
/// trapezoid quadrature. `omega = None` uses the tuned spacing `2πb/T`.
pub fn gram_check(
    params: &SaftParams,
    period: f64,
    cutoff: usize,
    omega: Option<f64>,
    points: usize,
) -> Result<GramReport> {
    params.require_b()?;
    let om = omega.unwrap_or_else(|| fundamental(params, period));
    let dt = period / (points - 1) as f64;
    let w = trapezoid_weights(points);
    let m = cutoff as i64;
    let rows: Vec<Vec<Complex64>> = (-m..=m)
        .map(|n| {
            (0..points)
                .map(|i| kernel_unchecked(params, i as f64 * dt, n as f64 * om))
                .collect()
        })
        .collect();
    let size = rows.len();
    let mut matrix = vec![vec![Complex64::new(0.0, 0.0); size]; size];
    for i in 0..size {
        for j in 0..size {
            matrix[i][j] = (0..points)
                .map(|x| rows[i][x] * rows[j][x].conj() * w[x])
                .sum::<Complex64>()
                * dt;
        }
    }
    let diag = params.kernel_constant().norm_sqr() * period;
    let mut offdiag: f64 = 0.0;
    let mut diag_err: f64 = 0.0;
    for (i, row) in matrix.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if i == j {
                diag_err = diag_err.max((v - diag).norm());
            } else {
                offdiag = offdiag.max(v.norm() / diag);
            }
        }
    }
    Ok(GramReport {
        cutoff,
        matrix,
        max_offdiag_rel: offdiag,
        max_diag_err: diag_err,
    })
}
