//! Chirp-modulated convolution and its product theorem.
//!
//! With `m(t) = e^{j a t²/(2b)}` and `↑f = m·f`,
//!
//! ```text
//! (f ⋆ g)(t) = K · m*(t) · (↑f ∗ ↑g)(t)
//! ```
//!
//! transforms to `Φ(ω) F(ω) G(ω)` where
//! `Φ(ω) = e^{jω(dp − bq)/b} e^{−j d ω²/(2b)}`.
//!
//! ```
//! use saftkit::convolution::{chirp_mod, saft_convolve, Method};
//! use saftkit::{GridSignal, SaftParams};
//! use num_complex::Complex64;
//!
//! let p = SaftParams::frft(0.8)?;
//! let f = GridSignal::from_fn(-4.0, 0.05, 161, |t| Complex64::new((-t * t).exp(), 0.0))?;
//! let h = saft_convolve(&p, &f, &f, Method::Fft)?;
//! assert_eq!(h.len(), 2 * f.len() - 1);
//! assert!((chirp_mod(&p, 1.3).norm() - 1.0).abs() < 1e-15);
//! # Ok::<(), saftkit::SaftError>(())
//! ```

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Result, SaftError};
use crate::saft::SaftParams;
use crate::signal::{GridSignal, Spectrum};

/// `m(t) = e^{j a t²/(2b)}`; needs `b ≠ 0`.
pub fn chirp_mod(params: &SaftParams, t: f64) -> Complex64 {
    params.chirp(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Direct,
    Fft,
    /// Direct below about 10⁵ multiply-adds, FFT above.
    Auto,
}

fn linear_convolve_direct(x: &[Complex64], y: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); x.len() + y.len() - 1];
    for (i, &xi) in x.iter().enumerate() {
        for (j, &yj) in y.iter().enumerate() {
            out[i + j] += xi * yj;
        }
    }
    out
}

fn linear_convolve_fft(x: &[Complex64], y: &[Complex64]) -> Vec<Complex64> {
    let n_out = x.len() + y.len() - 1;
    let n = n_out.next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut xa = x.to_vec();
    xa.resize(n, Complex64::new(0.0, 0.0));
    let mut ya = y.to_vec();
    ya.resize(n, Complex64::new(0.0, 0.0));
    fwd.process(&mut xa);
    fwd.process(&mut ya);
    for (u, v) in xa.iter_mut().zip(&ya) {
        *u *= v;
    }
    inv.process(&mut xa);
    let scale = 1.0 / n as f64;
    xa.truncate(n_out);
    xa.iter_mut().for_each(|z| *z *= scale);
    xa
}

/// Linear convolution of two signals sampled with the same step.
///
/// The output grid starts at `f.t0 + g.t0` and has `len(f) + len(g) − 1`
/// nodes; the integral is the Riemann sum `dt · Σ ↑f_i ↑g_{n−i}`.
pub fn saft_convolve(
    params: &SaftParams,
    f: &GridSignal,
    g: &GridSignal,
    method: Method,
) -> Result<GridSignal> {
    params.require_b()?;
    if (f.dt - g.dt).abs() > 1e-12 * f.dt {
        return Err(SaftError::GridMismatch(format!(
            "steps differ: {} vs {}",
            f.dt, g.dt
        )));
    }
    let up = |s: &GridSignal| -> Vec<Complex64> {
        s.iter().map(|(t, v)| v * params.chirp(t)).collect()
    };
    let (uf, ug) = (up(f), up(g));
    let method = match method {
        Method::Auto if uf.len() * ug.len() <= 100_000 => Method::Direct,
        Method::Auto => Method::Fft,
        m => m,
    };
    let conv = match method {
        Method::Direct => linear_convolve_direct(&uf, &ug),
        _ => linear_convolve_fft(&uf, &ug),
    };
    let t0 = f.t0 + g.t0;
    let dt = f.dt;
    let k = params.kernel_constant();
    let values = conv
        .into_iter()
        .enumerate()
        .map(|(n, v)| k * params.chirp(t0 + n as f64 * dt).conj() * v * dt)
        .collect();
    GridSignal::new(t0, dt, values)
}

/// Exact convolution of a Dirac train `Σ c_k δ(t − τ_k)` with a kernel `g`:
/// `K · m*(t) · Σ c_k m(τ_k) g(t − τ_k)`.
pub fn impulse_convolve(
    params: &SaftParams,
    impulses: &[(f64, Complex64)],
    g: impl Fn(f64) -> Complex64,
    t: f64,
) -> Result<Complex64> {
    params.require_b()?;
    let sum: Complex64 = impulses
        .iter()
        .map(|&(tau, c)| c * params.chirp(tau) * params.chirp(t - tau) * g(t - tau))
        .sum();
    Ok(params.kernel_constant() * params.chirp(t).conj() * sum)
}

/// Right-hand side of the product theorem, `Φ(ω) F(ω) G(ω)`.
pub fn theorem_product(params: &SaftParams, f: &Spectrum, g: &Spectrum) -> Result<Spectrum> {
    params.require_b()?;
    if f.omegas != g.omegas {
        return Err(SaftError::GridMismatch("spectra on different grids".into()));
    }
    let values = f
        .omegas
        .iter()
        .zip(f.values.iter().zip(&g.values))
        .map(|(&w, (&x, &y))| params.phi_factor(w) * x * y)
        .collect();
    Spectrum::new(f.omegas.clone(), values)
}

/// Multiplier of the dual identity, `Φ_inv(t)` for the inverse parameters:
/// `SAFT[Φ_inv · f · g] = K_inv · (F ⋆_inv G)`.
pub fn dual_multiplier(params: &SaftParams, t: f64) -> Complex64 {
    params.inverse().phi_factor(t)
}
