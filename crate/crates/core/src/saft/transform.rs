use num_complex::Complex64;
use rustfft::FftPlanner;

use super::params::SaftParams;
use crate::error::{Result, SaftError};
use crate::math::{cis, trapezoid, trapezoid_weights};
use crate::signal::{GridSignal, Spectrum};

/// Kernel `κ(t, ω) = K* · exp(−(j/2b)(a t² + d ω² + 2t(p − ω) − 2ω(dp − bq)))`.
pub fn kernel_eval(params: &SaftParams, t: f64, omega: f64) -> Result<Complex64> {
    params.require_b()?;
    Ok(kernel_unchecked(params, t, omega))
}

pub(crate) fn kernel_unchecked(params: &SaftParams, t: f64, omega: f64) -> Complex64 {
    let (a, b, d, p, q) = (params.a(), params.b(), params.d(), params.p(), params.q());
    let phase = (a * t * t + d * omega * omega + 2.0 * t * (p - omega)
        - 2.0 * omega * (d * p - b * q))
        / (2.0 * b);
    params.kernel_constant().conj() * cis(-phase)
}

/// Transform of a unit impulse at the origin, `κ*(0, ω)`.
pub fn dirac_saft(params: &SaftParams, omega: f64) -> Result<Complex64> {
    params.require_b()?;
    let (b, d, p, q) = (params.b(), params.d(), params.p(), params.q());
    let phase = (d * omega * omega - 2.0 * omega * (d * p - b * q)) / (2.0 * b);
    Ok(params.kernel_constant() * cis(phase))
}

/// Trapezoid quadrature of `∫ f(t) κ*(t, ω) dt` at each requested frequency.
pub fn saft_quadrature(params: &SaftParams, f: &GridSignal, omegas: &[f64]) -> Result<Spectrum> {
    params.require_b()?;
    if omegas.is_empty() {
        return Err(SaftError::EmptyGrid);
    }
    let w = trapezoid_weights(f.len());
    // κ*(t, ω) = K e^{jQ(t)} e^{−jωt/b} Φ*(ω): the t-only part is shared.
    let pre: Vec<Complex64> = f
        .iter()
        .zip(&w)
        .map(|((t, v), &wt)| v * wt * cis(params.q_poly(t)))
        .collect();
    let times = f.times();
    let k = params.kernel_constant();
    let values = omegas
        .iter()
        .map(|&om| {
            let s: Complex64 = pre
                .iter()
                .zip(&times)
                .map(|(v, &t)| v * cis(-om * t / params.b()))
                .sum();
            k * params.phi_factor(om).conj() * s * f.dt
        })
        .collect();
    Spectrum::new(omegas.to_vec(), values)
}

/// Chirp–FFT–chirp evaluation on the frequency grid `ω_k = p + b·ξ_k`,
/// `ξ_k = 2πk/(M·dt)`, where `M = pad·N` after zero padding.
///
/// The sums are the same trapezoid sums as [`saft_quadrature`], so on
/// shared frequencies the two agree to rounding.
pub fn saft_fast(params: &SaftParams, f: &GridSignal, pad: usize) -> Result<Spectrum> {
    params.require_b()?;
    let n = f.len();
    let m = n * pad.max(1);
    let w = trapezoid_weights(n);
    let (a, b, d, p, q) = (params.a(), params.b(), params.d(), params.p(), params.q());
    let mut buf: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); m];
    for (i, (t, v)) in f.iter().enumerate() {
        buf[i] = v * w[i] * cis(a * t * t / (2.0 * b));
    }
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let post_const = params.chirp_constant();
    let half = (m / 2) as i64;
    let mut out: Vec<(f64, Complex64)> = (-half..(m as i64 - half))
        .map(|k| {
            let xi = 2.0 * std::f64::consts::PI * k as f64 / (m as f64 * f.dt);
            let f1 = buf[k.rem_euclid(m as i64) as usize] * cis(-xi * f.t0) * f.dt;
            let om = p + b * xi;
            let post = cis(om * q + d * (om - p) * (om - p) / (2.0 * b));
            (om, post_const * post * f1)
        })
        .collect();
    if b < 0.0 {
        out.reverse();
    }
    let (omegas, values) = out.into_iter().unzip();
    Spectrum::new(omegas, values)
}

/// Inverse by quadrature over the spectrum grid:
/// `f(t) = K_inv · ∫ F(ω) κ*_inv(ω, t) dω`, with `κ_inv` the kernel of the
/// inverse parameters.
pub fn isaft_quadrature(
    params: &SaftParams,
    spectrum: &Spectrum,
    t0: f64,
    dt: f64,
    n: usize,
) -> Result<GridSignal> {
    params.require_b()?;
    if n == 0 {
        return Err(SaftError::EmptyGrid);
    }
    let inv = params.inverse();
    let k_inv = params.inverse_constant();
    let values = (0..n)
        .map(|i| {
            let t = t0 + i as f64 * dt;
            let ys: Vec<Complex64> = spectrum
                .omegas
                .iter()
                .zip(&spectrum.values)
                .map(|(&om, &v)| v * kernel_unchecked(&inv, om, t).conj())
                .collect();
            k_inv * trapezoid(&spectrum.omegas, &ys)
        })
        .collect();
    GridSignal::new(t0, dt, values)
}

/// Pointwise evaluation for `b = 0`:
/// `√d · e^{j(cd/2)(ω−p)² + jωq} · f(d(ω − p))`, reading `f` by linear
/// interpolation.
pub fn saft_b0_eval(params: &SaftParams, f: &GridSignal, omega: f64) -> Result<Complex64> {
    if !params.is_b_zero() {
        return Err(SaftError::InvalidArgument(
            "pointwise evaluation needs b = 0".into(),
        ));
    }
    let (c, d, p, q) = (params.c(), params.d(), params.p(), params.q());
    let x = omega - p;
    let v = f.interpolate(d * x)?;
    Ok(Complex64::new(d, 0.0).sqrt() * cis(0.5 * c * d * x * x + omega * q) * v)
}
