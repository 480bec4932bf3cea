//! Spike recovery: Vandermonde inversion, kernel deconvolution,
//! annihilating filter, root finding and amplitude fitting.
//!
//! Sampling conditions, with `fc = ⌊T/(2Δ)⌋`:
//!
//! * C1: `N ≥ 2fc + 1` samples,
//! * C2: `fc ≥ K`,
//! * combined: `N ≥ T/Δ + 1`.
//!
//! When `T/Δ = 2fc` exactly, the harmonics `±fc` land on the same sampling
//! node and cannot be told apart. The pipeline then works on `|m| ≤ fc − 1`
//! and absorbs the edge pair in one extra column.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::acquisition::{
    band_cutoff, demodulate, kernel_gains, GaborMeasurements, KernelSpec,
};
use crate::error::{Result, SaftError, Stage};
use crate::math::{cis, circular_distance, l2_norm, lstsq, numerical_rank, wrap};
use crate::saft::SaftParams;
use crate::series::fundamental;
use crate::signal::{FourierCoeffs, SampleSet, SparseSignal, Spike};

const RANK_TOL: f64 = 1e-10;
const NULL_GAP_TOL: f64 = 1e-8;
const DUPLICATE_ROOT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conditions {
    pub fc: usize,
    pub samples: usize,
    pub spikes: usize,
    /// `N ≥ 2fc + 1`.
    pub c1: bool,
    /// `fc ≥ K`.
    pub c2: bool,
    /// `N ≥ T/Δ + 1`.
    pub combined: bool,
}

pub fn check_conditions(period: f64, delta: f64, spikes: usize, samples: usize) -> Conditions {
    let fc = band_cutoff(period, delta);
    conditions_for(fc, period, delta, spikes, samples)
}

fn conditions_for(fc: usize, period: f64, delta: f64, spikes: usize, samples: usize) -> Conditions {
    Conditions {
        fc,
        samples,
        spikes,
        c1: samples >= 2 * fc + 1,
        c2: fc >= spikes,
        combined: samples as f64 >= period / delta + 1.0 - 1e-9,
    }
}

/// Least-squares harmonic coefficients and fit diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VandermondeSolution {
    pub coeffs: FourierCoeffs,
    /// 2-norm condition number of the system matrix.
    pub cond: f64,
    /// `‖V x − g‖ / ‖g‖`.
    pub residual: f64,
}

fn node_phase(m: i64, delta: f64, period: f64) -> f64 {
    2.0 * PI * m as f64 * delta / period
}

/// Solve `g_n = Σ_{|m| ≤ fc} x[m] e^{j2πmnΔ/T}` in the least-squares sense.
pub fn vandermonde_solve(g: &SampleSet, period: f64, fc: usize) -> Result<VandermondeSolution> {
    solve_band(g, period, fc, false)
}

/// `alias_column` appends the node `e^{j2π(fc+1)Δ/T}` whose coefficient is
/// discarded; used when the edge pair `±(fc+1)` coincides.
fn solve_band(
    g: &SampleSet,
    period: f64,
    fc: usize,
    alias_column: bool,
) -> Result<VandermondeSolution> {
    let n = g.len();
    let cols = 2 * fc + 1 + usize::from(alias_column);
    if n < cols {
        return Err(SaftError::UnderdeterminedSystem {
            available: n,
            required: cols,
        });
    }
    let fci = fc as i64;
    let mut phases: Vec<f64> = (-fci..=fci).map(|m| node_phase(m, g.delta, period)).collect();
    if alias_column {
        phases.push(node_phase(fci + 1, g.delta, period));
    }
    let v = DMatrix::from_fn(n, cols, |r, c| cis(phases[c] * r as f64));
    let (x, sv, cond) = lstsq(&v, &g.values, RANK_TOL);
    let rank = numerical_rank(&sv, RANK_TOL);
    if rank < cols {
        return Err(SaftError::RankDeficient {
            rank,
            required: cols,
        });
    }
    let fit = &v * DMatrix::from_column_slice(cols, 1, &x);
    let diff: Vec<Complex64> = fit.iter().zip(&g.values).map(|(a, b)| a - b).collect();
    let gn = l2_norm(&g.values);
    let residual = if gn > 0.0 { l2_norm(&diff) / gn } else { 0.0 };
    Ok(VandermondeSolution {
        coeffs: FourierCoeffs::new(fc, x[..2 * fc + 1].to_vec())?,
        cond,
        residual,
    })
}

/// `ĥ[m] = ĝ[m] / D[m]`.
pub fn deconvolve_kernel(g: &FourierCoeffs, gains: &FourierCoeffs) -> Result<FourierCoeffs> {
    if gains.fc < g.fc {
        return Err(SaftError::InvalidArgument(format!(
            "gains cover |m| ≤ {} but coefficients need {}",
            gains.fc, g.fc
        )));
    }
    let scale = gains.values.iter().map(|d| d.norm()).fold(0.0, f64::max);
    let mut out = Vec::with_capacity(g.values.len());
    for (m, v) in g.iter() {
        let d = gains.get(m);
        if d.norm() <= 1e-14 * scale || d.norm() == 0.0 {
            return Err(SaftError::SingularGain { m });
        }
        out.push(v / d);
    }
    FourierCoeffs::new(g.fc, out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnihilatingFilter {
    /// `r[0] = 1, r[1], ..., r[K]`.
    pub taps: Vec<Complex64>,
    pub singular_values: Vec<f64>,
    /// `(σ_{K−1} − σ_K)/σ_max`: separation of the null direction.
    pub gap: f64,
}

/// Taps `r` with `Σ_{k=0..K} r[k] ĥ[m − k] = 0` for `m = −fc+K..=fc`, from
/// the smallest right singular vector of the Toeplitz system.
pub fn annihilate(h: &FourierCoeffs, k: usize) -> Result<AnnihilatingFilter> {
    if k == 0 {
        return Err(SaftError::InvalidArgument("need at least one spike".into()));
    }
    if h.fc < k {
        return Err(SaftError::SparsityViolation { fc: h.fc, k });
    }
    let fc = h.fc as i64;
    let ki = k as i64;
    let rows = (2 * fc + 1 - ki) as usize;
    let a = DMatrix::from_fn(rows, k + 1, |r, c| h.get(-fc + ki + r as i64 - c as i64));
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let smax = sv[0];
    let last = sv.len() - 1;
    let gap = if smax > 0.0 {
        (sv[last - 1] - sv[last]) / smax
    } else {
        0.0
    };
    if !(gap > NULL_GAP_TOL) {
        return Err(SaftError::IllConditioned { gap });
    }
    let row = order[last];
    let null: Vec<Complex64> = (0..=k).map(|c| v_t[(row, c)].conj()).collect();
    let lead = null[0];
    if lead.norm() < 1e-12 * l2_norm(&null) {
        return Err(SaftError::IllConditioned { gap: 0.0 });
    }
    Ok(AnnihilatingFilter {
        taps: null.iter().map(|v| v / lead).collect(),
        singular_values: sv,
        gap,
    })
}

/// Roots of `z^K + r[1] z^{K−1} + ... + r[K]` from the companion matrix,
/// refined by a few Newton steps.
pub fn filter_roots(taps: &[Complex64]) -> Result<Vec<Complex64>> {
    let k = taps.len().saturating_sub(1);
    if k == 0 {
        return Err(SaftError::InvalidArgument("filter has no roots".into()));
    }
    let monic: Vec<Complex64> = taps.iter().map(|r| r / taps[0]).collect();
    let mut roots = if k == 1 {
        vec![-monic[1]]
    } else {
        let comp = DMatrix::from_fn(k, k, |r, c| {
            if r == 0 {
                -monic[c + 1]
            } else if r == c + 1 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let ev = comp
            .schur()
            .eigenvalues()
            .ok_or(SaftError::IllConditioned { gap: 0.0 })?;
        ev.iter().copied().collect::<Vec<_>>()
    };
    for z in roots.iter_mut() {
        for _ in 0..3 {
            let (mut p, mut dp) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            for &c in &monic {
                dp = dp * *z + p;
                p = p * *z + c;
            }
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            if !step.re.is_finite() || !step.im.is_finite() {
                break;
            }
            *z -= step;
        }
    }
    Ok(roots)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryOptions {
    /// Noisy data: roots off the unit circle are projected instead of rejected.
    pub noisy: bool,
    /// Allowed `| |u| − 1 |` for noiseless data.
    pub root_tol: f64,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        RecoveryOptions {
            noisy: false,
            root_tol: 1e-6,
        }
    }
}

/// Locations `t = T·((−∠u) mod 2π)/(2π)` for roots `u = e^{−j2πt/T}`,
/// sorted ascending.
pub fn roots_to_times(roots: &[Complex64], period: f64, opts: &RecoveryOptions) -> Result<Vec<f64>> {
    let deviation = roots
        .iter()
        .map(|u| (u.norm() - 1.0).abs())
        .fold(0.0, f64::max);
    if !opts.noisy && deviation > opts.root_tol {
        return Err(SaftError::RootOffCircle { deviation });
    }
    let mut times: Vec<f64> = roots
        .iter()
        .map(|u| {
            let t = wrap(-u.arg(), 2.0 * PI) * period / (2.0 * PI);
            if period - t < 1e-12 * period {
                0.0
            } else {
                t
            }
        })
        .collect();
    times.sort_by(f64::total_cmp);
    for i in 0..times.len() {
        for j in (i + 1)..times.len() {
            if circular_distance(times[i], times[j], period) < DUPLICATE_ROOT_TOL * period {
                return Err(SaftError::RankDeficient {
                    rank: times.len() - 1,
                    required: times.len(),
                });
            }
        }
    }
    Ok(times)
}

/// Least-squares `x_k` in `ĥ[m] = Σ x_k e^{−j2πm t_k/T}`; returns the
/// solution and the relative residual.
pub fn fit_weighted_amplitudes(
    h: &FourierCoeffs,
    times: &[f64],
    period: f64,
) -> Result<(Vec<Complex64>, f64)> {
    let rows = h.values.len();
    if rows < times.len() {
        return Err(SaftError::UnderdeterminedSystem {
            available: rows,
            required: times.len(),
        });
    }
    let fc = h.fc as i64;
    let a = DMatrix::from_fn(rows, times.len(), |r, c| {
        cis(-2.0 * PI * (r as i64 - fc) as f64 * times[c] / period)
    });
    let (x, sv, _) = lstsq(&a, &h.values, RANK_TOL);
    let rank = numerical_rank(&sv, RANK_TOL);
    if rank < times.len() {
        return Err(SaftError::RankDeficient {
            rank,
            required: times.len(),
        });
    }
    let fit = &a * DMatrix::from_column_slice(times.len(), 1, &x);
    let diff: Vec<Complex64> = fit.iter().zip(&h.values).map(|(u, v)| u - v).collect();
    let hn = l2_norm(&h.values);
    Ok((x, if hn > 0.0 { l2_norm(&diff) / hn } else { 0.0 }))
}

/// Amplitudes `c_k = x_k e^{−jQ(t_k)}` from the chirp-weighted fit.
pub fn estimate_amplitudes(
    params: &SaftParams,
    h: &FourierCoeffs,
    times: &[f64],
    period: f64,
) -> Result<(Vec<Complex64>, f64)> {
    let (x, res) = fit_weighted_amplitudes(h, times, period)?;
    Ok((
        x.iter()
            .zip(times)
            .map(|(v, &t)| v * cis(-params.q_poly(t)))
            .collect(),
        res,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub period: f64,
    pub spikes: Vec<Spike>,
    /// Deconvolved coefficients fed to the annihilating filter.
    pub coeffs: FourierCoeffs,
    pub conditions: Conditions,
    /// Harmonic cutoff actually used.
    pub fc_used: usize,
    /// True when the edge pair `±fc` was merged by sampling.
    pub aliased_edge: bool,
    pub vandermonde_cond: f64,
    pub annihilation_gap: f64,
    /// Largest `| |u| − 1 |` over the roots.
    pub root_deviation: f64,
    /// Relative residual of the amplitude fit on the coefficients.
    pub coeff_residual: f64,
    /// Relative residual of the re-synthesised demodulated samples.
    pub sample_residual: f64,
    pub min_separation: Option<f64>,
    /// `(δ_min/T)·fc ≥ 2`.
    pub separation_ok: Option<bool>,
}

impl RecoveryResult {
    pub fn locations(&self) -> Vec<f64> {
        self.spikes.iter().map(|s| s.t).collect()
    }

    pub fn amplitudes(&self) -> Vec<Complex64> {
        self.spikes.iter().map(|s| s.c).collect()
    }

    pub fn to_signal(&self) -> Result<SparseSignal> {
        SparseSignal::new(self.period, self.spikes.clone())
    }

    /// One row per estimated spike: `k, t_true, t_est, c_re, c_im,
    /// abs_err_t`. Truth columns stay empty without a reference; with one,
    /// spikes are paired by [`match_spikes`].
    pub fn write_csv(&self, truth: Option<&SparseSignal>, mut w: impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "k,t_true,t_est,c_re,c_im,abs_err_t")?;
        let pairs = truth.map(|s| match_spikes(&s.locations(), &self.locations(), self.period));
        for (k, sp) in self.spikes.iter().enumerate() {
            match pairs.as_ref().and_then(|p| p.get(k)).zip(truth) {
                Some((&j, s)) => {
                    let tt = s.spikes[j].t;
                    let err = circular_distance(tt, sp.t, self.period);
                    writeln!(w, "{k},{tt:?},{:?},{:?},{:?},{err:?}", sp.t, sp.c.re, sp.c.im)?
                }
                None => writeln!(w, "{k},,{:?},{:?},{:?},", sp.t, sp.c.re, sp.c.im)?,
            }
        }
        Ok(())
    }
}

/// For each estimate (sorted), the index of its true spike (sorted): the
/// cyclic shift of sorted order with the smallest worst-case circular
/// distance. Requires equal counts; otherwise pairs greedily by nearest.
pub fn match_spikes(truth: &[f64], est: &[f64], period: f64) -> Vec<usize> {
    let n = truth.len();
    if n == 0 {
        return Vec::new();
    }
    if est.len() != n {
        return est
            .iter()
            .map(|&e| {
                (0..n)
                    .min_by(|&a, &b| {
                        circular_distance(truth[a], e, period)
                            .total_cmp(&circular_distance(truth[b], e, period))
                    })
                    .unwrap_or(0)
            })
            .collect();
    }
    let cost = |shift: usize| {
        (0..n)
            .map(|i| circular_distance(truth[(i + shift) % n], est[i], period))
            .fold(0.0, f64::max)
    };
    let best = (0..n)
        .min_by(|&a, &b| cost(a).total_cmp(&cost(b)))
        .unwrap_or(0);
    (0..n).map(|i| (i + best) % n).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cutoff {
    /// Largest `f` with nonvanishing gains on `|m| ≤ f`.
    pub data: usize,
    /// Harmonics actually solved for.
    pub used: usize,
    /// The pair `±data` shares one sampling node and is merged.
    pub aliased: bool,
}

/// Harmonic range that survives the kernel and the sampling step. Gains
/// below `1e−12` of the peak count as zero; the coincident edge pair of
/// `T/Δ = 2f` costs one harmonic.
pub fn effective_cutoff(gains: &FourierCoeffs, period: f64, delta: f64) -> Cutoff {
    let scale = gains.values.iter().map(|d| d.norm()).fold(0.0, f64::max);
    let mut data = 0usize;
    while data < gains.fc {
        let m = (data + 1) as i64;
        if gains.get(m).norm() <= 1e-12 * scale || gains.get(-m).norm() <= 1e-12 * scale {
            break;
        }
        data += 1;
    }
    let aliased = data > 0 && (2.0 * data as f64 * delta / period - 1.0).abs() < 1e-9;
    Cutoff {
        data,
        used: if aliased { data - 1 } else { data },
        aliased,
    }
}

struct HarmonicFit {
    times: Vec<f64>,
    weighted: Vec<Complex64>,
    coeffs: FourierCoeffs,
    conditions: Conditions,
    fc_used: usize,
    aliased: bool,
    cond: f64,
    gap: f64,
    root_deviation: f64,
    coeff_residual: f64,
    sample_residual: f64,
}

/// Core of every pipeline: `g_n = Σ D[m] x[m] e^{j2πmnΔ/T}` with
/// `x[m] = Σ w_k u_k^m`. Recovers `t_k` and `w_k`.
fn harmonic_pipeline(
    g: &SampleSet,
    gains: &FourierCoeffs,
    period: f64,
    k: usize,
    opts: &RecoveryOptions,
) -> Result<HarmonicFit> {
    let fc_nominal = gains.fc;
    let conditions = conditions_for(fc_nominal, period, g.delta, k, g.len());
    if !conditions.c1 {
        return Err(SaftError::UnderdeterminedSystem {
            available: g.len(),
            required: 2 * fc_nominal + 1,
        }
        .at(Stage::Vandermonde));
    }
    if gains.get(0).norm() <= 0.0 {
        return Err(SaftError::VanishingSpectrum { m: 0 }.at(Stage::Deconvolve));
    }
    let cut = effective_cutoff(gains, period, g.delta);
    let (fc_data, fc_used, aliased) = (cut.data, cut.used, cut.aliased);
    if fc_used < k {
        let err = if fc_data < fc_nominal && fc_data < k {
            SaftError::VanishingSpectrum {
                m: fc_data as i64 + 1,
            }
        } else {
            SaftError::SparsityViolation { fc: fc_used, k }
        };
        return Err(err.at(Stage::Annihilate));
    }
    let sol = solve_band(g, period, fc_used, aliased).map_err(|e| e.at(Stage::Vandermonde))?;
    let h = deconvolve_kernel(&sol.coeffs, gains).map_err(|e| e.at(Stage::Deconvolve))?;
    let filt = annihilate(&h, k).map_err(|e| e.at(Stage::Annihilate))?;
    let roots = filter_roots(&filt.taps).map_err(|e| e.at(Stage::Roots))?;
    let root_deviation = roots
        .iter()
        .map(|u| (u.norm() - 1.0).abs())
        .fold(0.0, f64::max);
    let times = roots_to_times(&roots, period, opts).map_err(|e| e.at(Stage::Roots))?;
    let (weighted, coeff_residual) =
        fit_weighted_amplitudes(&h, &times, period).map_err(|e| e.at(Stage::Amplitudes))?;

    // Re-synthesise the demodulated samples over the full data band.
    let fcd = fc_data as i64;
    let model: Vec<Complex64> = (0..g.len())
        .map(|n| {
            (-fcd..=fcd)
                .map(|m| {
                    let x: Complex64 = times
                        .iter()
                        .zip(&weighted)
                        .map(|(&t, w)| w * cis(-2.0 * PI * m as f64 * t / period))
                        .sum();
                    gains.get(m) * x * cis(node_phase(m, g.delta, period) * n as f64)
                })
                .sum()
        })
        .collect();
    let diff: Vec<Complex64> = model.iter().zip(&g.values).map(|(a, b)| a - b).collect();
    let gn = l2_norm(&g.values);
    Ok(HarmonicFit {
        times,
        weighted,
        coeffs: h,
        conditions,
        fc_used,
        aliased,
        cond: sol.cond,
        gap: filt.gap,
        root_deviation,
        coeff_residual,
        sample_residual: if gn > 0.0 { l2_norm(&diff) / gn } else { 0.0 },
    })
}

fn finish(fit: HarmonicFit, period: f64, amplitudes: Vec<Complex64>) -> RecoveryResult {
    let spikes: Vec<Spike> = fit
        .times
        .iter()
        .zip(amplitudes)
        .map(|(&t, c)| Spike { t, c })
        .collect();
    let min_separation = if spikes.len() >= 2 {
        let mut best = f64::INFINITY;
        for i in 0..spikes.len() {
            for j in (i + 1)..spikes.len() {
                best = best.min(circular_distance(spikes[i].t, spikes[j].t, period));
            }
        }
        Some(best)
    } else {
        None
    };
    let separation_ok = min_separation.map(|d| d / period * fit.fc_used as f64 >= 2.0);
    RecoveryResult {
        period,
        spikes,
        coeffs: fit.coeffs,
        conditions: fit.conditions,
        fc_used: fit.fc_used,
        aliased_edge: fit.aliased,
        vandermonde_cond: fit.cond,
        annihilation_gap: fit.gap,
        root_deviation: fit.root_deviation,
        coeff_residual: fit.coeff_residual,
        sample_residual: fit.sample_residual,
        min_separation,
        separation_ok,
    }
}

/// Recover `K` spikes from kernel measurements `y(nΔ)` on one period.
pub fn recover_sparse(
    samples: &SampleSet,
    params: &SaftParams,
    kernel: &KernelSpec,
    period: f64,
    k: usize,
    opts: &RecoveryOptions,
) -> Result<RecoveryResult> {
    params.require_b().map_err(|e| e.at(Stage::Params))?;
    let gains =
        kernel_gains(kernel, params, period, samples.delta).map_err(|e| e.at(Stage::Deconvolve))?;
    let g = demodulate(samples, params).map_err(|e| e.at(Stage::Demodulate))?;
    let fit = harmonic_pipeline(&g, &gains, period, k, opts)?;
    let amps = fit
        .weighted
        .iter()
        .zip(&fit.times)
        .map(|(w, &t)| w * cis(-params.q_poly(t)))
        .collect();
    Ok(finish(fit, period, amps))
}

/// [`recover_sparse`] for the bandlimited kernel families.
pub fn recover_sparse_bl(
    samples: &SampleSet,
    params: &SaftParams,
    kernel: &KernelSpec,
    period: f64,
    k: usize,
    opts: &RecoveryOptions,
) -> Result<RecoveryResult> {
    if let KernelSpec::TimeLimited(_) = kernel {
        return Err(SaftError::InvalidArgument(
            "time-limited kernel passed to the bandlimited pipeline".into(),
        ));
    }
    recover_sparse(samples, params, kernel, period, k, opts)
}

/// [`recover_sparse`] for time-limited kernels.
pub fn recover_sparse_tl(
    samples: &SampleSet,
    params: &SaftParams,
    kernel: &KernelSpec,
    period: f64,
    k: usize,
    opts: &RecoveryOptions,
) -> Result<RecoveryResult> {
    if !matches!(kernel, KernelSpec::TimeLimited(_)) {
        return Err(SaftError::InvalidArgument(
            "bandlimited kernel passed to the time-limited pipeline".into(),
        ));
    }
    recover_sparse(samples, params, kernel, period, k, opts)
}

/// Strip `K Φ*(ω)` from a window column and set up gains `ψ̂[−m]`.
fn gabor_row(
    column: &SampleSet,
    params: &SaftParams,
    omega: f64,
    window: &FourierCoeffs,
) -> Result<(SampleSet, FourierCoeffs)> {
    let lead = params.kernel_constant() * params.phi_factor(omega).conj();
    let values = column.values.iter().map(|v| v / lead).collect();
    let gains = FourierCoeffs::from_fn(window.fc, |m| window.get(-m));
    Ok((SampleSet::new(column.delta, values)?, gains))
}

/// Recover spikes from the window column at `ω₀ = 2πb/T`.
pub fn recover_gabor_case1(
    column: &SampleSet,
    params: &SaftParams,
    period: f64,
    k: usize,
    window: &FourierCoeffs,
    opts: &RecoveryOptions,
) -> Result<RecoveryResult> {
    params.require_b().map_err(|e| e.at(Stage::Params))?;
    let w0 = fundamental(params, period);
    let (g, gains) = gabor_row(column, params, w0, window).map_err(|e| e.at(Stage::Gabor))?;
    let fit = harmonic_pipeline(&g, &gains, period, k, opts)?;
    // Row amplitudes are c'_k e^{−jω₀t_k/b} = c'_k e^{−j2πt_k/T}.
    let amps = fit
        .weighted
        .iter()
        .zip(&fit.times)
        .map(|(w, &t)| w * cis(2.0 * PI * t / period) * cis(-params.q_poly(t)))
        .collect();
    Ok(finish(fit, period, amps))
}

/// Recover spikes from a full `τ × ω` grid with `ω_l = l·ω₀`: each column
/// is solved on its own, locations are merged by a residual-weighted
/// circular mean and amplitudes by a joint least-squares fit.
pub fn recover_gabor_case2(
    meas: &GaborMeasurements,
    params: &SaftParams,
    period: f64,
    k: usize,
    window: &FourierCoeffs,
    opts: &RecoveryOptions,
) -> Result<RecoveryResult> {
    params.require_b().map_err(|e| e.at(Stage::Params))?;
    let w0 = fundamental(params, period);
    let mut rows = Vec::new();
    let mut first_err = None;
    for (col, &om) in meas.omegas.iter().enumerate() {
        let l = (om / w0).round();
        if (om / w0 - l).abs() > 1e-9 {
            return Err(SaftError::GridMismatch(format!(
                "frequency {om} is not a multiple of {w0}"
            ))
            .at(Stage::Gabor));
        }
        let column = meas.column(col).map_err(|e| e.at(Stage::Gabor))?;
        let (g, gains) = gabor_row(&column, params, om, window).map_err(|e| e.at(Stage::Gabor))?;
        match harmonic_pipeline(&g, &gains, period, k, opts) {
            Ok(fit) => rows.push((l as i64, fit)),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    if rows.is_empty() {
        return Err(first_err.unwrap_or(SaftError::EmptyGrid.at(Stage::Gabor)));
    }
    let best = rows
        .iter()
        .enumerate()
        .min_by(|x, y| x.1 .1.sample_residual.total_cmp(&y.1 .1.sample_residual))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let reference = rows[best].1.times.clone();
    let mut acc = vec![Complex64::new(0.0, 0.0); k];
    for (_, fit) in &rows {
        let w = 1.0 / (fit.sample_residual + 1e-15);
        for (i, &r) in reference.iter().enumerate() {
            let nearest = fit
                .times
                .iter()
                .copied()
                .min_by(|&a, &b| {
                    circular_distance(a, r, period).total_cmp(&circular_distance(b, r, period))
                })
                .unwrap_or(r);
            acc[i] += w * cis(2.0 * PI * nearest / period);
        }
    }
    let mut times: Vec<f64> = acc
        .iter()
        .map(|z| wrap(z.arg(), 2.0 * PI) * period / (2.0 * PI))
        .map(|t| if period - t < 1e-12 * period { 0.0 } else { t })
        .collect();
    times.sort_by(f64::total_cmp);

    // Joint fit: x_l[m] = Σ_k c'_k u_k^{l+m}.
    let mut eqs: Vec<(i64, Complex64)> = Vec::new();
    for (l, fit) in &rows {
        for (m, v) in fit.coeffs.iter() {
            eqs.push((l + m, v));
        }
    }
    let a = DMatrix::from_fn(eqs.len(), k, |r, c| {
        cis(-2.0 * PI * eqs[r].0 as f64 * times[c] / period)
    });
    let rhs: Vec<Complex64> = eqs.iter().map(|e| e.1).collect();
    let (x, sv, _) = lstsq(&a, &rhs, RANK_TOL);
    if numerical_rank(&sv, RANK_TOL) < k {
        return Err(SaftError::RankDeficient {
            rank: numerical_rank(&sv, RANK_TOL),
            required: k,
        }
        .at(Stage::Amplitudes));
    }
    let fitted = &a * DMatrix::from_column_slice(k, 1, &x);
    let diff: Vec<Complex64> = fitted.iter().zip(&rhs).map(|(u, v)| u - v).collect();
    let coeff_residual = l2_norm(&diff) / l2_norm(&rhs).max(f64::MIN_POSITIVE);
    let amps: Vec<Complex64> = x
        .iter()
        .zip(&times)
        .map(|(v, &t)| v * cis(-params.q_poly(t)))
        .collect();

    let (_, mut base) = rows.swap_remove(best);
    base.times = times;
    base.weighted = x;
    base.coeff_residual = coeff_residual;
    Ok(finish(base, period, amps))
}
