//! Seeded batch trials and their report.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use saftkit::acquisition::{simulate_gabor_measurements, simulate_measurements};
use saftkit::math::circular_distance;
use saftkit::recovery::{
    match_spikes, recover_gabor_case1, recover_gabor_case2, recover_sparse, RecoveryOptions,
    RecoveryResult,
};
use saftkit::series::fundamental;
use saftkit::{SampleSet, SaftError, SparseSignal, Spike, Stage};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{explicit_signal, Issue, Mode, PreparedKernel, SignalSpec, Validated};

pub const MAX_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub tool: ToolInfo,
    pub config: Value,
    pub seeds: SeedInfo,
    pub aggregates: Aggregates,
    pub trials: Vec<TrialRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
    pub library_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedInfo {
    pub base: u64,
    /// `base + i` for trial `i`.
    pub trials: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub trials: usize,
    pub succeeded: usize,
    pub failed: usize,
    pub stage_errors: usize,
    pub success_rate: f64,
    pub tolerance: f64,
    pub amplitude_tolerance: f64,
    /// Over trials that produced an estimate.
    pub max_t_error: Option<f64>,
    pub max_rel_c_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurements {
    /// Frequency of the window column for the Gabor modes.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub omega: Option<f64>,
    pub delta: f64,
    pub values: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub seed: u64,
    pub truth: SparseSignal,
    pub measurements: Measurements,
    #[serde(flatten)]
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Ok {
        result: RecoveryResult,
        max_t_error: f64,
        max_rel_c_error: f64,
        success: bool,
    },
    Error {
        stage: Option<Stage>,
        kind: String,
        message: String,
    },
}

impl TrialRecord {
    pub fn result(&self) -> Option<&RecoveryResult> {
        match &self.outcome {
            Outcome::Ok { result, .. } => Some(result),
            Outcome::Error { .. } => None,
        }
    }

    pub fn succeeded(&self) -> bool {
        matches!(self.outcome, Outcome::Ok { success: true, .. })
    }
}

/// Rejection sampling: `k` uniform locations until every circular gap
/// reaches `min_sep`, at most [`MAX_ATTEMPTS`] draws.
pub fn random_signal(
    rng: &mut impl Rng,
    k: usize,
    period: f64,
    min_sep: f64,
    amplitude: [f64; 2],
) -> Option<SparseSignal> {
    for _ in 0..MAX_ATTEMPTS {
        let mut ts: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..period)).collect();
        ts.sort_by(f64::total_cmp);
        let ok = (0..k).all(|i| {
            (i + 1..k).all(|j| circular_distance(ts[i], ts[j], period) >= min_sep.max(f64::MIN_POSITIVE))
        });
        if !ok {
            continue;
        }
        let spikes = ts
            .into_iter()
            .map(|t| {
                let r = if amplitude[0] == amplitude[1] {
                    amplitude[0]
                } else {
                    rng.gen_range(amplitude[0]..amplitude[1])
                };
                let th = rng.gen_range(0.0..2.0 * PI);
                Spike {
                    t,
                    c: Complex64::from_polar(r, th),
                }
            })
            .collect();
        return SparseSignal::new(period, spikes).ok();
    }
    None
}

struct Prepared {
    index: usize,
    seed: u64,
    truth: SparseSignal,
}

/// Draw every trial's signal up front so scheduling cannot affect results.
fn prepare(v: &Validated) -> Result<Vec<Prepared>, Vec<Issue>> {
    let cfg = &v.config;
    (0..cfg.trials)
        .map(|index| {
            let seed = cfg.seed.wrapping_add(index as u64);
            let truth = match &cfg.signal {
                SignalSpec::Explicit { period, spikes } => explicit_signal(*period, spikes)
                    .map_err(|e| vec![Issue { pointer: "/signal".into(), message: e.to_string() }])?,
                SignalSpec::Random {
                    k,
                    period,
                    min_separation,
                    amplitude,
                } => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    random_signal(&mut rng, *k, *period, *min_separation, *amplitude).ok_or_else(|| {
                        vec![Issue {
                            pointer: "/signal/min_separation".into(),
                            message: format!(
                                "no admissible spike draw after {MAX_ATTEMPTS} attempts (trial {index})"
                            ),
                        }]
                    })?
                }
            };
            Ok(Prepared { index, seed, truth })
        })
        .collect()
}

fn add_noise(values: &mut [Complex64], sigma: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let s = sigma / 2f64.sqrt();
    for v in values {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *v += Complex64::new(re, im) * s;
    }
}

fn errors(truth: &SparseSignal, est: &RecoveryResult) -> (f64, f64) {
    let tl = truth.locations();
    let el = est.locations();
    let pairs = match_spikes(&tl, &el, truth.period);
    let mut t_err: f64 = 0.0;
    let mut c_err: f64 = 0.0;
    for (i, &j) in pairs.iter().enumerate() {
        t_err = t_err.max(circular_distance(tl[j], el[i], truth.period));
        let c = truth.spikes[j].c;
        c_err = c_err.max((est.spikes[i].c - c).norm() / c.norm());
    }
    if el.len() != tl.len() {
        t_err = f64::MAX;
        c_err = f64::MAX;
    }
    (t_err, c_err)
}

fn run_trial(v: &Validated, p: &Prepared) -> TrialRecord {
    let cfg = &v.config;
    let period = p.truth.period;
    let (delta, count, k) = (cfg.sampling.delta, cfg.sampling.count, cfg.recovery.k);
    let opts = RecoveryOptions {
        noisy: cfg.noise.enabled && cfg.noise.sigma > 0.0,
        ..Default::default()
    };
    let noisy = |mut vals: Vec<Complex64>| {
        if cfg.noise.enabled {
            add_noise(&mut vals, cfg.noise.sigma, p.seed);
        }
        vals
    };
    let params = &v.params;

    let (measurements, outcome): (Measurements, saftkit::Result<RecoveryResult>) = match (&v.kernel, cfg.recovery.mode) {
        (PreparedKernel::Bandlimited(spec) | PreparedKernel::TimeLimited(spec), _) => {
            match simulate_measurements(&p.truth, params, spec, delta, count) {
                Ok(y) => {
                    let y = SampleSet { delta, values: noisy(y.values) };
                    let r = recover_sparse(&y, params, spec, period, k, &opts);
                    (Measurements { omega: None, delta, values: y.values }, r)
                }
                Err(e) => (empty(delta), Err(e.at(Stage::Acquisition))),
            }
        }
        (PreparedKernel::Window(w), mode) => {
            let rows: Vec<i64> = if mode == Mode::Gabor2 {
                cfg.recovery.rows.clone().unwrap_or_default()
            } else {
                vec![1]
            };
            match simulate_gabor_measurements(&p.truth, params, w, delta, count, &rows) {
                Ok(mut g) => {
                    let mut flat: Vec<Complex64> = g.values.iter().flatten().copied().collect();
                    flat = noisy(flat);
                    let width = g.omegas.len();
                    for (i, row) in g.values.iter_mut().enumerate() {
                        row.copy_from_slice(&flat[i * width..(i + 1) * width]);
                    }
                    let first = Measurements {
                        omega: Some(rows[0] as f64 * fundamental(params, period)),
                        delta,
                        values: g.values.iter().map(|r| r[0]).collect(),
                    };
                    let r = if mode == Mode::Gabor2 {
                        recover_gabor_case2(&g, params, period, k, w, &opts)
                    } else {
                        g.column(0)
                            .map_err(|e| e.at(Stage::Gabor))
                            .and_then(|col| recover_gabor_case1(&col, params, period, k, w, &opts))
                    };
                    (first, r)
                }
                Err(e) => (empty(delta), Err(e.at(Stage::Acquisition))),
            }
        }
    };
    let outcome = match outcome {
        Ok(result) => {
            let (t_err, c_err) = errors(&p.truth, &result);
            let success = t_err <= cfg.recovery.tolerance * period && c_err <= cfg.recovery.amplitude_tolerance;
            Outcome::Ok {
                result,
                max_t_error: t_err,
                max_rel_c_error: c_err,
                success,
            }
        }
        Err(e) => stage_error(&e),
    };
    TrialRecord {
        index: p.index,
        seed: p.seed,
        truth: p.truth.clone(),
        measurements,
        outcome,
    }
}

fn empty(delta: f64) -> Measurements {
    Measurements {
        omega: None,
        delta,
        values: Vec::new(),
    }
}

fn stage_error(e: &SaftError) -> Outcome {
    Outcome::Error {
        stage: e.stage(),
        kind: e.kind().to_string(),
        message: e.to_string(),
    }
}

pub fn aggregate(trials: &[TrialRecord], tolerance: f64, amplitude_tolerance: f64) -> Aggregates {
    let mut agg = Aggregates {
        trials: trials.len(),
        succeeded: 0,
        failed: 0,
        stage_errors: 0,
        success_rate: 0.0,
        tolerance,
        amplitude_tolerance,
        max_t_error: None,
        max_rel_c_error: None,
    };
    for t in trials {
        match &t.outcome {
            Outcome::Ok {
                max_t_error,
                max_rel_c_error,
                success,
                ..
            } => {
                if *success {
                    agg.succeeded += 1;
                } else {
                    agg.failed += 1;
                }
                agg.max_t_error = Some(agg.max_t_error.map_or(*max_t_error, |m| m.max(*max_t_error)));
                agg.max_rel_c_error =
                    Some(agg.max_rel_c_error.map_or(*max_rel_c_error, |m| m.max(*max_rel_c_error)));
            }
            Outcome::Error { .. } => {
                agg.failed += 1;
                agg.stage_errors += 1;
            }
        }
    }
    if !trials.is_empty() {
        agg.success_rate = agg.succeeded as f64 / trials.len() as f64;
    }
    agg
}

/// Timing facts kept apart from the deterministic report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMetadata {
    pub wall_time_s: f64,
    pub jobs: usize,
}

/// Run every trial with at most `jobs` worker threads.
pub fn run_experiment(v: &Validated, jobs: usize) -> Result<(ExperimentReport, RunMetadata), Vec<Issue>> {
    let start = Instant::now();
    let prepared = prepare(v)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("thread pool");
    let trials: Vec<TrialRecord> = pool.install(|| prepared.par_iter().map(|p| run_trial(v, p)).collect());
    let cfg = &v.config;
    let report = ExperimentReport {
        tool: ToolInfo {
            name: "saftkit".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            library_version: saftkit::VERSION.into(),
        },
        config: v.echo.clone(),
        seeds: SeedInfo {
            base: cfg.seed,
            trials: prepared.iter().map(|p| p.seed).collect(),
        },
        aggregates: aggregate(&trials, cfg.recovery.tolerance, cfg.recovery.amplitude_tolerance),
        trials,
    };
    Ok((
        report,
        RunMetadata {
            wall_time_s: start.elapsed().as_secs_f64(),
            jobs: jobs.max(1),
        },
    ))
}
