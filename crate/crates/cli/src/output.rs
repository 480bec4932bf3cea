//! Report files and plot data.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use saftkit::math::circular_distance;
use saftkit::recovery::match_spikes;
use serde::Serialize;

use crate::experiment::{ExperimentReport, RunMetadata};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PlotKind {
    Spikes,
    Spectrum,
    Measurements,
}

impl PlotKind {
    pub const ALL: [PlotKind; 3] = [PlotKind::Spikes, PlotKind::Spectrum, PlotKind::Measurements];

    pub fn file_name(self) -> &'static str {
        match self {
            PlotKind::Spikes => "plot_spikes.dat",
            PlotKind::Spectrum => "plot_spectrum.dat",
            PlotKind::Measurements => "plot_measurements.dat",
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> io::Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(v).map_err(io::Error::other)?;
    out.push(b'\n');
    Ok(out)
}

#[derive(Serialize)]
struct SpikeRow {
    trial: usize,
    k: usize,
    t_true: Option<f64>,
    t_est: f64,
    c_re: f64,
    c_im: f64,
    abs_err_t: Option<f64>,
}

/// Per-spike CSV over all successful estimates.
pub fn spikes_csv(report: &ExperimentReport) -> io::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for t in &report.trials {
        let Some(r) = t.result() else { continue };
        let truth = t.truth.locations();
        let pairs = match_spikes(&truth, &r.locations(), r.period);
        for (k, sp) in r.spikes.iter().enumerate() {
            let tt = pairs.get(k).map(|&j| truth[j]);
            w.serialize(SpikeRow {
                trial: t.index,
                k,
                t_true: tt,
                t_est: sp.t,
                c_re: sp.c.re,
                c_im: sp.c.im,
                abs_err_t: tt.map(|x| circular_distance(x, sp.t, r.period)),
            })
            .map_err(io::Error::other)?;
        }
    }
    w.into_inner().map_err(|e| io::Error::other(e.to_string()))
}

/// Whitespace-separated columns with a `#` header line.
pub fn plot_data(report: &ExperimentReport, kind: PlotKind) -> String {
    let mut s = String::new();
    match kind {
        PlotKind::Spikes => {
            s.push_str("# trial k t_true t_est abs_err\n");
            for t in &report.trials {
                let Some(r) = t.result() else { continue };
                let truth = t.truth.locations();
                let pairs = match_spikes(&truth, &r.locations(), r.period);
                for (k, (sp, &j)) in r.spikes.iter().zip(&pairs).enumerate() {
                    let err = circular_distance(truth[j], sp.t, r.period);
                    let _ = writeln!(s, "{} {k} {:?} {:?} {err:?}", t.index, truth[j], sp.t);
                }
            }
        }
        PlotKind::Spectrum => {
            s.push_str("# trial m abs_h\n");
            for t in &report.trials {
                let Some(r) = t.result() else { continue };
                for (m, v) in r.coeffs.iter() {
                    let _ = writeln!(s, "{} {m} {:?}", t.index, v.norm());
                }
            }
        }
        PlotKind::Measurements => {
            s.push_str("# trial n t abs_y arg_y\n");
            for t in &report.trials {
                let d = t.measurements.delta;
                for (n, v) in t.measurements.values.iter().enumerate() {
                    let _ = writeln!(s, "{} {n} {:?} {:?} {:?}", t.index, n as f64 * d, v.norm(), v.arg());
                }
            }
        }
    }
    s
}

/// Write `report.json`, `metadata.json`, `spikes.csv` and the plot files.
pub fn write_outputs(dir: &Path, report: &ExperimentReport, meta: &RunMetadata) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, bytes: &[u8]| -> io::Result<()> {
        let p = dir.join(name);
        fs::write(&p, bytes)?;
        written.push(p);
        Ok(())
    };
    put("report.json", &to_json(report)?)?;
    put("metadata.json", &to_json(meta)?)?;
    put("spikes.csv", &spikes_csv(report)?)?;
    for kind in PlotKind::ALL {
        put(kind.file_name(), plot_data(report, kind).as_bytes())?;
    }
    Ok(written)
}

pub fn read_report(path: &Path) -> io::Result<ExperimentReport> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}
