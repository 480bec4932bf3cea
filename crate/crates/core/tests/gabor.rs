use std::f64::consts::PI;

use num_complex::Complex64;
use saftkit::acquisition::{
    gabor_inverse, gabor_saft, gabor_window, simulate_gabor_measurements, window_pairing,
};
use saftkit::math::{cis, rel_sup_error};
use saftkit::recovery::{recover_gabor_case1, recover_gabor_case2};
use saftkit::{FourierCoeffs, GridSignal, SaftParams, SparseSignal};

fn gaussian(t: f64) -> Complex64 {
    Complex64::new((-t * t).exp(), 0.0)
}

#[test]
fn windowed_round_trip() {
    for p in [
        SaftParams::ft(),
        SaftParams::from_abd(0.5, 1.5, 0.8, 0.4, -0.2).unwrap(),
        // Descending frequency grid.
        SaftParams::from_abd(0.3, -1.2, 0.6, -0.5, 0.1).unwrap(),
    ] {
        let f = GridSignal::from_fn(-7.0, 0.02, 701, |t| {
            Complex64::new((-0.5 * (t - 0.4) * (t - 0.4)).exp(), 0.3 * t * (-0.5 * t * t).exp())
        })
        .unwrap();
        let grid = GridSignal::from_fn(-6.0, 0.01, 1201, |_| Complex64::new(0.0, 0.0)).unwrap();
        let norm = window_pairing(&p, gaussian, gaussian, &grid);
        let synth = |t: f64| gaussian(t) / norm;
        let pairing = window_pairing(&p, gaussian, synth, &grid);

        let taus: Vec<f64> = (0..=200).map(|i| -5.0 + 0.05 * i as f64).collect();
        let omegas: Vec<f64> = (0..=500).map(|i| p.p() + p.b() * (-25.0 + 0.1 * i as f64)).collect();
        let v = gabor_saft(&f, gaussian, &p, &taus, &omegas).unwrap();
        let times: Vec<f64> = (0..=40).map(|i| -2.0 + 0.1 * i as f64).collect();
        let rec = gabor_inverse(&p, &v, synth, pairing, &times).unwrap();
        let want: Vec<Complex64> = times.iter().map(|&t| f.interpolate(t).unwrap()).collect();
        let err = rel_sup_error(&rec, &want);
        assert!(err < 1e-4, "{err}");
    }
}

fn s2() -> SparseSignal {
    SparseSignal::from_pairs(1.0, &[(0.25, Complex64::new(1.0, 0.0)), (0.6, Complex64::new(-0.5, 0.0))])
        .unwrap()
}

fn gaussian_window(m: usize) -> FourierCoeffs {
    FourierCoeffs::from_fn(m, |k| Complex64::new((-(k * k) as f64 / 8.0).exp(), 0.0))
}

#[test]
fn single_spike_under_ft() {
    let s = SparseSignal::from_pairs(1.0, &[(0.3, Complex64::new(0.7, -0.2))]).unwrap();
    let p = SaftParams::ft();
    let w = gaussian_window(2);
    let g = simulate_gabor_measurements(&s, &p, &w, 0.2, 5, &[1]).unwrap();
    let r = recover_gabor_case1(&g.column(0).unwrap(), &p, 1.0, 1, &w, &Default::default()).unwrap();
    assert!((r.spikes[0].t - 0.3).abs() < 1e-8);
    assert!((r.spikes[0].c - Complex64::new(0.7, -0.2)).norm() < 1e-8);
}

#[test]
fn both_cases_recover_s2() {
    for p in [SaftParams::ft(), SaftParams::from_abd(1.0, 2.0, 3.0, 0.5, -0.3).unwrap()] {
        let w = gaussian_window(4);
        let col = simulate_gabor_measurements(&s2(), &p, &w, 1.0 / 9.0, 9, &[1]).unwrap();
        let one = recover_gabor_case1(&col.column(0).unwrap(), &p, 1.0, 2, &w, &Default::default()).unwrap();
        let grid = simulate_gabor_measurements(&s2(), &p, &w, 1.0 / 9.0, 9, &[-1, 0, 1, 2]).unwrap();
        let two = recover_gabor_case2(&grid, &p, 1.0, 2, &w, &Default::default()).unwrap();
        for r in [one, two] {
            for (a, b) in r.spikes.iter().zip(&s2().spikes) {
                assert!((a.t - b.t).abs() < 1e-6);
                assert!((a.c - b.c).norm() < 1e-6 * b.c.norm());
            }
        }
    }
}

#[test]
fn weighted_row_amplitudes_under_ft() {
    // Q ≡ 0 under the plain transform, so the column weights are the
    // amplitudes times e^{−jω₀t}.
    let p = SaftParams::ft();
    let w = gaussian_window(3);
    let g = simulate_gabor_measurements(&s2(), &p, &w, 1.0 / 7.0, 7, &[1]).unwrap();
    for (n, row) in g.values.iter().enumerate() {
        let tau = n as f64 / 7.0;
        let want: Complex64 = s2()
            .spikes
            .iter()
            .map(|sp| {
                sp.c * gabor_window(&w, 1.0, sp.t - tau)
                    * cis(-2.0 * PI * sp.t)
            })
            .sum::<Complex64>()
            * p.kernel_constant()
            * p.phi_factor(2.0 * PI).conj();
        assert!((row[0] - want).norm() < 1e-12);
    }
}
