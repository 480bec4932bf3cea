//! Small numeric helpers shared across modules.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub const J: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Normalized sinc, sin(πx)/(πx).
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        let y = std::f64::consts::PI * x;
        1.0 - y * y / 6.0
    } else {
        let y = std::f64::consts::PI * x;
        y.sin() / y
    }
}

/// e^{jθ}.
pub fn cis(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

/// Trapezoid weights (1/2 at both ends) for `n` nodes.
pub fn trapezoid_weights(n: usize) -> Vec<f64> {
    let mut w = vec![1.0; n];
    if n > 1 {
        w[0] = 0.5;
        w[n - 1] = 0.5;
    }
    w
}

/// Trapezoid rule on arbitrary increasing nodes.
pub fn trapezoid(xs: &[f64], ys: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 1..xs.len() {
        acc += (ys[i] + ys[i - 1]) * (0.5 * (xs[i] - xs[i - 1]));
    }
    acc
}

/// Distance between two points on a circle of circumference `period`.
pub fn circular_distance(x: f64, y: f64, period: f64) -> f64 {
    let d = (x - y).rem_euclid(period);
    d.min(period - d)
}

/// Wrap `x` into `[0, period)`.
pub fn wrap(x: f64, period: f64) -> f64 {
    let w = x.rem_euclid(period);
    if w >= period {
        0.0
    } else {
        w
    }
}

pub fn max_abs(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// ‖a − b‖∞ / ‖b‖∞ (absolute when `b` is identically zero).
pub fn rel_sup_error(a: &[Complex64], b: &[Complex64]) -> f64 {
    let scale = max_abs(b);
    let err = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    if scale > 0.0 {
        err / scale
    } else {
        err
    }
}

pub fn l2_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Least-squares solve through the SVD. Returns the solution, the singular
/// values (descending) and the 2-norm condition number.
pub(crate) fn lstsq(
    a: &DMatrix<Complex64>,
    b: &[Complex64],
    rank_tol: f64,
) -> (Vec<Complex64>, Vec<f64>, f64) {
    let svd = a.clone().svd(true, true);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    let smax = sv.first().copied().unwrap_or(0.0);
    let smin = sv.last().copied().unwrap_or(0.0);
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let rhs = DMatrix::from_column_slice(b.len(), 1, b);
    let x = svd
        .solve(&rhs, rank_tol * smax)
        .expect("svd computed with u and v");
    (x.iter().copied().collect(), sv, cond)
}

/// Numerical rank: singular values above `rel_tol · σ_max`.
pub(crate) fn numerical_rank(sv: &[f64], rel_tol: f64) -> usize {
    let smax = sv.iter().copied().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}
