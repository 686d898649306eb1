use alloc::vec::Vec;

/// Gradients smaller than this in magnitude are compared in absolute terms.
pub const GRAD_CHECK_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// `max_i |analytic_i − numeric_i| / max(|analytic_i|, |numeric_i|, GRAD_CHECK_FLOOR)`.
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub numeric: Vec<f64>,
    pub passed: bool,
}

/// Compares `analytic` with central differences of `f` around `point`.
pub fn grad_check<F>(f: F, analytic: &[f64], point: &[f64], eps: f64, tolerance: f64) -> GradCheckReport
where
    F: Fn(&[f64]) -> f64,
{
    let mut x = point.to_vec();
    let mut numeric = Vec::with_capacity(point.len());
    let mut worst = (0.0f64, 0usize);
    for i in 0..point.len() {
        x[i] = point[i] + eps;
        let up = f(&x);
        x[i] = point[i] - eps;
        let down = f(&x);
        x[i] = point[i];
        let n = (up - down) / (2.0 * eps);
        let a = analytic.get(i).copied().unwrap_or(f64::NAN);
        let denom = a.abs().max(n.abs()).max(GRAD_CHECK_FLOOR);
        let rel = (a - n).abs() / denom;
        // NaN compares false, so track it explicitly.
        if rel.is_nan() || rel > worst.0 {
            worst = (if rel.is_nan() { f64::INFINITY } else { rel }, i);
        }
        numeric.push(n);
    }
    let passed = analytic.len() == point.len() && worst.0 < tolerance;
    GradCheckReport { max_rel_error: worst.0, worst_index: worst.1, numeric, passed }
}
