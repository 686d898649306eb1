use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::*;
use crate::cube::{AbundanceSet, EndmemberMatrix, HsiCube};
use crate::rng::stream_rng;

fn random_m(bands: usize, p: usize, seed: u64) -> EndmemberMatrix {
    let mut rng = stream_rng(seed, 40);
    let cols: Vec<Vec<f64>> = (0..p).map(|_| (0..bands).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
    EndmemberMatrix::from_columns_unnamed(&cols).unwrap()
}

fn random_simplex(p: usize, rng: &mut impl Rng) -> Vec<f64> {
    let e: Vec<f64> = (0..p).map(|_| -libm::log(rng.random_range(1e-9..1.0))).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

fn objective(m: &EndmemberMatrix, x: &[f64], a: &[f64]) -> f64 {
    m.mix_linear(a).iter().zip(x).map(|(y, x)| (y - x) * (y - x)).sum::<f64>()
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[piv][c].abs() < 1e-11 {
            return None;
        }
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            let pivot_row = a[c].clone();
            for (x, p) in a[r][c..].iter_mut().zip(&pivot_row[c..]) {
                *x -= f * p;
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        x[r] = (b[r] - (r + 1..n).map(|k| a[r][k] * x[k]).sum::<f64>()) / a[r][r];
    }
    Some(x)
}

/// Exact minimum of `½‖x − Ma‖² + λ·Σa` over `a ≥ 0` (optionally `Σa = 1`)
/// by enumerating supports and solving each face's KKT system.
fn support_oracle(m: &EndmemberMatrix, x: &[f64], lambda: f64, sum_to_one: bool) -> f64 {
    let p = m.endmembers();
    let cols: Vec<Vec<f64>> = (0..p).map(|j| m.column(j)).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut best = if sum_to_one { f64::INFINITY } else { 0.5 * dot(x, x) };
    for mask in 1u32..(1 << p) {
        let s: Vec<usize> = (0..p).filter(|j| mask >> j & 1 == 1).collect();
        let k = s.len();
        let n = if sum_to_one { k + 1 } else { k };
        let mut a = vec![vec![0.0; n]; n];
        let mut b = vec![0.0; n];
        for (r, &i) in s.iter().enumerate() {
            for (c, &j) in s.iter().enumerate() {
                a[r][c] = dot(&cols[i], &cols[j]);
            }
            b[r] = dot(&cols[i], x) - lambda;
            if sum_to_one {
                a[r][k] = 1.0;
                a[k][r] = 1.0;
            }
        }
        if sum_to_one {
            b[k] = 1.0;
        }
        let Some(sol) = solve_dense(a, b) else { continue };
        if sol[..k].iter().any(|&v| v < 0.0) {
            continue;
        }
        let mut full = vec![0.0; p];
        for (&i, &v) in s.iter().zip(&sol) {
            full[i] = v;
        }
        let f = 0.5 * objective(m, x, &full) + lambda * full.iter().sum::<f64>();
        best = best.min(f);
    }
    best
}

#[test]
fn fcls_pure_pixels_and_interior_recovery() {
    for p in 2..=5 {
        let m = random_m(30, p, p as u64);
        for j in 0..p {
            let a = fcls_pixel(&m.column(j), &m).unwrap();
            for (i, v) in a.iter().enumerate() {
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-6);
            }
        }
        let mut rng = stream_rng(p as u64, 41);
        for _ in 0..20 {
            let truth = random_simplex(p, &mut rng);
            let x = m.mix_linear(&truth);
            let solver = Fcls::new(&m).unwrap();
            let (a, d) = solver.solve(&x).unwrap();
            for (u, v) in a.iter().zip(&truth) {
                assert!((u - v).abs() < 1e-6, "{a:?} vs {truth:?}");
            }
            assert!(d.kkt_residual < KKT_TOLERANCE);
            assert!(objective(&m, &x, &a).sqrt() < 1e-6);
        }
    }
}

#[test]
fn fcls_matches_simplex_grid_oracle() {
    let mut rng = stream_rng(7, 42);
    for case in 0..5 {
        let m = random_m(50, 3, 100 + case);
        let x: Vec<f64> = (0..50).map(|_| rng.random_range(0.0..1.0)).collect();
        let a = fcls_pixel(&x, &m).unwrap();
        let steps = 1000;
        let (mut best, mut arg) = (f64::INFINITY, [0.0; 3]);
        for i in 0..=steps {
            for j in 0..=steps - i {
                let g = [i as f64 / steps as f64, j as f64 / steps as f64, (steps - i - j) as f64 / steps as f64];
                let f = objective(&m, &x, &g);
                if f < best {
                    (best, arg) = (f, g);
                }
            }
        }
        for (u, v) in a.iter().zip(&arg) {
            assert!((u - v).abs() < 2e-3, "case {case}: {a:?} vs grid {arg:?}");
        }
    }
}

#[test]
fn fcls_output_constraints_and_residual_on_noisy_data() {
    let m = random_m(20, 4, 9);
    let mut rng = stream_rng(9, 43);
    for _ in 0..200 {
        let x: Vec<f64> = m.mix_linear(&random_simplex(4, &mut rng)).iter().map(|v| v + rng.random_range(-0.3..0.3)).collect();
        let (a, d) = Fcls::new(&m).unwrap().solve(&x).unwrap();
        assert!(a.iter().all(|&v| v >= 0.0));
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        assert!(d.kkt_residual < KKT_TOLERANCE, "{d:?}");
        // No simplex point does better.
        assert!(objective(&m, &x, &a) <= 2.0 * support_oracle(&m, &x, 0.0, true) + 1e-10);
    }
}

#[test]
fn fcls_rejects_rank_deficient_and_mismatched_input() {
    let c = vec![0.1, 0.2, 0.3];
    let m = EndmemberMatrix::from_columns_unnamed(&[c.clone(), c.iter().map(|v| 2.0 * v).collect()]).unwrap();
    assert!(matches!(Fcls::new(&m), Err(crate::Error::Conditioning(_))));
    let wide = random_m(2, 3, 1);
    assert!(matches!(Fcls::new(&wide), Err(crate::Error::Conditioning(_))));
    let m = random_m(5, 2, 1);
    assert!(matches!(fcls_pixel(&[0.1; 4], &m), Err(crate::Error::Dimension(_))));
    assert!(matches!(fcls_unmix(&HsiCube::zeros(2, 2, 4).unwrap(), &m), Err(crate::Error::Dimension(_))));
}

fn linear_cube(m: &EndmemberMatrix, rows: usize, cols: usize, seed: u64) -> (HsiCube, AbundanceSet) {
    let mut rng = stream_rng(seed, 44);
    let mut a = Vec::new();
    let mut x = Vec::new();
    for _ in 0..rows * cols {
        let v = random_simplex(m.endmembers(), &mut rng);
        x.extend(m.mix_linear(&v));
        a.extend(v);
    }
    (HsiCube::new(rows, cols, m.bands(), x).unwrap(), AbundanceSet::new(rows, cols, m.endmembers(), a).unwrap())
}

#[test]
fn bootstrap_labels_are_deterministic_and_exact_on_clean_data() {
    let m = random_m(16, 3, 5);
    let (cube, truth) = linear_cube(&m, 6, 5, 5);
    let a = bootstrap_labels(&cube, &m).unwrap();
    assert_eq!(a, bootstrap_labels(&cube, &m).unwrap());
    a.validate().unwrap();
    for (u, v) in a.data().iter().zip(truth.data()) {
        assert!((u - v).abs() < 1e-6);
    }
}

#[test]
fn sunsal_without_sparsity_matches_fcls() {
    let m = random_m(12, 4, 11);
    let (clean, _) = linear_cube(&m, 5, 4, 11);
    let mut rng = stream_rng(11, 45);
    let noisy = HsiCube::new(5, 4, 12, clean.data().iter().map(|v| v + rng.random_range(-0.05..0.05)).collect()).unwrap();
    let params = AdmmParams { lambda: 0.0, max_iters: 5000, primal_tol: 1e-9, dual_tol: 1e-9, ..AdmmParams::default() };
    for cube in [&clean, &noisy] {
        let s = sunsal_unmix(cube, &m, &params).unwrap();
        let f = fcls_unmix(cube, &m).unwrap();
        for (u, v) in s.abundances.data().iter().zip(f.data()) {
            assert!((u - v).abs() < 1e-4, "{u} vs {v}");
        }
    }
}

#[test]
fn sunsal_large_lambda_drives_abundances_to_zero() {
    let m = random_m(10, 3, 12);
    let (cube, _) = linear_cube(&m, 3, 3, 12);
    let params = AdmmParams { lambda: 1e3, sum_to_one: false, ..AdmmParams::default() };
    let s = sunsal_unmix(&cube, &m, &params).unwrap();
    for i in 0..s.abundances.n_pixels() {
        assert!(s.abundances.pixel(i).iter().map(|v| v.abs()).sum::<f64>() < 1e-6);
    }
}

#[test]
fn sunsal_objective_matches_support_oracle() {
    let mut rng = stream_rng(13, 46);
    for case in 0..10 {
        let lib = random_m(4, 5, 200 + case);
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..1.0)).collect();
        for (lambda, sum_to_one) in [(0.01, true), (0.05, false), (0.0, false)] {
            let params = AdmmParams { lambda, sum_to_one, max_iters: 20000, primal_tol: 1e-10, dual_tol: 1e-10, ..AdmmParams::default() };
            let (a, _) = Sunsal::new(&lib, params).unwrap().solve(&x, None).unwrap();
            let got = 0.5 * objective(&lib, &x, &a) + lambda * a.iter().sum::<f64>();
            let want = support_oracle(&lib, &x, lambda, sum_to_one);
            assert!((got - want).abs() < 1e-6, "case {case} λ={lambda} asc={sum_to_one}: {got} vs {want}");
        }
    }
}

#[test]
fn sunsal_converges_on_random_small_instances_with_monotone_residual() {
    let mut rng = stream_rng(14, 47);
    let mut unconverged = 0;
    for case in 0..100 {
        let p = 2 + case % 4;
        let m = random_m(8, p, 300 + case as u64);
        let x = m.mix_linear(&random_simplex(p, &mut rng));
        let mut trace = Vec::new();
        let (_, d) = Sunsal::new(&m, AdmmParams::default()).unwrap().solve(&x, Some(&mut trace)).unwrap();
        if !d.converged {
            unconverged += 1;
        }
        assert!(d.iterations <= 1000);
        for w in trace[5.min(trace.len())..].windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9) + 1e-15, "case {case}: residual rose {} -> {}", w[0], w[1]);
        }
    }
    assert_eq!(unconverged, 0);
}

#[test]
fn admm_params_validate() {
    assert!(AdmmParams { rho: 0.0, ..AdmmParams::default() }.validate().is_err());
    assert!(AdmmParams { lambda: -1.0, ..AdmmParams::default() }.validate().is_err());
    assert!(AdmmParams::default().validate().is_ok());
}
