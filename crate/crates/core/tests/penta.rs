mod common;

use std::f64::consts::TAU;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tilestencil::penta::{
    build_hyperdiffusion_operator, deinterleave, interleave, solve_batch, solve_periodic_batch, Axis,
    PentaBatch, RhsBatch,
};
use tilestencil::Grid2D;

use common::dense_solve;

/// Dense copy of system `b`, wrapping out-of-range columns when periodic.
fn dense(m: &PentaBatch, b: usize) -> Vec<f64> {
    let n = m.n();
    let mut a = vec![0.0; n * n];
    for r in 0..n {
        for (k, c) in m.row(b, r).iter().enumerate() {
            let col = r as i64 + k as i64 - 2;
            if (0..n as i64).contains(&col) {
                a[r * n + col as usize] += c;
            } else if m.is_periodic() {
                a[r * n + col.rem_euclid(n as i64) as usize] += c;
            }
        }
    }
    a
}

fn random_system(rng: &mut ChaCha8Rng, batch: usize, n: usize, periodic: bool) -> (PentaBatch, RhsBatch) {
    let mut m = PentaBatch::new(batch, n, periodic).unwrap();
    let mut rhs = RhsBatch::zeros(batch, n).unwrap();
    for b in 0..batch {
        for r in 0..n {
            let mut row: [f64; 5] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let off: f64 = row.iter().enumerate().filter(|(k, _)| *k != 2).map(|(_, v)| v.abs()).sum();
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            row[2] = sign * (off + rng.random_range(0.5..2.0));
            m.set_row(b, r, row);
            rhs.set(b, r, rng.random_range(-10.0..10.0));
        }
    }
    (m, rhs)
}

fn solve(m: &PentaBatch, rhs: &RhsBatch) -> RhsBatch {
    if m.is_periodic() {
        solve_periodic_batch(m, rhs).unwrap()
    } else {
        solve_batch(m, rhs).unwrap()
    }
}

fn residual(m: &PentaBatch, x: &RhsBatch, rhs: &RhsBatch) -> f64 {
    let ax = m.apply(x).unwrap();
    let num = ax.values().iter().zip(rhs.values()).fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
    let den = rhs.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    num / den
}

#[test]
fn random_systems_match_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..100 {
        let n = 5 + case % 28;
        let periodic = case % 2 == 0;
        let (m, rhs) = random_system(&mut rng, 3, n, periodic);
        let x = solve(&m, &rhs);
        assert!(residual(&m, &x, &rhs) <= 1e-10, "case {case}");
        for b in 0..3 {
            let col: Vec<f64> = (0..n).map(|r| rhs.get(b, r)).collect();
            let reference = dense_solve(dense(&m, b), col);
            let scale = reference.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for r in 0..n {
                assert!((x.get(b, r) - reference[r]).abs() <= 1e-10 * scale, "case {case}");
            }
        }
    }
}

#[test]
fn small_non_periodic_systems_are_tight() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (m, rhs) = random_system(&mut rng, 3, 8, false);
    let x = solve_batch(&m, &rhs).unwrap();
    for b in 0..3 {
        let col: Vec<f64> = (0..8).map(|r| rhs.get(b, r)).collect();
        let reference = dense_solve(dense(&m, b), col);
        let scale = reference.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for r in 0..8 {
            assert!((x.get(b, r) - reference[r]).abs() <= 1e-12 * scale);
        }
    }
}

#[test]
fn zero_corners_match_non_periodic_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (m, rhs) = random_system(&mut rng, 4, 12, false);
    let mut p = PentaBatch::new(4, 12, true).unwrap();
    for b in 0..4 {
        for r in 0..12 {
            let mut row = m.row(b, r);
            if r < 2 {
                row[0] = 0.0;
            }
            if r == 0 {
                row[1] = 0.0;
            }
            if r >= 10 {
                row[4] = 0.0;
            }
            if r == 11 {
                row[3] = 0.0;
            }
            p.set_row(b, r, row);
        }
    }
    let a = solve_batch(&m, &rhs).unwrap();
    let c = solve_periodic_batch(&p, &rhs).unwrap();
    let scale = a.values().iter().fold(0.0f64, |s, v| s.max(v.abs()));
    for (x, y) in a.values().iter().zip(c.values()) {
        assert!((x - y).abs() <= 1e-14 * scale);
    }
}

#[test]
fn circulant_eigenvector() {
    let (n, sigma) = (16, 0.1);
    let m = build_hyperdiffusion_operator(sigma, n, 2, true).unwrap();
    let k = TAU / n as f64;
    let lambda = 1.0 + sigma * (6.0 - 8.0 * k.cos() + 2.0 * (2.0 * k).cos());
    // Real and imaginary parts of e^{ikx} as two systems.
    let mut rhs = RhsBatch::zeros(2, n).unwrap();
    for r in 0..n {
        rhs.set(0, r, (k * r as f64).cos());
        rhs.set(1, r, (k * r as f64).sin());
    }
    let x = solve_periodic_batch(&m, &rhs).unwrap();
    for b in 0..2 {
        for r in 0..n {
            assert!((x.get(b, r) - rhs.get(b, r) / lambda).abs() < 1e-14);
        }
    }
}

#[test]
fn hyperdiffusion_rows() {
    let m = build_hyperdiffusion_operator(0.25, 8, 2, false).unwrap();
    assert_eq!(m.row(1, 4), [0.25, -1.0, 2.5, -1.0, 0.25]);
    for (sigma, tol) in [(0.25, 0.0), (0.37, 1e-15)] {
        let m = build_hyperdiffusion_operator(sigma, 9, 3, true).unwrap();
        for b in 0..3 {
            for r in 0..9 {
                assert!((m.row(b, r).iter().sum::<f64>() - 1.0).abs() <= tol);
            }
        }
    }
    let id = build_hyperdiffusion_operator(0.0, 7, 2, true).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let rhs = RhsBatch::from_values(2, 7, (0..14).map(|_| rng.random::<f64>()).collect()).unwrap();
    assert_eq!(solve_periodic_batch(&id, &rhs).unwrap(), rhs);
}

#[test]
fn row_sum_one_preserves_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 32;
    let m = build_hyperdiffusion_operator(3.7, n, 5, true).unwrap();
    let rhs = RhsBatch::from_values(5, n, (0..5 * n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
    let x = solve_periodic_batch(&m, &rhs).unwrap();
    for b in 0..5 {
        let mb: f64 = (0..n).map(|r| rhs.get(b, r)).sum::<f64>() / n as f64;
        let mx: f64 = (0..n).map(|r| x.get(b, r)).sum::<f64>() / n as f64;
        let scale = (0..n).map(|r| rhs.get(b, r).abs()).fold(0.0, f64::max);
        assert!((mb - mx).abs() <= 1e-13 * scale, "{mb} {mx}");
    }
}

#[test]
fn interleave_layout() {
    let g = Grid2D::from_values(3, 2, 1.0, 1.0, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
    assert_eq!(interleave(&g, Axis::X).values(), &[1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
    let row = Grid2D::from_values(5, 1, 1.0, 1.0, vec![5.0, 4.0, 3.0, 2.0, 1.0]).unwrap();
    assert_eq!(interleave(&row, Axis::X).values(), row.values());
}

proptest! {
    #[test]
    fn interleave_round_trips(nx in 1usize..12, ny in 1usize..12, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Grid2D::from_values(nx, ny, 0.3, 0.7, (0..nx * ny).map(|_| rng.random()).collect()).unwrap();
        for axis in [Axis::X, Axis::Y] {
            let back = deinterleave(&interleave(&g, axis), axis, 0.3, 0.7).unwrap();
            prop_assert_eq!(&back, &g);
        }
    }

    #[test]
    fn permuting_systems_permutes_solutions(seed in any::<u64>(), n in 5usize..20, periodic in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let batch = 4;
        let (m, rhs) = random_system(&mut rng, batch, n, periodic);
        let perm = [2usize, 0, 3, 1];
        let mut pm = PentaBatch::new(batch, n, periodic).unwrap();
        let mut pr = RhsBatch::zeros(batch, n).unwrap();
        for (dst, &src) in perm.iter().enumerate() {
            for r in 0..n {
                pm.set_row(dst, r, m.row(src, r));
                pr.set(dst, r, rhs.get(src, r));
            }
        }
        let x = solve(&m, &rhs);
        let px = solve(&pm, &pr);
        for (dst, &src) in perm.iter().enumerate() {
            for r in 0..n {
                prop_assert_eq!(px.get(dst, r).to_bits(), x.get(src, r).to_bits());
            }
        }
    }

    #[test]
    fn solve_is_linear(seed in any::<u64>(), n in 5usize..24, periodic in any::<bool>(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (m, b1) = random_system(&mut rng, 2, n, periodic);
        let b2 = RhsBatch::from_values(2, n, (0..2 * n).map(|_| rng.random_range(-5.0..5.0)).collect()).unwrap();
        let combo = RhsBatch::from_values(
            2, n,
            b1.values().iter().zip(b2.values()).map(|(p, q)| alpha * p + beta * q).collect(),
        ).unwrap();
        let (x1, x2, xc) = (solve(&m, &b1), solve(&m, &b2), solve(&m, &combo));
        let scale = 1e-300 + xc.values().iter().fold(0.0f64, |a, v| a.max(v.abs()))
            .max(x1.values().iter().fold(0.0f64, |a, v| a.max(v.abs())) * alpha.abs())
            .max(x2.values().iter().fold(0.0f64, |a, v| a.max(v.abs())) * beta.abs());
        for k in 0..2 * n {
            let lin = alpha * x1.values()[k] + beta * x2.values()[k];
            prop_assert!((xc.values()[k] - lin).abs() <= 1e-12 * scale);
        }
    }
}
