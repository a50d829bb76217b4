mod common;

use std::f64::consts::TAU;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tilestencil::cahn_hilliard::{assemble_rhs, initial_condition, ChParams, ChSolver, ExecConfig};
use tilestencil::Grid2D;

use common::{bitwise_eq, max_abs_diff};

fn params(n: usize, dt: f64, t_final: f64, nonlinear: bool) -> ChParams {
    let mut p = ChParams::square(n);
    p.dt = dt;
    p.t_final = t_final;
    p.nonlinear = nonlinear;
    p
}

fn field(p: &ChParams, f: impl Fn(f64, f64) -> f64) -> Grid2D {
    Grid2D::from_fn(p.nx, p.ny, p.dx(), p.dy(), f).unwrap()
}

fn random_field(p: &ChParams, rng: &mut ChaCha8Rng, a: f64) -> Grid2D {
    let v = (0..p.nx * p.ny).map(|_| rng.random_range(-a..a)).collect();
    Grid2D::from_values(p.nx, p.ny, p.dx(), p.dy(), v).unwrap()
}

fn negate(g: &Grid2D) -> Grid2D {
    Grid2D::from_values(g.nx(), g.ny(), g.dx(), g.dy(), g.values().iter().map(|v| -v).collect()).unwrap()
}

#[test]
fn negation_equivariance() {
    let p = params(64, 0.01, 1.0, true);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let c = random_field(&p, &mut rng, 0.5);
    let cp = field(&p, |x, y| 0.3 * (x - y).sin());
    let mut a = ChSolver::from_fields(p.clone(), ExecConfig::default(), c.clone(), cp.clone()).unwrap();
    let mut b = ChSolver::from_fields(p, ExecConfig::default(), negate(&c), negate(&cp)).unwrap();
    a.step().unwrap();
    b.step().unwrap();
    assert!(bitwise_eq(b.concentration(), &negate(a.concentration())));
}

/// Per-step amplitude recurrence for the mode `cos(mx x) cos(my y)` with the
/// nonlinear term disabled, built from the one-dimensional discrete symbols.
fn linear_mode_amplitudes(p: &ChParams, mx: f64, my: f64, a0: f64, steps: usize) -> Vec<f64> {
    let (hx, hy) = (p.dx(), p.dy());
    let lap_x = (2.0 * (mx * hx).cos() - 2.0) / (hx * hx);
    let lap_y = (2.0 * (my * hy).cos() - 2.0) / (hy * hy);
    let d4x = (6.0 - 8.0 * (mx * hx).cos() + 2.0 * (2.0 * mx * hx).cos()) / hx.powi(4);
    let d4y = (6.0 - 8.0 * (my * hy).cos() + 2.0 * (2.0 * my * hy).cos()) / hy.powi(4);
    let bih = d4x + 2.0 * lap_x * lap_y + d4y;
    let hyper = 2.0 / 3.0 * p.d * p.gamma * p.dt;
    let lambda = (1.0 + hyper * d4x) * (1.0 + hyper * d4y);
    let (mut prev, mut curr) = (a0, a0);
    let mut out = vec![a0];
    for _ in 0..steps {
        let bar = 2.0 * curr - prev;
        let rhs = -2.0 / 3.0 * (curr - prev) - hyper * bih * bar;
        let next = bar + rhs / lambda;
        prev = curr;
        curr = next;
        out.push(curr);
    }
    out
}

#[test]
fn linear_single_mode_follows_symbol() {
    let p = params(32, 0.05, 1.0, false);
    let (mx, my, eps) = (3.0, 2.0, 1e-3);
    let shape = field(&p, |x, y| (mx * x).cos() * (my * y).cos());
    let c0 = field(&p, |x, y| eps * (mx * x).cos() * (my * y).cos());
    let amps = linear_mode_amplitudes(&p, mx, my, eps, 10);
    let mut s = ChSolver::from_fields(p, ExecConfig::new(3, 2), c0.clone(), c0).unwrap();
    for amp in &amps[1..] {
        s.step().unwrap();
        let c = s.concentration();
        for (v, m) in c.values().iter().zip(shape.values()) {
            assert!((v - amp * m).abs() <= 1e-12 * eps, "{v} vs {}", amp * m);
        }
    }
    assert!(amps[10].abs() < amps[0].abs());
}

#[test]
fn linear_scheme_is_stable_at_large_steps() {
    let n = 64;
    let mut p = params(n, 0.0, 1.0, false);
    p.dt = 10.0 * p.dx();
    p.t_final = 1000.0 * p.dt;
    let c0 = initial_condition(&p).unwrap();
    let max0 = c0.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut s = ChSolver::from_fields(p, ExecConfig::default(), c0.clone(), c0).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        s.step().unwrap();
        worst = s.concentration().values().iter().fold(worst, |m, v| m.max(v.abs()));
    }
    assert!(worst.is_finite() && worst <= 2.0 * max0, "max {worst} vs initial {max0}");
}

fn smooth(p: &ChParams) -> Grid2D {
    field(p, |x, y| 0.3 * x.cos() * y.cos() + 0.2 * (2.0 * x).sin() + 0.1 * (x + y).cos())
}

/// Observed order from three runs at `dt`, `dt/2`, `dt/4`.
fn self_convergence_order(run: impl Fn(f64) -> Grid2D, dt: f64) -> f64 {
    let (a, b, c) = (run(dt), run(dt / 2.0), run(dt / 4.0));
    (max_abs_diff(&a, &b) / max_abs_diff(&b, &c)).log2()
}

#[test]
fn linear_scheme_is_second_order_in_time_with_exact_start() {
    let n = 32;
    let t_final = 0.2;
    let run = |dt: f64| {
        let p = params(n, dt, t_final, false);
        // Each Fourier mode of the linear problem decays as exp(-D gamma |k|^4_h t).
        let decay = |p: &ChParams, mx: f64, my: f64, t: f64| {
            let d4 = |m: f64, h: f64| (6.0 - 8.0 * (m * h).cos() + 2.0 * (2.0 * m * h).cos()) / h.powi(4);
            let lx = |m: f64, h: f64| (2.0 * (m * h).cos() - 2.0) / (h * h);
            let bih = d4(mx, p.dx()) + 2.0 * lx(mx, p.dx()) * lx(my, p.dy()) + d4(my, p.dy());
            (-p.d * p.gamma * bih * t).exp()
        };
        let at = |t: f64| {
            let (a, b, c) = (decay(&p, 1.0, 1.0, t), decay(&p, 2.0, 0.0, t), decay(&p, 1.0, 1.0, t));
            field(&p, |x, y| {
                0.3 * a * x.cos() * y.cos() + 0.2 * b * (2.0 * x).sin() + 0.1 * c * (x + y).cos()
            })
        };
        let mut s = ChSolver::from_fields(p.clone(), ExecConfig::default(), at(0.0), at(-dt)).unwrap();
        s.advance_to_end().unwrap();
        s.concentration().clone()
    };
    let order = self_convergence_order(run, 0.01);
    assert!(order >= 1.8, "observed order {order}");
}

fn run_from_rest(n: usize, dt: f64, t_final: f64, nonlinear: bool) -> Grid2D {
    let p = params(n, dt, t_final, nonlinear);
    let c0 = smooth(&p);
    let mut s = ChSolver::from_fields(p, ExecConfig::default(), c0.clone(), c0).unwrap();
    s.advance_to_end().unwrap();
    s.concentration().clone()
}

#[test]
fn startup_with_repeated_initial_level_is_first_order() {
    // With C^{-1} = C^0 the first step advances by (2/3) dt instead of dt.
    let order = self_convergence_order(|dt| run_from_rest(32, dt, 0.2, false), 0.01);
    assert!((order - 1.0).abs() < 0.02, "observed order {order}");
}

#[test]
fn full_scheme_temporal_order_is_about_one() {
    let order = self_convergence_order(|dt| run_from_rest(32, dt, 0.1, true), 6.25e-4);
    assert!((0.85..1.2).contains(&order), "observed order {order}");
}

#[test]
fn tiles_and_workers_are_bitwise_invariant() {
    let p = params(32, 0.02, 1.0, true);
    let c0 = initial_condition(&p).unwrap();
    let reference = {
        let mut s = ChSolver::from_fields(p.clone(), ExecConfig::default(), c0.clone(), c0.clone()).unwrap();
        for _ in 0..5 {
            s.step().unwrap();
        }
        s.concentration().clone()
    };
    for (tiles, workers) in [(2, 1), (3, 2), (8, 4), (32, 3)] {
        let mut s = ChSolver::from_fields(p.clone(), ExecConfig::new(tiles, workers), c0.clone(), c0.clone()).unwrap();
        for _ in 0..5 {
            s.step().unwrap();
        }
        assert!(bitwise_eq(s.concentration(), &reference), "tiles {tiles} workers {workers}");
    }
}

#[test]
fn mass_is_conserved_over_a_short_run() {
    let mut p = ChParams::square(64);
    p.t_final = 200.0 * p.dt;
    let c0 = initial_condition(&p).unwrap();
    let mean = |g: &Grid2D| g.values().iter().sum::<f64>() / g.len() as f64;
    let mut s = ChSolver::new(p, ExecConfig::default()).unwrap();
    s.advance_to_end().unwrap();
    assert!((mean(s.concentration()) - mean(&c0)).abs() <= 1e-12);
}

/// Straight-line scalar evaluation of the right-hand side at one point.
fn scalar_rhs(c: &Grid2D, cp: &Grid2D, cbar: &Grid2D, p: &ChParams, i: usize, j: usize) -> f64 {
    let (nx, ny) = (c.nx() as i64, c.ny() as i64);
    let at = |g: &Grid2D, di: i64, dj: i64| {
        g.get(
            (i as i64 + di).rem_euclid(nx) as usize,
            (j as i64 + dj).rem_euclid(ny) as usize,
        )
    };
    let (hx2, hy2) = (p.dx() * p.dx(), p.dy() * p.dy());
    let d4x = (at(cbar, -2, 0) - 4.0 * at(cbar, -1, 0) + 6.0 * at(cbar, 0, 0) - 4.0 * at(cbar, 1, 0) + at(cbar, 2, 0)) / (hx2 * hx2);
    let d4y = (at(cbar, 0, -2) - 4.0 * at(cbar, 0, -1) + 6.0 * at(cbar, 0, 0) - 4.0 * at(cbar, 0, 1) + at(cbar, 0, 2)) / (hy2 * hy2);
    let dxxyy = (at(cbar, -1, -1) - 2.0 * at(cbar, 0, -1) + at(cbar, 1, -1)
        - 2.0 * at(cbar, -1, 0) + 4.0 * at(cbar, 0, 0) - 2.0 * at(cbar, 1, 0)
        + at(cbar, -1, 1) - 2.0 * at(cbar, 0, 1) + at(cbar, 1, 1))
        / (hx2 * hy2);
    let mu = |di: i64, dj: i64| {
        let v = at(c, di, dj);
        v * v * v - v
    };
    let lap = (mu(-1, 0) - 2.0 * mu(0, 0) + mu(1, 0)) / hx2 + (mu(0, -1) - 2.0 * mu(0, 0) + mu(0, 1)) / hy2;
    -2.0 / 3.0 * (at(c, 0, 0) - at(cp, 0, 0)) - 2.0 / 3.0 * p.d * p.gamma * p.dt * (d4x + 2.0 * dxxyy + d4y)
        + 2.0 / 3.0 * p.d * p.dt * lap
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rhs_matches_scalar_oracle(seed in any::<u64>(), log_n in 3u32..5, dt in 1e-3f64..1e-1) {
        let n = 1usize << log_n;
        let mut p = ChParams::square(n);
        p.dt = dt;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rand_grid = || random_field(&p, &mut rng, 1.0);
        let (c, cp) = (rand_grid(), rand_grid());
        let cbar = Grid2D::from_values(
            n, n, p.dx(), p.dy(),
            c.values().iter().zip(cp.values()).map(|(a, b)| 2.0 * a - b).collect(),
        ).unwrap();
        let rhs = assemble_rhs(&c, &cp, &cbar, &p).unwrap();
        for j in 0..n {
            for i in 0..n {
                let expected = scalar_rhs(&c, &cp, &cbar, &p, i, j);
                let scale = 1.0f64.max(expected.abs());
                prop_assert!((rhs.get(i, j) - expected).abs() <= 1e-14 * scale * 64.0,
                    "({i},{j}) {} vs {expected}", rhs.get(i, j));
            }
        }
    }
}

#[test]
fn k1_of_single_modes_on_long_boxes() {
    let mut p = ChParams::square(32);
    p.lx = 2.0 * TAU;
    let g = field(&p, |x, _| (0.5 * x).cos());
    let k1 = tilestencil::cahn_hilliard::k1_metric(&g).unwrap();
    assert!((k1 - 0.5).abs() < 1e-12);
}
