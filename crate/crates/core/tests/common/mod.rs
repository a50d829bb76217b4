//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use tilestencil::Grid2D;

/// Periodic weighted sum by a plain double loop, row-major from zero.
pub fn brute_force_periodic(
    g: &Grid2D,
    weights: &[f64],
    left: usize,
    top: usize,
    width: usize,
    height: usize,
) -> Grid2D {
    let (nx, ny) = (g.nx() as i64, g.ny() as i64);
    let mut out = g.zeros_like();
    for j in 0..ny {
        for i in 0..nx {
            let mut acc = 0.0;
            for q in 0..height as i64 {
                for p in 0..width as i64 {
                    let jj = (j + q - top as i64).rem_euclid(ny);
                    let ii = (i + p - left as i64).rem_euclid(nx);
                    acc += weights[(q as usize) * width + p as usize] * g.get(ii as usize, jj as usize);
                }
            }
            out.set(i as usize, j as usize, acc);
        }
    }
    out
}

/// Dense Gaussian elimination with partial pivoting; `a` is row-major `n x n`.
pub fn dense_solve(mut a: Vec<f64>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&x, &y| a[x * n + k].abs().total_cmp(&a[y * n + k].abs()))
            .unwrap();
        if p != k {
            for c in 0..n {
                a.swap(k * n + c, p * n + c);
            }
            b.swap(k, p);
        }
        for r in k + 1..n {
            let f = a[r * n + k] / a[k * n + k];
            for c in k..n {
                a[r * n + c] -= f * a[k * n + c];
            }
            b[r] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r * n + c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r * n + r];
    }
    x
}

/// Cyclic shift so that `out(i, j) = g(i - si, j - sj)`.
pub fn shift(g: &Grid2D, si: usize, sj: usize) -> Grid2D {
    let (nx, ny) = (g.nx(), g.ny());
    let mut out = g.zeros_like();
    for j in 0..ny {
        for i in 0..nx {
            out.set((i + si) % nx, (j + sj) % ny, g.get(i, j));
        }
    }
    out
}

pub fn bitwise_eq(a: &Grid2D, b: &Grid2D) -> bool {
    a.values().len() == b.values().len()
        && a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits())
}

pub fn max_abs_diff(a: &Grid2D, b: &Grid2D) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
