//! Standard finite-difference weight sets.

use crate::grid::Extents;
use crate::stencil::WeightStencil;

/// Second-order central coefficients for the second derivative.
pub const CENTRAL_2ND_ORDER: [f64; 3] = [1.0, -2.0, 1.0];

/// Eighth-order central coefficients for the second derivative.
pub const CENTRAL_8TH_ORDER: [f64; 9] = [
    -1.0 / 560.0,
    8.0 / 315.0,
    -1.0 / 5.0,
    8.0 / 5.0,
    -205.0 / 72.0,
    8.0 / 5.0,
    -1.0 / 5.0,
    8.0 / 315.0,
    -1.0 / 560.0,
];

/// Second-order central fourth difference.
pub const FOURTH_DIFFERENCE: [f64; 5] = [1.0, -4.0, 6.0, -4.0, 1.0];

/// Second-order cross derivative d4/dx2dy2 pattern (before scaling).
pub const CROSS_XXYY: [f64; 9] = [1.0, -2.0, 1.0, -2.0, 4.0, -2.0, 1.0, -2.0, 1.0];

fn scaled(coeffs: &[f64], scale: f64) -> Vec<f64> {
    coeffs.iter().map(|c| c * scale).collect()
}

/// 3-point second derivative in x.
pub fn second_derivative_x(dx: f64) -> WeightStencil {
    WeightStencil::x(1, 1, scaled(&CENTRAL_2ND_ORDER, 1.0 / (dx * dx))).expect("fixed size")
}

/// 3-point second derivative in y.
pub fn second_derivative_y(dy: f64) -> WeightStencil {
    WeightStencil::y(1, 1, scaled(&CENTRAL_2ND_ORDER, 1.0 / (dy * dy))).expect("fixed size")
}

/// 9-point eighth-order second derivative in x.
pub fn eighth_order_second_derivative_x(dx: f64) -> WeightStencil {
    WeightStencil::x(4, 4, scaled(&CENTRAL_8TH_ORDER, 1.0 / (dx * dx))).expect("fixed size")
}

/// 5-point Laplacian laid out on a 3x3 window (corners zero).
pub fn laplacian(dx: f64, dy: f64) -> WeightStencil {
    let ax = 1.0 / (dx * dx);
    let ay = 1.0 / (dy * dy);
    let centre = -2.0 * ax - 2.0 * ay;
    WeightStencil::new(
        Extents::square(1),
        vec![0.0, ay, 0.0, ax, centre, ax, 0.0, ay, 0.0],
    )
    .expect("fixed size")
}

/// Cross derivative d4/dx2dy2 on a 3x3 window.
pub fn cross_xxyy(dx: f64, dy: f64) -> WeightStencil {
    WeightStencil::new(
        Extents::square(1),
        scaled(&CROSS_XXYY, 1.0 / (dx * dx * dy * dy)),
    )
    .expect("fixed size")
}

/// Biharmonic `dxxxx + 2 dxxyy + dyyyy` as one 5x5 window with 13 nonzero
/// weights.
pub fn biharmonic(dx: f64, dy: f64) -> WeightStencil {
    let ax = 1.0 / (dx * dx * dx * dx);
    let ay = 1.0 / (dy * dy * dy * dy);
    let axy = 1.0 / (dx * dx * dy * dy);
    let mut w = [0.0; 25];
    let at = |p: isize, q: isize| ((q + 2) * 5 + (p + 2)) as usize;
    for (k, c) in FOURTH_DIFFERENCE.iter().enumerate() {
        let o = k as isize - 2;
        w[at(o, 0)] += c * ax;
        w[at(0, o)] += c * ay;
    }
    for (k, c) in CROSS_XXYY.iter().enumerate() {
        let (p, q) = ((k % 3) as isize - 1, (k / 3) as isize - 1);
        w[at(p, q)] += 2.0 * c * axy;
    }
    WeightStencil::new(Extents::square(2), w.to_vec()).expect("fixed size")
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Solves `sum_k c_k k^m = 2 delta_{m,2}` for m = 0..9 by Gaussian
    /// elimination with partial pivoting.
    fn taylor_second_derivative(half: i32) -> Vec<f64> {
        let n = (2 * half + 1) as usize;
        let mut a = vec![vec![0.0f64; n + 1]; n];
        for (m, row) in a.iter_mut().enumerate() {
            for (col, k) in (-half..=half).enumerate() {
                row[col] = (k as f64).powi(m as i32);
            }
            row[n] = if m == 2 { 2.0 } else { 0.0 };
        }
        for c in 0..n {
            let p = (c..n)
                .max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))
                .unwrap();
            a.swap(c, p);
            for r in c + 1..n {
                let f = a[r][c] / a[c][c];
                for k in c..=n {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
        let mut x = vec![0.0; n];
        for r in (0..n).rev() {
            let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
            x[r] = (a[r][n] - s) / a[r][r];
        }
        x
    }

    #[test]
    fn eighth_order_weights_match_taylor_solve() {
        let solved = taylor_second_derivative(4);
        for (a, b) in solved.iter().zip(CENTRAL_8TH_ORDER) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        let solved = taylor_second_derivative(1);
        for (a, b) in solved.iter().zip(CENTRAL_2ND_ORDER) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn biharmonic_layout() {
        let s = biharmonic(1.0, 1.0);
        let w = s.weights();
        assert_eq!(w.iter().filter(|&&x| x != 0.0).count(), 13);
        assert_eq!(w.iter().sum::<f64>(), 0.0);
        assert_eq!(w[12], 20.0);
        assert_eq!(w[2], 1.0);
        assert_eq!(w[10], 1.0);
        assert_eq!(w[7], -8.0);
        assert_eq!(w[11], -8.0);
        assert_eq!(w[6], 2.0);
        assert_eq!(w[0], 0.0);
    }

    #[test]
    fn biharmonic_weights_sum_to_zero_relative() {
        let s = biharmonic(0.3, 0.7);
        let sum: f64 = s.weights().iter().sum();
        let scale: f64 = s.weights().iter().map(|w| w.abs()).sum();
        assert!(sum.abs() <= 1e-14 * scale);
    }

    #[test]
    fn laplacian_weights_sum_to_zero() {
        let s = laplacian(0.25, 0.25);
        assert_eq!(s.weights().iter().sum::<f64>(), 0.0);
    }
}
