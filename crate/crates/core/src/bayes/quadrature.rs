//! Gauss–Legendre rules and tensor-product index helpers.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// nodes in increasing order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "a quadrature rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi's initial guess, refined by Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, derivative) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * derivative * derivative);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss–Legendre rule scaled to `[-halfwidth, halfwidth]`.
pub fn scaled_rule(points: usize, halfwidth: f64) -> (Vec<f64>, Vec<f64>) {
    let (nodes, weights) = gauss_legendre(points);
    (
        nodes.into_iter().map(|x| x * halfwidth).collect(),
        weights.into_iter().map(|w| w * halfwidth).collect(),
    )
}

/// Writes the base-`points` digits of `index` into `digits` (first digit varies slowest).
pub(crate) fn unravel(mut index: usize, points: usize, digits: &mut [usize]) {
    for d in digits.iter_mut().rev() {
        *d = index % points;
        index /= points;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn small_rules_match_closed_forms() {
        let (x, w) = gauss_legendre(2);
        assert_abs_diff_eq!(x[1], 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(w[0], 1.0, epsilon = 1e-15);
        let (x, w) = gauss_legendre(3);
        assert_abs_diff_eq!(x[2], (0.6f64).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(x[1], 0.0, epsilon = 0.0);
        assert_abs_diff_eq!(w[1], 8.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        for n in [1usize, 4, 16, 48, 97] {
            let (x, w) = gauss_legendre(n);
            for degree in 0..(2 * n) {
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(degree as i32)).sum();
                let want = if degree % 2 == 1 { 0.0 } else { 2.0 / (degree as f64 + 1.0) };
                assert_abs_diff_eq!(got, want, epsilon = 1e-12);
            }
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn scaled_rule_integrates_gaussian() {
        let (x, w) = scaled_rule(48, 10.0);
        let got: f64 = x.iter().zip(&w).map(|(x, w)| w * (-0.5 * x * x).exp()).sum();
        assert_abs_diff_eq!(got, (2.0 * PI).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn unravel_digits() {
        let mut digits = [0; 3];
        unravel(16 + 4 + 2, 4, &mut digits[..]);
        assert_eq!(digits, [1, 1, 2]);
        unravel(2 * 16 + 3 * 4 + 1, 4, &mut digits);
        assert_eq!(digits, [2, 3, 1]);
    }
}
