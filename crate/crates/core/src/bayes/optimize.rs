//! Unconstrained maximization by BFGS with a backtracking line search,
//! finished with a few Newton steps on a finite-difference Hessian.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub(crate) struct Maximum {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Settings {
    pub gradient_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            gradient_tolerance: 1e-8,
            max_iterations: 500,
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Maximizes `f`, which returns the value and gradient at a point. Non-finite
/// values are treated as outside the feasible region and trigger backtracking.
pub(crate) fn maximize<F>(f: &F, start: &[f64], settings: Settings) -> Maximum
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let dim = start.len();
    let mut x = DVector::from_column_slice(start);
    let (mut value, g) = f(x.as_slice());
    let mut grad = DVector::from_vec(g);
    // Inverse Hessian approximation of -f.
    let mut inv_h = DMatrix::<f64>::identity(dim, dim) / grad.norm().max(1.0);
    let mut iterations = 0;

    while iterations < settings.max_iterations && grad.norm() > settings.gradient_tolerance {
        iterations += 1;
        let direction = &inv_h * &grad;
        let slope = grad.dot(&direction);
        let direction = if slope > 0.0 {
            direction
        } else {
            inv_h = DMatrix::identity(dim, dim) / grad.norm().max(1.0);
            &inv_h * &grad
        };
        let slope = grad.dot(&direction);

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = &x + &direction * step;
            let (v, g) = f(trial.as_slice());
            if v.is_finite() && v >= value + 1e-4 * step * slope {
                accepted = Some((trial, v, DVector::from_vec(g)));
                break;
            }
            step *= 0.5;
        }
        let Some((next, next_value, next_grad)) = accepted else {
            break;
        };

        let s = &next - &x;
        // y is the change in the gradient of -f.
        let y = &grad - &next_grad;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if iterations == 1 {
                inv_h = DMatrix::identity(dim, dim) * (sy / y.dot(&y));
            }
            let rho = 1.0 / sy;
            let identity = DMatrix::<f64>::identity(dim, dim);
            let left = &identity - &s * y.transpose() * rho;
            let right = &identity - &y * s.transpose() * rho;
            inv_h = &left * &inv_h * &right + &s * s.transpose() * rho;
        }
        x = next;
        value = next_value;
        grad = next_grad;
    }

    let mut best = Maximum {
        x: x.as_slice().to_vec(),
        value,
        gradient_norm: grad.norm(),
        iterations,
    };
    newton_polish(f, &mut best, settings);
    best
}

/// Central-difference Hessian of `f` built from its analytic gradient.
pub(crate) fn hessian<F>(f: &F, x: &[f64]) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let dim = x.len();
    let mut h = DMatrix::zeros(dim, dim);
    let mut probe = x.to_vec();
    for k in 0..dim {
        let step = 1e-5 * x[k].abs().max(1.0);
        probe[k] = x[k] + step;
        let (_, up) = f(&probe);
        probe[k] = x[k] - step;
        let (_, down) = f(&probe);
        probe[k] = x[k];
        for r in 0..dim {
            h[(r, k)] = (up[r] - down[r]) / (2.0 * step);
        }
    }
    (&h + h.transpose()) * 0.5
}

fn newton_polish<F>(f: &F, best: &mut Maximum, settings: Settings)
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    for _ in 0..20 {
        if best.gradient_norm <= settings.gradient_tolerance * 1e-2 {
            return;
        }
        let neg_h = -hessian(f, &best.x);
        let Some(chol) = neg_h.cholesky() else {
            return;
        };
        let (_, g) = f(&best.x);
        let step = chol.solve(&DVector::from_vec(g));
        let trial: Vec<f64> = best.x.iter().zip(step.iter()).map(|(x, s)| x + s).collect();
        let (v, g) = f(&trial);
        let trial_norm = norm(&g);
        // Accept only steps that shrink the gradient without losing more than roundoff in value.
        if !v.is_finite() || trial_norm >= best.gradient_norm || v < best.value - 1e-9 * best.value.abs().max(1.0) {
            return;
        }
        best.x = trial;
        best.value = v;
        best.gradient_norm = trial_norm;
        best.iterations += 1;
    }
}
