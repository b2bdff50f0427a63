//! Levenberg–Marquardt for zero-residual least squares on a manifold.
//!
//! The problem supplies residuals and a Jacobian in local coordinates at the
//! current point, and a retraction mapping a tangent step back to the manifold.

use nalgebra::{DMatrix, DVector};

pub trait LeastSquares {
    type Point: Clone;

    fn residuals(&self, x: &Self::Point) -> DVector<f64>;

    /// Jacobian of the residuals in the local chart centred at `x`.
    fn jacobian(&self, x: &Self::Point) -> DMatrix<f64>;

    fn retract(&self, x: &Self::Point, step: &DVector<f64>) -> Self::Point;
}

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop successfully once `||r||^2 <= target_cost`.
    pub target_cost: f64,
    pub initial_damping: f64,
    pub stall_window: usize,
    pub stall_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    Stalled,
    MaxIterations,
    DampingOverflow,
}

#[derive(Debug, Clone)]
pub struct LmOutcome<P> {
    pub point: P,
    pub cost: f64,
    pub iterations: usize,
    pub termination: Termination,
}

pub fn minimize<P: LeastSquares>(problem: &P, start: P::Point, opts: &LmOptions) -> LmOutcome<P::Point> {
    let mut x = start;
    let mut r = problem.residuals(&x);
    let mut cost = r.norm_squared();
    let mut history = Vec::with_capacity(opts.max_iterations.min(4096) + 1);
    history.push(cost);

    let mut mu = -1.0;
    let mut nu = 2.0;
    let mut jac = problem.jacobian(&x);
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        if cost <= opts.target_cost {
            return LmOutcome { point: x, cost, iterations, termination: Termination::Converged };
        }
        iterations += 1;

        let grad = jac.transpose() * &r;
        if mu < 0.0 {
            let max_diag = jac
                .column_iter()
                .map(|col| col.norm_squared())
                .fold(0.0, f64::max);
            mu = opts.initial_damping * max_diag.max(1e-300);
        }

        let step = match damped_step(&jac, &r, mu) {
            Some(s) => s,
            None => {
                mu *= nu;
                nu *= 2.0;
                if !mu.is_finite() || mu > 1e30 {
                    return LmOutcome { point: x, cost, iterations, termination: Termination::DampingOverflow };
                }
                continue;
            }
        };

        // predicted decrease of ||r||^2 under the linear model
        let jstep = &jac * &step;
        let predicted = -(2.0 * step.dot(&grad) + jstep.norm_squared());
        let candidate = problem.retract(&x, &step);
        let r_new = problem.residuals(&candidate);
        let cost_new = r_new.norm_squared();
        let rho = if predicted > 0.0 { (cost - cost_new) / predicted } else { -1.0 };

        if rho > 0.0 && cost_new < cost {
            x = candidate;
            r = r_new;
            cost = cost_new;
            jac = problem.jacobian(&x);
            let t = 2.0 * rho - 1.0;
            mu *= (1.0 / 3.0f64).max(1.0 - t * t * t);
            nu = 2.0;
        } else {
            mu *= nu;
            nu *= 2.0;
            if !mu.is_finite() || mu > 1e30 {
                return LmOutcome { point: x, cost, iterations, termination: Termination::DampingOverflow };
            }
        }

        history.push(cost);
        let w = opts.stall_window;
        if w > 0 && history.len() > w && cost > opts.target_cost {
            let past = history[history.len() - 1 - w];
            if past - cost < opts.stall_ratio * past && cost > 1e3 * opts.target_cost {
                return LmOutcome { point: x, cost, iterations, termination: Termination::Stalled };
            }
        }
    }

    let termination = if cost <= opts.target_cost { Termination::Converged } else { Termination::MaxIterations };
    LmOutcome { point: x, cost, iterations, termination }
}

/// Solves `(J^T J + mu I) step = -J^T r`, through the smaller of the two
/// normal-equation forms.
fn damped_step(jac: &DMatrix<f64>, r: &DVector<f64>, mu: f64) -> Option<DVector<f64>> {
    let (m, n) = jac.shape();
    if m < n {
        let mut a = jac * jac.transpose();
        for i in 0..m {
            a[(i, i)] += mu;
        }
        let y = a.cholesky()?.solve(&(-r));
        Some(jac.transpose() * y)
    } else {
        let mut a = jac.transpose() * jac;
        for i in 0..n {
            a[(i, i)] += mu;
        }
        let rhs = -(jac.transpose() * r);
        Some(a.cholesky()?.solve(&rhs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Rosenbrock as residuals (1 - x, 10 (y - x^2)).
    struct Rosenbrock;

    impl LeastSquares for Rosenbrock {
        type Point = DVector<f64>;

        fn residuals(&self, x: &DVector<f64>) -> DVector<f64> {
            DVector::from_vec(vec![1.0 - x[0], 10.0 * (x[1] - x[0] * x[0])])
        }

        fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
            DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, -20.0 * x[0], 10.0])
        }

        fn retract(&self, x: &DVector<f64>, step: &DVector<f64>) -> DVector<f64> {
            x + step
        }
    }

    fn opts() -> LmOptions {
        LmOptions {
            max_iterations: 500,
            target_cost: 1e-24,
            initial_damping: 1e-3,
            stall_window: 0,
            stall_ratio: 0.0,
        }
    }

    #[test]
    fn solves_rosenbrock() {
        let out = minimize(&Rosenbrock, DVector::from_vec(vec![-1.2, 1.0]), &opts());
        assert_eq!(out.termination, Termination::Converged);
        assert!((out.point[0] - 1.0).abs() < 1e-10);
        assert!((out.point[1] - 1.0).abs() < 1e-10);
    }

    /// Unsolvable: residuals (x - 1, x + 1).
    struct Inconsistent;

    impl LeastSquares for Inconsistent {
        type Point = DVector<f64>;

        fn residuals(&self, x: &DVector<f64>) -> DVector<f64> {
            DVector::from_vec(vec![x[0] - 1.0, x[0] + 1.0])
        }

        fn jacobian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
            DMatrix::from_row_slice(2, 1, &[1.0, 1.0])
        }

        fn retract(&self, x: &DVector<f64>, step: &DVector<f64>) -> DVector<f64> {
            x + step
        }
    }

    #[test]
    fn stalls_on_positive_minimum() {
        let o = LmOptions { stall_window: 10, stall_ratio: 1e-3, ..opts() };
        let out = minimize(&Inconsistent, DVector::from_vec(vec![5.0]), &o);
        assert_ne!(out.termination, Termination::Converged);
        assert!((out.cost - 2.0).abs() < 1e-9);
        assert!(out.iterations < 100);
    }
}
