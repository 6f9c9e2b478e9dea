//! Damped least-squares minimizer with box lower bounds.
//!
//! Classic Levenberg-Marquardt: Gauss-Newton steps damped by a multiplicative
//! factor on the diagonal of the normal equations, with the factor raised on
//! rejected trial steps and lowered on accepted ones. Lower bounds are
//! enforced by projecting each trial point. The fitting pipeline only ever
//! feeds it three-parameter subproblems, so the dense linear algebra here is
//! deliberately simple.

use thiserror::Error;

use crate::real::Real;

/// Row-major dense matrix; the Jacobian of a residual vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Jacobian<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Jacobian<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: T) {
        self.data[r * self.cols + c] = value;
    }

    fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// J^T r.
    fn gradient(&self, r: &[T]) -> Vec<T> {
        let mut g = vec![T::zero(); self.cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                g[j] = g[j] + self.get(i, j) * r[i];
            }
        }
        g
    }

    /// J^T J, row-major `cols x cols`.
    fn normal_matrix(&self) -> Vec<T> {
        let n = self.cols;
        let mut m = vec![T::zero(); n * n];
        for i in 0..self.rows {
            for a in 0..n {
                let via = self.get(i, a);
                for b in a..n {
                    m[a * n + b] = m[a * n + b] + via * self.get(i, b);
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                m[a * n + b] = m[b * n + a];
            }
        }
        m
    }
}

/// Convergence tolerances and iteration budget.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolveSettings<T> {
    /// Stop when the infinity norm of the gradient J^T r drops below this.
    pub gtol: T,
    /// Stop when the accepted step is below `xtol * (|p| + xtol)`.
    pub xtol: T,
    /// Stop when the relative cost decrease of an accepted step is below this.
    pub ftol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for SolveSettings<T> {
    fn default() -> Self {
        Self { gtol: T::c(1e-10), xtol: T::c(1e-10), ftol: T::c(1e-10), max_iter: 200 }
    }
}

/// A nonlinear least-squares problem: minimize the squared norm of
/// `residual(p)` starting from `initial_guess`, optionally with per-parameter
/// lower bounds.
pub struct LeastSquaresProblem<T, R, J>
where
    R: Fn(&[T]) -> Vec<T>,
    J: Fn(&[T]) -> Jacobian<T>,
{
    pub residual: R,
    pub jacobian: J,
    pub initial_guess: Vec<T>,
    pub lower_bounds: Option<Vec<T>>,
    pub settings: SolveSettings<T>,
}

/// Why the solver stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradientTolerance,
    StepTolerance,
    CostTolerance,
    MaxIterations,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult<T> {
    pub params: Vec<T>,
    /// Final sum of squared residuals.
    pub cost: T,
    /// Number of accepted steps.
    pub iterations: usize,
    pub termination: Termination,
    /// Cost after each accepted step, starting with the initial cost.
    /// Strictly decreasing by construction.
    pub cost_history: Vec<T>,
}

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    #[error("residual or jacobian not finite at the evaluation point")]
    NumericalError,
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}

const DAMPING_INITIAL: f64 = 1e-3;
const DAMPING_FACTOR: f64 = 10.0;
const DAMPING_MIN: f64 = 1e-12;
const DAMPING_MAX: f64 = 1e15;

/// Runs the minimizer on `problem`.
pub fn solve<T, R, J>(problem: &LeastSquaresProblem<T, R, J>) -> Result<SolveResult<T>, SolveError>
where
    T: Real,
    R: Fn(&[T]) -> Vec<T>,
    J: Fn(&[T]) -> Jacobian<T>,
{
    let n = problem.initial_guess.len();
    if n == 0 {
        return Err(SolveError::InvalidProblem("no parameters".into()));
    }
    if let Some(lb) = &problem.lower_bounds {
        if lb.len() != n {
            return Err(SolveError::InvalidProblem(format!(
                "{} bounds for {n} parameters",
                lb.len()
            )));
        }
        for (j, (&p, &b)) in problem.initial_guess.iter().zip(lb).enumerate() {
            if p < b {
                return Err(SolveError::InvalidProblem(format!(
                    "initial guess [{j}] = {p} below lower bound {b}"
                )));
            }
        }
    }

    let mut p = problem.initial_guess.clone();
    let mut r = (problem.residual)(&p);
    if r.is_empty() {
        return Err(SolveError::InvalidProblem("empty residual vector".into()));
    }
    if !r.iter().all(|v| v.is_finite()) {
        return Err(SolveError::NumericalError);
    }
    let mut jac = evaluate_jacobian(problem, &p, r.len())?;
    let mut cost = squared_norm(&r);
    let mut history = vec![cost];
    let mut damping = T::c(DAMPING_INITIAL);
    let mut accepted = 0usize;

    for _ in 0..problem.settings.max_iter {
        let g = jac.gradient(&r);
        let g_inf = g.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        if g_inf <= problem.settings.gtol {
            return Ok(finish(p, cost, accepted, Termination::GradientTolerance, history));
        }

        let jtj = jac.normal_matrix();
        let diag_max = (0..n).fold(T::zero(), |m, j| m.max(jtj[j * n + j]));
        let diag_floor = diag_max * T::c(1e-14) + T::min_positive_value();

        // Damped normal equations: (J^T J + damping * diag(J^T J)) delta = -g.
        let mut a = jtj.clone();
        for j in 0..n {
            let d = jtj[j * n + j].max(diag_floor);
            a[j * n + j] = a[j * n + j] + damping * d;
        }
        let minus_g: Vec<T> = g.iter().map(|&v| -v).collect();
        let delta = match solve_linear(a, minus_g, n) {
            Some(d) => d,
            None => {
                damping = damping * T::c(DAMPING_FACTOR);
                if damping > T::c(DAMPING_MAX) {
                    return Ok(finish(p, cost, accepted, Termination::StepTolerance, history));
                }
                continue;
            }
        };

        let mut trial: Vec<T> = p.iter().zip(&delta).map(|(&pj, &dj)| pj + dj).collect();
        if let Some(lb) = &problem.lower_bounds {
            for (t, &b) in trial.iter_mut().zip(lb) {
                if *t < b {
                    *t = b;
                }
            }
        }
        let trial_r = (problem.residual)(&trial);
        if trial_r.len() != r.len() {
            return Err(SolveError::InvalidProblem(
                "residual length changed between evaluations".into(),
            ));
        }
        let trial_cost =
            if trial_r.iter().all(|v| v.is_finite()) { squared_norm(&trial_r) } else { T::infinity() };

        if trial_cost < cost {
            let step_sq = p
                .iter()
                .zip(&trial)
                .fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b));
            let p_norm = squared_norm(&p).sqrt();
            let improvement = cost - trial_cost;
            let previous = cost;
            p = trial;
            r = trial_r;
            cost = trial_cost;
            history.push(cost);
            accepted += 1;
            damping = (damping / T::c(DAMPING_FACTOR)).max(T::c(DAMPING_MIN));
            let xtol = problem.settings.xtol;
            if step_sq.sqrt() <= xtol * (p_norm + xtol) {
                return Ok(finish(p, cost, accepted, Termination::StepTolerance, history));
            }
            if improvement <= problem.settings.ftol * previous {
                return Ok(finish(p, cost, accepted, Termination::CostTolerance, history));
            }
            jac = evaluate_jacobian(problem, &p, r.len())?;
        } else {
            damping = damping * T::c(DAMPING_FACTOR);
            if damping > T::c(DAMPING_MAX) {
                return Ok(finish(p, cost, accepted, Termination::StepTolerance, history));
            }
        }
    }
    Ok(finish(p, cost, accepted, Termination::MaxIterations, history))
}

fn finish<T: Real>(
    params: Vec<T>,
    cost: T,
    iterations: usize,
    termination: Termination,
    cost_history: Vec<T>,
) -> SolveResult<T> {
    SolveResult { params, cost, iterations, termination, cost_history }
}

fn evaluate_jacobian<T, R, J>(
    problem: &LeastSquaresProblem<T, R, J>,
    p: &[T],
    residual_len: usize,
) -> Result<Jacobian<T>, SolveError>
where
    T: Real,
    R: Fn(&[T]) -> Vec<T>,
    J: Fn(&[T]) -> Jacobian<T>,
{
    let jac = (problem.jacobian)(p);
    if jac.rows() != residual_len || jac.cols() != p.len() {
        return Err(SolveError::InvalidProblem(format!(
            "jacobian is {}x{}, expected {residual_len}x{}",
            jac.rows(),
            jac.cols(),
            p.len()
        )));
    }
    if !jac.is_finite() {
        return Err(SolveError::NumericalError);
    }
    Ok(jac)
}

fn squared_norm<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, &x| acc + x * x)
}

/// Gaussian elimination with partial pivoting on a small row-major system.
/// Returns `None` when a pivot collapses to zero.
fn solve_linear<T: Real>(mut a: Vec<T>, mut b: Vec<T>, n: usize) -> Option<Vec<T>> {
    for col in 0..n {
        let mut pivot = col;
        let mut best = a[col * n + col].abs();
        for row in col + 1..n {
            let v = a[row * n + col].abs();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if !(best > T::zero()) || !best.is_finite() {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let diag = a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] / diag;
            if factor == T::zero() {
                continue;
            }
            for k in col..n {
                a[row * n + k] = a[row * n + k] - factor * a[col * n + k];
            }
            b[row] = b[row] - factor * b[col];
        }
    }
    let mut x = vec![T::zero(); n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc = acc - a[col * n + k] * x[k];
        }
        x[col] = acc / a[col * n + col];
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

/// Central-difference Jacobian with per-parameter step
/// `scale * max(|p[j]|, 1)`. Fallback and test oracle for analytic Jacobians.
pub fn numeric_jacobian<T, R>(residual: &R, p: &[T], scale: T) -> Result<Jacobian<T>, SolveError>
where
    T: Real,
    R: Fn(&[T]) -> Vec<T>,
{
    let baseline = residual(p);
    let rows = baseline.len();
    let mut jac = Jacobian::zeros(rows, p.len());
    for j in 0..p.len() {
        let h = scale * p[j].abs().max(T::one());
        let mut left = p.to_vec();
        left[j] = left[j] - h;
        let mut right = p.to_vec();
        right[j] = right[j] + h;
        let rl = residual(&left);
        let rr = residual(&right);
        if rl.len() != rows || rr.len() != rows {
            return Err(SolveError::InvalidProblem("residual length changed".into()));
        }
        let two_h = h + h;
        for i in 0..rows {
            let d = (rr[i] - rl[i]) / two_h;
            if !d.is_finite() {
                return Err(SolveError::NumericalError);
            }
            jac.set(i, j, d);
        }
    }
    Ok(jac)
}
