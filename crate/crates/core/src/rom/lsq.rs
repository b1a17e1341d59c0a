//! Nonlinear least squares: Gauss–Newton with a Levenberg–Marquardt
//! fallback.
//!
//! Each iteration first tries the undamped Gauss–Newton step; if it fails to
//! decrease `½‖r‖²` (or lands on a non-finite residual), the step is damped
//! with `λ·diag(JᵀJ)` and `λ` grows tenfold until a decrease is found.
//! Successful damped steps shrink `λ` tenfold for the next fallback.

use nalgebra::{Cholesky, DMatrix, DVector};

pub trait LeastSquaresProblem {
    fn n_params(&self) -> usize;

    /// `None` when the residual is not finite at `x`.
    fn residual(&mut self, x: &DVector<f64>) -> Option<DVector<f64>>;

    /// `(JᵀJ, Jᵀr)` at `x`, where `r` is the residual at `x`. The default
    /// builds `J` column by column with forward differences.
    fn normal_equations(
        &mut self,
        x: &DVector<f64>,
        r: &DVector<f64>,
    ) -> Option<(DMatrix<f64>, DVector<f64>)> {
        let j = fd_jacobian(self, x, r, DEFAULT_FD_STEP)?;
        Some((j.tr_mul(&j), j.tr_mul(r)))
    }
}

pub const DEFAULT_FD_STEP: f64 = 1e-7;

/// Forward-difference step for coordinate value `x`.
#[inline]
pub fn fd_step(x: f64, rel: f64) -> f64 {
    let h = rel * (1.0 + x.abs());
    // use the exactly representable increment
    (x + h) - x
}

pub fn fd_jacobian<P: LeastSquaresProblem + ?Sized>(
    p: &mut P,
    x: &DVector<f64>,
    r: &DVector<f64>,
    rel: f64,
) -> Option<DMatrix<f64>> {
    let mut j = DMatrix::zeros(r.len(), x.len());
    let mut xp = x.clone();
    for col in 0..x.len() {
        let h = fd_step(x[col], rel);
        xp[col] = x[col] + h;
        let rp = p.residual(&xp)?;
        xp[col] = x[col];
        j.set_column(col, &((rp - r) / h));
    }
    Some(j)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeastSquaresSettings {
    pub max_iterations: usize,
    /// Stop when `‖Jᵀr‖ < gtol`.
    pub gtol: f64,
    /// Stop when an accepted step satisfies `‖δ‖ < xtol (xtol + ‖x‖)`.
    pub xtol: f64,
    pub initial_damping: f64,
    /// Allow the damped fallback; without it a failed Gauss–Newton step ends
    /// the solve.
    pub damping: bool,
    pub fd_step: f64,
}

impl Default for LeastSquaresSettings {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            gtol: 1e-8,
            xtol: 1e-10,
            initial_damping: 1e-4,
            damping: true,
            fd_step: DEFAULT_FD_STEP,
        }
    }
}

impl LeastSquaresSettings {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.gtol > 0.0 && self.xtol > 0.0 && self.initial_damping > 0.0 && self.fd_step > 0.0) {
            return Err(crate::Error::Config("least-squares tolerances must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(crate::Error::Config("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Gradient,
    Step,
    MaxIterations,
    /// No damping produced a decrease; `x` is at a numerical minimum.
    NoProgress,
    /// The residual or Jacobian at the current iterate is not finite.
    NonFinite,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub x: DVector<f64>,
    pub iterations: usize,
    pub termination: Termination,
    /// `‖r‖` at the initial point and after every accepted step.
    pub residual_norms: Vec<f64>,
    /// `‖Jᵀr‖` at the final iterate.
    pub gradient_norm: f64,
    pub residual_evaluations: usize,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        matches!(self.termination, Termination::Gradient | Termination::Step)
    }

    pub fn monotone(&self) -> bool {
        self.residual_norms.windows(2).all(|w| w[1] <= w[0])
    }
}

const MAX_DAMPING: f64 = 1e16;

fn solve_damped(h: &DMatrix<f64>, g: &DVector<f64>, lambda: f64) -> Option<DVector<f64>> {
    let mut a = h.clone();
    if lambda > 0.0 {
        let scale = h.diagonal().iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
        for i in 0..a.nrows() {
            // Marquardt scaling with a floor for zero columns
            a[(i, i)] += lambda * h[(i, i)].max(1e-12 * scale);
        }
    }
    let chol = Cholesky::new(a)?;
    let step = -chol.solve(g);
    step.iter().all(|x| x.is_finite()).then_some(step)
}

pub fn gauss_newton_solve<P: LeastSquaresProblem + ?Sized>(
    problem: &mut P,
    x0: DVector<f64>,
    settings: &LeastSquaresSettings,
) -> SolveReport {
    let mut report = SolveReport {
        x: x0,
        iterations: 0,
        termination: Termination::NonFinite,
        residual_norms: Vec::new(),
        gradient_norm: f64::NAN,
        residual_evaluations: 1,
    };
    let Some(mut r) = problem.residual(&report.x) else {
        return report;
    };
    let mut cost = r.norm_squared();
    report.residual_norms.push(cost.sqrt());
    let mut mu = settings.initial_damping;
    let mut small_step = false;

    loop {
        let Some((h, g)) = problem.normal_equations(&report.x, &r) else {
            report.termination = Termination::NonFinite;
            return report;
        };
        report.gradient_norm = g.norm();
        if !report.gradient_norm.is_finite() {
            report.termination = Termination::NonFinite;
            return report;
        }
        if report.gradient_norm < settings.gtol {
            report.termination = Termination::Gradient;
            return report;
        }
        if small_step {
            report.termination = Termination::Step;
            return report;
        }
        if report.iterations >= settings.max_iterations {
            report.termination = Termination::MaxIterations;
            return report;
        }

        let mut lambda = 0.0;
        let accepted = loop {
            if let Some(step) = solve_damped(&h, &g, lambda) {
                let trial = &report.x + &step;
                report.residual_evaluations += 1;
                if let Some(rt) = problem.residual(&trial) {
                    let ct = rt.norm_squared();
                    if ct < cost {
                        small_step = step.norm() < settings.xtol * (settings.xtol + report.x.norm());
                        report.x = trial;
                        r = rt;
                        cost = ct;
                        break true;
                    }
                }
            }
            if !settings.damping {
                break false;
            }
            lambda = if lambda == 0.0 { mu } else { lambda * 10.0 };
            if lambda > MAX_DAMPING {
                break false;
            }
        };
        if !accepted {
            report.termination = Termination::NoProgress;
            return report;
        }
        if lambda > 0.0 {
            mu = (lambda / 10.0).max(1e-12);
        }
        report.iterations += 1;
        report.residual_norms.push(cost.sqrt());
    }
}
