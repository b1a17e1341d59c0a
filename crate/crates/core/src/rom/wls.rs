//! Windowed least-squares ROMs, discretize-then-optimize.
//!
//! Over a window of `n_w` Crank–Nicolson steps the unknowns are the
//! coordinates `c₁…c_{n_w}`; `c₀` is the converged end of the previous
//! window. The residual stacks, per step, `√Δt · L · r_i` with
//! `r_i = (U_i − U_{i−1})/Δt − ½(f(U_i) + f(U_{i−1}))` and `L` the Cholesky
//! map of the residual weight, so `‖R‖²` is the time quadrature of the
//! weighted residual norm.
//!
//! Perturbing `c_i` touches only blocks `i` and `i+1`, so each finite
//! difference column costs a single right-hand-side evaluation and `JᵀJ` is
//! block tridiagonal.

use nalgebra::{DMatrix, DVector};

use super::lsq::{fd_step, gauss_newton_solve, LeastSquaresProblem, Termination};
use super::{RomSpec, RomTrajectory};
use crate::error::Result;

pub struct WindowProblem<'a> {
    spec: &'a RomSpec,
    steps: usize,
    u_start: Vec<f64>,
    f_start: Vec<f64>,
    /// Point whose states and rates are cached below.
    cached_x: Option<DVector<f64>>,
    states: Vec<Vec<f64>>,
    rates: Vec<Vec<f64>>,
    scratch_basis: Vec<f64>,
    scratch_r: Vec<f64>,
}

impl<'a> WindowProblem<'a> {
    /// Window of `steps` steps starting from conserved state `u_start`.
    pub fn new(spec: &'a RomSpec, steps: usize, u_start: Vec<f64>) -> Result<Self> {
        let f_start = spec.disc.rhs_vec(&u_start)?;
        let n = spec.n_dofs();
        Ok(Self {
            spec,
            steps,
            u_start,
            f_start,
            cached_x: None,
            states: vec![vec![0.0; n]; steps],
            rates: vec![vec![0.0; n]; steps],
            scratch_basis: vec![0.0; n],
            scratch_r: vec![0.0; n],
        })
    }

    fn k(&self) -> usize {
        self.spec.k()
    }

    /// Conserved state and rate at the end of the window for the cached point.
    pub fn terminal(&self) -> (&[f64], &[f64]) {
        (&self.states[self.steps - 1], &self.rates[self.steps - 1])
    }

    fn evaluate(&mut self, x: &DVector<f64>) -> bool {
        let k = self.k();
        for i in 0..self.steps {
            let c = &x.as_slice()[i * k..(i + 1) * k];
            if self.spec.state_into(c, &mut self.scratch_basis, &mut self.states[i]).is_err()
                || self.spec.disc.rhs(&self.states[i], &mut self.rates[i]).is_err()
            {
                self.cached_x = None;
                return false;
            }
        }
        self.cached_x = Some(x.clone());
        true
    }

    fn block(&mut self, i: usize, out: &mut [f64]) {
        let (u_prev, f_prev) = if i == 0 {
            (&self.u_start, &self.f_start)
        } else {
            (&self.states[i - 1], &self.rates[i - 1])
        };
        crate::fv::crank_nicolson_residual_with(
            &self.states[i],
            u_prev,
            &self.rates[i],
            f_prev,
            self.spec.dt,
            &mut self.scratch_r,
        );
        let s = self.spec.dt.sqrt();
        self.scratch_r.iter_mut().for_each(|x| *x *= s);
        self.spec.weight.cholesky_apply_into(&self.scratch_r, out);
    }
}

impl LeastSquaresProblem for WindowProblem<'_> {
    fn n_params(&self) -> usize {
        self.k() * self.steps
    }

    fn residual(&mut self, x: &DVector<f64>) -> Option<DVector<f64>> {
        if !self.evaluate(x) {
            return None;
        }
        let n = self.spec.n_dofs();
        let mut r = DVector::zeros(n * self.steps);
        for i in 0..self.steps {
            self.block(i, &mut r.as_mut_slice()[i * n..(i + 1) * n]);
        }
        r.iter().all(|v| v.is_finite()).then_some(r)
    }

    fn normal_equations(
        &mut self,
        x: &DVector<f64>,
        r: &DVector<f64>,
    ) -> Option<(DMatrix<f64>, DVector<f64>)> {
        if self.cached_x.as_ref() != Some(x) && !self.evaluate(x) {
            return None;
        }
        let spec = self.spec;
        let (n, k, nw) = (spec.n_dofs(), self.k(), self.steps);
        let dt = spec.dt;
        let sdt = dt.sqrt();
        let rel = spec.settings.fd_step;

        // D_i = ∂R_i/∂c_i, E_i = ∂R_{i+1}/∂c_i
        let mut d_blocks = Vec::with_capacity(nw);
        let mut e_blocks = Vec::with_capacity(nw);
        let mut state = vec![0.0; n];
        let mut rate = vec![0.0; n];
        let mut tmp = vec![0.0; n];
        for i in 0..nw {
            let mut d = DMatrix::zeros(n, k);
            let mut e = DMatrix::zeros(n, if i + 1 < nw { k } else { 0 });
            let mut c = x.as_slice()[i * k..(i + 1) * k].to_vec();
            for j in 0..k {
                let h = fd_step(c[j], rel);
                let cj = c[j];
                c[j] = cj + h;
                let ok = spec.state_into(&c, &mut self.scratch_basis, &mut state).is_ok()
                    && spec.disc.rhs(&state, &mut rate).is_ok();
                c[j] = cj;
                if !ok {
                    return None;
                }
                for q in 0..n {
                    let du = (state[q] - self.states[i][q]) / dt;
                    let df = 0.5 * (rate[q] - self.rates[i][q]);
                    tmp[q] = sdt * (du - df) / h;
                    // reuse `state` for the effect on the next block
                    state[q] = sdt * (-du - df) / h;
                }
                spec.weight.cholesky_apply_into(&tmp, d.column_mut(j).as_mut_slice());
                if i + 1 < nw {
                    spec.weight.cholesky_apply_into(&state, e.column_mut(j).as_mut_slice());
                }
            }
            d_blocks.push(d);
            e_blocks.push(e);
        }

        let mut h = DMatrix::zeros(nw * k, nw * k);
        let mut g = DVector::zeros(nw * k);
        for i in 0..nw {
            let ri = r.rows(i * n, n);
            let mut hii = d_blocks[i].tr_mul(&d_blocks[i]);
            let mut gi = d_blocks[i].tr_mul(&ri);
            if i + 1 < nw {
                hii += e_blocks[i].tr_mul(&e_blocks[i]);
                gi += e_blocks[i].tr_mul(&r.rows((i + 1) * n, n));
                let off = e_blocks[i].tr_mul(&d_blocks[i + 1]);
                h.view_mut((i * k, (i + 1) * k), (k, k)).copy_from(&off);
                h.view_mut(((i + 1) * k, i * k), (k, k)).copy_from(&off.transpose());
            }
            h.view_mut((i * k, i * k), (k, k)).copy_from(&hii);
            g.rows_mut(i * k, k).copy_from(&gi);
        }
        if h.iter().chain(g.iter()).any(|v| !v.is_finite()) {
            return None;
        }
        Some((h, g))
    }
}

/// Sequential windows over `n_steps`, each warm-started from the previous
/// window's final coordinates; the last window is shortened if `n_w` does
/// not divide `n_steps`.
pub fn run_wls(spec: &RomSpec, u0: &[f64], n_steps: usize) -> Result<RomTrajectory> {
    let c0 = spec.initial_coordinates(u0)?;
    let mut traj = RomTrajectory::start(spec, &c0);
    let k = spec.k();
    let mut c = c0;
    let mut u_start = match spec.state(c.as_slice()) {
        Ok(u) => u,
        Err(_) => {
            traj.mark_unstable(0);
            return Ok(traj);
        }
    };
    let mut done = 0;
    while done < n_steps {
        let steps = spec.window.min(n_steps - done);
        let mut problem = match WindowProblem::new(spec, steps, u_start.clone()) {
            Ok(p) => p,
            Err(_) => {
                traj.mark_unstable(done + 1);
                return Ok(traj);
            }
        };
        let x0 = DVector::from_fn(steps * k, |i, _| c[i % k]);
        let report = gauss_newton_solve(&mut problem, x0, &spec.settings);
        if report.termination == Termination::NonFinite
            || report.x.iter().any(|v| !v.is_finite())
            || problem.residual(&report.x).is_none()
        {
            traj.mark_unstable(done + 1);
            return Ok(traj);
        }
        traj.iterations.push(report.iterations as u32);
        traj.gradient_norms.push(report.gradient_norm);
        traj.window_converged.push(report.converged());
        traj.window_monotone.push(report.monotone());
        for i in 0..steps {
            traj.coords.push(report.x.as_slice()[i * k..(i + 1) * k].to_vec());
        }
        c = DVector::from_column_slice(&report.x.as_slice()[(steps - 1) * k..]);
        u_start = problem.terminal().0.to_vec();
        done += steps;
    }
    Ok(traj)
}
