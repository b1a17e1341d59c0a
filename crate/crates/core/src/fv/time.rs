use super::Discretization;
use crate::error::Result;

/// Classical four-stage Runge–Kutta with reusable stage storage.
///
/// `u ← u + dt/6 (k₁ + 2k₂ + 2k₃ + k₄)` with stages at `t`, `t+dt/2`,
/// `t+dt/2`, `t+dt`.
#[derive(Clone, Debug)]
pub struct Rk4 {
    k: [Vec<f64>; 4],
    stage: Vec<f64>,
}

impl Rk4 {
    pub fn new(n: usize) -> Self {
        Self {
            k: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            stage: vec![0.0; n],
        }
    }

    pub fn step<F>(&mut self, u: &mut [f64], dt: f64, mut rhs: F) -> Result<()>
    where
        F: FnMut(&[f64], &mut [f64]) -> Result<()>,
    {
        let n = u.len();
        if self.stage.len() != n {
            *self = Self::new(n);
        }
        let [k1, k2, k3, k4] = &mut self.k;
        rhs(u, k1)?;
        for i in 0..n {
            self.stage[i] = u[i] + 0.5 * dt * k1[i];
        }
        rhs(&self.stage, k2)?;
        for i in 0..n {
            self.stage[i] = u[i] + 0.5 * dt * k2[i];
        }
        rhs(&self.stage, k3)?;
        for i in 0..n {
            self.stage[i] = u[i] + dt * k3[i];
        }
        rhs(&self.stage, k4)?;
        for i in 0..n {
            u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        Ok(())
    }
}

/// One RK4 step returning the new state.
pub fn rk4_step<F>(u: &[f64], dt: f64, rhs: F) -> Result<Vec<f64>>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    let mut out = u.to_vec();
    Rk4::new(u.len()).step(&mut out, dt, rhs)?;
    Ok(out)
}

/// `(u_new − u_old)/dt − ½(f(u_new) + f(u_old))`.
pub fn crank_nicolson_residual(
    disc: &Discretization,
    u_new: &[f64],
    u_old: &[f64],
    dt: f64,
) -> Result<Vec<f64>> {
    let f_new = disc.rhs_vec(u_new)?;
    let f_old = disc.rhs_vec(u_old)?;
    let mut r = vec![0.0; u_new.len()];
    crank_nicolson_residual_with(u_new, u_old, &f_new, &f_old, dt, &mut r);
    Ok(r)
}

/// Residual from precomputed rates.
#[inline]
pub fn crank_nicolson_residual_with(
    u_new: &[f64],
    u_old: &[f64],
    f_new: &[f64],
    f_old: &[f64],
    dt: f64,
    out: &mut [f64],
) {
    let inv_dt = 1.0 / dt;
    for i in 0..out.len() {
        out[i] = (u_new[i] - u_old[i]) * inv_dt - 0.5 * (f_new[i] + f_old[i]);
    }
}
