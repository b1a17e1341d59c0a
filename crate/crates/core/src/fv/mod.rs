//! Cell-centred finite-volume discretization on uniform structured meshes.
//!
//! Field layout is cell-major: the `d + 2` components of cell `c` occupy
//! `values[c·(d+2) .. (c+1)·(d+2)]`, and in 2D cells are numbered with the
//! `x₁` index running fastest (`c = j·n₁ + i`). Snapshot columns use the same
//! layout.

mod time;
pub mod weno;

pub use time::{crank_nicolson_residual, crank_nicolson_residual_with, rk4_step, Rk4};
pub use weno::{weno5_reconstruct, WenoConfig};

use crate::error::{Error, Result};
use crate::euler::{self, GasModel};

/// Ghost layers per side (the WENO5 stencil radius).
pub const GHOST: usize = 3;
/// Smallest number of cells per axis.
pub const MIN_CELLS: usize = 11;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    ZeroGradient,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    dim: usize,
    cells: [usize; 2],
    lower: [f64; 2],
    upper: [f64; 2],
    boundary: [Boundary; 2],
}

impl Mesh {
    pub fn new_1d(cells: usize, lower: f64, upper: f64, boundary: Boundary) -> Result<Self> {
        Self::build(1, [cells, 1], [lower, 0.0], [upper, 1.0], [boundary, boundary])
    }

    pub fn new_2d(
        cells: [usize; 2],
        lower: [f64; 2],
        upper: [f64; 2],
        boundary: [Boundary; 2],
    ) -> Result<Self> {
        Self::build(2, cells, lower, upper, boundary)
    }

    fn build(
        dim: usize,
        cells: [usize; 2],
        lower: [f64; 2],
        upper: [f64; 2],
        boundary: [Boundary; 2],
    ) -> Result<Self> {
        for axis in 0..dim {
            if cells[axis] < MIN_CELLS {
                return Err(Error::Config(format!(
                    "need at least {MIN_CELLS} cells per axis, got {}",
                    cells[axis]
                )));
            }
            if !(upper[axis] > lower[axis]) {
                return Err(Error::Config(format!("empty domain along axis {axis}")));
            }
        }
        Ok(Self { dim, cells, lower, upper, boundary })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Components per cell.
    pub fn nvar(&self) -> usize {
        self.dim + 2
    }

    pub fn cells_along(&self, axis: usize) -> usize {
        self.cells[axis]
    }

    pub fn n_cells(&self) -> usize {
        self.cells[..self.dim].iter().product()
    }

    /// Length of a flattened field.
    pub fn n_dofs(&self) -> usize {
        self.n_cells() * self.nvar()
    }

    pub fn dx(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / self.cells[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.dx(a)).product()
    }

    pub fn bounds(&self, axis: usize) -> (f64, f64) {
        (self.lower[axis], self.upper[axis])
    }

    pub fn boundary(&self, axis: usize) -> Boundary {
        self.boundary[axis]
    }

    pub fn cell_center(&self, cell: usize) -> [f64; 2] {
        let i = cell % self.cells[0];
        let j = cell / self.cells[0];
        let x = self.lower[0] + (i as f64 + 0.5) * self.dx(0);
        let y = if self.dim == 2 {
            self.lower[1] + (j as f64 + 0.5) * self.dx(1)
        } else {
            0.0
        };
        [x, y]
    }
}

/// Cell-wise conserved state over a mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct ConservedField {
    pub mesh: Mesh,
    pub values: Vec<f64>,
}

impl ConservedField {
    pub fn zeros(mesh: &Mesh) -> Self {
        Self { mesh: mesh.clone(), values: vec![0.0; mesh.n_dofs()] }
    }

    pub fn from_values(mesh: &Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_dofs() {
            return Err(Error::Dimension(format!(
                "field has {} values, mesh expects {}",
                values.len(),
                mesh.n_dofs()
            )));
        }
        Ok(Self { mesh: mesh.clone(), values })
    }

    /// Fill from a function of the cell centre returning a conserved state.
    pub fn from_fn(mesh: &Mesh, mut f: impl FnMut([f64; 2]) -> Vec<f64>) -> Self {
        let nvar = mesh.nvar();
        let mut values = Vec::with_capacity(mesh.n_dofs());
        for c in 0..mesh.n_cells() {
            let u = f(mesh.cell_center(c));
            debug_assert_eq!(u.len(), nvar);
            values.extend_from_slice(&u);
        }
        Self { mesh: mesh.clone(), values }
    }

    pub fn cell(&self, c: usize) -> &[f64] {
        let n = self.mesh.nvar();
        &self.values[c * n..(c + 1) * n]
    }

    /// Volume-weighted total of each component.
    pub fn totals(&self) -> Vec<f64> {
        let n = self.mesh.nvar();
        let vol = self.mesh.cell_volume();
        let mut t = vec![0.0; n];
        for cell in self.values.chunks_exact(n) {
            for (ti, ui) in t.iter_mut().zip(cell) {
                *ti += ui * vol;
            }
        }
        t
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }
}

/// The semi-discrete operator `f(U) ≈ −∇·F(U)`.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub mesh: Mesh,
    pub gas: GasModel,
    pub weno: WenoConfig,
}

impl Discretization {
    pub fn new(mesh: Mesh, gas: GasModel, weno: WenoConfig) -> Self {
        Self { mesh, gas, weno }
    }

    pub fn n_dofs(&self) -> usize {
        self.mesh.n_dofs()
    }

    /// Evaluate `out = f(u)`. Fails if the rate is not finite.
    pub fn rhs(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        let mesh = &self.mesh;
        let nvar = mesh.nvar();
        if u.len() != mesh.n_dofs() || out.len() != u.len() {
            return Err(Error::Dimension(format!(
                "rhs expects {} values, got {} / {}",
                mesh.n_dofs(),
                u.len(),
                out.len()
            )));
        }
        out.iter_mut().for_each(|x| *x = 0.0);
        let eps: Vec<f64> = (0..nvar).map(|q| self.weno.epsilon_for(q)).collect();
        let nx = mesh.cells[0];
        let ny = if mesh.dim == 2 { mesh.cells[1] } else { 1 };

        let max_line = mesh.cells[..mesh.dim].iter().copied().max().unwrap_or(0);
        let mut line = LineWork::new(max_line, nvar);

        // x₁ sweeps
        for j in 0..ny {
            let cells: Vec<usize> = (0..nx).map(|i| j * nx + i).collect();
            line.sweep(u, out, &cells, 0, self, &eps);
        }
        if mesh.dim == 2 {
            for i in 0..nx {
                let cells: Vec<usize> = (0..ny).map(|j| j * nx + i).collect();
                line.sweep(u, out, &cells, 1, self, &eps);
            }
        }
        if out.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("semi-discrete rate".into()))
        }
    }

    pub fn rhs_vec(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; u.len()];
        self.rhs(u, &mut out)?;
        Ok(out)
    }
}

/// Scratch buffers for one line of cells along an axis.
struct LineWork {
    nvar: usize,
    padded: Vec<f64>,
    faces: Vec<f64>,
}

impl LineWork {
    fn new(max_len: usize, nvar: usize) -> Self {
        Self {
            nvar,
            padded: vec![0.0; (max_len + 2 * GHOST) * nvar],
            faces: vec![0.0; (max_len + 1) * nvar],
        }
    }

    fn sweep(
        &mut self,
        u: &[f64],
        out: &mut [f64],
        cells: &[usize],
        axis: usize,
        disc: &Discretization,
        eps: &[f64],
    ) {
        let nvar = self.nvar;
        let m = cells.len();
        let boundary = disc.mesh.boundary(axis);
        for k in 0..m + 2 * GHOST {
            let idx = k as isize - GHOST as isize;
            let src = match boundary {
                Boundary::Periodic => idx.rem_euclid(m as isize) as usize,
                Boundary::ZeroGradient => idx.clamp(0, m as isize - 1) as usize,
            };
            let c = cells[src];
            self.padded[k * nvar..(k + 1) * nvar].copy_from_slice(&u[c * nvar..(c + 1) * nvar]);
        }

        let gamma = disc.gas.gamma;
        let mut ul = [0.0; 4];
        let mut ur = [0.0; 4];
        let mut fl = [0.0; 4];
        let mut fr = [0.0; 4];
        // face f sits between cells f-1 and f (padded indices f+2 and f+3)
        for f in 0..=m {
            for q in 0..nvar {
                let at = |k: usize| self.padded[k * nvar + q];
                let left = [at(f), at(f + 1), at(f + 2), at(f + 3), at(f + 4)];
                let right = [at(f + 5), at(f + 4), at(f + 3), at(f + 2), at(f + 1)];
                ul[q] = weno5_reconstruct(&left, eps[q]);
                ur[q] = weno5_reconstruct(&right, eps[q]);
            }
            let face = &mut self.faces[f * nvar..(f + 1) * nvar];
            rusanov_into(&ul[..nvar], &ur[..nvar], axis, gamma, &mut fl, &mut fr, face);
        }

        let inv_dx = 1.0 / disc.mesh.dx(axis);
        for (i, &c) in cells.iter().enumerate() {
            for q in 0..nvar {
                out[c * nvar + q] -=
                    (self.faces[(i + 1) * nvar + q] - self.faces[i * nvar + q]) * inv_dx;
            }
        }
    }
}

#[inline]
fn rusanov_into(
    ul: &[f64],
    ur: &[f64],
    axis: usize,
    gamma: f64,
    fl: &mut [f64; 4],
    fr: &mut [f64; 4],
    out: &mut [f64],
) {
    let n = ul.len();
    let pl = euler::pressure_unchecked(ul, gamma);
    let pr = euler::pressure_unchecked(ur, gamma);
    euler::flux_with_pressure(ul, pl, axis, &mut fl[..n]);
    euler::flux_with_pressure(ur, pr, axis, &mut fr[..n]);
    let sl = (ul[axis + 1] / ul[0]).abs() + (gamma * pl / ul[0]).sqrt();
    let sr = (ur[axis + 1] / ur[0]).abs() + (gamma * pr / ur[0]).sqrt();
    let lam = if sl.is_nan() || sr.is_nan() { f64::NAN } else { sl.max(sr) };
    for q in 0..n {
        out[q] = 0.5 * (fl[q] + fr[q]) - 0.5 * lam * (ur[q] - ul[q]);
    }
}

/// Rusanov (local Lax–Friedrichs) flux between two admissible states.
pub fn numerical_flux(ul: &[f64], ur: &[f64], axis: usize, gas: &GasModel) -> Result<Vec<f64>> {
    if ul.len() != ur.len() {
        return Err(Error::Dimension("left/right state lengths differ".into()));
    }
    // validates admissibility and the axis
    euler::max_wave_speed(ul, axis, gas)?;
    euler::max_wave_speed(ur, axis, gas)?;
    let mut out = vec![0.0; ul.len()];
    let (mut fl, mut fr) = ([0.0; 4], [0.0; 4]);
    rusanov_into(ul, ur, axis, gas.gamma, &mut fl, &mut fr, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::euler::primitive_to_conserved;

    fn sod_states() -> (Vec<f64>, Vec<f64>) {
        (
            primitive_to_conserved(&[1.0, 0.0, 1.0], 1.4),
            primitive_to_conserved(&[0.125, 0.0, 0.1], 1.4),
        )
    }

    #[test]
    fn flux_consistency() {
        let gas = GasModel::default();
        let u = [1.1, 0.3, -0.2, 2.9];
        for axis in 0..2 {
            let f = numerical_flux(&u, &u, axis, &gas).unwrap();
            let exact = euler::analytic_flux(&u, axis, &gas).unwrap();
            assert_eq!(f, exact);
        }
    }

    #[test]
    fn sod_interface_flux_bounded() {
        let gas = GasModel::default();
        let (l, r) = sod_states();
        let f = numerical_flux(&l, &r, 0, &gas).unwrap();
        assert!(f.iter().all(|x| x.is_finite()));
        let lam = euler::max_wave_speed(&l, 0, &gas)
            .unwrap()
            .max(euler::max_wave_speed(&r, 0, &gas).unwrap());
        let bound = lam * (l[0] - r[0]).abs() / 2.0;
        // both analytic mass fluxes vanish at rest
        assert!(f[0].abs() <= bound + 1e-15);
        assert!((f[0] - bound).abs() < 1e-14);
    }

    #[test]
    fn mirrored_pair_negates_normal_momentum_flux() {
        let gas = GasModel::default();
        let l = primitive_to_conserved(&[1.0, 0.4, 1.0], 1.4);
        let r = primitive_to_conserved(&[0.3, -0.1, 0.5], 1.4);
        let mirror = |u: &[f64]| vec![u[0], -u[1], u[2]];
        let f = numerical_flux(&l, &r, 0, &gas).unwrap();
        let g = numerical_flux(&mirror(&r), &mirror(&l), 0, &gas).unwrap();
        assert!((f[0] + g[0]).abs() < 1e-14);
        assert!((f[1] - g[1]).abs() < 1e-14);
        assert!((f[2] + g[2]).abs() < 1e-14);
    }

    #[test]
    fn mesh_rejects_too_few_cells() {
        assert!(Mesh::new_1d(10, 0.0, 1.0, Boundary::Periodic).is_err());
        assert!(Mesh::new_1d(11, 0.0, 1.0, Boundary::Periodic).is_ok());
        assert!(Mesh::new_1d(20, 1.0, 1.0, Boundary::Periodic).is_err());
    }

    #[test]
    fn free_stream_preserved() {
        let gas = GasModel::default();
        for boundary in [Boundary::Periodic, Boundary::ZeroGradient] {
            let mesh =
                Mesh::new_2d([16, 13], [0.0, -1.0], [2.0, 1.0], [boundary, boundary]).unwrap();
            let u0 = primitive_to_conserved(&[1.3, 0.7, -0.4, 2.1], 1.4);
            let field = ConservedField::from_fn(&mesh, |_| u0.clone());
            let disc = Discretization::new(mesh, gas, WenoConfig::default());
            let r = disc.rhs_vec(&field.values).unwrap();
            assert!(r.iter().all(|x| x.abs() < 1e-13), "{boundary:?}");
        }
        let mesh = Mesh::new_1d(40, -0.5, 0.5, Boundary::ZeroGradient).unwrap();
        let u0 = primitive_to_conserved(&[1.0, 0.0, 1.0], 1.4);
        let field = ConservedField::from_fn(&mesh, |_| u0.clone());
        let disc = Discretization::new(mesh, gas, WenoConfig::default());
        assert!(disc.rhs_vec(&field.values).unwrap().iter().all(|x| x.abs() < 1e-13));
    }

    #[test]
    fn periodic_rate_telescopes() {
        let gas = GasModel::default();
        let mesh = Mesh::new_2d(
            [20, 16],
            [0.0, 0.0],
            [1.0, 1.0],
            [Boundary::Periodic, Boundary::Periodic],
        )
        .unwrap();
        let field = ConservedField::from_fn(&mesh, |[x, y]| {
            let tau = std::f64::consts::TAU;
            primitive_to_conserved(
                &[
                    1.0 + 0.2 * (tau * x).sin() * (tau * y).cos(),
                    0.3 + 0.1 * (tau * y).sin(),
                    -0.2 + 0.1 * (tau * x).cos(),
                    1.0 + 0.1 * (tau * (x + y)).sin(),
                ],
                1.4,
            )
        });
        let disc = Discretization::new(mesh.clone(), gas, WenoConfig::default());
        let r = disc.rhs_vec(&field.values).unwrap();
        let rate = ConservedField::from_values(&mesh, r.clone()).unwrap().totals();
        let scale: Vec<f64> = (0..4)
            .map(|q| r.iter().skip(q).step_by(4).map(|x| x.abs()).sum::<f64>() * mesh.cell_volume())
            .collect();
        for q in 0..4 {
            assert!(rate[q].abs() <= 1e-12 * scale[q], "component {q}: {}", rate[q]);
        }
    }

    #[test]
    fn negative_pressure_is_flagged() {
        let gas = GasModel::default();
        let mesh = Mesh::new_1d(20, 0.0, 1.0, Boundary::Periodic).unwrap();
        let mut field = ConservedField::from_fn(&mesh, |_| vec![1.0, 0.0, 2.5]);
        field.values[3 * 5 + 2] = -1.0;
        let disc = Discretization::new(mesh, gas, WenoConfig::default());
        assert!(matches!(disc.rhs_vec(&field.values), Err(Error::NonFinite(_))));
    }
}
