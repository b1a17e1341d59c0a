//! Galerkin ROMs.
//!
//! Conserved bases solve `(ΦᵀWΦ) ċ = ΦᵀW f(Φc)`; the mass matrix is formed
//! even when it is the identity so that any basis can be paired with any
//! projection weight. The entropy-variable ROM solves
//! `(Φᵀ W A(Ṽ) Φ) ċ = ΦᵀW f(U(Ṽ))` with `Ṽ = Φc` and `A = ∂U/∂V` applied cell
//! by cell.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{RomSpec, RomTrajectory};
use crate::error::{Error, Result};
use crate::euler::{entropy_jacobian, EntropyJacobian};
use crate::fv::Rk4;
use crate::pod::VariableSet;

/// Precomputed projection data for one Galerkin ROM.
pub struct GalerkinOperator<'a> {
    spec: &'a RomSpec,
    /// `ΦᵀW`, `K × n`.
    projector: DMatrix<f64>,
    /// Factorized `ΦᵀWΦ` for conserved bases.
    mass: Option<Cholesky<f64, Dyn>>,
    basis_field: Vec<f64>,
    state: Vec<f64>,
    rate: Vec<f64>,
}

impl<'a> GalerkinOperator<'a> {
    pub fn new(spec: &'a RomSpec) -> Result<Self> {
        let n = spec.n_dofs();
        let k = spec.k();
        let mut wphi = DMatrix::zeros(n, k);
        for j in 0..k {
            spec.weight.apply_into(spec.basis.mode(j), wphi.column_mut(j).as_mut_slice());
        }
        let projector = wphi.transpose();
        let mass = match spec.basis.variables {
            VariableSet::Conserved => {
                let m = &projector * &spec.basis.modes;
                Some(Cholesky::new(symmetrize(m)).ok_or_else(|| {
                    Error::NotSpd("Galerkin mass matrix is not positive definite".into())
                })?)
            }
            VariableSet::Entropy => None,
        };
        Ok(Self {
            spec,
            projector,
            mass,
            basis_field: vec![0.0; n],
            state: vec![0.0; n],
            rate: vec![0.0; n],
        })
    }

    /// State-dependent mass `Φᵀ W A(U) Φ` at the current conserved state.
    fn entropy_mass(&self) -> Result<DMatrix<f64>> {
        let spec = self.spec;
        let nvar = spec.nvar();
        let gas = &spec.basis.spec.gas;
        let phi = &spec.basis.modes;
        let mut aphi = DMatrix::zeros(phi.nrows(), phi.ncols());
        let mut blocks: Vec<EntropyJacobian> = Vec::with_capacity(self.state.len() / nvar);
        for u in self.state.chunks_exact(nvar) {
            blocks.push(entropy_jacobian(u, gas)?);
        }
        for j in 0..phi.ncols() {
            let src = phi.column(j);
            let src = src.as_slice();
            let mut dst = aphi.column_mut(j);
            let dst = dst.as_mut_slice();
            for (c, a) in blocks.iter().enumerate() {
                let r = c * nvar..(c + 1) * nvar;
                a.mul_vec(&src[r.clone()], &mut dst[r]);
            }
        }
        Ok(&self.projector * aphi)
    }

    /// `ċ` at coordinates `c`.
    pub fn rhs(&mut self, c: &[f64], out: &mut [f64]) -> Result<()> {
        self.spec.state_into(c, &mut self.basis_field, &mut self.state)?;
        self.spec.disc.rhs(&self.state, &mut self.rate)?;
        let b = &self.projector * DVector::from_column_slice(&self.rate);
        let x = match &self.mass {
            Some(m) => m.solve(&b),
            None => {
                let m = self.entropy_mass()?;
                let chol = Cholesky::new(symmetrize(m)).ok_or_else(|| {
                    Error::NotSpd("entropy Galerkin mass matrix is not positive definite".into())
                })?;
                chol.solve(&b)
            }
        };
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Galerkin coordinate rate".into()));
        }
        out.copy_from_slice(x.as_slice());
        Ok(())
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// One evaluation of the Galerkin coordinate rate.
pub fn galerkin_rhs(spec: &RomSpec, c: &[f64]) -> Result<Vec<f64>> {
    let mut op = GalerkinOperator::new(spec)?;
    let mut out = vec![0.0; c.len()];
    op.rhs(c, &mut out)?;
    Ok(out)
}

/// RK4 in coordinate space from the projection of `u0`; stops at the first
/// non-finite or inadmissible state and marks the run unstable.
pub fn run_galerkin(spec: &RomSpec, u0: &[f64], n_steps: usize) -> Result<RomTrajectory> {
    let c0 = spec.initial_coordinates(u0)?;
    let mut traj = RomTrajectory::start(spec, &c0);
    let mut op = match GalerkinOperator::new(spec) {
        Ok(op) => op,
        Err(Error::NotSpd(_)) => {
            traj.mark_unstable(0);
            return Ok(traj);
        }
        Err(e) => return Err(e),
    };
    let mut c = c0.as_slice().to_vec();
    let mut rk = Rk4::new(c.len());
    for step in 1..=n_steps {
        let ok = rk.step(&mut c, spec.dt, |x, out| op.rhs(x, out)).is_ok()
            && c.iter().all(|x| x.is_finite());
        if !ok {
            traj.mark_unstable(step);
            break;
        }
        traj.coords.push(c.clone());
    }
    Ok(traj)
}
