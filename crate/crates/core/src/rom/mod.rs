//! Reduced-order models: Galerkin projection advanced with RK4, and windowed
//! least-squares residual minimization over Crank–Nicolson steps.

mod galerkin;
pub mod lsq;
mod wls;

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DVector;

pub use galerkin::{galerkin_rhs, run_galerkin, GalerkinOperator};
pub use lsq::{gauss_newton_solve, LeastSquaresProblem, LeastSquaresSettings, SolveReport, Termination};
pub use wls::{run_wls, WindowProblem};

use crate::error::{Error, Result};
use crate::euler::entropy_to_conserved_into;
use crate::fv::Discretization;
use crate::inner_products::{build_weight, InnerProductKind, InnerProductSpec, WeightOperator};
use crate::io::{ByteReader, ByteWriter};
use crate::pod::{build_basis, project, PodBasis, VariableSet};
use crate::problems::SnapshotSet;

pub const TRAJECTORY_MAGIC: &[u8; 4] = b"ERTJ";
pub const TRAJECTORY_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formulation {
    GalConsL2,
    GalConsL2Star,
    GalEntL2,
    WlsConsL2,
    WlsConsL2Star,
    WlsConsEnt,
    WlsEntEnt,
}

impl Formulation {
    pub const ALL: [Formulation; 7] = [
        Formulation::GalConsL2,
        Formulation::GalConsL2Star,
        Formulation::GalEntL2,
        Formulation::WlsConsL2,
        Formulation::WlsConsL2Star,
        Formulation::WlsConsEnt,
        Formulation::WlsEntEnt,
    ];

    pub fn tag(self) -> u8 {
        self as u8
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        Self::ALL
            .get(tag as usize)
            .copied()
            .ok_or_else(|| Error::Format(format!("unknown formulation tag {tag}")))
    }

    pub fn name(self) -> &'static str {
        match self {
            Formulation::GalConsL2 => "gal-cons-l2",
            Formulation::GalConsL2Star => "gal-cons-l2star",
            Formulation::GalEntL2 => "gal-ent-l2",
            Formulation::WlsConsL2 => "wls-cons-l2",
            Formulation::WlsConsL2Star => "wls-cons-l2star",
            Formulation::WlsConsEnt => "wls-cons-ent",
            Formulation::WlsEntEnt => "wls-ent-ent",
        }
    }

    pub fn is_wls(self) -> bool {
        self >= Formulation::WlsConsL2
    }

    /// Variables the trial basis represents.
    pub fn basis_variables(self) -> VariableSet {
        match self {
            Formulation::GalEntL2 | Formulation::WlsEntEnt => VariableSet::Entropy,
            _ => VariableSet::Conserved,
        }
    }

    /// Inner product the POD basis is computed in.
    pub fn basis_inner_product(self) -> InnerProductKind {
        match self {
            Formulation::GalConsL2 | Formulation::WlsConsL2 => InnerProductKind::L2,
            Formulation::GalConsL2Star | Formulation::WlsConsL2Star | Formulation::WlsConsEnt => {
                InnerProductKind::L2Star
            }
            Formulation::GalEntL2 | Formulation::WlsEntEnt => InnerProductKind::EntropyA,
        }
    }

    /// Inner product of the Galerkin projection or of the residual norm.
    pub fn residual_inner_product(self) -> InnerProductKind {
        match self {
            Formulation::GalConsL2 | Formulation::WlsConsL2 | Formulation::GalEntL2 => {
                InnerProductKind::L2
            }
            Formulation::GalConsL2Star | Formulation::WlsConsL2Star => InnerProductKind::L2Star,
            Formulation::WlsConsEnt | Formulation::WlsEntEnt => InnerProductKind::EntropyAtilde,
        }
    }

    pub fn dimensionally_consistent(self) -> bool {
        !matches!(self, Formulation::GalConsL2 | Formulation::WlsConsL2)
    }

    /// Window length in steps used for a problem's WLS runs.
    pub fn default_window(self, dim: usize) -> usize {
        match (self.is_wls(), dim) {
            (false, _) => 1,
            (true, 1) => 10,
            (true, _) => 2,
        }
    }
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Formulation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect();
        let key = key.to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|f| f.name().replace('-', "") == key || format!("{f:?}").to_ascii_lowercase() == key)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|f| f.name()).collect();
                Error::Config(format!("unknown formulation '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

/// The pairing rules, printed when a basis or weight does not fit.
pub fn pairing_table() -> String {
    let mut out = String::from("formulation       basis vars  basis POD       residual/projection\n");
    for f in Formulation::ALL {
        out.push_str(&format!(
            "{:<17} {:<11} {:<15} {}\n",
            f.name(),
            f.basis_variables().name(),
            f.basis_inner_product().name(),
            f.residual_inner_product().name()
        ));
    }
    out
}

/// Everything needed to advance one ROM.
#[derive(Clone, Debug)]
pub struct RomSpec {
    pub formulation: Formulation,
    pub basis: PodBasis,
    /// Projection (Galerkin) or residual (WLS) weight.
    pub weight: WeightOperator,
    /// Weight the basis is orthonormal in; used to project initial states.
    pub basis_weight: WeightOperator,
    pub disc: Discretization,
    pub dt: f64,
    /// Steps per window (WLS only).
    pub window: usize,
    pub settings: LeastSquaresSettings,
}

impl RomSpec {
    pub fn new(
        formulation: Formulation,
        basis: PodBasis,
        weight: WeightOperator,
        disc: Discretization,
        dt: f64,
        window: usize,
        settings: LeastSquaresSettings,
    ) -> Result<Self> {
        let mismatch = |what: String| {
            Error::Pairing(format!("{formulation}: {what}\n{}", pairing_table()))
        };
        if basis.variables != formulation.basis_variables() {
            return Err(mismatch(format!(
                "needs a basis of {} variables, got {}",
                formulation.basis_variables(),
                basis.variables
            )));
        }
        if basis.spec.kind != formulation.basis_inner_product() {
            return Err(mismatch(format!(
                "needs a basis computed in {}, got {}",
                formulation.basis_inner_product(),
                basis.spec.kind
            )));
        }
        if weight.spec.kind != formulation.residual_inner_product() {
            return Err(mismatch(format!(
                "needs a {} weight, got {}",
                formulation.residual_inner_product(),
                weight.spec.kind
            )));
        }
        if basis.rows() != disc.n_dofs() || weight.n_dofs() != disc.n_dofs() {
            return Err(Error::Dimension(format!(
                "basis has {} rows, weight {} and discretization {}",
                basis.rows(),
                weight.n_dofs(),
                disc.n_dofs()
            )));
        }
        if formulation.is_wls() && window == 0 {
            return Err(Error::Config("window length must be at least 1".into()));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        settings.validate()?;
        let basis_weight = build_weight(&basis.spec, &disc.mesh)?;
        Ok(Self { formulation, basis, weight, basis_weight, disc, dt, window, settings })
    }

    /// Basis, weights and time step for `formulation` from a training set,
    /// with the problem's default window.
    pub fn from_snapshots(formulation: Formulation, set: &SnapshotSet, k: usize) -> Result<Self> {
        let (basis, _) = build_basis(
            set,
            formulation.basis_inner_product(),
            formulation.basis_variables(),
            k,
        )?;
        Self::with_basis(formulation, basis, set)
    }

    /// As [`from_snapshots`](Self::from_snapshots) with a precomputed basis.
    pub fn with_basis(formulation: Formulation, basis: PodBasis, set: &SnapshotSet) -> Result<Self> {
        let cfg = &set.config;
        let wspec = InnerProductSpec::for_snapshots(formulation.residual_inner_product(), set)?;
        let weight = build_weight(&wspec, &cfg.mesh()?)?;
        Self::new(
            formulation,
            basis,
            weight,
            cfg.discretization()?,
            cfg.dt(),
            formulation.default_window(cfg.dim()),
            LeastSquaresSettings::default(),
        )
    }

    pub fn k(&self) -> usize {
        self.basis.k()
    }

    pub fn n_dofs(&self) -> usize {
        self.disc.n_dofs()
    }

    pub fn nvar(&self) -> usize {
        self.disc.mesh.nvar()
    }

    /// Conserved state represented by coordinates `c`.
    pub fn state_into(&self, c: &[f64], basis_field: &mut [f64], out: &mut [f64]) -> Result<()> {
        match self.basis.variables {
            VariableSet::Conserved => {
                self.basis.reconstruct_into(c, out);
                Ok(())
            }
            VariableSet::Entropy => {
                self.basis.reconstruct_into(c, basis_field);
                let nvar = self.nvar();
                let gas = &self.basis.spec.gas;
                for (v, u) in basis_field.chunks_exact(nvar).zip(out.chunks_exact_mut(nvar)) {
                    entropy_to_conserved_into(v, gas, u)?;
                }
                Ok(())
            }
        }
    }

    pub fn state(&self, c: &[f64]) -> Result<Vec<f64>> {
        let mut scratch = vec![0.0; self.n_dofs()];
        let mut out = vec![0.0; self.n_dofs()];
        self.state_into(c, &mut scratch, &mut out)?;
        Ok(out)
    }

    /// Coordinates of a conserved state, projected in the basis's own inner
    /// product and variables.
    pub fn initial_coordinates(&self, u0: &[f64]) -> Result<DVector<f64>> {
        let field = match self.basis.variables {
            VariableSet::Conserved => u0.to_vec(),
            VariableSet::Entropy => {
                let nvar = self.nvar();
                let gas = &self.basis.spec.gas;
                let mut v = vec![0.0; u0.len()];
                for (uc, vc) in u0.chunks_exact(nvar).zip(v.chunks_exact_mut(nvar)) {
                    crate::euler::conserved_to_entropy_into(uc, gas, vc)?;
                }
                v
            }
        };
        Ok(project(&field, &self.basis, &self.basis_weight))
    }
}

/// Generalized coordinates over time plus run diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct RomTrajectory {
    pub formulation: Formulation,
    pub k: usize,
    pub dt: f64,
    /// Coordinates after every completed step, starting at `t = 0`.
    pub coords: Vec<Vec<f64>>,
    pub stable: bool,
    pub t_first_nan: Option<f64>,
    /// Accepted least-squares iterations per window (empty for Galerkin).
    pub iterations: Vec<u32>,
    /// `‖Jᵀr‖` at the end of each window.
    pub gradient_norms: Vec<f64>,
    /// Whether each window met a stopping tolerance.
    pub window_converged: Vec<bool>,
    /// Whether the accepted residual norms decreased within each window.
    pub window_monotone: Vec<bool>,
    pub wall_seconds: f64,
}

impl RomTrajectory {
    pub(crate) fn start(spec: &RomSpec, c0: &DVector<f64>) -> Self {
        Self {
            formulation: spec.formulation,
            k: spec.k(),
            dt: spec.dt,
            coords: vec![c0.as_slice().to_vec()],
            stable: true,
            t_first_nan: None,
            iterations: Vec::new(),
            gradient_norms: Vec::new(),
            window_converged: Vec::new(),
            window_monotone: Vec::new(),
            wall_seconds: 0.0,
        }
    }

    pub(crate) fn mark_unstable(&mut self, step: usize) {
        self.stable = false;
        self.t_first_nan = Some(step as f64 * self.dt);
    }

    pub fn n_steps(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn time(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = ByteWriter::default();
        w.bytes(TRAJECTORY_MAGIC);
        w.u32(TRAJECTORY_VERSION);
        w.u8(self.formulation.tag());
        w.u64(self.k as u64);
        w.u64(self.coords.len() as u64);
        for c in &self.coords {
            w.f64s(c);
        }
        w.u8(self.stable as u8);
        w.u64(self.iterations.len() as u64);
        for &it in &self.iterations {
            w.u32(it);
        }
        w.buf
    }

    /// Decodes the stored fields; `dt` and the per-window diagnostics other
    /// than iteration counts are not part of the format.
    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes, "trajectory file");
        r.magic(TRAJECTORY_MAGIC)?;
        let version = r.u32()?;
        if version != TRAJECTORY_VERSION {
            return Err(r.err(&format!("unsupported version {version}")));
        }
        let formulation = Formulation::from_tag(r.u8()?)?;
        let k = r.count()?;
        let n = r.count()?;
        let mut coords = Vec::with_capacity(n.min(1 << 20));
        for _ in 0..n {
            coords.push(r.f64s(k)?);
        }
        let stable = match r.u8()? {
            0 => false,
            1 => true,
            x => return Err(r.err(&format!("bad stability flag {x}"))),
        };
        let nw = r.count()?;
        let mut iterations = Vec::with_capacity(nw.min(1 << 20));
        for _ in 0..nw {
            iterations.push(r.u32()?);
        }
        r.finish()?;
        Ok(Self {
            formulation,
            k,
            dt: f64::NAN,
            coords,
            stable,
            t_first_nan: None,
            iterations,
            gradient_norms: Vec::new(),
            window_converged: Vec::new(),
            window_monotone: Vec::new(),
            wall_seconds: 0.0,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.encode())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::decode(&std::fs::read(path)?)
    }
}

/// Advance `n_steps` from the conserved state `u0` with the method the
/// formulation calls for.
pub fn run_rom(spec: &RomSpec, u0: &[f64], n_steps: usize) -> Result<RomTrajectory> {
    let start = Instant::now();
    let mut traj = if spec.formulation.is_wls() {
        run_wls(spec, u0, n_steps)?
    } else {
        run_galerkin(spec, u0, n_steps)?
    };
    traj.wall_seconds = start.elapsed().as_secs_f64();
    Ok(traj)
}

/// Reproductive run over the training horizon of `set`.
pub fn run_reproductive(spec: &RomSpec, set: &SnapshotSet) -> Result<RomTrajectory> {
    let u0 = set.columns.first().ok_or_else(|| Error::Dimension("empty snapshot set".into()))?;
    run_rom(spec, u0, set.config.n_steps()?)
}
