//! Problem setups, the full-order runner and snapshot collection.

mod config;
mod turbulence;

pub use config::{ProblemConfig, ProblemKind, CFL, DIMENSIONAL_P, DIMENSIONAL_RHO, GAMMA};
pub(crate) use config::{parse_bool, parse_key_values, parse_num};
pub use turbulence::{
    hit_init, shell_spectrum, target_spectrum, turbulent_velocity, SpectrumShells, PEAK_WAVENUMBER,
};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::euler::primitive_to_conserved;
use crate::fv::{ConservedField, Rk4};

/// Piecewise-constant shock tube with the interface at `x = 0`.
pub fn sod_init(cfg: &ProblemConfig) -> Result<ConservedField> {
    if cfg.kind != ProblemKind::Sod {
        return Err(Error::Config(format!("sod_init called for {}", cfg.kind)));
    }
    let mesh = cfg.mesh()?;
    let rho = cfg.rho_inf();
    let p = cfg.p_inf();
    let left = primitive_to_conserved(&[rho, 0.0, GAMMA * p], GAMMA);
    let right = primitive_to_conserved(&[rho / 8.0, 0.0, GAMMA / 10.0 * p], GAMMA);
    Ok(ConservedField::from_fn(&mesh, |[x, _]| {
        if x < 0.0 {
            left.clone()
        } else {
            right.clone()
        }
    }))
}

/// Whether a point lies in the slower, lighter band `Ω₂`.
pub fn in_kh_band(x: f64, y: f64) -> bool {
    let centre = (0.8 * std::f64::consts::PI * x).cos();
    (y - centre).abs() <= 2.0
}

/// Shear layer: heavy fluid moving right outside a wavy band of light fluid
/// moving left, at uniform pressure.
pub fn kh_init(cfg: &ProblemConfig) -> Result<ConservedField> {
    if cfg.kind != ProblemKind::KelvinHelmholtz {
        return Err(Error::Config(format!("kh_init called for {}", cfg.kind)));
    }
    let mesh = cfg.mesh()?;
    let (rho, p, a) = (cfg.rho_inf(), cfg.p_inf(), cfg.a_inf());
    let outer = primitive_to_conserved(&[2.0 * rho, 0.5 * a, 0.0, 3.5 * p], GAMMA);
    let band = primitive_to_conserved(&[rho, -0.5 * a, 0.0, 3.5 * p], GAMMA);
    Ok(ConservedField::from_fn(&mesh, |[x, y]| {
        if in_kh_band(x, y) {
            band.clone()
        } else {
            outer.clone()
        }
    }))
}

pub fn initial_condition(cfg: &ProblemConfig) -> Result<ConservedField> {
    match cfg.kind {
        ProblemKind::Sod => sod_init(cfg),
        ProblemKind::KelvinHelmholtz => kh_init(cfg),
        ProblemKind::Turbulence => hit_init(cfg),
    }
}

/// Saved full-order states, one column per snapshot.
#[derive(Clone, Debug)]
pub struct SnapshotSet {
    pub config: ProblemConfig,
    pub columns: Vec<Vec<f64>>,
    pub times: Vec<f64>,
}

impl SnapshotSet {
    pub fn new(config: ProblemConfig, columns: Vec<Vec<f64>>, times: Vec<f64>) -> Result<Self> {
        if columns.len() != times.len() {
            return Err(Error::Dimension("one time per snapshot required".into()));
        }
        let rows = config.mesh()?.n_dofs();
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::Dimension(format!("snapshots must have {rows} rows")));
        }
        if columns.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("snapshot data".into()));
        }
        Ok(Self { config, columns, times })
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let rows = self.rows();
        DMatrix::from_fn(rows, self.len(), |i, j| self.columns[j][i])
    }

    /// Time between consecutive snapshots.
    pub fn interval(&self) -> f64 {
        self.config.dt() * self.config.snapshot_stride as f64
    }
}

/// Integrate the full-order model with RK4 at `Δt = 0.25 Δx / a∞`.
pub fn run_fom(cfg: &ProblemConfig) -> Result<SnapshotSet> {
    cfg.validate()?;
    let disc = cfg.discretization()?;
    let mut u = initial_condition(cfg)?.values;
    let steps = cfg.n_steps()?;
    let dt = cfg.dt();
    let mut rk = Rk4::new(u.len());
    let mut columns = vec![u.clone()];
    let mut times = vec![0.0];
    for step in 1..=steps {
        rk.step(&mut u, dt, |x, out| disc.rhs(x, out)).map_err(|e| {
            Error::NonFinite(format!("full-order model unstable at step {step}: {e}"))
        })?;
        if step % cfg.snapshot_stride == 0 {
            columns.push(u.clone());
            times.push(step as f64 * dt);
        }
    }
    SnapshotSet::new(cfg.clone(), columns, times)
}
