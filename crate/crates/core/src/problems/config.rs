use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::euler::GasModel;
use crate::fv::{Boundary, Discretization, Mesh, WenoConfig};

pub const GAMMA: f64 = 1.4;
pub const DIMENSIONAL_RHO: f64 = 1.225;
pub const DIMENSIONAL_P: f64 = 101325.0;
/// Time step as a fraction of `Δx / a∞`.
pub const CFL: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    Sod,
    KelvinHelmholtz,
    Turbulence,
}

impl ProblemKind {
    pub fn dim(self) -> usize {
        match self {
            ProblemKind::Sod => 1,
            _ => 2,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            ProblemKind::Sod => "sod",
            ProblemKind::KelvinHelmholtz => "kelvin_helmholtz",
            ProblemKind::Turbulence => "turbulence",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sod" => Ok(ProblemKind::Sod),
            "kelvin_helmholtz" | "kh" => Ok(ProblemKind::KelvinHelmholtz),
            "turbulence" | "hit" => Ok(ProblemKind::Turbulence),
            other => Err(Error::Config(format!("unknown problem '{other}'"))),
        }
    }
}

/// One problem setup in either its dimensional or non-dimensional units.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemConfig {
    pub kind: ProblemKind,
    pub dimensional: bool,
    /// Cells per axis.
    pub cells: usize,
    /// Final time in units of `L / a∞`.
    pub final_time_nd: f64,
    pub snapshot_stride: usize,
    pub weno_epsilon: f64,
    pub seed: u64,
    /// Turbulence velocity scale `u₀` in units of `a∞`.
    pub hit_u0: f64,
}

impl ProblemConfig {
    fn base(kind: ProblemKind, dimensional: bool) -> Self {
        let (cells, final_time_nd, snapshot_stride, weno_epsilon) = match kind {
            ProblemKind::Sod => (500, 0.25, 1, 1e-6),
            ProblemKind::KelvinHelmholtz => (256, 50.0, 5, 1e-20),
            ProblemKind::Turbulence => (512, 20.0, 5, 1e-20),
        };
        Self {
            kind,
            dimensional,
            cells,
            final_time_nd,
            snapshot_stride,
            weno_epsilon,
            seed: 0,
            hit_u0: 25.0,
        }
    }

    /// Full-size setups.
    pub fn paper(kind: ProblemKind, dimensional: bool) -> Self {
        Self::base(kind, dimensional)
    }

    /// Reduced setups that run in seconds: Sod on 200 cells, the 2D
    /// problems on 64² over a shortened horizon.
    pub fn desk(kind: ProblemKind, dimensional: bool) -> Self {
        let mut c = Self::base(kind, dimensional);
        match kind {
            ProblemKind::Sod => c.cells = 200,
            ProblemKind::KelvinHelmholtz => {
                c.cells = 64;
                c.final_time_nd = 5.0;
            }
            ProblemKind::Turbulence => {
                c.cells = 64;
                c.final_time_nd = 2.5;
                c.hit_u0 = 0.1;
            }
        }
        c
    }

    /// The same setup in the other unit system.
    pub fn with_dimensional(&self, dimensional: bool) -> Self {
        Self { dimensional, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells < crate::fv::MIN_CELLS {
            return Err(Error::Config(format!("cells = {} is too small", self.cells)));
        }
        if !(self.final_time_nd > 0.0) {
            return Err(Error::Config("final_time_nd must be positive".into()));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::Config("snapshot_stride must be at least 1".into()));
        }
        if !(self.weno_epsilon > 0.0) {
            return Err(Error::Config("weno_epsilon must be positive".into()));
        }
        self.n_steps()?;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn nvar(&self) -> usize {
        self.dim() + 2
    }

    pub fn rho_inf(&self) -> f64 {
        if self.dimensional {
            DIMENSIONAL_RHO
        } else {
            1.0
        }
    }

    pub fn p_inf(&self) -> f64 {
        if self.dimensional {
            DIMENSIONAL_P
        } else {
            1.0 / GAMMA
        }
    }

    pub fn a_inf(&self) -> f64 {
        (GAMMA * self.p_inf() / self.rho_inf()).sqrt()
    }

    /// Gas model whose entropy reference is `(ρ∞, ρ∞a∞²)`.
    pub fn gas(&self) -> GasModel {
        let rho = self.rho_inf();
        GasModel::with_reference(GAMMA, rho, rho * self.a_inf().powi(2))
            .expect("reference state is positive")
    }

    /// Magnitudes `(ρ∞, ρ∞a∞, [ρ∞a∞], ρ∞a∞²)` of the conserved variables.
    pub fn scales(&self) -> Vec<f64> {
        let rho = self.rho_inf();
        let a = self.a_inf();
        let mut s = vec![rho];
        s.extend(std::iter::repeat_n(rho * a, self.dim()));
        s.push(rho * a * a);
        s
    }

    pub fn mesh(&self) -> Result<Mesh> {
        match self.kind {
            ProblemKind::Sod => Mesh::new_1d(self.cells, -0.5, 0.5, Boundary::ZeroGradient),
            _ => Mesh::new_2d(
                [self.cells, self.cells],
                [-5.0, -5.0],
                [5.0, 5.0],
                [Boundary::Periodic, Boundary::Periodic],
            ),
        }
    }

    pub fn weno(&self) -> WenoConfig {
        WenoConfig::new(self.weno_epsilon).with_scales(self.scales())
    }

    pub fn discretization(&self) -> Result<Discretization> {
        Ok(Discretization::new(self.mesh()?, self.gas(), self.weno()))
    }

    fn dx_nd(&self) -> f64 {
        match self.kind {
            ProblemKind::Sod => 1.0 / self.cells as f64,
            _ => 10.0 / self.cells as f64,
        }
    }

    pub fn dt(&self) -> f64 {
        CFL * self.dx_nd() / self.a_inf()
    }

    pub fn final_time(&self) -> f64 {
        self.final_time_nd / self.a_inf()
    }

    pub fn n_steps(&self) -> Result<usize> {
        let steps = self.final_time_nd / (CFL * self.dx_nd());
        let rounded = steps.round();
        if rounded < 1.0 || (steps - rounded).abs() > 1e-9 * steps.max(1.0) {
            return Err(Error::Config(format!(
                "final time {} is not a whole number of steps ({steps})",
                self.final_time_nd
            )));
        }
        Ok(rounded as usize)
    }

    pub fn n_snapshots(&self) -> Result<usize> {
        Ok(1 + self.n_steps()? / self.snapshot_stride)
    }

    pub fn to_text(&self) -> String {
        format!(
            "problem = {}\ndimensional = {}\ncells = {}\nfinal_time_nd = {:?}\nsnapshot_stride = {}\nweno_epsilon = {:?}\nseed = {}\nhit_u0 = {:?}\n",
            self.kind,
            self.dimensional,
            self.cells,
            self.final_time_nd,
            self.snapshot_stride,
            self.weno_epsilon,
            self.seed,
            self.hit_u0
        )
    }

    /// Parse `key = value` lines; `#` starts a comment. Missing keys take
    /// the desk defaults for the named problem.
    pub fn parse(text: &str) -> Result<Self> {
        let pairs = parse_key_values(text)?;
        let get = |k: &str| pairs.iter().find(|(key, _)| key == k).map(|(_, v)| v.as_str());
        let kind: ProblemKind = get("problem")
            .ok_or_else(|| Error::Config("missing key 'problem'".into()))?
            .parse()?;
        let dimensional = match get("dimensional") {
            Some(v) => parse_bool(v)?,
            None => false,
        };
        let mut cfg = Self::desk(kind, dimensional);
        for (key, value) in &pairs {
            match key.as_str() {
                "problem" | "dimensional" => {}
                "cells" => cfg.cells = parse_num(key, value)?,
                "final_time_nd" => cfg.final_time_nd = parse_num(key, value)?,
                "snapshot_stride" => cfg.snapshot_stride = parse_num(key, value)?,
                "weno_epsilon" => cfg.weno_epsilon = parse_num(key, value)?,
                "seed" => cfg.seed = parse_num(key, value)?,
                "hit_u0" => cfg.hit_u0 = parse_num(key, value)?,
                other => return Err(Error::Config(format!("unknown key '{other}'"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

pub(crate) fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", lineno + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub(crate) fn parse_bool(v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(Error::Config(format!("expected a boolean, got '{other}'"))),
    }
}

pub(crate) fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("key '{key}': cannot parse '{v}'")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_thermodynamics() {
        let nd = ProblemConfig::desk(ProblemKind::Sod, false);
        assert_eq!(nd.rho_inf(), 1.0);
        assert!((nd.a_inf() - 1.0).abs() < 1e-15);
        let dim = nd.with_dimensional(true);
        assert!((dim.a_inf() - 340.294).abs() < 1e-3);
        assert!((dim.gas().p_ref - GAMMA * DIMENSIONAL_P).abs() < 1e-9);
    }

    #[test]
    fn paper_sod_step_count() {
        let cfg = ProblemConfig::paper(ProblemKind::Sod, false);
        assert_eq!(cfg.n_steps().unwrap(), 500);
        assert_eq!(cfg.n_snapshots().unwrap(), 501);
        let dim = cfg.with_dimensional(true);
        assert_eq!(dim.n_steps().unwrap(), 500);
        assert!((dim.dt() * 500.0 - dim.final_time()).abs() < 1e-15);
    }

    #[test]
    fn text_roundtrip() {
        let mut cfg = ProblemConfig::desk(ProblemKind::Turbulence, true);
        cfg.seed = 42;
        cfg.weno_epsilon = 1e-20;
        let back = ProblemConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ProblemConfig::parse("problem = nope").is_err());
        assert!(ProblemConfig::parse("cells = 10").is_err());
        assert!(ProblemConfig::parse("problem = sod\ncells = 5").is_err());
        assert!(ProblemConfig::parse("problem = sod\nfinal_time_nd = 0.2501").is_err());
        assert!(ProblemConfig::parse("problem = sod\ncolour = red").is_err());
    }
}
