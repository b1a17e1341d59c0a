//! Weighted inner products over fields.
//!
//! Every weight here is block diagonal with one spatially constant SPD block
//! `B` per cell, scaled by the cell volume (midpoint quadrature):
//! `⟨u, v⟩ = Σ_c vol · u_cᵀ B v_c`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::euler::{
    conserved_to_entropy_into, entropy_jacobian, entropy_jacobian_inverse, entropy_to_conserved,
    EntropyJacobian, GasModel,
};
use crate::fv::Mesh;
use crate::problems::{ProblemConfig, SnapshotSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InnerProductKind {
    L2,
    /// `L²` after scaling each variable by a reference magnitude.
    L2Star,
    /// `∂U/∂V` at a background entropy state; for entropy-variable fields.
    EntropyA,
    /// `∂V/∂U` at a background conserved state; for conserved fields.
    EntropyAtilde,
}

impl InnerProductKind {
    pub const ALL: [InnerProductKind; 4] = [
        InnerProductKind::L2,
        InnerProductKind::L2Star,
        InnerProductKind::EntropyA,
        InnerProductKind::EntropyAtilde,
    ];

    pub fn tag(self) -> u8 {
        match self {
            InnerProductKind::L2 => 0,
            InnerProductKind::L2Star => 1,
            InnerProductKind::EntropyA => 2,
            InnerProductKind::EntropyAtilde => 3,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.tag() == tag)
            .ok_or_else(|| Error::Format(format!("unknown inner-product tag {tag}")))
    }

    pub fn name(self) -> &'static str {
        match self {
            InnerProductKind::L2 => "l2",
            InnerProductKind::L2Star => "l2star",
            InnerProductKind::EntropyA => "entropy-a",
            InnerProductKind::EntropyAtilde => "entropy-atilde",
        }
    }
}

impl fmt::Display for InnerProductKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InnerProductKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "l2" => Ok(InnerProductKind::L2),
            "l2star" | "l2-star" | "l2*" => Ok(InnerProductKind::L2Star),
            "entropy-a" | "entropy" => Ok(InnerProductKind::EntropyA),
            "entropy-atilde" | "entropy-conserved" => Ok(InnerProductKind::EntropyAtilde),
            other => Err(Error::Config(format!(
                "unknown inner product '{other}' (expected l2, l2star, entropy-a, entropy-atilde)"
            ))),
        }
    }
}

/// Point data defining a weight: variable magnitudes for `L2Star`, `V∞`
/// for `EntropyA`, `U∞` for `EntropyAtilde`, and ones for `L2`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceState {
    pub values: Vec<f64>,
}

/// `(ρ∞, ρ∞a∞, [ρ∞a∞], ρ∞a∞²)` from the configuration's thermodynamics.
pub fn reference_for_l2star(cfg: &ProblemConfig) -> ReferenceState {
    ReferenceState { values: cfg.scales() }
}

/// Background state averaged over every cell of every snapshot.
///
/// For `EntropyA` the average is taken in entropy variables (`V∞`), for
/// `EntropyAtilde` in conserved variables (`U∞`). The `L²`-type kinds do not
/// use snapshot data and return their configuration reference.
pub fn reference_from_snapshots(set: &SnapshotSet, kind: InnerProductKind) -> Result<ReferenceState> {
    let nvar = set.config.nvar();
    match kind {
        InnerProductKind::L2 => Ok(ReferenceState { values: vec![1.0; nvar] }),
        InnerProductKind::L2Star => Ok(reference_for_l2star(&set.config)),
        InnerProductKind::EntropyA | InnerProductKind::EntropyAtilde => {
            if set.is_empty() {
                return Err(Error::Dimension("no snapshots to average".into()));
            }
            let gas = set.config.gas();
            let mut sum = vec![0.0; nvar];
            let mut v = vec![0.0; nvar];
            let mut count = 0usize;
            for col in &set.columns {
                for u in col.chunks_exact(nvar) {
                    let point = if kind == InnerProductKind::EntropyA {
                        conserved_to_entropy_into(u, &gas, &mut v)?;
                        &v[..]
                    } else {
                        u
                    };
                    for (s, x) in sum.iter_mut().zip(point) {
                        *s += x;
                    }
                    count += 1;
                }
            }
            let values: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
            let spec = InnerProductSpec { kind, reference: ReferenceState { values }, gas };
            // surface an inadmissible mean here rather than at first use
            spec.block()?;
            Ok(spec.reference)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InnerProductSpec {
    pub kind: InnerProductKind,
    pub reference: ReferenceState,
    pub gas: GasModel,
}

impl InnerProductSpec {
    pub fn nvar(&self) -> usize {
        self.reference.values.len()
    }

    /// The spec of `kind` for a problem, taking background states from the
    /// training snapshots where the kind needs them.
    pub fn for_snapshots(kind: InnerProductKind, set: &SnapshotSet) -> Result<Self> {
        Ok(Self { kind, reference: reference_from_snapshots(set, kind)?, gas: set.config.gas() })
    }

    /// Per-cell block `B` (without the volume factor).
    pub fn block(&self) -> Result<EntropyJacobian> {
        let r = &self.reference.values;
        let n = r.len();
        if !(3..=4).contains(&n) {
            return Err(Error::Dimension(format!("reference state has {n} components")));
        }
        match self.kind {
            InnerProductKind::L2 => Ok(EntropyJacobian::identity(n)),
            InnerProductKind::L2Star => {
                if r.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                    return Err(Error::NotSpd(format!("L2* reference must be positive: {r:?}")));
                }
                let mut b = EntropyJacobian::zeros(n);
                for (i, x) in r.iter().enumerate() {
                    b.set(i, i, 1.0 / (x * x));
                }
                Ok(b)
            }
            InnerProductKind::EntropyA => {
                let u = entropy_to_conserved(r, &self.gas)?;
                entropy_jacobian(&u, &self.gas)
            }
            InnerProductKind::EntropyAtilde => entropy_jacobian_inverse(r, &self.gas),
        }
    }
}

/// Block-diagonal SPD weight over a mesh with its Cholesky factor.
#[derive(Clone, Debug)]
pub struct WeightOperator {
    pub spec: InnerProductSpec,
    n_cells: usize,
    volume: f64,
    block: EntropyJacobian,
    /// Upper triangular, `LᵀL = B`.
    chol: EntropyJacobian,
    chol_inv: EntropyJacobian,
}

pub fn build_weight(spec: &InnerProductSpec, mesh: &Mesh) -> Result<WeightOperator> {
    if spec.nvar() != mesh.nvar() {
        return Err(Error::Dimension(format!(
            "inner product has {} components, mesh states have {}",
            spec.nvar(),
            mesh.nvar()
        )));
    }
    let block = spec.block()?;
    let chol = block
        .cholesky_upper()
        .ok_or_else(|| Error::NotSpd(format!("{} weight block is not positive definite", spec.kind)))?;
    Ok(WeightOperator {
        spec: spec.clone(),
        n_cells: mesh.n_cells(),
        volume: mesh.cell_volume(),
        block,
        chol_inv: chol.upper_inverse(),
        chol,
    })
}

impl WeightOperator {
    pub fn nvar(&self) -> usize {
        self.block.size()
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_dofs(&self) -> usize {
        self.n_cells * self.nvar()
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn block(&self) -> &EntropyJacobian {
        &self.block
    }

    pub fn cholesky_factor(&self) -> &EntropyJacobian {
        &self.chol
    }

    fn check(&self, u: &[f64]) {
        assert_eq!(u.len(), self.n_dofs(), "field length does not match the weight");
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.check(u);
        self.check(v);
        let n = self.nvar();
        let mut bv = [0.0; 4];
        let mut sum = 0.0;
        for (uc, vc) in u.chunks_exact(n).zip(v.chunks_exact(n)) {
            self.block.mul_vec(vc, &mut bv);
            sum += uc.iter().zip(&bv).map(|(a, b)| a * b).sum::<f64>();
        }
        sum * self.volume
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).sqrt()
    }

    /// `W u`, i.e. `vol · B u_c` per cell.
    pub fn apply_into(&self, u: &[f64], out: &mut [f64]) {
        self.check(u);
        let n = self.nvar();
        for (uc, oc) in u.chunks_exact(n).zip(out.chunks_exact_mut(n)) {
            self.block.mul_vec(uc, oc);
            oc.iter_mut().for_each(|x| *x *= self.volume);
        }
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.apply_into(u, &mut out);
        out
    }

    /// `√vol · L u_c` per cell, so that `⟨u, v⟩_W = (Lu)·(Lv)`.
    pub fn cholesky_apply_into(&self, u: &[f64], out: &mut [f64]) {
        self.check(u);
        let n = self.nvar();
        let s = self.volume.sqrt();
        for (uc, oc) in u.chunks_exact(n).zip(out.chunks_exact_mut(n)) {
            self.chol.mul_vec(uc, oc);
            oc.iter_mut().for_each(|x| *x *= s);
        }
    }

    pub fn cholesky_apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.cholesky_apply_into(u, &mut out);
        out
    }

    /// Inverse of [`cholesky_apply`](Self::cholesky_apply).
    pub fn cholesky_solve_into(&self, y: &[f64], out: &mut [f64]) {
        self.check(y);
        let n = self.nvar();
        let s = 1.0 / self.volume.sqrt();
        for (yc, oc) in y.chunks_exact(n).zip(out.chunks_exact_mut(n)) {
            self.chol_inv.mul_vec(yc, oc);
            oc.iter_mut().for_each(|x| *x *= s);
        }
    }

    pub fn cholesky_solve(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; y.len()];
        self.cholesky_solve_into(y, &mut out);
        out
    }
}
