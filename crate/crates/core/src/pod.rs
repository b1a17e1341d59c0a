//! Vector-valued POD in a weighted inner product.
//!
//! With the per-cell Cholesky map `L` of the weight (`⟨u,v⟩_W = (Lu)·(Lv)`),
//! the weighted problem becomes an ordinary one: the left singular vectors
//! `Ũ` of `L S` are optimal for the transformed snapshots and `Φ = L⁻¹ Ũ` is
//! the `W`-orthonormal basis.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::euler::{conserved_to_entropy_into, entropy_to_conserved_into, GasModel};
use crate::inner_products::{
    build_weight, InnerProductKind, InnerProductSpec, ReferenceState, WeightOperator,
};
use crate::io::{ByteReader, ByteWriter};
use crate::problems::SnapshotSet;

pub const BASIS_MAGIC: &[u8; 4] = b"ERPB";
pub const BASIS_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VariableSet {
    Conserved,
    Entropy,
}

impl VariableSet {
    pub fn tag(self) -> u8 {
        match self {
            VariableSet::Conserved => 0,
            VariableSet::Entropy => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(VariableSet::Conserved),
            1 => Ok(VariableSet::Entropy),
            t => Err(Error::Format(format!("unknown variable-set tag {t}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            VariableSet::Conserved => "conserved",
            VariableSet::Entropy => "entropy",
        }
    }
}

impl fmt::Display for VariableSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VariableSet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "conserved" | "u" => Ok(VariableSet::Conserved),
            "entropy" | "v" => Ok(VariableSet::Entropy),
            other => Err(Error::Config(format!(
                "unknown variable set '{other}' (expected conserved or entropy)"
            ))),
        }
    }
}

/// How the weighted SVD is computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PodMethod {
    /// Thin SVD of `L S`.
    #[default]
    Svd,
    /// Eigen-decomposition of the `n_S × n_S` Gram matrix `SᵀWS`.
    Snapshots,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PodBasis {
    /// `rows × K`, orthonormal in the weight of `spec`.
    pub modes: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub spec: InnerProductSpec,
    pub variables: VariableSet,
}

impl PodBasis {
    pub fn k(&self) -> usize {
        self.modes.ncols()
    }

    pub fn rows(&self) -> usize {
        self.modes.nrows()
    }

    pub fn mode(&self, j: usize) -> &[f64] {
        let rows = self.rows();
        &self.modes.as_slice()[j * rows..(j + 1) * rows]
    }

    /// `Φ c`.
    pub fn reconstruct(&self, coords: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows()];
        self.reconstruct_into(coords, &mut out);
        out
    }

    pub fn reconstruct_into(&self, coords: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (j, &c) in coords.iter().enumerate() {
            for (o, p) in out.iter_mut().zip(self.mode(j)) {
                *o += c * p;
            }
        }
    }

    /// The first `k` modes.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.k() {
            return Err(Error::Dimension(format!("cannot truncate {} modes to {k}", self.k())));
        }
        Ok(Self {
            modes: self.modes.columns(0, k).into_owned(),
            singular_values: self.singular_values[..k].to_vec(),
            spec: self.spec.clone(),
            variables: self.variables,
        })
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = ByteWriter::default();
        w.bytes(BASIS_MAGIC);
        w.u32(BASIS_VERSION);
        w.u8(self.spec.kind.tag());
        w.u8(self.variables.tag());
        let r = &self.spec.reference.values;
        w.u32(r.len() as u32);
        w.f64s(r);
        w.f64(self.spec.gas.gamma);
        w.f64(self.spec.gas.rho_ref);
        w.f64(self.spec.gas.p_ref);
        w.u64(self.rows() as u64);
        w.u64(self.k() as u64);
        w.f64s(&self.singular_values);
        for i in 0..self.rows() {
            for j in 0..self.k() {
                w.f64(self.modes[(i, j)]);
            }
        }
        w.buf
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes, "basis file");
        r.magic(BASIS_MAGIC)?;
        let version = r.u32()?;
        if version != BASIS_VERSION {
            return Err(r.err(&format!("unsupported version {version}")));
        }
        let kind = InnerProductKind::from_tag(r.u8()?)?;
        let variables = VariableSet::from_tag(r.u8()?)?;
        let n_ref = r.u32()? as usize;
        if !(3..=4).contains(&n_ref) {
            return Err(r.err(&format!("reference block of length {n_ref}")));
        }
        let values = r.f64s(n_ref)?;
        let (gamma, rho_ref, p_ref) = (r.f64()?, r.f64()?, r.f64()?);
        let gas = GasModel::with_reference(gamma, rho_ref, p_ref)?;
        let rows = r.count()?;
        let k = r.count()?;
        let singular_values = r.f64s(k)?;
        let payload = r.f64s(rows.checked_mul(k).ok_or_else(|| r.err("size overflow"))?)?;
        r.finish()?;
        let modes = DMatrix::from_row_slice(rows, k, &payload);
        Ok(Self {
            modes,
            singular_values,
            spec: InnerProductSpec { kind, reference: ReferenceState { values }, gas },
            variables,
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

/// Snapshot matrix in the requested variables (entropy variables are
/// derived pointwise from the stored conserved states).
pub fn snapshot_matrix(set: &SnapshotSet, variables: VariableSet) -> Result<DMatrix<f64>> {
    let mut s = set.to_matrix();
    if variables == VariableSet::Entropy {
        let gas = set.config.gas();
        let nvar = set.config.nvar();
        let mut v = vec![0.0; nvar];
        for mut col in s.column_iter_mut() {
            for cell in col.as_mut_slice().chunks_exact_mut(nvar) {
                conserved_to_entropy_into(cell, &gas, &mut v)?;
                cell.copy_from_slice(&v);
            }
        }
    }
    Ok(s)
}

fn weighted_columns(s: &DMatrix<f64>, w: &WeightOperator) -> Result<DMatrix<f64>> {
    if s.nrows() != w.n_dofs() {
        return Err(Error::Dimension(format!(
            "snapshots have {} rows, weight expects {}",
            s.nrows(),
            w.n_dofs()
        )));
    }
    let mut y = s.clone();
    for (j, mut col) in y.column_iter_mut().enumerate() {
        w.cholesky_apply_into(s.column(j).as_slice(), col.as_mut_slice());
    }
    Ok(y)
}

/// Numerical rank from a descending spectrum.
pub fn numerical_rank(sigma: &[f64], rows: usize, cols: usize) -> usize {
    let Some(&top) = sigma.first() else { return 0 };
    let tol = top * rows.max(cols) as f64 * f64::EPSILON;
    sigma.iter().take_while(|&&s| s > tol).count()
}

/// All weighted singular values of `S`, descending.
pub fn pod_spectrum(s: &DMatrix<f64>, w: &WeightOperator) -> Result<Vec<f64>> {
    let y = weighted_columns(s, w)?;
    let mut sigma: Vec<f64> = y.singular_values().iter().copied().collect();
    sigma.sort_by(|a, b| b.total_cmp(a));
    Ok(sigma)
}

pub fn compute_pod(
    s: &DMatrix<f64>,
    w: &WeightOperator,
    k: usize,
    variables: VariableSet,
) -> Result<PodBasis> {
    compute_pod_with(s, w, k, variables, PodMethod::Svd)
}

pub fn compute_pod_with(
    s: &DMatrix<f64>,
    w: &WeightOperator,
    k: usize,
    variables: VariableSet,
    method: PodMethod,
) -> Result<PodBasis> {
    if k == 0 {
        return Err(Error::Config("basis dimension must be at least 1".into()));
    }
    if s.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("snapshot matrix".into()));
    }
    let y = weighted_columns(s, w)?;
    let (rows, cols) = y.shape();

    // (σ, left singular vectors of Y) in descending order
    let (sigma, u): (Vec<f64>, DMatrix<f64>) = match method {
        PodMethod::Svd => {
            let svd = y.clone().svd(true, false);
            let u = svd.u.expect("left singular vectors requested");
            let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
            order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
            let sigma = order.iter().map(|&i| svd.singular_values[i]).collect();
            let u = DMatrix::from_fn(rows, order.len(), |i, j| u[(i, order[j])]);
            (sigma, u)
        }
        PodMethod::Snapshots => {
            let gram = y.tr_mul(&y);
            let eig = SymmetricEigen::new(gram);
            let mut order: Vec<usize> = (0..cols).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
            let sigma: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0).sqrt()).collect();
            let rank = numerical_rank(&sigma, rows, cols).min(k);
            let mut u = DMatrix::zeros(rows, rank);
            for j in 0..rank {
                let v = eig.eigenvectors.column(order[j]);
                u.set_column(j, &((&y * v) / sigma[j]));
            }
            (sigma, u)
        }
    };

    let rank = numerical_rank(&sigma, rows, cols);
    if k > rank {
        return Err(Error::Dimension(format!(
            "requested {k} modes but the snapshot matrix has numerical rank {rank}"
        )));
    }

    let mut modes = DMatrix::zeros(rows, k);
    for j in 0..k {
        let mut col = modes.column_mut(j);
        w.cholesky_solve_into(u.column(j).as_slice(), col.as_mut_slice());
        let (imax, _) = col.iter().enumerate().fold((0, 0.0f64), |best, (i, x)| {
            if x.abs() > best.1 {
                (i, x.abs())
            } else {
                best
            }
        });
        if col[imax] < 0.0 {
            col.neg_mut();
        }
    }

    Ok(PodBasis {
        modes,
        singular_values: sigma[..k].to_vec(),
        spec: w.spec.clone(),
        variables,
    })
}

/// Build the weight of `kind` from the training set and compute a `k`-mode
/// basis for `variables`.
pub fn build_basis(
    set: &SnapshotSet,
    kind: InnerProductKind,
    variables: VariableSet,
    k: usize,
) -> Result<(PodBasis, WeightOperator)> {
    let spec = InnerProductSpec::for_snapshots(kind, set)?;
    let w = build_weight(&spec, &set.config.mesh()?)?;
    let s = snapshot_matrix(set, variables)?;
    Ok((compute_pod(&s, &w, k, variables)?, w))
}

/// Generalized coordinates `ΦᵀW u`.
pub fn project(field: &[f64], basis: &PodBasis, w: &WeightOperator) -> DVector<f64> {
    let wu = w.apply(field);
    DVector::from_fn(basis.k(), |j, _| dot(basis.mode(j), &wu))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Map an entropy-variable field to conserved variables cell by cell.
pub fn entropy_field_to_conserved(v: &[f64], nvar: usize, gas: &GasModel) -> Result<Vec<f64>> {
    let mut u = vec![0.0; v.len()];
    for (vc, uc) in v.chunks_exact(nvar).zip(u.chunks_exact_mut(nvar)) {
        entropy_to_conserved_into(vc, gas, uc)?;
    }
    Ok(u)
}

/// Relative `L²` projection error of each conserved variable over the
/// snapshot set: `√(Σᵢ‖q̃ᵢ − qᵢ‖² / Σᵢ‖qᵢ‖²)`. Entropy reconstructions are
/// mapped back to conserved variables before comparison.
pub fn projection_error_by_variable(
    set: &SnapshotSet,
    basis: &PodBasis,
    w: &WeightOperator,
) -> Result<Vec<f64>> {
    let nvar = set.config.nvar();
    let s = snapshot_matrix(set, basis.variables)?;
    let mut num = vec![0.0; nvar];
    let mut den = vec![0.0; nvar];
    for (j, truth) in set.columns.iter().enumerate() {
        let coords = project(s.column(j).as_slice(), basis, w);
        let mut recon = basis.reconstruct(coords.as_slice());
        if basis.variables == VariableSet::Entropy {
            recon = entropy_field_to_conserved(&recon, nvar, &basis.spec.gas)?;
        }
        for (i, (a, b)) in recon.iter().zip(truth).enumerate() {
            num[i % nvar] += (a - b) * (a - b);
            den[i % nvar] += b * b;
        }
    }
    Ok(num
        .iter()
        .zip(&den)
        .map(|(&n, &d)| {
            if d > 0.0 {
                (n / d).sqrt()
            } else if n == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .collect())
}
