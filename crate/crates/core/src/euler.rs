//! Pointwise thermodynamics of a calorically perfect gas.
//!
//! States are plain slices of length `d + 2` ordered `(ρ, ρu₁, [ρu₂], ρE)`;
//! in 1D the second momentum slot is absent, and the same holds for the
//! entropy variables `(V₁, ρu₁/p, [ρu₂/p], −ρ/p)`.
//!
//! The entropy `s = ln(p/p_ref) − γ ln(ρ/ρ_ref)` is measured against the
//! reference thermodynamic state carried by [`GasModel`]. With the default
//! unit reference this is the usual `ln p − γ ln ρ`; a configuration-level
//! reference keeps `V₁` invariant under a change of units, so that the
//! entropy variables rescale linearly with the conserved ones.

use crate::error::{Error, Result};

/// States with `ρ` or `p` below this fraction of the reference are rejected.
pub const ADMISSIBILITY_FACTOR: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GasModel {
    pub gamma: f64,
    /// Reference density used to measure entropy and admissibility.
    pub rho_ref: f64,
    /// Reference pressure used to measure entropy and admissibility.
    pub p_ref: f64,
}

impl Default for GasModel {
    fn default() -> Self {
        Self::new(1.4).expect("gamma = 1.4 is valid")
    }
}

impl GasModel {
    pub fn new(gamma: f64) -> Result<Self> {
        Self::with_reference(gamma, 1.0, 1.0)
    }

    pub fn with_reference(gamma: f64, rho_ref: f64, p_ref: f64) -> Result<Self> {
        if !(gamma > 1.0 && gamma.is_finite()) {
            return Err(Error::Config(format!("gamma must be > 1, got {gamma}")));
        }
        if !(rho_ref > 0.0 && p_ref > 0.0 && rho_ref.is_finite() && p_ref.is_finite()) {
            return Err(Error::Config(format!(
                "reference state must be positive, got rho_ref={rho_ref}, p_ref={p_ref}"
            )));
        }
        Ok(Self { gamma, rho_ref, p_ref })
    }

    fn check_admissible(&self, rho: f64, p: f64) -> Result<()> {
        if !(rho > ADMISSIBILITY_FACTOR * self.rho_ref) {
            return Err(Error::Inadmissible(format!("density {rho}")));
        }
        if !(p > ADMISSIBILITY_FACTOR * self.p_ref) {
            return Err(Error::Inadmissible(format!("pressure {p}")));
        }
        Ok(())
    }
}

/// Spatial dimension of a state with `len` components.
pub fn dim_of(len: usize) -> usize {
    debug_assert!(len == 3 || len == 4);
    len - 2
}

fn check_finite(u: &[f64]) -> Result<()> {
    if u.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("state {u:?}")))
    }
}

#[inline]
fn kinetic(u: &[f64]) -> f64 {
    let n = u.len();
    u[1..n - 1].iter().map(|m| m * m).sum::<f64>() * 0.5 / u[0]
}

/// Pressure `(γ−1)(ρE − ½ρ|u|²)` without any admissibility check.
#[inline]
pub fn pressure_unchecked(u: &[f64], gamma: f64) -> f64 {
    (gamma - 1.0) * (u[u.len() - 1] - kinetic(u))
}

/// Pressure of a conserved state. The result may be non-positive.
pub fn pressure(u: &[f64], gas: &GasModel) -> Result<f64> {
    check_finite(u)?;
    if !(u[0] > 0.0) {
        return Err(Error::Inadmissible(format!("density {}", u[0])));
    }
    Ok(pressure_unchecked(u, gas.gamma))
}

/// Hughes entropy variables of a conserved state, written into `v`.
pub fn conserved_to_entropy_into(u: &[f64], gas: &GasModel, v: &mut [f64]) -> Result<()> {
    check_finite(u)?;
    let n = u.len();
    let rho = u[0];
    let p = if rho > 0.0 {
        pressure_unchecked(u, gas.gamma)
    } else {
        f64::NAN
    };
    gas.check_admissible(rho, p)?;
    let g = gas.gamma;
    let s = (p / gas.p_ref).ln() - g * (rho / gas.rho_ref).ln();
    v[0] = -s / (g - 1.0) + (g + 1.0) / (g - 1.0) - u[n - 1] / p;
    for i in 1..n - 1 {
        v[i] = u[i] / p;
    }
    v[n - 1] = -rho / p;
    Ok(())
}

pub fn conserved_to_entropy(u: &[f64], gas: &GasModel) -> Result<Vec<f64>> {
    let mut v = vec![0.0; u.len()];
    conserved_to_entropy_into(u, gas, &mut v)?;
    Ok(v)
}

/// Inverse of [`conserved_to_entropy_into`].
pub fn entropy_to_conserved_into(v: &[f64], gas: &GasModel, u: &mut [f64]) -> Result<()> {
    check_finite(v)?;
    let n = v.len();
    let beta = -v[n - 1];
    if !(beta > 0.0) {
        return Err(Error::Inadmissible(format!(
            "last entropy variable must be negative, got {}",
            v[n - 1]
        )));
    }
    let g = gas.gamma;
    let speed2: f64 = v[1..n - 1].iter().map(|w| (w / beta).powi(2)).sum();
    let ln_p = v[0] - g / (g - 1.0) + 0.5 * beta * speed2
        - (g * beta.ln() - g * gas.rho_ref.ln() + gas.p_ref.ln()) / (g - 1.0);
    let p = ln_p.exp();
    let rho = beta * p;
    if !(p.is_finite() && rho.is_finite()) {
        return Err(Error::NonFinite(format!("entropy state {v:?}")));
    }
    u[0] = rho;
    for i in 1..n - 1 {
        u[i] = rho * v[i] / beta;
    }
    u[n - 1] = p / (g - 1.0) + 0.5 * rho * speed2;
    Ok(())
}

pub fn entropy_to_conserved(v: &[f64], gas: &GasModel) -> Result<Vec<f64>> {
    let mut u = vec![0.0; v.len()];
    entropy_to_conserved_into(v, gas, &mut u)?;
    Ok(u)
}

/// Dense symmetric `(d+2)×(d+2)` matrix stored in a fixed 4×4 buffer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyJacobian {
    n: usize,
    m: [[f64; 4]; 4],
}

impl EntropyJacobian {
    pub fn zeros(n: usize) -> Self {
        assert!(n <= 4);
        Self { n, m: [[0.0; 4]; 4] }
    }

    pub fn identity(n: usize) -> Self {
        let mut a = Self::zeros(n);
        for i in 0..n {
            a.m[i][i] = 1.0;
        }
        a
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let mut a = Self::zeros(rows.len());
        for (i, r) in rows.iter().enumerate() {
            a.m[i][..r.len()].copy_from_slice(r);
        }
        a
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, x: f64) {
        self.m[i][j] = x;
    }

    /// `out = self · x`.
    #[inline]
    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            out[i] = (0..self.n).map(|j| self.m[i][j] * x[j]).sum();
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let mut c = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                c.m[i][j] = (0..self.n).map(|k| self.m[i][k] * other.m[k][j]).sum();
            }
        }
        c
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t.m[i][j] = self.m[j][i];
            }
        }
        t
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut t = *self;
        for row in t.m.iter_mut() {
            for x in row.iter_mut() {
                *x *= s;
            }
        }
        t
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in 0..self.n {
                worst = worst.max((self.m[i][j] - self.m[j][i]).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        (0..self.n)
            .flat_map(|i| (0..self.n).map(move |j| (i, j)))
            .map(|(i, j)| self.m[i][j].abs())
            .fold(0.0, f64::max)
    }

    /// Upper-triangular `L` with `LᵀL = self`, or `None` if not SPD.
    pub fn cholesky_upper(&self) -> Option<Self> {
        let n = self.n;
        let mut l = Self::zeros(n);
        for j in 0..n {
            let mut d = self.m[j][j];
            for k in 0..j {
                d -= l.m[k][j] * l.m[k][j];
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let djj = d.sqrt();
            l.m[j][j] = djj;
            for i in j + 1..n {
                let mut s = self.m[j][i];
                for k in 0..j {
                    s -= l.m[k][j] * l.m[k][i];
                }
                l.m[j][i] = s / djj;
            }
        }
        Some(l)
    }

    /// Inverse of an upper-triangular matrix.
    pub fn upper_inverse(&self) -> Self {
        let n = self.n;
        let mut inv = Self::zeros(n);
        for col in 0..n {
            for i in (0..=col).rev() {
                let rhs = if i == col { 1.0 } else { 0.0 };
                let s: f64 = (i + 1..=col).map(|k| self.m[i][k] * inv.m[k][col]).sum();
                inv.m[i][col] = (rhs - s) / self.m[i][i];
            }
        }
        inv
    }

    /// Inverse of an SPD matrix through its Cholesky factor.
    pub fn spd_inverse(&self) -> Option<Self> {
        let l = self.cholesky_upper()?;
        let li = l.upper_inverse();
        // A⁻¹ = L⁻¹ L⁻ᵀ
        let inv = li.matmul(&li.transpose());
        Some(inv.symmetrized())
    }

    pub fn symmetrized(&self) -> Self {
        let mut s = *self;
        for i in 0..self.n {
            for j in 0..i {
                let avg = 0.5 * (self.m[i][j] + self.m[j][i]);
                s.m[i][j] = avg;
                s.m[j][i] = avg;
            }
        }
        s
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.m[i][..self.n].to_vec()).collect()
    }
}

/// Closed form of `A = ∂U/∂V` at a conserved state with pressure `p`.
/// No admissibility check; callers validate first.
pub fn entropy_jacobian_unchecked(u: &[f64], p: f64, gamma: f64) -> EntropyJacobian {
    let n = u.len();
    let d = n - 2;
    let rho = u[0];
    let e = n - 1;
    let h = (u[e] + p) / rho;
    let a2 = gamma * p / rho;
    let mut a = EntropyJacobian::zeros(n);
    for j in 0..n {
        a.m[0][j] = u[j];
        a.m[j][0] = u[j];
    }
    for i in 1..=d {
        for j in 1..=d {
            let v = u[i] * u[j] / rho + if i == j { p } else { 0.0 };
            a.m[i][j] = v;
        }
        let v = u[i] * h;
        a.m[i][e] = v;
        a.m[e][i] = v;
    }
    a.m[e][e] = rho * h * h - a2 * p / (gamma - 1.0);
    a
}

/// `A = ∂U/∂V`, symmetric positive definite at admissible states.
pub fn entropy_jacobian(u: &[f64], gas: &GasModel) -> Result<EntropyJacobian> {
    let p = pressure(u, gas)?;
    gas.check_admissible(u[0], p)?;
    Ok(entropy_jacobian_unchecked(u, p, gas.gamma))
}

/// `Ã = ∂V/∂U = A⁻¹`.
pub fn entropy_jacobian_inverse(u: &[f64], gas: &GasModel) -> Result<EntropyJacobian> {
    let a = entropy_jacobian(u, gas)?;
    a.spd_inverse()
        .ok_or_else(|| Error::NotSpd(format!("entropy Jacobian at {u:?}")))
}

fn check_axis(u: &[f64], axis: usize) -> Result<()> {
    let d = dim_of(u.len());
    if axis >= d {
        Err(Error::InvalidAxis { axis, dim: d })
    } else {
        Ok(())
    }
}

/// Inviscid flux along `axis` given the pressure.
#[inline]
pub fn flux_with_pressure(u: &[f64], p: f64, axis: usize, out: &mut [f64]) {
    let n = u.len();
    let m = axis + 1;
    let vel = u[m] / u[0];
    out[0] = u[m];
    for i in 1..n - 1 {
        out[i] = u[i] * vel;
    }
    out[m] += p;
    out[n - 1] = vel * (u[n - 1] + p);
}

pub fn analytic_flux(u: &[f64], axis: usize, gas: &GasModel) -> Result<Vec<f64>> {
    check_axis(u, axis)?;
    let p = pressure(u, gas)?;
    gas.check_admissible(u[0], p)?;
    let mut f = vec![0.0; u.len()];
    flux_with_pressure(u, p, axis, &mut f);
    Ok(f)
}

/// `|u_axis| + a`.
pub fn max_wave_speed(u: &[f64], axis: usize, gas: &GasModel) -> Result<f64> {
    check_axis(u, axis)?;
    let p = pressure(u, gas)?;
    gas.check_admissible(u[0], p)?;
    Ok((u[axis + 1] / u[0]).abs() + (gas.gamma * p / u[0]).sqrt())
}

/// Conserved state from primitive `(ρ, u₁, [u₂], p)`.
pub fn primitive_to_conserved(w: &[f64], gamma: f64) -> Vec<f64> {
    let n = w.len();
    let rho = w[0];
    let mut u = vec![0.0; n];
    u[0] = rho;
    let mut ke = 0.0;
    for i in 1..n - 1 {
        u[i] = rho * w[i];
        ke += 0.5 * rho * w[i] * w[i];
    }
    u[n - 1] = w[n - 1] / (gamma - 1.0) + ke;
    u
}
