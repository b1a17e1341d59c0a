//! Spectral initialization of two-dimensional homogeneous turbulence.
//!
//! A random-phase vorticity field is built in Fourier space, converted to a
//! solenoidal velocity through the streamfunction (`∇²ψ = −ω`,
//! `u₁ = ∂ψ/∂x₂`, `u₂ = −∂ψ/∂x₁`), and rescaled shell by shell so that the
//! discrete kinetic-energy spectrum equals the target
//! `e(k) = (50/k_p) a u₀² (k/k_p)^{2s+1} exp(−(s+½)(k/k_p)²)`.
//! Wavenumbers are integer mode numbers on the periodic box.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{ProblemConfig, ProblemKind, GAMMA};
use crate::error::{Error, Result};
use crate::euler::primitive_to_conserved;
use crate::fv::ConservedField;

pub const PEAK_WAVENUMBER: f64 = 25.0;
pub const SPECTRUM_SHAPE: i32 = 3;
/// The spectrum prefactor `a`; the shell rescaling fixes the magnitude.
pub const SPECTRUM_PREFACTOR: f64 = 1.0;

/// Target energy of shell `k` for velocity scale `u0`.
pub fn target_spectrum(k: f64, u0: f64) -> f64 {
    let s = SPECTRUM_SHAPE as f64;
    let r = k / PEAK_WAVENUMBER;
    50.0 / PEAK_WAVENUMBER * SPECTRUM_PREFACTOR * u0 * u0
        * r.powi(2 * SPECTRUM_SHAPE + 1)
        * (-(s + 0.5) * r * r).exp()
}

/// Signed mode number of FFT index `i` on an `n`-point grid.
fn mode(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Shells `1..=max_shell` resolved on an `n × n` grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpectrumShells {
    pub n: usize,
}

impl SpectrumShells {
    pub fn max_shell(&self) -> usize {
        self.n / 2 - 1
    }

    /// Shell index of mode `(m1, m2)`, or `None` outside the resolved set.
    pub fn shell_of(&self, m1: i64, m2: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if m1.abs() >= half || m2.abs() >= half || (m1 == 0 && m2 == 0) {
            return None;
        }
        let k = ((m1 * m1 + m2 * m2) as f64).sqrt().round() as usize;
        (k <= self.max_shell()).then_some(k)
    }
}

fn fft2(data: &mut [Complex<f64>], n: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    // rows (x₁ index fastest)
    for row in data.chunks_exact_mut(n) {
        fft.process(row);
    }
    let mut col = vec![Complex::new(0.0, 0.0); n];
    for i in 0..n {
        for j in 0..n {
            col[j] = data[j * n + i];
        }
        fft.process(&mut col);
        for j in 0..n {
            data[j * n + i] = col[j];
        }
    }
}

/// Kinetic energy per shell (index = shell) of a periodic velocity field on
/// an `n × n` grid, normalized so that the sum is the mean of `½|u|²`.
pub fn shell_spectrum(u1: &[f64], u2: &[f64], n: usize) -> Vec<f64> {
    let shells = SpectrumShells { n };
    let mut e = vec![0.0; shells.max_shell() + 1];
    let norm = 1.0 / (n as f64).powi(4);
    let spec = |u: &[f64]| {
        let mut d: Vec<Complex<f64>> = u.iter().map(|&x| Complex::new(x, 0.0)).collect();
        fft2(&mut d, n, false);
        d
    };
    let h1 = spec(u1);
    let h2 = spec(u2);
    for j in 0..n {
        for i in 0..n {
            if let Some(k) = shells.shell_of(mode(i, n), mode(j, n)) {
                let idx = j * n + i;
                e[k] += 0.5 * (h1[idx].norm_sqr() + h2[idx].norm_sqr()) * norm;
            }
        }
    }
    e
}

/// Velocity components `(u₁, u₂)` of the initial turbulence on an `n × n`
/// grid of side `length`, with velocity scale `u0`.
pub fn turbulent_velocity(n: usize, length: f64, u0: f64, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    if ((n / 2) as f64) < PEAK_WAVENUMBER {
        return Err(Error::Config(format!(
            "{n} cells cannot resolve the spectrum peak k_p = {PEAK_WAVENUMBER}"
        )));
    }
    let shells = SpectrumShells { n };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zero = Complex::new(0.0, 0.0);
    let mut omega = vec![zero; n * n];

    // random phases on the upper half plane, mirrored for a real field
    for j in 0..n {
        for i in 0..n {
            let (m1, m2) = (mode(i, n), mode(j, n));
            let upper = m2 > 0 || (m2 == 0 && m1 > 0);
            let Some(_) = shells.shell_of(m1, m2) else { continue };
            if !upper {
                continue;
            }
            let k = ((m1 * m1 + m2 * m2) as f64).sqrt();
            let amp = k * target_spectrum(k, u0).max(0.0).sqrt();
            let phase: f64 = rng.random::<f64>() * TAU;
            let w = Complex::from_polar(amp, phase);
            omega[j * n + i] = w;
            let (ci, cj) = ((n - i) % n, (n - j) % n);
            omega[cj * n + ci] = w.conj();
        }
    }

    let wavenumber = |m: i64| TAU * m as f64 / length;
    let mut u1h = vec![zero; n * n];
    let mut u2h = vec![zero; n * n];
    for j in 0..n {
        for i in 0..n {
            let idx = j * n + i;
            if omega[idx] == zero {
                continue;
            }
            let (k1, k2) = (wavenumber(mode(i, n)), wavenumber(mode(j, n)));
            let psi = omega[idx] / (k1 * k1 + k2 * k2);
            u1h[idx] = Complex::new(0.0, k2) * psi;
            u2h[idx] = Complex::new(0.0, -k1) * psi;
        }
    }

    // shell rescaling onto the target spectrum
    let norm = 1.0 / (n as f64).powi(4);
    let mut realized = vec![0.0; shells.max_shell() + 1];
    for j in 0..n {
        for i in 0..n {
            if let Some(k) = shells.shell_of(mode(i, n), mode(j, n)) {
                let idx = j * n + i;
                realized[k] += 0.5 * (u1h[idx].norm_sqr() + u2h[idx].norm_sqr()) * norm;
            }
        }
    }
    for j in 0..n {
        for i in 0..n {
            if let Some(k) = shells.shell_of(mode(i, n), mode(j, n)) {
                let idx = j * n + i;
                let target = target_spectrum(k as f64, u0);
                let factor = if realized[k] > 0.0 { (target / realized[k]).sqrt() } else { 0.0 };
                u1h[idx] *= factor;
                u2h[idx] *= factor;
            }
        }
    }

    fft2(&mut u1h, n, true);
    fft2(&mut u2h, n, true);
    let scale = 1.0 / (n * n) as f64;
    let u1 = u1h.iter().map(|c| c.re * scale).collect();
    let u2 = u2h.iter().map(|c| c.re * scale).collect();
    Ok((u1, u2))
}

/// Uniform `(ρ∞, p∞)` with the random solenoidal velocity field.
pub fn hit_init(cfg: &ProblemConfig) -> Result<ConservedField> {
    if cfg.kind != ProblemKind::Turbulence {
        return Err(Error::Config(format!("hit_init called for {}", cfg.kind)));
    }
    let mesh = cfg.mesh()?;
    let n = cfg.cells;
    let (lo, hi) = mesh.bounds(0);
    let u0 = cfg.hit_u0 * cfg.a_inf();
    let (u1, u2) = turbulent_velocity(n, hi - lo, u0, cfg.seed)?;
    let (rho, p) = (cfg.rho_inf(), cfg.p_inf());
    let mut values = Vec::with_capacity(mesh.n_dofs());
    for c in 0..mesh.n_cells() {
        values.extend(primitive_to_conserved(&[rho, u1[c], u2[c], p], GAMMA));
    }
    ConservedField::from_values(&mesh, values)
}
