//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use std::f64::consts::TAU;

use eulerrom::euler::{conserved_to_entropy, entropy_to_conserved, primitive_to_conserved, GasModel};
use eulerrom::fv::{Boundary, Discretization, Mesh, Rk4, WenoConfig};
use eulerrom::inner_products::WeightOperator;
use eulerrom::pod::{project, PodBasis};
use eulerrom::problems::ProblemConfig;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Exact solution of the 1D Riemann problem for a polytropic gas
/// (two-rarefaction / two-shock Newton iteration on the star pressure).
pub struct ExactRiemann {
    pub gamma: f64,
    pub left: [f64; 3],
    pub right: [f64; 3],
    p_star: f64,
    u_star: f64,
}

impl ExactRiemann {
    /// States are primitive `(ρ, u, p)`.
    pub fn new(gamma: f64, left: [f64; 3], right: [f64; 3]) -> Self {
        let mut s = Self { gamma, left, right, p_star: 0.0, u_star: 0.0 };
        s.solve();
        s
    }

    fn sound(&self, w: &[f64; 3]) -> f64 {
        (self.gamma * w[2] / w[0]).sqrt()
    }

    /// Pressure function of one side and its derivative.
    fn f(&self, p: f64, w: &[f64; 3]) -> (f64, f64) {
        let g = self.gamma;
        let (rho, pk) = (w[0], w[2]);
        let a = self.sound(w);
        if p > pk {
            let ak = 2.0 / ((g + 1.0) * rho);
            let bk = (g - 1.0) / (g + 1.0) * pk;
            let q = (ak / (p + bk)).sqrt();
            ((p - pk) * q, q * (1.0 - 0.5 * (p - pk) / (bk + p)))
        } else {
            let e = (g - 1.0) / (2.0 * g);
            let r = p / pk;
            (2.0 * a / (g - 1.0) * (r.powf(e) - 1.0), r.powf(-(g + 1.0) / (2.0 * g)) / (rho * a))
        }
    }

    fn solve(&mut self) {
        let (l, r) = (self.left, self.right);
        let mut p = 0.5 * (l[2] + r[2]);
        for _ in 0..100 {
            let (fl, dl) = self.f(p, &l);
            let (fr, dr) = self.f(p, &r);
            let next = (p - (fl + fr + r[1] - l[1]) / (dl + dr)).max(1e-14);
            let done = (next - p).abs() < 1e-15 * p;
            p = next;
            if done {
                break;
            }
        }
        let (fl, _) = self.f(p, &l);
        let (fr, _) = self.f(p, &r);
        self.p_star = p;
        self.u_star = 0.5 * (l[1] + r[1]) + 0.5 * (fr - fl);
    }

    pub fn star(&self) -> (f64, f64) {
        (self.p_star, self.u_star)
    }

    /// Primitive state at similarity coordinate `xi = x / t`.
    pub fn sample(&self, xi: f64) -> [f64; 3] {
        let g = self.gamma;
        let (ps, us) = (self.p_star, self.u_star);
        let gm = (g - 1.0) / (g + 1.0);
        if xi <= us {
            let w = self.left;
            let a = self.sound(&w);
            if ps > w[2] {
                let s = w[1] - a * ((g + 1.0) / (2.0 * g) * ps / w[2] + (g - 1.0) / (2.0 * g)).sqrt();
                if xi < s {
                    w
                } else {
                    let r = ps / w[2];
                    [w[0] * (r + gm) / (gm * r + 1.0), us, ps]
                }
            } else {
                let a_star = a * (ps / w[2]).powf((g - 1.0) / (2.0 * g));
                if xi < w[1] - a {
                    w
                } else if xi > us - a_star {
                    [w[0] * (ps / w[2]).powf(1.0 / g), us, ps]
                } else {
                    let c = 2.0 / (g + 1.0) + gm / a * (w[1] - xi);
                    let c2 = c.powf(2.0 / (g - 1.0));
                    [w[0] * c2, 2.0 / (g + 1.0) * (a + (g - 1.0) / 2.0 * w[1] + xi), w[2] * c.powf(2.0 * g / (g - 1.0))]
                }
            }
        } else {
            let w = self.right;
            let a = self.sound(&w);
            if ps > w[2] {
                let s = w[1] + a * ((g + 1.0) / (2.0 * g) * ps / w[2] + (g - 1.0) / (2.0 * g)).sqrt();
                if xi > s {
                    w
                } else {
                    let r = ps / w[2];
                    [w[0] * (r + gm) / (gm * r + 1.0), us, ps]
                }
            } else {
                let a_star = a * (ps / w[2]).powf((g - 1.0) / (2.0 * g));
                if xi > w[1] + a {
                    w
                } else if xi < us + a_star {
                    [w[0] * (ps / w[2]).powf(1.0 / g), us, ps]
                } else {
                    let c = 2.0 / (g + 1.0) - gm / a * (w[1] - xi);
                    [w[0] * c.powf(2.0 / (g - 1.0)), 2.0 / (g + 1.0) * (-a + (g - 1.0) / 2.0 * w[1] + xi), w[2] * c.powf(2.0 * g / (g - 1.0))]
                }
            }
        }
    }

    /// Cell average of the density over `[a, b]` at time `t`, by composite
    /// Simpson on a fine sub-grid.
    pub fn mean_density(&self, a: f64, b: f64, x0: f64, t: f64) -> f64 {
        let m = 64;
        let h = (b - a) / m as f64;
        let rho = |x: f64| self.sample((x - x0) / t)[0];
        let mut s = rho(a) + rho(b);
        for i in 1..m {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * rho(a + i as f64 * h);
        }
        s * h / 3.0 / (b - a)
    }
}

/// Kinetic energy per integer shell by direct (naive) DFT, normalized so
/// that the shells sum to the mean of `½|u|²` over resolved modes.
pub fn naive_shell_spectrum(u1: &[f64], u2: &[f64], n: usize) -> Vec<f64> {
    let half = (n / 2) as i64;
    let mut e = vec![0.0; n / 2];
    let signed = |i: usize| if i <= n / 2 { i as i64 } else { i as i64 - n as i64 };
    let twiddle: Vec<(f64, f64)> = (0..n).map(|k| ((TAU * k as f64 / n as f64).cos(), (TAU * k as f64 / n as f64).sin())).collect();
    for b in 0..n {
        for a in 0..n {
            let (m1, m2) = (signed(a), signed(b));
            if m1.abs() >= half || m2.abs() >= half || (m1 == 0 && m2 == 0) {
                continue;
            }
            let k = ((m1 * m1 + m2 * m2) as f64).sqrt().round() as usize;
            if k >= n / 2 {
                continue;
            }
            let mut c1 = (0.0, 0.0);
            let mut c2 = (0.0, 0.0);
            for j in 0..n {
                for i in 0..n {
                    let (c, s) = twiddle[(a * i + b * j) % n];
                    let idx = j * n + i;
                    c1.0 += u1[idx] * c;
                    c1.1 -= u1[idx] * s;
                    c2.0 += u2[idx] * c;
                    c2.1 -= u2[idx] * s;
                }
            }
            let n2 = (n * n) as f64;
            e[k] += 0.5 * (c1.0 * c1.0 + c1.1 * c1.1 + c2.0 * c2.0 + c2.1 * c2.1) / (n2 * n2);
        }
    }
    e
}

/// Spectral divergence `∂u₁/∂x₁ + ∂u₂/∂x₂` of a periodic field on a square
/// box of side `length`, via the direct DFT; returns its max magnitude.
pub fn spectral_divergence_max(u1: &[f64], u2: &[f64], n: usize, length: f64) -> f64 {
    let signed = |i: usize| if i <= n / 2 { i as i64 } else { i as i64 - n as i64 };
    let twiddle: Vec<(f64, f64)> = (0..n).map(|k| ((TAU * k as f64 / n as f64).cos(), (TAU * k as f64 / n as f64).sin())).collect();
    // forward transforms along x₁ then x₂, separably
    let dft = |u: &[f64]| -> Vec<(f64, f64)> {
        let mut rows = vec![(0.0, 0.0); n * n];
        for j in 0..n {
            for a in 0..n {
                let mut s = (0.0, 0.0);
                for i in 0..n {
                    let (c, sn) = twiddle[(a * i) % n];
                    s.0 += u[j * n + i] * c;
                    s.1 -= u[j * n + i] * sn;
                }
                rows[j * n + a] = s;
            }
        }
        let mut out = vec![(0.0, 0.0); n * n];
        for a in 0..n {
            for b in 0..n {
                let mut s = (0.0, 0.0);
                for j in 0..n {
                    let (c, sn) = twiddle[(b * j) % n];
                    let (re, im) = rows[j * n + a];
                    s.0 += re * c + im * sn;
                    s.1 += im * c - re * sn;
                }
                out[b * n + a] = s;
            }
        }
        out
    };
    let h1 = dft(u1);
    let h2 = dft(u2);
    // divergence in Fourier space, i(k₁û₁ + k₂û₂); Nyquist modes dropped
    let mut d = vec![(0.0, 0.0); n * n];
    for b in 0..n {
        for a in 0..n {
            if a == n / 2 || b == n / 2 {
                continue;
            }
            let k1 = TAU * signed(a) as f64 / length;
            let k2 = TAU * signed(b) as f64 / length;
            let idx = b * n + a;
            let re = k1 * h1[idx].0 + k2 * h2[idx].0;
            let im = k1 * h1[idx].1 + k2 * h2[idx].1;
            d[idx] = (-im, re);
        }
    }
    // inverse at every grid point
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let mut s = 0.0;
            for b in 0..n {
                for a in 0..n {
                    let (c, sn) = twiddle[(a * i + b * j) % n];
                    let (re, im) = d[b * n + a];
                    s += re * c - im * sn;
                }
            }
            worst = worst.max((s / (n * n) as f64).abs());
        }
    }
    worst
}

/// Cell averages of `1 + amp sin(2π x)` on a uniform periodic grid of `[0, 1)`.
pub fn sine_cell_averages(n: usize, amp: f64, shift: f64) -> Vec<f64> {
    let dx = 1.0 / n as f64;
    (0..n)
        .map(|i| {
            let (a, b) = (i as f64 * dx - shift, (i + 1) as f64 * dx - shift);
            1.0 - amp * ((TAU * b).cos() - (TAU * a).cos()) / (TAU * dx)
        })
        .collect()
}

/// `Σⱼ ‖sⱼ − ΦΦᵀW sⱼ‖²_W`.
pub fn projection_residual(s: &DMatrix<f64>, basis: &PodBasis, w: &WeightOperator) -> f64 {
    s.column_iter()
        .map(|col| {
            let col = col.as_slice();
            let c = project(col, basis, w);
            let r: Vec<f64> = col.iter().zip(basis.reconstruct(c.as_slice())).map(|(a, b)| a - b).collect();
            w.inner(&r, &r)
        })
        .sum()
}

/// `k` random vectors orthonormalized in `w` (modified Gram–Schmidt).
pub fn random_orthonormal(rows: usize, k: usize, w: &WeightOperator, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut q = DMatrix::<f64>::zeros(rows, k);
    for j in 0..k {
        let mut v: Vec<f64> = (0..rows).map(|_| rng.random::<f64>() - 0.5).collect();
        for _ in 0..2 {
            for i in 0..j {
                let qi: Vec<f64> = q.column(i).iter().copied().collect();
                let c = w.inner(&qi, &v);
                v.iter_mut().zip(&qi).for_each(|(a, b)| *a -= c * b);
            }
        }
        let n = w.norm(&v);
        q.set_column(j, &DVector::from_vec(v.iter().map(|x| x / n).collect()));
    }
    q
}

/// L1 error of the non-dimensional density of a Sod state at the final time
/// against cell averages of the exact solution.
pub fn sod_density_l1_error(cfg: &ProblemConfig, u: &[f64]) -> f64 {
    let mesh = cfg.mesh().unwrap();
    let rs = ExactRiemann::new(1.4, [1.0, 0.0, 1.0], [0.125, 0.0, 0.1]);
    let dx = mesh.dx(0);
    let (lo, _) = mesh.bounds(0);
    (0..mesh.n_cells())
        .map(|c| {
            let a = lo + c as f64 * dx;
            let exact = rs.mean_density(a, a + dx, 0.0, cfg.final_time_nd);
            (u[3 * c] / cfg.rho_inf() - exact).abs() * dx
        })
        .sum()
}

/// Magnitude of conserved component `j`: `ρ`, `√(ρ·ρE)` for momenta, `ρE`.
pub fn natural_scale(u: &[f64], j: usize) -> f64 {
    let n = u.len();
    match j {
        0 => u[0].abs(),
        j if j == n - 1 => u[n - 1].abs(),
        _ => (u[0] * u[n - 1]).abs().sqrt(),
    }
}

/// `∂U/∂V` by central differences of the inverse transform. `steps[j]`
/// perturbs `V_j`; `None` uses `1e-6‖V‖` for every component.
pub fn fd_jacobian(u: &[f64], gas: &GasModel, steps: Option<&[f64]>) -> Vec<Vec<f64>> {
    let v = conserved_to_entropy(u, gas).unwrap();
    let n = v.len();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut jac = vec![vec![0.0; n]; n];
    for j in 0..n {
        let h = steps.map_or(1e-6 * norm, |s| s[j]);
        let mut vp = v.clone();
        let mut vm = v.clone();
        vp[j] += h;
        vm[j] -= h;
        let up = entropy_to_conserved(&vp, gas).unwrap();
        let um = entropy_to_conserved(&vm, gas).unwrap();
        for i in 0..n {
            jac[i][j] = (up[i] - um[i]) / (2.0 * h);
        }
    }
    jac
}

/// L1 density error of a smooth density wave advected at unit speed with
/// `dt = 0.05 dx`.
pub fn weno_advection_error(n: usize, t_end: f64) -> f64 {
    let gamma = 1.4;
    let mesh = Mesh::new_1d(n, 0.0, 1.0, Boundary::Periodic).unwrap();
    let gas = GasModel::new(gamma).unwrap();
    let disc = Discretization::new(mesh.clone(), gas, WenoConfig::new(1e-6));
    let state = |rho: f64| primitive_to_conserved(&[rho, 1.0, 1.0], gamma);
    let mut u: Vec<f64> = sine_cell_averages(n, 0.2, 0.0).into_iter().flat_map(state).collect();
    let dx = 1.0 / n as f64;
    let steps = (t_end / (0.05 * dx)).round() as usize;
    let dt = t_end / steps as f64;
    let mut rk = Rk4::new(u.len());
    for _ in 0..steps {
        rk.step(&mut u, dt, |x, out| disc.rhs(x, out)).unwrap();
    }
    let exact = sine_cell_averages(n, 0.2, t_end);
    (0..n).map(|i| (u[3 * i] - exact[i]).abs() * dx).sum()
}
