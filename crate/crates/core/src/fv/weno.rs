//! Fifth-order WENO reconstruction with Jiang–Shu smoothness indicators.

const LINEAR_WEIGHTS: [f64; 3] = [0.1, 0.6, 0.3];

#[derive(Clone, Debug, PartialEq)]
pub struct WenoConfig {
    /// Regularizer added to the smoothness indicators.
    pub epsilon: f64,
    /// Per-variable magnitudes; the regularizer used for variable `q` is
    /// `epsilon · scale_q²` so that it carries the units of the indicators.
    /// Empty means all ones.
    pub variable_scales: Vec<f64>,
}

impl Default for WenoConfig {
    fn default() -> Self {
        Self { epsilon: 1e-6, variable_scales: Vec::new() }
    }
}

impl WenoConfig {
    pub fn new(epsilon: f64) -> Self {
        assert!(epsilon > 0.0, "WENO epsilon must be positive");
        Self { epsilon, variable_scales: Vec::new() }
    }

    pub fn with_scales(mut self, scales: Vec<f64>) -> Self {
        self.variable_scales = scales;
        self
    }

    pub fn epsilon_for(&self, var: usize) -> f64 {
        match self.variable_scales.get(var) {
            Some(s) => self.epsilon * s * s,
            None => self.epsilon,
        }
    }
}

/// Smoothness indicators of the three candidate stencils.
#[inline]
pub fn smoothness(v: &[f64; 5]) -> [f64; 3] {
    let [a, b, c, d, e] = *v;
    let b0 = 13.0 / 12.0 * (a - 2.0 * b + c).powi(2) + 0.25 * (a - 4.0 * b + 3.0 * c).powi(2);
    let b1 = 13.0 / 12.0 * (b - 2.0 * c + d).powi(2) + 0.25 * (b - d).powi(2);
    let b2 = 13.0 / 12.0 * (c - 2.0 * d + e).powi(2) + 0.25 * (3.0 * c - 4.0 * d + e).powi(2);
    [b0, b1, b2]
}

/// Third-order candidate values at the right face of the centre cell.
#[inline]
pub fn candidates(v: &[f64; 5]) -> [f64; 3] {
    let [a, b, c, d, e] = *v;
    [
        (2.0 * a - 7.0 * b + 11.0 * c) / 6.0,
        (-b + 5.0 * c + 2.0 * d) / 6.0,
        (2.0 * c + 5.0 * d - e) / 6.0,
    ]
}

/// Nonlinear weights; a convex combination.
#[inline]
pub fn weights(v: &[f64; 5], epsilon: f64) -> [f64; 3] {
    let beta = smoothness(v);
    let mut alpha = [0.0; 3];
    for k in 0..3 {
        alpha[k] = LINEAR_WEIGHTS[k] / (epsilon + beta[k]).powi(2);
    }
    let sum = alpha[0] + alpha[1] + alpha[2];
    [alpha[0] / sum, alpha[1] / sum, alpha[2] / sum]
}

/// Value at the right face of `v[2]`; `v` is ordered upwind to downwind.
#[inline]
pub fn weno5_reconstruct(v: &[f64; 5], epsilon: f64) -> f64 {
    let w = weights(v, epsilon);
    let q = candidates(v);
    w[0] * q[0] + w[1] * q[1] + w[2] * q[2]
}

/// The optimal-weight (unlimited) fifth-order reconstruction.
pub fn linear_reconstruct(v: &[f64; 5]) -> f64 {
    let q = candidates(v);
    LINEAR_WEIGHTS[0] * q[0] + LINEAR_WEIGHTS[1] * q[1] + LINEAR_WEIGHTS[2] * q[2]
}
