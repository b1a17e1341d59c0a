//! Error metrics, dimensional-consistency checks, run reports and sweeps.

mod plan;
mod report;

pub use plan::{
    default_ks, run_one, run_plan, thread_count, ConfigSelection, ConsistencyRecord, ExperimentPlan,
    RunRecord, SweepOutput, THREADS_ENV,
};
pub use report::{
    parse_reports_csv, reports_to_csv, summary_report, FormulationSummary, RunReport, Summary,
    CSV_HEADER, TIE_TOLERANCE,
};

use crate::error::{Error, Result};
use crate::problems::{ProblemConfig, SnapshotSet};
use crate::rom::{RomSpec, RomTrajectory};

/// Conserved states of a ROM trajectory at the given step indices; stops at
/// the end of the trajectory.
pub fn rom_states(spec: &RomSpec, traj: &RomTrajectory, steps: &[usize]) -> Result<Vec<Vec<f64>>> {
    steps
        .iter()
        .take_while(|&&s| s < traj.coords.len())
        .map(|&s| spec.state(&traj.coords[s]))
        .collect()
}

/// Relative time-integrated squared error per conserved variable,
/// `Σₜ Σ_c (q̃ − q)² / Σₜ Σ_c q²`, with a left-endpoint sum over snapshot
/// times (the final snapshot closes the last interval and is not summed).
/// Cell volumes and the uniform snapshot interval cancel in the ratio.
pub fn error_metrics(
    rom: &[Vec<f64>],
    fom: &[Vec<f64>],
    nvar: usize,
) -> Result<Vec<f64>> {
    if rom.len() != fom.len() || rom.is_empty() {
        return Err(Error::Dimension(format!(
            "error metrics need matching non-empty trajectories ({} vs {})",
            rom.len(),
            fom.len()
        )));
    }
    let terms = if fom.len() > 1 { fom.len() - 1 } else { 1 };
    let mut num = vec![0.0; nvar];
    let mut den = vec![0.0; nvar];
    for (a, b) in rom.iter().zip(fom).take(terms) {
        if a.len() != b.len() {
            return Err(Error::Dimension("state length mismatch".into()));
        }
        for (i, (x, y)) in a.iter().zip(b).enumerate() {
            num[i % nvar] += (x - y) * (x - y);
            den[i % nvar] += y * y;
        }
    }
    Ok(num
        .iter()
        .zip(&den)
        .map(|(&n, &d)| if d > 0.0 { n / d } else if n == 0.0 { 0.0 } else { f64::INFINITY })
        .collect())
}

/// Errors of a reproductive ROM run against its training snapshots, or
/// `None` if the run did not reach the final time.
pub fn run_errors(spec: &RomSpec, traj: &RomTrajectory, fom: &SnapshotSet) -> Result<Option<Vec<f64>>> {
    let stride = fom.config.snapshot_stride;
    let steps: Vec<usize> = (0..fom.len()).map(|i| i * stride).collect();
    if !traj.stable || steps.last().is_some_and(|&s| s >= traj.coords.len()) {
        return Ok(None);
    }
    let states = rom_states(spec, traj, &steps)?;
    error_metrics(&states, &fom.columns, fom.config.nvar()).map(Some)
}

/// Divide each conserved component by its reference magnitude.
pub fn non_dimensionalize(cfg: &ProblemConfig, u: &[f64]) -> Vec<f64> {
    let scales = cfg.scales();
    let n = scales.len();
    u.iter().enumerate().map(|(i, x)| x / scales[i % n]).collect()
}

/// Largest relative difference, over the common time levels, between two
/// runs of the same problem after both are non-dimensionalized:
/// `maxₜ ‖ũ_a(t) − ũ_b(t)‖ / ‖ũ_b(t)‖`. Trajectories of different length
/// (one run failed earlier) are infinitely far apart.
pub fn consistency_check(
    cfg_a: &ProblemConfig,
    states_a: &[Vec<f64>],
    cfg_b: &ProblemConfig,
    states_b: &[Vec<f64>],
) -> f64 {
    if states_a.len() != states_b.len() {
        return f64::INFINITY;
    }
    let mut worst = 0.0f64;
    for (a, b) in states_a.iter().zip(states_b) {
        let a = non_dimensionalize(cfg_a, a);
        let b = non_dimensionalize(cfg_b, b);
        let diff: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        let norm: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
        let rel = if norm > 0.0 { diff / norm } else { diff };
        worst = worst.max(if rel.is_nan() { f64::INFINITY } else { rel });
    }
    worst
}

/// Every saved state of a trajectory, in conserved variables.
pub fn all_states(spec: &RomSpec, traj: &RomTrajectory) -> Result<Vec<Vec<f64>>> {
    traj.coords.iter().map(|c| spec.state(c)).collect()
}
