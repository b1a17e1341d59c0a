use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::report::{reports_to_csv, summary_report, RunReport};
use super::{consistency_check, rom_states, run_errors};
use crate::error::{Error, Result};
use crate::problems::{parse_bool, parse_key_values, parse_num, run_fom, ProblemConfig, ProblemKind, SnapshotSet};
use crate::rom::{run_reproductive, Formulation, RomSpec, RomTrajectory};

/// Environment variable bounding the number of sweep worker threads.
pub const THREADS_ENV: &str = "EULERROM_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConfigSelection {
    Both,
    Dimensional,
    NonDimensional,
}

impl ConfigSelection {
    pub fn flags(self) -> &'static [bool] {
        match self {
            Self::Both => &[false, true],
            Self::Dimensional => &[true],
            Self::NonDimensional => &[false],
        }
    }
}

impl std::str::FromStr for ConfigSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "both" => Ok(Self::Both),
            "dimensional" | "dim" => Ok(Self::Dimensional),
            "nondimensional" | "non-dimensional" | "nondim" => Ok(Self::NonDimensional),
            other => Err(Error::Config(format!("unknown configuration selection '{other}'"))),
        }
    }
}

/// A sweep over formulations and basis sizes for one problem.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentPlan {
    /// Non-dimensional configuration; the dimensional twin differs only in
    /// its reference state.
    pub config: ProblemConfig,
    pub configs: ConfigSelection,
    pub formulations: Vec<Formulation>,
    pub ks: Vec<usize>,
    /// Overrides the per-problem WLS window.
    pub window: Option<usize>,
    pub output: Option<PathBuf>,
}

pub fn default_ks(kind: ProblemKind, paper: bool) -> Vec<usize> {
    match (kind, paper) {
        (ProblemKind::Sod, false) => vec![10, 20, 30],
        (ProblemKind::Sod, true) => (1..=10).map(|i| 5 * i).collect(),
        (_, false) => vec![10, 25],
        (_, true) => vec![25, 50, 100, 150],
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

impl ExperimentPlan {
    /// Desk preset: both configurations, all formulations, desk K list.
    pub fn desk(kind: ProblemKind) -> Self {
        Self {
            config: ProblemConfig::desk(kind, false),
            configs: ConfigSelection::Both,
            formulations: Formulation::ALL.to_vec(),
            ks: default_ks(kind, false),
            window: None,
            output: None,
        }
    }

    /// `key = value` lines. Recognized keys: `problem`, `preset`
    /// (`desk`/`paper`), `configs`, `formulations` (comma list or `all`),
    /// `k`, `window`, `output`, plus any problem configuration key.
    pub fn parse(text: &str) -> Result<Self> {
        let pairs = parse_key_values(text)?;
        let get = |k: &str| pairs.iter().find(|(key, _)| key == k).map(|(_, v)| v.as_str());
        let kind: ProblemKind = get("problem")
            .ok_or_else(|| Error::Config("plan: missing key 'problem'".into()))?
            .parse()?;
        let paper = match get("preset").unwrap_or("desk") {
            "desk" => false,
            "paper" => true,
            other => return Err(Error::Config(format!("plan: unknown preset '{other}'"))),
        };
        let mut plan = Self::desk(kind);
        if paper {
            plan.config = ProblemConfig::paper(kind, false);
            plan.ks = default_ks(kind, true);
        }
        for (key, value) in &pairs {
            let cfg = &mut plan.config;
            match key.as_str() {
                "problem" | "preset" => {}
                "configs" => plan.configs = value.parse()?,
                "formulations" if value.eq_ignore_ascii_case("all") => {
                    plan.formulations = Formulation::ALL.to_vec()
                }
                "formulations" => {
                    plan.formulations = value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(str::parse)
                        .collect::<Result<_>>()?
                }
                "k" => plan.ks = parse_list(key, value)?,
                "window" => plan.window = Some(parse_num(key, value)?),
                "output" => plan.output = Some(PathBuf::from(value)),
                "dimensional" => {
                    // the plan always holds the non-dimensional twin
                    parse_bool(value)?;
                }
                "cells" => cfg.cells = parse_num(key, value)?,
                "final_time_nd" => cfg.final_time_nd = parse_num(key, value)?,
                "snapshot_stride" => cfg.snapshot_stride = parse_num(key, value)?,
                "weno_epsilon" => cfg.weno_epsilon = parse_num(key, value)?,
                "seed" => cfg.seed = parse_num(key, value)?,
                "hit_u0" => cfg.hit_u0 = parse_num(key, value)?,
                other => return Err(Error::Config(format!("plan: unknown key '{other}'"))),
            }
        }
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.formulations.is_empty() {
            return Err(Error::Config("plan: no formulations".into()));
        }
        if self.ks.is_empty() || self.ks.contains(&0) {
            return Err(Error::Config("plan: K values must be a non-empty list of positive integers".into()));
        }
        if self.window == Some(0) {
            return Err(Error::Config("plan: window must be at least 1".into()));
        }
        Ok(())
    }

    pub fn configurations(&self) -> Vec<ProblemConfig> {
        self.configs.flags().iter().map(|&d| self.config.with_dimensional(d)).collect()
    }
}

/// One completed sweep run.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub report: RunReport,
    pub trajectory: RomTrajectory,
    /// Conserved states at the snapshot times reached.
    pub snapshot_states: Vec<Vec<f64>>,
}

/// Discrepancy between the dimensional and non-dimensional runs of one
/// `(formulation, K)` pair.
#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyRecord {
    pub formulation: Formulation,
    pub k: usize,
    pub discrepancy: f64,
}

#[derive(Clone, Debug)]
pub struct SweepOutput {
    /// Ordered by configuration, formulation, then K.
    pub runs: Vec<RunRecord>,
    pub consistency: Vec<ConsistencyRecord>,
}

impl SweepOutput {
    pub fn reports(&self) -> Vec<RunReport> {
        self.runs.iter().map(|r| r.report.clone()).collect()
    }

    pub fn consistency_csv(&self) -> String {
        let mut out = String::from("formulation,K,discrepancy\n");
        for c in &self.consistency {
            out.push_str(&format!("{},{},{:?}\n", c.formulation, c.k, c.discrepancy));
        }
        out
    }

    /// Write `reports.csv`, `summary.csv`, `summary.txt` and, when both
    /// configurations ran, `consistency.csv`.
    pub fn write(&self, dir: impl AsRef<Path>, timing: bool) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let reports = self.reports();
        std::fs::write(dir.join("reports.csv"), reports_to_csv(&reports, timing))?;
        let summary = summary_report(&reports, None);
        std::fs::write(dir.join("summary.csv"), summary.to_csv())?;
        std::fs::write(dir.join("summary.txt"), summary.to_text())?;
        if !self.consistency.is_empty() {
            std::fs::write(dir.join("consistency.csv"), self.consistency_csv())?;
        }
        Ok(())
    }
}

pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// One reproductive run with its report.
pub fn run_one(
    set: &SnapshotSet,
    formulation: Formulation,
    k: usize,
    window: Option<usize>,
) -> Result<RunRecord> {
    let mut spec = RomSpec::from_snapshots(formulation, set, k)?;
    if let Some(w) = window {
        spec.window = w;
    }
    let traj = run_reproductive(&spec, set)?;
    let errors = run_errors(&spec, &traj, set)?;
    let stride = set.config.snapshot_stride;
    let steps: Vec<usize> = (0..set.len()).map(|i| i * stride).collect();
    let snapshot_states = rom_states(&spec, &traj, &steps)?;
    let report = RunReport {
        problem: set.config.kind,
        dimensional: set.config.dimensional,
        formulation,
        k,
        stable: traj.stable && errors.is_some(),
        t_first_nan: traj.t_first_nan,
        errors,
        wall_seconds: traj.wall_seconds,
    };
    Ok(RunRecord { report, trajectory: traj, snapshot_states })
}

/// Full-order runs for every configuration, then every `(configuration,
/// formulation, K)` ROM on a pool of [`thread_count`] workers. Results are
/// independent of the thread count.
pub fn run_plan(plan: &ExperimentPlan) -> Result<SweepOutput> {
    plan.validate()?;
    let sets: Vec<SnapshotSet> = plan.configurations().iter().map(run_fom).collect::<Result<_>>()?;
    let mut jobs = Vec::new();
    for s in 0..sets.len() {
        for &f in &plan.formulations {
            for &k in &plan.ks {
                jobs.push((s, f, k));
            }
        }
    }
    let results: Mutex<Vec<Option<Result<RunRecord>>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = thread_count().min(jobs.len()).max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(s, f, k)) = jobs.get(i) else { break };
                let r = run_one(&sets[s], f, k, plan.window);
                results.lock().expect("no worker panicked")[i] = Some(r);
            });
        }
    });
    let runs: Vec<RunRecord> = results
        .into_inner()
        .expect("no worker panicked")
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect::<Result<_>>()?;

    let mut consistency = Vec::new();
    if sets.len() == 2 {
        let mut by_key: BTreeMap<(Formulation, usize), [Option<&RunRecord>; 2]> = BTreeMap::new();
        for r in &runs {
            by_key.entry((r.report.formulation, r.report.k)).or_default()[r.report.dimensional as usize] = Some(r);
        }
        for ((formulation, k), pair) in by_key {
            if let [Some(nd), Some(d)] = pair {
                let discrepancy = consistency_check(
                    &sets[1].config,
                    &d.snapshot_states,
                    &sets[0].config,
                    &nd.snapshot_states,
                );
                consistency.push(ConsistencyRecord { formulation, k, discrepancy });
            }
        }
    }
    Ok(SweepOutput { runs, consistency })
}
