use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::problems::ProblemKind;
use crate::rom::Formulation;

pub const CSV_HEADER: &str =
    "problem,dimensional,formulation,K,stable,t_first_nan,e_rho,e_rhou1,e_rhou2,e_rhoE,wall_seconds";

/// Outcome of one ROM run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub problem: ProblemKind,
    pub dimensional: bool,
    pub formulation: Formulation,
    pub k: usize,
    pub stable: bool,
    pub t_first_nan: Option<f64>,
    /// Per conserved variable `(ρ, ρu₁, [ρu₂], ρE)`; absent for runs that
    /// did not reach the final time.
    pub errors: Option<Vec<f64>>,
    pub wall_seconds: f64,
}

impl RunReport {
    /// Errors laid out as the four CSV columns (`ρu₂` empty in 1D).
    fn error_columns(&self) -> [Option<f64>; 4] {
        let Some(e) = &self.errors else { return [None; 4] };
        match e.len() {
            3 => [Some(e[0]), Some(e[1]), None, Some(e[2])],
            _ => [Some(e[0]), Some(e[1]), Some(e[2]), Some(e[3])],
        }
    }

    pub fn to_csv_row(&self, timing: bool) -> String {
        let opt = |x: Option<f64>| x.map(|v| format!("{v:?}")).unwrap_or_default();
        let e = self.error_columns();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.problem,
            self.dimensional,
            self.formulation,
            self.k,
            self.stable,
            opt(self.t_first_nan),
            opt(e[0]),
            opt(e[1]),
            opt(e[2]),
            opt(e[3]),
            if timing { format!("{:.3}", self.wall_seconds) } else { "0".into() }
        )
    }
}

pub fn reports_to_csv(reports: &[RunReport], timing: bool) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&r.to_csv_row(timing));
        out.push('\n');
    }
    out
}

pub fn parse_reports_csv(text: &str) -> Result<Vec<RunReport>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        Some(h) => return Err(Error::Format(format!("unexpected CSV header '{h}'"))),
        None => return Err(Error::Format("empty report CSV".into())),
    }
    let mut out = Vec::new();
    for (n, line) in lines.enumerate() {
        let row = n + 2;
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 11 {
            return Err(Error::Format(format!("row {row}: expected 11 fields, got {}", f.len())));
        }
        let bad = |what: &str| Error::Format(format!("row {row}: bad {what}"));
        let num = |s: &str, what: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse::<f64>().map(Some).map_err(|_| bad(what))
            }
        };
        let problem: ProblemKind = f[0].parse().map_err(|_| bad("problem"))?;
        let e: Vec<Option<f64>> = (6..10).map(|i| num(f[i], "error")).collect::<Result<_>>()?;
        let errors = if e.iter().all(Option::is_none) {
            None
        } else if problem.dim() == 1 {
            Some(vec![e[0].ok_or_else(|| bad("e_rho"))?, e[1].ok_or_else(|| bad("e_rhou1"))?, e[3].ok_or_else(|| bad("e_rhoE"))?])
        } else {
            Some(e.iter().map(|x| x.ok_or_else(|| bad("error"))).collect::<Result<_>>()?)
        };
        out.push(RunReport {
            problem,
            dimensional: f[1].parse().map_err(|_| bad("dimensional"))?,
            formulation: f[2].parse().map_err(|_| bad("formulation"))?,
            k: f[3].parse().map_err(|_| bad("K"))?,
            stable: f[4].parse().map_err(|_| bad("stable"))?,
            t_first_nan: num(f[5], "t_first_nan")?,
            errors,
            wall_seconds: num(f[10], "wall_seconds")?.unwrap_or(0.0),
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FormulationSummary {
    pub formulation: Formulation,
    pub runs: usize,
    pub stable_runs: usize,
    /// `(problem, configuration, K, variable)` cells the formulation took
    /// part in.
    pub cells: usize,
    /// Share of those cells won; a tie among `m` runs earns `1/m`.
    pub best_credit: f64,
}

impl FormulationSummary {
    pub fn stable_pct(&self) -> f64 {
        100.0 * self.stable_runs as f64 / self.runs.max(1) as f64
    }

    pub fn best_pct(&self) -> f64 {
        100.0 * self.best_credit / self.cells.max(1) as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub rows: Vec<FormulationSummary>,
}

/// Relative tolerance within which errors count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Stability and lowest-error shares per formulation. `dimensional`
/// restricts the aggregation to one configuration family.
pub fn summary_report(reports: &[RunReport], dimensional: Option<bool>) -> Summary {
    let selected: Vec<&RunReport> = reports
        .iter()
        .filter(|r| dimensional.is_none_or(|d| r.dimensional == d))
        .collect();
    let mut rows: BTreeMap<Formulation, FormulationSummary> = BTreeMap::new();
    for r in &selected {
        let row = rows.entry(r.formulation).or_insert(FormulationSummary {
            formulation: r.formulation,
            runs: 0,
            stable_runs: 0,
            cells: 0,
            best_credit: 0.0,
        });
        row.runs += 1;
        row.stable_runs += r.stable as usize;
        row.cells += r.problem.dim() + 2;
    }

    let mut groups: BTreeMap<(String, bool, usize), Vec<&RunReport>> = BTreeMap::new();
    for r in &selected {
        groups.entry((r.problem.tag().to_string(), r.dimensional, r.k)).or_default().push(r);
    }
    for runs in groups.values() {
        let nvar = runs[0].problem.dim() + 2;
        for q in 0..nvar {
            let errs: Vec<(Formulation, f64)> = runs
                .iter()
                .filter(|r| r.stable)
                .filter_map(|r| r.errors.as_ref().map(|e| (r.formulation, e[q])))
                .filter(|(_, e)| e.is_finite())
                .collect();
            let Some(best) = errs.iter().map(|(_, e)| *e).reduce(f64::min) else { continue };
            let winners: Vec<Formulation> = errs
                .iter()
                .filter(|(_, e)| *e <= best + TIE_TOLERANCE * best.abs())
                .map(|(f, _)| *f)
                .collect();
            let share = 1.0 / winners.len() as f64;
            for f in winners {
                rows.get_mut(&f).expect("winner has a row").best_credit += share;
            }
        }
    }
    Summary { rows: rows.into_values().collect() }
}

impl Summary {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("formulation,runs,stable_pct,best_pct\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{:.2},{:.2}\n",
                r.formulation,
                r.runs,
                r.stable_pct(),
                r.best_pct()
            ));
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{:<17} {:>5} {:>9} {:>14}\n", "formulation", "runs", "stable %", "lowest error %");
        for r in &self.rows {
            out.push_str(&format!(
                "{:<17} {:>5} {:>9.1} {:>14.1}\n",
                r.formulation.name(),
                r.runs,
                r.stable_pct(),
                r.best_pct()
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(f: Formulation, k: usize, stable: bool, e: f64) -> RunReport {
        RunReport {
            problem: ProblemKind::Sod,
            dimensional: false,
            formulation: f,
            k,
            stable,
            t_first_nan: (!stable).then_some(0.1),
            errors: stable.then(|| vec![e, 2.0 * e, 3.0 * e]),
            wall_seconds: 1.25,
        }
    }

    #[test]
    fn csv_roundtrip() {
        let rs = vec![
            report(Formulation::WlsEntEnt, 10, true, 0.25),
            report(Formulation::GalConsL2, 10, false, 0.0),
        ];
        let csv = reports_to_csv(&rs, true);
        assert!(csv.starts_with(CSV_HEADER));
        assert!(csv.lines().nth(1).unwrap().contains(",0.25,0.5,,0.75,"));
        assert_eq!(parse_reports_csv(&csv).unwrap(), rs);
        assert!(parse_reports_csv("a,b\n").is_err());
    }

    #[test]
    fn single_formulation_wins_everything() {
        let rs = vec![report(Formulation::WlsEntEnt, 10, true, 1.0), report(Formulation::WlsEntEnt, 20, true, 0.5)];
        let s = summary_report(&rs, None);
        assert_eq!(s.rows.len(), 1);
        assert_eq!(s.rows[0].stable_pct(), 100.0);
        assert_eq!(s.rows[0].best_pct(), 100.0);
    }

    #[test]
    fn ties_are_shared_and_totals_bounded() {
        let rs = vec![
            report(Formulation::WlsEntEnt, 10, true, 1.0),
            report(Formulation::WlsConsEnt, 10, true, 1.0),
            report(Formulation::GalConsL2, 10, false, 0.0),
            report(Formulation::WlsConsL2Star, 10, true, 2.0),
        ];
        let s = summary_report(&rs, Some(false));
        let total: f64 = s.rows.iter().map(|r| r.best_pct()).sum();
        assert!((total - 100.0).abs() < 1e-9);
        let ent = s.rows.iter().find(|r| r.formulation == Formulation::WlsEntEnt).unwrap();
        assert_eq!(ent.best_pct(), 50.0);
        let gal = s.rows.iter().find(|r| r.formulation == Formulation::GalConsL2).unwrap();
        assert_eq!(gal.stable_pct(), 0.0);
        assert!(summary_report(&rs, Some(true)).rows.is_empty());
    }
}
