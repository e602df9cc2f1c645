//! The four experiments behind the `ufde` subcommands. Each writes into its
//! own directory and returns a report; a report that does not `pass()` maps
//! to exit status 1.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use ultrafast_core::functionals::{report, verify_bounds, BoundReport};
use ultrafast_core::localization::{
    check_ladder, ladder_table, one_efold_horizon, EquilibriumPotential, LadderTable, LocalizedProblem, RungSolution,
};
use ultrafast_core::poincare::{richardson, spectral_gap};
use ultrafast_core::solver::{fit_rate, run};
use ultrafast_core::{Equilibrium, Error, ErrorClass, GridKind, RunRecord};

use crate::config::{random_field, ExperimentConfig};
use crate::output::{field_table, num, trajectory_table, Summary, Table};

/// Largest recorded gap still counted as "at equilibrium".
pub const STATIONARY_GAP: f64 = 1e-12;
/// Fraction of the record used for the rate fit.
pub const FIT_WINDOW: f64 = 0.5;
/// Tolerance on the monotonicity verdict of the truncation ladder.
pub const LADDER_TOL: f64 = 1e-10;

#[derive(Debug)]
pub enum Failure {
    Core(Error),
    Io { path: PathBuf, source: io::Error },
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Core(e) => match e.class() {
                ErrorClass::Configuration => 2,
                ErrorClass::Numerical => 3,
            },
            Failure::Io { .. } => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Failure::Core(e) => e.kind(),
            Failure::Io { .. } => "io",
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl std::error::Error for Failure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Failure::Core(e) => Some(e),
            Failure::Io { source, .. } => Some(source),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

pub type Outcome<T> = std::result::Result<T, Failure>;

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> Failure + '_ {
    move |source| Failure::Io { path: path.to_path_buf(), source }
}

pub fn prepare_dir(dir: &Path) -> Outcome<()> {
    fs::create_dir_all(dir).map_err(io_at(dir))
}

fn write_text(dir: &Path, name: &str, text: &str) -> Outcome<()> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(io_at(&path))
}

fn write_table(dir: &Path, name: &str, table: &Table) -> Outcome<()> {
    write_text(dir, name, &table.render())
}

/// Machine-readable record of a failed command.
pub fn write_error_record(dir: &Path, status: i32, kind: &str, message: &str) -> io::Result<()> {
    let mut s = Summary::default();
    s.put("status", status).put("kind", kind).put("message", message.replace('\n', " "));
    fs::create_dir_all(dir)?;
    s.write(&dir.join("error.txt"))
}

#[derive(Debug, Clone)]
pub struct SimulateReport {
    pub gamma: f64,
    pub c: f64,
    pub upper: f64,
    pub k1: f64,
    pub k2: f64,
    pub poincare: f64,
    pub decay_constant: f64,
    pub lambda_fit: Option<f64>,
    /// `max_t gap(t) − gap(0)e^{−t/K}`.
    pub bound_excess: f64,
    pub bound_holds: bool,
    pub stationary: bool,
    pub record: RunRecord,
    pub final_field: Vec<f64>,
}

impl SimulateReport {
    pub fn fit_ok(&self) -> bool {
        self.lambda_fit.is_none_or(|l| l >= 1.0 / self.decay_constant)
    }

    pub fn passed(&self) -> bool {
        self.bound_holds && self.fit_ok()
    }
}

/// Decay experiment: trajectory, constants and the decay-bound verdict.
pub fn simulate(cfg: &ExperimentConfig, out: &Path) -> Outcome<SimulateReport> {
    cfg.validate()?;
    let t_end = cfg
        .solver
        .t_end
        .ok_or_else(|| Error::Config("simulate needs solver.t_end".into()))?;
    let solver = cfg.solver_config(t_end);
    solver.validate()?;
    let grid = cfg.grid()?;
    let weight = cfg.weight_on(&grid)?;
    let eq = Equilibrium::new(&weight, cfg.r)?;
    let f0 = cfg.initial_field(&weight, &eq)?;
    let gap_result = spectral_gap(&eq, cfg.poincare.tol)?;
    let rep = report(&f0, &eq, &weight, Some(gap_result.poincare))?;
    let k = rep.decay_constant.expect("Poincaré constant was supplied");

    prepare_dir(out)?;
    write_text(out, "config.txt", &cfg.render())?;
    let outcome = match run(&f0, &weight, &eq, &solver) {
        Ok(o) => o,
        Err(fail) => {
            write_table(out, "trajectory.csv", &trajectory_table(&fail.record))?;
            return Err(fail.error.into());
        }
    };
    let rec = outcome.record;
    let gap0 = rec.gap[0];
    let bound_excess = rec.decay_bound_excess(k);
    let bound_holds = bound_excess <= 1e-14 + 1e-10 * gap0;
    let stationary = rec.gap.iter().all(|g| g.abs() <= STATIONARY_GAP);
    let lambda_fit = if stationary { None } else { fit_rate(&rec, FIT_WINDOW).ok() };

    write_table(out, "trajectory.csv", &trajectory_table(&rec))?;
    let f = outcome.field.values();
    write_table(out, "field.csv", &field_table(&grid, &["f", "m"], &[f, eq.m()]))?;

    let report = SimulateReport {
        gamma: eq.gamma(),
        c: rep.c,
        upper: rep.upper,
        k1: rep.k1,
        k2: rep.k2,
        poincare: gap_result.poincare,
        decay_constant: k,
        lambda_fit,
        bound_excess,
        bound_holds,
        stationary,
        final_field: f.to_vec(),
        record: rec,
    };
    let r = &report;
    let mut s = Summary::default();
    s.num("gamma", r.gamma)
        .num("c", r.c)
        .num("C", r.upper)
        .num("k1", r.k1)
        .num("k2", r.k2)
        .num("C_P", r.poincare)
        .num("K", r.decay_constant)
        .num("rate_bound", 1.0 / r.decay_constant)
        .opt("lambda_fit", r.lambda_fit)
        .put("fit_exceeds_rate_bound", r.fit_ok())
        .put("bound_holds", r.bound_holds)
        .num("bound_excess", r.bound_excess)
        .put("stationary", r.stationary)
        .num("gap0", gap0)
        .num("gap_final", *r.record.gap.last().expect("record is non-empty"))
        .num("mass_drift", r.record.mass_drift())
        .num("max_principle_excess", r.record.max_principle_excess)
        .num("energy_increase", r.record.energy_increase)
        .num("t_end", outcome.t)
        .put("steps", r.record.steps)
        .put("halvings", r.record.halvings);
    write_text(out, "summary.txt", s.text())?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RungGap {
    pub lambda1: f64,
    pub poincare: f64,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoincareRung {
    pub n: usize,
    pub half_width: f64,
    /// The eigensolve, or the message of its error.
    pub result: std::result::Result<RungGap, String>,
}

impl PoincareRung {
    pub fn poincare(&self) -> Option<f64> {
        self.result.as_ref().ok().map(|r| r.poincare)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoincareReport {
    pub rungs: Vec<PoincareRung>,
    /// Richardson limit of the two finest consecutive rungs when their sizes double.
    pub limit: Option<f64>,
    /// Relative change of C_P between the two finest successful rungs.
    pub refinement_change: Option<f64>,
}

impl PoincareReport {
    pub fn failures(&self) -> usize {
        self.rungs.iter().filter(|r| r.result.is_err()).count()
    }
}

/// Refinement study of the discrete Poincaré constant over `poincare.ladder`.
pub fn poincare(cfg: &ExperimentConfig, out: &Path) -> Outcome<PoincareReport> {
    cfg.validate()?;
    if cfg.poincare.ladder.is_empty() {
        return Err(Error::Config("poincare.ladder is empty".into()).into());
    }
    // grid-level problems are configuration errors of the whole study
    for &n in &cfg.poincare.ladder {
        cfg.weight_on(&cfg.grid_with(n)?)?;
    }
    let rungs: Vec<PoincareRung> = cfg
        .poincare
        .ladder
        .par_iter()
        .map(|&n| {
            let grid = cfg.grid_with(n).expect("checked above");
            let weight = cfg.weight_on(&grid).expect("checked above");
            let result = Equilibrium::new(&weight, cfg.r)
                .and_then(|eq| spectral_gap(&eq, cfg.poincare.tol))
                .map(|g| RungGap {
                    lambda1: g.lambda1,
                    poincare: g.poincare,
                    iterations: g.iterations,
                    residual: g.residual,
                })
                .map_err(|e| e.to_string());
            PoincareRung { n, half_width: grid.axis_length() / 2.0, result }
        })
        .collect();

    let ok: Vec<&PoincareRung> = rungs.iter().filter(|r| r.result.is_ok()).collect();
    let (limit, refinement_change) = match ok.as_slice() {
        [.., a, b] => {
            let (ca, cb) = (a.poincare().unwrap(), b.poincare().unwrap());
            let limit = (b.n == 2 * a.n).then(|| richardson(ca, cb));
            (limit, Some((cb - ca).abs() / cb))
        }
        _ => (None, None),
    };

    prepare_dir(out)?;
    write_text(out, "config.txt", &cfg.render())?;
    let mut t = Table::new(&["N", "L", "lambda1", "C_P", "iterations", "residual", "status"]);
    for r in &rungs {
        let row = match &r.result {
            Ok(g) => [num(g.lambda1), num(g.poincare), g.iterations.to_string(), num(g.residual), "ok".into()],
            Err(msg) => ["nan".into(), "nan".into(), "0".into(), "nan".into(), format!("\"{}\"", msg.replace('"', "'"))],
        };
        let mut cells = vec![r.n.to_string(), num(r.half_width)];
        cells.extend(row);
        t.row(&cells);
    }
    write_table(out, "poincare.csv", &t)?;
    let mut s = Summary::default();
    s.put("rungs", rungs.len())
        .put("failed", rungs.len() - ok.len())
        .opt("C_P_finest", ok.last().and_then(|r| r.poincare()))
        .opt("C_P_limit", limit)
        .opt("refinement_change", refinement_change);
    write_text(out, "summary.txt", s.text())?;
    Ok(PoincareReport { rungs, limit, refinement_change })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyGroup {
    pub r: f64,
    pub poincare: f64,
    pub samples: Vec<(u64, BoundReport)>,
}

impl VerifyGroup {
    pub fn passes(&self) -> usize {
        self.samples.iter().filter(|(_, b)| b.all_hold()).count()
    }

    pub fn failing_seeds(&self) -> Vec<u64> {
        self.samples.iter().filter(|(_, b)| !b.all_hold()).map(|(s, _)| *s).collect()
    }

    fn worst(&self, f: impl Fn(&BoundReport) -> f64) -> f64 {
        self.samples.iter().map(|(_, b)| f(b)).fold(f64::INFINITY, f64::min)
    }

    /// Smallest slack of each inequality relative to the gap (or gradient energy).
    pub fn worst_relative_slacks(&self) -> [f64; 5] {
        let rel = |s: f64, scale: f64| if scale > 0.0 { s / scale } else { s };
        [
            self.worst(|b| rel(b.sandwich_lower_slack, b.gap)),
            self.worst(|b| rel(b.sandwich_upper_slack, b.gap)),
            self.worst(|b| rel(b.control_slack.unwrap_or(f64::INFINITY), b.gap)),
            self.worst(|b| rel(b.gradient_slack, b.gradient_energy)),
            self.worst(|b| b.worst_face_slack),
        ]
    }

    pub fn faces(&self) -> (usize, usize) {
        self.samples.iter().fold((0, 0), |(c, f), (_, b)| (c + b.faces_checked, f + b.faces_failed))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub groups: Vec<VerifyGroup>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.groups.iter().all(|g| g.passes() == g.samples.len())
    }

    pub fn failing_seeds(&self) -> Vec<(f64, u64)> {
        self.groups.iter().flat_map(|g| g.failing_seeds().into_iter().map(move |s| (g.r, s))).collect()
    }
}

/// Seed of sample `i`; rerunning with `seed = sample_seed(base, i)` and one
/// sample reproduces that field.
pub fn sample_seed(base: u64, i: usize) -> u64 {
    base.wrapping_add(i as u64)
}

/// Checks the sandwich, entropy–dissipation and gradient inequalities on
/// `samples` seeded random fields for every exponent in `verify.r_values`.
pub fn verify(cfg: &ExperimentConfig, samples: usize, out: &Path) -> Outcome<VerifyReport> {
    cfg.validate()?;
    if samples == 0 {
        return Err(Error::Config("need at least one sample".into()).into());
    }
    let r_values = if cfg.verify.r_values.is_empty() { vec![cfg.r] } else { cfg.verify.r_values.clone() };
    let grid = cfg.grid()?;
    let weight = cfg.weight_on(&grid)?;
    let mut groups = Vec::new();
    for &r in &r_values {
        let eq = Equilibrium::new(&weight, r)?;
        let cp = spectral_gap(&eq, cfg.poincare.tol)?.poincare;
        let samples: Vec<(u64, BoundReport)> = (0..samples)
            .into_par_iter()
            .map(|i| {
                let seed = sample_seed(cfg.seed, i);
                let f = random_field(&weight, &eq, cfg.verify.modes, cfg.verify.amplitude, seed)?;
                Ok((seed, verify_bounds(&f, &eq, Some(cp))?))
            })
            .collect::<ultrafast_core::Result<_>>()?;
        groups.push(VerifyGroup { r, poincare: cp, samples });
    }

    prepare_dir(out)?;
    write_text(out, "config.txt", &cfg.render())?;
    let mut t = Table::new(&[
        "r", "seed", "c", "C", "gap", "chi2", "I_reduced", "lower_slack", "upper_slack", "control_slack",
        "gradient_slack", "worst_face_slack", "faces_failed", "pass",
    ]);
    for g in &groups {
        for (seed, b) in &g.samples {
            t.row(&[
                num(g.r),
                seed.to_string(),
                num(b.c),
                num(b.upper),
                num(b.gap),
                num(b.chi2),
                num(b.reduced_dissipation),
                num(b.sandwich_lower_slack),
                num(b.sandwich_upper_slack),
                num(b.control_slack.unwrap_or(f64::NAN)),
                num(b.gradient_slack),
                num(b.worst_face_slack),
                b.faces_failed.to_string(),
                b.all_hold().to_string(),
            ]);
        }
    }
    write_table(out, "verify.csv", &t)?;
    let mut s = Summary::default();
    for g in &groups {
        let p = format!("r{}", g.r);
        let [lo, hi, ctl, grad, face] = g.worst_relative_slacks();
        let (checked, failed) = g.faces();
        s.num(&format!("{p}.C_P"), g.poincare)
            .put(&format!("{p}.passed"), format!("{}/{}", g.passes(), g.samples.len()))
            .num(&format!("{p}.worst_lower_slack"), lo)
            .num(&format!("{p}.worst_upper_slack"), hi)
            .num(&format!("{p}.worst_control_slack"), ctl)
            .num(&format!("{p}.worst_gradient_slack"), grad)
            .num(&format!("{p}.worst_face_slack"), face)
            .put(&format!("{p}.faces"), format!("{}/{}", checked - failed, checked));
    }
    let report = VerifyReport { groups };
    let seeds = report.failing_seeds();
    s.put("all_pass", seeds.is_empty());
    if let Some((r, seed)) = seeds.first() {
        s.put("first_failure", format!("r={r} seed={seed}"));
    }
    write_text(out, "summary.txt", s.text())?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizeReport {
    pub table: LadderTable,
    pub verdict: bool,
}

/// Truncation-ladder study on the configured (truncated or tensor) grid.
pub fn localize(cfg: &ExperimentConfig, out: &Path) -> Outcome<LocalizeReport> {
    cfg.validate()?;
    let ladder = &cfg.localize.ladder;
    if ladder.len() < 3 {
        return Err(Error::Config(format!(
            "localize.ladder needs at least 3 rungs to show a trend, got {}",
            ladder.len()
        ))
        .into());
    }
    check_ladder(ladder, cfg.localize.radius)?;
    if cfg.grid_kind == GridKind::Periodic1D {
        return Err(Error::Config("localize needs grid.kind = truncated1d or tensor2d".into()).into());
    }
    let big = cfg.grid()?;
    let top = *ladder.last().expect("ladder checked");
    let big_half = big.axis_length() / 2.0;
    if top > big_half + 1e-12 {
        return Err(Error::Config(format!(
            "top rung {top} exceeds the grid half-width {big_half}"
        ))
        .into());
    }
    let potential = cfg.potential()?;
    let weight = cfg.weight_on(&big)?;
    let eq = Equilibrium::new(&weight, cfg.r)?;
    let f0 = cfg.initial_field(&weight, &eq)?;
    let v = EquilibriumPotential::of_weight(&potential, cfg.r, big.dim())?;

    let problems: Vec<LocalizedProblem> = ladder
        .par_iter()
        .map(|&k| {
            LocalizedProblem::new(&v, cfg.r, f0.values(), &big, k)
                .map_err(|e| Error::Rung { radius: k, source: Box::new(e) })
        })
        .collect::<ultrafast_core::Result<_>>()?;
    let t_end = match cfg.localize.t_end {
        Some(t) => t,
        None => one_efold_horizon(problems.last().expect("ladder checked"), &cfg.solver_config(cfg.localize.probe_t_end))?,
    };
    let mut run_cfg = cfg.solver_config(t_end);
    run_cfg.record_every = t_end / 20.0;
    run_cfg.validate()?;
    let solutions: Vec<RungSolution> =
        problems.par_iter().map(|p| p.solve(&run_cfg)).collect::<ultrafast_core::Result<_>>()?;
    let table = ladder_table(&problems, &solutions, cfg.localize.radius, t_end)?;
    let verdict = table.is_monotone(LADDER_TOL);

    prepare_dir(out)?;
    write_text(out, "config.txt", &cfg.render())?;
    let mut t = Table::new(&["k", "a_k", "b_k", "c_k", "C_k", "L1_gap_to_next", "sandwich_excess"]);
    for row in &table.rows {
        t.row(&[
            num(row.radius),
            num(row.a),
            num(row.b),
            num(row.c),
            num(row.upper),
            row.l1_gap_to_next.map_or(String::new(), num),
            num(row.sandwich_excess),
        ]);
    }
    write_table(out, "ladder.csv", &t)?;
    let mut s = Summary::default();
    s.num("t_end", t_end)
        .num("comparison_radius", table.comparison_radius)
        .put("rungs", table.rows.len())
        .put("verdict", if verdict { "pass" } else { "fail" });
    write_text(out, "summary.txt", s.text())?;
    Ok(LocalizeReport { table, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_class() {
        assert_eq!(Failure::from(Error::Config("x".into())).exit_code(), 2);
        assert_eq!(Failure::from(Error::Parameter("r".into())).exit_code(), 2);
        assert_eq!(Failure::from(Error::Positivity { cell: 0, value: 0.0 }).exit_code(), 3);
        let rung = Error::Rung { radius: 4.0, source: Box::new(Error::Fit("few".into())) };
        assert_eq!(Failure::from(rung).exit_code(), 3);
        let io = Failure::Io { path: "x".into(), source: io::Error::other("denied") };
        assert_eq!((io.exit_code(), io.kind()), (2, "io"));
    }

    #[test]
    fn sample_seeds_are_consecutive() {
        assert_eq!(sample_seed(10, 3), 13);
        assert_eq!(sample_seed(u64::MAX, 1), 0);
    }
}
