//! Conservative explicit finite-volume scheme for
//! `∂t f = −r div(f ∇φ)`, `φ = ρ / f^{r+1}`.
//!
//! One step reads
//!
//! ```text
//! f_i ← f_i + (r·dt/h²) Σ_{j ~ i} f_ij (φ_i − φ_j),    f_ij = (f_i + f_j)/2
//! ```
//!
//! over flux-carrying faces; zero-flux walls contribute nothing. Each face
//! moves mass from one cell to its neighbour, so total mass telescopes, and
//! `f = m` is a fixed point because `ρ/m^{r+1}` is constant.
//!
//! The time step comes from the linearized diffusivity
//! `D = r(r+1)ρ/f^{r+1}`: `dt = cfl·h² / (2·dim·max D)`. A step that would
//! push a cell below the positivity floor is retried with half the step, up
//! to [`MAX_HALVINGS`] times.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::functionals::{chi2_distance, dissipation_from_pressure, energy_gap, pressure_values};
use crate::grid::Grid;
use crate::math;
use crate::weights::{sandwich, DensityField, Equilibrium, Weight};

pub const MAX_HALVINGS: usize = 20;
/// Allowed drift of total mass along a run.
pub const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub t_end: f64,
    pub cfl_safety: f64,
    /// Time between recorded diagnostics.
    pub record_every: f64,
    pub dt_max: Option<f64>,
    pub positivity_floor: f64,
    /// Times at which the full field is stored.
    pub snapshot_times: Vec<f64>,
    /// Stop early once a recorded gap falls below this value.
    pub stop_below_gap: Option<f64>,
}

impl SolverConfig {
    pub fn new(t_end: f64) -> Self {
        Self {
            t_end,
            cfl_safety: 0.4,
            record_every: t_end / 100.0,
            dt_max: None,
            positivity_floor: 0.0,
            snapshot_times: Vec::new(),
            stop_below_gap: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::Config(format!("t_end must be positive, got {}", self.t_end)));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 0.9) {
            return Err(Error::Config(format!(
                "cfl_safety must lie in (0, 0.9], got {}",
                self.cfl_safety
            )));
        }
        if !(self.record_every > 0.0) {
            return Err(Error::Config(format!(
                "record_every must be positive, got {}",
                self.record_every
            )));
        }
        if let Some(dt) = self.dt_max {
            if !(dt > 0.0) {
                return Err(Error::Config(format!("dt_max must be positive, got {dt}")));
            }
        }
        if !(self.positivity_floor >= 0.0) {
            return Err(Error::Config("positivity_floor must be non-negative".into()));
        }
        Ok(())
    }
}

/// Diagnostics along a trajectory, one entry per recorded time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunRecord {
    pub times: Vec<f64>,
    pub free_energy: Vec<f64>,
    pub gap: Vec<f64>,
    pub dissipation: Vec<f64>,
    pub chi2: Vec<f64>,
    /// `min f/m`.
    pub lower: Vec<f64>,
    /// `max f/m`.
    pub upper: Vec<f64>,
    pub mass: Vec<f64>,
    /// Last step size before each record (0 at t = 0).
    pub dt: Vec<f64>,
    pub steps: usize,
    pub halvings: usize,
    /// Worst single-step decrease of `min f/m` or increase of `max f/m`.
    pub max_principle_excess: f64,
    /// Worst single-step increase of the free energy.
    pub energy_increase: f64,
    pub snapshots: Vec<(f64, Vec<f64>)>,
}

impl RunRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest `|mass(t) − 1|` over the record.
    pub fn mass_drift(&self) -> f64 {
        self.mass.iter().fold(0.0, |a, m| a.max((m - 1.0).abs()))
    }

    /// Largest increase of the gap between consecutive records.
    pub fn worst_gap_increase(&self) -> f64 {
        self.gap.windows(2).fold(0.0, |a, w| a.max(w[1] - w[0]))
    }

    /// Largest `gap(t) − gap(0)·e^{−t/K}` over the record; ≤ 0 when the decay bound holds.
    pub fn decay_bound_excess(&self, k: f64) -> f64 {
        let (Some(&t0), Some(&g0)) = (self.times.first(), self.gap.first()) else {
            return 0.0;
        };
        self.times
            .iter()
            .zip(&self.gap)
            .map(|(t, g)| g - g0 * math::exp(-(t - t0) / k))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn push(&mut self, t: f64, dt: f64, f: &[f64], phi: &[f64], eq: &Equilibrium) -> Result<()> {
        let grid = eq.grid();
        let vol = grid.cell_volume();
        let free_energy: f64 = phi.iter().zip(f).map(|(p, f)| p * f).sum::<f64>() * vol;
        let (lo, hi) = sandwich(f, eq.m());
        self.times.push(t);
        self.free_energy.push(free_energy);
        self.gap.push(energy_gap(f, eq)?);
        self.dissipation.push(dissipation_from_pressure(f, phi, eq));
        self.chi2.push(chi2_distance(f, eq)?);
        self.lower.push(lo);
        self.upper.push(hi);
        self.mass.push(f.iter().sum::<f64>() * vol);
        self.dt.push(dt);
        Ok(())
    }
}

/// Successful run: the record and the final field.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub record: RunRecord,
    pub field: DensityField,
    pub t: f64,
}

/// Failed run: the error and everything recorded before it.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub error: Error,
    pub record: RunRecord,
}

impl From<RunFailure> for Error {
    fn from(f: RunFailure) -> Error {
        f.error
    }
}

/// `φ_i = ρ_i / f_i^{r+1}`, refusing any `f_i ≤ floor`.
pub fn pressure(f: &[f64], weight: &Weight, r: f64, floor: f64) -> Result<Vec<f64>> {
    weight.grid().check_len(f)?;
    check_floor(f, floor)?;
    Ok(pressure_values(f, weight.rho(), r))
}

fn check_floor(f: &[f64], floor: f64) -> Result<()> {
    match f.iter().position(|v| !(*v > floor)) {
        Some(cell) => Err(Error::Positivity { cell, value: f[cell] }),
        None => Ok(()),
    }
}

/// `cfl·h² / (2·dim·max D)` with `D = r(r+1)ρ/f^{r+1}`.
pub fn stable_dt(f: &[f64], weight: &Weight, grid: &Grid, r: f64, cfl_safety: f64) -> Result<f64> {
    let phi = pressure(f, weight, r, 0.0)?;
    Ok(stable_dt_from_pressure(&phi, grid, r, cfl_safety))
}

fn stable_dt_from_pressure(phi: &[f64], grid: &Grid, r: f64, cfl: f64) -> f64 {
    let max_phi = phi.iter().copied().fold(0.0, f64::max);
    let d = r * (r + 1.0) * max_phi;
    cfl * grid.h() * grid.h() / (2.0 * grid.dim() as f64 * d)
}

/// Applies one explicit update given the pressure of `f`.
fn advance(f: &[f64], phi: &[f64], grid: &Grid, r: f64, dt: f64, out: &mut [f64]) {
    out.copy_from_slice(f);
    let coef = r * dt / (grid.h() * grid.h());
    for face in grid.faces() {
        let (i, j) = (face.lower, face.upper);
        let flux = coef * 0.5 * (f[i] + f[j]) * (phi[i] - phi[j]);
        out[i] += flux;
        out[j] -= flux;
    }
}

/// One explicit step of size `dt`. Fails if any cell would end at or below `floor`.
pub fn step(f: &DensityField, weight: &Weight, eq: &Equilibrium, dt: f64, floor: f64) -> Result<DensityField> {
    if !(dt > 0.0) {
        return Err(Error::Parameter(format!("dt must be positive, got {dt}")));
    }
    let phi = pressure(f.values(), weight, eq.r(), floor)?;
    let mut next = vec![0.0; f.values().len()];
    advance(f.values(), &phi, eq.grid(), eq.r(), dt, &mut next);
    check_floor(&next, floor)?;
    DensityField::from_normalized(eq, next)
}

fn check_compatible(f0: &DensityField, weight: &Weight, eq: &Equilibrium) -> Result<()> {
    if f0.grid() != weight.grid() || eq.grid() != weight.grid() {
        return Err(Error::Config("initial data, weight and equilibrium must share one grid".into()));
    }
    Ok(())
}

/// Integrates from `f0` to `config.t_end`, recording diagnostics every
/// `config.record_every`. Mass drift beyond [`MASS_TOL`] or a non-finite
/// value aborts the run; so does a positivity failure that survives
/// [`MAX_HALVINGS`] step halvings.
#[allow(clippy::result_large_err)]
pub fn run(
    f0: &DensityField,
    weight: &Weight,
    eq: &Equilibrium,
    config: &SolverConfig,
) -> core::result::Result<RunOutcome, RunFailure> {
    let mut record = RunRecord::default();
    match run_inner(f0, weight, eq, config, &mut record) {
        Ok((field, t)) => Ok(RunOutcome { record, field, t }),
        Err(error) => Err(RunFailure { error, record }),
    }
}

fn run_inner(
    f0: &DensityField,
    weight: &Weight,
    eq: &Equilibrium,
    config: &SolverConfig,
    record: &mut RunRecord,
) -> Result<(DensityField, f64)> {
    config.validate()?;
    check_compatible(f0, weight, eq)?;
    let grid = eq.grid();
    let r = eq.r();
    let vol = grid.cell_volume();
    let floor = config.positivity_floor;

    let mut f = f0.values().to_vec();
    let mut next = vec![0.0; f.len()];
    let mut phi = pressure(&f, weight, r, floor)?;
    let mass0 = f.iter().sum::<f64>() * vol;
    record.push(0.0, 0.0, &f, &phi, eq)?;

    let mut snapshots: Vec<f64> = config.snapshot_times.iter().copied().filter(|&s| s >= 0.0).collect();
    snapshots.sort_by(f64::total_cmp);
    let mut snap_idx = 0;
    while snap_idx < snapshots.len() && snapshots[snap_idx] <= 0.0 {
        record.snapshots.push((0.0, f.clone()));
        snap_idx += 1;
    }

    let mut t = 0.0;
    let mut record_count = 1usize;
    let mut next_record = config.record_every.min(config.t_end);
    let (mut lo, mut hi) = sandwich(&f, eq.m());
    let mut energy = phi.iter().zip(&f).map(|(p, f)| p * f).sum::<f64>() * vol;

    while t < config.t_end {
        let mut dt = stable_dt_from_pressure(&phi, grid, r, config.cfl_safety);
        if let Some(cap) = config.dt_max {
            dt = dt.min(cap);
        }
        let mut target = next_record.min(config.t_end);
        if let Some(&s) = snapshots.get(snap_idx) {
            target = target.min(s);
        }
        let mut lands = false;
        if t + dt >= target {
            dt = target - t;
            lands = true;
        }

        let mut attempt = 0;
        loop {
            advance(&f, &phi, grid, r, dt, &mut next);
            if check_floor(&next, floor).is_ok() {
                break;
            }
            attempt += 1;
            if attempt > MAX_HALVINGS {
                let cell = next.iter().position(|v| !(*v > floor)).unwrap_or(0);
                return Err(Error::Positivity { cell, value: next[cell] });
            }
            dt *= 0.5;
            lands = false;
        }
        record.halvings += attempt;
        record.steps += 1;
        t = if lands { target } else { t + dt };
        core::mem::swap(&mut f, &mut next);

        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical { what: format!("non-finite density at t = {t}"), residual: f64::NAN });
        }
        let mass = f.iter().sum::<f64>() * vol;
        if (mass - mass0).abs() > MASS_TOL {
            return Err(Error::Invariant(format!("mass drifted to {mass} at t = {t}")));
        }
        phi = pressure(&f, weight, r, floor)?;
        let (new_lo, new_hi) = sandwich(&f, eq.m());
        record.max_principle_excess = record.max_principle_excess.max(lo - new_lo).max(new_hi - hi);
        lo = new_lo;
        hi = new_hi;
        let new_energy = phi.iter().zip(&f).map(|(p, f)| p * f).sum::<f64>() * vol;
        record.energy_increase = record.energy_increase.max(new_energy - energy);
        energy = new_energy;

        while snap_idx < snapshots.len() && snapshots[snap_idx] <= t {
            record.snapshots.push((t, f.clone()));
            snap_idx += 1;
        }
        if t >= next_record || t >= config.t_end {
            record.push(t, dt, &f, &phi, eq)?;
            record_count += 1;
            next_record = config.record_every * record_count as f64;
            if let (Some(stop), Some(&g)) = (config.stop_below_gap, record.gap.last()) {
                if g < stop {
                    break;
                }
            }
        }
    }
    Ok((DensityField::from_normalized(eq, f)?, t))
}

/// L¹ distance history of two runs advanced with a shared step size.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairRecord {
    pub times: Vec<f64>,
    pub l1: Vec<f64>,
    /// Largest single-step increase of the L¹ distance.
    pub worst_increase: f64,
    /// Largest `|mass − 1|` of either run over all steps.
    pub mass_drift: f64,
}

/// Advances `f0` and `g0` with `dt = min(stable_dt(f), stable_dt(g))` every
/// step and records `‖f − g‖_{L¹}` after each step.
pub fn run_paired(
    f0: &DensityField,
    g0: &DensityField,
    weight: &Weight,
    eq: &Equilibrium,
    config: &SolverConfig,
) -> Result<PairRecord> {
    config.validate()?;
    check_compatible(f0, weight, eq)?;
    check_compatible(g0, weight, eq)?;
    let grid = eq.grid();
    let r = eq.r();
    let vol = grid.cell_volume();
    let floor = config.positivity_floor;
    let l1 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * vol;
    let drift = |a: &[f64]| (a.iter().sum::<f64>() * vol - 1.0).abs();

    let mut f = f0.values().to_vec();
    let mut g = g0.values().to_vec();
    let mut fn_ = vec![0.0; f.len()];
    let mut gn = vec![0.0; g.len()];
    let mut out = PairRecord::default();
    let mut t = 0.0;
    let mut dist = l1(&f, &g);
    out.mass_drift = drift(&f).max(drift(&g));
    out.times.push(t);
    out.l1.push(dist);
    while t < config.t_end {
        let pf = pressure(&f, weight, r, floor)?;
        let pg = pressure(&g, weight, r, floor)?;
        let mut dt = stable_dt_from_pressure(&pf, grid, r, config.cfl_safety)
            .min(stable_dt_from_pressure(&pg, grid, r, config.cfl_safety));
        if let Some(cap) = config.dt_max {
            dt = dt.min(cap);
        }
        dt = dt.min(config.t_end - t);
        advance(&f, &pf, grid, r, dt, &mut fn_);
        advance(&g, &pg, grid, r, dt, &mut gn);
        check_floor(&fn_, floor)?;
        check_floor(&gn, floor)?;
        core::mem::swap(&mut f, &mut fn_);
        core::mem::swap(&mut g, &mut gn);
        t += dt;
        let d = l1(&f, &g);
        out.worst_increase = out.worst_increase.max(d - dist);
        out.mass_drift = out.mass_drift.max(drift(&f)).max(drift(&g));
        dist = d;
        out.times.push(t);
        out.l1.push(d);
    }
    Ok(out)
}

/// Least-squares slope of `−ln(gap)` against t over the last `window`
/// fraction of the record's time span, using points with `gap > 1e-13`.
pub fn fit_rate(record: &RunRecord, window: f64) -> Result<f64> {
    fit_rate_series(&record.times, &record.gap, window)
}

pub const MIN_FIT_POINTS: usize = 10;
pub const FIT_GAP_FLOOR: f64 = 1e-13;

pub fn fit_rate_series(times: &[f64], gaps: &[f64], window: f64) -> Result<f64> {
    if !(window > 0.0 && window <= 1.0) {
        return Err(Error::Fit(format!("window must lie in (0, 1], got {window}")));
    }
    if times.len() != gaps.len() || times.is_empty() {
        return Err(Error::Fit("times and gaps must be non-empty and of equal length".into()));
    }
    let (t_first, t_last) = (times[0], times[times.len() - 1]);
    let t0 = t_last - window * (t_last - t_first);
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(gaps)
        .filter(|(t, g)| **t >= t0 && **g > FIT_GAP_FLOOR)
        .map(|(t, g)| (*t, -math::ln(*g)))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::Fit(format!(
            "need at least {MIN_FIT_POINTS} points with gap > {FIT_GAP_FLOOR:e} in the window, found {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(t, y)| (t - tm) * (y - ym)).sum();
    let sxx: f64 = pts.iter().map(|(t, _)| (t - tm) * (t - tm)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Fit("window has no time spread".into()));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{dissipation, free_energy};
    use crate::weights::{InitialData, Potential};
    use std::vec::Vec;

    fn uniform(n: usize) -> (Weight, Equilibrium) {
        let g = Grid::periodic(n).unwrap();
        let w = Weight::new(&g, Potential::Uniform).unwrap();
        let e = Equilibrium::new(&w, 2.0).unwrap();
        (w, e)
    }

    #[test]
    fn pressure_examples() {
        let (w, e) = uniform(4);
        let phi = pressure(e.m(), &w, 2.0, 1e-14).unwrap();
        assert!(phi.iter().all(|p| (p - e.free_energy_level()).abs() < 1e-14));
        let f = [1.5, 1.5, 0.5, 0.5];
        let phi = pressure(&f, &w, 2.0, 1e-14).unwrap();
        assert!((phi[0] - 1.0 / 3.375).abs() < 1e-15 && (phi[2] - 8.0).abs() < 1e-14);
        let scaled: Vec<f64> = f.iter().map(|x| 2.0 * x).collect();
        let phi2 = pressure(&scaled, &w, 2.0, 1e-14).unwrap();
        assert!((phi2[0] / phi[0] - 2f64.powf(-3.0)).abs() < 1e-15);
        assert!(matches!(pressure(&[1.0, 1.0, 1e-15, 1.0], &w, 2.0, 1e-14), Err(Error::Positivity { cell: 2, .. })));
    }

    #[test]
    fn stable_dt_example() {
        let (w, e) = uniform(100);
        let dt = stable_dt(e.m(), &w, e.grid(), 2.0, 0.4).unwrap();
        assert!((dt - 0.4 * 1e-4 / 12.0).abs() < 1e-18);
        let (w2, e2) = uniform(200);
        let dt2 = stable_dt(e2.m(), &w2, e2.grid(), 2.0, 0.4).unwrap();
        assert!((dt / dt2 - 4.0).abs() < 1e-12);
        let low: Vec<f64> = e.m().iter().enumerate().map(|(i, m)| if i == 3 { 0.5 * m } else { *m }).collect();
        assert!(stable_dt(&low, &w, e.grid(), 2.0, 0.4).unwrap() < dt);
    }

    #[test]
    fn equilibrium_is_fixed_point_and_mass_is_conserved() {
        let (w, e) = uniform(32);
        let m = DensityField::from_normalized(&e, e.m().to_vec()).unwrap();
        let next = step(&m, &w, &e, 1e-4, 1e-14).unwrap();
        assert_eq!(next.values(), m.values());

        let f = InitialData::Step { left: 1.5, right: 0.5 }.build(&w, &e).unwrap();
        let dt = stable_dt(f.values(), &w, e.grid(), 2.0, 0.4).unwrap();
        let next = step(&f, &w, &e, dt, 1e-14).unwrap();
        assert!((next.mass() - f.mass()).abs() < 1e-14);
        assert!(energy_gap(next.values(), &e).unwrap() < energy_gap(f.values(), &e).unwrap());
    }

    #[test]
    fn semi_discrete_dissipation_identity() {
        // -dF/dt of the scheme equals the flux-form dissipation to first order in dt
        let g = Grid::truncated(200, 9.0).unwrap();
        let w = Weight::new(&g, Potential::gaussian(1.0).unwrap()).unwrap();
        let e = Equilibrium::new(&w, 2.0).unwrap();
        let f = InitialData::Cosine { epsilon: 0.3, mode: 1 }.build(&w, &e).unwrap();
        let i0 = dissipation(f.values(), &e, &w).unwrap();
        let f0 = free_energy(f.values(), &e, &w).unwrap();
        let dt = stable_dt(f.values(), &w, &g, 2.0, 0.4).unwrap() / 4.0;
        let mut errs = Vec::new();
        for k in 0..3 {
            let h = dt / 2f64.powi(k);
            let f1 = step(&f, &w, &e, h, 1e-14).unwrap();
            let df = (free_energy(f1.values(), &e, &w).unwrap() - f0) / h;
            errs.push(((df + i0) / i0).abs());
        }
        assert!(errs[0] < 0.02);
        assert!((errs[1] / errs[0] - 0.5).abs() < 0.05, "{errs:?}");
        assert!((errs[2] / errs[1] - 0.5).abs() < 0.05, "{errs:?}");
    }

    #[test]
    fn run_records_monotone_decay() {
        let (w, e) = uniform(64);
        let f0 = InitialData::Step { left: 1.5, right: 0.5 }.build(&w, &e).unwrap();
        let mut cfg = SolverConfig::new(0.01);
        cfg.record_every = 0.0005;
        let out = run(&f0, &w, &e, &cfg).unwrap();
        let rec = &out.record;
        assert_eq!(rec.len(), 21);
        assert_eq!(*rec.times.last().unwrap(), 0.01);
        assert!(rec.mass_drift() <= 1e-12);
        assert!(rec.worst_gap_increase() <= 1e-10);
        assert!(rec.max_principle_excess <= 1e-9);
        assert!(rec.energy_increase <= 1e-10);
        assert!(rec.gap.last().unwrap() < &rec.gap[0]);
    }

    #[test]
    fn run_snapshots_and_stop() {
        let (w, e) = uniform(32);
        let f0 = InitialData::Cosine { epsilon: 0.5, mode: 1 }.build(&w, &e).unwrap();
        let mut cfg = SolverConfig::new(0.02);
        cfg.snapshot_times = std::vec![0.0, 0.0013];
        cfg.stop_below_gap = Some(1e-3);
        let out = run(&f0, &w, &e, &cfg).unwrap();
        assert_eq!(out.record.snapshots.len(), 2);
        assert_eq!(out.record.snapshots[1].0, 0.0013);
        assert!(out.t < 0.02);
        assert!(*out.record.gap.last().unwrap() < 1e-3);
    }

    #[test]
    fn run_rejects_bad_config() {
        let (w, e) = uniform(16);
        let f0 = InitialData::Equilibrium.build(&w, &e).unwrap();
        let mut cfg = SolverConfig::new(1.0);
        cfg.cfl_safety = 0.95;
        assert!(matches!(run(&f0, &w, &e, &cfg).unwrap_err().error, Error::Config(_)));
        assert!(matches!(run(&f0, &w, &e, &SolverConfig::new(0.0)).unwrap_err().error, Error::Config(_)));
    }

    #[test]
    fn oversized_dt_cap_is_rescued_by_halving() {
        let (w, e) = uniform(32);
        let f0 = InitialData::Step { left: 1.9, right: 0.1 }.build(&w, &e).unwrap();
        let mut cfg = SolverConfig::new(1e-4);
        cfg.cfl_safety = 0.9;
        let out = run(&f0, &w, &e, &cfg).unwrap();
        assert!(out.record.mass_drift() <= 1e-12);
    }

    #[test]
    fn fit_rate_synthetic() {
        let t: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let g: Vec<f64> = t.iter().map(|t| (-5.0 * t).exp()).collect();
        assert!((fit_rate_series(&t, &g, 0.6).unwrap() - 5.0).abs() < 1e-9);
        let g: Vec<f64> = t.iter().map(|t| 2.0 * (-3.0 * t).exp() + 1e-15).collect();
        assert!((fit_rate_series(&t, &g, 0.6).unwrap() - 3.0).abs() < 1e-3);
        assert!(matches!(fit_rate_series(&t[..5], &g[..5], 0.6), Err(Error::Fit(_))));
        let flat = std::vec![1e-14; 50];
        assert!(matches!(fit_rate_series(&t, &flat, 0.6), Err(Error::Fit(_))));
    }
}
