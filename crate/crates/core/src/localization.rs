//! Truncation ladder: the whole-space problem is approximated by zero-flux
//! problems on growing balls `B(0,k)`.
//!
//! On each rung the equilibrium potential `V` (with `m = e^{-V}` on the whole
//! space) is rescaled to `a_k V` so that `e^{-a_k V}` has unit mass on the
//! ball, and the initial datum is rescaled to `b_k f₀` for the same reason.
//! Rungs share one cell size so that every grid nests inside the next and
//! the comparison ball `B(0,R)` is covered by identical cells on all rungs.
//!
//! On tensor grids `B(0,k)` is the square `[-k, k]²`.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridKind};
use crate::math;
use crate::solver::{run, SolverConfig};
use crate::weights::{check_exponent, DensityField, Equilibrium, Potential, Weight};

/// `V = shape + ln ∫ e^{-shape}`, so that `e^{-V}` is a probability density on R^dim.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumPotential {
    pub shape: Potential,
    pub log_norm: f64,
    pub dim: usize,
}

impl EquilibriumPotential {
    /// Potential of the continuum equilibrium of the weight `e^{-weight_potential}` at exponent `r`.
    pub fn of_weight(weight_potential: &Potential, r: f64, dim: usize) -> Result<Self> {
        check_exponent(r)?;
        match weight_potential {
            Potential::Quadratic { .. } | Potential::Power { .. } => {}
            other => {
                return Err(Error::Config(format!(
                    "localization needs a whole-space weight, got {}",
                    other.name()
                )))
            }
        }
        let shape = weight_potential.divided_by(r + 1.0);
        Ok(Self { shape, log_norm: shape.log_partition(dim), dim })
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        self.shape.eval(x) + self.log_norm
    }
}

fn ball_grid(dim: usize, k: f64, h: f64) -> Result<Grid> {
    let n_real = 2.0 * k / h;
    let n = libm::round(n_real) as usize;
    if (n as f64 - n_real).abs() > 1e-9 * n_real.max(1.0) {
        return Err(Error::Config(format!(
            "radius {k} is not a whole number of cells of width {h}"
        )));
    }
    if dim == 2 {
        Grid::tensor(n, k)
    } else {
        Grid::truncated(n, k)
    }
}

/// Finds `a_k` with `∫_{B(0,k)} e^{-a_k V} = 1` on a grid of `n_cells` per axis,
/// returning `(a_k, grid, m_k)`.
pub fn localize_weight(v: &EquilibriumPotential, k: f64, n_cells: usize) -> Result<(f64, Grid, Vec<f64>)> {
    if !(k > 0.0) {
        return Err(Error::Config(format!("truncation radius must be positive, got {k}")));
    }
    let grid = if v.dim == 2 { Grid::tensor(n_cells, k)? } else { Grid::truncated(n_cells, k)? };
    let (a, m) = localize_on(v, &grid)?;
    Ok((a, grid, m))
}

fn localize_on(v: &EquilibriumPotential, grid: &Grid) -> Result<(f64, Vec<f64>)> {
    let volume = grid.domain_volume();
    if volume <= 1.0 {
        return Err(Error::TruncationTooSmall { radius: grid.half_width().unwrap_or(0.0), volume });
    }
    let vals: Vec<f64> = (0..grid.n_cells()).map(|i| v.eval(grid.center(i))).collect();
    let vol = grid.cell_volume();
    let mass = |a: f64| vals.iter().map(|x| math::exp(-a * x)).sum::<f64>() * vol;

    // a ↦ mass(a) is convex with mass(0) = |B| > 1, so the first crossing of 1 is unique
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut tries = 0;
    while mass(hi) > 1.0 {
        lo = hi;
        hi *= 2.0;
        tries += 1;
        if tries > 60 {
            return Err(Error::Numerical { what: "no bracket for the potential rescaling".into(), residual: mass(hi) - 1.0 });
        }
    }
    let mut a = 0.5 * (lo + hi);
    for _ in 0..200 {
        a = 0.5 * (lo + hi);
        let g = mass(a) - 1.0;
        if g.abs() <= 1e-14 || hi - lo <= 1e-16 * hi {
            break;
        }
        if g > 0.0 {
            lo = a;
        } else {
            hi = a;
        }
    }
    let m: Vec<f64> = vals.iter().map(|x| math::exp(-a * x)).collect();
    let err = (m.iter().sum::<f64>() * vol - 1.0).abs();
    if err > 1e-12 {
        return Err(Error::Numerical { what: "potential rescaling did not reach unit mass".into(), residual: err });
    }
    Ok((a, m))
}

/// Index of each cell of `inner` inside `outer`; both grids must share the cell width and centre.
fn nested_indices(outer: &Grid, inner: &Grid) -> Result<Vec<usize>> {
    if outer.dim() != inner.dim() || (outer.h() - inner.h()).abs() > 1e-12 * outer.h() {
        return Err(Error::Config(format!(
            "grids do not nest: cell widths {} and {}",
            outer.h(),
            inner.h()
        )));
    }
    let (no, ni) = (outer.n_per_axis(), inner.n_per_axis());
    if ni > no || (no - ni) % 2 != 0 {
        return Err(Error::Config(format!(
            "grids do not nest: {ni} cells per axis cannot sit centred in {no}"
        )));
    }
    let off = (no - ni) / 2;
    Ok((0..inner.n_cells())
        .map(|i| match inner.kind() {
            GridKind::Tensor2D => (i % ni + off) + no * (i / ni + off),
            _ => i + off,
        })
        .collect())
}

/// `b_k = 1/∫_{B(0,k)} f₀` and `f₀^k = b_k f₀` on the ball grid `ball`.
pub fn localize_initial(f0: &[f64], big: &Grid, ball: &Grid) -> Result<(f64, Vec<f64>)> {
    big.check_len(f0)?;
    let idx = nested_indices(big, ball)?;
    let cut: Vec<f64> = idx.iter().map(|&i| f0[i]).collect();
    let mass = ball.integrate(&cut)?;
    if !(mass > 0.0) {
        return Err(Error::Config("initial datum has no mass inside the truncation ball".into()));
    }
    let b = 1.0 / mass;
    Ok((b, cut.into_iter().map(|x| b * x).collect()))
}

/// One rung of the ladder, ready to solve.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizedProblem {
    pub radius: f64,
    pub a: f64,
    pub b: f64,
    pub weight: Weight,
    pub equilibrium: Equilibrium,
    pub initial: DensityField,
}

impl LocalizedProblem {
    /// Builds the rung of radius `k` on cells of the same width as `big`.
    pub fn new(v: &EquilibriumPotential, r: f64, f0: &[f64], big: &Grid, k: f64) -> Result<Self> {
        let ball = ball_grid(v.dim, k, big.h())?;
        let (a, m) = localize_on(v, &ball)?;
        let (b, f0k) = localize_initial(f0, big, &ball)?;
        // the rung's weight is ρ_k ∝ m_k^{r+1}, whose equilibrium is m_k again
        let rho: Vec<f64> = m.iter().map(|x| math::pow(*x, r + 1.0)).collect();
        let weight = Weight::from_values(&ball, rho)?;
        let equilibrium = Equilibrium::new(&weight, r)?;
        let initial = DensityField::from_normalized(&equilibrium, f0k)?;
        Ok(Self { radius: k, a, b, weight, equilibrium, initial })
    }

    pub fn c(&self) -> f64 {
        self.initial.lower()
    }

    pub fn upper(&self) -> f64 {
        self.initial.upper()
    }

    pub fn solve(&self, config: &SolverConfig) -> Result<RungSolution> {
        let out = run(&self.initial, &self.weight, &self.equilibrium, config)
            .map_err(|f| Error::Rung { radius: self.radius, source: Box::new(f.error) })?;
        let (lo, hi) = (out.field.lower(), out.field.upper());
        Ok(RungSolution {
            radius: self.radius,
            field: out.field.into_values(),
            max_principle_excess: out.record.max_principle_excess,
            sandwich_excess: (self.c() - lo).max(hi - self.upper()).max(0.0),
            mass_drift: out.record.mass_drift(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RungSolution {
    pub radius: f64,
    pub field: Vec<f64>,
    pub max_principle_excess: f64,
    /// How far the final field left `[c_k, C_k]` (0 when inside).
    pub sandwich_excess: f64,
    pub mass_drift: f64,
}

/// One row of the convergence table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderRow {
    pub radius: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub upper: f64,
    /// `‖f^k − f^{k'}‖_{L¹(B(0,R))}` to the next rung; `None` on the top rung.
    pub l1_gap_to_next: Option<f64>,
    pub sandwich_excess: f64,
    pub mass_drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderTable {
    pub rows: Vec<LadderRow>,
    pub t_end: f64,
    pub comparison_radius: f64,
}

impl LadderTable {
    /// `|a_k − 1|`, `|b_k − 1|` and consecutive L¹ gaps non-increasing (within `tol`).
    pub fn is_monotone(&self, tol: f64) -> bool {
        let non_increasing = |xs: &[f64]| xs.windows(2).all(|w| w[1] <= w[0] + tol);
        let a: Vec<f64> = self.rows.iter().map(|r| (r.a - 1.0).abs()).collect();
        let b: Vec<f64> = self.rows.iter().map(|r| (r.b - 1.0).abs()).collect();
        non_increasing(&a) && non_increasing(&b) && non_increasing(&self.l1_gaps())
    }

    pub fn l1_gaps(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.l1_gap_to_next).collect()
    }
}

/// Validates a ladder: strictly increasing radii, all above the comparison radius.
pub fn check_ladder(ladder: &[f64], comparison_radius: f64) -> Result<()> {
    if ladder.len() < 2 {
        return Err(Error::Config("a ladder needs at least two rungs".into()));
    }
    if ladder.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("ladder radii must be strictly increasing".into()));
    }
    if !(comparison_radius > 0.0 && comparison_radius < ladder[0]) {
        return Err(Error::Config(format!(
            "comparison radius must lie in (0, {}), got {comparison_radius}",
            ladder[0]
        )));
    }
    Ok(())
}

/// Builds the table from solved rungs (in ladder order).
pub fn ladder_table(
    problems: &[LocalizedProblem],
    solutions: &[RungSolution],
    comparison_radius: f64,
    t_end: f64,
) -> Result<LadderTable> {
    let grids: Vec<&Grid> = problems.iter().map(|p| p.weight.grid()).collect();
    let inner = ball_grid(grids[0].dim(), comparison_radius, grids[0].h())?;
    let restricted: Vec<Vec<f64>> = grids
        .iter()
        .zip(solutions)
        .map(|(g, s)| nested_indices(g, &inner).map(|idx| idx.iter().map(|&i| s.field[i]).collect()))
        .collect::<Result<_>>()?;
    let vol = inner.cell_volume();
    let rows = problems
        .iter()
        .enumerate()
        .map(|(i, p)| LadderRow {
            radius: p.radius,
            a: p.a,
            b: p.b,
            c: p.c(),
            upper: p.upper(),
            l1_gap_to_next: restricted.get(i + 1).map(|next| {
                next.iter().zip(&restricted[i]).map(|(x, y)| (x - y).abs()).sum::<f64>() * vol
            }),
            sandwich_excess: solutions[i].sandwich_excess,
            mass_drift: solutions[i].mass_drift,
        })
        .collect();
    Ok(LadderTable { rows, t_end, comparison_radius })
}

/// Runs the top rung until its gap has dropped by e³ (or the probe horizon
/// `probe.t_end` passes), then reruns that stretch with 100 records and
/// returns `1/λ_fit`.
pub fn one_efold_horizon(top: &LocalizedProblem, probe: &SolverConfig) -> Result<f64> {
    let gap0 = crate::functionals::energy_gap(top.initial.values(), &top.equilibrium)?;
    let solve = |cfg: &SolverConfig| {
        run(&top.initial, &top.weight, &top.equilibrium, cfg)
            .map_err(|f| Error::Rung { radius: top.radius, source: Box::new(f.error) })
    };
    let mut cfg = probe.clone();
    cfg.stop_below_gap = Some(gap0 * math::exp(-3.0));
    cfg.record_every = probe.t_end / 1000.0;
    let horizon = solve(&cfg)?.t;
    cfg.t_end = horizon;
    cfg.record_every = horizon / 100.0;
    cfg.stop_below_gap = None;
    let rate = crate::solver::fit_rate(&solve(&cfg)?.record, 1.0)?;
    if !(rate > 0.0) {
        return Err(Error::Fit(format!("non-positive fitted rate {rate}")));
    }
    Ok(1.0 / rate)
}

/// Sequential ladder study: builds every rung from `f0` on `big`, solves
/// each to `t_end` (or one fitted e-fold of the top rung when `None`), and
/// compares consecutive rungs on `B(0,R)`.
#[allow(clippy::too_many_arguments)]
pub fn localization_study(
    v: &EquilibriumPotential,
    r: f64,
    f0: &[f64],
    big: &Grid,
    ladder: &[f64],
    comparison_radius: f64,
    t_end: Option<f64>,
    template: &SolverConfig,
) -> Result<LadderTable> {
    check_ladder(ladder, comparison_radius)?;
    let problems: Vec<LocalizedProblem> = ladder
        .iter()
        .map(|&k| {
            LocalizedProblem::new(v, r, f0, big, k).map_err(|e| Error::Rung { radius: k, source: Box::new(e) })
        })
        .collect::<Result<_>>()?;
    let t_end = match t_end {
        Some(t) => t,
        None => one_efold_horizon(problems.last().expect("ladder has rungs"), template)?,
    };
    let mut cfg = template.clone();
    cfg.t_end = t_end;
    cfg.record_every = t_end / 20.0;
    cfg.stop_below_gap = None;
    let solutions: Vec<RungSolution> = problems.iter().map(|p| p.solve(&cfg)).collect::<Result<_>>()?;
    ladder_table(&problems, &solutions, comparison_radius, t_end)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn n03() -> EquilibriumPotential {
        EquilibriumPotential::of_weight(&Potential::gaussian(1.0).unwrap(), 2.0, 1).unwrap()
    }

    #[test]
    fn wide_ball_keeps_potential() {
        let v = n03();
        assert!((v.log_norm - (6.0 * PI).sqrt().ln()).abs() < 1e-12);
        let (a, g, m) = localize_weight(&v, 12.0, 1200).unwrap();
        assert!((a - 1.0).abs() < 1e-6, "{a}");
        assert!((g.integrate(&m).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn narrow_ball_lowers_scale() {
        let (a, _, _) = localize_weight(&n03(), 2.0, 200).unwrap();
        assert!(a < 1.0);
        let (a3, _, _) = localize_weight(&n03(), 3.0, 300).unwrap();
        let (a5, _, _) = localize_weight(&n03(), 5.0, 500).unwrap();
        assert!((a5 - 1.0).abs() <= (a3 - 1.0).abs());
        assert!((a3 - 1.0).abs() <= (a - 1.0).abs());
    }

    #[test]
    fn tiny_ball_is_rejected() {
        assert!(matches!(localize_weight(&n03(), 0.4, 8), Err(Error::TruncationTooSmall { .. })));
    }

    #[test]
    fn initial_rescaling() {
        let big = Grid::truncated(200, 10.0).unwrap();
        let ball = ball_grid(1, 4.0, big.h()).unwrap();
        // compactly supported datum inside the ball
        let f0: Vec<f64> = big.axis_centers().iter().map(|x| if x.abs() < 1.0 { 0.5 } else { 0.0 }).collect();
        let (b, fk) = localize_initial(&f0, &big, &ball).unwrap();
        assert!((b - 1.0).abs() < 1e-14);
        assert_eq!(fk.iter().filter(|&&x| x > 0.0).count(), 20);
        let zero = std::vec![0.0; 200];
        assert!(matches!(localize_initial(&zero, &big, &ball), Err(Error::Config(_))));
    }

    #[test]
    fn initial_rescaling_of_gaussian_tail() {
        let big = Grid::truncated(4000, 20.0).unwrap();
        let f0: Vec<f64> = big.axis_centers().iter().map(|x| (-x * x / 6.0).exp() / (6.0 * PI).sqrt()).collect();
        // 99% of N(0,3) lies within 2.5758·√3 ≈ 4.4614
        let ball = ball_grid(1, 4.46, big.h()).unwrap();
        let (b, _) = localize_initial(&f0, &big, &ball).unwrap();
        assert!((b - 1.0 / 0.99).abs() < 2e-4, "{b}");
    }

    #[test]
    fn ladder_validation() {
        assert!(check_ladder(&[4.0, 6.0, 8.0], 3.0).is_ok());
        assert!(check_ladder(&[4.0], 3.0).is_err());
        assert!(check_ladder(&[4.0, 4.0], 3.0).is_err());
        assert!(check_ladder(&[4.0, 6.0], 4.0).is_err());
    }
}
