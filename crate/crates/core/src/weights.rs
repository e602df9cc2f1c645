//! Weights ρ ∝ e^{-V}, the equilibrium m = γρ^{1/(r+1)}, and initial data
//! in the sandwich class `c·m ≤ f ≤ C·m`.
//!
//! All normalizations are discrete: ρ, m and every constructed density
//! integrate to one under the grid's midpoint rule, which keeps the algebraic
//! identity `ρ_i / m_i^{r+1} = γ^{-(r+1)}` exact cell by cell.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridKind};
use crate::math;

/// Potential `V` of a weight, `ρ ∝ e^{-V}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Potential {
    /// `V = |x|² / (2σ²)`, the centred Gaussian with per-axis variance σ².
    Quadratic { sigma: f64 },
    /// `V = |x / scale|^α / α` with `1 < α ≤ 2`.
    Power { alpha: f64, scale: f64 },
    /// `V ≡ 0`, only on the periodic unit interval.
    Uniform,
    /// Values supplied cell by cell (localized problems).
    Tabulated,
}

impl Potential {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        let p = Potential::Quadratic { sigma };
        p.validate_params()?;
        Ok(p)
    }

    pub fn power(alpha: f64) -> Result<Self> {
        let p = Potential::Power { alpha, scale: 1.0 };
        p.validate_params()?;
        Ok(p)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Potential::Quadratic { .. } => "gaussian",
            Potential::Power { .. } => "power",
            Potential::Uniform => "uniform",
            Potential::Tabulated => "tabulated",
        }
    }

    fn validate_params(&self) -> Result<()> {
        match *self {
            Potential::Quadratic { sigma } if !(sigma > 0.0) || !sigma.is_finite() => {
                Err(Error::Config(format!("sigma must be positive, got {sigma}")))
            }
            Potential::Power { alpha, .. } if !(alpha > 1.0 && alpha <= 2.0) => {
                Err(Error::UnsupportedWeight(format!(
                    "power exponent alpha must lie in (1, 2], got {alpha}"
                )))
            }
            Potential::Power { scale, .. } if !(scale > 0.0) || !scale.is_finite() => {
                Err(Error::Config(format!("power scale must be positive, got {scale}")))
            }
            _ => Ok(()),
        }
    }

    fn validate_for(&self, kind: GridKind) -> Result<()> {
        self.validate_params()?;
        match (self, kind) {
            (Potential::Uniform, GridKind::Periodic1D) => Ok(()),
            (Potential::Uniform, _) => Err(Error::Config(
                "the uniform weight is only defined on the periodic unit interval".into(),
            )),
            (Potential::Tabulated, _) => Err(Error::Config(
                "tabulated weights are built from explicit values".into(),
            )),
            (_, GridKind::Periodic1D) => Err(Error::Config(format!(
                "the {} weight needs a truncated grid",
                self.name()
            ))),
            _ => Ok(()),
        }
    }

    /// `V` as a function of the distance to the origin.
    pub fn eval_radius(&self, radius: f64) -> f64 {
        match *self {
            Potential::Quadratic { sigma } => radius * radius / (2.0 * sigma * sigma),
            Potential::Power { alpha, scale } => math::pow(radius / scale, alpha) / alpha,
            Potential::Uniform | Potential::Tabulated => 0.0,
        }
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        self.eval_radius(math::sqrt(x[0] * x[0] + x[1] * x[1]))
    }

    /// Potential of `e^{-V/factor}`, e.g. `factor = r + 1` for the shape of the equilibrium.
    pub fn divided_by(&self, factor: f64) -> Potential {
        match *self {
            Potential::Quadratic { sigma } => Potential::Quadratic { sigma: sigma * math::sqrt(factor) },
            Potential::Power { alpha, scale } => Potential::Power {
                alpha,
                scale: scale * math::pow(factor, 1.0 / alpha),
            },
            other => other,
        }
    }

    /// `ln ∫_{R^dim} e^{-V} dx` in closed form.
    pub fn log_partition(&self, dim: usize) -> f64 {
        let d = dim as f64;
        match *self {
            Potential::Quadratic { sigma } => 0.5 * d * math::ln(2.0 * PI * sigma * sigma),
            Potential::Power { alpha, scale } => {
                // ∫_0^∞ ρ^{d-1} e^{-(ρ/s)^α/α} dρ = s^d α^{d/α-1} Γ(d/α), times the unit-sphere area
                let sphere = if dim == 1 { 2.0 } else { 2.0 * PI };
                math::ln(sphere)
                    + d * math::ln(scale)
                    + (d / alpha - 1.0) * math::ln(alpha)
                    + math::ln(math::gamma(d / alpha))
            }
            Potential::Uniform | Potential::Tabulated => 0.0,
        }
    }

    /// Per-axis standard deviation of the continuum density ∝ e^{-V} on R^dim.
    pub fn axis_std(&self, dim: usize) -> f64 {
        let d = dim as f64;
        match *self {
            Potential::Quadratic { sigma } => sigma,
            Potential::Power { alpha, scale } => {
                let second = scale * scale * math::pow(alpha, 2.0 / alpha) * math::gamma((d + 2.0) / alpha)
                    / math::gamma(d / alpha);
                math::sqrt(second / d)
            }
            Potential::Uniform | Potential::Tabulated => 1.0 / math::sqrt(12.0),
        }
    }

    /// Radius at which `V` has risen by `level` above its minimum.
    pub fn level_radius(&self, level: f64) -> f64 {
        match *self {
            Potential::Quadratic { sigma } => sigma * math::sqrt(2.0 * level),
            Potential::Power { alpha, scale } => scale * math::pow(alpha * level, 1.0 / alpha),
            Potential::Uniform | Potential::Tabulated => f64::INFINITY,
        }
    }
}

/// Default truncation half-width for a weight at exponent `r`: the larger of
/// six equilibrium standard deviations and the radius where m drops to 1e-8
/// of its peak.
pub fn default_half_width(potential: &Potential, r: f64, dim: usize) -> f64 {
    let eq = potential.divided_by(r + 1.0);
    let six_sigma = 6.0 * eq.axis_std(dim);
    let level = eq.level_radius(math::ln(1e8));
    if six_sigma > level {
        six_sigma
    } else {
        level
    }
}

/// A strictly positive probability density ρ on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    grid: Grid,
    rho: Vec<f64>,
    potential: Potential,
}

impl Weight {
    pub fn new(grid: &Grid, potential: Potential) -> Result<Self> {
        potential.validate_for(grid.kind())?;
        let v: Vec<f64> = (0..grid.n_cells()).map(|i| potential.eval(grid.center(i))).collect();
        let v_min = v.iter().copied().fold(f64::INFINITY, f64::min);
        let raw: Vec<f64> = v.iter().map(|&vi| math::exp(v_min - vi)).collect();
        Self::normalized(grid, raw, potential)
    }

    /// Weight from explicit positive values; they are renormalized on the grid.
    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        grid.check_len(&values)?;
        Self::normalized(grid, values, Potential::Tabulated)
    }

    fn normalized(grid: &Grid, mut rho: Vec<f64>, potential: Potential) -> Result<Self> {
        if let Some((cell, &value)) = rho.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::Positivity { cell, value });
        }
        let mass = grid.integrate(&rho)?;
        rho.iter_mut().for_each(|x| *x /= mass);
        Ok(Self { grid: grid.clone(), rho, potential })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }
}

/// The equilibrium `m = γ ρ^{1/(r+1)}` with `γ = 1 / ∫ρ^{1/(r+1)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    grid: Grid,
    r: f64,
    gamma: f64,
    m: Vec<f64>,
}

impl Equilibrium {
    pub fn new(weight: &Weight, r: f64) -> Result<Self> {
        check_exponent(r)?;
        let p = 1.0 / (r + 1.0);
        let root: Vec<f64> = weight.rho.iter().map(|&x| math::pow(x, p)).collect();
        let gamma = 1.0 / weight.grid.integrate(&root)?;
        let m = root.into_iter().map(|x| gamma * x).collect();
        Ok(Self { grid: weight.grid.clone(), r, gamma, m })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn m(&self) -> &[f64] {
        &self.m
    }

    /// `γ^{-(r+1)}`, which equals both `ρ/m^{r+1}` and `F_ρ[m]`.
    pub fn free_energy_level(&self) -> f64 {
        math::pow(self.gamma, -(self.r + 1.0))
    }

    /// Ratio `u = f / m` cell by cell.
    pub fn ratio(&self, f: &[f64]) -> Vec<f64> {
        f.iter().zip(&self.m).map(|(f, m)| f / m).collect()
    }
}

pub fn check_exponent(r: f64) -> Result<()> {
    if !(r > 1.0) || !r.is_finite() {
        return Err(Error::Parameter(format!("r must exceed 1, got {r}")));
    }
    Ok(())
}

/// A positive, unit-mass density with its measured sandwich constants
/// `lower = min f/m`, `upper = max f/m`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    grid: Grid,
    f: Vec<f64>,
    lower: f64,
    upper: f64,
}

impl DensityField {
    /// Wraps explicit values after checking positivity and renormalizing to unit mass.
    pub fn new(eq: &Equilibrium, mut f: Vec<f64>) -> Result<Self> {
        eq.grid.check_len(&f)?;
        if let Some((cell, &value)) = f.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::Positivity { cell, value });
        }
        let mass = eq.grid.integrate(&f)?;
        f.iter_mut().for_each(|x| *x /= mass);
        Ok(Self::measured(eq, f))
    }

    /// Wraps values that are already positive with unit mass (no renormalization).
    pub fn from_normalized(eq: &Equilibrium, f: Vec<f64>) -> Result<Self> {
        eq.grid.check_len(&f)?;
        if let Some((cell, &value)) = f.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::Positivity { cell, value });
        }
        Ok(Self::measured(eq, f))
    }

    /// `f = u·m / ∫u·m`.
    pub fn from_ratio(eq: &Equilibrium, u: &[f64]) -> Result<Self> {
        eq.grid.check_len(u)?;
        let f = u.iter().zip(&eq.m).map(|(u, m)| u * m).collect();
        Self::new(eq, f)
    }

    fn measured(eq: &Equilibrium, f: Vec<f64>) -> Self {
        let (lower, upper) = sandwich(&f, &eq.m);
        Self { grid: eq.grid.clone(), f, lower, upper }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.f
    }

    pub fn into_values(self) -> Vec<f64> {
        self.f
    }

    /// Lower sandwich constant `c`.
    pub fn lower(&self) -> f64 {
        self.lower
    }

    /// Upper sandwich constant `C`.
    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn mass(&self) -> f64 {
        self.f.iter().sum::<f64>() * self.grid.cell_volume()
    }
}

/// `(min f/m, max f/m)`.
pub fn sandwich(f: &[f64], m: &[f64]) -> (f64, f64) {
    f.iter().zip(m).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (f, m)| {
        let u = f / m;
        (lo.min(u), hi.max(u))
    })
}

/// Recipes for initial data. Every recipe renormalizes and re-measures (c, C).
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    /// `f = m`.
    Equilibrium,
    /// `u = 1 + ε ψ`, ψ the m-mean-zero part of a cosine mode scaled to max |ψ| = 1.
    Cosine { epsilon: f64, mode: usize },
    /// `u = left` on the first half of axis 0 and `right` on the second half.
    Step { left: f64, right: f64 },
    /// `u ∝ m(x - shift·e₀)/m(x)` clipped to `[c_min, c_max]`.
    Tilt { shift: f64, c_min: f64, c_max: f64 },
    /// `u = 1 + Σ_k cos_k·φ_k + sin_k·χ_k` with modes `k = 1, 2, ...`; on 1-D grids
    /// `φ_k = cos(kθ)`, `χ_k = sin(kθ)`, on the box `φ_k = cos(kθ_x)`, `χ_k = cos(kθ_y)`.
    CosineSeries { cos: Vec<f64>, sin: Vec<f64> },
}

/// Angle coordinate along one axis: `2πx` on the periodic interval, `π(x+L)/(2L)`
/// on truncated axes so that `cos(kθ)` are the zero-flux modes.
fn angle(grid: &Grid, x: f64) -> f64 {
    match grid.kind() {
        GridKind::Periodic1D => 2.0 * PI * x,
        _ => PI * (x - grid.lower_bound()) / grid.axis_length(),
    }
}

impl InitialData {
    pub fn build(&self, weight: &Weight, eq: &Equilibrium) -> Result<DensityField> {
        let grid = eq.grid();
        let n = grid.n_cells();
        match self {
            InitialData::Equilibrium => Ok(DensityField::measured(eq, eq.m.clone())),
            &InitialData::Cosine { epsilon, mode } => {
                if !(epsilon.abs() < 1.0) {
                    return Err(Error::Config(format!(
                        "cosine amplitude must satisfy |epsilon| < 1, got {epsilon}"
                    )));
                }
                if mode == 0 {
                    return Err(Error::Config("cosine mode must be at least 1".into()));
                }
                let k = mode as f64;
                let w: Vec<f64> = (0..n)
                    .map(|i| {
                        let c = grid.center(i);
                        (0..grid.dim()).map(|d| math::cos(k * angle(grid, c[d]))).product()
                    })
                    .collect();
                let mean = grid.integrate_product(&w, &eq.m)?;
                let centred: Vec<f64> = w.iter().map(|x| x - mean).collect();
                let scale = centred.iter().fold(0.0f64, |a, x| a.max(x.abs()));
                let u: Vec<f64> = if scale > 0.0 {
                    centred.iter().map(|x| 1.0 + epsilon * x / scale).collect()
                } else {
                    alloc::vec![1.0; n]
                };
                DensityField::from_ratio(eq, &u)
            }
            &InitialData::Step { left, right } => {
                if !(left > 0.0 && right > 0.0) {
                    return Err(Error::Config(format!(
                        "step levels must be positive, got ({left}, {right})"
                    )));
                }
                let mid = grid.lower_bound() + 0.5 * grid.axis_length();
                let u: Vec<f64> =
                    (0..n).map(|i| if grid.center(i)[0] < mid { left } else { right }).collect();
                DensityField::from_ratio(eq, &u)
            }
            &InitialData::Tilt { shift, c_min, c_max } => {
                if !(c_min > 0.0 && c_min <= 1.0 && c_max >= 1.0) {
                    return Err(Error::Config(format!(
                        "tilt clip range must satisfy 0 < c_min <= 1 <= c_max, got [{c_min}, {c_max}]"
                    )));
                }
                let pot = weight.potential();
                if matches!(pot, Potential::Tabulated) {
                    return Err(Error::Config("tilt needs an analytic potential".into()));
                }
                let r1 = eq.r + 1.0;
                let u: Vec<f64> = (0..n)
                    .map(|i| {
                        let x = grid.center(i);
                        let shifted = [x[0] - shift, x[1]];
                        math::exp(-(pot.eval(shifted) - pot.eval(x)) / r1).clamp(c_min, c_max)
                    })
                    .collect();
                DensityField::from_ratio(eq, &u)
            }
            InitialData::CosineSeries { cos, sin } => {
                let u: Vec<f64> = (0..n)
                    .map(|i| {
                        let c = grid.center(i);
                        let tx = angle(grid, c[0]);
                        let ty = angle(grid, c[1]);
                        let mut u = 1.0;
                        for (k, a) in cos.iter().enumerate() {
                            u += a * math::cos((k + 1) as f64 * tx);
                        }
                        for (k, b) in sin.iter().enumerate() {
                            let kk = (k + 1) as f64;
                            u += b * if grid.dim() == 2 { math::cos(kk * ty) } else { math::sin(kk * tx) };
                        }
                        u
                    })
                    .collect();
                if let Some((cell, &value)) = u.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
                    return Err(Error::Config(format!(
                        "cosine series is not positive at cell {cell} (ratio {value})"
                    )));
                }
                DensityField::from_ratio(eq, &u)
            }
        }
    }
}
