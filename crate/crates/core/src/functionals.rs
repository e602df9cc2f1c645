//! Free energy `F_ρ[f] = ∫ρ/f^r`, its gap to equilibrium, the dissipation,
//! the χ² distance to m, and the explicit constants of the sandwich bound
//! and the entropy–dissipation estimate.
//!
//! Face quantities use arithmetic means of the two adjacent cells. Two
//! dissipations are provided:
//!
//! * [`dissipation`] is `r² ∫ f |∇(ρ/f^{r+1})|²` in flux form, exactly the
//!   rate `-dF/dt` of the finite-volume scheme in [`crate::solver`];
//! * [`reduced_dissipation`] is `r² ∫ u |∇(u^{-(r+1)})|² m` with `u = f/m`.
//!
//! Since `ρ/f^{r+1} = γ^{-(r+1)} u^{-(r+1)}`, the two agree up to the factor
//! `γ^{-2(r+1)}` (and an O(h²) face-mean difference on non-uniform m). The
//! entropy–dissipation constant `K` is stated for the reduced form.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::weights::{check_exponent, DensityField, Equilibrium, Weight};

/// Relative tolerance below which a negative slack is treated as rounding.
pub const SLACK_TOL: f64 = 1e-10;

fn check_positive(f: &[f64]) -> Result<()> {
    match f.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
        Some(cell) => Err(Error::Positivity { cell, value: f[cell] }),
        None => Ok(()),
    }
}

fn check_shapes(f: &[f64], eq: &Equilibrium) -> Result<()> {
    eq.grid().check_len(f)?;
    check_positive(f)
}

/// `F_ρ[f] = ∫ ρ / f^r`.
pub fn free_energy(f: &[f64], eq: &Equilibrium, weight: &Weight) -> Result<f64> {
    check_shapes(f, eq)?;
    let r = eq.r();
    let sum: f64 = f.iter().zip(weight.rho()).map(|(f, rho)| rho * math::pow(*f, -r)).sum();
    Ok(sum * eq.grid().cell_volume())
}

/// `F_ρ[f] − F_ρ[m]`.
///
/// Evaluated as `γ^{-(r+1)} ∫ (u^{-r} − 1 + r(u − 1)) m`, which equals
/// `F_ρ[f] − γ^{-(r+1)}` for unit-mass f and has a non-negative integrand.
pub fn energy_gap(f: &[f64], eq: &Equilibrium) -> Result<f64> {
    check_shapes(f, eq)?;
    let r = eq.r();
    let sum: f64 = f
        .iter()
        .zip(eq.m())
        .map(|(f, m)| {
            let u = f / m;
            (math::inv_pow_minus_one(u, r) + r * (u - 1.0)).max(0.0) * m
        })
        .sum();
    Ok(eq.free_energy_level() * sum * eq.grid().cell_volume())
}

pub(crate) fn pressure_values(f: &[f64], rho: &[f64], r: f64) -> Vec<f64> {
    f.iter().zip(rho).map(|(f, rho)| rho * math::pow(*f, -(r + 1.0))).collect()
}

/// `I_ρ[f] = r² ∫ f |∇φ|²`, `φ = ρ/f^{r+1}`: the exact `-dF/dt` of the scheme.
pub fn dissipation(f: &[f64], eq: &Equilibrium, weight: &Weight) -> Result<f64> {
    check_shapes(f, eq)?;
    let phi = pressure_values(f, weight.rho(), eq.r());
    Ok(dissipation_from_pressure(f, &phi, eq))
}

pub(crate) fn dissipation_from_pressure(f: &[f64], phi: &[f64], eq: &Equilibrium) -> f64 {
    let grid = eq.grid();
    let h = grid.h();
    let r = eq.r();
    let sum: f64 = grid
        .faces()
        .map(|face| {
            let f_face = 0.5 * (f[face.lower] + f[face.upper]);
            let g = (phi[face.upper] - phi[face.lower]) / h;
            f_face * g * g
        })
        .sum();
    r * r * sum * grid.face_volume()
}

/// `r² ∫ u |∇(u^{-(r+1)})|² m` with face means `u_face`, `m_face`.
pub fn reduced_dissipation(f: &[f64], eq: &Equilibrium) -> Result<f64> {
    check_shapes(f, eq)?;
    let grid = eq.grid();
    let (r, h, m) = (eq.r(), grid.h(), eq.m());
    let u = eq.ratio(f);
    let sum: f64 = grid
        .faces()
        .map(|face| {
            let (a, b) = (u[face.lower], u[face.upper]);
            let d = math::inv_pow_diff(a, b, r + 1.0) / h;
            0.25 * (a + b) * (m[face.lower] + m[face.upper]) * d * d
        })
        .sum();
    Ok(r * r * sum * grid.face_volume())
}

/// Weighted Dirichlet energy `∫ |∇u|² m` of `u = f/m` with face-mean m.
pub fn ratio_gradient_energy(f: &[f64], eq: &Equilibrium) -> Result<f64> {
    check_shapes(f, eq)?;
    let grid = eq.grid();
    let (h, m) = (grid.h(), eq.m());
    let u = eq.ratio(f);
    let sum: f64 = grid
        .faces()
        .map(|face| {
            let d = (u[face.upper] - u[face.lower]) / h;
            0.5 * (m[face.lower] + m[face.upper]) * d * d
        })
        .sum();
    Ok(sum * grid.face_volume())
}

/// `∫ |f/m − 1|² m`.
pub fn chi2_distance(f: &[f64], eq: &Equilibrium) -> Result<f64> {
    eq.grid().check_len(f)?;
    let sum: f64 = f
        .iter()
        .zip(eq.m())
        .map(|(f, m)| {
            let d = f / m - 1.0;
            d * d * m
        })
        .sum();
    Ok(sum * eq.grid().cell_volume())
}

fn check_sandwich(c: f64, upper: f64) -> Result<()> {
    // measured constants of a unit-mass field can miss 1 by rounding
    if !(c > 0.0 && c <= 1.0 + 1e-12 && upper >= 1.0 - 1e-12) || !upper.is_finite() {
        return Err(Error::Parameter(alloc::format!(
            "sandwich constants must satisfy 0 < c <= 1 <= C, got c = {c}, C = {upper}"
        )));
    }
    Ok(())
}

/// `(k₁, k₂) = r(r+1)/(2γ^{r+1}) · (C^{-(r+2)}, c^{-(r+2)})`.
pub fn lemma_constants(r: f64, gamma: f64, c: f64, upper: f64) -> Result<(f64, f64)> {
    check_exponent(r)?;
    if !(gamma > 0.0) {
        return Err(Error::Parameter(alloc::format!("gamma must be positive, got {gamma}")));
    }
    check_sandwich(c, upper)?;
    let base = r * (r + 1.0) / (2.0 * math::pow(gamma, r + 1.0));
    Ok((base * math::pow(upper, -(r + 2.0)), base * math::pow(c, -(r + 2.0))))
}

/// `K = C_P C^{2r+3} / (2r(r+1) γ^{r+1} c^{r+2})`.
pub fn decay_constant(r: f64, gamma: f64, c: f64, upper: f64, poincare: f64) -> Result<f64> {
    let _ = lemma_constants(r, gamma, c, upper)?;
    if !(poincare > 0.0) || !poincare.is_finite() {
        return Err(Error::Parameter(alloc::format!(
            "Poincaré constant must be positive, got {poincare}"
        )));
    }
    Ok(poincare * math::pow(upper, 2.0 * r + 3.0)
        / (2.0 * r * (r + 1.0) * math::pow(gamma, r + 1.0) * math::pow(c, r + 2.0)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalReport {
    pub free_energy: f64,
    pub gap: f64,
    pub dissipation: f64,
    pub reduced_dissipation: f64,
    pub chi2: f64,
    pub c: f64,
    pub upper: f64,
    pub k1: f64,
    pub k2: f64,
    pub decay_constant: Option<f64>,
}

pub fn report(
    field: &DensityField,
    eq: &Equilibrium,
    weight: &Weight,
    poincare: Option<f64>,
) -> Result<FunctionalReport> {
    let f = field.values();
    let (c, upper) = (field.lower(), field.upper());
    let (k1, k2) = lemma_constants(eq.r(), eq.gamma(), c, upper)?;
    let decay_constant = poincare
        .map(|cp| decay_constant(eq.r(), eq.gamma(), c, upper, cp))
        .transpose()?;
    Ok(FunctionalReport {
        free_energy: free_energy(f, eq, weight)?,
        gap: energy_gap(f, eq)?,
        dissipation: dissipation(f, eq, weight)?,
        reduced_dissipation: reduced_dissipation(f, eq)?,
        chi2: chi2_distance(f, eq)?,
        c,
        upper,
        k1,
        k2,
        decay_constant,
    })
}

/// Outcome of the three inequality checks on one field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    /// Measured `min f/m`.
    pub c: f64,
    /// Measured `max f/m`.
    pub upper: f64,
    pub gap: f64,
    pub chi2: f64,
    pub reduced_dissipation: f64,
    pub gradient_energy: f64,
    pub k1: f64,
    pub k2: f64,
    pub decay_constant: Option<f64>,
    /// `gap − k₁·χ²`.
    pub sandwich_lower_slack: f64,
    /// `k₂·χ² − gap`.
    pub sandwich_upper_slack: f64,
    /// `K·I_reduced − gap`, when a Poincaré constant was supplied.
    pub control_slack: Option<f64>,
    /// `C^{2r+3}/(r(r+1))²·I_reduced − ∫|∇u|²m`.
    pub gradient_slack: f64,
    pub faces_checked: usize,
    pub faces_failed: usize,
    /// Smallest per-face slack relative to the larger side of that face's inequality.
    pub worst_face_slack: f64,
}

impl BoundReport {
    pub fn sandwich_holds(&self) -> bool {
        let tol = -SLACK_TOL * self.gap.max(1.0);
        self.sandwich_lower_slack >= tol && self.sandwich_upper_slack >= tol
    }

    pub fn control_holds(&self) -> Option<bool> {
        self.control_slack.map(|s| s >= -SLACK_TOL * self.gap.max(1.0))
    }

    pub fn gradient_holds(&self) -> bool {
        self.gradient_slack >= -SLACK_TOL * self.gradient_energy.max(1.0) && self.faces_failed == 0
    }

    pub fn all_hold(&self) -> bool {
        self.sandwich_holds() && self.control_holds().unwrap_or(true) && self.gradient_holds()
    }
}

/// Checks the two-sided sandwich, the entropy–dissipation estimate (when
/// `poincare` is given) and the gradient inequality, globally and face by face.
pub fn verify_bounds(field: &DensityField, eq: &Equilibrium, poincare: Option<f64>) -> Result<BoundReport> {
    let f = field.values();
    let r = eq.r();
    let (c, upper) = (field.lower(), field.upper());
    let (k1, k2) = lemma_constants(r, eq.gamma(), c, upper)?;
    let decay = poincare.map(|cp| decay_constant(r, eq.gamma(), c, upper, cp)).transpose()?;
    let gap = energy_gap(f, eq)?;
    let chi2 = chi2_distance(f, eq)?;
    let reduced = reduced_dissipation(f, eq)?;
    let gradient_energy = ratio_gradient_energy(f, eq)?;
    let grad_factor = math::pow(upper, 2.0 * r + 3.0) / (r * r * (r + 1.0) * (r + 1.0));

    let face_factor = math::pow(upper, 2.0 * r + 3.0) / ((r + 1.0) * (r + 1.0));
    let u = eq.ratio(f);
    let (mut checked, mut failed, mut worst) = (0usize, 0usize, f64::INFINITY);
    for face in eq.grid().faces() {
        let (a, b) = (u[face.lower], u[face.upper]);
        let lhs = (b - a) * (b - a);
        let d = math::inv_pow_diff(a, b, r + 1.0);
        let rhs = face_factor * 0.5 * (a + b) * d * d;
        let scale = lhs.max(rhs);
        let rel = if scale > 0.0 { (rhs - lhs) / scale } else { 0.0 };
        checked += 1;
        if rel < -SLACK_TOL {
            failed += 1;
        }
        worst = worst.min(rel);
    }

    Ok(BoundReport {
        c,
        upper,
        gap,
        chi2,
        reduced_dissipation: reduced,
        gradient_energy,
        k1,
        k2,
        decay_constant: decay,
        sandwich_lower_slack: gap - k1 * chi2,
        sandwich_upper_slack: k2 * chi2 - gap,
        control_slack: decay.map(|k| k * reduced - gap),
        gradient_slack: grad_factor * reduced - gradient_energy,
        faces_checked: checked,
        faces_failed: failed,
        worst_face_slack: if checked == 0 { 0.0 } else { worst },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::weights::{InitialData, Potential};
    use core::f64::consts::PI;

    fn uniform(n: usize) -> (Weight, Equilibrium) {
        let g = Grid::periodic(n).unwrap();
        let w = Weight::new(&g, Potential::Uniform).unwrap();
        let e = Equilibrium::new(&w, 2.0).unwrap();
        (w, e)
    }

    fn step_field(e: &Equilibrium) -> DensityField {
        let n = e.grid().n_cells();
        let u: Vec<f64> = (0..n).map(|i| if i < n / 2 { 1.5 } else { 0.5 }).collect();
        DensityField::from_ratio(e, &u).unwrap()
    }

    #[test]
    fn free_energy_examples() {
        let (w, e) = uniform(4);
        assert!((free_energy(e.m(), &e, &w).unwrap() - 1.0).abs() < 1e-14);
        let f = step_field(&e);
        let exact = 0.5 / 2.25 + 0.5 / 0.25;
        assert!((free_energy(f.values(), &e, &w).unwrap() - exact).abs() < 1e-14);
        assert!((energy_gap(f.values(), &e).unwrap() - (exact - 1.0)).abs() < 1e-14);
        assert_eq!(energy_gap(e.m(), &e).unwrap(), 0.0);
        assert!(matches!(free_energy(&[1.0, 1.0, 0.0, 2.0], &e, &w), Err(Error::Positivity { cell: 2, .. })));
    }

    #[test]
    fn free_energy_at_equilibrium_is_level() {
        let g = Grid::truncated(500, 10.0).unwrap();
        let w = Weight::new(&g, Potential::gaussian(1.0).unwrap()).unwrap();
        for r in [1.5, 2.0, 3.0] {
            let e = Equilibrium::new(&w, r).unwrap();
            let fm = free_energy(e.m(), &e, &w).unwrap();
            assert!((fm / e.free_energy_level() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn chi2_examples() {
        let (_, e) = uniform(4);
        assert_eq!(chi2_distance(e.m(), &e).unwrap(), 0.0);
        let f = step_field(&e);
        assert!((chi2_distance(f.values(), &e).unwrap() - 0.25).abs() < 1e-15);
        // quadratic homogeneity in u − 1
        let g: Vec<f64> = f.values().iter().map(|x| 1.0 + 3.0 * (x - 1.0)).collect();
        assert!((chi2_distance(&g, &e).unwrap() - 9.0 * 0.25).abs() < 1e-14);
    }

    #[test]
    fn constants_examples() {
        assert_eq!(lemma_constants(2.0, 1.0, 1.0, 1.0).unwrap(), (3.0, 3.0));
        assert!((lemma_constants(2.0, 1.0, 1.0, 2.0).unwrap().0 - 0.1875).abs() < 1e-15);
        assert!((lemma_constants(2.0, 1.0, 0.5, 1.0).unwrap().1 - 48.0).abs() < 1e-12);
        assert!((decay_constant(2.0, 1.0, 1.0, 1.0, 1.0).unwrap() - 1.0 / 12.0).abs() < 1e-15);
        let k = decay_constant(2.0, 1.0, 0.5, 2.0, 1.0).unwrap();
        assert!((k - 128.0 / (12.0 * 0.0625)).abs() < 1e-10);
        assert!((k - 170.666_666_666_666_67).abs() < 1e-9);
        assert!(decay_constant(2.0, 1.0, 0.5, 2.1, 1.0).unwrap() > k);
        assert!(decay_constant(2.0, 1.0, 0.6, 2.0, 1.0).unwrap() < k);
        assert!(matches!(lemma_constants(1.0, 1.0, 1.0, 1.0), Err(Error::Parameter(_))));
        assert!(matches!(lemma_constants(2.0, 1.0, 1.2, 1.5), Err(Error::Parameter(_))));
        assert!(matches!(decay_constant(2.0, 1.0, 0.5, 1.5, 0.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn dissipation_small_amplitude_matches_linearization() {
        // oracle: I ≈ r²(r+1)² ε² 2π² for u = 1 + ε cos 2πx on the uniform weight
        let (w, e) = uniform(2000);
        let r = 2.0;
        let lin = r * r * (r + 1.0) * (r + 1.0) * 2.0 * PI * PI;
        let mut prev_err = f64::INFINITY;
        for eps in [1e-2, 5e-3, 2.5e-3] {
            let u: Vec<f64> = e.grid().axis_centers().iter().map(|x| 1.0 + eps * (2.0 * PI * x).cos()).collect();
            let f = DensityField::from_ratio(&e, &u).unwrap();
            let i = dissipation(f.values(), &e, &w).unwrap();
            let rel = (i / (lin * eps * eps) - 1.0).abs();
            assert!(rel < 2.0 * eps, "eps {eps}: rel {rel}");
            assert!(rel < prev_err);
            prev_err = rel;
            // uniform weight: both dissipations coincide
            let red = reduced_dissipation(f.values(), &e).unwrap();
            assert!((red / i - 1.0).abs() < 1e-9);
        }
        assert_eq!(dissipation(e.m(), &e, &w).unwrap(), 0.0);
    }

    #[test]
    fn dissipations_differ_by_gamma_power() {
        let g = Grid::truncated(800, 9.0).unwrap();
        let w = Weight::new(&g, Potential::gaussian(1.0).unwrap()).unwrap();
        let e = Equilibrium::new(&w, 2.0).unwrap();
        let f = InitialData::Cosine { epsilon: 0.3, mode: 1 }.build(&w, &e).unwrap();
        let full = dissipation(f.values(), &e, &w).unwrap();
        let red = reduced_dissipation(f.values(), &e).unwrap();
        let factor = e.gamma().powf(-6.0);
        assert!((full / (factor * red) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn verify_bounds_step_example() {
        let (_, e) = uniform(4);
        let f = step_field(&e);
        let rep = verify_bounds(&f, &e, Some(0.03125)).unwrap();
        assert!((rep.k1 - 3.0 / 1.5f64.powi(4)).abs() < 1e-14);
        assert!((rep.k1 - 0.5926).abs() < 1e-4);
        assert!((rep.k2 - 48.0).abs() < 1e-12);
        assert!((rep.k1 * rep.chi2 - 0.1481).abs() < 1e-4);
        assert!((rep.k2 * rep.chi2 - 12.0).abs() < 1e-12);
        assert!(rep.sandwich_holds() && rep.gradient_holds());
        assert_eq!(rep.control_holds(), Some(true));
        assert_eq!(rep.faces_checked, 4);
    }

    #[test]
    fn verify_bounds_at_equilibrium() {
        let (_, e) = uniform(16);
        let f = DensityField::from_normalized(&e, e.m().to_vec()).unwrap();
        let rep = verify_bounds(&f, &e, Some(0.03)).unwrap();
        assert_eq!(rep.gap, 0.0);
        assert_eq!(rep.sandwich_lower_slack, 0.0);
        assert_eq!(rep.control_slack, Some(0.0));
        assert!(rep.all_hold());
    }

    #[test]
    fn gap_is_positive_off_equilibrium() {
        let (_, e) = uniform(64);
        let u: Vec<f64> = e.grid().axis_centers().iter().map(|x| 1.0 + 1e-3 * (2.0 * PI * x).sin()).collect();
        let f = DensityField::from_ratio(&e, &u).unwrap();
        assert!(energy_gap(f.values(), &e).unwrap() > 0.0);
    }
}
