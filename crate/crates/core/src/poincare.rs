//! Discrete Poincaré constant of the equilibrium measure.
//!
//! The weighted Dirichlet form `∫|∇g|² m` is discretized face by face with
//! the arithmetic face mean of m, and the weighted mass `∫g² m` is the
//! diagonal `m_i·vol`. The Poincaré constant is `1/λ₁`, where λ₁ is the
//! smallest nonzero generalized eigenvalue of `S g = λ M g`. It is found by
//! inverse iteration restricted to the M-mean-zero subspace; the singular
//! stiffness is inverted on that subspace by pinning one node and factoring
//! the remaining band matrix once.

use alloc::vec;
use alloc::vec::Vec;

use crate::banded::{BandMatrix, CholeskyBand};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridKind};
use crate::math;
use crate::weights::Equilibrium;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 500;

/// Stiffness as a face list (`S = Σ w (e_i − e_j)(e_i − e_j)ᵀ`) plus the diagonal mass.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedOperators {
    grid: Grid,
    faces: Vec<(usize, usize, f64)>,
    mass: Vec<f64>,
}

impl WeightedOperators {
    pub fn assemble(eq: &Equilibrium) -> Self {
        let grid = eq.grid().clone();
        let m = eq.m();
        let h = grid.h();
        let scale = grid.face_volume() / (h * h);
        let faces = grid
            .faces()
            .map(|f| (f.lower, f.upper, 0.5 * (m[f.lower] + m[f.upper]) * scale))
            .collect();
        let vol = grid.cell_volume();
        let mass = m.iter().map(|mi| mi * vol).collect();
        Self { grid, faces, mass }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Diagonal of the mass matrix.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// `(lower, upper, weight)` for every face.
    pub fn face_weights(&self) -> &[(usize, usize, f64)] {
        &self.faces
    }

    pub fn apply_stiffness(&self, g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; g.len()];
        for &(i, j, w) in &self.faces {
            let d = w * (g[i] - g[j]);
            out[i] += d;
            out[j] -= d;
        }
        out
    }

    /// Dense stiffness, for inspection and tests on small grids.
    pub fn dense_stiffness(&self) -> Vec<Vec<f64>> {
        let n = self.mass.len();
        let mut s = vec![vec![0.0; n]; n];
        for &(i, j, w) in &self.faces {
            s[i][i] += w;
            s[j][j] += w;
            s[i][j] -= w;
            s[j][i] -= w;
        }
        s
    }

    /// `∫|∇g|² m`.
    pub fn dirichlet_form(&self, g: &[f64]) -> f64 {
        self.faces.iter().map(|&(i, j, w)| w * (g[i] - g[j]) * (g[i] - g[j])).sum()
    }

    /// `∫ g m`.
    pub fn mean(&self, g: &[f64]) -> f64 {
        g.iter().zip(&self.mass).map(|(g, w)| g * w).sum::<f64>() / self.mass.iter().sum::<f64>()
    }

    /// `∫ g² m − (∫ g m)²`.
    pub fn variance(&self, g: &[f64]) -> f64 {
        let mean = self.mean(g);
        g.iter().zip(&self.mass).map(|(g, w)| (g - mean) * (g - mean) * w).sum()
    }

    fn project(&self, g: &mut [f64]) {
        let mean = self.mean(g);
        g.iter_mut().for_each(|x| *x -= mean);
    }

    fn mass_norm(&self, g: &[f64]) -> f64 {
        math::sqrt(g.iter().zip(&self.mass).map(|(g, w)| g * g * w).sum())
    }

    fn pin_node(&self) -> usize {
        match self.grid.kind() {
            GridKind::Periodic1D => 0,
            _ => {
                let mut best = 0;
                for (i, &w) in self.mass.iter().enumerate() {
                    if w > self.mass[best] {
                        best = i;
                    }
                }
                best
            }
        }
    }

    /// Factorization of the stiffness with row/column `pin` removed.
    fn pinned_factor(&self, pin: usize) -> Result<CholeskyBand> {
        let n = self.mass.len();
        let map = |i: usize| if i > pin { i - 1 } else { i };
        let bw = self
            .faces
            .iter()
            .filter(|&&(i, j, _)| i != pin && j != pin)
            .map(|&(i, j, _)| map(i).abs_diff(map(j)))
            .max()
            .unwrap_or(0);
        let mut a = BandMatrix::zeros(n - 1, bw);
        for &(i, j, w) in &self.faces {
            if i != pin {
                a.add(map(i), map(i), w);
            }
            if j != pin {
                a.add(map(j), map(j), w);
            }
            if i != pin && j != pin {
                a.add(map(i), map(j), -w);
            }
        }
        a.factor().map_err(|row| Error::Numerical {
            what: alloc::format!("stiffness factorization broke down at row {row}"),
            residual: f64::NAN,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGapResult {
    pub lambda1: f64,
    pub poincare: f64,
    pub iterations: usize,
    pub residual: f64,
    /// Eigenvector for λ₁, M-mean-zero with `∫ g² m = 1`.
    pub eigenvector: Vec<f64>,
}

/// Stiffness and mass of the equilibrium measure.
pub fn assemble_operators(eq: &Equilibrium) -> WeightedOperators {
    WeightedOperators::assemble(eq)
}

/// Smallest nonzero eigenvalue λ₁ and `C_P = 1/λ₁`, with eigen-residual
/// `‖S g − λ M g‖_{M⁻¹} / λ ≤ tol` for M-normalized g.
pub fn spectral_gap(eq: &Equilibrium, tol: f64) -> Result<SpectralGapResult> {
    spectral_gap_of(&WeightedOperators::assemble(eq), tol)
}

pub fn spectral_gap_of(ops: &WeightedOperators, tol: f64) -> Result<SpectralGapResult> {
    if !(tol > 0.0) {
        return Err(Error::Parameter(alloc::format!("tolerance must be positive, got {tol}")));
    }
    let n = ops.mass.len();
    let pin = ops.pin_node();
    let chol = ops.pinned_factor(pin)?;

    let mut g = start_vector(&ops.grid);
    ops.project(&mut g);
    let norm = ops.mass_norm(&g);
    g.iter_mut().for_each(|x| *x /= norm);

    let mut rhs = vec![0.0; n - 1];
    let mut residual = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        for (k, i) in (0..n).filter(|&i| i != pin).enumerate() {
            rhs[k] = ops.mass[i] * g[i];
        }
        chol.solve(&mut rhs);
        let mut x = vec![0.0; n];
        for (k, i) in (0..n).filter(|&i| i != pin).enumerate() {
            x[i] = rhs[k];
        }
        ops.project(&mut x);
        let norm = ops.mass_norm(&x);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Numerical { what: "inverse iteration collapsed".into(), residual });
        }
        x.iter_mut().for_each(|v| *v /= norm);

        let sx = ops.apply_stiffness(&x);
        let lambda: f64 = sx.iter().zip(&x).map(|(a, b)| a * b).sum();
        let res2: f64 = sx
            .iter()
            .zip(&x)
            .zip(&ops.mass)
            .map(|((s, x), w)| {
                let r = s - lambda * w * x;
                r * r / w
            })
            .sum();
        residual = math::sqrt(res2) / lambda;
        g = x;
        if !residual.is_finite() || !(lambda > 0.0) {
            return Err(Error::Numerical { what: "non-finite eigenvalue estimate".into(), residual });
        }
        if residual <= tol {
            return Ok(SpectralGapResult {
                lambda1: lambda,
                poincare: 1.0 / lambda,
                iterations: it,
                residual,
                eigenvector: g,
            });
        }
    }
    Err(Error::Numerical {
        what: alloc::format!("inverse iteration did not converge in {MAX_ITERATIONS} iterations"),
        residual,
    })
}

/// Deterministic start: coordinates plus a hashed perturbation so every
/// eigendirection is represented.
fn start_vector(grid: &Grid) -> Vec<f64> {
    let mut state = 0x9E37_79B9_7F4A_7C15u64;
    (0..grid.n_cells())
        .map(|i| {
            state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^= z >> 31;
            let noise = (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            let [x, y] = grid.center(i);
            x + 0.7 * y + 0.1 * noise
        })
        .collect()
}

/// `C_P ∫|∇g|² m − (∫g² m − (∫g m)²)`; non-negative when `C_P` is valid.
pub fn poincare_check(g: &[f64], eq: &Equilibrium, poincare: f64) -> Result<f64> {
    eq.grid().check_len(g)?;
    let ops = WeightedOperators::assemble(eq);
    Ok(poincare_slack(&ops, g, poincare))
}

pub fn poincare_slack(ops: &WeightedOperators, g: &[f64], poincare: f64) -> f64 {
    poincare * ops.dirichlet_form(g) - ops.variance(g)
}

/// Richardson extrapolation of a second-order sequence on grids refined by 2.
pub fn richardson(coarse: f64, fine: f64) -> f64 {
    fine + (fine - coarse) / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{Potential, Weight};
    use core::f64::consts::PI;

    fn uniform_eq(n: usize) -> Equilibrium {
        let g = Grid::periodic(n).unwrap();
        Equilibrium::new(&Weight::new(&g, Potential::Uniform).unwrap(), 2.0).unwrap()
    }

    fn gaussian_eq(n: usize, l: f64, sigma: f64) -> Equilibrium {
        let g = Grid::truncated(n, l).unwrap();
        Equilibrium::new(&Weight::new(&g, Potential::gaussian(sigma).unwrap()).unwrap(), 2.0).unwrap()
    }

    #[test]
    fn stiffness_kills_constants_and_is_circulant_on_uniform() {
        let eq = uniform_eq(6);
        let ops = assemble_operators(&eq);
        assert!(ops.apply_stiffness(&[2.5; 6]).iter().all(|&v| v == 0.0));
        let s = ops.dense_stiffness();
        let inv_h = 6.0;
        for i in 0..6 {
            assert!((s[i][i] - 2.0 * inv_h).abs() < 1e-12);
            assert!((s[i][(i + 1) % 6] + inv_h).abs() < 1e-12);
            assert!((s[i][(i + 5) % 6] + inv_h).abs() < 1e-12);
            assert!((s[i][(i + 3) % 6]).abs() == 0.0);
        }
        let eq = gaussian_eq(20, 3.0, 1.0);
        let s = assemble_operators(&eq).dense_stiffness();
        for (i, row) in s.iter().enumerate() {
            assert!(row.iter().sum::<f64>().abs() < 1e-13);
            for (j, v) in row.iter().enumerate() {
                assert_eq!(*v, s[j][i]);
            }
        }
    }

    #[test]
    fn periodic_closed_form() {
        let r = spectral_gap(&uniform_eq(4), DEFAULT_TOL).unwrap();
        assert!((r.lambda1 - 32.0).abs() < 1e-9);
        assert!((r.poincare - 0.03125).abs() < 1e-12);
        for n in [16usize, 64, 200] {
            let r = spectral_gap(&uniform_eq(n), DEFAULT_TOL).unwrap();
            let h = 1.0 / n as f64;
            let exact = 4.0 / (h * h) * (PI * h).sin().powi(2);
            assert!((r.lambda1 / exact - 1.0).abs() < 1e-10, "{n}");
            assert!(r.residual <= DEFAULT_TOL);
        }
    }

    #[test]
    fn eigenvector_is_mass_orthogonal_to_constants_and_saturates_inequality() {
        let eq = gaussian_eq(300, 9.0, 1.0);
        let ops = assemble_operators(&eq);
        let r = spectral_gap_of(&ops, 1e-10).unwrap();
        let g = &r.eigenvector;
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mean: f64 = g.iter().zip(ops.mass()).map(|(a, b)| a * b).sum();
        assert!(mean.abs() <= 1e-10 * norm);
        let slack = poincare_slack(&ops, g, r.poincare);
        assert!(slack.abs() < 1e-9, "{slack}");
        assert!(poincare_check(&[3.0; 300], &eq, r.poincare).unwrap().abs() < 1e-25);
    }

    #[test]
    fn rescaling_space_rescales_constant_quadratically() {
        let a = spectral_gap(&gaussian_eq(200, 8.0, 1.0), 1e-11).unwrap();
        let b = spectral_gap(&gaussian_eq(200, 20.0, 2.5), 1e-11).unwrap();
        assert!((b.poincare / a.poincare - 6.25).abs() < 1e-8);
    }

    #[test]
    fn gaussian_constant_approaches_variance() {
        // ρ = N(0,1), r = 2 → m = N(0,3), continuum C_P = 3
        let r = spectral_gap(&gaussian_eq(600, 9.0, 1.0), DEFAULT_TOL).unwrap();
        assert!((r.poincare - 3.0).abs() < 0.01 * 3.0, "{}", r.poincare);
    }

    #[test]
    fn tensor_gaussian_constant() {
        let g = Grid::tensor(40, 9.0).unwrap();
        let eq = Equilibrium::new(&Weight::new(&g, Potential::gaussian(1.0).unwrap()).unwrap(), 2.0).unwrap();
        let r = spectral_gap(&eq, DEFAULT_TOL).unwrap();
        assert!((r.poincare - 3.0).abs() < 0.05 * 3.0, "{}", r.poincare);
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(matches!(spectral_gap(&uniform_eq(8), 0.0), Err(Error::Parameter(_))));
    }
}
