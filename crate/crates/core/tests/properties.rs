//! Property tests: the functional inequalities, the Poincaré inequality and
//! the structural invariants of the scheme on randomized problems.

use proptest::prelude::*;
use ultrafast_core::functionals::{free_energy, verify_bounds};
use ultrafast_core::poincare::{assemble_operators, poincare_slack, spectral_gap, DEFAULT_TOL};
use ultrafast_core::solver::{run_paired, stable_dt, step};
use ultrafast_core::{DensityField, Equilibrium, Grid, InitialData, Potential, SolverConfig, Weight};

#[derive(Debug, Clone)]
enum Family {
    Uniform(usize),
    Gaussian(usize, f64),
    Power(usize, f64),
}

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![
        (8usize..64).prop_map(Family::Uniform),
        (16usize..80, 0.5f64..2.0).prop_map(|(n, s)| Family::Gaussian(n, s)),
        (16usize..80, 1.05f64..=2.0).prop_map(|(n, a)| Family::Power(n, a)),
    ]
}

fn problem(fam: &Family, r: f64) -> (Weight, Equilibrium) {
    let (grid, pot) = match *fam {
        Family::Uniform(n) => (Grid::periodic(n).unwrap(), Potential::Uniform),
        Family::Gaussian(n, s) => (Grid::truncated(n, 5.0 * s).unwrap(), Potential::gaussian(s).unwrap()),
        Family::Power(n, a) => (Grid::truncated(n, 6.0).unwrap(), Potential::power(a).unwrap()),
    };
    let w = Weight::new(&grid, pot).unwrap();
    let e = Equilibrium::new(&w, r).unwrap();
    (w, e)
}

/// Cosine coefficients with total amplitude `scale < 1`, so the ratio stays positive.
fn series() -> impl Strategy<Value = InitialData> {
    (prop::collection::vec(-1.0f64..1.0, 1..5), prop::collection::vec(-1.0f64..1.0, 1..5), 0.05f64..0.9).prop_map(
        |(mut cos, mut sin, scale)| {
            let total: f64 = cos.iter().chain(&sin).map(|x| x.abs()).sum::<f64>().max(1e-3);
            cos.iter_mut().chain(sin.iter_mut()).for_each(|x| *x *= scale / total);
            InitialData::CosineSeries { cos, sin }
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inequalities_hold_on_random_fields(fam in family(), r in 1.05f64..4.0, data in series()) {
        let (w, e) = problem(&fam, r);
        let f = data.build(&w, &e).unwrap();
        let cp = spectral_gap(&e, DEFAULT_TOL).unwrap().poincare;
        let b = verify_bounds(&f, &e, Some(cp)).unwrap();
        prop_assert!(b.sandwich_holds(), "{b:?}");
        prop_assert_eq!(b.control_holds(), Some(true), "{:?}", b);
        prop_assert!(b.gradient_holds(), "{b:?}");
        prop_assert_eq!(b.faces_checked, e.grid().n_faces());
    }

    #[test]
    fn poincare_inequality_on_random_functions(fam in family(), g in prop::collection::vec(-5.0f64..5.0, 80)) {
        let (_, e) = problem(&fam, 2.0);
        let n = e.grid().n_cells();
        let g: Vec<f64> = g.iter().cycle().take(n).copied().collect();
        let ops = assemble_operators(&e);
        let cp = spectral_gap(&e, DEFAULT_TOL).unwrap().poincare;
        let slack = poincare_slack(&ops, &g, cp);
        prop_assert!(slack >= -1e-9 * ops.variance(&g).max(1.0), "slack {slack}");
    }

    #[test]
    fn steps_conserve_mass_and_respect_order(fam in family(), r in 1.1f64..3.5, data in series(), steps in 1usize..120) {
        let (w, e) = problem(&fam, r);
        let mut f = data.build(&w, &e).unwrap();
        let (c0, u0) = (f.lower(), f.upper());
        let mut energy = free_energy(f.values(), &e, &w).unwrap();
        for _ in 0..steps {
            let dt = stable_dt(f.values(), &w, e.grid(), r, 0.45).unwrap();
            f = step(&f, &w, &e, dt, 0.0).unwrap();
            let next = free_energy(f.values(), &e, &w).unwrap();
            prop_assert!(next <= energy * (1.0 + 1e-13), "F rose from {energy} to {next}");
            energy = next;
        }
        prop_assert!((f.mass() - 1.0).abs() <= 1e-12, "mass {}", f.mass());
        prop_assert!(f.lower() >= c0 - 1e-13 && f.upper() <= u0 + 1e-13);
    }

    #[test]
    fn paired_runs_contract_in_l1(fam in family(), a in series(), b in series()) {
        let (w, e) = problem(&fam, 2.0);
        let f = a.build(&w, &e).unwrap();
        let g = b.build(&w, &e).unwrap();
        let dt = stable_dt(f.values(), &w, e.grid(), 2.0, 0.4).unwrap();
        let pair = run_paired(&f, &g, &w, &e, &SolverConfig::new(200.0 * dt)).unwrap();
        prop_assert!(pair.worst_increase <= 1e-12, "L1 rose by {}", pair.worst_increase);
    }

    #[test]
    fn integration_is_linear(n in 4usize..50, xs in prop::collection::vec(-3.0f64..3.0, 50), k in -4.0f64..4.0) {
        let g = Grid::truncated(n, 2.5).unwrap();
        let a: Vec<f64> = xs[..n].to_vec();
        let b: Vec<f64> = xs.iter().rev().take(n).copied().collect();
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| k * x + y).collect();
        let lhs = g.integrate(&sum).unwrap();
        let rhs = k * g.integrate(&a).unwrap() + g.integrate(&b).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }
}

#[test]
fn density_field_renormalizes() {
    let g = Grid::periodic(10).unwrap();
    let w = Weight::new(&g, Potential::Uniform).unwrap();
    let e = Equilibrium::new(&w, 2.0).unwrap();
    let f = DensityField::new(&e, vec![3.0; 10]).unwrap();
    assert!((f.mass() - 1.0).abs() < 1e-15);
    assert_eq!((f.lower(), f.upper()), (1.0, 1.0));
}
