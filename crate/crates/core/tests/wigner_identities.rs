use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use proptest::prelude::*;

use scl_core::hamiltonian::HamiltonianModel;
use scl_core::lattice::{PrimitiveModule, Space};
use scl_core::propagator::evolve;
use scl_core::state::FourierState;
use scl_core::wigner::{
    averaged_symbol, density_modes, difference_set, egorov_defect, mode_box, strip_mass, weyl_pair, CoeffFn, Symbol,
};

fn state(h: f64, spread: i64) -> impl Strategy<Value = FourierState> {
    let n = (1.0 / h).round() as i64;
    prop::collection::btree_map((-spread..=spread, -spread..=spread), (-1.0f64..1.0, -1.0f64..1.0), 1..20).prop_map(
        move |m| {
            let entries = m.into_iter().map(|((a, b), (re, im))| (vec![a + n, b], C64::new(re, im))).collect();
            FourierState::new(h, 2, entries).unwrap()
        },
    )
}

fn position_symbol() -> impl Strategy<Value = Vec<(Vec<i64>, C64)>> {
    prop::collection::btree_map((-3i64..=3, -3i64..=3), (-1.0f64..1.0, -1.0f64..1.0), 1..8)
        .prop_map(|m| m.into_iter().map(|((a, b), (re, im))| (vec![a, b], C64::new(re, im))).collect())
}

/// `u(x)` summed term by term.
fn value_at(u: &FourierState, x: &[f64]) -> C64 {
    u.iter().map(|(k, a)| a * C64::from_polar(1.0, k[0] as f64 * x[0] + k[1] as f64 * x[1])).sum::<C64>() / (2.0 * PI)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mass_identity(u in state(1.0 / 16.0, 6)) {
        let r = density_modes(&u, &[vec![0, 0]]).unwrap();
        let want = u.norm_sq() / (4.0 * PI * PI);
        prop_assert!((r.coeffs[0].re - want).abs() <= 1e-12 * want);
        prop_assert!(r.coeffs[0].im.abs() <= 1e-12 * want);
    }

    #[test]
    fn density_is_hermitian(u in state(1.0 / 16.0, 6)) {
        let r = density_modes(&u, &difference_set(&u)).unwrap();
        prop_assert!(r.hermitian_defect() <= 1e-14 * u.norm_sq());
    }

    #[test]
    fn density_matches_pointwise_modulus(u in state(1.0 / 8.0, 4), x in (0.0f64..6.28, 0.0f64..6.28)) {
        let r = density_modes(&u, &difference_set(&u)).unwrap();
        let from_modes: C64 = r
            .modes
            .iter()
            .zip(&r.coeffs)
            .map(|(m, c)| c * C64::from_polar(1.0, m[0] as f64 * x.0 + m[1] as f64 * x.1))
            .sum();
        let direct = value_at(&u, &[x.0, x.1]).norm_sqr();
        prop_assert!((from_modes.re - direct).abs() <= 1e-12 * u.norm_sq());
        prop_assert!(from_modes.im.abs() <= 1e-12 * u.norm_sq());
    }

    #[test]
    fn parseval_matches_grid(u in state(1.0 / 8.0, 5)) {
        let mut r = density_modes(&u, &difference_set(&u)).unwrap();
        let l2 = r.l2_parseval();
        let grid = r.synthesize(None).unwrap();
        prop_assert!((grid.l2 - l2).abs() <= 1e-12 * l2);
    }

    #[test]
    fn truncation_is_exact(u in state(1.0 / 16.0, 6)) {
        let full = density_modes(&u, &difference_set(&u)).unwrap();
        let some = density_modes(&u, &mode_box(2, 3)).unwrap();
        for (m, c) in some.modes.iter().zip(&some.coeffs) {
            prop_assert!((full.coefficient(m) - c).norm() <= 1e-15);
        }
    }

    #[test]
    fn pairing_of_position_symbols(u in state(1.0 / 16.0, 6), a in position_symbol()) {
        let sym = Symbol::position(2, a.clone()).unwrap();
        let neg: Vec<Vec<i64>> = a.iter().map(|(m, _)| m.iter().map(|x| -x).collect()).collect();
        let r = density_modes(&u, &neg).unwrap();
        let integral: C64 =
            a.iter().zip(&neg).map(|((_, c), n)| c * r.coefficient(n)).sum::<C64>() * (2.0 * PI);
        let pair = weyl_pair(&u, &sym).unwrap();
        prop_assert!((pair - integral).norm() <= 1e-12 * u.norm_sq().max(1.0));
    }

    #[test]
    fn exact_egorov_for_quadratic_hamiltonians(u in state(1.0 / 32.0, 8), t in -3.0f64..3.0) {
        let model = HamiltonianModel::laplacian(2);
        let g: CoeffFn = Arc::new(|xi: &[f64]| C64::new(1.0 + xi[0] - 0.5 * xi[1] * xi[1], 0.3 * xi[1]));
        let a = Symbol::new(2, vec![(vec![0, 1], g.clone()), (vec![1, -1], g), (vec![0, 0], Arc::new(|_: &[f64]| C64::new(2.0, 0.0)))], f64::INFINITY).unwrap();
        let moved = a.map(move |m, xi| C64::from_polar(1.0, t * 2.0 * (m[0] as f64 * xi[0] + m[1] as f64 * xi[1])));
        let later = weyl_pair(&evolve(&u, &model, t), &a).unwrap();
        let now = weyl_pair(&u, &moved).unwrap();
        prop_assert!((later - now).norm() <= 1e-10 * u.norm_sq());
    }
}

#[test]
fn unit_symbol_pairs_to_the_norm() {
    let u = FourierState::new(0.125, 2, vec![(vec![8, 0], C64::new(0.6, 0.0)), (vec![7, 2], C64::new(0.0, -0.8))]).unwrap();
    let p = weyl_pair(&u, &Symbol::one(2)).unwrap();
    assert!((p - C64::new(u.norm_sq(), 0.0)).norm() < 1e-14);
}

#[test]
fn averaging_keeps_resonant_modes() {
    let a = Symbol::position(2, vec![(vec![1, -1], C64::new(1.0, 0.0)), (vec![1, 0], C64::new(2.0, 0.0)), (vec![0, 0], C64::new(3.0, 0.0))]).unwrap();
    let module = PrimitiveModule::span_i64(2, Space::Dual, &[&[1, -1]]).unwrap();
    let avg = averaged_symbol(&a, &module);
    assert_eq!(avg.modes(), &[vec![0, 0], vec![1, -1]]);
}

#[test]
fn egorov_defect_vanishes_for_resonant_modes() {
    // Modes orthogonal to the gradient everywhere are invariant under the flow.
    let model = HamiltonianModel::linear(scl_core::lattice::RationalVector::from_i64(&[1, 1])).unwrap();
    let u = FourierState::new(0.0625, 2, vec![(vec![16, 0], C64::new(1.0, 0.0)), (vec![15, 1], C64::new(0.5, 0.5))]).unwrap();
    let a = Symbol::position(2, vec![(vec![1, -1], C64::new(1.0, 0.0)), (vec![-1, 1], C64::new(1.0, 0.0))]).unwrap();
    assert_eq!(egorov_defect(&u, &model, &a, 1.0, 1.0, 16.0).unwrap(), 0.0);
}

#[test]
fn strip_mass_matches_grid_quadrature() {
    let h = 1.0 / 16.0;
    let entries: Vec<(Vec<i64>, C64)> = (-6i64..=6)
        .flat_map(|a| (-2i64..=2).map(move |b| (vec![16 + a, b], C64::from_polar((-(a * a + b * b) as f64 / 9.0).exp(), 0.3 * a as f64))))
        .collect();
    let u = FourierState::new(h, 2, entries).unwrap();
    let n = 1024;
    let grid = u.sample_grid(n);
    for (dir, b) in [([1i64, 0i64], 1.0), ([1, -1], 0.4), ([0, 1], 2.5), ([2, 1], 0.9)] {
        let cell = (2.0 * PI / n as f64).powi(2);
        let mut q = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = [2.0 * PI * i as f64 / n as f64, 2.0 * PI * j as f64 / n as f64];
                let s = (dir[0] as f64 * x[0] + dir[1] as f64 * x[1]).rem_euclid(2.0 * PI);
                if s.min(2.0 * PI - s) <= b {
                    q += grid[i * n + j].norm_sqr() * cell;
                }
            }
        }
        let m = strip_mass(&u, &dir, b).unwrap();
        assert!((m - q).abs() <= 5e-3 * u.norm_sq(), "{dir:?}: {m} vs {q}");
    }
}
