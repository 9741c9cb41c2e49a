use std::sync::Arc;

use num_complex::Complex64 as C64;
use proptest::prelude::*;

use scl_core::hamiltonian::{HamiltonianModel, TwoMicrolocalFrame};
use scl_core::lattice::{PrimitiveModule, RationalVector, Space};
use scl_core::microlocal::{
    propagation_defect, split_symbol, symbol_flow, two_scale_pair, two_scale_parts, uh_transform, Coeff2Fn, EvalPoint,
    Flow, Part, SplitParams, TwoMicrolocalSymbol,
};
use scl_core::state::FourierState;

fn frame() -> (HamiltonianModel, TwoMicrolocalFrame) {
    let model = HamiltonianModel::laplacian(2);
    let module = PrimitiveModule::span_i64(2, Space::Dual, &[&[0, 1]]).unwrap();
    let f = TwoMicrolocalFrame::new(&model, module, RationalVector::from_i64(&[1, 0]), 0.5).unwrap();
    (model, f)
}

fn symbol(module: &PrimitiveModule) -> TwoMicrolocalSymbol {
    TwoMicrolocalSymbol::new(
        module.clone(),
        vec![
            (vec![0, 0], Arc::new(|xi: &[f64], eta: &[f64]| C64::new(1.0 + 0.5 * xi[0], (0.3 * eta[1]).tanh())) as Coeff2Fn),
            (vec![0, 1], Arc::new(|xi: &[f64], eta: &[f64]| C64::new(0.5 * xi[1], (0.7 * eta[1]).sin())) as Coeff2Fn),
            (vec![0, -2], Arc::new(|_: &[f64], eta: &[f64]| C64::new((-eta[1] * eta[1]).exp(), 0.25)) as Coeff2Fn),
        ],
        2.0,
        None,
    )
    .unwrap()
}

fn state() -> impl Strategy<Value = FourierState> {
    prop::collection::btree_map((-6i64..=6, -6i64..=6), (-1.0f64..1.0, -1.0f64..1.0), 1..24).prop_map(|m| {
        let entries = m.into_iter().map(|((a, b), (re, im))| (vec![64 + a, b], C64::new(re, im))).collect();
        FourierState::new(1.0 / 64.0, 2, entries).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn split_partition_pointwise(
        xi in (0.85f64..1.15, -0.15f64..0.15),
        eta in (-3.0f64..3.0, -12.0f64..12.0),
        r in 1.1f64..16.0,
        delta in 0.01f64..0.99,
    ) {
        let (model, f) = frame();
        let a = symbol(f.module());
        let (a1, a2, a3) = split_symbol(&a, SplitParams::new(r, delta).unwrap());
        let p = EvalPoint::new(&f, &model, &[xi.0, xi.1], &[eta.0, eta.1]).unwrap();
        for i in 0..a.modes().len() {
            let sum = a1.coefficient(i, &p) + a2.coefficient(i, &p) + a3.coefficient(i, &p);
            prop_assert!((sum - a.coefficient(i, &p)).norm() <= 1e-12);
        }
    }

    #[test]
    fn split_partition_pairing(u in state(), r in 1.1f64..16.0, delta in 0.01f64..0.99, t in 0.0f64..2.0) {
        let (model, f) = frame();
        let a = symbol(f.module());
        let [full, conc, spread, far] = two_scale_parts(&u, &a, &f, &model, 64.0, t, SplitParams::new(r, delta).unwrap()).unwrap();
        prop_assert!((conc + spread + far - full).norm() <= 1e-12 * u.norm_sq().max(1.0));
    }

    #[test]
    fn plancherel_for_the_fibre_transform(u in state()) {
        let (model, f) = frame();
        let fam = uh_transform(&u, &f, &model).unwrap();
        let h = u.h();
        let want: f64 = u.iter().map(|(k, a)| (f.cutoff(&[h * k[0] as f64, h * k[1] as f64]) * a.norm()).powi(2)).sum();
        prop_assert!((fam.mass() - want).abs() <= 1e-12 * want.max(1e-300));
        prop_assert!(fam.max_miss <= 1e-9);
        for m in &fam.members {
            for (v, _) in &m.modes {
                prop_assert!(f.module().contains_i64(v));
            }
        }
    }

    #[test]
    fn fibre_flow_group_law(
        s in -2.0f64..2.0,
        t in -2.0f64..2.0,
        xi in (0.85f64..1.15, -0.15f64..0.15),
        eta in (-3.0f64..3.0, -6.0f64..6.0),
        x in (0.0f64..6.28, 0.0f64..6.28),
    ) {
        let (model, f) = frame();
        let a = symbol(f.module());
        let p = EvalPoint::new(&f, &model, &[xi.0, xi.1], &[eta.0, eta.1]).unwrap();
        for flow in [Flow::Phi1Tilde as fn(f64) -> Flow, Flow::Phi0] {
            let two = symbol_flow(&symbol_flow(&a, flow(s)).unwrap(), flow(t)).unwrap();
            let one = symbol_flow(&a, flow(s + t)).unwrap();
            let d = (two.evaluate(&[x.0, x.1], &p) - one.evaluate(&[x.0, x.1], &p)).norm();
            prop_assert!(d <= 1e-12, "defect {}", d);
        }
    }
}

#[test]
fn zero_time_flows_are_trivial() {
    let (model, f) = frame();
    let a = symbol(f.module());
    let p = EvalPoint::new(&f, &model, &[1.02, 0.05], &[0.3, 1.7]).unwrap();
    for flow in [Flow::Phi0(0.0), Flow::Phi1Tilde(0.0)] {
        let b = symbol_flow(&a, flow).unwrap();
        assert!((b.evaluate(&[1.0, 2.0], &p) - a.evaluate(&[1.0, 2.0], &p)).norm() < 1e-15);
    }
}

#[test]
fn propagation_defect_vanishes_at_time_zero() {
    let (model, f) = frame();
    let a = symbol(f.module());
    let u = FourierState::new(1.0 / 64.0, 2, vec![(vec![64, 0], C64::new(1.0, 0.0)), (vec![65, 3], C64::new(0.0, 1.0))]).unwrap();
    assert_eq!(propagation_defect(&u, &a, &f, &model, 64.0, 0.0, 4.0).unwrap(), 0.0);
}

#[test]
fn pairing_outside_the_frame_is_a_domain_error() {
    let (model, f) = frame();
    let a = symbol(f.module());
    let u = FourierState::new(1.0 / 64.0, 2, vec![(vec![0, 0], C64::new(1.0, 0.0)), (vec![0, 1], C64::new(1.0, 0.0))]).unwrap();
    let r = two_scale_pair(&u, &a, &f, &model, 64.0, 0.0, Part::Full);
    assert!(matches!(r, Err(scl_core::Error::Domain(_))), "{r:?}");
}
