use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use proptest::prelude::*;

use scl_core::hamiltonian::{HamiltonianModel, HamiltonianSpec};
use scl_core::lattice::RationalVector;
use scl_core::propagator::{eigenspace_decompose, evolve, quasimode_residual, spacing_scale, Window};
use scl_core::state::{wave_packet, FourierState, WavePacketSpec};
use scl_core::wigner::{density_modes, time_averaged_density, TimeWindow, WindowKind};

fn distance(a: &FourierState, b: &FourierState) -> f64 {
    let mut s = 0.0;
    for (k, x) in a.iter() {
        s += (x - b.coefficient(k)).norm_sqr();
    }
    for (k, y) in b.iter() {
        if a.index_of(k).is_none() {
            s += y.norm_sqr();
        }
    }
    s.sqrt()
}

fn state() -> impl Strategy<Value = FourierState> {
    prop::collection::btree_map((-20i64..=20, -20i64..=20), (-1.0f64..1.0, -1.0f64..1.0), 1..24).prop_map(|m| {
        let entries = m.into_iter().map(|((a, b), (re, im))| (vec![a + 32, b], C64::new(re, im))).collect();
        FourierState::new(1.0 / 32.0, 2, entries).unwrap()
    })
}

fn models() -> Vec<HamiltonianModel> {
    vec![
        HamiltonianModel::laplacian(2),
        HamiltonianModel::even_power(2, 4).unwrap(),
        HamiltonianModel::linear(RationalVector::from_ratios(&[(1, 1), (2, 3)])).unwrap(),
        HamiltonianSpec::DifferenceQuadratic { signs: vec![1, -1], coefficients: vec!["1".into(), "1".into()] }.build().unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn evolution_is_unitary(u in state(), t in -50.0f64..50.0) {
        for m in models() {
            let v = evolve(&u, &m, t);
            prop_assert!((v.norm() - u.norm()).abs() <= 1e-12 * u.norm());
        }
    }

    #[test]
    fn evolution_group_law(u in state(), s in -5.0f64..5.0, t in -5.0f64..5.0) {
        for m in models() {
            let two = evolve(&evolve(&u, &m, s), &m, t);
            let one = evolve(&u, &m, s + t);
            prop_assert!(distance(&two, &one) <= 1e-10 * u.norm(), "{}", distance(&two, &one));
        }
    }

    #[test]
    fn eigenspaces_reconstruct_the_state(u in state()) {
        let m = HamiltonianModel::laplacian(2);
        let dec = eigenspace_decompose(&u, &m, 1e-9).unwrap();
        let total: f64 = dec.groups.iter().map(|g| g.weight).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(distance(&dec.reconstruct(), &u) <= 1e-12 * u.norm());
        for g in &dec.groups {
            prop_assert!((g.state.norm() - 1.0).abs() < 1e-12);
            prop_assert!(g.exact_energy.is_some());
        }
    }

    #[test]
    fn duhamel_bound(u in state(), e in 0.5f64..1.5, t in 0.0f64..3.0) {
        let m = HamiltonianModel::laplacian(2);
        let r = quasimode_residual(&u, &m, e);
        let h = u.h();
        let v = evolve(&u, &m, t);
        let phase = C64::from_polar(1.0, -t * e / h);
        let free = u.with_amps(u.amps().iter().map(|a| a * phase).collect());
        prop_assert!(distance(&v, &free) <= t * r / h * (1.0 + 1e-9) + 1e-12);
    }
}

#[test]
fn zero_time_is_the_identity() {
    let u = wave_packet(&WavePacketSpec::new(vec![1.0, 2.0], vec![1.0, 0.0], 0.5), 1.0 / 64.0).unwrap().state;
    for m in models() {
        assert_eq!(evolve(&u, &m, 0.0), u);
    }
}

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> C64, a: f64, b: f64, n: usize) -> C64 {
    let dx = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += f(a + i as f64 * dx) * w;
    }
    s * dx / 3.0
}

#[test]
fn time_average_matches_quadrature() {
    let h = 1.0 / 32.0;
    let u = wave_packet(&WavePacketSpec::new(vec![PI, 1.0], vec![1.0, 0.0], 0.5), h).unwrap().state;
    let m = HamiltonianModel::laplacian(2);
    let tau = h.powf(-0.5);
    let modes = vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, -1], vec![2, 1]];
    for kind in [WindowKind::Indicator, WindowKind::Hat] {
        let window = TimeWindow::new(0.25, 1.5, kind).unwrap();
        let closed = time_averaged_density(&u, &m, tau, &window, &modes).unwrap();
        for mode in &modes {
            let one = std::slice::from_ref(mode);
            let f = |t: f64| density_modes(&evolve(&u, &m, tau * t), one).unwrap().coeffs[0] * window.weight(t);
            // Split at the hat's kink so Simpson sees smooth pieces.
            let mid = 0.5 * (window.a + window.b);
            let q = simpson(&f, window.a, mid, 2000) + simpson(&f, mid, window.b, 2000);
            let c = closed.coefficient(mode);
            assert!((q - c).norm() <= 1e-9, "{kind:?} {mode:?}: quadrature {q} closed form {c}");
        }
    }
}

#[test]
fn window_average_respects_decay_bound() {
    for kind in [WindowKind::Indicator, WindowKind::Hat] {
        let w = TimeWindow::new(-0.3, 0.9, kind).unwrap();
        for i in 0..4000 {
            let omega = -200.0 + 0.1 * i as f64 + 0.013;
            assert!(w.average(omega).norm() <= w.decay_bound(omega) + 1e-15);
        }
        assert!((w.average(0.0) - C64::new(1.0, 0.0)).norm() < 1e-15);
    }
}

/// `h / min gap` by direct enumeration of `|hk − c| < r`.
fn brute_spacing(h: f64, n: i64, center: [f64; 2], r: f64) -> f64 {
    let mut values: Vec<i64> = Vec::new();
    for a in -4 * n..=4 * n {
        for b in -4 * n..=4 * n {
            let (x, y) = (h * a as f64 - center[0], h * b as f64 - center[1]);
            if x * x + y * y < r * r {
                values.push(a * a + b * b);
            }
        }
    }
    values.sort_unstable();
    values.dedup();
    let gap = values.windows(2).map(|w| w[1] - w[0]).min().unwrap();
    h / (gap as f64 * h * h)
}

#[test]
fn spacing_matches_enumeration() {
    let m = HamiltonianModel::laplacian(2);
    for j in 3..7 {
        let n = 1i64 << j;
        let h = 1.0 / n as f64;
        for (center, r) in [([0.0, 0.0], 2.0), ([1.0, 0.3], 0.7), ([0.5, 0.5], 1.1)] {
            let s = spacing_scale(&m, h, &Window::Ball { center: center.to_vec(), radius: r }).unwrap();
            let want = brute_spacing(h, n, center, r);
            assert!((s.tau - want).abs() <= 1e-12 * want, "j = {j}: {} vs {want}", s.tau);
        }
    }
}
