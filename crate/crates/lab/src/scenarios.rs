//! The nine reproducible experiments.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use scl_core::hamiltonian::{HamiltonianModel, TwoMicrolocalFrame};
use scl_core::lattice::{classify_momentum, PrimitiveModule, RationalVector, Space};
use scl_core::microlocal::{
    conjugated_evolution_check, propagation_defect, two_scale_parts, SplitParams, TwoMicrolocalSymbol,
};
use scl_core::propagator::{
    eigenspace_decompose, quasimode_residual, quasimode_residual_with_potential, spacing_scale, stability_horizon,
    wunsch_potential, Energies, Window,
};
use scl_core::state::{
    modulated_wave_packet, spectral_superposition, wave_packet, wunsch_quasimode, FourierState, Modulation,
    WavePacketSpec,
};
use scl_core::wigner::{
    averaged_symbol, density_modes, difference_set, mode_box, strip_mass, time_averaged_density, weyl_pair,
    DensityReport, Symbol,
};
use scl_core::{Error, Result};

use crate::fit::FitKind;
use crate::report::{Artifact, Row, SweepReport};
use crate::spec::{ScenarioName, ScenarioSpec, StateSpec};

/// A module error with the scenario, step and phase it arose in.
#[derive(Debug, thiserror::Error)]
#[error("{scenario} (h = {h:?}, phase {phase}): {source}")]
pub struct LabError {
    pub scenario: ScenarioName,
    pub h: Option<f64>,
    pub phase: &'static str,
    #[source]
    pub source: Error,
    /// Rows completed before the failure.
    pub partial: Option<Box<SweepReport>>,
}

type RowFn<'a> = dyn FnMut(u32, f64, &mut Vec<Artifact>) -> Result<Vec<f64>> + 'a;

fn unit(d: usize) -> f64 {
    (2.0 * PI).powi(-(d as i32))
}

/// Runs the scenario over its ladder and evaluates its built-in assertions.
pub fn run_scenario(spec: &ScenarioSpec) -> std::result::Result<SweepReport, LabError> {
    let fail = |phase, source, h| LabError { scenario: spec.name, h, phase, source, partial: None };
    spec.ladder.validate().map_err(|e| fail("validate", e, None))?;
    let model = spec.hamiltonian.build().map_err(|e| fail("validate", e, None))?;
    match spec.name {
        ScenarioName::OrbitMeasure => orbit_measure(spec, &model),
        ScenarioName::DiracDrift => dirac_drift(spec, &model),
        ScenarioName::ThresholdSweep => threshold_sweep(spec, &model),
        ScenarioName::DegenerateQuasimode => degenerate_quasimode(spec, &model),
        ScenarioName::WunschSubprincipal => wunsch_subprincipal(spec, &model),
        ScenarioName::HierarchyAverage => hierarchy_average(spec, &model),
        ScenarioName::ResonantTransport => resonant_transport(spec, &model),
        ScenarioName::DiagonalConcentration => diagonal_concentration(spec, &model),
        ScenarioName::TwoMicrolocalConsistency => two_microlocal_consistency(spec, &model),
    }
}

/// Evaluates `row` along the ladder, keeping completed rows on failure.
fn sweep(spec: &ScenarioSpec, columns: &[&str], row: &mut RowFn<'_>) -> std::result::Result<SweepReport, LabError> {
    let mut report = SweepReport::new(spec.clone(), columns);
    for (j, h) in spec.ladder.steps() {
        let mut artifacts = Vec::new();
        match row(j, h, &mut artifacts) {
            Ok(values) => {
                if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
                    let source = Error::Parameter(format!("observable '{}' is not finite", columns[bad]));
                    return Err(LabError { scenario: spec.name, h: Some(h), phase: "observe", source, partial: Some(Box::new(report)) });
                }
                report.rows.push(Row { j, h, values });
                report.artifacts.extend(artifacts);
            }
            Err(source) => {
                return Err(LabError { scenario: spec.name, h: Some(h), phase: "row", source, partial: Some(Box::new(report)) });
            }
        }
    }
    Ok(report)
}

fn finish<T>(spec: &ScenarioSpec, r: Result<T>) -> std::result::Result<T, LabError> {
    r.map_err(|source| LabError { scenario: spec.name, h: None, phase: "assert", source, partial: None })
}

/// Builds the scenario's normalized initial state at `h`.
pub fn build_state(spec: &ScenarioSpec, h: f64) -> Result<FourierState> {
    match &spec.state {
        StateSpec::Packet { x0, xi0, eps_exponent, eps_coef, profile_radius, eta0 } => {
            let mut p = WavePacketSpec::new(x0.clone(), xi0.to_f64(), *eps_exponent);
            p.eps_coef = *eps_coef;
            p.profile_radius = *profile_radius;
            match eta0 {
                Some(eta0) => {
                    p.modulation = Some(Modulation { eta0: eta0.clone(), module: None, time_scale: spec.time_scale });
                    Ok(modulated_wave_packet(&p, h)?.state)
                }
                None => Ok(wave_packet(&p, h)?.state),
            }
        }
        StateSpec::MirrorPairs { offsets } => {
            let k = inverse_h(h)?;
            let mut modes = Vec::new();
            for &a in offsets {
                modes.push((vec![k, a], C64::new(1.0, 0.0)));
                if a != k {
                    modes.push((vec![a, k], C64::new(1.0, 0.0)));
                }
            }
            Ok(spectral_superposition(h, 2, modes)?.state)
        }
        StateSpec::AntiDiagonal { width_fraction } => {
            let n = inverse_h(h)?;
            let sigma = width_fraction * n as f64;
            let modes = (-n / 2..=n / 2)
                .map(|m| (vec![m, -m], C64::new((-(m as f64).powi(2) / (2.0 * sigma * sigma)).exp(), 0.0)))
                .collect();
            Ok(spectral_superposition(h, 2, modes)?.state)
        }
        StateSpec::Wunsch { eps_exponent } => Ok(wunsch_quasimode(h, *eps_exponent)?.state),
        StateSpec::FibredPacket { x0, xi0, eps_exponent, fibre } => {
            let xi = xi0.to_f64();
            if xi.len() != 2 {
                return Err(Error::Parameter("fibred packet lives on T²".into()));
            }
            let line = wave_packet(&WavePacketSpec::new(vec![*x0], vec![xi[0]], *eps_exponent), h)?.state;
            let shift = (xi[1] / h).round() as i64;
            let mut modes = Vec::new();
            for (k1, a) in line.iter() {
                for &(k2, w) in fibre {
                    modes.push((vec![k1[0], k2 + shift], a * w));
                }
            }
            Ok(spectral_superposition(h, 2, modes)?.state)
        }
    }
}

fn inverse_h(h: f64) -> Result<i64> {
    let n = (1.0 / h).round();
    if (n * h - 1.0).abs() > 1e-12 {
        return Err(Error::Parameter(format!("1/h must be an integer, got h = {h}")));
    }
    Ok(n as i64)
}

fn mass_defect(report: &DensityReport, u: &FourierState) -> f64 {
    let d = u.dim();
    let c0 = report.coefficient(&vec![0; d]);
    let expect = unit(d) * u.norm_sq();
    (c0 - C64::new(expect, 0.0)).norm() / expect
}

fn grid_artifact(name: String, mut report: DensityReport) -> Result<Artifact> {
    report.synthesize(None)?;
    let mut buf = Vec::new();
    report.write_grid_csv(&mut buf)?;
    Ok(Artifact { name, csv: String::from_utf8(buf).expect("ascii output") })
}

fn list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn is_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

fn mass_check(report: &mut SweepReport, spec: &ScenarioSpec) -> Result<()> {
    let tol = spec.threshold("mass_tol")?;
    let worst = report.column("mass_defect")?.into_iter().fold(0.0, f64::max);
    report.check("mass", worst <= tol, format!("max relative |c_0 − (2π)^-d‖u‖²| = {worst:.3e} (tol {tol:.0e})"));
    Ok(())
}

fn orbit_measure(spec: &ScenarioSpec, model: &HamiltonianModel) -> std::result::Result<SweepReport, LabError> {
    let x02 = match &spec.state {
        StateSpec::Packet { x0, .. } if x0.len() == 2 => x0[1],
        _ => return Err(finish::<()>(spec, Err(Error::Parameter("orbit_measure needs a packet on T²".into()))).unwrap_err()),
    };
    let grid_radius = spec.constants.get("grid_radius").copied().unwrap_or(32.0) as i64;
    let jmax = spec.ladder.jmax;
    let u0 = unit(2);
    let target = C64::from_polar(u0, -x02);
    let probe = [vec![0, 0], vec![0, 1], vec![0, -1], vec![1, 0], vec![-1, 0]];
    let mut report = sweep(
        spec,
        &["c01_re", "c01_im", "c01_error", "c10_abs", "mass_defect", "hermitian_defect"],
        &mut |j, h, artifacts| {
            let u = build_state(spec, h)?;
            let tau = spec.time_scale.value(h);
            let r = time_averaged_density(&u, model, tau, &spec.window, &probe)?;
            let c01 = r.coefficient(&[0, 1]);
            if j == jmax && grid_radius > 0 {
                let g = time_averaged_density(&u, model, tau, &spec.window, &mode_box(2, grid_radius))?;
                artifacts.push(grid_artifact(format!("density_j{j}"), g)?);
            }
            Ok(vec![
                c01.re,
                c01.im,
                (c01 - target).norm() / u0,
                r.coefficient(&[1, 0]).norm() / u0,
                mass_defect(&r, &u),
                r.hermitian_defect() / u0,
            ])
        },
    )?;
    finish(spec, (|| {
        let err = report.column("c01_error")?;
        let c10 = report.column("c10_abs")?;
        let last = report.rows.len() - 1;
        let err_max = spec.threshold("c01_error_max")?;
        let c10_max = spec.threshold("c10_max")?;
        report.check("c01_limit", err[last] <= err_max, format!("|c01 − (2π)^-2 e^(-i x0,2)|/(2π)^-2 = {:.4} at j = {jmax} (gate {err_max})", err[last]));
        report.check("c01_error_decreasing", is_decreasing(&err), format!("errors {err:.4?}"));
        let f = report.fit("c10_abs", "h", FitKind::LoglogSlope)?;
        report.check("c10_small", c10[last] <= c10_max, format!("|c10|/(2π)^-2 = {:.4} at j = {jmax} (gate {c10_max})", c10[last]));
        report.check("c10_decreasing", f.value > 0.0, format!("log-log slope of |c10| against h = {:.3}", f.value));
        mass_check(&mut report, spec)?;
        Ok(report)
    })())
}

/// Unwrapped phases, least-squares slope against `times`.
fn phase_slope(times: &[f64], values: &[C64]) -> Result<f64> {
    let mut phases = Vec::with_capacity(values.len());
    let mut prev: Option<f64> = None;
    for v in values {
        let mut p = v.arg();
        if let Some(q) = prev {
            while p - q > PI {
                p -= 2.0 * PI;
            }
            while p - q < -PI {
                p += 2.0 * PI;
            }
        }
        prev = Some(p);
        phases.push(p);
    }
    Ok(crate::fit::linear_fit(times, &phases)?.0)
}

fn dirac_drift(spec: &ScenarioSpec, model: &HamiltonianModel) -> std::result::Result<SweepReport, LabError> {
    let times = spec.times.clone();
    let mut report = sweep(spec, &["phase_slope", "slope_error", "c01_abs_t0", "mass_defect"], &mut |_, h, _| {
        let u = build_state(spec, h)?;
        let tau = spec.time_scale.value(h);
        let mut values = Vec::with_capacity(times.len());
        let mut mass: f64 = 0.0;
        for &t in &times {
            let v = scl_core::propagator::evolve(&u, model, tau * t);
            let r = density_modes(&v, &[vec![0, 0], vec![0, 1]])?;
            mass = mass.max(mass_defect(&r, &v));
            values.push(r.coefficient(&[0, 1]));
        }
        let slope = phase_slope(&times, &values)?;
        let target = spec.constant("slope_target")?;
        Ok(vec![slope, (slope - target).abs() / target.abs(), values[0].norm() / unit(2), mass])
    })?;
    finish(spec, (|| {
        let tol = spec.threshold("slope_rel_tol")?;
        let last = *report.column("slope_error")?.last().expect("nonempty ladder");
        let slope = *report.column("phase_slope")?.last().expect("nonempty ladder");
        report.check("drift_slope", last <= tol, format!("phase slope {slope:.4} at j = {} (relative error {last:.4}, gate {tol})", spec.ladder.jmax));
        mass_check(&mut report, spec)?;
        Ok(report)
    })())
}

fn threshold_sweep(spec: &ScenarioSpec, model: &HamiltonianModel) -> std::result::Result<SweepReport, LabError> {
    let crit_exp = spec.constant("critical_exponent").map_err(|e| finish::<()>(spec, Err(e)).unwrap_err())?;
    let mut report = sweep(spec, &["l2_sub", "l2_crit", "ratio", "sup_sub", "sup_crit", "mass_defect"], &mut |j, h, artifacts| {
        let u = build_state(spec, h)?;
        let modes = difference_set(&u);
        let mut out = Vec::new();
        let mut sups = Vec::new();
        let mut mass: f64 = 0.0;
        for (label, tau) in [("sub", spec.time_scale.value(h)), ("crit", h.powf(-crit_exp))] {
            let mut r = time_averaged_density(&u, model, tau, &spec.window, &modes)?;
            mass = mass.max(mass_defect(&r, &u));
            out.push(r.l2_parseval());
            let grid = r.synthesize(None)?;
            sups.push(grid.sup);
            if j == spec.ladder.jmax {
                let mut buf = Vec::new();
                r.write_grid_csv(&mut buf)?;
                artifacts.push(Artifact { name: format!("density_{label}_j{j}"), csv: String::from_utf8(buf).expect("ascii") });
            }
        }
        Ok(vec![out[0], out[1], out[0] / out[1], sups[0], sups[1], mass])
    })?;
    finish(spec, (|| {
        let from = spec.constant("from_j")? as u32;
        let growth_min = spec.threshold("growth_min")?;
        let var_max = spec.threshold("critical_variation_max")?;
        let rows: Vec<&Row> = report.rows.iter().filter(|r| r.j + 1 >= from).collect();
        let i_sub = report.column_index("l2_sub")?;
        let i_crit = report.column_index("l2_crit")?;
        let growth: Vec<f64> =
            rows.windows(2).filter(|w| w[1].j >= from).map(|w| w[1].values[i_sub] / w[0].values[i_sub]).collect();
        let crit: Vec<f64> = rows.iter().filter(|r| r.j >= from).map(|r| r.values[i_crit]).collect();
        let worst_growth = growth.iter().cloned().fold(f64::INFINITY, f64::min);
        let (lo, hi) = crit.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        let variation = hi / lo - 1.0;
        let ratio = report.column("ratio")?;
        report.check(
            "subcritical_growth",
            !growth.is_empty() && worst_growth >= growth_min,
            format!("per-step growth of the L² norm at τ = h^-1/2 for j >= {from}: {growth:.4?} (gate {growth_min})"),
        );
        report.check(
            "critical_bounded",
            !crit.is_empty() && variation <= var_max,
            format!("variation of the L² norm at τ = 1/h over j >= {from}: {variation:.4} (gate {var_max})"),
        );
        report.check("ratio_increasing", ratio.windows(2).all(|w| w[1] > w[0]), format!("ratios {ratio:.4?}"));
        mass_check(&mut report, spec)?;
        Ok(report)
    })())
}

fn packet_eps(spec: &ScenarioSpec, h: f64) -> Result<f64> {
    match &spec.state {
        StateSpec::Packet { eps_exponent, eps_coef, .. } => Ok(eps_coef * h.powf(*eps_exponent)),
        _ => Err(Error::Parameter("scenario needs a packet state".into())),
    }
}

fn degenerate_quasimode(spec: &ScenarioSpec, model: &HamiltonianModel) -> std::result::Result<SweepReport, LabError> {
    let mut report = sweep(spec, &["residual", "h_over_eps"], &mut |_, h, _| {
        let u = build_state(spec, h)?;
        let e = spec.constant("energy")?;
        Ok(vec![quasimode_residual(&u, model, e), h / packet_eps(spec, h)?])
    })?;
    finish(spec, (|| {
        let f = report.fit("residual", "h_over_eps", FitKind::LoglogSlope)?;
        let (lo, hi) = (spec.threshold("slope_min")?, spec.threshold("slope_max")?);
        report.check(
            "residual_order",
            f.value >= lo && f.value <= hi,
            format!("log-log slope of the residual against h/ε_h = {:.4} (window [{lo}, {hi}])", f.value),
        );
        Ok(report)
    })())
}

fn wunsch_subprincipal(spec: &ScenarioSpec, model: &HamiltonianModel) -> std::result::Result<SweepReport, LabError> {
    let eps_exp = match &spec.state {
        StateSpec::Wunsch { eps_exponent } => *eps_exponent,
        _ => return Err(finish::<()>(spec, Err(Error::Parameter("wunsch_subprincipal needs a Wunsch state".into()))).unwrap_err()),
    };
    let potential = wunsch_potential();
    let mut report = sweep(
        spec,
        &["residual", "h4", "horizon", "inverse_h", "x2_moment_ratio", "potential_truncation"],
        &mut |_, h, _| {
            let w = wunsch_quasimode(h, eps_exp)?;
            let coupling = h.powf(2.0 - 2.0 * eps_exp);
            let e = 1.0 + h.powf(2.0 - eps_exp);
            let r = quasimode_residual_with_potential(&w.state, model, &potential, coupling, e);
            let target = spec.constant("horizon_target")?;
            Ok(vec![
                r,
                h.powi(4),
                stability_horizon(r, h, target),
                1.0 / h,
                w.x2_second_moment() / (0.5 * h.powf(eps_exp)),
                potential.truncation,
            ])
        },
    )?;
    finish(spec, (|| {
        let power = spec.threshold("residual_power")?;
        let from = spec.constant("horizon_from_j")? as u32;
        let ir = report.column_index("residual")?;
        let ih = report.column_index("horizon")?;
        let bad: Vec<u32> = report.rows.iter().filter(|r| r.values[ir] > r.h.powf(power)).map(|r| r.j).collect();
        let residuals: Vec<f64> = report.rows.iter().map(|r| r.values[ir]).collect();
        report.check("residual_below_h4", bad.is_empty(), format!("residuals {}; above h^{power} at j = {bad:?}", list(&residuals)));
        let short: Vec<u32> =
            report.rows.iter().filter(|r| r.j >= from && r.values[ih] <= 1.0 / r.h).map(|r| r.j).collect();
        report.check("horizon_beyond_inverse_h", short.is_empty(), format!("horizon <= 1/h at j = {short:?}"));
        Ok(report)
    })())
}

/// Eigenspace-diagonal coefficients and the cross-term bound for each mode.
fn hierarchy_terms(
    u: &FourierState,
    model: &HamiltonianModel,
    tau: f64,
    spec: &ScenarioSpec,
    modes: &[Vec<i64>],
) -> Result<(Vec<C64>, Vec<f64>)> {
    let dec = eigenspace_decompose(u, model, 1e-9)?;
    let mut diag = vec![C64::new(0.0, 0.0); modes.len()];
    for g in &dec.groups {
        let part = g.state.scaled(dec.norm * g.weight.sqrt());
        let r = density_modes(&part, modes)?;
        for (d, c) in diag.iter_mut().zip(&r.coeffs) {
            *d += c;
        }
    }
    let energies = Energies::new(u, model);
    let index = u.index();
    let mut sorted = modes.to_vec();
    sorted.sort();
    let bounds = sorted
        .iter()
        .map(|m| {
            let mut b = 0.0;
            for (j, (k, a)) in u.iter().enumerate() {
                if let Some(i) = index.get_shifted(k, m) {
                    let w = tau * energies.rate_diff(i, j);
                    if w != 0.0 {
                        b += u.amp(i).norm() * a.norm() * spec.window.decay_bound(w);
                    }
                }
            }
            b * unit(u.dim())
        })
        .collect();
    Ok((diag, bounds))
}

fn hierarchy_average(spec: &ScenarioSpec, model: &HamiltonianModel) -> std::result::Result<SweepReport, LabError> {
    let factor = spec.constant("tau_factor").map_err(|e| finish::<()>(spec, Err(e)).unwrap_err())?;
    let radius = spec.constant("ball_radius").map_err(|e| finish::<()>(spec, Err(e)).unwrap_err())?;
    let u0 = unit(2);
    let mut report = sweep(
        spec,
        &["tau_spacing", "tau", "groups", "max_defect", "max_bound", "bound_slack", "mass_defect"],
        &mut |_, h, _| {
            let u = build_state(spec, h)?;
            let window = Window::Ball { center: vec![0.0, 0.0], radius };
            let tau_h = spacing_scale(model, h, &window)?.tau;
            let tau = factor * tau_h;
            let modes = difference_set(&u);
            let avg = time_averaged_density(&u, model, tau, &spec.window, &modes)?;
            let (diag, bounds) = hierarchy_terms(&u, model, tau, spec, &avg.modes)?;
            let groups = eigenspace_decompose(&u, model, 1e-9)?.groups.len() as f64;
            let mut max_defect: f64 = 0.0;
            let mut max_bound: f64 = 0.0;
            let mut slack = f64::INFINITY;
            for ((c, d), b) in avg.coeffs.iter().zip(&diag).zip(&bounds) {
                let defect = (c - d).norm();
                max_defect = max_defect.max(defect);
                max_bound = max_bound.max(*b);
                slack = slack.min(b - defect);
            }
            Ok(vec![tau_h, tau, groups, max_defect / u0, max_bound / u0, slack / u0, mass_defect(&avg, &u)])
        },
    )?;
    finish(spec, (|| {
        let slack = report.column("bound_slack")?;
        let worst = slack.iter().cloned().fold(f64::INFINITY, f64::min);
        report.check("cross_term_bound", worst >= -1e-15, format!("min over rows and modes of (bound − defect)/(2π)^-2 = {worst:.3e}"));
        let gate = spec.threshold("defect_max")?;
        let last = *report.column("max_defect")?.last().expect("nonempty ladder");
        report.check("defect_small", last <= gate, format!("max |avg c_m − diagonal c_m|/(2π)^-2 = {last:.3e} at j = {} (gate {gate})", spec.ladder.jmax));
        mass_check(&mut report, spec)?;
        Ok(report)
    })())
}

/// `∫ a ν` for a position symbol and density coefficients.
fn integrate(a: &Symbol, density: &DensityReport) -> C64 {
    let d = a.dim();
    let s = (2.0 * PI).powf(d as f64 / 2.0);
    a.modes()
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let neg: Vec<i64> = m.iter().map(|x| -x).collect();
            a.coefficient(i, &vec![0.0; d]) * density.coefficient(&neg)
        })
        .sum::<C64>()
        * s
}

fn resonant_transport(spec: &ScenarioSpec, model: &HamiltonianModel) -> std::result::Result<SweepReport, LabError> {
    let a = finish(spec, spec.symbol.as_ref().ok_or_else(|| Error::Parameter("resonant_transport needs a symbol".into())).and_then(|s| s.build(2)))?;
    let xi0 = match &spec.state {
        StateSpec::Packet { xi0, .. } => xi0.clone(),
        _ => return Err(finish::<()>(spec, Err(Error::Parameter("resonant_transport needs a packet".into()))).unwrap_err()),
    };
    let module = finish(spec, classify_momentum(model, &xi0))?.module;
    let projected = averaged_symbol(&a, &module);
    let mut report = sweep(spec, &["averaged_pairing", "orbit_pairing", "defect", "bound", "projection_gap", "mass_defect"], &mut |_, h, _| {
        let u = build_state(spec, h)?;
        let tau = spec.time_scale.value(h);
        let neg: Vec<Vec<i64>> = a.modes().iter().map(|m| m.iter().map(|x| -x).collect()).collect();
        let avg = time_averaged_density(&u, model, tau, &spec.window, &neg)?;
        let now = density_modes(&u, &neg)?;
        let lhs = integrate(&a, &avg);
        let rhs = integrate(&projected, &now);
        let via_pair = weyl_pair(&u, &projected)?;
        let energies_free = &spec.window;
        let omega = model.gradient(&[0.0, 0.0]);
        let mut bound = 0.0;
        for (i, m) in a.modes().iter().enumerate() {
            if module.contains_i64(m) {
                continue;
            }
            let neg_m: Vec<i64> = m.iter().map(|x| -x).collect();
            let w = tau * m.iter().zip(&omega).map(|(x, o)| *x as f64 * o).sum::<f64>();
            bound += a.coefficient(i, &[0.0, 0.0]).norm() * now.coefficient(&neg_m).norm() * energies_free.decay_bound(w);
        }
        bound *= 2.0 * PI;
        Ok(vec![lhs.re, rhs.re, (lhs - rhs).norm(), bound, (via_pair - rhs).norm(), mass_defect(&avg, &u).min(mass_defect(&now, &u))])
    })?;
    finish(spec, (|| {
        let defect = report.column("defect")?;
        let bound = report.column("bound")?;
        let gap = report.column("projection_gap")?.into_iter().fold(0.0, f64::max);
        let ok = defect.iter().zip(&bound).all(|(d, b)| *d <= b * (1.0 + 1e-12) + 1e-15);
        report.check("defect_bound", ok, format!("defects {} against bounds {}", list(&defect), list(&bound)));
        let f = report.fit("defect", "h", FitKind::LoglogSlope)?;
        report.check("defect_vanishes", f.value > 0.0, format!("log-log slope of the defect against h = {:.3}", f.value));
        report.check("projection_identity", gap <= 1e-12, format!("max |weyl_pair(u, ⟨a⟩) − ∫⟨a⟩ν| = {gap:.3e}"));
        Ok(report)
    })())
}

fn diagonal_concentration(spec: &ScenarioSpec, model: &HamiltonianModel) -> std::result::Result<SweepReport, LabError> {
    let factor = spec.constant("band_factor").map_err(|e| finish::<()>(spec, Err(e)).unwrap_err())?;
    let grid_radius = spec.constants.get("grid_radius").copied().unwrap_or(64.0) as i64;
    let mut report = sweep(spec, &["residual", "band_halfwidth", "band_mass", "mass_defect"], &mut |j, h, artifacts| {
        let u = build_state(spec, h)?;
        let residual = quasimode_residual(&u, model, 0.0);
        let b = factor * h * 2.0 * PI;
        let mass = strip_mass(&u, &[1, -1], b.min(PI))?;
        let r = density_modes(&u, &[vec![0, 0]])?;
        if j == spec.ladder.jmax && grid_radius > 0 {
            artifacts.push(grid_artifact(format!("density_j{j}"), density_modes(&u, &mode_box(2, grid_radius))?)?);
        }
        Ok(vec![residual, b, mass, mass_defect(&r, &u)])
    })?;
    finish(spec, (|| {
        let rmax = spec.threshold("residual_max")?;
        let worst = report.column("residual")?.into_iter().fold(0.0, f64::max);
        report.check("exact_eigenfunction", worst <= rmax, format!("max residual {worst:.3e} (gate {rmax:.0e})"));
        let gate = spec.threshold("band_mass_min")?;
        let at = spec.constant("band_check_j").map(|x| x as u32).unwrap_or(spec.ladder.jmax);
        let m = report.value(at, "band_mass")?;
        report.check("band_mass", m > gate, format!("mass within |x1 − x2| <= {}·2^-j·2π at j = {at}: {m:.6} (gate {gate})", spec.constant("band_factor")?));
        mass_check(&mut report, spec)?;
        Ok(report)
    })())
}

/// `max_x |a(x, ξ₀)|` on a 64² grid.
pub fn symbol_peak(a: &Symbol, xi0: &[f64]) -> f64 {
    let n = 64;
    let mut best: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let x = [2.0 * PI * i as f64 / n as f64, 2.0 * PI * j as f64 / n as f64];
            best = best.max(a.evaluate(&x, xi0).norm());
        }
    }
    best
}

fn two_microlocal_consistency(spec: &ScenarioSpec, model: &HamiltonianModel) -> std::result::Result<SweepReport, LabError> {
    let pre = (|| -> Result<_> {
        if spec.time_scale.coef != 1.0 || spec.time_scale.exponent != 1.0 {
            return Err(Error::Parameter("two_microlocal_consistency runs at the critical scale τ = 1/h".into()));
        }
        let xi0 = match &spec.state {
            StateSpec::FibredPacket { xi0, .. } => xi0.clone(),
            _ => return Err(Error::Parameter("two_microlocal_consistency needs a fibred packet".into())),
        };
        let module = classify_momentum(model, &xi0)?.module;
        let frame = TwoMicrolocalFrame::new(model, module.clone(), xi0.clone(), spec.constant("frame_radius")?)?;
        let a = spec.symbol.as_ref().ok_or_else(|| Error::Parameter("missing symbol".into()))?.build(2)?;
        let lifted = TwoMicrolocalSymbol::from_symbol(module, &a)?;
        let split = spec.split.clone().ok_or_else(|| Error::Parameter("missing split ladder".into()))?;
        Ok((xi0, frame, a, lifted, split))
    })();
    let (xi0, frame, a, lifted, split) = finish(spec, pre)?;
    let peak = symbol_peak(&a, &xi0.to_f64());
    let mut report = sweep(
        spec,
        &["defect_t0", "defect_t", "direct_t_re", "direct_t_im", "max_a", "split_sum_defect", "propagation_defect"],
        &mut |_, h, _| {
            let u = build_state(spec, h)?;
            let tau = spec.time_scale.value(h);
            let r = spec.constant("r")?;
            let t = spec.constant("t")?;
            let c0 = conjugated_evolution_check(&u, &a, &frame, model, tau, 0.0, r)?;
            let c1 = conjugated_evolution_check(&u, &a, &frame, model, tau, t, r)?;
            let mut sum_defect: f64 = 0.0;
            for &rr in &split.r {
                for &dd in &split.delta {
                    let [full, conc, spread, far] = two_scale_parts(&u, &lifted, &frame, model, tau, t, SplitParams::new(rr, dd)?)?;
                    sum_defect = sum_defect.max((conc + spread + far - full).norm());
                }
            }
            let prop = propagation_defect(&u, &lifted, &frame, model, tau, t, r)?;
            Ok(vec![c0.defect, c1.defect, c1.direct.re, c1.direct.im, peak, sum_defect, prop])
        },
    )?;
    finish(spec, (|| {
        let d1 = report.column("defect_t")?;
        let gate = spec.threshold("defect_ratio_max")?;
        let last = *d1.last().expect("nonempty ladder");
        report.check("defect_decreasing", is_decreasing(&d1), format!("defects at t = {}: {}", spec.constant("t")?, list(&d1)));
        report.check("defect_small", last <= gate * peak, format!("defect {last:.3e} against {gate}·max|a| = {:.3e}", gate * peak));
        let f = report.fit("defect_t0", "h", FitKind::LoglogSlope)?;
        let smin = spec.threshold("t0_slope_min")?;
        report.check("t0_order_h", f.value >= smin, format!("log-log slope of the t = 0 defect against h = {:.3} (gate {smin})", f.value));
        let sums = report.column("split_sum_defect")?.into_iter().fold(0.0, f64::max);
        report.check("split_sum_rule", sums <= 1e-12, format!("max |a1 + a2 + a3 − a| pairing defect {sums:.3e}"));
        Ok(report)
    })())
}

/// Module `span{(0,1)}` used by several checks.
pub fn vertical_module() -> PrimitiveModule {
    PrimitiveModule::span_i64(2, Space::Dual, &[&[0, 1]]).expect("primitive generator")
}

/// `ξ₀ = (1, 0)`.
pub fn unit_momentum() -> RationalVector {
    RationalVector::from_i64(&[1, 0])
}
