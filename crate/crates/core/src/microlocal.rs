//! Finite-`h` two-microlocal functionals around a resonant momentum `ξ₀`.
//!
//! Symbols `a(x, ξ, η)` carry modes in a primitive module `Λ` and are paired
//! through `Op_h(a(x, ξ, τη(ξ)))`, with `ξ = σ(ξ) + η(ξ)` the frame splitting.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::sci;
use crate::hamiltonian::{f_coordinates, solve_split, HamiltonianModel, TwoMicrolocalFrame};
use crate::lattice::{fractional_part, PrimitiveModule};
use crate::profile::Plateau;
use crate::propagator::evolve;
use crate::state::FourierState;
use crate::wigner::Symbol;

/// `χ(η) = ψ(|η|)`: 1 on `|η| ≤ 1/2`, 0 on `|η| ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffProfile {
    pub plateau: Plateau,
}

impl Default for CutoffProfile {
    fn default() -> Self {
        Self { plateau: Plateau { inner: 0.5, outer: 1.0 } }
    }
}

impl CutoffProfile {
    pub fn at(&self, eta: &[f64]) -> f64 {
        self.plateau.radial(eta)
    }

    /// `χ(η/s)`.
    pub fn scaled(&self, eta: &[f64], s: f64) -> f64 {
        self.plateau.at(norm(eta) / s)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot_i(m: &[i64], v: &[f64]) -> f64 {
    m.iter().zip(v).map(|(a, b)| *a as f64 * b).sum()
}

/// Everything a coefficient may depend on at one phase-space point.
#[derive(Clone, Debug)]
pub struct EvalPoint {
    pub xi: Vec<f64>,
    /// Second-scale variable, `τη(ξ)` inside pairings.
    pub eta: Vec<f64>,
    pub sigma: Vec<f64>,
    /// `η(ξ) = ξ − σ(ξ)`.
    pub eta_of_xi: Vec<f64>,
    /// `dH(ξ)`.
    pub grad: Vec<f64>,
    /// `d²H(σ(ξ))`.
    pub hess_sigma: DMatrix<f64>,
}

impl EvalPoint {
    /// Point `(ξ, η)` with the frame splitting of `ξ`; `ξ` must lie in `B(ξ₀, ε/2)`.
    pub fn new(frame: &TwoMicrolocalFrame, model: &HamiltonianModel, xi: &[f64], eta: &[f64]) -> Result<Self> {
        let split = f_coordinates(frame, model, xi)?;
        Ok(Self {
            xi: xi.to_vec(),
            eta: eta.to_vec(),
            grad: model.gradient(xi),
            hess_sigma: model.hessian(&split.sigma),
            sigma: split.sigma,
            eta_of_xi: split.eta,
        })
    }

    fn hess_eta(&self) -> Vec<f64> {
        let v = &self.hess_sigma * DVector::from_column_slice(&self.eta);
        v.iter().copied().collect()
    }
}

pub type Coeff2Fn = Arc<dyn Fn(&[f64], &[f64]) -> C64 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitParams {
    pub chi: CutoffProfile,
    pub r: f64,
    pub delta: f64,
}

impl SplitParams {
    pub fn new(r: f64, delta: f64) -> Result<Self> {
        if !(r > 1.0) || !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Parameter(format!("split needs R > 1 and 0 < δ < 1, got R = {r}, δ = {delta}")));
        }
        Ok(Self { chi: CutoffProfile::default(), r, delta })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "part", rename_all = "snake_case")]
pub enum Part {
    Full,
    /// `a χ(η/R)`.
    Concentrating(SplitParams),
    /// `a (1 − χ(η/R)) χ(η(ξ)/δ)`.
    Spreading(SplitParams),
    /// `a (1 − χ(η/R)) (1 − χ(η(ξ)/δ))`.
    Far(SplitParams),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "flow", content = "time", rename_all = "snake_case")]
pub enum Flow {
    /// `(x + s dH(ξ), ξ, η)`.
    Phi0(f64),
    /// `(x + s d²H(σ(ξ)) η/|η|, ξ, η)`.
    Phi1(f64),
    /// `(x + t d²H(σ(ξ)) η, ξ, η)`.
    Phi1Tilde(f64),
}

#[derive(Clone, Copy, Debug)]
enum Factor {
    Split(Part),
    Flow(Flow),
}

impl Factor {
    fn value(&self, m: &[i64], p: &EvalPoint) -> C64 {
        match *self {
            Factor::Split(part) => C64::new(split_weight(part, p), 0.0),
            Factor::Flow(Flow::Phi0(s)) => C64::from_polar(1.0, s * dot_i(m, &p.grad)),
            Factor::Flow(Flow::Phi1(s)) => {
                let n = norm(&p.eta);
                if n == 0.0 {
                    return C64::new(1.0, 0.0);
                }
                C64::from_polar(1.0, s * dot_i(m, &p.hess_eta()) / n)
            }
            Factor::Flow(Flow::Phi1Tilde(t)) => C64::from_polar(1.0, t * dot_i(m, &p.hess_eta())),
        }
    }
}

fn split_weight(part: Part, p: &EvalPoint) -> f64 {
    match part {
        Part::Full => 1.0,
        Part::Concentrating(sp) => sp.chi.scaled(&p.eta, sp.r),
        Part::Spreading(sp) => (1.0 - sp.chi.scaled(&p.eta, sp.r)) * sp.chi.scaled(&p.eta_of_xi, sp.delta),
        Part::Far(sp) => (1.0 - sp.chi.scaled(&p.eta, sp.r)) * (1.0 - sp.chi.scaled(&p.eta_of_xi, sp.delta)),
    }
}

/// A symbol of the class `S¹_Λ`: modes in `Λ`, coefficients `â_m(ξ, η)`
/// homogeneous of degree zero in `η` beyond `hom_radius`.
#[derive(Clone)]
pub struct TwoMicrolocalSymbol {
    module: PrimitiveModule,
    modes: Vec<Vec<i64>>,
    base: Vec<Coeff2Fn>,
    hom: Option<Vec<Coeff2Fn>>,
    pub hom_radius: f64,
    /// Declared lower bound of `|η|` on the support.
    pub eta_inner: f64,
    factors: Vec<Factor>,
}

impl fmt::Debug for TwoMicrolocalSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TwoMicrolocalSymbol")
            .field("module", &self.module)
            .field("modes", &self.modes)
            .field("hom_radius", &self.hom_radius)
            .field("eta_inner", &self.eta_inner)
            .field("factors", &self.factors)
            .finish()
    }
}

impl TwoMicrolocalSymbol {
    pub fn new(
        module: PrimitiveModule,
        entries: Vec<(Vec<i64>, Coeff2Fn)>,
        hom_radius: f64,
        hom: Option<Vec<Coeff2Fn>>,
    ) -> Result<Self> {
        let mut order: Vec<usize> = (0..entries.len()).collect();
        order.sort_by(|&a, &b| entries[a].0.cmp(&entries[b].0));
        if order.windows(2).any(|w| entries[w[0]].0 == entries[w[1]].0) {
            return Err(Error::Parameter("duplicate symbol mode".into()));
        }
        if let Some(m) = entries.iter().find(|e| !module.contains_i64(&e.0)) {
            return Err(Error::Parameter(format!("symbol mode {:?} is not in Λ = {}", m.0, module)));
        }
        if let Some(h) = &hom {
            if h.len() != entries.len() {
                return Err(Error::Parameter("one homogeneous evaluator per mode is required".into()));
            }
        }
        let modes = order.iter().map(|&i| entries[i].0.clone()).collect();
        let base = order.iter().map(|&i| entries[i].1.clone()).collect();
        let hom = hom.map(|h| order.iter().map(|&i| h[i].clone()).collect());
        Ok(Self { module, modes, base, hom, hom_radius, eta_inner: 0.0, factors: Vec::new() })
    }

    /// Lifts an `η`-independent symbol; its modes must lie in `module`.
    pub fn from_symbol(module: PrimitiveModule, a: &Symbol) -> Result<Self> {
        let entries = a
            .modes()
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let f = a.coefficient_fn(i).clone();
                (m.clone(), Arc::new(move |xi: &[f64], _: &[f64]| f(xi)) as Coeff2Fn)
            })
            .collect::<Vec<_>>();
        let hom = entries.iter().map(|e| e.1.clone()).collect();
        Self::new(module, entries, 0.0, Some(hom))
    }

    pub fn with_eta_inner(mut self, r0: f64) -> Self {
        self.eta_inner = r0;
        self
    }

    pub fn module(&self) -> &PrimitiveModule {
        &self.module
    }

    pub fn modes(&self) -> &[Vec<i64>] {
        &self.modes
    }

    pub fn dim(&self) -> usize {
        self.module.dim()
    }

    /// `â_m` at a point, including split weights and flow phases.
    pub fn coefficient(&self, i: usize, p: &EvalPoint) -> C64 {
        let mut v = (self.base[i])(&p.xi, &p.eta);
        for f in &self.factors {
            if v == C64::zero() {
                break;
            }
            v *= f.value(&self.modes[i], p);
        }
        v
    }

    /// `a(x, ξ, η)`.
    pub fn evaluate(&self, x: &[f64], p: &EvalPoint) -> C64 {
        let scale = (2.0 * PI).powf(-(self.dim() as f64) / 2.0);
        (0..self.modes.len())
            .map(|i| self.coefficient(i, p) * C64::from_polar(1.0, dot_i(&self.modes[i], x)))
            .sum::<C64>()
            * scale
    }

    /// Largest `|â_m(ξ, η) − â_m^hom(ξ, η/|η|)|` over samples with `|η| > R₀`.
    pub fn homogeneity_defect(&self, samples: &[EvalPoint]) -> f64 {
        let Some(hom) = &self.hom else { return 0.0 };
        let mut worst: f64 = 0.0;
        for p in samples {
            let n = norm(&p.eta);
            if n <= self.hom_radius {
                continue;
            }
            let mut q = p.clone();
            q.eta = p.eta.iter().map(|x| x / n).collect();
            for i in 0..self.modes.len() {
                let mut v = (hom[i])(&q.xi, &q.eta);
                for f in &self.factors {
                    // The cutoff weights and φ¹ see the point itself, not its projection.
                    v *= f.value(&self.modes[i], p);
                }
                worst = worst.max((self.coefficient(i, p) - v).norm());
            }
        }
        worst
    }

    fn with_factor(&self, f: Factor) -> Self {
        let mut out = self.clone();
        out.factors.push(f);
        out
    }
}

/// `(a₁, a₂, a₃)`: far, spreading and concentrating parts.
pub fn split_symbol(
    a: &TwoMicrolocalSymbol,
    params: SplitParams,
) -> (TwoMicrolocalSymbol, TwoMicrolocalSymbol, TwoMicrolocalSymbol) {
    let inner = a.eta_inner.max(params.r * params.chi.plateau.inner);
    let a1 = a.with_factor(Factor::Split(Part::Far(params))).with_eta_inner(inner);
    let a2 = a.with_factor(Factor::Split(Part::Spreading(params))).with_eta_inner(inner);
    let a3 = a.with_factor(Factor::Split(Part::Concentrating(params)));
    (a1, a2, a3)
}

pub fn select_part(a: &TwoMicrolocalSymbol, part: Part) -> TwoMicrolocalSymbol {
    match part {
        Part::Full => a.clone(),
        Part::Concentrating(p) => split_symbol(a, p).2,
        Part::Spreading(p) => split_symbol(a, p).1,
        Part::Far(p) => split_symbol(a, p).0,
    }
}

/// Composition with one of the affine flows, as a per-mode phase.
pub fn symbol_flow(a: &TwoMicrolocalSymbol, flow: Flow) -> Result<TwoMicrolocalSymbol> {
    if let Flow::Phi1(_) = flow {
        if !(a.eta_inner > 0.0) {
            return Err(Error::FlowDomain("φ¹ needs a symbol vanishing near η = 0".into()));
        }
    }
    Ok(a.with_factor(Factor::Flow(flow)))
}

/// Evaluation points at the Weyl midpoints `ξ̄ = h(k + m/2)` of every pair in the support.
fn pair_points(
    v: &FourierState,
    modes: &[Vec<i64>],
    frame: &TwoMicrolocalFrame,
    model: &HamiltonianModel,
    tau: f64,
) -> Result<Vec<Vec<(usize, usize, EvalPoint)>>> {
    let d = v.dim();
    let h = v.h();
    let index = v.index();
    modes
        .par_iter()
        .map(|m| {
            let mut out = Vec::new();
            for (i, (k, _)) in v.iter().enumerate() {
                if let Some(j) = index.get_shifted(k, m) {
                    let mid: Vec<f64> = (0..d).map(|a| h * (k[a] as f64 + 0.5 * m[a] as f64)).collect();
                    let split = f_coordinates(frame, model, &mid)?;
                    let eta: Vec<f64> = split.eta.iter().map(|x| tau * x).collect();
                    let p = EvalPoint {
                        grad: model.gradient(&mid),
                        hess_sigma: model.hessian(&split.sigma),
                        xi: mid,
                        eta,
                        sigma: split.sigma,
                        eta_of_xi: split.eta,
                    };
                    out.push((i, j, p));
                }
            }
            Ok(out)
        })
        .collect()
}

/// `(2π)^{-d/2} Σ û(k) conj û(k+m) â_m(ξ̄, τη(ξ̄))` over pairs in the support.
fn pair_with(v: &FourierState, a: &TwoMicrolocalSymbol, points: &[Vec<(usize, usize, EvalPoint)>]) -> C64 {
    let parts: Vec<C64> = points
        .par_iter()
        .enumerate()
        .map(|(mi, list)| list.iter().map(|(i, j, p)| v.amp(*i) * v.amp(*j).conj() * a.coefficient(mi, p)).sum::<C64>())
        .collect();
    parts.into_iter().sum::<C64>() * (2.0 * PI).powf(-(v.dim() as f64) / 2.0)
}

fn check_dims(u: &FourierState, a: &TwoMicrolocalSymbol, model: &HamiltonianModel) -> Result<()> {
    if u.dim() != a.dim() || u.dim() != model.dim() {
        return Err(Error::Parameter("state, symbol and model dimensions differ".into()));
    }
    Ok(())
}

/// `⟨Op_h(a_part(x, ξ, τη(ξ))) S^{τt}u, S^{τt}u⟩`.
pub fn two_scale_pair(
    u: &FourierState,
    a: &TwoMicrolocalSymbol,
    frame: &TwoMicrolocalFrame,
    model: &HamiltonianModel,
    tau: f64,
    t: f64,
    part: Part,
) -> Result<C64> {
    check_dims(u, a, model)?;
    let v = evolve(u, model, tau * t);
    let sym = select_part(a, part);
    let points = pair_points(&v, sym.modes(), frame, model, tau)?;
    Ok(pair_with(&v, &sym, &points))
}

/// Full, concentrating, spreading and far pairings from one set of evaluation points.
pub fn two_scale_parts(
    u: &FourierState,
    a: &TwoMicrolocalSymbol,
    frame: &TwoMicrolocalFrame,
    model: &HamiltonianModel,
    tau: f64,
    t: f64,
    params: SplitParams,
) -> Result<[C64; 4]> {
    check_dims(u, a, model)?;
    let v = evolve(u, model, tau * t);
    let points = pair_points(&v, a.modes(), frame, model, tau)?;
    let (a1, a2, a3) = split_symbol(a, params);
    Ok([pair_with(&v, a, &points), pair_with(&v, &a3, &points), pair_with(&v, &a2, &points), pair_with(&v, &a1, &points)])
}

/// `|⟨w_R(t), a⟩ − ⟨w_R(0), a∘φ̃¹_t⟩|` for the concentrating functional `w_R`.
pub fn propagation_defect(
    u: &FourierState,
    a: &TwoMicrolocalSymbol,
    frame: &TwoMicrolocalFrame,
    model: &HamiltonianModel,
    tau: f64,
    t: f64,
    r: f64,
) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let part = Part::Concentrating(SplitParams::new(r, 0.5)?);
    let later = two_scale_pair(u, a, frame, model, tau, t, part)?;
    let moved = symbol_flow(a, Flow::Phi1Tilde(t))?;
    let now = two_scale_pair(u, &moved, frame, model, tau, 0.0, part)?;
    Ok((later - now).norm())
}

/// One fibre `U_h f(σ, ·)`, indexed by the class of `k` in `Z^d/Λ`.
#[derive(Clone, Debug)]
pub struct UhMember {
    pub label: Vec<i64>,
    pub sigma: Vec<f64>,
    /// `{σ^α/h}`.
    pub shift: Vec<f64>,
    /// Output modes in `Λ`, lexicographic.
    pub modes: Vec<(Vec<i64>, C64)>,
}

impl UhMember {
    pub fn coefficient(&self, v: &[i64]) -> C64 {
        match self.modes.binary_search_by(|e| e.0.as_slice().cmp(v)) {
            Ok(i) => self.modes[i].1,
            Err(_) => C64::zero(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct UhFamily {
    pub h: f64,
    pub module: PrimitiveModule,
    pub members: Vec<UhMember>,
    /// Largest distance of a computed output mode from its integer rounding.
    pub max_miss: f64,
}

/// Integrality gate for output modes.
const INTEGRALITY_TOL: f64 = 1e-6;

impl UhFamily {
    pub fn mass(&self) -> f64 {
        self.members.iter().flat_map(|m| m.modes.iter()).map(|(_, c)| c.norm_sqr()).sum()
    }

    /// JSON array of `{"sigma":[…],"modes":[{"eta":[…],"re":…,"im":…}]}`, sorted by `σ` then mode.
    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        let mut order: Vec<&UhMember> = self.members.iter().collect();
        order.sort_by(|a, b| {
            a.sigma.iter().zip(&b.sigma).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
        });
        writeln!(w, "[")?;
        for (n, m) in order.iter().enumerate() {
            let sigma: Vec<String> = m.sigma.iter().map(|x| sci(*x)).collect();
            let modes: Vec<String> = m
                .modes
                .iter()
                .map(|(v, c)| {
                    let vs: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                    format!("{{\"eta\":[{}],\"re\":{},\"im\":{}}}", vs.join(","), sci(c.re), sci(c.im))
                })
                .collect();
            let sep = if n + 1 < order.len() { "," } else { "" };
            writeln!(w, "{{\"sigma\":[{}],\"modes\":[{}]}}{sep}", sigma.join(","), modes.join(","))?;
        }
        writeln!(w, "]")?;
        Ok(())
    }
}

/// `U_h f`: the coefficient `b(hk) f̂(k)` of every `hk ∈ B(ξ₀, ε)` is moved to
/// mode `η/h + {σ^α/h} ∈ Λ` of the fibre over `σ`, where `hk = σ + η`.
pub fn uh_transform(f: &FourierState, frame: &TwoMicrolocalFrame, model: &HamiltonianModel) -> Result<UhFamily> {
    let d = f.dim();
    if d != model.dim() || d != frame.module().dim() {
        return Err(Error::Parameter("state, frame and model dimensions differ".into()));
    }
    let h = f.h();
    let module = frame.module().clone();
    let mut members: BTreeMap<Vec<i64>, UhMember> = BTreeMap::new();
    let mut max_miss: f64 = 0.0;
    for (k, amp) in f.iter() {
        let xi: Vec<f64> = k.iter().map(|&x| h * x as f64).collect();
        let b = frame.cutoff(&xi);
        if b == 0.0 {
            continue;
        }
        let label = frame.coset_label(k);
        if !members.contains_key(&label) {
            let split = solve_split(model, frame.basis(), &xi)?;
            let sa: Vec<f64> = frame.sigma_alpha(&split.sigma).iter().map(|x| x / h).collect();
            let shift = fractional_part(&sa, &module)?.frac;
            members.insert(label.clone(), UhMember { label: label.clone(), sigma: split.sigma, shift, modes: Vec::new() });
        }
        let member = members.get_mut(&label).expect("inserted above");
        let raw: Vec<f64> =
            (0..d).map(|a| k[a] as f64 - member.sigma[a] / h + member.shift[a]).collect();
        let rounded: Vec<i64> = raw.iter().map(|x| x.round() as i64).collect();
        let miss = raw.iter().zip(&rounded).map(|(x, r)| (x - *r as f64).abs()).fold(0.0, f64::max);
        if miss > INTEGRALITY_TOL {
            return Err(Error::Integrality { miss });
        }
        if !module.contains_i64(&rounded) {
            return Err(Error::Integrality { miss: f64::INFINITY });
        }
        max_miss = max_miss.max(miss);
        member.modes.push((rounded, amp * b));
    }
    let members = members
        .into_values()
        .map(|mut m| {
            m.modes.sort_by(|a, b| a.0.cmp(&b.0));
            let mut merged: Vec<(Vec<i64>, C64)> = Vec::with_capacity(m.modes.len());
            for (v, c) in m.modes {
                match merged.last_mut() {
                    Some(last) if last.0 == v => last.1 += c,
                    _ => merged.push((v, c)),
                }
            }
            m.modes = merged;
            m
        })
        .collect();
    Ok(UhFamily { h, module, members, max_miss })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConjugatedCheck {
    pub direct: C64,
    pub conjugated: C64,
    pub defect: f64,
}

/// Compares the concentrating pairing of the evolved state with the fibrewise
/// evolution `e^{−itA(σ, D_y)}`, `A(σ, υ) = ½ d²H(σ)υ·υ`, of `U_h u`.
pub fn conjugated_evolution_check(
    u: &FourierState,
    a: &Symbol,
    frame: &TwoMicrolocalFrame,
    model: &HamiltonianModel,
    tau: f64,
    t: f64,
    r: f64,
) -> Result<ConjugatedCheck> {
    let h = u.h();
    if (tau * h - 1.0).abs() > 1e-12 {
        return Err(Error::Parameter(format!("conjugated evolution needs τ = 1/h, got τh = {}", tau * h)));
    }
    let module = frame.module().clone();
    let lifted = TwoMicrolocalSymbol::from_symbol(module, a)?;
    let chi = CutoffProfile::default();
    let direct = two_scale_pair(u, &lifted, frame, model, tau, t, Part::Concentrating(SplitParams::new(r, 0.5)?))?;

    let family = uh_transform(u, frame, model)?;
    let d = u.dim();
    let per_member: Vec<C64> = family
        .members
        .par_iter()
        .map(|mem| {
            let hess = model.hessian(&mem.sigma);
            let evolved: Vec<(Vec<i64>, C64)> = mem
                .modes
                .iter()
                .map(|(v, c)| {
                    let y = DVector::from_iterator(d, (0..d).map(|i| v[i] as f64 - mem.shift[i]));
                    let phase = -t * 0.5 * y.dot(&(&hess * &y));
                    (v.clone(), c * C64::from_polar(1.0, phase))
                })
                .collect();
            let fibre = UhMember { modes: evolved, ..mem.clone() };
            let mut acc = C64::zero();
            for (mi, m) in a.modes().iter().enumerate() {
                let am = a.coefficient(mi, &mem.sigma);
                if am == C64::zero() {
                    continue;
                }
                for (v, c) in &fibre.modes {
                    let w: Vec<i64> = v.iter().zip(m).map(|(x, y)| x + y).collect();
                    let cw = fibre.coefficient(&w);
                    if cw == C64::zero() {
                        continue;
                    }
                    let mid: Vec<f64> = (0..d).map(|i| 0.5 * (v[i] + w[i]) as f64 - mem.shift[i]).collect();
                    acc += am * chi.scaled(&mid, r) * c * cw.conj();
                }
            }
            acc
        })
        .collect();
    let conjugated = per_member.into_iter().sum::<C64>() * (2.0 * PI).powf(-(d as f64) / 2.0);
    Ok(ConjugatedCheck { direct, conjugated, defect: (direct - conjugated).norm() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{RationalVector, Space};
    use crate::state::spectral_superposition;

    fn frame() -> (HamiltonianModel, TwoMicrolocalFrame) {
        let model = HamiltonianModel::laplacian(2);
        let module = PrimitiveModule::span_i64(2, Space::Dual, &[&[0, 1]]).unwrap();
        let f = TwoMicrolocalFrame::new(&model, module, RationalVector::from_i64(&[1, 0]), 0.5).unwrap();
        (model, f)
    }

    fn sample_symbol(module: &PrimitiveModule) -> TwoMicrolocalSymbol {
        TwoMicrolocalSymbol::new(
            module.clone(),
            vec![
                (vec![0, 0], Arc::new(|xi: &[f64], eta: &[f64]| C64::new(1.0 + xi[1] + eta[1].tanh(), 0.0)) as Coeff2Fn),
                (vec![0, 1], Arc::new(|_: &[f64], eta: &[f64]| C64::new(0.5, eta[1].sin())) as Coeff2Fn),
            ],
            1.0,
            None,
        )
        .unwrap()
    }

    #[test]
    fn cutoff_profile_shape() {
        let chi = CutoffProfile::default();
        assert_eq!(chi.at(&[0.3, 0.3]), 1.0);
        assert_eq!(chi.at(&[1.0, 0.0]), 0.0);
        assert!((chi.at(&[0.75, 0.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn modes_must_lie_in_module() {
        let (_, f) = frame();
        let bad = TwoMicrolocalSymbol::new(
            f.module().clone(),
            vec![(vec![1, 0], Arc::new(|_: &[f64], _: &[f64]| C64::new(1.0, 0.0)) as Coeff2Fn)],
            1.0,
            None,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn split_identity_and_limits() {
        let (model, f) = frame();
        let a = sample_symbol(f.module());
        let params = SplitParams::new(2.0, 0.25).unwrap();
        let (a1, a2, a3) = split_symbol(&a, params);
        for eta in [vec![0.0, 0.0], vec![0.0, 1.3], vec![0.0, 5.0], vec![0.3, -1.7]] {
            let p = EvalPoint::new(&f, &model, &[1.05, 0.1], &eta).unwrap();
            for i in 0..2 {
                let sum = a1.coefficient(i, &p) + a2.coefficient(i, &p) + a3.coefficient(i, &p);
                assert!((sum - a.coefficient(i, &p)).norm() < 1e-14);
            }
            if eta == [0.0, 0.0] {
                assert_eq!(a3.coefficient(0, &p), a.coefficient(0, &p));
            }
            if norm(&eta) >= 2.0 {
                assert_eq!(a3.coefficient(1, &p), C64::zero());
            }
        }
    }

    #[test]
    fn phi1_needs_vanishing_near_zero() {
        let (_, f) = frame();
        let a = sample_symbol(f.module());
        assert!(matches!(symbol_flow(&a, Flow::Phi1(1.0)), Err(Error::FlowDomain(_))));
        let (a1, _, _) = split_symbol(&a, SplitParams::new(2.0, 0.5).unwrap());
        assert!(symbol_flow(&a1, Flow::Phi1(1.0)).is_ok());
    }

    #[test]
    fn single_mode_family() {
        let (model, f) = frame();
        let h = 1.0 / 64.0;
        let u = spectral_superposition(h, 2, vec![(vec![64, 3], C64::new(0.6, 0.8))]).unwrap().state;
        let fam = uh_transform(&u, &f, &model).unwrap();
        assert_eq!(fam.members.len(), 1);
        assert_eq!(fam.members[0].modes.len(), 1);
        assert!((fam.members[0].modes[0].1.norm() - 1.0).abs() < 1e-15);
        assert!(f.module().contains_i64(&fam.members[0].modes[0].0));
    }

    #[test]
    fn mass_of_unit_symbol() {
        let (model, f) = frame();
        let h = 1.0 / 64.0;
        let u = spectral_superposition(
            h,
            2,
            vec![(vec![64, 0], C64::new(1.0, 0.0)), (vec![65, 2], C64::new(0.0, 1.0)), (vec![63, -1], C64::new(0.5, 0.5))],
        )
        .unwrap()
        .state;
        let one = TwoMicrolocalSymbol::from_symbol(f.module().clone(), &Symbol::one(2)).unwrap();
        let p = two_scale_pair(&u, &one, &f, &model, 8.0, 0.3, Part::Full).unwrap();
        assert!((p - C64::new(1.0, 0.0)).norm() < 1e-12);
    }
}
