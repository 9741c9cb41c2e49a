//! Fourier-diagonal evolution `e^{-i(t/h)H(hD)}`, spectral grouping, quasimode
//! residuals and the spacing scale `τ^H`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianModel, LatticeForm};
use crate::lattice::rational_to_f64;
use crate::profile::Plateau;
use crate::state::{sampled_coefficients, FourierState};

/// `τ_h = c·h^{−γ}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeScale {
    pub coef: f64,
    pub exponent: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    SubCritical,
    Critical,
    SuperCritical,
}

impl TimeScale {
    pub fn new(coef: f64, exponent: f64) -> Result<Self> {
        if !(coef > 0.0) || !(exponent >= 0.0) {
            return Err(Error::Parameter(format!("time scale needs c > 0 and γ >= 0, got ({coef}, {exponent})")));
        }
        Ok(Self { coef, exponent })
    }

    pub fn critical() -> Self {
        Self { coef: 1.0, exponent: 1.0 }
    }

    pub fn value(&self, h: f64) -> f64 {
        self.coef * h.powf(-self.exponent)
    }

    pub fn regime(&self) -> Regime {
        if self.exponent < 1.0 {
            Regime::SubCritical
        } else if self.exponent == 1.0 {
            Regime::Critical
        } else {
            Regime::SuperCritical
        }
    }
}

/// Energies `H(hk)` on a state's support, exact when the model allows it.
pub enum Energies {
    /// `H(hk) = scale·F(k)` with integer `F`.
    Exact { scale: BigRational, per_h: f64, values: Vec<i128> },
    Float { h: f64, values: Vec<f64> },
}

impl Energies {
    pub fn new(u: &FourierState, model: &HamiltonianModel) -> Self {
        let h = u.h();
        if let (Some(form), Some(hr)) = (model.lattice_form(), BigRational::from_float(h)) {
            let values: Option<Vec<i128>> = u.iter().map(|(k, _)| form.eval(k)).collect();
            if let Some(values) = values {
                let scale = form.scale(&hr);
                let per_h = rational_to_f64(&(&scale / &hr));
                return Energies::Exact { scale, per_h, values };
            }
        }
        let values = (0..u.len()).map(|i| model.value(&u.momentum(i))).collect();
        Energies::Float { h, values }
    }

    pub fn len(&self) -> usize {
        match self {
            Energies::Exact { values, .. } => values.len(),
            Energies::Float { values, .. } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `H(hk_i)/h`.
    pub fn rate(&self, i: usize) -> f64 {
        match self {
            Energies::Exact { per_h, values, .. } => values[i] as f64 * per_h,
            Energies::Float { h, values } => values[i] / h,
        }
    }

    /// `(H(hk_i) − H(hk_j))/h`, with exact integer differences when available.
    pub fn rate_diff(&self, i: usize, j: usize) -> f64 {
        match self {
            Energies::Exact { per_h, values, .. } => (values[i] - values[j]) as f64 * per_h,
            Energies::Float { h, values } => (values[i] - values[j]) / h,
        }
    }

    pub fn value(&self, i: usize) -> f64 {
        match self {
            Energies::Exact { scale, values, .. } => values[i] as f64 * rational_to_f64(scale),
            Energies::Float { values, .. } => values[i],
        }
    }
}

const PAR_THRESHOLD: usize = 1 << 14;

/// Multiplies `û(k)` by `e^{−itH(hk)/h}`; `t = 0` returns the input unchanged.
pub fn evolve(u: &FourierState, model: &HamiltonianModel, t: f64) -> FourierState {
    if t == 0.0 {
        return u.clone();
    }
    let energies = Energies::new(u, model);
    evolve_with(u, &energies, t)
}

pub fn evolve_with(u: &FourierState, energies: &Energies, t: f64) -> FourierState {
    if t == 0.0 {
        return u.clone();
    }
    let phase = |i: usize| C64::from_polar(1.0, -t * energies.rate(i));
    let amps: Vec<C64> = if u.len() >= PAR_THRESHOLD {
        u.amps().par_iter().enumerate().map(|(i, a)| a * phase(i)).collect()
    } else {
        u.amps().iter().enumerate().map(|(i, a)| a * phase(i)).collect()
    };
    u.with_amps(amps)
}

#[derive(Clone, Debug)]
pub struct SpectralGroup {
    pub energy: f64,
    pub exact_energy: Option<BigRational>,
    pub weight: f64,
    /// Normalized projection `P_E u / ‖P_E u‖`.
    pub state: FourierState,
}

#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub groups: Vec<SpectralGroup>,
    pub norm: f64,
}

impl SpectralDecomposition {
    /// `‖u‖ Σ_E √(c^E) v^E`.
    pub fn reconstruct(&self) -> FourierState {
        let first = &self.groups.first().expect("nonempty decomposition").state;
        let mut entries: Vec<(Vec<i64>, C64)> = Vec::new();
        for g in &self.groups {
            let f = self.norm * g.weight.sqrt();
            entries.extend(g.state.iter().map(|(k, a)| (k.to_vec(), a * f)));
        }
        FourierState::new(first.h(), first.dim(), entries).expect("groups are disjoint")
    }
}

/// Groups coefficients by eigenvalue of `H(hD)`: exactly when the model has a
/// lattice form, otherwise by clustering within `tol`.
pub fn eigenspace_decompose(u: &FourierState, model: &HamiltonianModel, tol: f64) -> Result<SpectralDecomposition> {
    let norm_sq = u.norm_sq();
    if norm_sq == 0.0 {
        return Err(Error::Parameter("cannot decompose the zero state".into()));
    }
    let energies = Energies::new(u, model);
    let mut clusters: Vec<(f64, Option<BigRational>, Vec<usize>)> = Vec::new();
    match &energies {
        Energies::Exact { scale, values, .. } => {
            let mut by_value: BTreeMap<i128, Vec<usize>> = BTreeMap::new();
            for (i, &v) in values.iter().enumerate() {
                by_value.entry(v).or_default().push(i);
            }
            for (v, idx) in by_value {
                let exact = scale * BigRational::from_integer(v.into());
                clusters.push((rational_to_f64(&exact), Some(exact), idx));
            }
        }
        Energies::Float { values, .. } => {
            let mut order: Vec<usize> = (0..values.len()).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            let mut current: Vec<usize> = Vec::new();
            let mut last = f64::NEG_INFINITY;
            let mut prev_cluster_end = f64::NEG_INFINITY;
            for i in order {
                let v = values[i];
                if !current.is_empty() && v - last > tol {
                    let gap = v - last;
                    if gap < 10.0 * tol {
                        return Err(Error::ToleranceAmbiguity { gap, tol });
                    }
                    let mean = current.iter().map(|&j| values[j]).sum::<f64>() / current.len() as f64;
                    clusters.push((mean, None, std::mem::take(&mut current)));
                    prev_cluster_end = last;
                }
                current.push(i);
                last = v;
            }
            let _ = prev_cluster_end;
            if !current.is_empty() {
                let mean = current.iter().map(|&j| values[j]).sum::<f64>() / current.len() as f64;
                clusters.push((mean, None, current));
            }
        }
    }
    let norm = norm_sq.sqrt();
    let groups = clusters
        .into_iter()
        .map(|(energy, exact_energy, idx)| {
            let entries: Vec<(Vec<i64>, C64)> = idx.iter().map(|&i| (u.mode(i).to_vec(), u.amp(i))).collect();
            let part = FourierState::new(u.h(), u.dim(), entries).expect("distinct modes");
            let mass = part.norm_sq();
            SpectralGroup { energy, exact_energy, weight: mass / norm_sq, state: part.normalized() }
        })
        .collect();
    Ok(SpectralDecomposition { groups, norm })
}

/// Momentum window `O`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Window {
    /// Open box `Π (lo_i, hi_i)`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Open ball.
    Ball { center: Vec<f64>, radius: f64 },
}

impl Window {
    pub fn dim(&self) -> usize {
        match self {
            Window::Box { lo, .. } => lo.len(),
            Window::Ball { center, .. } => center.len(),
        }
    }

    fn axis_ranges(&self, h: &BigRational) -> Result<Vec<(i64, i64)>> {
        let to_q = |x: f64| BigRational::from_float(x).ok_or_else(|| Error::Parameter(format!("non-finite bound {x}")));
        let (lo, hi): (Vec<f64>, Vec<f64>) = match self {
            Window::Box { lo, hi } => {
                if lo.len() != hi.len() || lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
                    return Err(Error::Parameter("box needs lo < hi on every axis".into()));
                }
                (lo.clone(), hi.clone())
            }
            Window::Ball { center, radius } => {
                if !(*radius > 0.0) {
                    return Err(Error::Parameter("ball radius must be positive".into()));
                }
                (center.iter().map(|c| c - radius).collect(), center.iter().map(|c| c + radius).collect())
            }
        };
        lo.iter()
            .zip(&hi)
            .map(|(&a, &b)| {
                let a = to_q(a)? / h;
                let b = to_q(b)? / h;
                let first: num_bigint::BigInt = a.floor().to_integer() + 1;
                let last: num_bigint::BigInt = b.ceil().to_integer() - 1;
                use num_traits::ToPrimitive;
                match (first.to_i64(), last.to_i64()) {
                    (Some(f), Some(l)) => Ok((f, l)),
                    _ => Err(Error::Parameter("window too large".into())),
                }
            })
            .collect()
    }

    /// Exact open-set membership of `hk`.
    fn contains(&self, h: &BigRational, hf: f64, k: &[i64]) -> bool {
        match self {
            Window::Box { .. } => true,
            Window::Ball { center, radius } => {
                let s: f64 = k.iter().zip(center).map(|(&ki, c)| (hf * ki as f64 - c).powi(2)).sum();
                let r2 = radius * radius;
                if (s - r2).abs() > 1e-9 * r2.max(1.0) {
                    return s < r2;
                }
                let r = BigRational::from_float(*radius).expect("finite radius");
                let exact = k.iter().zip(center).fold(BigRational::zero(), |acc, (&ki, &c)| {
                    let d = h * BigRational::from_integer(ki.into()) - BigRational::from_float(c).expect("finite center");
                    acc + &d * &d
                });
                exact < &r * &r
            }
        }
    }
}

/// `τ^H(O) = h / min positive gap of H(hk)` over `hk ∈ O`; infinite when all values coincide.
#[derive(Clone, Debug)]
pub struct SpacingScale {
    pub tau: f64,
    pub min_gap: Option<BigRational>,
    pub points: usize,
    pub distinct: usize,
}

pub fn spacing_scale(model: &HamiltonianModel, h: f64, window: &Window) -> Result<SpacingScale> {
    let form = model
        .lattice_form()
        .ok_or_else(|| Error::Exactness("spacing scale needs a model with exact lattice values".into()))?;
    if window.dim() != model.dim() {
        return Err(Error::Parameter("window dimension differs from the model".into()));
    }
    let hr = BigRational::from_float(h).filter(|q| q.is_positive()).ok_or_else(|| Error::Parameter(format!("bad h {h}")))?;
    let ranges = window.axis_ranges(&hr)?;
    if ranges.iter().any(|(a, b)| a > b) {
        return Ok(SpacingScale { tau: f64::INFINITY, min_gap: None, points: 0, distinct: 0 });
    }
    let first = ranges[0];
    let rows: Vec<i64> = (first.0..=first.1).collect();
    let rest = &ranges[1..];
    let collect_row = |&k0: &i64| -> Result<Vec<i128>> {
        let mut out = Vec::new();
        let mut k: Vec<i64> = std::iter::once(k0).chain(rest.iter().map(|r| r.0)).collect();
        loop {
            if window.contains(&hr, h, &k) {
                out.push(form.eval(&k).ok_or_else(|| Error::Exactness("lattice value overflow".into()))?);
            }
            let mut advanced = false;
            for i in (1..k.len()).rev() {
                if k[i] < rest[i - 1].1 {
                    k[i] += 1;
                    advanced = true;
                    break;
                }
                k[i] = rest[i - 1].0;
            }
            if !advanced {
                break;
            }
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    };
    let per_row: Vec<Vec<i128>> = rows.par_iter().map(collect_row).collect::<Result<_>>()?;
    let points = count_points(window, &hr, h, &ranges);
    let mut values: Vec<i128> = per_row.into_iter().flatten().collect();
    values.par_sort_unstable();
    values.dedup();
    let distinct = values.len();
    let min_diff = values.windows(2).map(|w| w[1] - w[0]).min();
    match min_diff {
        None => Ok(SpacingScale { tau: f64::INFINITY, min_gap: None, points, distinct }),
        Some(g) => {
            let gap = form.scale(&hr) * BigRational::from_integer(g.into());
            let tau = rational_to_f64(&(&hr / &gap));
            Ok(SpacingScale { tau, min_gap: Some(gap), points, distinct })
        }
    }
}

fn count_points(window: &Window, h: &BigRational, hf: f64, ranges: &[(i64, i64)]) -> usize {
    match window {
        Window::Box { .. } => ranges.iter().map(|(a, b)| (b - a + 1) as usize).product(),
        Window::Ball { .. } => {
            let mut count = 0;
            let mut k: Vec<i64> = ranges.iter().map(|r| r.0).collect();
            loop {
                if window.contains(h, hf, &k) {
                    count += 1;
                }
                let mut advanced = false;
                for i in (0..k.len()).rev() {
                    if k[i] < ranges[i].1 {
                        k[i] += 1;
                        advanced = true;
                        break;
                    }
                    k[i] = ranges[i].0;
                }
                if !advanced {
                    return count;
                }
            }
        }
    }
}

/// `‖H(hD)u − Eu‖`.
pub fn quasimode_residual(u: &FourierState, model: &HamiltonianModel, e: f64) -> f64 {
    let energies = Energies::new(u, model);
    (0..u.len()).map(|i| (energies.value(i) - e).powi(2) * u.amp(i).norm_sqr()).sum::<f64>().sqrt()
}

/// `T = target·h/residual`: horizon of the Duhamel bound `‖S^t u − e^{−itE/h}u‖ ≤ t·r/h`.
pub fn stability_horizon(residual: f64, h: f64, target: f64) -> f64 {
    if residual == 0.0 {
        f64::INFINITY
    } else {
        target * h / residual
    }
}

/// Multiplication operator `V(x) = (2π)^{-d/2} Σ V̂(m) e^{im·x}` with a finite mode list.
#[derive(Clone, Debug)]
pub struct FourierPotential {
    pub dim: usize,
    pub modes: Vec<Vec<i64>>,
    pub coeffs: Vec<C64>,
    /// `Σ |V̂(m)|` over discarded modes.
    pub truncation: f64,
}

impl FourierPotential {
    /// `(Vu)^(k) = (2π)^{-d/2} Σ_m V̂(m) û(k − m)`, lexicographic, zero entries dropped.
    pub fn apply(&self, u: &FourierState) -> Vec<(Vec<i64>, C64)> {
        let d = self.dim;
        let scale = (2.0 * PI).powf(-(d as f64) / 2.0);
        let bounds = |it: &mut dyn Iterator<Item = &[i64]>| {
            let mut lo = vec![i64::MAX; d];
            let mut hi = vec![i64::MIN; d];
            for k in it {
                for i in 0..d {
                    lo[i] = lo[i].min(k[i]);
                    hi[i] = hi[i].max(k[i]);
                }
            }
            (lo, hi)
        };
        if u.is_empty() || self.modes.is_empty() {
            return Vec::new();
        }
        let (ulo, uhi) = bounds(&mut u.iter().map(|(k, _)| k));
        let (vlo, vhi) = bounds(&mut self.modes.iter().map(|m| m.as_slice()));
        let lo: Vec<i64> = (0..d).map(|i| ulo[i] + vlo[i]).collect();
        let extent: Vec<i64> = (0..d).map(|i| uhi[i] + vhi[i] - lo[i] + 1).collect();
        let volume: i128 = extent.iter().map(|&e| e as i128).product();
        let offset = |k: &[i64], m: &[i64]| -> usize {
            let mut off = 0i64;
            for i in 0..d {
                off = off * extent[i] + (k[i] + m[i] - lo[i]);
            }
            off as usize
        };
        if volume <= 1 << 24 {
            let mut acc = vec![C64::new(0.0, 0.0); volume as usize];
            for (k, a) in u.iter() {
                let a = a * scale;
                for (m, v) in self.modes.iter().zip(&self.coeffs) {
                    acc[offset(k, m)] += v * a;
                }
            }
            let mut out = Vec::new();
            let mut key = lo.clone();
            for val in acc {
                if val != C64::new(0.0, 0.0) {
                    out.push((key.clone(), val));
                }
                for i in (0..d).rev() {
                    key[i] += 1;
                    if key[i] < lo[i] + extent[i] {
                        break;
                    }
                    key[i] = lo[i];
                }
            }
            out
        } else {
            let mut out: BTreeMap<Vec<i64>, C64> = BTreeMap::new();
            for (k, a) in u.iter() {
                for (m, v) in self.modes.iter().zip(&self.coeffs) {
                    let key: Vec<i64> = k.iter().zip(m).map(|(x, y)| x + y).collect();
                    *out.entry(key).or_insert(C64::new(0.0, 0.0)) += v * a * scale;
                }
            }
            out.into_iter().collect()
        }
    }
}

/// Grid used to transform the Wunsch potential.
const POTENTIAL_GRID: usize = 1 << 16;

/// `W(x₂) = x₂²` on `|x₂| ≤ 1/2`, tapered to 0 at `|x₂| = 1`, as a potential on `T²`.
pub fn wunsch_potential() -> FourierPotential {
    let window = Plateau { inner: 0.5, outer: 1.0 };
    let samples: Vec<f64> = (0..POTENTIAL_GRID)
        .map(|i| {
            let mut x = 2.0 * PI * i as f64 / POTENTIAL_GRID as f64;
            if x >= PI {
                x -= 2.0 * PI;
            }
            x * x * window.at(x.abs())
        })
        .collect();
    // The constant x₁ factor contributes (2π)^{1/2} at m₁ = 0.
    let x1 = (2.0 * PI).sqrt();
    let mut modes = Vec::new();
    let mut coeffs = Vec::new();
    let mut truncation = 0.0;
    for (m, c) in sampled_coefficients(&samples) {
        let c = c * x1;
        if c.norm() < 1e-16 {
            truncation += c.norm();
        } else {
            modes.push(vec![0, m]);
            coeffs.push(c);
        }
    }
    FourierPotential { dim: 2, modes, coeffs, truncation }
}

/// `‖(H(hD) + λV − E)u‖`.
pub fn quasimode_residual_with_potential(
    u: &FourierState,
    model: &HamiltonianModel,
    potential: &FourierPotential,
    coupling: f64,
    e: f64,
) -> f64 {
    let energies = Energies::new(u, model);
    let mut vu = potential.apply(u);
    let mut total = 0.0;
    let mut rest = Vec::new();
    for (i, (k, a)) in u.iter().enumerate() {
        let diag = a * (energies.value(i) - e);
        match vu.binary_search_by(|p| p.0.as_slice().cmp(k)) {
            Ok(j) => vu[j].1 = vu[j].1 * coupling + diag,
            Err(_) => rest.push(diag),
        }
    }
    // Entries of Vu not on the support still need the coupling factor.
    let support = u.index();
    for (k, v) in &vu {
        if support.get(k).is_none() {
            total += (v * coupling).norm_sqr();
        } else {
            total += v.norm_sqr();
        }
    }
    total += rest.iter().map(|c| c.norm_sqr()).sum::<f64>();
    total.sqrt()
}

pub fn lattice_form_of(model: &HamiltonianModel) -> Option<LatticeForm> {
    model.lattice_form()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::RationalVector;
    use crate::state::spectral_superposition;

    fn one(k: Vec<i64>) -> (Vec<i64>, C64) {
        (k, C64::new(1.0, 0.0))
    }

    #[test]
    fn phase_example() {
        let h = 0.1;
        let u = spectral_superposition(h, 2, vec![one(vec![3, 4])]).unwrap().state;
        let t = 0.7;
        let w = evolve(&u, &HamiltonianModel::laplacian(2), t);
        let expect = C64::from_polar(1.0, -2.5 * t);
        assert!((w.amp(0) - expect).norm() < 1e-12);
        assert_eq!(evolve(&u, &HamiltonianModel::laplacian(2), 0.0), u);
    }

    #[test]
    fn decomposition_examples() {
        let h = 0.125;
        let u = spectral_superposition(h, 2, vec![one(vec![1, 0]), one(vec![0, 1]), one(vec![1, 1])]).unwrap().state;
        let dec = eigenspace_decompose(&u, &HamiltonianModel::laplacian(2), 1e-9).unwrap();
        assert_eq!(dec.groups.len(), 2);
        assert_eq!(dec.groups[0].exact_energy, BigRational::from_float(h * h));
        assert!((dec.groups[0].weight - 2.0 / 3.0).abs() < 1e-15);
        let back = dec.reconstruct();
        for (a, b) in back.amps().iter().zip(u.amps()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn float_grouping_detects_ambiguity() {
        use crate::hamiltonian::CustomEvaluators;
        use std::sync::Arc;
        let model = HamiltonianModel::custom(
            1,
            CustomEvaluators {
                value: Arc::new(|x| x[0] * x[0]),
                gradient: Arc::new(|x| vec![2.0 * x[0]]),
                hessian: Arc::new(|_| nalgebra::DMatrix::from_element(1, 1, 2.0)),
            },
        );
        let u = spectral_superposition(0.5, 1, vec![one(vec![1]), one(vec![-1]), one(vec![2])]).unwrap().state;
        let dec = eigenspace_decompose(&u, &model, 1e-9).unwrap();
        assert_eq!(dec.groups.len(), 2);
        let r = eigenspace_decompose(&u, &model, 0.5);
        assert!(matches!(r, Err(Error::ToleranceAmbiguity { .. })));
    }

    #[test]
    fn spacing_examples() {
        let sq = HamiltonianModel::laplacian(1);
        let s = spacing_scale(&sq, 0.1, &Window::Box { lo: vec![-2.0], hi: vec![2.0] }).unwrap();
        assert!((s.tau - 10.0).abs() < 1e-12);
        let lin = HamiltonianModel::linear(RationalVector::from_i64(&[2])).unwrap();
        let s = spacing_scale(&lin, 0.1, &Window::Box { lo: vec![-1.0], hi: vec![1.0] }).unwrap();
        assert!((s.tau - 0.5).abs() < 1e-12);
        let s = spacing_scale(&sq, 0.5, &Window::Box { lo: vec![-0.25], hi: vec![0.25] }).unwrap();
        assert!(s.tau.is_infinite() && s.points == 1);
    }

    #[test]
    fn horizon_examples() {
        assert!(stability_horizon(0.0, 0.1, 0.1).is_infinite());
        let h: f64 = 0.01;
        assert!((stability_horizon(h * h, h, 0.1) - 0.1 / h).abs() < 1e-9);
    }

    #[test]
    fn regimes() {
        assert_eq!(TimeScale::new(1.0, 0.5).unwrap().regime(), Regime::SubCritical);
        assert_eq!(TimeScale::critical().regime(), Regime::Critical);
        assert_eq!(TimeScale::new(2.0, 1.5).unwrap().regime(), Regime::SuperCritical);
        assert!(TimeScale::new(0.0, 1.0).is_err());
    }
}
