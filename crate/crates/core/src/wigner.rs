//! Weyl pairings, position densities and their exact time averages.
//!
//! A symbol is stored through its `x`-Fourier coefficients:
//! `a(x, ξ) = (2π)^{-d/2} Σ_{m∈K} â_m(ξ) e^{im·x}`.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use num_integer::Integer;
use rayon::prelude::*;
use rustfft::num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::sci;
use crate::hamiltonian::HamiltonianModel;
use crate::lattice::PrimitiveModule;
use crate::propagator::{evolve, Energies};
use crate::state::{inverse_fft_nd, FourierState, ModeIndex};

pub type CoeffFn = Arc<dyn Fn(&[f64]) -> C64 + Send + Sync>;

#[derive(Clone)]
pub struct Symbol {
    dim: usize,
    modes: Vec<Vec<i64>>,
    coeffs: Vec<CoeffFn>,
    /// Declared radius of the `ξ`-support; `∞` when unrestricted.
    pub support_radius: f64,
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Symbol").field("dim", &self.dim).field("modes", &self.modes).finish()
    }
}

impl Symbol {
    pub fn new(dim: usize, entries: Vec<(Vec<i64>, CoeffFn)>, support_radius: f64) -> Result<Self> {
        let mut entries = entries;
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        if entries.iter().any(|e| e.0.len() != dim) {
            return Err(Error::Parameter("symbol mode of wrong dimension".into()));
        }
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Parameter("duplicate symbol mode".into()));
        }
        let (modes, coeffs) = entries.into_iter().unzip();
        Ok(Self { dim, modes, coeffs, support_radius })
    }

    /// `ξ`-independent coefficients, i.e. a function of `x` alone.
    pub fn position(dim: usize, entries: Vec<(Vec<i64>, C64)>) -> Result<Self> {
        let entries = entries.into_iter().map(|(m, c)| (m, Arc::new(move |_: &[f64]| c) as CoeffFn)).collect();
        Self::new(dim, entries, f64::INFINITY)
    }

    /// The symbol `a ≡ 1`.
    pub fn one(dim: usize) -> Self {
        let c = (2.0 * PI).powf(dim as f64 / 2.0);
        Self::position(dim, vec![(vec![0; dim], C64::new(c, 0.0))]).expect("single mode")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes(&self) -> &[Vec<i64>] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn coefficient(&self, i: usize, xi: &[f64]) -> C64 {
        (self.coeffs[i])(xi)
    }

    pub fn coefficient_fn(&self, i: usize) -> &CoeffFn {
        &self.coeffs[i]
    }

    /// `a(x, ξ)`.
    pub fn evaluate(&self, x: &[f64], xi: &[f64]) -> C64 {
        let scale = (2.0 * PI).powf(-(self.dim as f64) / 2.0);
        self.modes
            .iter()
            .zip(&self.coeffs)
            .map(|(m, c)| c(xi) * C64::from_polar(1.0, m.iter().zip(x).map(|(a, b)| *a as f64 * b).sum()))
            .sum::<C64>()
            * scale
    }

    /// Keeps the modes satisfying `keep`.
    pub fn filter(&self, keep: impl Fn(&[i64]) -> bool) -> Self {
        let (modes, coeffs) =
            self.modes.iter().zip(&self.coeffs).filter(|(m, _)| keep(m)).map(|(m, c)| (m.clone(), c.clone())).unzip();
        Self { dim: self.dim, modes, coeffs, support_radius: self.support_radius }
    }

    /// Multiplies every coefficient by `f(m, ξ)`.
    pub fn map(&self, f: impl Fn(&[i64], &[f64]) -> C64 + Send + Sync + Clone + 'static) -> Self {
        let coeffs = self
            .modes
            .iter()
            .zip(&self.coeffs)
            .map(|(m, c)| {
                let (m, c, f) = (m.clone(), c.clone(), f.clone());
                Arc::new(move |xi: &[f64]| c(xi) * f(&m, xi)) as CoeffFn
            })
            .collect();
        Self { dim: self.dim, modes: self.modes.clone(), coeffs, support_radius: self.support_radius }
    }

    /// `â_{−m}(ξ) = conj â_m(ξ)` at every sample point.
    pub fn is_hermitian(&self, samples: &[Vec<f64>], tol: f64) -> bool {
        self.modes.iter().enumerate().all(|(i, m)| {
            let neg: Vec<i64> = m.iter().map(|x| -x).collect();
            match self.modes.binary_search(&neg) {
                Err(_) => samples.iter().all(|xi| self.coefficient(i, xi).norm() <= tol),
                Ok(j) => samples.iter().all(|xi| (self.coefficient(j, xi) - self.coefficient(i, xi).conj()).norm() <= tol),
            }
        })
    }

    /// `max_m |â_m(ξ)|` over sample points.
    pub fn sup_coefficient(&self, samples: &[Vec<f64>]) -> f64 {
        (0..self.len())
            .flat_map(|i| samples.iter().map(move |xi| self.coefficient(i, xi).norm()))
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    Indicator,
    /// Triangular weight on `[a, b]`, peak at the midpoint.
    Hat,
}

/// Normalized time weight `θ` supported on `[a, b]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub a: f64,
    pub b: f64,
    pub kind: WindowKind,
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

impl TimeWindow {
    pub fn new(a: f64, b: f64, kind: WindowKind) -> Result<Self> {
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Parameter(format!("time window needs a < b, got [{a}, {b}]")));
        }
        Ok(Self { a, b, kind })
    }

    pub fn unit() -> Self {
        Self { a: 0.0, b: 1.0, kind: WindowKind::Indicator }
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    /// `θ(t)`, with `∫θ = 1`.
    pub fn weight(&self, t: f64) -> f64 {
        if t < self.a || t > self.b {
            return 0.0;
        }
        let l = self.length();
        match self.kind {
            WindowKind::Indicator => 1.0 / l,
            WindowKind::Hat => {
                let c = 0.5 * (self.a + self.b);
                (1.0 - (t - c).abs() / (0.5 * l)) * 2.0 / l
            }
        }
    }

    /// `∫ θ(t) e^{−iωt} dt` in closed form.
    pub fn average(&self, omega: f64) -> C64 {
        let c = 0.5 * (self.a + self.b);
        let l = self.length();
        let envelope = match self.kind {
            WindowKind::Indicator => sinc(0.5 * omega * l),
            WindowKind::Hat => sinc(0.25 * omega * l).powi(2),
        };
        C64::from_polar(envelope, -omega * c)
    }

    /// `|Φ(ω)| ≤ bound(ω)`.
    pub fn decay_bound(&self, omega: f64) -> f64 {
        if omega == 0.0 {
            return 1.0;
        }
        let l = self.length();
        match self.kind {
            WindowKind::Indicator => (2.0 / (omega.abs() * l)).min(1.0),
            WindowKind::Hat => (16.0 / (omega * l).powi(2)).min(1.0),
        }
    }
}

/// Density sampled on the uniform `n^d` grid `x = 2πi/n`, axis 0 slowest.
#[derive(Clone, Debug)]
pub struct DensityGrid {
    pub n: usize,
    pub values: Vec<f64>,
    /// Maximum over grid points (a lower bound for the true sup).
    pub sup: f64,
    /// `(Σ v² (2π/n)^d)^{1/2}`.
    pub l2: f64,
}

/// Fourier coefficients `c_m` of a density `ν = Σ c_m e^{im·x}`.
#[derive(Clone, Debug)]
pub struct DensityReport {
    pub dim: usize,
    /// Lexicographically sorted.
    pub modes: Vec<Vec<i64>>,
    pub coeffs: Vec<C64>,
    pub grid: Option<DensityGrid>,
}

impl DensityReport {
    pub fn coefficient(&self, m: &[i64]) -> C64 {
        match self.modes.binary_search_by(|k| k.as_slice().cmp(m)) {
            Ok(i) => self.coeffs[i],
            Err(_) => C64::zero(),
        }
    }

    /// `‖ν‖_{L²}` from the retained coefficients.
    pub fn l2_parseval(&self) -> f64 {
        ((2.0 * PI).powi(self.dim as i32) * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// Largest defect of `c_{−m} = conj c_m` among retained pairs.
    pub fn hermitian_defect(&self) -> f64 {
        self.modes
            .iter()
            .zip(&self.coeffs)
            .filter_map(|(m, c)| {
                let neg: Vec<i64> = m.iter().map(|x| -x).collect();
                self.modes.binary_search(&neg).ok().map(|j| (self.coeffs[j] - c.conj()).norm())
            })
            .fold(0.0, f64::max)
    }

    /// Smallest power of two exceeding twice the largest retained frequency.
    pub fn nyquist_size(&self) -> usize {
        let top = self.modes.iter().flatten().map(|m| m.unsigned_abs()).max().unwrap_or(0) as usize;
        (2 * top + 1).next_power_of_two().max(2)
    }

    /// Synthesizes the density on an `n^d` grid (`n` defaults to the Nyquist size).
    pub fn synthesize(&mut self, n: Option<usize>) -> Result<&DensityGrid> {
        let n = n.unwrap_or_else(|| self.nyquist_size());
        let cells = n
            .checked_pow(self.dim as u32)
            .filter(|c| *c <= 1 << 26)
            .ok_or(Error::Scale { needed: (n as u128).pow(self.dim as u32), budget: 1 << 26 })?;
        let mut data = vec![C64::zero(); cells];
        for (m, c) in self.modes.iter().zip(&self.coeffs) {
            let mut off = 0;
            for &mi in m {
                off = off * n + mi.rem_euclid(n as i64) as usize;
            }
            data[off] += c;
        }
        inverse_fft_nd(&mut data, n, self.dim);
        let values: Vec<f64> = data.iter().map(|z| z.re).collect();
        let sup = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let cell = (2.0 * PI / n as f64).powi(self.dim as i32);
        let l2 = (values.iter().map(|v| v * v).sum::<f64>() * cell).sqrt();
        self.grid = Some(DensityGrid { n, values, sup, l2 });
        Ok(self.grid.as_ref().expect("just set"))
    }

    /// Columns `m_1..m_d,re,im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let head: Vec<String> = (1..=self.dim).map(|i| format!("m_{i}")).collect();
        writeln!(w, "{},re,im", head.join(","))?;
        for (m, c) in self.modes.iter().zip(&self.coeffs) {
            let ms: Vec<String> = m.iter().map(|x| x.to_string()).collect();
            writeln!(w, "{},{},{}", ms.join(","), sci(c.re), sci(c.im))?;
        }
        Ok(())
    }

    /// Columns `x_1..x_d,value`; errors when no grid was synthesized.
    pub fn write_grid_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let grid = self.grid.as_ref().ok_or_else(|| Error::Parameter("density grid not synthesized".into()))?;
        let head: Vec<String> = (1..=self.dim).map(|i| format!("x_{i}")).collect();
        writeln!(w, "{},value", head.join(","))?;
        let step = 2.0 * PI / grid.n as f64;
        let mut idx = vec![0usize; self.dim];
        for v in &grid.values {
            let xs: Vec<String> = idx.iter().map(|&i| sci(i as f64 * step)).collect();
            writeln!(w, "{},{}", xs.join(","), sci(*v))?;
            for a in (0..self.dim).rev() {
                idx[a] += 1;
                if idx[a] < grid.n {
                    break;
                }
                idx[a] = 0;
            }
        }
        Ok(())
    }
}

/// All modes `m` with `|m_i| ≤ r`, lexicographic.
pub fn mode_box(dim: usize, r: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..dim {
        out = out.into_iter().flat_map(|p| (-r..=r).map(move |x| [p.clone(), vec![x]].concat())).collect();
    }
    out
}

/// The difference set `{k − j : k, j ∈ supp û}`, lexicographic.
pub fn difference_set(u: &FourierState) -> Vec<Vec<i64>> {
    let d = u.dim();
    if u.is_empty() {
        return Vec::new();
    }
    let mut lo = vec![i64::MAX; d];
    let mut hi = vec![i64::MIN; d];
    for (k, _) in u.iter() {
        for i in 0..d {
            lo[i] = lo[i].min(k[i]);
            hi[i] = hi[i].max(k[i]);
        }
    }
    let span: Vec<i64> = (0..d).map(|i| hi[i] - lo[i]).collect();
    let extent: Vec<i64> = span.iter().map(|s| 2 * s + 1).collect();
    let volume: i128 = extent.iter().map(|&e| e as i128).product();
    if volume > 1 << 26 {
        let mut out: Vec<Vec<i64>> = Vec::new();
        for (k, _) in u.iter() {
            for (j, _) in u.iter() {
                out.push(k.iter().zip(j).map(|(a, b)| a - b).collect());
            }
        }
        out.sort_unstable();
        out.dedup();
        return out;
    }
    let mut seen = vec![false; volume as usize];
    let flat = u.flat_modes();
    let n = u.len();
    for a in 0..n {
        let ka = &flat[a * d..(a + 1) * d];
        for b in 0..n {
            let kb = &flat[b * d..(b + 1) * d];
            let mut off = 0i64;
            for i in 0..d {
                off = off * extent[i] + (ka[i] - kb[i] + span[i]);
            }
            seen[off as usize] = true;
        }
    }
    let mut out = Vec::new();
    let mut key: Vec<i64> = span.iter().map(|s| -s).collect();
    for mark in seen {
        if mark {
            out.push(key.clone());
        }
        for i in (0..d).rev() {
            key[i] += 1;
            if key[i] <= span[i] {
                break;
            }
            key[i] = -span[i];
        }
    }
    out
}

fn normalize_modes(dim: usize, modes: &[Vec<i64>]) -> Result<Vec<Vec<i64>>> {
    if modes.iter().any(|m| m.len() != dim) {
        return Err(Error::Parameter("mode of wrong dimension".into()));
    }
    let mut m = modes.to_vec();
    m.sort_unstable();
    m.dedup();
    Ok(m)
}

const CHUNK: usize = 256;

/// `Σ_j û(j+m) conj û(j) w(j+m, j)` for every `m` in `modes`.
fn autocorrelate(u: &FourierState, modes: &[Vec<i64>], weight: &(dyn Fn(usize, usize) -> C64 + Sync)) -> Vec<C64> {
    let d = u.dim();
    let n = u.len();
    if modes.len() <= n {
        let index = u.index();
        modes
            .par_iter()
            .map(|m| {
                let mut acc = C64::zero();
                for (j, (k, a)) in u.iter().enumerate() {
                    if let Some(i) = index.get_shifted(k, m) {
                        acc += u.amp(i) * a.conj() * weight(i, j);
                    }
                }
                acc
            })
            .collect()
    } else {
        let target = ModeIndex::from_modes(d, modes.iter().map(|m| m.as_slice()));
        let starts: Vec<usize> = (0..n).step_by(CHUNK).collect();
        let partials: Vec<Vec<C64>> = starts
            .par_iter()
            .map(|&s| {
                let mut acc = vec![C64::zero(); modes.len()];
                let mut diff = vec![0i64; d];
                for i in s..(s + CHUNK).min(n) {
                    let ki = u.mode(i);
                    let ai = u.amp(i);
                    for j in 0..n {
                        let kj = u.mode(j);
                        for a in 0..d {
                            diff[a] = ki[a] - kj[a];
                        }
                        if let Some(p) = target.get(&diff) {
                            acc[p] += ai * u.amp(j).conj() * weight(i, j);
                        }
                    }
                }
                acc
            })
            .collect();
        let mut total = vec![C64::zero(); modes.len()];
        for part in partials {
            for (t, p) in total.iter_mut().zip(part) {
                *t += p;
            }
        }
        total
    }
}

/// `c_m = (2π)^{-d} Σ_j û(j+m) conj û(j)`.
pub fn density_modes(u: &FourierState, modes: &[Vec<i64>]) -> Result<DensityReport> {
    let modes = normalize_modes(u.dim(), modes)?;
    let scale = (2.0 * PI).powi(-(u.dim() as i32));
    let coeffs = autocorrelate(u, &modes, &|_, _| C64::new(scale, 0.0));
    Ok(DensityReport { dim: u.dim(), modes, coeffs, grid: None })
}

/// Density of `S^{τt} u` averaged against the window, computed pairwise in closed form.
pub fn time_averaged_density(
    u: &FourierState,
    model: &HamiltonianModel,
    tau: f64,
    window: &TimeWindow,
    modes: &[Vec<i64>],
) -> Result<DensityReport> {
    let modes = normalize_modes(u.dim(), modes)?;
    let energies = Energies::new(u, model);
    let scale = (2.0 * PI).powi(-(u.dim() as i32));
    let coeffs = autocorrelate(u, &modes, &|i, j| {
        if i == j {
            C64::new(scale, 0.0)
        } else {
            window.average(tau * energies.rate_diff(i, j)) * scale
        }
    });
    Ok(DensityReport { dim: u.dim(), modes, coeffs, grid: None })
}

/// `(2π)^{-d/2} Σ_{k, m∈K} û(k) conj û(k+m) b(m, h(2k+m)/2)` over pairs present in the support.
pub(crate) fn pair_sum(u: &FourierState, modes: &[Vec<i64>], coeff: &(dyn Fn(usize, &[f64]) -> C64 + Sync)) -> C64 {
    let d = u.dim();
    let h = u.h();
    let index = u.index();
    let parts: Vec<C64> = modes
        .par_iter()
        .enumerate()
        .map(|(p, m)| {
            let mut acc = C64::zero();
            let mut mid = vec![0.0; d];
            for (k, a) in u.iter() {
                if let Some(j) = index.get_shifted(k, m) {
                    for i in 0..d {
                        mid[i] = h * (k[i] as f64 + 0.5 * m[i] as f64);
                    }
                    acc += a * u.amp(j).conj() * coeff(p, &mid);
                }
            }
            acc
        })
        .collect();
    parts.into_iter().sum::<C64>() * (2.0 * PI).powf(-(d as f64) / 2.0)
}

/// `⟨Op_h(a) u, u⟩` via the Weyl quantization.
pub fn weyl_pair(u: &FourierState, a: &Symbol) -> Result<C64> {
    if a.dim() != u.dim() {
        return Err(Error::Parameter("symbol and state dimensions differ".into()));
    }
    Ok(pair_sum(u, a.modes(), &|p, xi| a.coefficient(p, xi)))
}

/// Keeps the modes of `a` lying in `module`.
pub fn averaged_symbol(a: &Symbol, module: &PrimitiveModule) -> Symbol {
    a.filter(|m| module.contains_i64(m))
}

/// `|⟨w(t), a∘φ_s − a⟩|` with `w(t)` the Wigner functional of `S^{τt} u`.
pub fn egorov_defect(u: &FourierState, model: &HamiltonianModel, a: &Symbol, s: f64, t: f64, tau: f64) -> Result<f64> {
    if s == 0.0 {
        return Ok(0.0);
    }
    let v = evolve(u, model, tau * t);
    let modes = a.modes().to_vec();
    let value = pair_sum(&v, &modes, &|p, xi| {
        let m = &modes[p];
        if m.iter().all(|&x| x == 0) {
            return C64::zero();
        }
        let g = model.gradient(xi);
        let phase: f64 = m.iter().zip(&g).map(|(a, b)| *a as f64 * b).sum::<f64>() * s;
        a.coefficient(p, xi) * (C64::from_polar(1.0, phase) - 1.0)
    });
    Ok(value.norm())
}

/// `∫ |u|² 1{|n·x mod 2π| ≤ b} dx` for primitive `n`, from the density coefficients along `n`.
pub fn strip_mass(u: &FourierState, n: &[i64], b: f64) -> Result<f64> {
    let d = u.dim();
    if n.len() != d || n.iter().all(|&x| x == 0) {
        return Err(Error::Parameter("strip direction must be a nonzero vector of the state's dimension".into()));
    }
    if n.iter().fold(0i64, |g, &x| g.gcd(&x)) != 1 {
        return Err(Error::Parameter("strip direction must be primitive".into()));
    }
    if !(b > 0.0 && b <= PI) {
        return Err(Error::Parameter(format!("strip half-width must lie in (0, π], got {b}")));
    }
    let index = u.index();
    let mut lo = vec![i64::MAX; d];
    let mut hi = vec![i64::MIN; d];
    for (k, _) in u.iter() {
        for i in 0..d {
            lo[i] = lo[i].min(k[i]);
            hi[i] = hi[i].max(k[i]);
        }
    }
    let reach = (0..d).filter(|&i| n[i] != 0).map(|i| (hi[i] - lo[i]) / n[i].abs()).min().unwrap_or(0);
    let mut modes: Vec<Vec<i64>> = (-reach..=reach).map(|l| n.iter().map(|x| l * x).collect()).collect();
    modes.sort_unstable();
    let _ = index;
    let report = density_modes(u, &modes)?;
    let mut total = 0.0;
    for l in -reach..=reach {
        let m: Vec<i64> = n.iter().map(|x| l * x).collect();
        let g = if l == 0 { b / PI } else { (l as f64 * b).sin() / (PI * l as f64) };
        total += report.coefficient(&m).re * g;
    }
    Ok(total * (2.0 * PI).powi(d as i32))
}
