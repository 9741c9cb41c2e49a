//! Finitely supported Fourier states on `T^d` and the standard initial-data families.
//!
//! Convention: `û(k) = (2π)^{-d/2} ∫ u(x) e^{-ik·x} dx`, so `‖u‖² = Σ|û(k)|²`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::{BufRead, Write};

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::sci;
use crate::lattice::PrimitiveModule;
use crate::profile::Plateau;
use crate::propagator::TimeScale;

#[derive(Clone, Debug, PartialEq)]
pub struct FourierState {
    h: f64,
    dim: usize,
    /// Flat, lexicographically sorted, without duplicates.
    modes: Vec<i64>,
    amps: Vec<C64>,
}

impl FourierState {
    pub fn new(h: f64, dim: usize, entries: Vec<(Vec<i64>, C64)>) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Parameter(format!("h must be positive, got {h}")));
        }
        if dim == 0 {
            return Err(Error::Parameter("dimension must be at least 1".into()));
        }
        let mut entries = entries;
        if entries.iter().any(|(k, _)| k.len() != dim) {
            return Err(Error::Parameter("mode of wrong dimension".into()));
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Parameter("duplicate mode in state".into()));
        }
        let mut modes = Vec::with_capacity(entries.len() * dim);
        let mut amps = Vec::with_capacity(entries.len());
        for (k, a) in entries {
            modes.extend_from_slice(&k);
            amps.push(a);
        }
        Ok(Self { h, dim, modes, amps })
    }

    /// Modes must already be sorted and unique.
    pub(crate) fn from_parts(h: f64, dim: usize, modes: Vec<i64>, amps: Vec<C64>) -> Self {
        debug_assert_eq!(modes.len(), amps.len() * dim);
        Self { h, dim, modes, amps }
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn mode(&self, i: usize) -> &[i64] {
        &self.modes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn flat_modes(&self) -> &[i64] {
        &self.modes
    }

    pub fn amp(&self, i: usize) -> C64 {
        self.amps[i]
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[i64], C64)> + '_ {
        self.modes.chunks_exact(self.dim).zip(self.amps.iter().copied())
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn index_of(&self, k: &[i64]) -> Option<usize> {
        let (mut lo, mut hi) = (0, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.mode(mid).cmp(k) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    pub fn coefficient(&self, k: &[i64]) -> C64 {
        self.index_of(k).map_or(C64::new(0.0, 0.0), |i| self.amps[i])
    }

    pub fn with_amps(&self, amps: Vec<C64>) -> Self {
        assert_eq!(amps.len(), self.len());
        Self { h: self.h, dim: self.dim, modes: self.modes.clone(), amps }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.with_amps(self.amps.iter().map(|a| a * factor).collect())
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            self.clone()
        } else {
            self.scaled(1.0 / n)
        }
    }

    pub fn index(&self) -> ModeIndex {
        ModeIndex::new(self)
    }

    /// Momenta `hk` of the support.
    pub fn momentum(&self, i: usize) -> Vec<f64> {
        self.mode(i).iter().map(|&k| self.h * k as f64).collect()
    }

    /// Values of `u` on the uniform `n^d` grid `x = 2πi/n`, axis 0 slowest.
    pub fn sample_grid(&self, n: usize) -> Vec<C64> {
        let mut grid = vec![C64::new(0.0, 0.0); n.pow(self.dim as u32)];
        let scale = (2.0 * PI).powf(-(self.dim as f64) / 2.0);
        for (k, a) in self.iter() {
            let mut off = 0;
            for &ki in k {
                off = off * n + ki.rem_euclid(n as i64) as usize;
            }
            grid[off] += a * scale;
        }
        inverse_fft_nd(&mut grid, n, self.dim);
        grid
    }

    /// JSON lines `{"k":[...],"re":…,"im":…}` in lexicographic order.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for (k, a) in self.iter() {
            let ks: Vec<String> = k.iter().map(|x| x.to_string()).collect();
            writeln!(w, "{{\"k\":[{}],\"re\":{},\"im\":{}}}", ks.join(","), sci(a.re), sci(a.im))?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(h: f64, r: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Line {
            k: Vec<i64>,
            re: f64,
            im: f64,
        }
        let mut entries = Vec::new();
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let l: Line = serde_json::from_str(&line)?;
            entries.push((l.k, C64::new(l.re, l.im)));
        }
        let dim = entries.first().map(|e| e.0.len()).ok_or_else(|| Error::Parse("empty state dump".into()))?;
        Self::new(h, dim, entries)
    }
}

/// In-place unnormalized inverse DFT along every axis of an `n^d` array.
pub(crate) fn inverse_fft_nd(data: &mut [C64], n: usize, dim: usize) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_inverse(n);
    let mut line = vec![C64::new(0.0, 0.0); n];
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        let outer = data.len() / (n * stride);
        for o in 0..outer {
            for s in 0..stride {
                let base = o * n * stride + s;
                for (i, v) in line.iter_mut().enumerate() {
                    *v = data[base + i * stride];
                }
                fft.process(&mut line);
                for (i, v) in line.iter().enumerate() {
                    data[base + i * stride] = *v;
                }
            }
        }
    }
}

/// Constant-time lookup of modes (dense over the bounding box when small).
pub struct ModeIndex {
    dim: usize,
    lo: Vec<i64>,
    extent: Vec<i64>,
    dense: Option<Vec<u32>>,
    sparse: HashMap<Vec<i64>, usize>,
}

const DENSE_LIMIT: i128 = 1 << 24;

impl ModeIndex {
    pub fn new(u: &FourierState) -> Self {
        Self::from_modes(u.dim(), u.flat_modes().chunks(u.dim().max(1)))
    }

    /// Index over distinct modes, numbered in iteration order.
    pub fn from_modes<'a>(d: usize, modes: impl Iterator<Item = &'a [i64]> + Clone) -> Self {
        let mut lo = vec![i64::MAX; d];
        let mut hi = vec![i64::MIN; d];
        let mut count = 0usize;
        for k in modes.clone() {
            count += 1;
            for i in 0..d {
                lo[i] = lo[i].min(k[i]);
                hi[i] = hi[i].max(k[i]);
            }
        }
        if count == 0 {
            return Self { dim: d, lo: vec![0; d], extent: vec![0; d], dense: Some(Vec::new()), sparse: HashMap::new() };
        }
        let extent: Vec<i64> = lo.iter().zip(&hi).map(|(l, h)| h - l + 1).collect();
        let volume: i128 = extent.iter().map(|&e| e as i128).product();
        if volume <= DENSE_LIMIT {
            let mut dense = vec![u32::MAX; volume as usize];
            let mut idx = Self { dim: d, lo, extent, dense: None, sparse: HashMap::new() };
            for (i, k) in modes.enumerate() {
                let off = idx.offset(k, None).expect("inside box");
                dense[off] = i as u32;
            }
            idx.dense = Some(dense);
            idx
        } else {
            let sparse = modes.enumerate().map(|(i, k)| (k.to_vec(), i)).collect();
            Self { dim: d, lo, extent, dense: None, sparse }
        }
    }

    fn offset(&self, k: &[i64], shift: Option<&[i64]>) -> Option<usize> {
        let mut off: i64 = 0;
        for i in 0..self.dim {
            let v = k[i] + shift.map_or(0, |s| s[i]) - self.lo[i];
            if v < 0 || v >= self.extent[i] {
                return None;
            }
            off = off * self.extent[i] + v;
        }
        Some(off as usize)
    }

    pub fn get(&self, k: &[i64]) -> Option<usize> {
        self.get_shifted(k, &vec![0; self.dim])
    }

    /// Index of `k + m`.
    pub fn get_shifted(&self, k: &[i64], m: &[i64]) -> Option<usize> {
        match &self.dense {
            Some(dense) => {
                let off = self.offset(k, Some(m))?;
                let v = dense[off];
                (v != u32::MAX).then_some(v as usize)
            }
            None => {
                let key: Vec<i64> = k.iter().zip(m).map(|(a, b)| a + b).collect();
                self.sparse.get(&key).copied()
            }
        }
    }
}

/// `ρ̂(ζ) = c·ψ(|ζ|)`, `ψ` the quintic plateau of radius `R₀`, with `c` chosen
/// so that `ρ` has unit `L²(R^d)` norm, i.e. `∫|ρ̂|² = (2π)^d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpProfile {
    pub radius: f64,
    /// Continuity order of the smoothstep transition.
    pub order: u32,
    pub norm_const: f64,
    pub dim: usize,
}

impl BumpProfile {
    pub fn new(radius: f64, dim: usize) -> Result<Self> {
        let plateau = Plateau::new(radius / 2.0, radius)?;
        let target = (2.0 * PI).powi(dim as i32);
        let norm_const = (target / plateau.l2_norm_sq(dim)).sqrt();
        Ok(Self { radius, order: 2, norm_const, dim })
    }

    fn plateau(&self) -> Plateau {
        Plateau { inner: self.radius / 2.0, outer: self.radius }
    }

    pub fn shape(&self, r: f64) -> f64 {
        self.plateau().at(r)
    }

    pub fn value(&self, zeta: &[f64]) -> f64 {
        self.norm_const * self.plateau().radial(zeta)
    }
}

/// State plus the squared norm it had before normalization.
#[derive(Clone, Debug)]
pub struct BuiltState {
    pub state: FourierState,
    pub raw_norm_sq: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Modulation {
    pub eta0: Vec<f64>,
    /// Module whose span must contain `η₀`.
    #[serde(default)]
    pub module: Option<PrimitiveModule>,
    pub time_scale: TimeScale,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WavePacketSpec {
    pub x0: Vec<f64>,
    pub xi0: Vec<f64>,
    #[serde(default = "one")]
    pub eps_coef: f64,
    pub eps_exponent: f64,
    #[serde(default = "one")]
    pub profile_radius: f64,
    #[serde(default)]
    pub modulation: Option<Modulation>,
    #[serde(default = "default_budget")]
    pub max_modes: usize,
}

fn one() -> f64 {
    1.0
}

fn default_budget() -> usize {
    4_000_000
}

impl WavePacketSpec {
    pub fn new(x0: Vec<f64>, xi0: Vec<f64>, eps_exponent: f64) -> Self {
        Self { x0, xi0, eps_coef: 1.0, eps_exponent, profile_radius: 1.0, modulation: None, max_modes: default_budget() }
    }

    pub fn eps(&self, h: f64) -> f64 {
        self.eps_coef * h.powf(self.eps_exponent)
    }

    fn validate(&self) -> Result<()> {
        if self.x0.len() != self.xi0.len() || self.x0.is_empty() {
            return Err(Error::Parameter("x₀ and ξ₀ must share a positive dimension".into()));
        }
        if !(self.eps_exponent > 0.0 && self.eps_exponent < 1.0) {
            return Err(Error::Parameter(format!("ε exponent must lie in (0,1), got {}", self.eps_exponent)));
        }
        if !(self.eps_coef > 0.0) || !(self.profile_radius > 0.0) {
            return Err(Error::Parameter("ε coefficient and profile radius must be positive".into()));
        }
        Ok(())
    }
}

fn packet_with_center(spec: &WavePacketSpec, h: f64, center_xi: &[f64]) -> Result<BuiltState> {
    spec.validate()?;
    if !(h > 0.0) {
        return Err(Error::Parameter(format!("h must be positive, got {h}")));
    }
    let d = spec.x0.len();
    let eps = spec.eps(h);
    if eps / h < 2.0 {
        return Err(Error::Parameter(format!("ε_h/h = {} is below 2", eps / h)));
    }
    let profile = BumpProfile::new(spec.profile_radius, d)?;
    let center: Vec<f64> = center_xi.iter().map(|x| x / h).collect();
    let reach = spec.profile_radius / eps;
    let lo: Vec<i64> = center.iter().map(|c| (c - reach).floor() as i64).collect();
    let hi: Vec<i64> = center.iter().map(|c| (c + reach).ceil() as i64).collect();
    let volume: u128 = lo.iter().zip(&hi).map(|(l, h)| (h - l + 1) as u128).product();
    let estimate = (volume as f64 * ball_fraction(d)) as u128;
    if estimate > spec.max_modes as u128 {
        return Err(Error::Scale { needed: estimate, budget: spec.max_modes });
    }
    let amp = (eps / (2.0 * PI)).powf(d as f64 / 2.0);
    let mut modes = Vec::new();
    let mut amps = Vec::new();
    let mut k = lo.clone();
    let mut delta = vec![0.0; d];
    'outer: loop {
        for i in 0..d {
            delta[i] = k[i] as f64 - center[i];
        }
        let r = eps * delta.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r < spec.profile_radius {
            let phase: f64 = -delta.iter().zip(&spec.x0).map(|(a, b)| a * b).sum::<f64>();
            let zeta: Vec<f64> = delta.iter().map(|x| eps * x).collect();
            modes.extend_from_slice(&k);
            amps.push(C64::from_polar(amp * profile.value(&zeta), phase));
        }
        for i in (0..d).rev() {
            if k[i] < hi[i] {
                k[i] += 1;
                continue 'outer;
            }
            k[i] = lo[i];
        }
        break;
    }
    if amps.len() > spec.max_modes {
        return Err(Error::Scale { needed: amps.len() as u128, budget: spec.max_modes });
    }
    let raw = FourierState::from_parts(h, d, modes, amps);
    let raw_norm_sq = raw.norm_sq();
    Ok(BuiltState { state: raw.normalized(), raw_norm_sq })
}

/// Volume of the unit ball over that of its bounding cube, padded.
fn ball_fraction(d: usize) -> f64 {
    let unit_ball = PI.powf(d as f64 / 2.0) / crate::profile::sphere_area(d) * 2.0 / d as f64;
    (unit_ball / 2f64.powi(d as i32) * 1.05).min(1.0)
}

/// The periodized Gaussian-free packet `ε^{-d/2} ρ((x−x₀)/ε) e^{iξ₀·x/h}` via Poisson summation.
pub fn wave_packet(spec: &WavePacketSpec, h: f64) -> Result<BuiltState> {
    packet_with_center(spec, h, &spec.xi0)
}

/// Packet multiplied by `e^{iη₀·x/(hτ_h)}`: the center moves to `ξ₀ + η₀/τ_h`.
pub fn modulated_wave_packet(spec: &WavePacketSpec, h: f64) -> Result<BuiltState> {
    let m = spec
        .modulation
        .as_ref()
        .ok_or_else(|| Error::Parameter("modulated packet needs η₀ and a time scale".into()))?;
    if m.eta0.len() != spec.xi0.len() {
        return Err(Error::Parameter("η₀ has the wrong dimension".into()));
    }
    if let Some(module) = &m.module {
        let (_, resid) = module.coordinates(&m.eta0);
        if resid > 1e-9 * m.eta0.iter().map(|x| x.abs()).fold(1.0, f64::max) {
            return Err(Error::Parameter(format!("η₀ is not in ⟨Λ⟩ = ⟨{module}⟩")));
        }
    }
    let tau = m.time_scale.value(h);
    let center: Vec<f64> = spec.xi0.iter().zip(&m.eta0).map(|(x, e)| x + e / tau).collect();
    packet_with_center(spec, h, &center)
}

/// Normalized finite superposition of plane waves.
pub fn spectral_superposition(h: f64, dim: usize, modes: Vec<(Vec<i64>, C64)>) -> Result<BuiltState> {
    if modes.is_empty() || modes.iter().all(|(_, a)| a.norm_sqr() == 0.0) {
        return Err(Error::Parameter("superposition needs a nonzero coefficient".into()));
    }
    let raw = FourierState::new(h, dim, modes)?;
    let raw_norm_sq = raw.norm_sq();
    Ok(BuiltState { state: raw.normalized(), raw_norm_sq })
}

/// `Σ_{|hk|² > R} |û(k)|²`.
pub fn oscillation_tail(u: &FourierState, r: f64) -> f64 {
    let h = u.h();
    u.iter()
        .filter(|(k, _)| k.iter().map(|&x| (h * x as f64).powi(2)).sum::<f64>() > r)
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

/// Separable state `c·e^{ix₁/h}·g_h(x₂)·χ(x₂)` on `T²`.
#[derive(Clone, Debug)]
pub struct WunschState {
    pub state: FourierState,
    pub n: i64,
    pub eps_exponent: f64,
    pub grid: usize,
    pub raw_norm_sq: f64,
    samples: Vec<f64>,
}

/// Points of the x₂ sampling grid.
pub const WUNSCH_GRID: usize = 4096;

/// `χ` of the Wunsch state: 1 on `|x₂| < 1/4`, 0 on `|x₂| > 1/2`.
pub fn wunsch_cutoff() -> Plateau {
    Plateau { inner: 0.25, outer: 0.5 }
}

fn periodic_coordinate(i: usize, n: usize) -> f64 {
    let x = 2.0 * PI * i as f64 / n as f64;
    if x >= PI {
        x - 2.0 * PI
    } else {
        x
    }
}

/// Unitary Fourier coefficients `(2π)^{-1/2}∫f e^{-imx}` of samples on `[0, 2π)`,
/// indexed `m ∈ [−n/2, n/2)`.
pub(crate) fn sampled_coefficients(samples: &[f64]) -> Vec<(i64, C64)> {
    let n = samples.len();
    let mut buf: Vec<C64> = samples.iter().map(|&s| C64::new(s, 0.0)).collect();
    FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut buf);
    let w = (2.0 * PI).sqrt() / n as f64;
    let half = (n / 2) as i64;
    (-half..half).map(|m| (m, buf[m.rem_euclid(n as i64) as usize] * w)).collect()
}

pub fn wunsch_quasimode(h: f64, eps_exponent: f64) -> Result<WunschState> {
    if !(eps_exponent > 0.0 && eps_exponent < 1.0) {
        return Err(Error::Parameter(format!("ε exponent must lie in (0,1), got {eps_exponent}")));
    }
    let nf = (1.0 / h).round();
    if !(h > 0.0) || (nf * h - 1.0).abs() > 1e-12 {
        return Err(Error::Parameter(format!("1/h must be an integer, got h = {h}")));
    }
    let n = nf as i64;
    let width = h.powf(eps_exponent);
    let chi = wunsch_cutoff();
    let samples: Vec<f64> = (0..WUNSCH_GRID)
        .map(|i| {
            let x = periodic_coordinate(i, WUNSCH_GRID);
            (-x * x / (2.0 * width)).exp() * chi.at(x.abs())
        })
        .collect();
    let coeffs = sampled_coefficients(&samples);
    // The x₁ factor e^{iNx₁} has unitary coefficient (2π)^{1/2} at N.
    let x1 = (2.0 * PI).sqrt();
    let entries: Vec<(Vec<i64>, C64)> =
        coeffs.into_iter().filter(|(_, c)| c.norm_sqr() > 0.0).map(|(m, c)| (vec![n, m], c * x1)).collect();
    let built = spectral_superposition(h, 2, entries)?;
    Ok(WunschState { state: built.state, n, eps_exponent, grid: WUNSCH_GRID, raw_norm_sq: built.raw_norm_sq, samples })
}

impl WunschState {
    /// `∫x₂²|u|² / ∫|u|²` on the sampling grid.
    pub fn x2_second_moment(&self) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for (i, s) in self.samples.iter().enumerate() {
            let x = periodic_coordinate(i, self.grid);
            num += x * x * s * s;
            den += s * s;
        }
        num / den
    }

    /// Normalized x₂ coefficients.
    pub fn x2_coefficients(&self) -> Vec<(i64, C64)> {
        let s = (2.0 * PI).sqrt();
        self.state.iter().map(|(k, a)| (k[1], a / s)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packet_support_in_one_dimension() {
        let spec = WavePacketSpec::new(vec![0.0], vec![1.0], 0.5);
        let h: f64 = 0.25;
        let mut s = spec.clone();
        s.eps_coef = 0.5 / h.powf(0.5);
        let b = wave_packet(&s, h).unwrap();
        // |k − 4| = 2 sits on the edge of supp ρ̂, where ρ̂ = 0.
        let ks: Vec<i64> = b.state.iter().map(|(k, _)| k[0]).collect();
        assert_eq!(ks, vec![3, 4, 5]);
    }

    #[test]
    fn packet_peak_value() {
        let spec = WavePacketSpec::new(vec![0.3, 1.0], vec![1.0, 0.0], 0.5);
        let h = 1.0 / 64.0;
        let b = wave_packet(&spec, h).unwrap();
        let eps = spec.eps(h);
        let profile = BumpProfile::new(1.0, 2).unwrap();
        let peak = (eps / (2.0 * PI)) * profile.value(&[0.0, 0.0]);
        let got = b.state.coefficient(&[64, 0]).norm() * b.raw_norm_sq.sqrt();
        assert!((got - peak).abs() < 1e-14);
    }

    #[test]
    fn packet_rejects_small_eps() {
        let mut spec = WavePacketSpec::new(vec![0.0], vec![1.0], 0.5);
        spec.eps_coef = 0.01;
        assert!(matches!(wave_packet(&spec, 0.25), Err(Error::Parameter(_))));
    }

    #[test]
    fn packet_budget() {
        let mut spec = WavePacketSpec::new(vec![0.0, 0.0], vec![1.0, 0.0], 0.5);
        spec.max_modes = 100;
        assert!(matches!(wave_packet(&spec, 1.0 / 1024.0), Err(Error::Scale { .. })));
    }

    #[test]
    fn superposition_examples() {
        let b = spectral_superposition(0.1, 2, vec![(vec![3, 4], C64::new(2.0, 0.0))]).unwrap();
        assert_eq!(b.state.coefficient(&[3, 4]), C64::new(1.0, 0.0));
        assert!(spectral_superposition(0.1, 2, vec![]).is_err());
        assert!(spectral_superposition(0.1, 1, vec![(vec![1], C64::new(0.0, 0.0))]).is_err());
    }

    #[test]
    fn tails() {
        let b = spectral_superposition(
            0.5,
            1,
            vec![(vec![1], C64::new(0.6, 0.0)), (vec![4], C64::new(0.8, 0.0))],
        )
        .unwrap();
        assert!((oscillation_tail(&b.state, 1.0) - 0.64).abs() < 1e-15);
        assert_eq!(oscillation_tail(&b.state, 4.0), 0.0);
    }

    #[test]
    fn wunsch_requires_integer_inverse() {
        assert!(wunsch_quasimode(0.3, 0.5).is_err());
        let w = wunsch_quasimode(1.0 / 64.0, 0.5).unwrap();
        assert!((w.state.norm_sq() - 1.0).abs() < 1e-12);
        assert!(w.state.iter().all(|(k, _)| k[0] == 64));
    }

    #[test]
    fn jsonl_round_trip() {
        let b = spectral_superposition(
            0.25,
            2,
            vec![(vec![1, -2], C64::new(0.1, -0.3)), (vec![0, 5], C64::new(1.0 / 3.0, 0.2))],
        )
        .unwrap();
        let mut buf = Vec::new();
        b.state.write_jsonl(&mut buf).unwrap();
        let back = FourierState::read_jsonl(0.25, buf.as_slice()).unwrap();
        assert_eq!(back, b.state);
    }

    #[test]
    fn mode_index_lookup() {
        let b = spectral_superposition(
            0.25,
            2,
            vec![(vec![1, -2], C64::new(1.0, 0.0)), (vec![0, 5], C64::new(1.0, 0.0))],
        )
        .unwrap();
        let idx = b.state.index();
        assert_eq!(idx.get(&[1, -2]), b.state.index_of(&[1, -2]));
        assert_eq!(idx.get_shifted(&[0, 0], &[0, 5]), b.state.index_of(&[0, 5]));
        assert_eq!(idx.get(&[2, 2]), None);
    }
}
