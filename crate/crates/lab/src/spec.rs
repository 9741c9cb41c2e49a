//! Scenario descriptions and the versioned defaults they are loaded from.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use scl_core::hamiltonian::HamiltonianSpec;
use scl_core::lattice::RationalVector;
use scl_core::propagator::TimeScale;
use scl_core::wigner::{CoeffFn, Symbol, TimeWindow};
use scl_core::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioName {
    OrbitMeasure,
    DiracDrift,
    ThresholdSweep,
    DegenerateQuasimode,
    WunschSubprincipal,
    HierarchyAverage,
    ResonantTransport,
    DiagonalConcentration,
    TwoMicrolocalConsistency,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 9] = [
        Self::OrbitMeasure,
        Self::DiracDrift,
        Self::ThresholdSweep,
        Self::DegenerateQuasimode,
        Self::WunschSubprincipal,
        Self::HierarchyAverage,
        Self::ResonantTransport,
        Self::DiagonalConcentration,
        Self::TwoMicrolocalConsistency,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::OrbitMeasure => "orbit_measure",
            Self::DiracDrift => "dirac_drift",
            Self::ThresholdSweep => "threshold_sweep",
            Self::DegenerateQuasimode => "degenerate_quasimode",
            Self::WunschSubprincipal => "wunsch_subprincipal",
            Self::HierarchyAverage => "hierarchy_average",
            Self::ResonantTransport => "resonant_transport",
            Self::DiagonalConcentration => "diagonal_concentration",
            Self::TwoMicrolocalConsistency => "two_microlocal_consistency",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .find(|n| n.as_str() == s)
            .copied()
            .ok_or_else(|| Error::Parse(format!("unknown scenario '{s}'")))
    }
}

/// Dyadic ladder `h = 2^{-j}`, `j = jmin..=jmax`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ladder {
    pub jmin: u32,
    pub jmax: u32,
}

impl Ladder {
    pub fn validate(&self) -> Result<()> {
        if self.jmin > self.jmax || self.jmax > 40 {
            return Err(Error::Parameter(format!("empty or oversized ladder {}..{}", self.jmin, self.jmax)));
        }
        Ok(())
    }

    /// `(j, h)` pairs in order of decreasing `h`.
    pub fn steps(&self) -> Vec<(u32, f64)> {
        (self.jmin..=self.jmax).map(|j| (j, 2f64.powi(-(j as i32)))).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateSpec {
    /// Wave packet at `(x₀, ξ₀)` of width `c·h^γ`, optionally modulated by `η₀`.
    Packet {
        x0: Vec<f64>,
        xi0: RationalVector,
        eps_exponent: f64,
        #[serde(default = "one")]
        eps_coef: f64,
        #[serde(default = "one")]
        profile_radius: f64,
        #[serde(default)]
        eta0: Option<Vec<f64>>,
    },
    /// Plane waves `(K, a)` and `(a, K)` for each offset `a`, `K = 1/h`, equal weights.
    MirrorPairs { offsets: Vec<i64> },
    /// `Σ_{|n| ≤ N/2} e^{−n²/(2σ²)} e^{in(x₁−x₂)}` with `N = 1/h`, `σ = width_fraction·N`.
    AntiDiagonal { width_fraction: f64 },
    /// Gaussian-with-cutoff quasimode in `x₂` carried by `e^{ix₁/h}`.
    Wunsch { eps_exponent: f64 },
    /// One-dimensional packet in `k₁` times fixed weights on `k₂ = fibre[i].0`.
    FibredPacket { x0: f64, xi0: RationalVector, eps_exponent: f64, fibre: Vec<(i64, f64)> },
}

fn one() -> f64 {
    1.0
}

/// `â_m(ξ) = c_m·(1 + g_m·ξ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolTerm {
    pub m: Vec<i64>,
    pub re: f64,
    pub im: f64,
    #[serde(default)]
    pub gradient: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolSpec {
    pub terms: Vec<SymbolTerm>,
}

impl SymbolSpec {
    pub fn build(&self, dim: usize) -> Result<Symbol> {
        let entries = self
            .terms
            .iter()
            .map(|t| {
                if !t.gradient.is_empty() && t.gradient.len() != dim {
                    return Err(Error::Parameter("symbol gradient of wrong dimension".into()));
                }
                let c = C64::new(t.re, t.im);
                let g = t.gradient.clone();
                let f: CoeffFn = Arc::new(move |xi: &[f64]| c * (1.0 + g.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>()));
                Ok((t.m.clone(), f))
            })
            .collect::<Result<Vec<_>>>()?;
        Symbol::new(dim, entries, f64::INFINITY)
    }
}

/// Ladders of the two-scale cutoffs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitLadder {
    pub r: Vec<f64>,
    pub delta: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: ScenarioName,
    pub hamiltonian: HamiltonianSpec,
    pub state: StateSpec,
    pub time_scale: TimeScale,
    pub window: TimeWindow,
    pub ladder: Ladder,
    #[serde(default)]
    pub split: Option<SplitLadder>,
    #[serde(default)]
    pub symbol: Option<SymbolSpec>,
    /// Evaluation times within the window, where a scenario samples instants.
    #[serde(default)]
    pub times: Vec<f64>,
    /// Scenario constants not covered by the typed fields.
    #[serde(default)]
    pub constants: BTreeMap<String, f64>,
    /// Pass/fail gates of the built-in assertions.
    #[serde(default)]
    pub thresholds: BTreeMap<String, f64>,
}

impl ScenarioSpec {
    pub fn constant(&self, key: &str) -> Result<f64> {
        self.constants.get(key).copied().ok_or_else(|| Error::Parameter(format!("{}: missing constant '{key}'", self.name)))
    }

    pub fn threshold(&self, key: &str) -> Result<f64> {
        self.thresholds.get(key).copied().ok_or_else(|| Error::Parameter(format!("{}: missing threshold '{key}'", self.name)))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// The defaults file compiled into the crate.
pub const DEFAULTS_JSON: &str = include_str!("../defaults.json");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Defaults {
    pub version: u32,
    pub scenarios: Vec<ScenarioSpec>,
}

impl Defaults {
    pub fn builtin() -> Self {
        serde_json::from_str(DEFAULTS_JSON).expect("bundled defaults parse")
    }

    pub fn scenario(&self, name: ScenarioName) -> Result<ScenarioSpec> {
        self.scenarios
            .iter()
            .find(|s| s.name == name)
            .cloned()
            .ok_or_else(|| Error::Parameter(format!("no defaults for {name}")))
    }
}

pub fn default_spec(name: ScenarioName) -> ScenarioSpec {
    Defaults::builtin().scenario(name).expect("every scenario has defaults")
}
