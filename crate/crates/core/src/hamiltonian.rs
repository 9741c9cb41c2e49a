//! Hamiltonian symbols `H(ξ)`, their jets, definiteness, and the split `ξ = σ + η`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{
    classify_momentum, complement_lattice, orthogonal_lattice, rational_to_f64, PrimitiveModule,
    RationalVector, Space,
};
use crate::profile::Plateau;

/// `(H(ξ), dH(ξ), d²H(ξ))`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: DMatrix<f64>,
}

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type MatrixFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// User-supplied smooth evaluators; never exact.
#[derive(Clone)]
pub struct CustomEvaluators {
    pub value: ScalarFn,
    pub gradient: VectorFn,
    pub hessian: MatrixFn,
}

#[derive(Clone)]
pub enum HamiltonianKind {
    /// `ξ·Aξ` with symmetric rational `A`.
    Quadratic { a: Vec<Vec<BigRational>> },
    /// `|ξ|^{2k}`, stored as the exponent `2k`.
    EvenPower { exponent: u32 },
    /// `ω·ξ`.
    Linear { omega: RationalVector },
    /// `Σ s_i c_i ξ_i²` with signs `s_i = ±1`.
    DifferenceQuadratic { signs: Vec<i8>, coefficients: Vec<BigRational> },
    Custom(CustomEvaluators),
}

impl fmt::Debug for HamiltonianKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Quadratic { a } => f.debug_struct("Quadratic").field("a", a).finish(),
            Self::EvenPower { exponent } => f.debug_struct("EvenPower").field("exponent", exponent).finish(),
            Self::Linear { omega } => f.debug_struct("Linear").field("omega", omega).finish(),
            Self::DifferenceQuadratic { signs, coefficients } => f
                .debug_struct("DifferenceQuadratic")
                .field("signs", signs)
                .field("coefficients", coefficients)
                .finish(),
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// `H(hk) = scale(h)·F(k)` with `F` integer valued on the lattice.
#[derive(Clone, Debug, PartialEq)]
pub enum LatticeForm {
    Quadratic { m: Vec<Vec<i64>>, denom: BigInt },
    Power { k: u32 },
    Linear { w: Vec<i64>, denom: BigInt },
}

impl LatticeForm {
    pub fn degree(&self) -> u32 {
        match self {
            Self::Quadratic { .. } => 2,
            Self::Power { k } => 2 * k,
            Self::Linear { .. } => 1,
        }
    }

    fn denom(&self) -> BigInt {
        match self {
            Self::Quadratic { denom, .. } | Self::Linear { denom, .. } => denom.clone(),
            Self::Power { .. } => BigInt::one(),
        }
    }

    /// `h^degree / denom`.
    pub fn scale(&self, h: &BigRational) -> BigRational {
        num_traits::pow(h.clone(), self.degree() as usize) / BigRational::from_integer(self.denom())
    }

    /// `F(k)`, or `None` on `i128` overflow.
    pub fn eval(&self, k: &[i64]) -> Option<i128> {
        match self {
            Self::Quadratic { m, .. } => {
                let mut acc: i128 = 0;
                for (i, row) in m.iter().enumerate() {
                    let mut inner: i128 = 0;
                    for (j, &mij) in row.iter().enumerate() {
                        inner = inner.checked_add((mij as i128).checked_mul(k[j] as i128)?)?;
                    }
                    acc = acc.checked_add(inner.checked_mul(k[i] as i128)?)?;
                }
                Some(acc)
            }
            Self::Power { k: p } => {
                let mut s: i128 = 0;
                for &x in k {
                    s = s.checked_add((x as i128).checked_mul(x as i128)?)?;
                }
                s.checked_pow(*p)
            }
            Self::Linear { w, .. } => {
                let mut acc: i128 = 0;
                for (&wi, &ki) in w.iter().zip(k) {
                    acc = acc.checked_add((wi as i128).checked_mul(ki as i128)?)?;
                }
                Some(acc)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct HamiltonianModel {
    dim: usize,
    kind: HamiltonianKind,
    a_f64: Option<DMatrix<f64>>,
    omega_f64: Option<Vec<f64>>,
}

fn rational_matrix_to_f64(a: &[Vec<BigRational>]) -> DMatrix<f64> {
    let d = a.len();
    DMatrix::from_fn(d, d, |i, j| rational_to_f64(&a[i][j]))
}

impl HamiltonianModel {
    pub fn quadratic(a: Vec<Vec<BigRational>>) -> Result<Self> {
        let d = a.len();
        if d == 0 || a.iter().any(|r| r.len() != d) {
            return Err(Error::Parameter("quadratic form must be a nonempty square matrix".into()));
        }
        for i in 0..d {
            for j in 0..i {
                if a[i][j] != a[j][i] {
                    return Err(Error::Parameter("quadratic form must be symmetric".into()));
                }
            }
        }
        let a_f64 = Some(rational_matrix_to_f64(&a));
        Ok(Self { dim: d, kind: HamiltonianKind::Quadratic { a }, a_f64, omega_f64: None })
    }

    /// `|ξ|²` in dimension `d`.
    pub fn laplacian(dim: usize) -> Self {
        let a = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }).collect())
            .collect();
        Self::quadratic(a).expect("identity is a valid form")
    }

    pub fn even_power(dim: usize, exponent: u32) -> Result<Self> {
        if dim == 0 || exponent == 0 || exponent % 2 != 0 {
            return Err(Error::Parameter(format!("even_power needs d >= 1 and an even exponent, got {exponent}")));
        }
        Ok(Self { dim, kind: HamiltonianKind::EvenPower { exponent }, a_f64: None, omega_f64: None })
    }

    pub fn linear(omega: RationalVector) -> Result<Self> {
        if omega.dim() == 0 {
            return Err(Error::Parameter("linear model needs d >= 1".into()));
        }
        let omega_f64 = Some(omega.to_f64());
        Ok(Self { dim: omega.dim(), kind: HamiltonianKind::Linear { omega }, a_f64: None, omega_f64 })
    }

    pub fn difference_quadratic(signs: Vec<i8>, coefficients: Vec<BigRational>) -> Result<Self> {
        if signs.is_empty() || signs.len() != coefficients.len() || signs.iter().any(|s| s.abs() != 1) {
            return Err(Error::Parameter("signature pattern must be nonempty with entries ±1".into()));
        }
        let d = signs.len();
        let diag: Vec<f64> =
            signs.iter().zip(&coefficients).map(|(&s, c)| s as f64 * rational_to_f64(c)).collect();
        let a_f64 = Some(DMatrix::from_diagonal(&DVector::from_vec(diag)));
        Ok(Self { dim: d, kind: HamiltonianKind::DifferenceQuadratic { signs, coefficients }, a_f64, omega_f64: None })
    }

    pub fn custom(dim: usize, evaluators: CustomEvaluators) -> Self {
        Self { dim, kind: HamiltonianKind::Custom(evaluators), a_f64: None, omega_f64: None }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &HamiltonianKind {
        &self.kind
    }

    /// Whether `H(ξ)` and `dH(ξ)` are exact rationals on rational `ξ`.
    pub fn is_exact(&self) -> bool {
        !matches!(self.kind, HamiltonianKind::Custom(_))
    }

    pub fn value(&self, xi: &[f64]) -> f64 {
        match &self.kind {
            HamiltonianKind::Quadratic { .. } | HamiltonianKind::DifferenceQuadratic { .. } => {
                let a = self.a_f64.as_ref().expect("cached form");
                let mut acc = 0.0;
                for i in 0..self.dim {
                    let mut inner = 0.0;
                    for j in 0..self.dim {
                        inner += a[(i, j)] * xi[j];
                    }
                    acc += xi[i] * inner;
                }
                acc
            }
            HamiltonianKind::EvenPower { exponent } => {
                let s: f64 = xi.iter().map(|x| x * x).sum();
                s.powi((*exponent / 2) as i32)
            }
            HamiltonianKind::Linear { .. } => {
                self.omega_f64.as_ref().expect("cached").iter().zip(xi).map(|(w, x)| w * x).sum()
            }
            HamiltonianKind::Custom(c) => (c.value)(xi),
        }
    }

    pub fn gradient(&self, xi: &[f64]) -> Vec<f64> {
        match &self.kind {
            HamiltonianKind::Quadratic { .. } | HamiltonianKind::DifferenceQuadratic { .. } => {
                let a = self.a_f64.as_ref().expect("cached form");
                (0..self.dim).map(|i| 2.0 * (0..self.dim).map(|j| a[(i, j)] * xi[j]).sum::<f64>()).collect()
            }
            HamiltonianKind::EvenPower { exponent } => {
                let k = (*exponent / 2) as i32;
                let s: f64 = xi.iter().map(|x| x * x).sum();
                let f = 2.0 * k as f64 * s.powi(k - 1);
                xi.iter().map(|x| f * x).collect()
            }
            HamiltonianKind::Linear { .. } => self.omega_f64.clone().expect("cached"),
            HamiltonianKind::Custom(c) => (c.gradient)(xi),
        }
    }

    pub fn hessian(&self, xi: &[f64]) -> DMatrix<f64> {
        let d = self.dim;
        match &self.kind {
            HamiltonianKind::Quadratic { .. } | HamiltonianKind::DifferenceQuadratic { .. } => {
                self.a_f64.as_ref().expect("cached form") * 2.0
            }
            HamiltonianKind::EvenPower { exponent } => {
                let k = (*exponent / 2) as i32;
                let s: f64 = xi.iter().map(|x| x * x).sum();
                let kf = k as f64;
                let diag = 2.0 * kf * s.powi(k - 1);
                let outer = if k >= 2 { 4.0 * kf * (kf - 1.0) * s.powi(k - 2) } else { 0.0 };
                DMatrix::from_fn(d, d, |i, j| outer * xi[i] * xi[j] + if i == j { diag } else { 0.0 })
            }
            HamiltonianKind::Linear { .. } => DMatrix::zeros(d, d),
            HamiltonianKind::Custom(c) => (c.hessian)(xi),
        }
    }

    pub fn evaluate_jet(&self, xi: &[f64]) -> Jet {
        Jet { value: self.value(xi), gradient: self.gradient(xi), hessian: self.hessian(xi) }
    }

    /// All eigenvalues of `d²H(ξ)` share one sign and exceed `tol` in magnitude.
    pub fn is_definite(&self, xi: &[f64], tol: f64) -> bool {
        let hess = self.hessian(xi);
        let sym = (&hess + hess.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym).eigenvalues;
        eig.iter().all(|&l| l >= tol) || eig.iter().all(|&l| l <= -tol)
    }

    fn exact_form(&self) -> Option<Vec<Vec<BigRational>>> {
        match &self.kind {
            HamiltonianKind::Quadratic { a } => Some(a.clone()),
            HamiltonianKind::DifferenceQuadratic { signs, coefficients } => {
                let d = self.dim;
                Some(
                    (0..d)
                        .map(|i| {
                            (0..d)
                                .map(|j| {
                                    if i == j {
                                        &coefficients[i] * BigRational::from_integer(signs[i].into())
                                    } else {
                                        BigRational::zero()
                                    }
                                })
                                .collect()
                        })
                        .collect(),
                )
            }
            _ => None,
        }
    }

    fn check_dim(&self, xi: &RationalVector) -> Result<()> {
        if xi.dim() != self.dim {
            return Err(Error::Parameter(format!("momentum of dimension {} for a model in d={}", xi.dim(), self.dim)));
        }
        Ok(())
    }

    pub fn exact_value(&self, xi: &RationalVector) -> Result<BigRational> {
        self.check_dim(xi)?;
        let x = xi.entries();
        if let Some(a) = self.exact_form() {
            let mut acc = BigRational::zero();
            for i in 0..self.dim {
                for j in 0..self.dim {
                    acc += &x[i] * &a[i][j] * &x[j];
                }
            }
            return Ok(acc);
        }
        match &self.kind {
            HamiltonianKind::EvenPower { exponent } => {
                let s = x.iter().fold(BigRational::zero(), |acc, v| acc + v * v);
                Ok(num_traits::pow(s, (*exponent / 2) as usize))
            }
            HamiltonianKind::Linear { omega } => {
                Ok(omega.entries().iter().zip(x).fold(BigRational::zero(), |acc, (w, v)| acc + w * v))
            }
            _ => Err(Error::Exactness("custom evaluators are floating point only".into())),
        }
    }

    pub fn exact_gradient(&self, xi: &RationalVector) -> Result<RationalVector> {
        self.check_dim(xi)?;
        let x = xi.entries();
        let two = BigRational::from_integer(2.into());
        if let Some(a) = self.exact_form() {
            let g = (0..self.dim)
                .map(|i| (0..self.dim).fold(BigRational::zero(), |acc, j| acc + &a[i][j] * &x[j]) * &two)
                .collect();
            return Ok(RationalVector::new(g));
        }
        match &self.kind {
            HamiltonianKind::EvenPower { exponent } => {
                let k = (*exponent / 2) as usize;
                let s = x.iter().fold(BigRational::zero(), |acc, v| acc + v * v);
                let f = BigRational::from_integer((2 * k).into()) * num_traits::pow(s, k - 1);
                Ok(RationalVector::new(x.iter().map(|v| v * &f).collect()))
            }
            HamiltonianKind::Linear { omega } => Ok(omega.clone()),
            _ => Err(Error::Exactness("custom evaluators are floating point only".into())),
        }
    }

    /// Integer structure of `H` on `hZ^d`, when the data allow it.
    pub fn lattice_form(&self) -> Option<LatticeForm> {
        if let Some(a) = self.exact_form() {
            let denom = a.iter().flatten().fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
            let scale = BigRational::from_integer(denom.clone());
            let m = a
                .iter()
                .map(|row| row.iter().map(|r| (r * &scale).to_integer().to_i64()).collect::<Option<Vec<_>>>())
                .collect::<Option<Vec<_>>>()?;
            return Some(LatticeForm::Quadratic { m, denom });
        }
        match &self.kind {
            HamiltonianKind::EvenPower { exponent } => Some(LatticeForm::Power { k: exponent / 2 }),
            HamiltonianKind::Linear { omega } => {
                let denom = omega.entries().iter().fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
                let scale = BigRational::from_integer(denom.clone());
                let w = omega
                    .entries()
                    .iter()
                    .map(|r| (r * &scale).to_integer().to_i64())
                    .collect::<Option<Vec<_>>>()?;
                Some(LatticeForm::Linear { w, denom })
            }
            _ => None,
        }
    }

    pub fn to_spec(&self) -> Option<HamiltonianSpec> {
        let fmt = crate::lattice::format_rational;
        Some(match &self.kind {
            HamiltonianKind::Quadratic { a } => {
                HamiltonianSpec::Quadratic { a: a.iter().map(|r| r.iter().map(fmt).collect()).collect() }
            }
            HamiltonianKind::EvenPower { exponent } => {
                HamiltonianSpec::EvenPower { dim: self.dim, exponent: *exponent }
            }
            HamiltonianKind::Linear { omega } => HamiltonianSpec::Linear { omega: omega.clone() },
            HamiltonianKind::DifferenceQuadratic { signs, coefficients } => HamiltonianSpec::DifferenceQuadratic {
                signs: signs.clone(),
                coefficients: coefficients.iter().map(fmt).collect(),
            },
            HamiltonianKind::Custom(_) => return None,
        })
    }
}

/// JSON model description; rationals are `"p/q"` strings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HamiltonianSpec {
    Quadratic {
        #[serde(rename = "A")]
        a: Vec<Vec<String>>,
    },
    EvenPower {
        dim: usize,
        exponent: u32,
    },
    Linear {
        omega: RationalVector,
    },
    DifferenceQuadratic {
        signs: Vec<i8>,
        coefficients: Vec<String>,
    },
}

impl HamiltonianSpec {
    pub fn build(&self) -> Result<HamiltonianModel> {
        let parse = crate::lattice::parse_rational;
        match self {
            Self::Quadratic { a } => HamiltonianModel::quadratic(
                a.iter().map(|r| r.iter().map(|s| parse(s)).collect::<Result<Vec<_>>>()).collect::<Result<Vec<_>>>()?,
            ),
            Self::EvenPower { dim, exponent } => HamiltonianModel::even_power(*dim, *exponent),
            Self::Linear { omega } => HamiltonianModel::linear(omega.clone()),
            Self::DifferenceQuadratic { signs, coefficients } => HamiltonianModel::difference_quadratic(
                signs.clone(),
                coefficients.iter().map(|s| parse(s)).collect::<Result<Vec<_>>>()?,
            ),
        }
    }
}

/// Output of the split `ξ = σ + η`.
#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    pub sigma: Vec<f64>,
    pub eta: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX: usize = 50;

/// Newton solve of `dH(ξ − Bᵀc)·b_i = 0` from `c = 0`.
pub(crate) fn solve_split(h: &HamiltonianModel, basis: &[Vec<f64>], xi: &[f64]) -> Result<Split> {
    let d = xi.len();
    let r = basis.len();
    if r == 0 {
        return Ok(Split { sigma: xi.to_vec(), eta: vec![0.0; d], iterations: 0, residual: 0.0 });
    }
    let b = DMatrix::from_fn(r, d, |i, j| basis[i][j]);
    let mut c = DVector::<f64>::zeros(r);
    let sigma_of = |c: &DVector<f64>| -> Vec<f64> {
        let shift = b.transpose() * c;
        xi.iter().zip(shift.iter()).map(|(x, s)| x - s).collect()
    };
    let mut sigma = sigma_of(&c);
    let mut iterations = 0;
    loop {
        let grad = DVector::from_vec(h.gradient(&sigma));
        let g = &b * &grad;
        let residual = g.amax();
        if residual <= NEWTON_TOL * grad.amax().max(1.0) {
            let eta = xi.iter().zip(&sigma).map(|(x, s)| x - s).collect();
            return Ok(Split { sigma, eta, iterations, residual });
        }
        if iterations == NEWTON_MAX {
            return Err(Error::Convergence { iterations, residual });
        }
        let jac = -(&b * h.hessian(&sigma) * b.transpose());
        let step = jac.lu().solve(&g).ok_or(Error::Convergence { iterations, residual })?;
        c -= step;
        sigma = sigma_of(&c);
        iterations += 1;
    }
}

/// Second-microlocalization data around `ξ₀ ∈ R_Λ`.
#[derive(Clone, Debug)]
pub struct TwoMicrolocalFrame {
    module: PrimitiveModule,
    xi0: RationalVector,
    xi0_f64: Vec<f64>,
    radius: f64,
    cutoff: Plateau,
    basis: Vec<Vec<f64>>,
    perp: PrimitiveModule,
    tilde: PrimitiveModule,
    alpha: DMatrix<f64>,
    coset: DMatrix<f64>,
}

impl TwoMicrolocalFrame {
    /// Validates `ξ₀ ∈ R_Λ` (exact models) or `ξ₀ ∈ I_Λ` (custom models) and
    /// definiteness of `d²H` on a 5^d grid inside `B(ξ₀, ε)`.
    pub fn new(h: &HamiltonianModel, module: PrimitiveModule, xi0: RationalVector, radius: f64) -> Result<Self> {
        let d = h.dim();
        if module.space() != Space::Dual || module.dim() != d || xi0.dim() != d {
            return Err(Error::Parameter("frame needs a dual module and ξ₀ of the model's dimension".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Parameter(format!("frame radius must be positive, got {radius}")));
        }
        let xi0_f64 = xi0.to_f64();
        let basis = module.basis_f64();
        if h.is_exact() {
            let class = classify_momentum(h, &xi0)?;
            if class.module != module {
                return Err(Error::Parameter(format!("ξ₀ has resonance module {} not {}", class.module, module)));
            }
        } else {
            let g = h.gradient(&xi0_f64);
            let worst = basis.iter().map(|k| k.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>().abs()).fold(0.0, f64::max);
            if worst > 1e-10 {
                return Err(Error::Parameter(format!("ξ₀ is not in I_Λ (residual {worst:.3e})")));
            }
        }
        let side = radius * 0.999 / (d as f64).sqrt();
        let steps = [-1.0, -0.5, 0.0, 0.5, 1.0];
        let total = 5usize.pow(d as u32);
        for idx in 0..total {
            let mut rem = idx;
            let p: Vec<f64> = (0..d)
                .map(|i| {
                    let s = steps[rem % 5];
                    rem /= 5;
                    xi0_f64[i] + side * s
                })
                .collect();
            if !h.is_definite(&p, 1e-9) {
                return Err(Error::Domain(format!("Hessian not definite at {p:?}; shrink ε")));
            }
        }
        let perp = orthogonal_lattice(&module);
        let tilde = complement_lattice(&perp);
        let stacked = |a: &PrimitiveModule, b: &PrimitiveModule| {
            let rows: Vec<Vec<f64>> = a.basis_f64().into_iter().chain(b.basis_f64()).collect();
            DMatrix::from_fn(d, d, |i, j| rows[i][j])
        };
        let m = stacked(&perp, &tilde);
        let minv = m.clone().try_inverse().ok_or_else(|| Error::Parameter("singular lattice split".into()))?;
        let r = module.rank();
        let mask = DMatrix::from_fn(d, d, |i, j| if i == j && i >= d - r { 1.0 } else { 0.0 });
        let alpha = (&minv * mask * &m).map(f64::round);
        let coset_split = stacked(&module, &complement_lattice(&module));
        let coset = coset_split.try_inverse().ok_or_else(|| Error::Parameter("singular coset split".into()))?;
        Ok(Self { module, xi0, xi0_f64, radius, cutoff: Plateau { inner: radius / 2.0, outer: radius }, basis, perp, tilde, alpha, coset })
    }

    pub fn module(&self) -> &PrimitiveModule {
        &self.module
    }

    pub fn xi0(&self) -> &RationalVector {
        &self.xi0
    }

    pub fn xi0_f64(&self) -> &[f64] {
        &self.xi0_f64
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// `b(ξ)`: 1 on `B(ξ₀, ε/2)`, 0 outside `B(ξ₀, ε)`.
    pub fn cutoff(&self, xi: &[f64]) -> f64 {
        self.cutoff.at(self.distance(xi))
    }

    pub fn distance(&self, xi: &[f64]) -> f64 {
        xi.iter().zip(&self.xi0_f64).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// `Λ^⊥ ⊂ Z^d`.
    pub fn perp(&self) -> &PrimitiveModule {
        &self.perp
    }

    /// `Λ̃` with `Λ^⊥ ⊕ Λ̃ = Z^d`.
    pub fn tilde(&self) -> &PrimitiveModule {
        &self.tilde
    }

    /// `σ^α`: the covector `y ↦ σ·α(y)`, with `α` the projection onto `⟨Λ̃⟩` along `Λ^⊥`.
    pub fn sigma_alpha(&self, sigma: &[f64]) -> Vec<f64> {
        let s = DVector::from_column_slice(sigma);
        (&self.alpha * s).iter().copied().collect()
    }

    /// Integer label of the class of `k` in `Z^d / Λ`.
    pub fn coset_label(&self, k: &[i64]) -> Vec<i64> {
        let d = k.len();
        let r = self.module.rank();
        let kv = DVector::from_iterator(d, k.iter().map(|&x| x as f64));
        let coords = self.coset.transpose() * kv;
        coords.iter().skip(r).map(|c| c.round() as i64).collect()
    }
}

/// `ξ = σ + η` with `σ ∈ I_Λ`, `η ∈ ⟨Λ⟩`, for `|ξ − ξ₀| < ε/2`.
pub fn f_coordinates(frame: &TwoMicrolocalFrame, h: &HamiltonianModel, xi: &[f64]) -> Result<Split> {
    if xi.len() != h.dim() {
        return Err(Error::Parameter("momentum dimension mismatch".into()));
    }
    let dist = frame.distance(xi);
    if dist.is_nan() || dist >= frame.radius / 2.0 {
        return Err(Error::Domain(format!("|ξ − ξ₀| = {dist:.6} is not below ε/2 = {}", frame.radius / 2.0)));
    }
    solve_split(h, &frame.basis, xi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn custom_cubic() -> HamiltonianModel {
        HamiltonianModel::custom(
            2,
            CustomEvaluators {
                value: Arc::new(|x| x[0] * x[0] + x[1] * x[1] + x[0] * x[1] * x[1]),
                gradient: Arc::new(|x| vec![2.0 * x[0] + x[1] * x[1], 2.0 * x[1] + 2.0 * x[0] * x[1]]),
                hessian: Arc::new(|x| DMatrix::from_row_slice(2, 2, &[2.0, 2.0 * x[1], 2.0 * x[1], 2.0 + 2.0 * x[0]])),
            },
        )
    }

    #[test]
    fn jet_examples() {
        let j = HamiltonianModel::laplacian(2).evaluate_jet(&[1.0, 0.0]);
        assert_eq!(j.value, 1.0);
        assert_eq!(j.gradient, vec![2.0, 0.0]);
        assert_eq!(j.hessian, DMatrix::identity(2, 2) * 2.0);
        let j = HamiltonianModel::even_power(1, 4).unwrap().evaluate_jet(&[1.0]);
        assert_eq!((j.value, j.gradient[0], j.hessian[(0, 0)]), (1.0, 4.0, 12.0));
        let lin = HamiltonianModel::linear(RationalVector::from_i64(&[1, 1])).unwrap();
        let j = lin.evaluate_jet(&[3.0, 5.0]);
        assert_eq!((j.value, j.gradient.clone()), (8.0, vec![1.0, 1.0]));
        assert_eq!(j.hessian, DMatrix::zeros(2, 2));
    }

    #[test]
    fn definiteness_examples() {
        assert!(HamiltonianModel::laplacian(2).is_definite(&[0.3, -2.0], 1e-9));
        let diff = HamiltonianModel::difference_quadratic(vec![1, -1], vec![BigRational::one(), BigRational::one()]).unwrap();
        assert!(!diff.is_definite(&[1.0, 0.5], 1e-9));
        let quartic = HamiltonianModel::even_power(2, 4).unwrap();
        assert!(!quartic.is_definite(&[0.0, 0.0], 1e-9));
        assert!(quartic.is_definite(&[1.0, 0.0], 1e-9));
    }

    #[test]
    fn split_for_laplacian() {
        let h = HamiltonianModel::laplacian(2);
        let module = PrimitiveModule::span_i64(2, Space::Dual, &[&[0, 1]]).unwrap();
        let frame = TwoMicrolocalFrame::new(&h, module, RationalVector::from_i64(&[1, 0]), 1.0).unwrap();
        let s = f_coordinates(&frame, &h, &[0.9, 0.3]).unwrap();
        assert!((s.sigma[0] - 0.9).abs() < 1e-14 && s.sigma[1].abs() < 1e-14);
        assert!((s.eta[1] - 0.3).abs() < 1e-14 && s.eta[0].abs() < 1e-14);
        assert_eq!(s.iterations, 1);
        let s = f_coordinates(&frame, &h, &[1.2, 0.0]).unwrap();
        assert_eq!((s.iterations, s.eta.clone()), (0, vec![0.0, 0.0]));
        assert!(matches!(f_coordinates(&frame, &h, &[1.0, 0.6]), Err(Error::Domain(_))));
    }

    #[test]
    fn split_for_custom_cubic() {
        let h = custom_cubic();
        let module = PrimitiveModule::span_i64(2, Space::Dual, &[&[0, 1]]).unwrap();
        let frame = TwoMicrolocalFrame::new(&h, module, RationalVector::from_i64(&[1, 0]), 0.5).unwrap();
        let s = f_coordinates(&frame, &h, &[1.0, 0.1]).unwrap();
        let g = h.gradient(&s.sigma);
        assert!(g[1].abs() < 1e-10);
        assert!((s.sigma[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn frame_rejects_wrong_module() {
        let h = HamiltonianModel::laplacian(2);
        let module = PrimitiveModule::span_i64(2, Space::Dual, &[&[1, 0]]).unwrap();
        assert!(TwoMicrolocalFrame::new(&h, module, RationalVector::from_i64(&[1, 0]), 0.5).is_err());
    }

    #[test]
    fn frame_projection_data() {
        let h = HamiltonianModel::laplacian(2);
        let module = PrimitiveModule::span_i64(2, Space::Dual, &[&[1, -1]]).unwrap();
        let frame = TwoMicrolocalFrame::new(&h, module, RationalVector::from_i64(&[1, 1]), 0.5).unwrap();
        assert_eq!(frame.perp().basis_i64().unwrap(), vec![vec![1, 1]]);
        let sa = frame.sigma_alpha(&[0.7, 0.7]);
        // σ^α annihilates Λ^⊥ and lies in ⟨Λ⟩.
        assert!((sa[0] + sa[1]).abs() < 1e-14);
        assert_eq!(frame.coset_label(&[3, 2]), frame.coset_label(&[4, 1]));
        assert_ne!(frame.coset_label(&[3, 2]), frame.coset_label(&[3, 3]));
    }

    #[test]
    fn spec_round_trip() {
        let json = r#"{"kind":"quadratic","A":[["1","1/2"],["1/2","3"]]}"#;
        let spec: HamiltonianSpec = serde_json::from_str(json).unwrap();
        let h = spec.build().unwrap();
        assert_eq!(h.to_spec().unwrap(), spec);
        let form = h.lattice_form().unwrap();
        assert_eq!(form.eval(&[1, 1]), Some(2 + 2 + 6));
        let v = h.exact_value(&RationalVector::from_i64(&[1, 1])).unwrap();
        assert_eq!(v, BigRational::from_integer(5.into()));
    }
}
