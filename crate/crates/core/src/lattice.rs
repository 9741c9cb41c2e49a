//! Exact integer linear algebra for primitive submodules of `Z^d` and its dual.
//!
//! Modules are stored by their row-style Hermite normal form (positive pivots,
//! entries above a pivot reduced into `[0, pivot)`), so equality of modules is
//! equality of bases.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianModel;

/// Which copy of the lattice a vector or module lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    /// Frequencies `(Z^d)*`.
    Dual,
    /// Periods `Z^d`.
    Primal,
}

impl Space {
    pub fn flip(self) -> Self {
        match self {
            Space::Dual => Space::Primal,
            Space::Primal => Space::Dual,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LatticeVector {
    entries: Vec<BigInt>,
    space: Space,
}

impl LatticeVector {
    pub fn new(entries: Vec<BigInt>, space: Space) -> Self {
        assert!(!entries.is_empty(), "lattice vectors need d >= 1");
        Self { entries, space }
    }

    pub fn from_i64(entries: &[i64], space: Space) -> Self {
        Self::new(entries.iter().map(|&e| BigInt::from(e)).collect(), space)
    }

    pub fn dual(entries: &[i64]) -> Self {
        Self::from_i64(entries, Space::Dual)
    }

    pub fn primal(entries: &[i64]) -> Self {
        Self::from_i64(entries, Space::Primal)
    }

    pub fn entries(&self) -> &[BigInt] {
        &self.entries
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn to_i64(&self) -> Option<Vec<i64>> {
        self.entries.iter().map(|e| e.to_i64()).collect()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.to_f64().unwrap_or(f64::NAN)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }
}

/// Exact rational d-tuple (momenta, gradients).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalVector(Vec<BigRational>);

impl RationalVector {
    pub fn new(entries: Vec<BigRational>) -> Self {
        Self(entries)
    }

    pub fn from_i64(entries: &[i64]) -> Self {
        Self(entries.iter().map(|&e| BigRational::from_integer(e.into())).collect())
    }

    pub fn from_ratios(entries: &[(i64, i64)]) -> Self {
        Self(
            entries
                .iter()
                .map(|&(p, q)| BigRational::new(p.into(), q.into()))
                .collect(),
        )
    }

    /// Every finite double is a dyadic rational; this conversion is exact.
    pub fn from_f64_exact(entries: &[f64]) -> Result<Self> {
        entries
            .iter()
            .map(|&x| {
                BigRational::from_float(x)
                    .ok_or_else(|| Error::Parameter(format!("non-finite coordinate {x}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    pub fn parse(entries: &[&str]) -> Result<Self> {
        entries.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>().map(Self)
    }

    pub fn entries(&self) -> &[BigRational] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(rational_to_f64).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }
}

impl Serialize for RationalVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<String> = self.0.iter().map(format_rational).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RationalVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter()
            .map(|s| parse_rational(s))
            .collect::<Result<Vec<_>>>()
            .map(RationalVector)
            .map_err(serde::de::Error::custom)
    }
}

/// Parses `"p/q"`, `"p"` or a decimal literal such as `"0.5"`.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let t = s.trim();
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    if let Ok(p) = t.parse::<BigInt>() {
        return Ok(BigRational::from_integer(p));
    }
    if let Some((int, frac)) = t.split_once('.') {
        if frac.chars().all(|c| c.is_ascii_digit()) && !frac.is_empty() {
            let digits = format!("{int}{frac}");
            let p: BigInt = digits.parse().map_err(|_| bad())?;
            let q = num_traits::pow(BigInt::from(10), frac.len());
            return Ok(BigRational::new(p, q));
        }
    }
    Err(bad())
}

pub fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    if let (Some(p), Some(q)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if p.is_finite() && q.is_finite() && p.abs() < 9.0e15 && q < 9.0e15 {
            return p / q;
        }
    }
    r.to_f64().unwrap_or(f64::NAN)
}

type Mat = Vec<Vec<BigInt>>;

fn identity(n: usize) -> Mat {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect()
}

fn add_row_multiple(m: &mut Mat, target: usize, source: usize, q: &BigInt) {
    let src = m[source].clone();
    for (t, s) in m[target].iter_mut().zip(src.iter()) {
        *t += q * s;
    }
}

fn add_col_multiple(m: &mut Mat, target: usize, source: usize, q: &BigInt) {
    for row in m.iter_mut() {
        let s = row[source].clone();
        row[target] += q * s;
    }
}

struct Hnf {
    rows: Mat,
    rank: usize,
    transform: Mat,
    inverse: Mat,
}

/// Row-style Hermite normal form `U·M = H` with `U` unimodular; `inverse = U⁻¹`.
fn hermite(m: &Mat, cols: usize) -> Hnf {
    let n = m.len();
    let mut a = m.clone();
    let mut u = identity(n);
    let mut uinv = identity(n);
    let mut r = 0;
    for col in 0..cols {
        if r == n {
            break;
        }
        loop {
            let piv = (r..n)
                .filter(|&i| !a[i][col].is_zero())
                .min_by(|&i, &j| a[i][col].abs().cmp(&a[j][col].abs()));
            let Some(p) = piv else { break };
            if p != r {
                a.swap(p, r);
                u.swap(p, r);
                for row in uinv.iter_mut() {
                    row.swap(p, r);
                }
            }
            let mut cleared = true;
            for i in r + 1..n {
                if a[i][col].is_zero() {
                    continue;
                }
                let q = -a[i][col].div_floor(&a[r][col]);
                add_row_multiple(&mut a, i, r, &q);
                add_row_multiple(&mut u, i, r, &q);
                add_col_multiple(&mut uinv, r, i, &-&q);
                if !a[i][col].is_zero() {
                    cleared = false;
                }
            }
            if cleared {
                break;
            }
        }
        if a[r][col].is_zero() {
            continue;
        }
        if a[r][col].is_negative() {
            for x in a[r].iter_mut() {
                *x = -&*x;
            }
            for x in u[r].iter_mut() {
                *x = -&*x;
            }
            for row in uinv.iter_mut() {
                row[r] = -&row[r];
            }
        }
        for i in 0..r {
            let q = -a[i][col].div_floor(&a[r][col]);
            if !q.is_zero() {
                add_row_multiple(&mut a, i, r, &q);
                add_row_multiple(&mut u, i, r, &q);
                add_col_multiple(&mut uinv, r, i, &-&q);
            }
        }
        r += 1;
    }
    Hnf { rows: a, rank: r, transform: u, inverse: uinv }
}

/// Diagonal Smith form of `m` (`rows × cols`) with divisibility chain.
/// Returns the nonzero elementary divisors and `V⁻¹` where `U·m·V = D`.
fn smith(m: &Mat, cols: usize) -> (Vec<BigInt>, Mat) {
    let n = m.len();
    let mut a = m.clone();
    let mut vinv = identity(cols);
    let mut t = 0;
    let limit = n.min(cols);
    while t < limit {
        let mut best: Option<(usize, usize)> = None;
        for i in t..n {
            for j in t..cols {
                if !a[i][j].is_zero()
                    && best.is_none_or(|(bi, bj)| a[i][j].abs() < a[bi][bj].abs())
                {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        a.swap(t, pi);
        swap_cols(&mut a, t, pj);
        vinv.swap(t, pj);
        loop {
            let mut again = false;
            for i in t + 1..n {
                if a[i][t].is_zero() {
                    continue;
                }
                let q = -a[i][t].div_floor(&a[t][t]);
                add_row_multiple(&mut a, i, t, &q);
                again |= !a[i][t].is_zero();
            }
            for j in t + 1..cols {
                if a[t][j].is_zero() {
                    continue;
                }
                let q = -a[t][j].div_floor(&a[t][t]);
                add_col_multiple(&mut a, j, t, &q);
                add_row_multiple(&mut vinv, t, j, &-&q);
                again |= !a[t][j].is_zero();
            }
            if again {
                let mut best = (t, t);
                for i in t..n {
                    if !a[i][t].is_zero() && a[i][t].abs() < a[best.0][best.1].abs() {
                        best = (i, t);
                    }
                }
                for j in t..cols {
                    if !a[t][j].is_zero() && a[t][j].abs() < a[best.0][best.1].abs() {
                        best = (t, j);
                    }
                }
                if best.0 != t {
                    a.swap(t, best.0);
                }
                if best.1 != t {
                    swap_cols(&mut a, t, best.1);
                    vinv.swap(t, best.1);
                }
                continue;
            }
            let offender = (t + 1..n).find(|&i| {
                (t + 1..cols).any(|j| !a[i][j].mod_floor(&a[t][t]).is_zero())
            });
            match offender {
                Some(i) => add_row_multiple(&mut a, t, i, &BigInt::one()),
                None => break,
            }
        }
        t += 1;
    }
    let divisors = (0..t).map(|i| a[i][i].abs()).collect();
    (divisors, vinv)
}

fn swap_cols(m: &mut Mat, i: usize, j: usize) {
    if i != j {
        for row in m.iter_mut() {
            row.swap(i, j);
        }
    }
}

fn transpose(m: &Mat, cols: usize) -> Mat {
    (0..cols).map(|j| m.iter().map(|row| row[j].clone()).collect()).collect()
}

/// Exact determinant of a square integer matrix (Bareiss elimination).
pub fn determinant(rows: &[Vec<BigInt>]) -> BigInt {
    let n = rows.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut a: Mat = rows.to_vec();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    sign * a[n - 1][n - 1].clone()
}

/// Elementary divisors of an integer matrix with `cols` columns.
pub fn elementary_divisors(rows: &[Vec<BigInt>], cols: usize) -> Vec<BigInt> {
    smith(&rows.to_vec(), cols).0
}

/// A saturated sublattice with canonical HNF basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PrimitiveModule {
    dim: usize,
    space: Space,
    basis: Mat,
}

impl PrimitiveModule {
    pub fn zero(dim: usize, space: Space) -> Self {
        Self { dim, space, basis: Vec::new() }
    }

    pub fn full(dim: usize, space: Space) -> Self {
        Self { dim, space, basis: identity(dim) }
    }

    /// Saturated span of small integer generators.
    pub fn span_i64(dim: usize, space: Space, generators: &[&[i64]]) -> Result<Self> {
        let gens: Vec<LatticeVector> =
            generators.iter().map(|g| LatticeVector::from_i64(g, space)).collect();
        saturate(dim, space, &gens)
    }

    /// Canonicalizes rows already known to span a primitive module.
    fn from_primitive_rows(dim: usize, space: Space, rows: Mat) -> Self {
        if rows.is_empty() {
            return Self::zero(dim, space);
        }
        let h = hermite(&rows, dim);
        let basis = h.rows.into_iter().take(h.rank).collect();
        Self { dim, space, basis }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn basis(&self) -> &[Vec<BigInt>] {
        &self.basis
    }

    pub fn basis_vectors(&self) -> Vec<LatticeVector> {
        self.basis.iter().map(|r| LatticeVector::new(r.clone(), self.space)).collect()
    }

    pub fn basis_i64(&self) -> Option<Vec<Vec<i64>>> {
        self.basis.iter().map(|r| r.iter().map(|e| e.to_i64()).collect()).collect()
    }

    pub fn basis_f64(&self) -> Vec<Vec<f64>> {
        self.basis
            .iter()
            .map(|r| r.iter().map(|e| e.to_f64().unwrap_or(f64::NAN)).collect())
            .collect()
    }

    pub fn is_full(&self) -> bool {
        self.rank() == self.dim
    }

    /// Exact membership test by reduction against the echelon basis.
    pub fn contains(&self, v: &[BigInt]) -> bool {
        if v.len() != self.dim {
            return false;
        }
        let mut w = v.to_vec();
        for row in &self.basis {
            let p = row.iter().position(|x| !x.is_zero()).expect("basis rows are nonzero");
            let (q, r) = w[p].div_mod_floor(&row[p]);
            if !r.is_zero() {
                return false;
            }
            for (x, b) in w.iter_mut().zip(row) {
                *x -= &q * b;
            }
        }
        w.iter().all(Zero::is_zero)
    }

    pub fn contains_i64(&self, v: &[i64]) -> bool {
        if v.len() != self.dim {
            return false;
        }
        let big: Vec<BigInt> = v.iter().map(|&x| BigInt::from(x)).collect();
        self.contains(&big)
    }

    /// Least-squares coordinates of a real vector in the basis, with the residual norm.
    pub fn coordinates(&self, v: &[f64]) -> (Vec<f64>, f64) {
        let r = self.rank();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r == 0 {
            return (Vec::new(), norm);
        }
        let b = DMatrix::from_fn(r, self.dim, |i, j| self.basis[i][j].to_f64().unwrap_or(f64::NAN));
        let x = DVector::from_column_slice(v);
        let gram = &b * b.transpose();
        let rhs = &b * &x;
        let c = gram.lu().solve(&rhs).expect("basis rows are independent");
        let resid = (b.transpose() * &c - x).norm();
        (c.iter().copied().collect(), resid)
    }

    /// Real vector `Σ c_i b_i`.
    pub fn combine(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (c, row) in coeffs.iter().zip(&self.basis) {
            for (o, b) in out.iter_mut().zip(row) {
                *o += c * b.to_f64().unwrap_or(f64::NAN);
            }
        }
        out
    }
}

impl fmt::Display for PrimitiveModule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "span{{")?;
        for (i, row) in self.basis.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            let parts: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            write!(f, "({})", parts.join(","))?;
        }
        write!(f, "}} in Z^{}", self.dim)
    }
}

#[derive(Serialize, Deserialize)]
struct ModuleJson {
    dim: usize,
    rank: usize,
    #[serde(default = "default_space")]
    space: Space,
    basis: Vec<Vec<String>>,
}

fn default_space() -> Space {
    Space::Dual
}

impl Serialize for PrimitiveModule {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ModuleJson {
            dim: self.dim,
            rank: self.rank(),
            space: self.space,
            basis: self.basis.iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PrimitiveModule {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = ModuleJson::deserialize(d)?;
        let mut gens = Vec::with_capacity(j.basis.len());
        for row in &j.basis {
            if row.len() != j.dim {
                return Err(D::Error::custom("basis row length differs from dim"));
            }
            let entries = row
                .iter()
                .map(|s| s.trim().parse::<BigInt>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(D::Error::custom)?;
            gens.push(LatticeVector::new(entries, j.space));
        }
        let m = saturate(j.dim, j.space, &gens).map_err(D::Error::custom)?;
        if m.rank() != j.rank || m.rank() != gens.len() {
            return Err(D::Error::custom("basis rows are dependent or rank mismatch"));
        }
        Ok(m)
    }
}

/// The primitive module whose rational span equals that of the generators.
pub fn saturate(dim: usize, space: Space, generators: &[LatticeVector]) -> Result<PrimitiveModule> {
    if dim == 0 {
        return Err(Error::Parameter("dimension must be at least 1".into()));
    }
    for g in generators {
        if g.dim() != dim || g.space() != space {
            return Err(Error::Parameter(format!(
                "generator of dimension {} in {:?} space, expected {dim} in {space:?}",
                g.dim(),
                g.space()
            )));
        }
    }
    let rows: Mat = generators
        .iter()
        .filter(|g| !g.is_zero())
        .map(|g| g.entries().to_vec())
        .collect();
    if rows.is_empty() {
        return Ok(PrimitiveModule::zero(dim, space));
    }
    let (divisors, vinv) = smith(&rows, dim);
    let span: Mat = vinv.into_iter().take(divisors.len()).collect();
    Ok(PrimitiveModule::from_primitive_rows(dim, space, span))
}

/// Integer kernel `{v : row·v = 0 for all rows}` in the opposite space.
fn integer_kernel(rows: &Mat, dim: usize, space: Space) -> PrimitiveModule {
    if rows.is_empty() {
        return PrimitiveModule::full(dim, space);
    }
    let t = transpose(rows, dim);
    let h = hermite(&t, rows.len());
    let kernel: Mat = h.transform.into_iter().skip(h.rank).collect();
    PrimitiveModule::from_primitive_rows(dim, space, kernel)
}

/// `{k ∈ (Z^d)* : k·g = 0}` for a rational gradient `g`.
pub fn resonance_module(gradient: &RationalVector) -> PrimitiveModule {
    let dim = gradient.dim();
    if gradient.is_zero() {
        return PrimitiveModule::full(dim, Space::Dual);
    }
    let lcm = gradient.entries().iter().fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
    let row: Vec<BigInt> =
        gradient.entries().iter().map(|r| (r * BigRational::from_integer(lcm.clone())).to_integer()).collect();
    integer_kernel(&vec![row], dim, Space::Dual)
}

/// Annihilator of `Λ` in the opposite space; rank `d − rank(Λ)`.
pub fn orthogonal_lattice(module: &PrimitiveModule) -> PrimitiveModule {
    integer_kernel(&module.basis, module.dim, module.space.flip())
}

/// A complement `L̃` with `L ⊕ L̃ = Z^d`.
///
/// The completion rows come from the inverse transform of the column-style
/// HNF of `L`, then are reduced modulo the pivots of `L` and canonicalized.
pub fn complement_lattice(module: &PrimitiveModule) -> PrimitiveModule {
    let (d, r) = (module.dim, module.rank());
    if r == d {
        return PrimitiveModule::zero(d, module.space);
    }
    let inverse = if r == 0 {
        identity(d)
    } else {
        hermite(&transpose(&module.basis, d), r).inverse
    };
    let completion: Mat = (r..d).map(|c| inverse.iter().map(|row| row[c].clone()).collect()).collect();
    let first = PrimitiveModule::from_primitive_rows(d, module.space, completion);
    let mut rows = first.basis.clone();
    for row in rows.iter_mut() {
        for lrow in &module.basis {
            let p = lrow.iter().position(|x| !x.is_zero()).expect("nonzero basis row");
            let q = row[p].div_floor(&lrow[p]);
            if !q.is_zero() {
                for (x, b) in row.iter_mut().zip(lrow) {
                    *x -= &q * b;
                }
            }
        }
    }
    PrimitiveModule::from_primitive_rows(d, module.space, rows)
}

/// `η = frac + Σ n_i b_i` with the coordinates of `frac` in `[0, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FractionalPart {
    pub frac: Vec<f64>,
    pub coefficients: Vec<BigInt>,
    pub int_part: LatticeVector,
}

/// Coordinates within this distance of an integer are snapped to it.
const SNAP: f64 = 1e-12;

pub fn fractional_part(eta: &[f64], module: &PrimitiveModule) -> Result<FractionalPart> {
    if eta.len() != module.dim {
        return Err(Error::Parameter("dimension mismatch in fractional_part".into()));
    }
    let (coords, resid) = module.coordinates(eta);
    let scale = eta.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
    if resid > 1e-9 * scale {
        return Err(Error::Span { residual: resid });
    }
    let mut floors = Vec::with_capacity(coords.len());
    let mut fracs = Vec::with_capacity(coords.len());
    for &c in &coords {
        let r = c.round();
        let (fl, fr) = if (c - r).abs() <= SNAP * c.abs().max(1.0) { (r, 0.0) } else { (c.floor(), c - c.floor()) };
        floors.push(fl);
        fracs.push(fr);
    }
    let coefficients: Vec<BigInt> = floors
        .iter()
        .map(|&f| BigInt::from_f64_exact(f))
        .collect::<Option<Vec<_>>>()
        .ok_or(Error::Span { residual: f64::INFINITY })?;
    let mut int_entries = vec![BigInt::zero(); module.dim];
    for (n, row) in coefficients.iter().zip(&module.basis) {
        for (x, b) in int_entries.iter_mut().zip(row) {
            *x += n * b;
        }
    }
    Ok(FractionalPart {
        frac: module.combine(&fracs),
        coefficients,
        int_part: LatticeVector::new(int_entries, module.space),
    })
}

trait FromF64Exact: Sized {
    fn from_f64_exact(x: f64) -> Option<Self>;
}

impl FromF64Exact for BigInt {
    fn from_f64_exact(x: f64) -> Option<Self> {
        if x.fract() != 0.0 || !x.is_finite() {
            return None;
        }
        num_traits::FromPrimitive::from_f64(x)
    }
}

/// Resonance stratum of a rational momentum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MomentumClass {
    pub module: PrimitiveModule,
    /// `d − rank(Λ)`.
    pub order: usize,
}

pub fn classify_momentum(h: &HamiltonianModel, xi: &RationalVector) -> Result<MomentumClass> {
    let gradient = h.exact_gradient(xi)?;
    let module = resonance_module(&gradient);
    let order = module.dim() - module.rank();
    Ok(MomentumClass { module, order })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(m: &PrimitiveModule) -> Vec<Vec<i64>> {
        m.basis_i64().unwrap()
    }

    #[test]
    fn saturate_examples() {
        let m = PrimitiveModule::span_i64(2, Space::Dual, &[&[2, 4]]).unwrap();
        assert_eq!(rows(&m), vec![vec![1, 2]]);
        let m = PrimitiveModule::span_i64(2, Space::Dual, &[&[1, 0]]).unwrap();
        assert_eq!(rows(&m), vec![vec![1, 0]]);
        let m = PrimitiveModule::span_i64(3, Space::Dual, &[]).unwrap();
        assert_eq!(m.rank(), 0);
    }

    #[test]
    fn resonance_examples() {
        let m = resonance_module(&RationalVector::from_i64(&[2, 0]));
        assert_eq!(rows(&m), vec![vec![0, 1]]);
        let m = resonance_module(&RationalVector::from_ratios(&[(2, 1), (2, 3)]));
        assert_eq!(rows(&m), vec![vec![1, -3]]);
        let m = resonance_module(&RationalVector::from_i64(&[0, 0]));
        assert!(m.is_full());
    }

    #[test]
    fn orthogonal_examples() {
        let l = PrimitiveModule::span_i64(2, Space::Dual, &[&[0, 1]]).unwrap();
        let o = orthogonal_lattice(&l);
        assert_eq!((rows(&o), o.space()), (vec![vec![1, 0]], Space::Primal));
        let l = PrimitiveModule::span_i64(2, Space::Dual, &[&[1, 2]]).unwrap();
        assert_eq!(rows(&orthogonal_lattice(&l)), vec![vec![2, -1]]);
        assert_eq!(orthogonal_lattice(&PrimitiveModule::full(3, Space::Dual)).rank(), 0);
    }

    #[test]
    fn complement_examples() {
        let l = PrimitiveModule::span_i64(2, Space::Primal, &[&[2, -1]]).unwrap();
        let c = complement_lattice(&l);
        assert_eq!(rows(&c), vec![vec![1, 0]]);
        let stacked: Vec<Vec<BigInt>> = l.basis().iter().chain(c.basis()).cloned().collect();
        assert_eq!(determinant(&stacked).abs(), BigInt::one());
        let l = PrimitiveModule::span_i64(2, Space::Primal, &[&[1, 0]]).unwrap();
        assert_eq!(rows(&complement_lattice(&l)), vec![vec![0, 1]]);
        assert_eq!(complement_lattice(&PrimitiveModule::full(2, Space::Primal)).rank(), 0);
    }

    #[test]
    fn fractional_examples() {
        let l = PrimitiveModule::span_i64(2, Space::Dual, &[&[0, 1]]).unwrap();
        let f = fractional_part(&[0.0, 2.7], &l).unwrap();
        assert!((f.frac[1] - 0.7).abs() < 1e-12 && f.frac[0] == 0.0);
        assert_eq!(f.coefficients, vec![BigInt::from(2)]);
        let f = fractional_part(&[0.0, 3.0], &l).unwrap();
        assert_eq!(f.frac, vec![0.0, 0.0]);
        let l = PrimitiveModule::span_i64(2, Space::Dual, &[&[1, -3]]).unwrap();
        let f = fractional_part(&[2.5, -7.5], &l).unwrap();
        assert!((f.frac[0] - 0.5).abs() < 1e-12 && (f.frac[1] + 1.5).abs() < 1e-12);
        assert_eq!(f.coefficients, vec![BigInt::from(2)]);
        assert!(matches!(fractional_part(&[1.0, 0.0], &l), Err(Error::Span { .. })));
    }

    #[test]
    fn smith_divisors() {
        let m = vec![
            vec![BigInt::from(2), BigInt::from(4), BigInt::from(4)],
            vec![BigInt::from(-6), BigInt::from(6), BigInt::from(12)],
            vec![BigInt::from(10), BigInt::from(-4), BigInt::from(-16)],
        ];
        let d: Vec<i64> = elementary_divisors(&m, 3).iter().map(|x| x.to_i64().unwrap()).collect();
        assert_eq!(d, vec![2, 6, 12]);
    }

    #[test]
    fn module_json_round_trip() {
        let m = PrimitiveModule::span_i64(3, Space::Dual, &[&[1, -3, 0], &[0, 2, 5]]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"basis\":[[\""));
        let back: PrimitiveModule = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("2/4").unwrap(), BigRational::new(1.into(), 2.into()));
        assert_eq!(parse_rational("-3").unwrap(), BigRational::from_integer((-3).into()));
        assert_eq!(parse_rational("0.25").unwrap(), BigRational::new(1.into(), 4.into()));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }
}
