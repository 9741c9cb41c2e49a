//! Radial plateau profiles built from the quintic smoothstep.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `6s⁵ − 15s⁴ + 10s³`, clamped to `[0, 1]`; C² at both ends.
pub fn smoothstep(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        s * s * s * (10.0 + s * (6.0 * s - 15.0))
    }
}

/// Equal to 1 on `r ≤ inner`, 0 on `r ≥ outer`, monotone and C² between.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub inner: f64,
    pub outer: f64,
}

impl Plateau {
    pub fn new(inner: f64, outer: f64) -> Result<Self> {
        if !(inner >= 0.0 && outer > inner && outer.is_finite()) {
            return Err(Error::Parameter(format!("plateau radii must satisfy 0 <= {inner} < {outer}")));
        }
        Ok(Self { inner, outer })
    }

    pub fn at(&self, r: f64) -> f64 {
        if r <= self.inner {
            1.0
        } else if r >= self.outer {
            0.0
        } else {
            1.0 - smoothstep((r - self.inner) / (self.outer - self.inner))
        }
    }

    pub fn radial(&self, v: &[f64]) -> f64 {
        self.at(v.iter().map(|x| x * x).sum::<f64>().sqrt())
    }

    /// `∫_{R^d} ψ(|ζ|)² dζ` by composite Simpson on the transition shell.
    pub fn l2_norm_sq(&self, dim: usize) -> f64 {
        let d = dim as i32;
        let core = self.inner.powi(d) / dim as f64;
        let n = 4096;
        let step = (self.outer - self.inner) / n as f64;
        let f = |r: f64| self.at(r).powi(2) * r.powi(d - 1);
        let mut acc = f(self.inner) + f(self.outer);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(self.inner + i as f64 * step);
        }
        sphere_area(dim) * (core + acc * step / 3.0)
    }
}

/// Surface area of the unit sphere in `R^d`: `2π^{d/2}/Γ(d/2)`.
pub fn sphere_area(dim: usize) -> f64 {
    let pi = std::f64::consts::PI;
    2.0 * pi.powf(dim as f64 / 2.0) / gamma_half(dim)
}

/// `Γ(n/2)` for positive integers `n`.
fn gamma_half(n: usize) -> f64 {
    let pi = std::f64::consts::PI;
    if n % 2 == 0 {
        (1..n / 2).map(|i| i as f64).product()
    } else {
        let mut g = pi.sqrt();
        let mut x = 0.5;
        while x < n as f64 / 2.0 - 0.25 {
            g *= x;
            x += 1.0;
        }
        g
    }
}
