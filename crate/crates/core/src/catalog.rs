//! Isoparametric parameter data.
//!
//! An isoparametric hypersurface of `S^n` has `k ∈ {1, 2, 3, 4, 6}` distinct
//! principal curvatures. For `k ∈ {1, 3, 6}` all multiplicities agree; for
//! `k ∈ {2, 4}` they alternate between two values `m1` (largest principal
//! curvature) and `m2` (smallest). The soliton ODE depends on the data only
//! through `k`, `n` and the constant
//!
//! ```text
//! R = 0                       (k = 1, 3, 6)
//! R = -1 + k m2 / (n - 1)     (k = 2, 4)
//! ```
//!
//! Swapping `m1` and `m2` flips the sign of `R`; this is the reflection
//! `r -> -r` of the foliation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Validated `(k, n, m1, m2)` together with the derived constant `R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct SolitonParams {
    pub k: u32,
    pub n: u32,
    pub m1: u32,
    pub m2: u32,
    #[serde(rename = "R")]
    r_const: f64,
}

#[derive(Deserialize)]
struct RawParams {
    k: u32,
    n: u32,
    m1: u32,
    m2: u32,
    #[serde(rename = "R")]
    r_const: Option<f64>,
}

impl TryFrom<RawParams> for SolitonParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        let p = SolitonParams::new(raw.k, raw.n, raw.m1, raw.m2)?;
        if let Some(r) = raw.r_const {
            if (r - p.r_const).abs() > 1e-12 {
                return Err(Error::InvalidParams(format!(
                    "stored R = {r} disagrees with computed R = {}",
                    p.r_const
                )));
            }
        }
        Ok(p)
    }
}

/// Whether a tuple is known to come from an actual isoparametric family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Realizability {
    /// Realized by the explicit `k = 1` or `k = 2` functions.
    Realized,
    /// Consistent with the multiplicity rules, existence not checked.
    Unchecked,
}

impl SolitonParams {
    /// Validates the tuple and computes `R`.
    pub fn new(k: u32, n: u32, m1: u32, m2: u32) -> Result<Self> {
        if !matches!(k, 1 | 2 | 3 | 4 | 6) {
            return Err(Error::InvalidParams(format!(
                "k = {k} is not one of 1, 2, 3, 4, 6"
            )));
        }
        if n < 2 {
            return Err(Error::InvalidParams(format!("n = {n} must be at least 2")));
        }
        if m1 == 0 || m2 == 0 {
            return Err(Error::InvalidParams(
                "multiplicities must be positive".into(),
            ));
        }
        let r_const = match k {
            1 | 3 | 6 => {
                if m1 != m2 {
                    return Err(Error::InvalidParams(format!(
                        "k = {k} requires equal multiplicities, got m1 = {m1}, m2 = {m2}"
                    )));
                }
                0.0
            }
            _ => {
                // level sets have dimension n - 1 = (k / 2)(m1 + m2)
                if k * (m1 + m2) != 2 * (n - 1) {
                    return Err(Error::InvalidParams(format!(
                        "k = {k} requires k (m1 + m2) = 2 (n - 1), got m1 + m2 = {} with n = {n}",
                        m1 + m2
                    )));
                }
                -1.0 + f64::from(k * m2) / f64::from(n - 1)
            }
        };
        if !(r_const > -1.0 && r_const < 1.0) {
            return Err(Error::InvalidParams(format!("R = {r_const} outside (-1, 1)")));
        }
        Ok(Self {
            k,
            n,
            m1,
            m2,
            r_const,
        })
    }

    /// Shorthand for `k ∈ {1, 3, 6}` where both multiplicities coincide.
    pub fn equal_multiplicity(k: u32, n: u32, m: u32) -> Result<Self> {
        Self::new(k, n, m, m)
    }

    /// The constant `R ∈ (-1, 1)`.
    #[inline]
    pub fn r_const(&self) -> f64 {
        self.r_const
    }

    #[inline]
    pub fn kf(&self) -> f64 {
        f64::from(self.k)
    }

    #[inline]
    pub fn nf(&self) -> f64 {
        f64::from(self.n)
    }

    /// Parameters of the reflected foliation `r -> -r` (multiplicities swapped).
    ///
    /// If `ψ` solves the phase equation for `self` then `r ↦ -ψ(-r)` solves it
    /// for the reflection.
    pub fn reflected(&self) -> Self {
        Self {
            k: self.k,
            n: self.n,
            m1: self.m2,
            m2: self.m1,
            r_const: if self.r_const == 0.0 { 0.0 } else { -self.r_const },
        }
    }

    pub fn realizability(&self) -> Realizability {
        match self.k {
            1 if self.m1 == self.n - 1 => Realizability::Realized,
            2 => Realizability::Realized,
            _ => Realizability::Unchecked,
        }
    }

    /// `α(r) = |∇r|² = k² (1 - r²)`.
    pub fn alpha(&self, r: f64) -> Result<f64> {
        check_closed(r)?;
        Ok(self.kf() * self.kf() * (1.0 - r * r))
    }

    /// `α'(r) = -2 k² r`.
    pub fn alpha_prime(&self, r: f64) -> Result<f64> {
        check_closed(r)?;
        Ok(-2.0 * self.kf() * self.kf() * r)
    }

    /// `β(r) = Δr = ((m2 - m1) / 2) k² - k (n + k - 1) r`.
    pub fn beta(&self, r: f64) -> Result<f64> {
        check_closed(r)?;
        let k = self.kf();
        let dm = f64::from(self.m2) - f64::from(self.m1);
        Ok(0.5 * dm * k * k - k * (self.nf() + k - 1.0) * r)
    }
}

fn check_closed(r: f64) -> Result<()> {
    if r.is_nan() || r.abs() > 1.0 {
        Err(Error::Domain(format!("r = {r} outside [-1, 1]")))
    } else {
        Ok(())
    }
}

/// Free-function form of [`SolitonParams::new`].
pub fn make_params(k: u32, n: u32, m1: u32, m2: u32) -> Result<SolitonParams> {
    SolitonParams::new(k, n, m1, m2)
}
