//! Phase analysis of the reduced soliton ODE.
//!
//! Everything here is a pure function of [`SolitonParams`] and a point of the
//! phase strip `(-1, 1) × ℝ`:
//!
//! - the second order equation for `V'` and the first order equation for
//!   `ψ = k √(1 - r²) V'`,
//! - the guide curves `η(r) = -√(1 - r²) / ((n - 1)(r - R))` (where `ψ' = 0`)
//!   and `ζ = η / (k √(1 - r²))` (its image in the `V'` plane),
//! - the sign of `ψ'` read off from the position of `ψ` relative to `η`,
//! - comparison functions obtained by integrating differential inequalities
//!   satisfied by `ψ`. Their roots bound blow-up positions and their values
//!   bound finite one-sided limits at `r = R`.
//!
//! The equation is invariant under `(r, ψ, R) -> (-r, -ψ, -R)`. The mirror
//! cases (`ψ < 0`) are evaluated through [`SolitonParams::reflected`].

use serde::{Deserialize, Serialize};

use crate::catalog::SolitonParams;
use crate::error::{Error, Result};
use crate::numeric::bisect;

/// Default half-width of the band around `η` treated as a tie.
pub const DEFAULT_TIE_BAND: f64 = 1e-9;

/// A point `(r, ψ)` of the phase strip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub r: f64,
    pub psi: f64,
}

impl PhasePoint {
    pub fn new(r: f64, psi: f64) -> Result<Self> {
        if !(r.abs() < 1.0) {
            return Err(Error::Domain(format!("seed r = {r} must lie in (-1, 1)")));
        }
        if !psi.is_finite() {
            return Err(Error::Domain(format!("seed psi = {psi} must be finite")));
        }
        Ok(Self { r, psi })
    }

    /// `V' = ψ / (k √(1 - r²))` at this point.
    pub fn vprime(&self, p: &SolitonParams) -> f64 {
        self.psi / (p.kf() * (1.0 - self.r * self.r).sqrt())
    }
}

/// Real number or the pole of a guide curve at `r = R`.
///
/// At the pole both one-sided limits are kept so that comparisons made while
/// approaching `R` from either side never divide by zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    Pole { from_left: f64, from_right: f64 },
}

impl ExtReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            ExtReal::Pole { .. } => None,
        }
    }

    /// Value approached from the given side (`side < 0`: from the left).
    pub fn one_sided(self, side: f64) -> f64 {
        match self {
            ExtReal::Finite(x) => x,
            ExtReal::Pole {
                from_left,
                from_right,
            } => {
                if side < 0.0 {
                    from_left
                } else {
                    from_right
                }
            }
        }
    }
}

fn check_open(r: f64) -> Result<()> {
    if r.is_nan() || r.abs() >= 1.0 {
        Err(Error::Singular(r))
    } else {
        Ok(())
    }
}

/// Right-hand side of the phase equation
/// `ψ' = (ψ² + 1)((n - 1)(r - R)ψ + √(1 - r²)) / (k(1 - r²))`.
pub fn psi_rhs(p: &SolitonParams, r: f64, psi: f64) -> Result<f64> {
    check_open(r)?;
    Ok(psi_rhs_unchecked(p, r, psi))
}

#[inline]
pub(crate) fn psi_rhs_unchecked(p: &SolitonParams, r: f64, psi: f64) -> f64 {
    let s = 1.0 - r * r;
    (psi * psi + 1.0) * ((p.nf() - 1.0) * (r - p.r_const()) * psi + s.sqrt()) / (p.kf() * s)
}

/// Total derivative `ψ''` along solutions, from differentiating the phase
/// equation once.
pub(crate) fn psi_second_unchecked(p: &SolitonParams, r: f64, psi: f64) -> f64 {
    let s = 1.0 - r * r;
    let (k, a) = (p.kf(), (p.nf() - 1.0) * (r - p.r_const()));
    let q = psi * psi + 1.0;
    let g = a * psi + s.sqrt();
    let f = q * g / (k * s);
    let d_psi = (2.0 * psi * g + q * a) / (k * s);
    let d_r = q * (((p.nf() - 1.0) * psi - r / s.sqrt()) * s + 2.0 * r * g) / (k * s * s);
    d_r + d_psi * f
}

/// `V''` as a function of `(r, V')`:
///
/// ```text
/// V'' = k(n-1)(r-R) V'³ + V'² + ((n+k-1) r - (n-1) R) V' / (k(1-r²)) + 1 / (k²(1-r²))
/// ```
pub fn vprime_rhs(p: &SolitonParams, r: f64, vp: f64) -> Result<f64> {
    check_open(r)?;
    Ok(vprime_rhs_unchecked(p, r, vp))
}

#[inline]
pub(crate) fn vprime_rhs_unchecked(p: &SolitonParams, r: f64, vp: f64) -> f64 {
    let k = p.kf();
    let nm1 = p.nf() - 1.0;
    let rc = p.r_const();
    let s = 1.0 - r * r;
    k * nm1 * (r - rc) * vp * vp * vp
        + vp * vp
        + ((p.nf() + k - 1.0) * r - nm1 * rc) * vp / (k * s)
        + 1.0 / (k * k * s)
}

/// `η(r) = -√(1 - r²) / ((n - 1)(r - R))`, the curve on which `ψ' = 0`.
pub fn eta(p: &SolitonParams, r: f64) -> Result<ExtReal> {
    if r.is_nan() || r.abs() > 1.0 {
        return Err(Error::Domain(format!("r = {r} outside [-1, 1]")));
    }
    if r == p.r_const() {
        return Ok(ExtReal::Pole {
            from_left: f64::INFINITY,
            from_right: f64::NEG_INFINITY,
        });
    }
    Ok(ExtReal::Finite(eta_unchecked(p, r)))
}

#[inline]
pub(crate) fn eta_unchecked(p: &SolitonParams, r: f64) -> f64 {
    -(1.0 - r * r).max(0.0).sqrt() / ((p.nf() - 1.0) * (r - p.r_const()))
}

/// `ζ(r) = -1 / (k (n - 1)(r - R))`, the image of `η` in the `V'` plane.
pub fn zeta(p: &SolitonParams, r: f64) -> Result<ExtReal> {
    if r.is_nan() || r.abs() > 1.0 {
        return Err(Error::Domain(format!("r = {r} outside [-1, 1]")));
    }
    if r == p.r_const() {
        return Ok(ExtReal::Pole {
            from_left: f64::INFINITY,
            from_right: f64::NEG_INFINITY,
        });
    }
    Ok(ExtReal::Finite(
        -1.0 / (p.kf() * (p.nf() - 1.0) * (r - p.r_const())),
    ))
}

/// Both guide curves bound to one parameter set.
#[derive(Debug, Clone, Copy)]
pub struct GuideCurves {
    params: SolitonParams,
}

impl GuideCurves {
    pub fn new(params: SolitonParams) -> Self {
        Self { params }
    }

    pub fn eta_at(&self, r: f64) -> Result<ExtReal> {
        eta(&self.params, r)
    }

    pub fn zeta_at(&self, r: f64) -> Result<ExtReal> {
        zeta(&self.params, r)
    }
}

/// Sign of `ψ'` predicted from the position of `ψ` relative to `η`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignVerdict {
    Positive,
    Zero,
    Negative,
}

impl SignVerdict {
    pub fn as_f64(self) -> f64 {
        match self {
            SignVerdict::Positive => 1.0,
            SignVerdict::Zero => 0.0,
            SignVerdict::Negative => -1.0,
        }
    }
}

/// Sign trichotomy without evaluating the right-hand side.
///
/// On `r = R` or `ψ = 0` the derivative is positive. Otherwise, for `r > R`
/// the sign of `ψ'` is the sign of `ψ - η`, and for `r < R` it is the
/// opposite. `|ψ - η| <= tie_band` is reported as [`SignVerdict::Zero`].
pub fn sign_region(p: &SolitonParams, r: f64, psi: f64) -> SignVerdict {
    sign_region_with_band(p, r, psi, DEFAULT_TIE_BAND)
}

pub fn sign_region_with_band(p: &SolitonParams, r: f64, psi: f64, tie_band: f64) -> SignVerdict {
    let rc = p.r_const();
    if r == rc || psi == 0.0 {
        return SignVerdict::Positive;
    }
    let diff = psi - eta_unchecked(p, r);
    if diff.abs() <= tie_band {
        return SignVerdict::Zero;
    }
    let above = diff > 0.0;
    if (r > rc) == above {
        SignVerdict::Positive
    } else {
        SignVerdict::Negative
    }
}

// (n-1)/k * [(1+R) ln(1+r) + (1-R) ln(1-r)]; minus an antiderivative of
// 2 (n-1)(r-R) / (k(1-r²)), written without cancelling infinities at r = ±1.
fn log_potential(p: &SolitonParams, r: f64) -> f64 {
    let rc = p.r_const();
    (p.nf() - 1.0) / p.kf() * ((1.0 + rc) * r.ln_1p() + (1.0 - rc) * (-r).ln_1p())
}

/// Upper comparison function for `1/ψ²` to the right of a positive seed.
///
/// For a solution with `ψ(r0) = psi0 > 0` and `R < r0`, `1/ψ(r)² < h₁(r)` on
/// `(r0, 1)` as long as `ψ` exists, where
/// `h₁(r) = 1/psi0² - P(r) + P(r0)` and `P` is an antiderivative of
/// `2(n-1)(r-R)/(k(1-r²))`. `h₁` decreases to `-∞` at `r = 1`.
pub fn bound_h1(p: &SolitonParams, r0: f64, psi0: f64, r: f64) -> Result<f64> {
    let rc = p.r_const();
    if !(r0 > rc && r0 < 1.0) {
        return Err(Error::Precondition(format!("h1 needs R < r0 < 1, got r0 = {r0}")));
    }
    if !(psi0 > 0.0 && psi0.is_finite()) {
        return Err(Error::Precondition(format!("h1 needs psi0 > 0, got {psi0}")));
    }
    if !(r >= r0 && r <= 1.0) {
        return Err(Error::Precondition(format!("h1 needs r0 <= r <= 1, got r = {r}")));
    }
    Ok(log_potential(p, r) - log_potential(p, r0) + 1.0 / (psi0 * psi0))
}

/// Upper comparison function for `arctan ψ` on `(r0, R]`, `k = 1` form:
/// `h₂(r) = arcsin r - arcsin r0 + arctan psi0`.
///
/// Requires `0 < psi0 < η(r0)`; then `h₂(R) < π/2`.
pub fn bound_h2(p: &SolitonParams, r0: f64, psi0: f64, r: f64) -> Result<f64> {
    if p.k != 1 {
        return Err(Error::Precondition(format!(
            "h2 is the k = 1 bound, use bound_h2hat for k = {}",
            p.k
        )));
    }
    check_h2(p, r0, psi0, r)?;
    Ok(r.asin() - r0.asin() + psi0.atan())
}

/// `k >= 2` form of [`bound_h2`]: `ĥ₂(r) = (arcsin r - arcsin r0)/2 + arctan psi0`.
pub fn bound_h2hat(p: &SolitonParams, r0: f64, psi0: f64, r: f64) -> Result<f64> {
    if p.k < 2 {
        return Err(Error::Precondition(
            "h2hat is the k >= 2 bound, use bound_h2 for k = 1".into(),
        ));
    }
    check_h2(p, r0, psi0, r)?;
    Ok(0.5 * (r.asin() - r0.asin()) + psi0.atan())
}

/// Dispatches to [`bound_h2`] or [`bound_h2hat`] by `k`.
pub fn bound_h2_any(p: &SolitonParams, r0: f64, psi0: f64, r: f64) -> Result<f64> {
    if p.k == 1 {
        bound_h2(p, r0, psi0, r)
    } else {
        bound_h2hat(p, r0, psi0, r)
    }
}

fn check_h2(p: &SolitonParams, r0: f64, psi0: f64, r: f64) -> Result<()> {
    let rc = p.r_const();
    if !(r0 > -1.0 && r0 < rc) {
        return Err(Error::Precondition(format!("h2 needs -1 < r0 < R, got r0 = {r0}")));
    }
    let eta0 = eta_unchecked(p, r0);
    if !(psi0 > 0.0 && psi0 < eta0) {
        return Err(Error::Precondition(format!(
            "h2 needs 0 < psi0 < eta(r0) = {eta0}, got {psi0}"
        )));
    }
    if !(r >= r0 && r <= rc) {
        return Err(Error::Precondition(format!("h2 needs r0 <= r <= R, got r = {r}")));
    }
    Ok(())
}

/// Upper comparison function for `1/ψ` to the left of a seed above `η`:
///
/// ```text
/// h₃(r) = 1/psi0 + G(r0) - G(r),
/// G(s)  = -(n-1) psi0 / (2k) [(1+R) ln(1+s) + (1-R) ln(1-s)] + arcsin(s) / k
/// ```
///
/// `h₃(r0) = 1/psi0` and `h₃ -> -∞` as `r ↓ -1`. The bound `1/ψ < h₃` holds
/// when `psi0 > η(r0)`; the function itself is defined for any `psi0 > 0`.
pub fn bound_h3(p: &SolitonParams, r0: f64, psi0: f64, r: f64) -> Result<f64> {
    let rc = p.r_const();
    if !(r0 > -1.0 && r0 < rc) {
        return Err(Error::Precondition(format!("h3 needs -1 < r0 < R, got r0 = {r0}")));
    }
    if !(psi0 > 0.0 && psi0.is_finite()) {
        return Err(Error::Precondition(format!("h3 needs psi0 > 0, got {psi0}")));
    }
    if !(r >= -1.0 && r <= r0) {
        return Err(Error::Precondition(format!("h3 needs -1 <= r <= r0, got r = {r}")));
    }
    let g = |s: f64| -> f64 {
        -0.5 * psi0 * log_potential(p, s) + s.asin() / p.kf()
    };
    Ok(1.0 / psi0 + g(r0) - g(r))
}

/// The four blow-up situations covered by the comparison functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowUpCase {
    /// `r0 ∈ (R, 1)`, `psi0 > 0`: `ψ -> +∞` at some `r1 ∈ (r0, 1)`.
    RightPlus,
    /// `r0 ∈ (-1, R)`, `psi0 > η(r0)`: `ψ -> +∞` at some `r1 ∈ (-1, r0)`.
    LeftPlus,
    /// `r0 ∈ (-1, R)`, `psi0 < 0`: `ψ -> -∞` at some `r1 ∈ (-1, r0)`.
    LeftMinus,
    /// `r0 ∈ (R, 1)`, `psi0 < η(r0)`: `ψ -> -∞` at some `r1 ∈ (r0, 1)`.
    RightMinus,
}

impl BlowUpCase {
    /// The case whose preconditions hold at `(r0, psi0)` in the direction
    /// `dir` (`+1` right, `-1` left), if any.
    pub fn detect(p: &SolitonParams, r0: f64, psi0: f64, dir: f64) -> Option<Self> {
        let rc = p.r_const();
        if !(r0.abs() < 1.0) || r0 == rc {
            return None;
        }
        let eta0 = eta_unchecked(p, r0);
        match (dir > 0.0, r0 > rc) {
            (true, true) if psi0 > 0.0 => Some(BlowUpCase::RightPlus),
            (true, true) if psi0 < eta0 => Some(BlowUpCase::RightMinus),
            (false, false) if psi0 < 0.0 => Some(BlowUpCase::LeftMinus),
            (false, false) if psi0 > eta0 => Some(BlowUpCase::LeftPlus),
            _ => None,
        }
    }

    /// Direction of integration towards the blow-up.
    pub fn direction(self) -> f64 {
        match self {
            BlowUpCase::RightPlus | BlowUpCase::RightMinus => 1.0,
            BlowUpCase::LeftPlus | BlowUpCase::LeftMinus => -1.0,
        }
    }

    fn mirrored(self) -> Self {
        match self {
            BlowUpCase::RightPlus => BlowUpCase::LeftMinus,
            BlowUpCase::LeftMinus => BlowUpCase::RightPlus,
            BlowUpCase::LeftPlus => BlowUpCase::RightMinus,
            BlowUpCase::RightMinus => BlowUpCase::LeftPlus,
        }
    }
}

/// Comparison bound on `ψ` along the solution through `(r0, psi0)` for the
/// given case, evaluated at `r` between `r0` and the blow-up bound.
///
/// Returns the guaranteed lower bound on `|ψ(r)|` (`1/√h₁` or `1/h₃`, mirrored
/// as needed) or `None` where the comparison function is not positive.
pub fn blowup_envelope(
    p: &SolitonParams,
    case: BlowUpCase,
    r0: f64,
    psi0: f64,
    r: f64,
) -> Result<Option<f64>> {
    match case {
        BlowUpCase::RightPlus => {
            let h = bound_h1(p, r0, psi0, r)?;
            Ok((h > 0.0).then(|| 1.0 / h.sqrt()))
        }
        BlowUpCase::LeftPlus => {
            let h = bound_h3(p, r0, psi0, r)?;
            Ok((h > 0.0).then(|| 1.0 / h))
        }
        BlowUpCase::LeftMinus | BlowUpCase::RightMinus => {
            blowup_envelope(&p.reflected(), case.mirrored(), -r0, -psi0, -r)
        }
    }
}

/// Root `r̄₁` of the comparison function for `case`, by bisection to `1e-12`.
///
/// The true blow-up of the solution through `(r0, psi0)` happens no later
/// than `r̄₁` in the direction of integration.
pub fn blowup_bound(p: &SolitonParams, r0: f64, psi0: f64, case: BlowUpCase) -> Result<f64> {
    check_case(p, r0, psi0, case)?;
    match case {
        BlowUpCase::RightPlus => {
            let f = |r: f64| bound_h1(p, r0, psi0, r).unwrap_or(f64::NAN);
            bisect(f, r0, 1.0, 1e-12)
        }
        BlowUpCase::LeftPlus => {
            let f = |r: f64| bound_h3(p, r0, psi0, r).unwrap_or(f64::NAN);
            bisect(f, -1.0, r0, 1e-12)
        }
        BlowUpCase::LeftMinus | BlowUpCase::RightMinus => {
            blowup_bound(&p.reflected(), -r0, -psi0, case.mirrored()).map(|x| -x)
        }
    }
}

fn check_case(p: &SolitonParams, r0: f64, psi0: f64, case: BlowUpCase) -> Result<()> {
    if BlowUpCase::detect(p, r0, psi0, case.direction()) == Some(case) {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "({r0}, {psi0}) does not satisfy the {case:?} preconditions"
        )))
    }
}

/// Bound on `ψ` for a solution that stays between `0` and `η` while moving
/// towards `R`, evaluated at `r` between `r0` and `R`.
///
/// For `r0 < R` (`0 < psi0 < η(r0)`, integrating right) this is the upper
/// bound `tan(h₂(r))` (or `tan(ĥ₂(r))` for `k >= 2`). For `r0 > R`
/// (`η(r0) < psi0 < 0`, integrating left) it is the mirrored lower bound.
pub fn bounded_limit_envelope(p: &SolitonParams, r0: f64, psi0: f64, r: f64) -> Result<f64> {
    if r0 < p.r_const() {
        Ok(bound_h2_any(p, r0, psi0, r)?.tan())
    } else {
        Ok(-bound_h2_any(&p.reflected(), -r0, -psi0, -r)?.tan())
    }
}
