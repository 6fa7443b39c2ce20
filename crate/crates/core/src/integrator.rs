//! Integration of the phase equation to its maximal interval.
//!
//! Stepping uses the Dormand–Prince 5(4) pair with per-step error control.
//! While `|ψ|` is moderate the state is `ψ` itself; once `|ψ|` exceeds
//! [`IntegratorConfig::switch_psi`] the state becomes `u = 1/ψ²` (with the
//! sign of `ψ` frozen), which satisfies
//!
//! ```text
//! u' = -2 (1 + u) ((n - 1)(r - R) + sgn(ψ) √(1 - r²) √u) / (k (1 - r²))
//! ```
//!
//! and reaches `0` linearly at a pole of `ψ`. A blow-up is declared when
//! `|ψ|` passes the configured threshold or when the remaining distance to
//! the zero of `u` drops below the minimum step.
//!
//! Near `r = ±1` the step is capped at half the distance to the endpoint.
//! A solution that reaches the endpoint margin close to the regular branch
//! `ψ ≈ k √(1 - r²) V'(±1)` is terminated with a regular endpoint event.

use serde::{Deserialize, Serialize};

use crate::catalog::SolitonParams;
use crate::error::{Error, Result};
use crate::numeric::{extrapolate_to_zero, hermite3, hermite5};
use crate::phase::{
    eta_unchecked, psi_rhs_unchecked, psi_second_unchecked, vprime_rhs_unchecked, PhasePoint,
};

/// Integration settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    /// Relative and absolute per-step error tolerance.
    pub tol: f64,
    /// `|ψ|` above which a blow-up is declared.
    pub blowup_threshold: f64,
    pub max_steps: usize,
    /// Maximum number of stored samples after thinning.
    pub max_samples: usize,
    /// Keep every accepted step instead of thinning.
    pub full_resolution: bool,
    /// Distance to `±1` at which a regular approach is terminated.
    pub endpoint_margin: f64,
    /// Offset used when shooting from an endpoint.
    pub epsilon: f64,
    /// `|ψ|` above which the reciprocal variable is used.
    pub switch_psi: f64,
    pub min_step: f64,
    pub max_step: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            blowup_threshold: 1e8,
            max_steps: 1_000_000,
            max_samples: 4096,
            full_resolution: false,
            endpoint_margin: 1e-6,
            epsilon: 1e-6,
            switch_psi: 16.0,
            min_step: 1e-14,
            max_step: 0.05,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tol", self.tol),
            ("blowup_threshold", self.blowup_threshold),
            ("endpoint_margin", self.endpoint_margin),
            ("epsilon", self.epsilon),
            ("switch_psi", self.switch_psi),
            ("min_step", self.min_step),
            ("max_step", self.max_step),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_steps == 0 || self.max_samples < 2 {
            return Err(Error::Domain("max_steps and max_samples must be positive".into()));
        }
        if self.blowup_threshold <= 2.0 * self.switch_psi {
            return Err(Error::Domain(
                "blowup_threshold must exceed twice switch_psi".into(),
            ));
        }
        Ok(())
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

/// Direction of integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Left,
    Right,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Left => -1.0,
            Direction::Right => 1.0,
        }
    }

    pub fn from_sign(s: f64) -> Self {
        if s < 0.0 {
            Direction::Left
        } else {
            Direction::Right
        }
    }
}

/// How one side of a maximal solution ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    RegularEndpoint,
    BlowUpPlus,
    BlowUpMinus,
    BudgetExhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerminationEvent {
    pub kind: EventKind,
    /// `±1` for a regular endpoint, the pole estimate for a blow-up, the
    /// last reached `r` otherwise.
    pub location: f64,
    /// Measured `V'(±1)` for a regular endpoint.
    pub endpoint_vprime: Option<f64>,
    /// `ψ` at the last accepted step.
    pub last_psi: f64,
    /// Distance between the last accepted step and `location`.
    pub gap: f64,
}

/// Which guide a crossing refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossingKind {
    Zero,
    Eta,
}

/// A transversal crossing of `ψ = 0` or `ψ = η`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub kind: CrossingKind,
    pub r: f64,
    /// `ψ - guide` increases through the crossing (in increasing `r`).
    pub upward: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub min_step: f64,
    pub max_step: f64,
}

impl StepStats {
    fn merge(&self, other: &StepStats) -> StepStats {
        StepStats {
            accepted: self.accepted + other.accepted,
            rejected: self.rejected + other.rejected,
            rhs_evals: self.rhs_evals + other.rhs_evals,
            min_step: pick(self.min_step, other.min_step, f64::min),
            max_step: pick(self.max_step, other.max_step, f64::max),
        }
    }
}

fn pick(a: f64, b: f64, f: fn(f64, f64) -> f64) -> f64 {
    match (a > 0.0, b > 0.0) {
        (true, true) => f(a, b),
        (true, false) => a,
        (false, true) => b,
        _ => 0.0,
    }
}

/// One direction of a maximal solution, ordered away from the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfTrace {
    pub direction: Direction,
    /// `(r, ψ)` at the seed and every accepted step.
    pub points: Vec<(f64, f64)>,
    pub event: TerminationEvent,
    pub crossings: Vec<Crossing>,
    pub stats: StepStats,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    Direct,
    Reciprocal(f64),
}

impl Mode {
    fn to_psi(self, y: f64) -> f64 {
        match self {
            Mode::Direct => y,
            Mode::Reciprocal(s) => s / y.max(0.0).sqrt(),
        }
    }
}

struct System<'a> {
    p: &'a SolitonParams,
    evals: usize,
}

impl System<'_> {
    fn rhs(&mut self, mode: Mode, r: f64, y: f64) -> f64 {
        self.evals += 1;
        match mode {
            Mode::Direct => psi_rhs_unchecked(self.p, r, y),
            Mode::Reciprocal(sign) => {
                let s = 1.0 - r * r;
                let nm1 = self.p.nf() - 1.0;
                -2.0 * (1.0 + y)
                    * (nm1 * (r - self.p.r_const()) + sign * s.sqrt() * y.max(0.0).sqrt())
                    / (self.p.kf() * s)
            }
        }
    }

    // Dormand–Prince 5(4) step. Returns (y_new, error estimate, f(r+h, y_new)).
    fn dopri_step(&mut self, mode: Mode, r: f64, y: f64, f0: f64, h: f64) -> (f64, f64, f64) {
        let k1 = f0;
        let k2 = self.rhs(mode, r + h / 5.0, y + h * (k1 / 5.0));
        let k3 = self.rhs(mode, r + 3.0 * h / 10.0, y + h * (3.0 / 40.0 * k1 + 9.0 / 40.0 * k2));
        let k4 = self.rhs(
            mode,
            r + 4.0 * h / 5.0,
            y + h * (44.0 / 45.0 * k1 - 56.0 / 15.0 * k2 + 32.0 / 9.0 * k3),
        );
        let k5 = self.rhs(
            mode,
            r + 8.0 * h / 9.0,
            y + h
                * (19372.0 / 6561.0 * k1 - 25360.0 / 2187.0 * k2 + 64448.0 / 6561.0 * k3
                    - 212.0 / 729.0 * k4),
        );
        let k6 = self.rhs(
            mode,
            r + h,
            y + h
                * (9017.0 / 3168.0 * k1 - 355.0 / 33.0 * k2
                    + 46732.0 / 5247.0 * k3
                    + 49.0 / 176.0 * k4
                    - 5103.0 / 18656.0 * k5),
        );
        let y_new = y + h
            * (35.0 / 384.0 * k1 + 500.0 / 1113.0 * k3 + 125.0 / 192.0 * k4
                - 2187.0 / 6784.0 * k5
                + 11.0 / 84.0 * k6);
        let k7 = self.rhs(mode, r + h, y_new);
        let err = h
            * (71.0 / 57600.0 * k1 - 71.0 / 16695.0 * k3 + 71.0 / 1920.0 * k4
                - 17253.0 / 339200.0 * k5
                + 22.0 / 525.0 * k6
                - 1.0 / 40.0 * k7);
        (y_new, err, k7)
    }
}

/// `V'(±1)` forced on a solution that extends to the endpoint:
/// `1/(k(k + (n-1)(1+R)))` at `-1` and `-1/(k(k + (n-1)(1-R)))` at `+1`.
pub fn endpoint_vprime_formula(p: &SolitonParams, which: Direction) -> f64 {
    let (k, nm1, rc) = (p.kf(), p.nf() - 1.0, p.r_const());
    match which {
        Direction::Left => 1.0 / (k * (k + nm1 * (1.0 + rc))),
        Direction::Right => -1.0 / (k * (k + nm1 * (1.0 - rc))),
    }
}

/// Start-up point `ε` away from an endpoint on the regular branch, using the
/// forced endpoint derivative: `ψ = k √(1 - r²) V'(∓1)` at `r = ∓(1 - ε)`.
pub fn endpoint_seed(p: &SolitonParams, which: Direction, epsilon: f64) -> Result<PhasePoint> {
    if !(epsilon > 0.0 && epsilon <= 1e-4) {
        return Err(Error::Domain(format!(
            "endpoint epsilon must lie in (0, 1e-4], got {epsilon}"
        )));
    }
    let r = match which {
        Direction::Left => -1.0 + epsilon,
        Direction::Right => 1.0 - epsilon,
    };
    let psi = p.kf() * (1.0 - r * r).sqrt() * endpoint_vprime_formula(p, which);
    PhasePoint::new(r, psi)
}

/// Integrates from `seed` in one direction until the solution ends.
pub fn integrate_from(
    p: &SolitonParams,
    seed: PhasePoint,
    direction: Direction,
    cfg: &IntegratorConfig,
) -> Result<HalfTrace> {
    cfg.validate()?;
    PhasePoint::new(seed.r, seed.psi)?;
    let mut sys = System { p, evals: 0 };
    let dir = direction.sign();
    let u_blow = 1.0 / (cfg.blowup_threshold * cfg.blowup_threshold);
    let switch_back = 0.5 * cfg.switch_psi;

    let mut stats = StepStats::default();
    let mut points = vec![(seed.r, seed.psi)];
    let mut crossings = Vec::new();
    if seed.psi == 0.0 {
        crossings.push(Crossing {
            kind: CrossingKind::Zero,
            r: seed.r,
            upward: true,
        });
    }

    let mut r = seed.r;
    let mut mode = if seed.psi.abs() > cfg.switch_psi {
        Mode::Reciprocal(seed.psi.signum())
    } else {
        Mode::Direct
    };
    let mut y = match mode {
        Mode::Direct => seed.psi,
        Mode::Reciprocal(_) => 1.0 / (seed.psi * seed.psi),
    };
    let mut f = sys.rhs(mode, r, y);
    let mut h = (1e-3 / (1.0 + f.abs())).clamp(1e-8, 1e-3).min(0.5 * (1.0 - r.abs()));

    let finish = |kind: EventKind, location: f64, r: f64, psi: f64, sys: &System, mut stats: StepStats| {
        stats.rhs_evals = sys.evals;
        (
            TerminationEvent {
                kind,
                location,
                endpoint_vprime: None,
                last_psi: psi,
                gap: (location - r).abs(),
            },
            stats,
        )
    };

    let (event, stats) = loop {
        let psi = mode.to_psi(y);
        let dist = 1.0 - dir * r;

        if dist <= cfg.endpoint_margin {
            let regular = p.kf() * (1.0 - r * r).sqrt() * endpoint_vprime_formula(p, direction);
            let ratio = psi / regular;
            if (0.5..=2.0).contains(&ratio) {
                break finish(EventKind::RegularEndpoint, dir, r, psi, &sys, stats);
            }
            if dist < 1e-13 {
                break finish(EventKind::BudgetExhausted, r, r, psi, &sys, stats);
            }
        }
        if stats.accepted + stats.rejected >= cfg.max_steps {
            break finish(EventKind::BudgetExhausted, r, r, psi, &sys, stats);
        }

        let cap = cfg.max_step.min(0.5 * dist).min(0.5 * (1.0 - r.abs()));
        h = h.min(cap);
        let step = dir * h;
        let (y_new, err, f_new) = sys.dopri_step(mode, r, y, f, step);
        let scale = cfg.tol * (1.0 + y.abs().max(y_new.abs()));
        let ratio = err.abs() / scale;

        if !(ratio <= 1.0) || !y_new.is_finite() {
            stats.rejected += 1;
            let shrink = if ratio.is_finite() {
                (0.9 * ratio.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.1
            };
            h *= shrink;
            if h < cfg.min_step {
                let kind = if psi.abs() > cfg.switch_psi {
                    if psi > 0.0 {
                        EventKind::BlowUpPlus
                    } else {
                        EventKind::BlowUpMinus
                    }
                } else {
                    EventKind::BudgetExhausted
                };
                break finish(kind, r, r, psi, &sys, stats);
            }
            continue;
        }

        // Approach a pole of ψ by halving the remaining distance.
        if let Mode::Reciprocal(sign) = mode {
            if y_new <= u_blow {
                let remaining = if y_new < 0.0 { h * y / (y - y_new) } else { h * y / (y - y_new).max(f64::MIN_POSITIVE) };
                let remaining = remaining.min(h);
                let kind = if sign > 0.0 {
                    EventKind::BlowUpPlus
                } else {
                    EventKind::BlowUpMinus
                };
                if remaining < cfg.min_step || y_new >= 0.0 {
                    let (location, last_r, last_psi) = if y_new >= 0.0 {
                        accept_stats(&mut stats, h);
                        points.push((r + step, mode.to_psi(y_new)));
                        let loc = r + step + dir * y_new / f_new.abs().max(f64::MIN_POSITIVE);
                        (loc, r + step, mode.to_psi(y_new))
                    } else {
                        (r + dir * remaining, r, psi)
                    };
                    break finish(kind, location, last_r, last_psi, &sys, stats);
                }
                h = 0.5 * remaining;
                continue;
            }
        }

        let r_new = r + step;
        let psi_new = mode.to_psi(y_new);
        detect_crossings(p, mode, (r, y, f), (r_new, y_new, f_new), &mut crossings);
        accept_stats(&mut stats, h);
        points.push((r_new, psi_new));
        r = r_new;
        y = y_new;
        f = f_new;

        if psi_new.abs() >= cfg.blowup_threshold {
            let kind = if psi_new > 0.0 {
                EventKind::BlowUpPlus
            } else {
                EventKind::BlowUpMinus
            };
            let loc = match mode {
                Mode::Reciprocal(_) => r + dir * y / f.abs().max(f64::MIN_POSITIVE),
                Mode::Direct => r,
            };
            break finish(kind, loc, r, psi_new, &sys, stats);
        }

        match mode {
            Mode::Direct if psi_new.abs() > cfg.switch_psi => {
                mode = Mode::Reciprocal(psi_new.signum());
                y = 1.0 / (psi_new * psi_new);
                f = sys.rhs(mode, r, y);
            }
            Mode::Reciprocal(_) if psi_new.abs() < switch_back => {
                mode = Mode::Direct;
                y = psi_new;
                f = sys.rhs(mode, r, y);
            }
            _ => {}
        }

        let grow = if ratio > 0.0 {
            (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h *= grow;
    };

    Ok(HalfTrace {
        direction,
        points,
        event,
        crossings,
        stats,
    })
}

fn accept_stats(stats: &mut StepStats, h: f64) {
    stats.accepted += 1;
    stats.min_step = if stats.min_step > 0.0 { stats.min_step.min(h) } else { h };
    stats.max_step = stats.max_step.max(h);
}

// Looks for sign changes of ψ and ψ - η over one accepted step and refines
// them by bisection on the cubic Hermite interpolant of the state.
fn detect_crossings(
    p: &SolitonParams,
    mode: Mode,
    a: (f64, f64, f64),
    b: (f64, f64, f64),
    out: &mut Vec<Crossing>,
) {
    let (ra, ya, fa) = a;
    let (rb, yb, fb) = b;
    let psi_at = |r: f64| mode.to_psi(hermite3(ra, ya, fa, rb, yb, fb, r));
    let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
    let psi_a = mode.to_psi(ya);
    let psi_b = mode.to_psi(yb);

    if mode == Mode::Direct && psi_b != 0.0 && psi_a != 0.0 && psi_a.signum() != psi_b.signum() {
        let root = crate::numeric::bisect(psi_at, ra, rb, 1e-15).unwrap_or(0.5 * (ra + rb));
        let (left, right) = if ra < rb { (psi_a, psi_b) } else { (psi_b, psi_a) };
        out.push(Crossing {
            kind: CrossingKind::Zero,
            r: root,
            upward: right > left,
        });
    } else if mode == Mode::Direct && psi_b == 0.0 {
        out.push(Crossing {
            kind: CrossingKind::Zero,
            r: rb,
            upward: fb > 0.0,
        });
    }

    let rc = p.r_const();
    if lo <= rc && rc <= hi {
        return;
    }
    let ga = psi_a - eta_unchecked(p, ra);
    let gb = psi_b - eta_unchecked(p, rb);
    if ga != 0.0 && gb != 0.0 && ga.signum() != gb.signum() {
        let g = |r: f64| psi_at(r) - eta_unchecked(p, r);
        let root = crate::numeric::bisect(g, ra, rb, 1e-15).unwrap_or(0.5 * (ra + rb));
        let (left, right) = if ra < rb { (ga, gb) } else { (gb, ga) };
        out.push(Crossing {
            kind: CrossingKind::Eta,
            r: root,
            upward: right > left,
        });
    }
}

/// One stored point of a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub r: f64,
    pub psi: f64,
    pub vprime: f64,
    pub v: f64,
}

/// A maximal solution: both directions from a seed joined in increasing `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub params: SolitonParams,
    pub seed: PhasePoint,
    pub samples: Vec<Sample>,
    pub left_event: TerminationEvent,
    pub right_event: TerminationEvent,
    pub crossings: Vec<Crossing>,
    pub step_stats: StepStats,
    pub config: IntegratorConfig,
    /// Value of `v` at the seed.
    pub gauge: f64,
}

impl Trace {
    /// `true` when neither side ran out of budget.
    pub fn is_complete(&self) -> bool {
        self.left_event.kind != EventKind::BudgetExhausted
            && self.right_event.kind != EventKind::BudgetExhausted
    }

    pub fn zero_crossings(&self) -> impl Iterator<Item = &Crossing> {
        self.crossings.iter().filter(|c| c.kind == CrossingKind::Zero)
    }

    /// Same solution with `v` shifted so that `v(seed) = gauge`.
    pub fn with_gauge(mut self, gauge: f64) -> Self {
        let shift = gauge - self.gauge;
        for s in &mut self.samples {
            s.v += shift;
        }
        self.gauge = gauge;
        self
    }

    /// `(min, max)` of `r` over the stored samples.
    pub fn r_span(&self) -> (f64, f64) {
        (
            self.samples.first().map_or(f64::NAN, |s| s.r),
            self.samples.last().map_or(f64::NAN, |s| s.r),
        )
    }

    fn bracket(&self, r: f64) -> Option<usize> {
        let n = self.samples.len();
        if n < 2 || r < self.samples[0].r || r > self.samples[n - 1].r {
            return None;
        }
        let i = self.samples.partition_point(|s| s.r <= r);
        Some(i.clamp(1, n - 1) - 1)
    }

    /// Quintic Hermite interpolation of `ψ` inside the sampled span.
    pub fn psi_at(&self, r: f64) -> Option<f64> {
        let i = self.bracket(r)?;
        let (a, b) = (self.samples[i], self.samples[i + 1]);
        let p = &self.params;
        if a.psi.abs() > self.config.switch_psi && b.psi.abs() > self.config.switch_psi && a.psi.signum() == b.psi.signum() {
            // interpolate u = 1/ψ²
            let du = |s: &Sample| -2.0 * psi_rhs_unchecked(p, s.r, s.psi) / s.psi.powi(3);
            let u = hermite3(a.r, a.psi.powi(-2), du(&a), b.r, b.psi.powi(-2), du(&b), r);
            return Some(a.psi.signum() / u.max(0.0).sqrt());
        }
        let jet = |s: &Sample| {
            [s.psi, psi_rhs_unchecked(p, s.r, s.psi), psi_second_unchecked(p, s.r, s.psi)]
        };
        Some(hermite5(a.r, jet(&a), b.r, jet(&b), r))
    }

    /// Cubic Hermite interpolation of `V'` using `V''` from the ODE.
    pub fn vprime_at(&self, r: f64) -> Option<f64> {
        let i = self.bracket(r)?;
        let (a, b) = (self.samples[i], self.samples[i + 1]);
        let p = &self.params;
        Some(hermite3(
            a.r,
            a.vprime,
            vprime_rhs_unchecked(p, a.r, a.vprime),
            b.r,
            b.vprime,
            vprime_rhs_unchecked(p, b.r, b.vprime),
            r,
        ))
    }

    /// Quintic Hermite interpolation of `V` from `(V, V', V'')` at the samples.
    pub fn v_at(&self, r: f64) -> Option<f64> {
        let i = self.bracket(r)?;
        let (a, b) = (self.samples[i], self.samples[i + 1]);
        let p = &self.params;
        Some(hermite5(
            a.r,
            [a.v, a.vprime, vprime_rhs_unchecked(p, a.r, a.vprime)],
            b.r,
            [b.v, b.vprime, vprime_rhs_unchecked(p, b.r, b.vprime)],
            r,
        ))
    }

    /// Minimum and maximum of `ψ` over the samples.
    pub fn psi_range(&self) -> (f64, f64) {
        self.samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
            (lo.min(s.psi), hi.max(s.psi))
        })
    }
}

/// Joins both directions from `seed` and recovers `V'` and `V`.
///
/// `V` is normalised by `V(seed.r) = 0`. Crossings within `1e-12` of each
/// other are merged. Regular endpoints get their `V'(±1)` measured by
/// extrapolating the sampled `V'` to the endpoint.
pub fn maximal_trace(p: &SolitonParams, seed: PhasePoint, cfg: &IntegratorConfig) -> Result<Trace> {
    let left = integrate_from(p, seed, Direction::Left, cfg)?;
    let right = integrate_from(p, seed, Direction::Right, cfg)?;
    Ok(join(p, seed, left, right, cfg))
}

pub(crate) fn join(
    p: &SolitonParams,
    seed: PhasePoint,
    left: HalfTrace,
    right: HalfTrace,
    cfg: &IntegratorConfig,
) -> Trace {
    let k = p.kf();
    let mut pts: Vec<(f64, f64)> = left.points.iter().rev().copied().collect();
    pts.extend(right.points.iter().skip(1).copied());
    let seed_index = left.points.len() - 1;

    let mut samples: Vec<Sample> = pts
        .iter()
        .map(|&(r, psi)| Sample {
            r,
            psi,
            vprime: psi / (k * (1.0 - r * r).sqrt()),
            v: 0.0,
        })
        .collect();
    integrate_v(p, &mut samples, seed_index, cfg.switch_psi);

    let mut crossings: Vec<Crossing> = left.crossings.iter().chain(right.crossings.iter()).copied().collect();
    crossings.sort_by(|a, b| a.r.total_cmp(&b.r));
    crossings.dedup_by(|a, b| a.kind == b.kind && (a.r - b.r).abs() < 1e-12);

    let mut trace = Trace {
        params: *p,
        seed,
        samples,
        left_event: left.event,
        right_event: right.event,
        crossings,
        step_stats: left.stats.merge(&right.stats),
        config: *cfg,
        gauge: 0.0,
    };
    for dir in [Direction::Left, Direction::Right] {
        let ev = match dir {
            Direction::Left => &trace.left_event,
            Direction::Right => &trace.right_event,
        };
        if ev.kind == EventKind::RegularEndpoint {
            let measured = measure_endpoint_vprime(&trace, dir);
            match dir {
                Direction::Left => trace.left_event.endpoint_vprime = measured,
                Direction::Right => trace.right_event.endpoint_vprime = measured,
            }
        }
    }
    if !cfg.full_resolution && trace.samples.len() > cfg.max_samples {
        trace.samples = thin(&trace.samples, cfg.max_samples, seed_index);
    }
    trace
}

// Composite quadrature of V' outward from the seed. Intervals with moderate ψ
// use the trapezoid rule with the endpoint-derivative correction; intervals
// near a pole use the rule that is exact when 1/ψ² is linear.
fn integrate_v(p: &SolitonParams, s: &mut [Sample], seed: usize, switch: f64) {
    let k = p.kf();
    let piece = |a: &Sample, b: &Sample| -> f64 {
        let h = b.r - a.r;
        if a.psi.abs() > switch && b.psi.abs() > switch && a.psi.signum() == b.psi.signum() {
            let hm = 2.0 * a.psi.abs() * b.psi.abs() / (a.psi.abs() + b.psi.abs());
            let g = 0.5 * (1.0 / (k * (1.0 - a.r * a.r).sqrt()) + 1.0 / (k * (1.0 - b.r * b.r).sqrt()));
            a.psi.signum() * h * hm * g
        } else {
            let da = vprime_rhs_unchecked(p, a.r, a.vprime);
            let db = vprime_rhs_unchecked(p, b.r, b.vprime);
            0.5 * h * (a.vprime + b.vprime) + h * h / 12.0 * (da - db)
        }
    };
    s[seed].v = 0.0;
    for i in seed + 1..s.len() {
        let d = piece(&s[i - 1], &s[i]);
        s[i].v = s[i - 1].v + d;
    }
    for i in (0..seed).rev() {
        let d = piece(&s[i], &s[i + 1]);
        s[i].v = s[i + 1].v - d;
    }
}

/// Extrapolates the sampled `V'` to the endpoint on the given side.
///
/// `V'` is evaluated by Hermite interpolation at distances
/// `H, H/2, H/4, H/8` from the endpoint, `H = max(1e-3, 8 d)` with `d` the
/// distance of the closest sample, and the cubic through these values is
/// evaluated at the endpoint.
pub fn measure_endpoint_vprime(trace: &Trace, which: Direction) -> Option<f64> {
    let (lo, hi) = trace.r_span();
    let (edge, sign) = match which {
        Direction::Left => (-1.0, 1.0),
        Direction::Right => (1.0, -1.0),
    };
    let d = match which {
        Direction::Left => lo + 1.0,
        Direction::Right => 1.0 - hi,
    };
    let big = (8.0 * d).max(1e-3);
    let nodes = [big, big / 2.0, big / 4.0, big / 8.0];
    let mut vals = Vec::with_capacity(4);
    for s in nodes {
        vals.push(trace.vprime_at(edge + sign * s)?);
    }
    Some(extrapolate_to_zero(&nodes, &vals))
}

// Keeps at most `max` samples, spread evenly in a measure that adds the
// turning angle of the (r, arctan ψ) polyline to its arc length. The first,
// last and seed samples are always kept.
fn thin(samples: &[Sample], max: usize, seed: usize) -> Vec<Sample> {
    let n = samples.len();
    let xy: Vec<(f64, f64)> = samples.iter().map(|s| (s.r, s.psi.atan())).collect();
    let mut weight = vec![0.0; n];
    for i in 1..n {
        let (dx, dy) = (xy[i].0 - xy[i - 1].0, xy[i].1 - xy[i - 1].1);
        weight[i] = (dx * dx + dy * dy).sqrt();
    }
    for i in 1..n - 1 {
        let a = (xy[i].1 - xy[i - 1].1).atan2(xy[i].0 - xy[i - 1].0);
        let b = (xy[i + 1].1 - xy[i].1).atan2(xy[i + 1].0 - xy[i].0);
        weight[i] += 0.1 * (b - a).abs();
    }
    let total: f64 = weight.iter().sum();
    let slots = (max - 3).max(1) as f64;
    let mut keep = vec![false; n];
    keep[0] = true;
    keep[n - 1] = true;
    keep[seed] = true;
    let mut acc = 0.0;
    let mut next = total / slots;
    for i in 0..n {
        acc += weight[i];
        if acc >= next {
            keep[i] = true;
            next += total / slots;
        }
    }
    samples
        .iter()
        .zip(keep)
        .filter_map(|(s, k)| k.then_some(*s))
        .collect()
}

/// `V'(±1)` estimates from endpoint-started traces and their extrapolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointEstimate {
    pub which: Direction,
    pub per_epsilon: Vec<(f64, f64)>,
    pub extrapolated: f64,
    pub formula: f64,
}

/// Shoots from the endpoint at each `ε`, measures `V'` at the endpoint and
/// extrapolates the measurements polynomially to `ε = 0`.
pub fn endpoint_vprime_extrapolated(
    p: &SolitonParams,
    which: Direction,
    epsilons: &[f64],
    cfg: &IntegratorConfig,
) -> Result<EndpointEstimate> {
    if epsilons.is_empty() {
        return Err(Error::Domain("need at least one epsilon".into()));
    }
    let mut per = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let seed = endpoint_seed(p, which, eps)?;
        let trace = maximal_trace(p, seed, cfg)?;
        let ev = match which {
            Direction::Left => trace.left_event,
            Direction::Right => trace.right_event,
        };
        let v = ev.endpoint_vprime.ok_or_else(|| {
            Error::IncompleteTrace(format!("no regular endpoint reached at epsilon = {eps}"))
        })?;
        per.push((eps, v));
    }
    let xs: Vec<f64> = per.iter().map(|x| x.0).collect();
    let ys: Vec<f64> = per.iter().map(|x| x.1).collect();
    Ok(EndpointEstimate {
        which,
        per_epsilon: per,
        extrapolated: extrapolate_to_zero(&xs, &ys),
        formula: endpoint_vprime_formula(p, which),
    })
}

/// Agreement of the adaptive solver with fixed-step reference solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub window: (f64, f64),
    pub euler_step: f64,
    pub rk4_step: f64,
    /// max |ψ_adaptive - ψ_euler| on the Euler grid.
    pub adaptive_vs_euler: f64,
    /// max |ψ_rk4 - ψ_euler|.
    pub rk4_vs_euler: f64,
    /// max |ψ_adaptive - ψ_rk4|.
    pub adaptive_vs_rk4: f64,
    /// max |ψ(tol) - ψ(tol/100)| on the RK4 grid.
    pub adaptive_vs_tighter: f64,
}

/// Default clip level of `|ψ|` for convergence windows. Explicit Euler's
/// global error grows quickly with `|ψ|` here; at `h = 1e-6` a clip of 5
/// already costs about `2e-3`.
pub const CONVERGENCE_PSI_CLIP: f64 = 2.0;

/// Convergence windows also stay inside `|r| <= 0.9`, away from the singular
/// factor `1/(1 - r²)`.
pub const CONVERGENCE_R_CLIP: f64 = 0.9;

/// Largest interval around the seed on which `|ψ| <= clip` and `|r| <= 0.95`.
pub fn clipped_window(trace: &Trace, clip: f64) -> (f64, f64) {
    let s = &trace.samples;
    let i0 = s.partition_point(|x| x.r < trace.seed.r).min(s.len() - 1);
    let ok = |x: &Sample| x.psi.abs() <= clip && x.r.abs() <= CONVERGENCE_R_CLIP;
    if !ok(&s[i0]) {
        return (trace.seed.r, trace.seed.r);
    }
    let mut lo = i0;
    while lo > 0 && ok(&s[lo - 1]) {
        lo -= 1;
    }
    let mut hi = i0;
    while hi + 1 < s.len() && ok(&s[hi + 1]) {
        hi += 1;
    }
    (s[lo].r, s[hi].r)
}

fn fixed_step<F: FnMut(f64, f64, f64) -> f64>(
    mut step: F,
    r0: f64,
    psi0: f64,
    to: f64,
    h: f64,
    mut visit: impl FnMut(f64, f64),
) {
    let dir = if to >= r0 { 1.0 } else { -1.0 };
    let n = ((to - r0).abs() / h).ceil() as usize;
    let mut r = r0;
    let mut psi = psi0;
    visit(r, psi);
    for i in 0..n {
        let target = if i + 1 == n { to } else { r0 + dir * h * (i + 1) as f64 };
        psi = step(r, psi, target - r);
        r = target;
        visit(r, psi);
    }
}

/// Integrates the seed with the adaptive solver, fixed-step classical RK4
/// (`h = 1e-4`) and explicit Euler (`euler_step`), and reports the largest
/// `ψ` deviations on `window` (by default the clipped window of the
/// adaptive trace, see [`clipped_window`]).
pub fn self_convergence(
    p: &SolitonParams,
    seed: PhasePoint,
    cfg: &IntegratorConfig,
    window: Option<(f64, f64)>,
    euler_step: f64,
) -> Result<ConvergenceReport> {
    let mut fine_cfg = *cfg;
    fine_cfg.full_resolution = true;
    let trace = maximal_trace(p, seed, &fine_cfg)?;
    let tighter = maximal_trace(p, seed, &fine_cfg.with_tol(cfg.tol / 100.0))?;
    let window = window.unwrap_or_else(|| clipped_window(&trace, CONVERGENCE_PSI_CLIP));
    if !(window.0 <= seed.r && seed.r <= window.1) {
        return Err(Error::Domain("window must contain the seed".into()));
    }
    let rk4_step = 1e-4;
    let mut report = ConvergenceReport {
        window,
        euler_step,
        rk4_step,
        adaptive_vs_euler: 0.0,
        rk4_vs_euler: 0.0,
        adaptive_vs_rk4: 0.0,
        adaptive_vs_tighter: 0.0,
    };
    if window.1 - window.0 <= 0.0 {
        return Ok(report);
    }

    let f = |r: f64, psi: f64| psi_rhs_unchecked(p, r, psi);
    let rk4 = |r: f64, psi: f64, h: f64| {
        let k1 = f(r, psi);
        let k2 = f(r + 0.5 * h, psi + 0.5 * h * k1);
        let k3 = f(r + 0.5 * h, psi + 0.5 * h * k2);
        let k4 = f(r + h, psi + h * k3);
        psi + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    };
    let euler = |r: f64, psi: f64, h: f64| psi + h * f(r, psi);

    let lookup = |t: &Trace, r: f64| t.psi_at(r).unwrap_or(f64::NAN);

    for to in [window.0, window.1] {
        let mut rk_pts = Vec::new();
        fixed_step(rk4, seed.r, seed.psi, to, rk4_step, |r, psi| rk_pts.push((r, psi)));
        for &(r, psi) in &rk_pts {
            report.adaptive_vs_rk4 = report.adaptive_vs_rk4.max((lookup(&trace, r) - psi).abs());
            report.adaptive_vs_tighter = report
                .adaptive_vs_tighter
                .max((lookup(&trace, r) - lookup(&tighter, r)).abs());
        }
        // RK4 values between its nodes come from linear interpolation, which
        // is far below the Euler error at these step sizes.
        let mut j = 0usize;
        fixed_step(euler, seed.r, seed.psi, to, euler_step, |r, psi| {
            report.adaptive_vs_euler = report.adaptive_vs_euler.max((lookup(&trace, r) - psi).abs());
            let dist = |x: f64| (x - seed.r).abs();
            while j + 2 < rk_pts.len() && dist(rk_pts[j + 1].0) < dist(r) {
                j += 1;
            }
            if rk_pts.len() >= 2 {
                let (ra, pa) = rk_pts[j];
                let (rb, pb) = rk_pts[j + 1];
                let t = if rb != ra { (r - ra) / (rb - ra) } else { 0.0 };
                let lin = pa + t * (pb - pa);
                report.rk4_vs_euler = report.rk4_vs_euler.max((lin - psi).abs());
            }
        });
    }
    Ok(report)
}
