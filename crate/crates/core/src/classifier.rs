//! Shape classification of maximal solutions and the induced domains.
//!
//! A trace is reduced to the tuple (left event, right event, zero crossing)
//! and looked up in a seven-row table. Types I, II and III share the same
//! events and differ only in where `ψ` crosses zero relative to `R`; that
//! split uses a tolerance (default `1e-3`) and is a heuristic reading of the
//! graphs, reported as such in [`ShapeType::note`].

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::SolitonParams;
use crate::error::{Error, Result};
use crate::integrator::{endpoint_seed, maximal_trace, Direction, EventKind, IntegratorConfig, Trace};
use crate::phase::PhasePoint;

/// Default tolerance for comparing the zero crossing with `R`.
pub const DEFAULT_CROSSING_TOL: f64 = 1e-3;

const CROSSING_NOTE: &str =
    "types I/II/III are separated by the zero crossing of psi relative to R (within tol)";

/// Index of one of the seven listed shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TypeIndex {
    I,
    II,
    III,
    IV,
    V,
    VI,
    VII,
}

impl TypeIndex {
    pub const ALL: [TypeIndex; 7] = [
        TypeIndex::I,
        TypeIndex::II,
        TypeIndex::III,
        TypeIndex::IV,
        TypeIndex::V,
        TypeIndex::VI,
        TypeIndex::VII,
    ];

    pub fn roman(self) -> &'static str {
        match self {
            TypeIndex::I => "I",
            TypeIndex::II => "II",
            TypeIndex::III => "III",
            TypeIndex::IV => "IV",
            TypeIndex::V => "V",
            TypeIndex::VI => "VI",
            TypeIndex::VII => "VII",
        }
    }

    pub fn parse(s: &str) -> Option<TypeIndex> {
        let s = s.trim_end_matches('\'');
        TypeIndex::ALL.into_iter().find(|t| t.roman().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for TypeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.roman())
    }
}

/// Which function a label refers to: `ψ` (two primes), `V'` (one) or `V`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Psi,
    VPrime,
    V,
}

/// Label of a (possibly unlisted) type at a given level, e.g. `IV''`.
pub fn label(index: Option<TypeIndex>, level: Level) -> String {
    match index {
        None => "Unlisted".to_string(),
        Some(t) => {
            let primes = match level {
                Level::Psi => "''",
                Level::VPrime => "'",
                Level::V => "",
            };
            format!("{t}{primes}")
        }
    }
}

/// Index-preserving map from the `ψ` type to the `V'` and `V` types.
pub fn type_correspondence(psi_type: Option<TypeIndex>) -> (Option<TypeIndex>, Option<TypeIndex>) {
    (psi_type, psi_type)
}

/// Labels of a shape at all three levels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeLabels {
    pub psi: String,
    pub vprime: String,
    pub v: String,
}

impl TypeLabels {
    pub fn of(index: Option<TypeIndex>) -> Self {
        let (vp, v) = type_correspondence(index);
        Self {
            psi: label(index, Level::Psi),
            vprime: label(vp, Level::VPrime),
            v: label(v, Level::V),
        }
    }
}

/// Features read off a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub left: EventKind,
    pub right: EventKind,
    pub left_location: f64,
    pub right_location: f64,
    pub zero_crossings: usize,
    pub crossing: Option<f64>,
    pub psi_min: f64,
    pub psi_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeType {
    pub index: Option<TypeIndex>,
    #[serde(rename = "type")]
    pub labels: TypeLabels,
    pub zero_crossing: Option<f64>,
    pub evidence: Evidence,
    pub tol: f64,
    pub note: Option<String>,
}

impl ShapeType {
    pub fn is_unlisted(&self) -> bool {
        self.index.is_none()
    }
}

/// Assigns one of the seven types, or `None` (unlisted), to a complete trace.
pub fn classify(trace: &Trace, tol: f64) -> Result<ShapeType> {
    if !trace.is_complete() {
        return Err(Error::IncompleteTrace(format!(
            "left {:?}, right {:?}",
            trace.left_event.kind, trace.right_event.kind
        )));
    }
    if !(tol >= 0.0) {
        return Err(Error::Domain(format!("tolerance must be non-negative, got {tol}")));
    }
    let zeros: Vec<f64> = trace.zero_crossings().map(|c| c.r).collect();
    let crossing = if zeros.len() == 1 { Some(zeros[0]) } else { None };
    let (psi_min, psi_max) = trace.psi_range();
    let evidence = Evidence {
        left: trace.left_event.kind,
        right: trace.right_event.kind,
        left_location: trace.left_event.location,
        right_location: trace.right_event.location,
        zero_crossings: zeros.len(),
        crossing,
        psi_min,
        psi_max,
    };
    let rc = trace.params.r_const();

    use EventKind::*;
    let index = if zeros.len() > 1 {
        None
    } else {
        match (evidence.left, evidence.right, crossing) {
            (BlowUpMinus, BlowUpPlus, Some(z)) => Some(if (z - rc).abs() <= tol {
                TypeIndex::I
            } else if z < rc {
                TypeIndex::II
            } else {
                TypeIndex::III
            }),
            (BlowUpPlus, BlowUpPlus, None) if psi_min > 0.0 => Some(TypeIndex::IV),
            (BlowUpMinus, BlowUpMinus, None) if psi_max < 0.0 => Some(TypeIndex::V),
            (RegularEndpoint, BlowUpPlus, _) => Some(TypeIndex::VI),
            (BlowUpMinus, RegularEndpoint, _) => Some(TypeIndex::VII),
            _ => None,
        }
    };
    let note = match index {
        Some(TypeIndex::I | TypeIndex::II | TypeIndex::III) => Some(CROSSING_NOTE.to_string()),
        None if evidence.left == RegularEndpoint && evidence.right == RegularEndpoint => {
            Some("regular at both endpoints".to_string())
        }
        None => Some("feature tuple outside the seven-type table".to_string()),
        _ => None,
    };
    Ok(ShapeType {
        index,
        labels: TypeLabels::of(index),
        zero_crossing: crossing,
        evidence,
        tol,
        note,
    })
}

/// Shape of the domain `M` of the induced function on the sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainDescription {
    /// `k = 1`: which poles `p = e_{n+1}` (`r = 1`) and `q = -e_{n+1}`
    /// (`r = -1`) lie in `M`.
    Poles { p_in_m: bool, q_in_m: bool },
    /// `k = 2`: `M` is the union of the tori `S_θ` with `θ` in this interval,
    /// where `cos θ_t = √((1 + t)/2)`.
    ThetaInterval {
        lo: f64,
        hi: f64,
        lo_closed: bool,
        hi_closed: bool,
    },
    /// `k = 3`: qualitative statement.
    Weyl {
        statement: String,
        meets_chamber_boundary: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainReport {
    pub k: u32,
    #[serde(rename = "type")]
    pub labels: TypeLabels,
    /// Range of `r` over `M`.
    pub r_interval: (f64, f64),
    pub contains_focal_minus: bool,
    pub contains_focal_plus: bool,
    pub description: DomainDescription,
}

/// `θ_t = arccos √((1 + t)/2) ∈ [0, π/2]`.
pub fn theta_of(t: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("t = {t} outside [-1, 1]")));
    }
    Ok(((1.0 + t) / 2.0).sqrt().min(1.0).acos())
}

/// Describes the domain of the sphere function induced by a classified trace.
pub fn domain_report(p: &SolitonParams, shape: &ShapeType) -> Result<DomainReport> {
    if !matches!(p.k, 1..=3) {
        return Err(Error::UnsupportedK(p.k));
    }
    let ev = &shape.evidence;
    let minus = ev.left == EventKind::RegularEndpoint;
    let plus = ev.right == EventKind::RegularEndpoint;
    let lo = if minus { -1.0 } else { ev.left_location };
    let hi = if plus { 1.0 } else { ev.right_location };

    let description = match p.k {
        1 => DomainDescription::Poles {
            p_in_m: plus,
            q_in_m: minus,
        },
        2 => {
            // θ decreases in r, so the r-interval flips.
            DomainDescription::ThetaInterval {
                lo: theta_of(hi)?,
                hi: theta_of(lo)?,
                lo_closed: plus,
                hi_closed: minus,
            }
        }
        _ => {
            let boundary = minus || plus;
            let statement = if boundary {
                "M = K.U for an open U in the closed Weyl chamber meeting its boundary"
            } else {
                "M = K.U for an open U inside the open Weyl chamber"
            };
            DomainDescription::Weyl {
                statement: statement.to_string(),
                meets_chamber_boundary: boundary,
            }
        }
    };
    Ok(DomainReport {
        k: p.k,
        labels: shape.labels.clone(),
        r_interval: (lo, hi),
        contains_focal_minus: minus,
        contains_focal_plus: plus,
        description,
    })
}

/// Evenly spaced seeds on `[r0, r1] × [psi0, psi1]`, row-major in `r`.
pub fn seed_grid(r: (f64, f64), psi: (f64, f64), nr: usize, npsi: usize) -> Result<Vec<PhasePoint>> {
    let lin = |a: f64, b: f64, n: usize, i: usize| {
        if n == 1 {
            0.5 * (a + b)
        } else {
            a + (b - a) * i as f64 / (n - 1) as f64
        }
    };
    let mut out = Vec::with_capacity(nr * npsi);
    for i in 0..nr {
        for j in 0..npsi {
            out.push(PhasePoint::new(lin(r.0, r.1, nr, i), lin(psi.0, psi.1, npsi, j))?);
        }
    }
    Ok(out)
}

/// The two endpoint shooting seeds.
pub fn endpoint_seeds(p: &SolitonParams, epsilon: f64) -> Result<Vec<PhasePoint>> {
    Ok(vec![
        endpoint_seed(p, Direction::Left, epsilon)?,
        endpoint_seed(p, Direction::Right, epsilon)?,
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub seed: PhasePoint,
    pub shape: Option<ShapeType>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub params: SolitonParams,
    pub entries: Vec<SweepEntry>,
    /// Counts in the order I..VII, then Unlisted.
    pub histogram: Vec<(String, usize)>,
    pub unlisted: usize,
    pub errors: usize,
    pub note: String,
}

impl SweepReport {
    pub fn count(&self, t: Option<TypeIndex>) -> usize {
        let key = label(t, Level::V);
        self.histogram.iter().find(|(k, _)| *k == key).map_or(0, |x| x.1)
    }

    pub fn types_present(&self) -> Vec<TypeIndex> {
        TypeIndex::ALL.into_iter().filter(|t| self.count(Some(*t)) > 0).collect()
    }
}

/// Classifies every seed's maximal trace. Seeds are processed in parallel and
/// the result keeps the input order; per-seed failures are recorded.
pub fn sweep(p: &SolitonParams, seeds: &[PhasePoint], cfg: &IntegratorConfig, tol: f64) -> SweepReport {
    let entries: Vec<SweepEntry> = seeds
        .par_iter()
        .map(|&seed| match maximal_trace(p, seed, cfg).and_then(|t| classify(&t, tol)) {
            Ok(shape) => SweepEntry {
                seed,
                shape: Some(shape),
                error: None,
            },
            Err(e) => SweepEntry {
                seed,
                shape: None,
                error: Some(e.to_string()),
            },
        })
        .collect();

    let mut counts = [0usize; 8];
    let mut errors = 0;
    for e in &entries {
        match &e.shape {
            Some(s) => counts[s.index.map_or(7, |t| t as usize)] += 1,
            None => errors += 1,
        }
    }
    let mut histogram: Vec<(String, usize)> = TypeIndex::ALL
        .iter()
        .map(|t| (t.roman().to_string(), counts[*t as usize]))
        .collect();
    histogram.push(("Unlisted".to_string(), counts[7]));
    SweepReport {
        params: *p,
        entries,
        histogram,
        unlisted: counts[7],
        errors,
        note: CROSSING_NOTE.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::eta;

    fn p12() -> SolitonParams {
        SolitonParams::new(1, 2, 1, 1).unwrap()
    }

    fn shape_of(p: &SolitonParams, seed: PhasePoint) -> ShapeType {
        let t = maximal_trace(p, seed, &IntegratorConfig::default()).unwrap();
        classify(&t, DEFAULT_CROSSING_TOL).unwrap()
    }

    #[test]
    fn labels_and_correspondence() {
        assert_eq!(label(Some(TypeIndex::IV), Level::Psi), "IV''");
        let l = TypeLabels::of(Some(TypeIndex::I));
        assert_eq!((l.psi.as_str(), l.vprime.as_str(), l.v.as_str()), ("I''", "I'", "I"));
        assert_eq!(type_correspondence(Some(TypeIndex::VII)), (Some(TypeIndex::VII), Some(TypeIndex::VII)));
        assert_eq!(type_correspondence(None), (None, None));
        assert_eq!(TypeLabels::of(None).v, "Unlisted");
        assert_eq!(TypeIndex::parse("VII''"), Some(TypeIndex::VII));
        assert_eq!(TypeIndex::parse("viii"), None);
    }

    #[test]
    fn endpoint_seeds_give_six_and_seven() {
        let p = p12();
        let s = shape_of(&p, endpoint_seed(&p, Direction::Left, 1e-6).unwrap());
        assert_eq!(s.index, Some(TypeIndex::VI));
        assert!(s.evidence.psi_min >= 0.0);
        let s = shape_of(&p, endpoint_seed(&p, Direction::Right, 1e-6).unwrap());
        assert_eq!(s.index, Some(TypeIndex::VII));
    }

    #[test]
    fn crossing_position_splits_one_two_three() {
        let p = p12();
        assert_eq!(shape_of(&p, PhasePoint::new(0.0, 0.0).unwrap()).index, Some(TypeIndex::I));
        assert_eq!(shape_of(&p, PhasePoint::new(-0.3, 0.0).unwrap()).index, Some(TypeIndex::II));
        assert_eq!(shape_of(&p, PhasePoint::new(0.3, 0.0).unwrap()).index, Some(TypeIndex::III));
    }

    #[test]
    fn positive_and_negative_types() {
        let p = p12();
        assert!(3.0 > eta(&p, -0.5).unwrap().finite().unwrap());
        let s = shape_of(&p, PhasePoint::new(-0.5, 3.0).unwrap());
        assert_eq!(s.index, Some(TypeIndex::IV));
        assert!(s.evidence.psi_min > 0.0);
        let s = shape_of(&p, PhasePoint::new(0.5, -3.0).unwrap());
        assert_eq!(s.index, Some(TypeIndex::V));
        assert!(s.evidence.psi_max < 0.0);
    }

    #[test]
    fn incomplete_trace_is_an_error() {
        let p = p12();
        let cfg = IntegratorConfig { max_steps: 3, ..Default::default() };
        let t = maximal_trace(&p, PhasePoint::new(0.0, 0.1).unwrap(), &cfg).unwrap();
        assert!(matches!(classify(&t, 1e-3), Err(Error::IncompleteTrace(_))));
    }

    #[test]
    fn domain_reports() {
        let p = p12();
        let vi = shape_of(&p, endpoint_seed(&p, Direction::Left, 1e-6).unwrap());
        let d = domain_report(&p, &vi).unwrap();
        assert_eq!(d.description, DomainDescription::Poles { p_in_m: false, q_in_m: true });
        assert!(d.contains_focal_minus && !d.contains_focal_plus);

        let q = SolitonParams::new(2, 3, 1, 1).unwrap();
        let vii = shape_of(&q, endpoint_seed(&q, Direction::Right, 1e-6).unwrap());
        let d = domain_report(&q, &vii).unwrap();
        match d.description {
            DomainDescription::ThetaInterval { lo, hi, lo_closed, hi_closed } => {
                assert_eq!(lo, 0.0);
                assert!(lo_closed && !hi_closed);
                let a = vii.evidence.left_location;
                assert!((hi - theta_of(a).unwrap()).abs() < 1e-15);
                assert!((hi.cos().powi(2) - hi.sin().powi(2) - a).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        assert!((theta_of(0.0).unwrap() - std::f64::consts::FRAC_PI_4).abs() < 1e-15);

        let r = SolitonParams::new(4, 9, 1, 3).unwrap();
        assert!(matches!(domain_report(&r, &vi), Err(Error::UnsupportedK(4))));
    }

    #[test]
    fn sweep_keeps_order_and_handles_empty() {
        let p = p12();
        let empty = sweep(&p, &[], &IntegratorConfig::default(), 1e-3);
        assert!(empty.entries.is_empty());
        assert_eq!(empty.histogram.len(), 8);
        let seeds = seed_grid((-0.5, 0.5), (-1.0, 1.0), 3, 3).unwrap();
        let rep = sweep(&p, &seeds, &IntegratorConfig::default(), 1e-3);
        for (e, s) in rep.entries.iter().zip(&seeds) {
            assert_eq!(e.seed, *s);
        }
        assert_eq!(rep.histogram.iter().map(|x| x.1).sum::<usize>() + rep.errors, 9);
    }
}
