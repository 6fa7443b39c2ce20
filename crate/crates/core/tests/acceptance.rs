//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.
//!
//! Reference values are computed here from first principles (closed forms
//! re-derived by partial fractions, an independent bisection, explicit Euler)
//! rather than by calling the library's own helpers.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use isosoliton::classifier::{endpoint_seeds, seed_grid, sweep, TypeIndex, DEFAULT_CROSSING_TOL};
use isosoliton::integrator::{
    endpoint_vprime_extrapolated, integrate_from, maximal_trace, self_convergence, Direction, EventKind,
    IntegratorConfig,
};
use isosoliton::phase::{psi_rhs, sign_region, vprime_rhs, SignVerdict};
use isosoliton::verify::{
    self, general_ode_residual_at, grim_reaper, isoparametric_identities, Ambient, GraphSample,
    IsoparametricFn,
};
use isosoliton::{PhasePoint, SolitonParams};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn params(k: u32, n: u32, m1: u32, m2: u32) -> SolitonParams {
    SolitonParams::new(k, n, m1, m2).expect("valid params")
}

// R from the multiplicities, written out independently of the catalog.
fn oracle_r(k: u32, n: u32, m2: u32) -> f64 {
    match k {
        2 | 4 => -1.0 + f64::from(k * m2) / f64::from(n - 1),
        _ => 0.0,
    }
}

fn oracle_bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let fm = f(m);
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

// ∫ 2(s - R)/(1 - s²) ds = -(1 - R) ln(1 - s) - (1 + R) ln(1 + s)
fn log_integral(rc: f64, s: f64) -> f64 {
    -(1.0 - rc) * (1.0 - s).ln() - (1.0 + rc) * (1.0 + s).ln()
}

/// 1/ψ² comparison to the right of a positive seed.
fn oracle_h1(k: f64, n: f64, rc: f64, r0: f64, psi0: f64, r: f64) -> f64 {
    1.0 / (psi0 * psi0) - (n - 1.0) / k * (log_integral(rc, r) - log_integral(rc, r0))
}

/// 1/ψ comparison to the left of a seed above η:
/// h(r) = 1/psi0 + ∫_r^{r0} [(n-1) psi0 (s - R)/(k(1 - s²)) + 1/(k √(1 - s²))] ds.
fn oracle_h3(k: f64, n: f64, rc: f64, r0: f64, psi0: f64, r: f64) -> f64 {
    let anti = |s: f64| (n - 1.0) * psi0 / (2.0 * k) * log_integral(rc, s) + s.asin() / k;
    1.0 / psi0 + anti(r0) - anti(r)
}

fn oracle_eta(n: f64, rc: f64, r: f64) -> f64 {
    -(1.0 - r * r).sqrt() / ((n - 1.0) * (r - rc))
}

fn criterion_1() -> Outcome {
    let cfg = IntegratorConfig::default();
    let eps = [1e-5, 1e-6, 1e-7];
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for (k, n, m1, m2) in [(1, 2, 1, 1), (1, 3, 2, 2), (2, 3, 1, 1), (2, 4, 2, 1), (2, 4, 1, 2), (3, 4, 1, 1)] {
        let p = params(k, n, m1, m2);
        let (kf, nf, rc) = (f64::from(k), f64::from(n), oracle_r(k, n, m2));
        for (which, want) in [
            (Direction::Left, 1.0 / (kf * (kf + (nf - 1.0) * (1.0 + rc)))),
            (Direction::Right, -1.0 / (kf * (kf + (nf - 1.0) * (1.0 - rc)))),
        ] {
            match endpoint_vprime_extrapolated(&p, which, &eps, &cfg) {
                Ok(est) => {
                    let err = (est.extrapolated - want).abs();
                    worst = worst.max(err);
                    if err > 1e-6 {
                        failures.push(format!("({k},{n},{m1},{m2}) {which:?}: {err:.2e}"));
                    }
                }
                Err(e) => failures.push(format!("({k},{n},{m1},{m2}) {which:?}: {e}")),
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("max |V'(+-1) - closed form| = {worst:.2e} (tol 1e-6) {}", failures.join("; ")),
    )
}

fn all_params() -> Vec<SolitonParams> {
    [(1, 2, 1, 1), (1, 3, 2, 2), (2, 3, 1, 1), (2, 4, 1, 2), (2, 4, 2, 1), (3, 4, 1, 1), (4, 9, 1, 3), (6, 13, 2, 2)]
        .into_iter()
        .map(|(k, n, a, b)| params(k, n, a, b))
        .collect()
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut violations = 0usize;
    let mut total = 0usize;
    for p in all_params() {
        let rc = p.r_const();
        for i in 0..10_000 {
            let r: f64 = rng.gen_range(-0.999..0.999);
            let psi: f64 = if i % 4 == 0 && (r - rc).abs() > 1e-6 {
                // concentrate a quarter of the points near the guide curve
                oracle_eta(p.nf(), rc, r) * (1.0 + rng.gen_range(-1e-3..1e-3))
            } else {
                rng.gen_range(-20.0..20.0)
            };
            let rhs = psi_rhs(&p, r, psi).unwrap();
            total += 1;
            let verdict = sign_region(&p, r, psi);
            let mismatch = match verdict {
                SignVerdict::Zero => false,
                SignVerdict::Positive => !(rhs > 0.0),
                SignVerdict::Negative => !(rhs < 0.0),
            };
            violations += usize::from(mismatch);
        }
    }
    outcome(violations == 0, format!("{violations} violations in {total} points (tie band 1e-9)"))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut chain, mut ode, mut ode_abs): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for p in all_params() {
        let k = p.kf();
        for _ in 0..10_000 {
            let r: f64 = rng.gen_range(-0.999..0.999);
            let vp: f64 = rng.gen_range(-5.0..5.0);
            let s = (1.0 - r * r).sqrt();
            let vpp = vprime_rhs(&p, r, vp).unwrap();
            // ψ = k √(1 - r²) V'  ⇒  ψ' = k (√(1 - r²) V'' - r V'/√(1 - r²))
            let from_v = k * (s * vpp - r * vp / s);
            let from_psi = psi_rhs(&p, r, k * s * vp).unwrap();
            chain = chain.max((from_v - from_psi).abs() / from_psi.abs().max(1.0));
            let res = general_ode_residual_at(&p, r, vp, vpp).unwrap();
            ode = ode.max(res.value.abs() / res.scale.max(1.0));
            ode_abs = ode_abs.max(res.value.abs());
        }
    }
    outcome(
        chain < 1e-10 && ode < 1e-10,
        format!(
            "chain rule {chain:.2e}, general ode {ode:.2e} (both relative to max(1, largest term); absolute ode {ode_abs:.2e}), tol 1e-10"
        ),
    )
}

#[derive(Clone, Copy, Debug)]
enum Case {
    RightPlus,
    LeftPlus,
    LeftMinus,
}

fn criterion_4() -> Outcome {
    let mut cfg = IntegratorConfig::default();
    cfg.full_resolution = true;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut failures = Vec::new();
    let mut worst_loc = f64::NEG_INFINITY;
    let mut checked = 0usize;
    for p in [params(1, 2, 1, 1), params(2, 3, 1, 1)] {
        let (k, n, rc) = (p.kf(), p.nf(), p.r_const());
        for case in [Case::RightPlus, Case::LeftPlus, Case::LeftMinus] {
            for _ in 0..100 {
                let (r0, psi0, dir) = match case {
                    Case::RightPlus => (rng.gen_range(rc + 0.01..0.95), rng.gen_range(0.01..5.0), Direction::Right),
                    Case::LeftPlus => {
                        let r0 = rng.gen_range(-0.95..rc - 0.01);
                        (r0, oracle_eta(n, rc, r0) + rng.gen_range(0.01..5.0), Direction::Left)
                    }
                    Case::LeftMinus => (rng.gen_range(-0.95..rc - 0.01), -rng.gen_range(0.01..5.0), Direction::Left),
                };
                // bound function h and the lower envelope |ψ| > env(h)
                let h = |r: f64| match case {
                    Case::RightPlus => oracle_h1(k, n, rc, r0, psi0, r),
                    Case::LeftPlus => oracle_h3(k, n, rc, r0, psi0, r),
                    Case::LeftMinus => oracle_h1(k, n, -rc, -r0, -psi0, -r),
                };
                let env = |hv: f64| match case {
                    Case::LeftPlus => 1.0 / hv,
                    _ => 1.0 / hv.sqrt(),
                };
                // When h stays positive up to the endpoint (in double
                // precision) the comparison gives no location bound.
                let edge = match case {
                    Case::RightPlus => 1.0 - 1e-15,
                    _ => -1.0 + 1e-15,
                };
                let bound = if h(edge) > 0.0 {
                    edge
                } else if edge > r0 {
                    oracle_bisect(h, r0, edge)
                } else {
                    oracle_bisect(h, edge, r0)
                };
                let want_kind = match case {
                    Case::LeftMinus => EventKind::BlowUpMinus,
                    _ => EventKind::BlowUpPlus,
                };
                let seed = PhasePoint::new(r0, psi0).unwrap();
                let half = match integrate_from(&p, seed, dir, &cfg) {
                    Ok(h) => h,
                    Err(e) => {
                        failures.push(format!("{case:?} ({r0}, {psi0}): {e}"));
                        continue;
                    }
                };
                checked += 1;
                let loc = half.event.location;
                let overshoot = match dir {
                    Direction::Right => loc - bound,
                    Direction::Left => bound - loc,
                };
                worst_loc = worst_loc.max(overshoot);
                if half.event.kind != want_kind || overshoot > 1e-6 {
                    failures.push(format!(
                        "{case:?} k={} ({r0:.4}, {psi0:.4}): {:?} at {loc} vs bound {bound}",
                        p.k, half.event.kind
                    ));
                    continue;
                }
                for &(r, psi) in &half.points[1..] {
                    let hv = h(r);
                    if hv > 0.0 && psi.abs() < env(hv) * (1.0 - 1e-9) {
                        failures.push(format!("{case:?} ({r0:.4}, {psi0:.4}): |psi({r})| = {} below {}", psi.abs(), env(hv)));
                        break;
                    }
                }
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{checked} seeds, max overshoot of bound {worst_loc:.2e} (tol 1e-6), {} failures {}",
            failures.len(),
            failures.iter().take(3).cloned().collect::<Vec<_>>().join("; ")
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut cfg = IntegratorConfig::default();
    cfg.full_resolution = true;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut failures = Vec::new();
    let mut checked = 0usize;
    for p in [params(1, 2, 1, 1), params(2, 3, 1, 1)] {
        let (n, rc) = (p.nf(), p.r_const());
        let weight = if p.k == 1 { 1.0 } else { 0.5 };
        for mirrored in [false, true] {
            for _ in 0..100 {
                // left of R with 0 < psi0 < η, or the mirror image right of R
                let r0 = rng.gen_range(-0.95..rc - 0.01);
                let psi0 = oracle_eta(n, rc, r0) * rng.gen_range(0.01..0.99);
                let (r0, psi0) = if mirrored { (-r0, -psi0) } else { (r0, psi0) };
                let seed = PhasePoint::new(r0, psi0).unwrap();
                let trace = match maximal_trace(&p, seed, &cfg) {
                    Ok(t) => t,
                    Err(e) => {
                        failures.push(format!("({r0}, {psi0}): {e}"));
                        continue;
                    }
                };
                checked += 1;
                // tan of the arctan comparison, mirrored on the right of R
                let cap = |r: f64| {
                    if mirrored {
                        -(weight * ((-r).asin() - (-r0).asin()) + (-psi0).atan()).tan()
                    } else {
                        (weight * (r.asin() - r0.asin()) + psi0.atan()).tan()
                    }
                };
                let (lo, hi) = if mirrored { (rc, r0) } else { (r0, rc) };
                let mut bad = None;
                for s in trace.samples.iter().filter(|s| s.r > lo && s.r < hi && s.r != r0) {
                    let c = cap(s.r);
                    let ok = if mirrored { s.psi > c - 1e-9 * c.abs() } else { s.psi < c + 1e-9 * c.abs() };
                    if !ok {
                        bad = Some(format!("psi({}) = {} vs {}", s.r, s.psi, c));
                        break;
                    }
                }
                let at_r = trace.psi_at(rc);
                let limit_ok = match at_r {
                    Some(v) if v.is_finite() => {
                        if mirrored {
                            v < psi0 && v > cap(rc) - 1e-9
                        } else {
                            v > psi0 && v < cap(rc) + 1e-9
                        }
                    }
                    _ => false,
                };
                if let Some(b) = bad {
                    failures.push(format!("k={} ({r0:.4}, {psi0:.4}): {b}", p.k));
                } else if !limit_ok {
                    failures.push(format!("k={} ({r0:.4}, {psi0:.4}): psi(R) = {at_r:?}", p.k));
                }
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{checked} seeds, {} failures {}",
            failures.len(),
            failures.iter().take(3).cloned().collect::<Vec<_>>().join("; ")
        ),
    )
}

fn taxonomy_sweeps(cfg: &IntegratorConfig) -> Vec<(SolitonParams, Vec<Option<Option<TypeIndex>>>, usize)> {
    [params(1, 2, 1, 1), params(2, 3, 1, 1)]
        .into_iter()
        .map(|p| {
            let mut seeds = seed_grid((-0.9, 0.9), (-5.0, 5.0), 21, 21).unwrap();
            seeds.extend(endpoint_seeds(&p, cfg.epsilon).unwrap());
            let rep = sweep(&p, &seeds, cfg, DEFAULT_CROSSING_TOL);
            let types = rep.entries.iter().map(|e| e.shape.as_ref().map(|s| s.index)).collect();
            (p, types, rep.errors)
        })
        .collect()
}

fn criterion_6() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for (p, types, errors) in taxonomy_sweeps(&IntegratorConfig::default()) {
        let mut counts = [0usize; 8];
        for t in types.iter().flatten() {
            counts[t.map_or(7, |i| i as usize)] += 1;
        }
        let all_seven = counts[..7].iter().all(|c| *c > 0);
        pass &= all_seven && counts[7] == 0 && errors == 0;
        detail.push(format!(
            "k={} n={}: I..VII = {:?}, unlisted {}, errors {errors}",
            p.k,
            p.n,
            &counts[..7],
            counts[7]
        ));
    }
    outcome(pass, detail.join("; "))
}

fn criterion_7() -> Outcome {
    let p = params(1, 2, 1, 1);
    let cfg = IntegratorConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut shortest = f64::INFINITY;
    let mut failures = Vec::new();
    for _ in 0..10 {
        let seed = PhasePoint::new(rng.gen_range(-0.6..0.6), rng.gen_range(-1.5..1.5)).unwrap();
        match self_convergence(&p, seed, &cfg, None, 1e-6) {
            Ok(rep) => {
                worst = worst.max(rep.adaptive_vs_euler);
                shortest = shortest.min(rep.window.1 - rep.window.0);
                if !(rep.adaptive_vs_euler < 1e-4) || rep.window.1 - rep.window.0 < 0.2 {
                    failures.push(format!("({:.3}, {:.3}): {:.2e} on {:?}", seed.r, seed.psi, rep.adaptive_vs_euler, rep.window));
                }
            }
            Err(e) => failures.push(e.to_string()),
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "max |psi_adaptive - psi_euler| = {worst:.2e} over 10 seeds, windows |psi| <= 2, |r| <= 0.9 of length >= {shortest:.3} (tol 1e-4) {}",
            failures.join("; ")
        ),
    )
}

fn criterion_8() -> Outcome {
    let sample = GraphSample {
        ambient: Ambient::Euclidean(2),
        points: verify::grim_reaper_points(1000, 1.2, 8),
        u: &grim_reaper,
        fd_step: verify::DEFAULT_FD_STEP,
    };
    let grim = verify::soliton_residual(&sample, false).map(|r| r.max_dev);
    let p = params(1, 2, 1, 1);
    let cfg = IntegratorConfig::default();
    let sphere = (|| {
        let seed = isosoliton::endpoint_seed(&p, Direction::Left, cfg.epsilon)?;
        let trace = maximal_trace(&p, seed, &cfg)?;
        if trace.left_event.kind != EventKind::RegularEndpoint || trace.right_event.kind != EventKind::BlowUpPlus {
            return Err(isosoliton::Error::IncompleteTrace("not an endpoint solution".into()));
        }
        let band = (-0.95, trace.right_event.location - 0.1);
        verify::sphere_trace_residual(&trace, band, 1000, verify::DEFAULT_FD_STEP, 8).map(|r| r.max_dev)
    })();
    match (grim, sphere) {
        (Ok(g), Ok(s)) => outcome(
            g < 1e-6 && s < 1e-3,
            format!("grim reaper {g:.2e} (tol 1e-6), sphere endpoint solution {s:.2e} (tol 1e-3)"),
        ),
        (g, s) => outcome(false, format!("{g:?} {s:?}")),
    }
}

fn criterion_9() -> Outcome {
    let mut pass = true;
    let mut worst = (0.0f64, 0.0f64);
    for f in [
        IsoparametricFn::k1(2).unwrap(),
        IsoparametricFn::k1(3).unwrap(),
        IsoparametricFn::k2(3, 1).unwrap(),
        IsoparametricFn::k2(3, 2).unwrap(),
        IsoparametricFn::k2(5, 3).unwrap(),
    ] {
        let r = isoparametric_identities(&f, 1000, 9).unwrap();
        let fd = r.gradient_fd.max(r.laplacian_fd);
        let amb = r.gradient_ambient.max(r.laplacian_ambient);
        worst = (worst.0.max(fd), worst.1.max(amb));
        pass &= fd < 1e-8 && amb < 1e-12;
    }
    outcome(pass, format!("finite differences {:.2e} (tol 1e-8), ambient algebra {:.2e} (tol 1e-12)", worst.0, worst.1))
}

fn criterion_10() -> Outcome {
    let cfg = IntegratorConfig::default();
    let a = taxonomy_sweeps(&cfg);
    let b = taxonomy_sweeps(&cfg.with_tol(cfg.tol / 2.0));
    let mut changed = 0;
    let mut total = 0;
    for ((_, ta, _), (_, tb, _)) in a.iter().zip(&b) {
        total += ta.len();
        changed += ta.iter().zip(tb).filter(|(x, y)| x != y).count();
    }
    outcome(changed == 0, format!("{changed} of {total} seeds change type when tol is halved"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("endpoint derivative law", criterion_1),
        ("sign trichotomy", criterion_2),
        ("algebraic equivalence", criterion_3),
        ("blow-up bounds", criterion_4),
        ("bounded-limit bound", criterion_5),
        ("taxonomy coverage", criterion_6),
        ("oracle equivalence", criterion_7),
        ("pde ground truth", criterion_8),
        ("isoparametric identities", criterion_9),
        ("classification stability", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {status} {name} ({:.2} s): {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
