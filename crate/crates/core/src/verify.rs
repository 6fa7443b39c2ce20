//! Finite difference checks that tie the ODE back to the geometry.
//!
//! A graph `u` over a domain is a translator exactly when
//!
//! ```text
//! Δu - Hess u(∇u, ∇u) / (1 + |∇u|²) = 1,
//! ```
//!
//! which is `√(1 + |∇u|²) div(∇u / √(1 + |∇u|²)) = 1` expanded.
//!
//! On `S^n ⊂ R^{n+1}` the intrinsic quantities are taken from an ambient
//! extension `F` of `u` by projecting onto the tangent space `x^⊥`:
//!
//! ```text
//! ∇u            = P DF,                 P = I - x xᵀ
//! Hess u(X, X)  = D²F(X, X) - |X|² ⟨x, DF⟩
//! Δu            = Δ_R F - D²F(x, x) - n ⟨x, DF⟩
//! ```
//!
//! The correction terms come from the second fundamental form of the unit
//! sphere. For the degree zero extension `F(y) = u(y/|y|)` they vanish, but
//! they are kept so that any extension can be used.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::SolitonParams;
use crate::error::{Error, Result};
use crate::integrator::Trace;
use crate::phase::vprime_rhs;

/// Default finite difference step for the soliton residual.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// Where sample points live. The integer is the dimension `n` of the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ambient {
    /// Points in `R^n`.
    Euclidean(usize),
    /// Unit vectors in `R^{n+1}`.
    Sphere(usize),
}

impl Ambient {
    fn coords(self) -> usize {
        match self {
            Ambient::Euclidean(n) => n,
            Ambient::Sphere(n) => n + 1,
        }
    }
}

/// Scalar function on the ambient coordinates.
pub type ScalarFn<'a> = &'a (dyn Fn(&[f64]) -> f64 + Sync);

/// A function sampled at a set of points for the residual check.
pub struct GraphSample<'a> {
    pub ambient: Ambient,
    pub points: Vec<Vec<f64>>,
    pub u: ScalarFn<'a>,
    pub fd_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub count: usize,
    /// max |residual - 1|
    pub max_dev: f64,
    /// mean |residual - 1|
    pub mean_dev: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_point: Option<Vec<f64>>,
}

impl ResidualStats {
    fn from_values(values: Vec<f64>, target: f64, keep: bool) -> Self {
        let devs: Vec<f64> = values.iter().map(|v| (v - target).abs()).collect();
        let count = devs.len();
        let max_dev = devs.iter().copied().fold(0.0, f64::max);
        let mean_dev = if count == 0 { 0.0 } else { devs.iter().sum::<f64>() / count as f64 };
        Self {
            count,
            max_dev,
            mean_dev,
            per_point: keep.then_some(values),
        }
    }
}

// Central differences of second order: (gradient, Hessian) of f at x.
fn derivatives2(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let d = x.len();
    let mut y = x.to_vec();
    let eval = |y: &[f64]| -> Result<f64> {
        let v = f(y);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!(
                "non-finite value near {x:?}: point too close to the singular set"
            )))
        }
    };
    let f0 = eval(&y)?;
    let mut g = vec![0.0; d];
    let mut hess = vec![vec![0.0; d]; d];
    for i in 0..d {
        y[i] = x[i] + h;
        let fp = eval(&y)?;
        y[i] = x[i] - h;
        let fm = eval(&y)?;
        y[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
        hess[i][i] = (fp - 2.0 * f0 + fm) / (h * h);
        for j in 0..i {
            let mut corner = |si: f64, sj: f64| -> Result<f64> {
                y[i] = x[i] + si * h;
                y[j] = x[j] + sj * h;
                let v = eval(&y);
                y[i] = x[i];
                y[j] = x[j];
                v
            };
            let v = (corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)? + corner(-1.0, -1.0)?)
                / (4.0 * h * h);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    Ok((g, hess))
}

// Fourth order central differences.
fn derivatives4(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = x.len();
    let mut y = x.to_vec();
    let f0 = f(x);
    let mut g = vec![0.0; d];
    let mut hess = vec![vec![0.0; d]; d];
    let at = |y: &mut Vec<f64>, i: usize, a: f64, j: usize, b: f64| {
        y[i] += a * h;
        y[j] += b * h;
        let v = f(y);
        y[i] = x[i];
        y[j] = x[j];
        v
    };
    for i in 0..d {
        let p1 = at(&mut y, i, 1.0, i, 0.0);
        let m1 = at(&mut y, i, -1.0, i, 0.0);
        let p2 = at(&mut y, i, 2.0, i, 0.0);
        let m2 = at(&mut y, i, -2.0, i, 0.0);
        g[i] = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h);
        hess[i][i] = (-p2 + 16.0 * p1 - 30.0 * f0 + 16.0 * m1 - m2) / (12.0 * h * h);
        for j in 0..i {
            let mut cross = |s: f64| {
                at(&mut y, i, s, j, s) - at(&mut y, i, s, j, -s) - at(&mut y, i, -s, j, s)
                    + at(&mut y, i, -s, j, -s)
            };
            let c1 = cross(1.0);
            let c2 = cross(2.0);
            let v = (16.0 * c1 - c2) / (48.0 * h * h);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    (g, hess)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn quad(h: &[Vec<f64>], a: &[f64], b: &[f64]) -> f64 {
    h.iter().zip(a).map(|(row, ai)| ai * dot(row, b)).sum()
}

/// Intrinsic gradient, Hessian quadratic form on the gradient and Laplacian
/// on the unit sphere from ambient derivatives at `x`.
fn sphere_terms(x: &[f64], g: &[f64], hess: &[Vec<f64>]) -> (Vec<f64>, f64, f64) {
    let n = (x.len() - 1) as f64;
    let radial = dot(x, g);
    let grad: Vec<f64> = g.iter().zip(x).map(|(gi, xi)| gi - radial * xi).collect();
    let g2 = dot(&grad, &grad);
    let trace: f64 = (0..x.len()).map(|i| hess[i][i]).sum();
    let lap = trace - quad(hess, x, x) - n * radial;
    let hgg = quad(hess, &grad, &grad) - g2 * radial;
    (grad, hgg, lap)
}

fn residual_at(ambient: Ambient, u: ScalarFn, x: &[f64], h: f64) -> Result<f64> {
    match ambient {
        Ambient::Euclidean(_) => {
            let (g, hess) = derivatives2(u, x, h)?;
            let g2 = dot(&g, &g);
            let lap: f64 = (0..x.len()).map(|i| hess[i][i]).sum();
            Ok(lap - quad(&hess, &g, &g) / (1.0 + g2))
        }
        Ambient::Sphere(_) => {
            let ext = |y: &[f64]| {
                let norm = dot(y, y).sqrt();
                let z: Vec<f64> = y.iter().map(|v| v / norm).collect();
                u(&z)
            };
            let (g, hess) = derivatives2(&ext, x, h)?;
            let (grad, hgg, lap) = sphere_terms(x, &g, &hess);
            Ok(lap - hgg / (1.0 + dot(&grad, &grad)))
        }
    }
}

/// Evaluates the translator operator by central differences at every point
/// and compares it with `1`.
pub fn soliton_residual(sample: &GraphSample, keep_points: bool) -> Result<ResidualStats> {
    if !(sample.fd_step > 0.0 && sample.fd_step.is_finite()) {
        return Err(Error::Domain(format!("fd_step must be positive, got {}", sample.fd_step)));
    }
    let d = sample.ambient.coords();
    for x in &sample.points {
        if x.len() != d {
            return Err(Error::Domain(format!("point {x:?} does not have {d} coordinates")));
        }
        if let Ambient::Sphere(_) = sample.ambient {
            if (dot(x, x).sqrt() - 1.0).abs() > 1e-12 {
                return Err(Error::Domain(format!("point {x:?} is not a unit vector")));
            }
        }
    }
    let values: Vec<f64> = sample
        .points
        .par_iter()
        .map(|x| residual_at(sample.ambient, sample.u, x, sample.fd_step))
        .collect::<Result<_>>()?;
    Ok(ResidualStats::from_values(values, 1.0, keep_points))
}

/// The grim reaper `u = -log cos x_2` on `R²`.
pub fn grim_reaper(x: &[f64]) -> f64 {
    -x[1].cos().ln()
}

/// Seeded sample of points `(x_1, x_2) ∈ [-2, 2] × (-w, w)` for the grim
/// reaper.
pub fn grim_reaper_points(count: usize, width: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| vec![rng.gen_range(-2.0..2.0), rng.gen_range(-width..width)])
        .collect()
}

/// Seeded unit vectors in `R^{n+1}` with last coordinate uniform in `band`.
pub fn band_points(n: usize, band: (f64, f64), count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let t: f64 = rng.gen_range(band.0..band.1);
            let mut dir: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let norm = dot(&dir, &dir).sqrt();
            let s = (1.0 - t * t).sqrt();
            for v in &mut dir {
                *v *= s / norm;
            }
            dir.push(t);
            let norm = dot(&dir, &dir).sqrt();
            dir.iter().map(|v| v / norm).collect()
        })
        .collect()
}

/// Residual of the sphere graph `u = V(x_{n+1})` built from a `k = 1` trace,
/// at points whose last coordinate lies in `band`.
pub fn sphere_trace_residual(
    trace: &Trace,
    band: (f64, f64),
    count: usize,
    fd_step: f64,
    seed: u64,
) -> Result<ResidualStats> {
    let p = &trace.params;
    if p.k != 1 {
        return Err(Error::UnsupportedK(p.k));
    }
    let (lo, hi) = trace.r_span();
    let margin = 3.0 * fd_step;
    if !(band.0 < band.1 && band.0 - margin >= lo && band.1 + margin <= hi) {
        return Err(Error::Domain(format!(
            "band {band:?} must lie inside the trace span ({lo}, {hi}) with margin {margin}"
        )));
    }
    let n = p.n as usize;
    let u = |x: &[f64]| trace.v_at(x[n]).unwrap_or(f64::NAN);
    let sample = GraphSample {
        ambient: Ambient::Sphere(n),
        points: band_points(n, band, count, seed),
        u: &u,
        fd_step,
    };
    soliton_residual(&sample, false)
}

/// Residual of `2αV'' - α(α' - 2β)V'³ - 2αV'² + 2βV' - 2` and the size of
/// its largest term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeResidual {
    pub value: f64,
    pub scale: f64,
}

/// The general isoparametric soliton ODE evaluated at `(r, V', V'')`.
pub fn general_ode_residual_at(p: &SolitonParams, r: f64, vp: f64, vpp: f64) -> Result<OdeResidual> {
    let a = p.alpha(r)?;
    let ap = p.alpha_prime(r)?;
    let b = p.beta(r)?;
    let terms = [
        2.0 * a * vpp,
        -a * (ap - 2.0 * b) * vp.powi(3),
        -2.0 * a * vp * vp,
        2.0 * b * vp,
        -2.0,
    ];
    Ok(OdeResidual {
        value: terms.iter().sum(),
        scale: terms.iter().map(|t| t.abs()).fold(0.0, f64::max),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeResidualStats {
    pub count: usize,
    pub max_abs: f64,
    /// max |residual| / largest term
    pub max_rel: f64,
}

/// The general ODE with `V''` taken from the phase equation at every
/// interior sample of `trace`.
pub fn general_ode_residual(p: &SolitonParams, trace: &Trace) -> Result<OdeResidualStats> {
    let mut stats = OdeResidualStats {
        count: 0,
        max_abs: 0.0,
        max_rel: 0.0,
    };
    for s in trace.samples.iter().filter(|s| s.r.abs() < 1.0) {
        let vpp = vprime_rhs(p, s.r, s.vprime)?;
        let res = general_ode_residual_at(p, s.r, s.vprime, vpp)?;
        stats.count += 1;
        stats.max_abs = stats.max_abs.max(res.value.abs());
        if res.scale > 0.0 {
            stats.max_rel = stats.max_rel.max(res.value.abs() / res.scale);
        }
    }
    Ok(stats)
}

/// Explicit isoparametric functions on `S^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IsoparametricFn {
    /// `r = x_{n+1}`.
    K1 { n: usize },
    /// `r = Σ_{i ≤ l} x_i² - Σ_{i > l} x_i²`.
    K2 { n: usize, l: usize },
}

impl IsoparametricFn {
    pub fn k1(n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::Domain("n must be positive".into()));
        }
        Ok(IsoparametricFn::K1 { n })
    }

    pub fn k2(n: usize, l: usize) -> Result<Self> {
        if !(1..=n).contains(&l) {
            return Err(Error::Domain(format!("l = {l} outside 1..={n}")));
        }
        Ok(IsoparametricFn::K2 { n, l })
    }

    pub fn n(&self) -> usize {
        match *self {
            IsoparametricFn::K1 { n } | IsoparametricFn::K2 { n, .. } => n,
        }
    }

    pub fn k(&self) -> u32 {
        match self {
            IsoparametricFn::K1 { .. } => 1,
            IsoparametricFn::K2 { .. } => 2,
        }
    }

    /// Multiplicities `(m1, m2)`: `(n - 1, n - 1)` for K1, `(n - l, l - 1)` for K2.
    pub fn multiplicities(&self) -> (i64, i64) {
        match *self {
            IsoparametricFn::K1 { n } => (n as i64 - 1, n as i64 - 1),
            IsoparametricFn::K2 { n, l } => (n as i64 - l as i64, l as i64 - 1),
        }
    }

    /// The homogeneous polynomial `h` on `R^{n+1}`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            IsoparametricFn::K1 { n } => x[n],
            IsoparametricFn::K2 { l, .. } => {
                x[..l].iter().map(|v| v * v).sum::<f64>() - x[l..].iter().map(|v| v * v).sum::<f64>()
            }
        }
    }

    /// Exact ambient gradient of `h`.
    pub fn ambient_gradient(&self, x: &[f64]) -> Vec<f64> {
        match *self {
            IsoparametricFn::K1 { n } => (0..=n).map(|i| if i == n { 1.0 } else { 0.0 }).collect(),
            IsoparametricFn::K2 { l, .. } => x
                .iter()
                .enumerate()
                .map(|(i, v)| if i < l { 2.0 * v } else { -2.0 * v })
                .collect(),
        }
    }

    /// Exact ambient Laplacian of `h`.
    pub fn ambient_laplacian(&self) -> f64 {
        match *self {
            IsoparametricFn::K1 { .. } => 0.0,
            IsoparametricFn::K2 { n, l } => 4.0 * l as f64 - 2.0 * (n as f64 + 1.0),
        }
    }

    /// Catalog entry with the same data, when the multiplicities are positive.
    pub fn params(&self) -> Result<SolitonParams> {
        let (m1, m2) = self.multiplicities();
        if m1 < 1 || m2 < 1 {
            return Err(Error::InvalidParams(format!(
                "multiplicities ({m1}, {m2}) are not both positive"
            )));
        }
        SolitonParams::new(self.k(), self.n() as u32, m1 as u32, m2 as u32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub function: IsoparametricFn,
    pub trials: usize,
    /// max | |∇r|² - k²(1 - r²) | on the sphere, finite differences.
    pub gradient_fd: f64,
    /// max | Δr - ((m2 - m1)/2)k² + k(n + k - 1)r | on the sphere, finite differences.
    pub laplacian_fd: f64,
    /// max relative error of |∇h|² = k²|x|^{2k-2} at random ambient points.
    pub gradient_ambient: f64,
    /// max relative error of Δh = ((m2 - m1)/2)k²|x|^{k-2}.
    pub laplacian_ambient: f64,
    pub r_min: f64,
    pub r_max: f64,
}

/// Step of the fourth order stencils used for the identities.
const IDENTITY_FD_STEP: f64 = 1e-3;

/// Checks `|∇r|² = k²(1 - r²)` and `Δr = ((m2 - m1)/2)k² - k(n + k - 1)r` on
/// the sphere by finite differences, and the corresponding polynomial
/// identities for `h` exactly, at `trials` seeded random points.
pub fn isoparametric_identities(f: &IsoparametricFn, trials: usize, seed: u64) -> Result<IdentityReport> {
    if trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let n = f.n();
    let k = f64::from(f.k());
    let (m1, m2) = f.multiplicities();
    let dm = (m2 - m1) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = |y: &[f64]| f.eval(y);
    let mut rep = IdentityReport {
        function: *f,
        trials,
        gradient_fd: 0.0,
        laplacian_fd: 0.0,
        gradient_ambient: 0.0,
        laplacian_ambient: 0.0,
        r_min: f64::INFINITY,
        r_max: f64::NEG_INFINITY,
    };
    for _ in 0..trials {
        let mut y: Vec<f64> = (0..=n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dot(&y, &y).sqrt();
        let x: Vec<f64> = y.iter().map(|v| v / norm).collect();
        let r = f.eval(&x);
        rep.r_min = rep.r_min.min(r);
        rep.r_max = rep.r_max.max(r);

        let (g, hess) = derivatives4(&h, &x, IDENTITY_FD_STEP);
        let (grad, _, lap) = sphere_terms(&x, &g, &hess);
        let want_g = k * k * (1.0 - r * r);
        let want_l = 0.5 * dm * k * k - k * (n as f64 + k - 1.0) * r;
        rep.gradient_fd = rep.gradient_fd.max((dot(&grad, &grad) - want_g).abs());
        rep.laplacian_fd = rep.laplacian_fd.max((lap - want_l).abs());

        let scale: f64 = rng.gen_range(0.5..2.0);
        for v in &mut y {
            *v *= scale / norm;
        }
        let x2 = dot(&y, &y);
        let ag = f.ambient_gradient(&y);
        let want = k * k * x2.powf(k - 1.0);
        rep.gradient_ambient = rep.gradient_ambient.max((dot(&ag, &ag) - want).abs() / want);
        let want = 0.5 * dm * k * k * x2.powf(0.5 * k - 1.0);
        let got = f.ambient_laplacian();
        rep.laplacian_ambient = rep
            .laplacian_ambient
            .max((got - want).abs() / want.abs().max(1.0));
    }
    Ok(rep)
}

/// `θ_t` with `cos θ_t = √((1 + t)/2)` for the `k = 2` level set `r = t`,
/// which is the product of spheres of radii `cos θ_t` and `sin θ_t`.
pub fn level_set_param(f: &IsoparametricFn, t: f64) -> Result<f64> {
    match f {
        IsoparametricFn::K2 { .. } => crate::classifier::theta_of(t),
        IsoparametricFn::K1 { .. } => Err(Error::Domain(
            "level set parameter is defined for the quadratic family only".into(),
        )),
    }
}
