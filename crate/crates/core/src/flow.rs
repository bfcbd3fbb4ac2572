//! Velocity fields, flow maps `φ(x, t)` and two-point Osgood certificates.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::field::{norm, sub, Point, VectorField2D};
use crate::modulus::{GrowthFactor, ModulusSpec};
use crate::ode::{self, OdeConfig, StepStats, Trajectory};
use crate::profile::{Circulation, SingularProfile};
use crate::spectral::{relative_divergence, Fft2};

/// Velocity fields with closed-form or series evaluation.
#[derive(Debug, Clone)]
pub enum AnalyticField {
    Zero,
    /// `u(x, y) = (y, x)`.
    Hyperbolic,
    /// `u = Ω x⊥` about `center`.
    RigidRotation {
        omega: f64,
        center: Point,
    },
    /// Circular flow induced by a radial vorticity profile.
    RadialVortex {
        center: Point,
        circulation: Arc<Circulation>,
    },
    /// `∇⊥ψ` for the truncated sine series of `Δψ = sgn(x₁) sgn(x₂)`.
    BahouriChemin {
        k: usize,
    },
}

impl AnalyticField {
    pub fn rotation(omega: f64) -> Self {
        AnalyticField::RigidRotation {
            omega,
            center: [0.0, 0.0],
        }
    }

    pub fn radial_vortex(profile: &SingularProfile) -> Result<Self> {
        Ok(AnalyticField::RadialVortex {
            center: profile.center,
            circulation: Arc::new(profile.circulation()?),
        })
    }

    pub fn eval(&self, x: Point) -> Point {
        match self {
            AnalyticField::Zero => [0.0, 0.0],
            AnalyticField::Hyperbolic => [x[1], x[0]],
            AnalyticField::RigidRotation { omega, center } => {
                let d = sub(x, *center);
                [-omega * d[1], omega * d[0]]
            }
            AnalyticField::RadialVortex { center, circulation } => circulation.velocity(sub(x, *center)),
            AnalyticField::BahouriChemin { k } => bahouri_chemin_velocity(*k, x),
        }
    }

    pub fn name(&self) -> String {
        match self {
            AnalyticField::Zero => "zero".into(),
            AnalyticField::Hyperbolic => "hyperbolic".into(),
            AnalyticField::RigidRotation { omega, .. } => format!("rotation(omega={omega})"),
            AnalyticField::RadialVortex { .. } => "radial-vortex".into(),
            AnalyticField::BahouriChemin { k } => format!("bahouri-chemin(K={k})"),
        }
    }

    /// Operator norm of the gradient for linear fields.
    pub fn linear_rate(&self) -> Option<f64> {
        match self {
            AnalyticField::Zero => Some(0.0),
            AnalyticField::Hyperbolic => Some(1.0),
            AnalyticField::RigidRotation { omega, .. } => Some(omega.abs()),
            _ => None,
        }
    }
}

/// Stream-function truncation: odd `k, l ≤ K`.
pub fn bahouri_chemin_velocity(k_max: usize, x: Point) -> Point {
    let (sx, cx) = x[0].sin_cos();
    let (sy, cy) = x[1].sin_cos();
    let (s2x, c2x) = (2.0 * sx * cx, 1.0 - 2.0 * sx * sx);
    let (s2y, c2y) = (2.0 * sy * cy, 1.0 - 2.0 * sy * sy);
    let nk = k_max.div_ceil(2);
    let mut sin_l = Vec::with_capacity(nk);
    let mut cos_l = Vec::with_capacity(nk);
    let (mut s, mut c) = (sy, cy);
    for _ in 0..nk {
        sin_l.push(s);
        cos_l.push(c);
        (s, c) = (s * c2y + c * s2y, c * c2y - s * s2y);
    }
    let (mut s, mut c) = (sx, cx);
    let (mut u1, mut u2) = (0.0, 0.0);
    for a in 0..nk {
        let k = (2 * a + 1) as f64;
        let mut r1 = 0.0;
        let mut r2 = 0.0;
        for b in 0..nk {
            let l = (2 * b + 1) as f64;
            let w = 1.0 / (k * k + l * l);
            r1 += cos_l[b] * w;
            r2 += sin_l[b] * w / l;
        }
        u1 += s * r1 / k;
        u2 -= c * r2;
        (s, c) = (s * c2x + c * s2x, c * c2x - s * s2x);
    }
    let a = 16.0 / (PI * PI);
    [a * u1, a * u2]
}

/// Time-ordered velocity snapshots, cubic in space and linear in time.
#[derive(Debug, Clone)]
pub struct SampledField {
    pub times: Vec<f64>,
    pub snapshots: Vec<VectorField2D>,
}

impl SampledField {
    pub fn new(times: Vec<f64>, snapshots: Vec<VectorField2D>) -> Result<Self> {
        if times.is_empty() || times.len() != snapshots.len() {
            return domain("sampled field needs matching non-empty times and snapshots");
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return domain("snapshot times must be increasing");
        }
        Ok(Self { times, snapshots })
    }

    pub fn frozen(snapshot: VectorField2D) -> Self {
        Self {
            times: vec![0.0],
            snapshots: vec![snapshot],
        }
    }

    pub fn eval(&self, t: f64, x: Point) -> Point {
        let n = self.times.len();
        if n == 1 || t <= self.times[0] {
            return self.snapshots[0].sample_cubic(x);
        }
        if t >= self.times[n - 1] {
            return self.snapshots[n - 1].sample_cubic(x);
        }
        let i = self.times.partition_point(|&s| s <= t) - 1;
        let w = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
        let a = self.snapshots[i].sample_cubic(x);
        let b = self.snapshots[i + 1].sample_cubic(x);
        [(1.0 - w) * a[0] + w * b[0], (1.0 - w) * a[1] + w * b[1]]
    }

    /// Largest spectral relative divergence over the snapshots.
    pub fn max_divergence(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for s in &self.snapshots {
            let g = s.grid;
            if !g.periodic || g.nx != g.ny {
                return domain("divergence check needs a square periodic grid");
            }
            let fft = Fft2::new(g.nx)?;
            worst = worst.max(relative_divergence(&fft, &s.u, &s.v));
        }
        Ok(worst)
    }
}

/// Time profile of the modulus norm `‖u(t)‖_L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Rate {
    Constant(f64),
    /// `(t_start, value)` pieces on increasing `t_start`, starting at 0.
    Piecewise(Vec<(f64, f64)>),
}

impl Rate {
    /// `∫_0^{|t|} C(s) ds`.
    pub fn integral(&self, t: f64) -> f64 {
        let t = t.abs();
        match self {
            Rate::Constant(c) => c * t,
            Rate::Piecewise(p) => {
                let mut acc = 0.0;
                for (i, &(s0, c)) in p.iter().enumerate() {
                    let s1 = p.get(i + 1).map_or(f64::INFINITY, |q| q.0);
                    if t <= s0 {
                        break;
                    }
                    acc += c * (t.min(s1) - s0);
                }
                acc
            }
        }
    }
}

/// Claimed bound `‖u(t)‖_L ≤ C(t)` for a modulus.
#[derive(Debug, Clone)]
pub struct ModulusBound {
    pub spec: ModulusSpec,
    pub rate: Rate,
}

impl ModulusBound {
    pub fn growth(&self, t: f64) -> Result<GrowthFactor> {
        crate::modulus::mu_factor(t.abs(), self.rate.integral(t))
    }
}

#[derive(Debug, Clone)]
pub enum VelocityKind {
    Analytic(AnalyticField),
    Sampled(Arc<SampledField>),
}

#[derive(Debug, Clone)]
pub struct VelocityField {
    pub kind: VelocityKind,
    pub modulus_bound: Option<ModulusBound>,
}

impl VelocityField {
    pub fn analytic(f: AnalyticField) -> Self {
        Self {
            kind: VelocityKind::Analytic(f),
            modulus_bound: None,
        }
    }

    pub fn sampled(f: SampledField) -> Self {
        Self {
            kind: VelocityKind::Sampled(Arc::new(f)),
            modulus_bound: None,
        }
    }

    pub fn with_bound(mut self, spec: ModulusSpec, rate: Rate) -> Self {
        self.modulus_bound = Some(ModulusBound { spec, rate });
        self
    }

    /// Linear fields get their exact constant `λ sup z/L(z)`.
    pub fn with_exact_bound(self, spec: ModulusSpec) -> Result<Self> {
        let lam = match &self.kind {
            VelocityKind::Analytic(a) => a.linear_rate(),
            VelocityKind::Sampled(_) => None,
        }
        .ok_or_else(|| Error::Precondition("exact modulus constants are known only for linear fields".into()))?;
        let c = lam * spec.linear_field_constant();
        Ok(self.with_bound(spec, Rate::Constant(c)))
    }

    #[inline]
    pub fn eval(&self, t: f64, x: Point) -> Point {
        match &self.kind {
            VelocityKind::Analytic(a) => a.eval(x),
            VelocityKind::Sampled(s) => s.eval(t, x),
        }
    }

    pub fn name(&self) -> String {
        match &self.kind {
            VelocityKind::Analytic(a) => a.name(),
            VelocityKind::Sampled(s) => format!("sampled({} snapshots)", s.times.len()),
        }
    }
}

/// `φ(x0, ·)` on `[0, t_final]` (or `[t_final, 0]`).
pub fn integrate_flow(u: &VelocityField, x0: Point, t_final: f64, tol: f64) -> Result<Trajectory> {
    ode::integrate(|t, x| u.eval(t, x), 0.0, x0, t_final, &OdeConfig::with_tol(tol))
}

/// `φ(x0, t)` without storing the path.
pub fn flow_point(u: &VelocityField, x0: Point, t: f64, cfg: &OdeConfig) -> Result<(Point, StepStats)> {
    ode::integrate_endpoint(|s, x| u.eval(s, x), 0.0, x0, t, cfg)
}

/// `φ⁻¹(x, t)`: integrates backward from `(x, t)` to time 0.
pub fn inverse_flow(u: &VelocityField, x: Point, t: f64, tol: f64) -> Result<Point> {
    inverse_flow_cfg(u, x, t, &OdeConfig::with_tol(tol))
}

pub fn inverse_flow_cfg(u: &VelocityField, x: Point, t: f64, cfg: &OdeConfig) -> Result<Point> {
    if t == 0.0 {
        return Ok(x);
    }
    Ok(ode::integrate_endpoint(|s, y| u.eval(s, y), t, x, 0.0, cfg)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub x: Point,
    pub y: Point,
    pub t: f64,
    pub sep0: f64,
    pub sep_t: f64,
    /// `R(sep_t) / R(sep0)`.
    pub ratio: f64,
    pub lower: f64,
    pub upper: f64,
    /// `M(sep0) − M(sep_t)`.
    pub m_change: f64,
    pub lint: f64,
    /// `min(log ratio + lint, lint − log ratio)`.
    pub slack: f64,
    pub pass: bool,
}

/// Slack below which a certificate still counts as a pass (integration noise).
pub const CERTIFICATE_SLACK_TOL: f64 = 1e-9;

/// Checks `1/μ ≤ R(|φx − φy|)/R(|x − y|) ≤ μ` using the field's attached bound.
pub fn pair_separation_certificate(
    u: &VelocityField,
    spec: &ModulusSpec,
    x: Point,
    y: Point,
    t: f64,
    tol: f64,
) -> Result<Certificate> {
    let bound = u
        .modulus_bound
        .as_ref()
        .ok_or_else(|| Error::Precondition("velocity field carries no modulus bound".into()))?;
    if bound.spec.name() != spec.name() {
        return Err(Error::Precondition(format!(
            "field bound is for {} but certificate asks for {}",
            bound.spec.name(),
            spec.name()
        )));
    }
    let sep0 = norm(sub(x, y));
    if !(sep0 > 0.0 && sep0 < spec.m_l()) {
        return domain(format!("pair separation {sep0} must lie in (0, m_L = {})", spec.m_l()));
    }
    let g = bound.growth(t)?;
    let r0 = spec.eval_r(sep0)?;
    if !(g.mu * r0 < 1.0) {
        return Err(Error::Precondition(format!(
            "smallness condition fails: mu R(|x-y|) = {:.6} >= 1",
            g.mu * r0
        )));
    }
    let cfg = OdeConfig::with_tol(tol);
    let (px, _) = flow_point(u, x, t, &cfg)?;
    let (py, _) = flow_point(u, y, t, &cfg)?;
    let sep_t = norm(sub(px, py));
    let ratio = spec.eval_r(sep_t)? / r0;
    let m_change = spec.eval_m(sep0)? - spec.eval_m(sep_t)?;
    let lr = ratio.ln();
    let slack = (lr + g.lint).min(g.lint - lr);
    Ok(Certificate {
        x,
        y,
        t,
        sep0,
        sep_t,
        ratio,
        lower: 1.0 / g.mu,
        upper: g.mu,
        m_change,
        lint: g.lint,
        slack,
        pass: slack >= -CERTIFICATE_SLACK_TOL,
    })
}

/// Pair-sampled estimate of `sup |u(x) − u(y)| / L(|x − y|)` over pairs with
/// `x` in the box `center ± half` and log-uniform separations in
/// `[d_min, m_L/2)`.
pub fn estimate_modulus_norm(
    u: impl Fn(Point) -> Point + Sync,
    spec: &ModulusSpec,
    center: Point,
    half: f64,
    d_min: f64,
    pairs: usize,
    seed: u64,
) -> Result<f64> {
    let d_max = 0.5 * spec.m_l();
    if !(d_min > 0.0 && d_min < d_max) {
        return domain(format!("separation range [{d_min}, {d_max}) is empty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<(Point, Point, f64)> = (0..pairs)
        .map(|_| {
            let x = [center[0] + rng.gen_range(-half..half), center[1] + rng.gen_range(-half..half)];
            let d = (d_min.ln() + rng.gen::<f64>() * (d_max / d_min).ln()).exp();
            let th = rng.gen_range(0.0..2.0 * PI);
            (x, [x[0] + d * th.cos(), x[1] + d * th.sin()], d)
        })
        .collect();
    let best = samples
        .par_iter()
        .map(|(x, y, d)| {
            let (a, b) = (u(*x), u(*y));
            let l = spec.eval_l(*d).unwrap_or(f64::NAN);
            norm(sub(a, b)) / l
        })
        .reduce(|| 0.0f64, f64::max);
    if !best.is_finite() {
        return Err(Error::Numeric("modulus estimate is not finite".into()));
    }
    Ok(best)
}

/// Per-snapshot modulus estimates turned into a piecewise-constant rate.
pub fn sampled_rate(field: &SampledField, spec: &ModulusSpec, pairs: usize, seed: u64) -> Result<Rate> {
    let mut pieces = Vec::with_capacity(field.times.len());
    for (i, s) in field.snapshots.iter().enumerate() {
        let g = s.grid;
        let ext = g.extent();
        let center = [g.origin[0] + 0.5 * ext[0], g.origin[1] + 0.5 * ext[1]];
        let half = 0.5 * ext[0].min(ext[1]) * if g.periodic { 1.0 } else { 0.5 };
        let c = estimate_modulus_norm(|x| s.sample_cubic(x), spec, center, half, 0.5 * g.h, pairs, seed + i as u64)?;
        let t0 = if i == 0 { 0.0 } else { field.times[i] };
        pieces.push((t0, c));
    }
    Ok(Rate::Piecewise(pieces))
}

/// Maximum of `|det Dφ_t − 1|` over points, from centered differences with
/// spacing `eps`.
pub fn jacobian_defect(u: &VelocityField, points: &[Point], t: f64, eps: f64, tol: f64) -> Result<f64> {
    let cfg = OdeConfig::with_tol(tol);
    let defects = points
        .par_iter()
        .map(|&p| -> Result<f64> {
            let f = |q: Point| flow_point(u, q, t, &cfg).map(|r| r.0);
            let xp = f([p[0] + eps, p[1]])?;
            let xm = f([p[0] - eps, p[1]])?;
            let yp = f([p[0], p[1] + eps])?;
            let ym = f([p[0], p[1] - eps])?;
            let a = (xp[0] - xm[0]) / (2.0 * eps);
            let b = (yp[0] - ym[0]) / (2.0 * eps);
            let c = (xp[1] - xm[1]) / (2.0 * eps);
            let d = (yp[1] - ym[1]) / (2.0 * eps);
            Ok((a * d - b * c - 1.0).abs())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(defects.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid2;
    use crate::modulus::ModulusSpec;
    use crate::profile::OuterShape;

    fn hyper() -> VelocityField {
        VelocityField::analytic(AnalyticField::Hyperbolic)
    }

    #[test]
    fn hyperbolic_stable_line() {
        let tr = integrate_flow(&hyper(), [1.0, -1.0], 1.0, 1e-10).unwrap();
        let e = (-1f64).exp();
        let p = tr.end();
        assert!((p[0] - e).abs() < 1e-8 && (p[1] + e).abs() < 1e-8);
        let back = inverse_flow(&hyper(), [e, -e], 1.0, 1e-10).unwrap();
        assert!((back[0] - 1.0).abs() < 1e-7 && (back[1] + 1.0).abs() < 1e-7);
        assert_eq!(inverse_flow(&hyper(), [0.3, 0.2], 0.0, 1e-10).unwrap(), [0.3, 0.2]);
    }

    #[test]
    fn rotation_quarter_turn() {
        let u = VelocityField::analytic(AnalyticField::rotation(1.0));
        let p = integrate_flow(&u, [1.0, 0.0], PI / 2.0, 1e-10).unwrap().end();
        assert!(p[0].abs() < 1e-8 && (p[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn radial_vortex_keeps_radius() {
        let prof = SingularProfile::standard([0.0, 0.0], 1.0, ModulusSpec::log_lipschitz(), OuterShape::Identity).unwrap();
        let u = VelocityField::analytic(AnalyticField::radial_vortex(&prof).unwrap());
        for x0 in [[0.05, 0.0], [0.1, -0.2], [1e-3, 2e-3]] {
            let tr = integrate_flow(&u, x0, 5.0, 1e-10).unwrap();
            for p in &tr.positions {
                assert!((norm(*p) - norm(x0)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn bahouri_chemin_symmetries() {
        let k = 31;
        assert_eq!(bahouri_chemin_velocity(k, [0.0, 0.0]), [0.0, 0.0]);
        let on_x = bahouri_chemin_velocity(k, [0.4, 0.0]);
        assert!(on_x[1].abs() < 1e-15 && on_x[0] > 0.0);
        let on_y = bahouri_chemin_velocity(k, [0.0, 0.4]);
        assert!(on_y[0].abs() < 1e-15 && on_y[1] < 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let a = bahouri_chemin_velocity(k, x);
            let b = bahouri_chemin_velocity(k, [-x[0], x[1]]);
            assert!((b[0] + a[0]).abs() < 1e-12 && (b[1] - a[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn bahouri_chemin_matches_direct_sum() {
        let x = [0.7, -1.3];
        let k = 9;
        let (mut u1, mut u2) = (0.0, 0.0);
        for kk in (1..=k).step_by(2) {
            for ll in (1..=k).step_by(2) {
                let (kf, lf) = (kk as f64, ll as f64);
                let w = 1.0 / (kf * kf + lf * lf);
                u1 += (kf * x[0]).sin() * (lf * x[1]).cos() * w / kf;
                u2 -= (kf * x[0]).cos() * (lf * x[1]).sin() * w / lf;
            }
        }
        let a = 16.0 / (PI * PI);
        let v = bahouri_chemin_velocity(k, x);
        assert!((v[0] - a * u1).abs() < 1e-14 && (v[1] - a * u2).abs() < 1e-14);
    }

    #[test]
    fn hyperbolic_certificates() {
        let spec = ModulusSpec::lipschitz();
        let u = hyper().with_exact_bound(spec.clone()).unwrap();
        let c = pair_separation_certificate(&u, &spec, [0.2, -0.2], [0.1, -0.1], 1.0, 1e-11).unwrap();
        assert!((c.ratio - (-1f64).exp()).abs() < 1e-9);
        assert!((c.m_change + 1.0).abs() < 1e-8);
        let c = pair_separation_certificate(&u, &spec, [0.1, 0.05], [0.0, 0.2], 1.0, 1e-11).unwrap();
        assert!(c.pass && c.slack > 0.0);
        let e = pair_separation_certificate(&u, &spec, [0.0, 0.0], [0.5, 0.0], 1.0, 1e-11).unwrap_err();
        assert!(matches!(e, Error::Precondition(_)));
    }

    #[test]
    fn rotation_is_isometric() {
        let spec = ModulusSpec::log_lipschitz();
        let u = VelocityField::analytic(AnalyticField::rotation(0.5))
            .with_exact_bound(spec.clone())
            .unwrap();
        let c = pair_separation_certificate(&u, &spec, [0.01, 0.0], [0.0, 0.02], 0.7, 1e-11).unwrap();
        assert!((c.ratio - 1.0).abs() < 1e-8 && c.pass);
    }

    #[test]
    fn sampled_frozen_field_matches_analytic_inverse() {
        let g = Grid2::torus(128);
        let snap = VectorField2D::from_fn(g, |x| [x[1].sin(), x[0].cos()]);
        let s = SampledField::frozen(snap);
        assert!(s.max_divergence().unwrap() < 1e-8);
        let us = VelocityField::sampled(s);
        let exact = |_t: f64, x: Point| [x[1].sin(), x[0].cos()];
        let p = [1.0, 2.0];
        let a = inverse_flow(&us, p, 0.8, 1e-10).unwrap();
        let b = ode::integrate_endpoint(exact, 0.8, p, 0.0, &OdeConfig::with_tol(1e-10))
            .unwrap()
            .0;
        assert!(norm(sub(a, b)) < 1e-4);
    }

    #[test]
    fn flows_preserve_area() {
        let pts = [[0.3, 0.1], [-0.2, 0.25], [0.05, -0.4]];
        for f in [
            AnalyticField::Hyperbolic,
            AnalyticField::rotation(1.5),
            AnalyticField::BahouriChemin { k: 15 },
        ] {
            let u = VelocityField::analytic(f);
            assert!(jacobian_defect(&u, &pts, 0.5, 1e-5, 1e-10).unwrap() < 1e-4);
        }
    }

    #[test]
    fn piecewise_rate_integral() {
        let r = Rate::Piecewise(vec![(0.0, 1.0), (1.0, 3.0)]);
        assert!((r.integral(0.5) - 0.5).abs() < 1e-15);
        assert!((r.integral(2.0) - 4.0).abs() < 1e-15);
    }
}
