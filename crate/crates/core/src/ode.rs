//! Dormand-Prince 5(4) integrator for planar non-autonomous ODEs with cubic
//! Hermite dense output.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Point;
use crate::interp::hermite;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Fifth minus fourth order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeConfig {
    pub atol: f64,
    pub rtol: f64,
    pub h_max: f64,
    /// Below this speed the step is capped at `stagnation_h_max`.
    pub stagnation_speed: f64,
    pub stagnation_h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeConfig {
    fn default() -> Self {
        Self {
            atol: 1e-10,
            rtol: 1e-10,
            h_max: f64::INFINITY,
            stagnation_speed: 1e-3,
            stagnation_h_max: 1e-3,
            max_steps: 1_000_000,
        }
    }
}

impl OdeConfig {
    /// Same absolute and relative tolerance.
    pub fn with_tol(tol: f64) -> Self {
        Self::with_tols(tol, tol)
    }

    pub fn with_tols(atol: f64, rtol: f64) -> Self {
        Self {
            atol,
            rtol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    pub steps: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Accepted-step record: time, state and derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub positions: Vec<Point>,
    pub velocities: Vec<Point>,
    pub stats: StepStats,
    pub tol: f64,
}

impl Trajectory {
    pub fn end(&self) -> Point {
        *self.positions.last().expect("trajectory has a start point")
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("trajectory has a start time")
    }

    /// Cubic Hermite dense output at `t` (clamped to the integrated range).
    pub fn at(&self, t: f64) -> Point {
        let n = self.times.len();
        if n == 1 {
            return self.positions[0];
        }
        let forward = self.times[n - 1] >= self.times[0];
        let key = |s: f64| if forward { s } else { -s };
        let tk = key(t);
        let k = self.times.partition_point(|&s| key(s) <= tk);
        let i = k.clamp(1, n - 1) - 1;
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let tc = t.clamp(t0.min(t1), t0.max(t1));
        let (p0, p1) = (self.positions[i], self.positions[i + 1]);
        let (v0, v1) = (self.velocities[i], self.velocities[i + 1]);
        [
            hermite(t0, t1, p0[0], p1[0], v0[0], v1[0], tc),
            hermite(t0, t1, p0[1], p1[1], v0[1], v1[1], tc),
        ]
    }

    /// Largest jump between consecutive recorded positions.
    pub fn max_jump(&self) -> f64 {
        self.positions
            .windows(2)
            .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
            .fold(0.0, f64::max)
    }
}

#[inline]
fn axpy(x: Point, h: f64, terms: &[(f64, Point)]) -> Point {
    let mut r = x;
    for (c, k) in terms {
        r[0] += h * c * k[0];
        r[1] += h * c * k[1];
    }
    r
}

fn integration_error(t: f64, state: Point, reason: impl Into<String>) -> Error {
    Error::Integration {
        t,
        state,
        reason: reason.into(),
    }
}

/// Integrates `x' = f(t, x)` from `(t0, x0)` to `t1` (either direction) and
/// calls `on_step(t, x, f(t, x))` at the start and after each accepted step.
pub fn integrate_with<F, S>(f: F, t0: f64, x0: Point, t1: f64, cfg: &OdeConfig, mut on_step: S) -> Result<(Point, StepStats)>
where
    F: Fn(f64, Point) -> Point,
    S: FnMut(f64, Point, Point),
{
    let mut stats = StepStats::default();
    let eval = |t: f64, x: Point, stats: &mut StepStats| -> Result<Point> {
        stats.evaluations += 1;
        let v = f(t, x);
        if v[0].is_finite() && v[1].is_finite() {
            Ok(v)
        } else {
            Err(integration_error(t, x, "non-finite velocity"))
        }
    };
    let mut t = t0;
    let mut x = x0;
    let mut k1 = eval(t, x, &mut stats)?;
    on_step(t, x, k1);
    if t1 == t0 {
        return Ok((x, stats));
    }
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();
    let (atol, rtol) = (cfg.atol, cfg.rtol);
    let scale = |a: Point, b: Point, i: usize| atol + rtol * a[i].abs().max(b[i].abs());

    // Initial step from the derivative scale.
    let d0 = ((x[0] / scale(x, x, 0)).powi(2) + (x[1] / scale(x, x, 1)).powi(2)).sqrt() / 2f64.sqrt();
    let d1 = ((k1[0] / scale(x, x, 0)).powi(2) + (k1[1] / scale(x, x, 1)).powi(2)).sqrt() / 2f64.sqrt();
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(span).min(cfg.h_max).max(1e-12 * span);

    let mut last_err = 1e-4f64;
    loop {
        let remaining = (t1 - t) * dir;
        if remaining <= 1e-14 * span.max(1.0) {
            break;
        }
        if stats.steps + stats.rejected >= cfg.max_steps {
            return Err(integration_error(t, x, format!("exceeded {} steps", cfg.max_steps)));
        }
        let speed = k1[0].hypot(k1[1]);
        let mut hmax = cfg.h_max;
        if speed < cfg.stagnation_speed {
            hmax = hmax.min(cfg.stagnation_h_max);
        }
        h = h.min(hmax);
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        let hs = h * dir;
        let k2 = eval(t + C2 * hs, axpy(x, hs, &[(A21, k1)]), &mut stats)?;
        let k3 = eval(t + C3 * hs, axpy(x, hs, &[(A31, k1), (A32, k2)]), &mut stats)?;
        let k4 = eval(t + C4 * hs, axpy(x, hs, &[(A41, k1), (A42, k2), (A43, k3)]), &mut stats)?;
        let k5 = eval(
            t + C5 * hs,
            axpy(x, hs, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]),
            &mut stats,
        )?;
        let k6 = eval(
            t + hs,
            axpy(x, hs, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]),
            &mut stats,
        )?;
        let xn = axpy(x, hs, &[(B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6)]);
        let tn = if last { t1 } else { t + hs };
        let k7 = eval(tn, xn, &mut stats)?;
        let e = axpy([0.0, 0.0], hs, &[(E1, k1), (E3, k3), (E4, k4), (E5, k5), (E6, k6), (E7, k7)]);
        let err = (((e[0] / scale(x, xn, 0)).powi(2) + (e[1] / scale(x, xn, 1)).powi(2)) / 2.0).sqrt();
        if !err.is_finite() {
            return Err(integration_error(t, x, "non-finite error estimate"));
        }
        if err <= 1.0 {
            t = tn;
            x = xn;
            k1 = k7;
            stats.steps += 1;
            on_step(t, x, k1);
            // PI step-size control.
            let fac = 0.9 * err.max(1e-10).powf(-0.7 / 5.0) * last_err.powf(0.4 / 5.0);
            h *= fac.clamp(0.2, 5.0);
            last_err = err.max(1e-4);
        } else {
            stats.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(integration_error(t, x, format!("step size underflow (h = {h:.3e})")));
        }
    }
    Ok((x, stats))
}

/// End point of the trajectory, no dense output stored.
pub fn integrate_endpoint<F: Fn(f64, Point) -> Point>(
    f: F,
    t0: f64,
    x0: Point,
    t1: f64,
    cfg: &OdeConfig,
) -> Result<(Point, StepStats)> {
    integrate_with(f, t0, x0, t1, cfg, |_, _, _| {})
}

/// Full trajectory with dense output.
pub fn integrate<F: Fn(f64, Point) -> Point>(f: F, t0: f64, x0: Point, t1: f64, cfg: &OdeConfig) -> Result<Trajectory> {
    let mut times = Vec::new();
    let mut positions = Vec::new();
    let mut velocities = Vec::new();
    let (_, stats) = integrate_with(f, t0, x0, t1, cfg, |t, x, v| {
        times.push(t);
        positions.push(x);
        velocities.push(v);
    })?;
    Ok(Trajectory {
        times,
        positions,
        velocities,
        stats,
        tol: cfg.atol.max(cfg.rtol),
    })
}
