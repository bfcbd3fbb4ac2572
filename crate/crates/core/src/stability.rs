//! Homogeneous Sobolev interpolation, light-cone behavior of regularized
//! vortex data, and the double-exponential L² stability envelope.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::euler2d::SpectralState;
use crate::field::{deterministic_sum, Grid2, Point, ScalarField2D};
use crate::modulus::ModulusSpec;
use crate::profile::{OuterShape, SingularProfile};
use crate::seminorm::lp_norm_of;
use crate::spectral::Fft2;

/// Rounding allowance: a check counts as violated only if
/// `lhs > rhs (1 + INTERP_ROUNDING)`.
pub const INTERP_ROUNDING: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpRow {
    pub k: u32,
    pub s: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl InterpRow {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs * (1.0 + INTERP_ROUNDING)
    }
}

/// `(Σ |k|^{2s} |f̂_k|²)^{1/2}` with the Parseval weight of the torus.
pub fn homogeneous_norm(fft: &Fft2, spec: &[Complex64], s: f64) -> f64 {
    let w = 4.0 * PI * PI / (fft.n as f64).powi(4);
    let mut acc = 0.0;
    for (idx, c) in spec.iter().enumerate() {
        if idx == 0 {
            continue;
        }
        let (kx, ky) = fft.k_of(idx);
        let k2 = kx * kx + ky * ky;
        acc += k2.powf(s) * c.norm_sqr();
    }
    (acc * w).sqrt()
}

/// Checks `‖f‖_{Ḣ^s} ≤ ‖f‖_{Ḣ^{2^k s}}^{2^{−k}} ‖f‖_{L²}^{1−2^{−k}}` for
/// `k = 1..=k_max`. The field must be mean-free and carry no Nyquist modes.
pub fn sobolev_interpolation_check(field: &ScalarField2D, s: f64, k_max: u32) -> Result<Vec<InterpRow>> {
    let n = field.grid.nx;
    if field.grid.ny != n || !field.grid.periodic {
        return domain("interpolation check needs a square periodic grid");
    }
    if !(s > 0.0) || k_max == 0 {
        return domain(format!("need s > 0 and k_max ≥ 1, got s = {s}, k_max = {k_max}"));
    }
    let fft = Fft2::new(n)?;
    let spec = fft.forward_real(&field.data);
    check_spectrum(&fft, &spec, s, k_max)
}

fn check_spectrum(fft: &Fft2, spec: &[Complex64], s: f64, k_max: u32) -> Result<Vec<InterpRow>> {
    let top = spec.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if spec[0].norm() > 1e-10 * top.max(f64::MIN_POSITIVE) {
        return Err(Error::Precondition("interpolation check needs a mean-free field".into()));
    }
    if spec
        .iter()
        .enumerate()
        .any(|(i, c)| fft.is_nyquist(i) && c.norm() > 1e-10 * top)
    {
        return domain("field has energy on the Nyquist modes; the band is not resolved");
    }
    let l2 = homogeneous_norm(fft, spec, 0.0);
    let lhs = homogeneous_norm(fft, spec, s);
    (1..=k_max)
        .map(|k| {
            let e = 2f64.powi(k as i32);
            let hi = homogeneous_norm(fft, spec, e * s);
            if !hi.is_finite() {
                return domain(format!("Ḣ^{} norm overflows on this band", e * s));
            }
            let rhs = hi.powf(1.0 / e) * l2.powf(1.0 - 1.0 / e);
            Ok(InterpRow {
                k,
                s,
                lhs,
                rhs,
                slack: rhs - lhs,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpSummary {
    pub trials: usize,
    pub checks: usize,
    pub violations: usize,
    /// Smallest `slack / rhs` seen.
    pub min_rel_slack: f64,
}

/// Random mean-free fields with modes `|k_x|, |k_y| ≤ band` on an `n`-grid.
pub fn random_band_limited(n: usize, band: usize, rng: &mut ChaCha8Rng) -> Result<ScalarField2D> {
    if 2 * band >= n {
        return domain(format!("band {band} does not fit below Nyquist on an {n}-grid"));
    }
    let fft = Fft2::new(n)?;
    let mut spec = vec![Complex64::default(); n * n];
    let b = band as i64;
    let decay: f64 = rng.gen_range(0.0..3.0);
    for ky in -b..=b {
        for kx in 0..=b {
            if kx == 0 && ky <= 0 {
                continue;
            }
            if rng.gen_bool(0.5) {
                continue;
            }
            let amp = ((kx * kx + ky * ky) as f64).powf(-0.5 * decay);
            let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * amp;
            let ix = kx as usize;
            let iy = ky.rem_euclid(n as i64) as usize;
            spec[iy * n + ix] = c;
            let jx = (-kx).rem_euclid(n as i64) as usize;
            let jy = (-ky).rem_euclid(n as i64) as usize;
            spec[jy * n + jx] = c.conj();
        }
    }
    let data = fft.inverse_real(&spec);
    ScalarField2D::from_data(Grid2::torus(n), data)
}

/// Runs the interpolation check on `trials` random fields for every `s`.
pub fn interpolation_trials(
    trials: usize,
    n: usize,
    band: usize,
    s_list: &[f64],
    k_max: u32,
    seed: u64,
) -> Result<InterpSummary> {
    let fft = Fft2::new(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = InterpSummary {
        trials,
        checks: 0,
        violations: 0,
        min_rel_slack: f64::INFINITY,
    };
    for _ in 0..trials {
        let f = random_band_limited(n, band, &mut rng)?;
        let spec = fft.forward_real(&f.data);
        for &s in s_list {
            for row in check_spectrum(&fft, &spec, s, k_max)? {
                sum.checks += 1;
                if !row.holds() {
                    sum.violations += 1;
                }
                if row.rhs > 0.0 {
                    sum.min_rel_slack = sum.min_rel_slack.min(row.slack / row.rhs);
                }
            }
        }
    }
    Ok(sum)
}

/// Singular vortex at `center` plus a smooth background, with
/// regularizations that differ from it only inside `B_ε(center)`.
#[derive(Debug, Clone)]
pub struct RegularizedFamily {
    pub n: usize,
    pub center: Point,
    pub profile: SingularProfile,
    /// Background amplitude; the background is
    /// `a [cos(x₁ − 0.3) cos(2x₂) + 0.5 sin(2x₁ + x₂)]`.
    pub background: f64,
    pub eps: Vec<f64>,
}

impl RegularizedFamily {
    pub fn new(n: usize, gamma: f64, background: f64, eps: Vec<f64>) -> Result<Self> {
        let center = [PI, PI];
        let profile = SingularProfile::standard(center, gamma, ModulusSpec::log_lipschitz(), OuterShape::Identity)?;
        let h = 2.0 * PI / n as f64;
        if let Some(e) = eps.iter().find(|&&e| !(e >= 4.0 * h && e < PI / 4.0)) {
            return domain(format!("regularization scale {e} must lie in [4Δx, π/4)"));
        }
        Ok(Self {
            n,
            center,
            profile,
            background,
            eps,
        })
    }

    pub fn grid(&self) -> Grid2 {
        Grid2::torus(self.n)
    }

    fn smooth_part(&self, x: Point) -> f64 {
        self.background * ((x[0] - 0.3).cos() * (2.0 * x[1]).cos() + 0.5 * (2.0 * x[0] + x[1]).sin())
    }

    /// The singular data (0 at the exact center node).
    pub fn base(&self, x: Point) -> f64 {
        self.profile.radial(self.grid().distance(x, self.center)) + self.smooth_part(x)
    }

    /// `(1 − χ_ε) ω₀ + χ_ε A_ε` with `χ_ε(r) = ½ erfc((r − ε/2)/(ε/10))`,
    /// which is below `1e−12` outside `B_ε`, and `A_ε` chosen so every
    /// member has the mass of `ω₀`.
    pub fn member(&self, eps: f64) -> Result<ScalarField2D> {
        let g = self.grid();
        let chi: Vec<f64> = (0..g.len())
            .map(|k| 0.5 * libm::erfc((g.distance(g.node_of(k), self.center) - 0.5 * eps) / (0.1 * eps)))
            .collect();
        let base: Vec<f64> = (0..g.len()).map(|k| self.base(g.node_of(k))).collect();
        let num: Vec<f64> = chi.iter().zip(&base).map(|(c, b)| c * b).collect();
        let a = deterministic_sum(&num) / deterministic_sum(&chi);
        let data = (0..g.len()).map(|k| (1.0 - chi[k]) * base[k] + chi[k] * a).collect();
        let mut f = ScalarField2D::from_data(g, data)?;
        let m = f.mean();
        f.data.iter_mut().for_each(|v| *v -= m);
        Ok(f)
    }

    /// `‖ω₀^ε − ω₀‖_{L^p}` for each `ε` on the list (center node skipped).
    pub fn convergence(&self, p: f64) -> Result<Vec<(f64, f64)>> {
        let g = self.grid();
        let base = ScalarField2D::from_fn(g, |x| self.base(x));
        let m = base.mean();
        self.eps
            .iter()
            .map(|&e| {
                let f = self.member(e)?;
                let diff: Vec<f64> = (0..g.len())
                    .filter(|&k| g.distance(g.node_of(k), self.center) > 0.0)
                    .map(|k| f.data[k] - (base.data[k] - m))
                    .collect();
                Ok((e, lp_norm_of(&diff, g.cell_area(), p)?))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeRow {
    pub t: f64,
    pub radius: f64,
    pub exterior_sup: f64,
    pub interior_sup: f64,
    pub interior_lp: f64,
    pub front_radius: f64,
    pub bound_rhs: f64,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeReport {
    pub rows: Vec<ConeRow>,
    /// `C_* = max_t max(|u^{ε₁}|, |u^{ε₂}|)`.
    pub c_star: f64,
    /// Largest `(front(t) − front(0)) / t` over the monitor times.
    pub front_speed: f64,
    pub front_speed_bound: f64,
    /// Largest exterior-to-interior error ratio.
    pub max_ratio: f64,
    /// Gronwall rate fitted from exterior gradients.
    pub gradient_rate: f64,
    pub l2_velocity_diff: Vec<(f64, f64)>,
    pub steps: usize,
}

impl ConeReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,radius,exterior_sup,interior_norm,interior_sup,front_radius,bound_rhs\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{:.6},{:.6},{:.10e},{:.10e},{:.10e},{:.6},{:.10e}\n",
                r.t, r.radius, r.exterior_sup, r.interior_lp, r.interior_sup, r.front_radius, r.bound_rhs
            ));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeConfig {
    pub t_final: f64,
    pub monitor_every: f64,
    /// Ball radius `δ + (c C_* + a) t`, with `c = speeds.0`, `a = speeds.1`.
    pub delta: f64,
    pub speeds: (f64, f64),
    /// Threshold that defines the error front.
    pub front_threshold: f64,
    pub p: f64,
    pub cfl: f64,
}

impl Default for ConeConfig {
    fn default() -> Self {
        Self {
            t_final: 0.5,
            monitor_every: 0.05,
            delta: 0.25,
            speeds: (2.0, 0.25),
            front_threshold: 1e-6,
            p: 4.0,
            cfl: 0.5,
        }
    }
}

/// Two Euler runs from `ω₀^{ε₁}` and `ω₀^{ε₂}` with a common step, compared
/// inside and outside the expanding ball.
pub fn light_cone_experiment(family: &RegularizedFamily, eps1: f64, eps2: f64, cfg: &ConeConfig) -> Result<ConeReport> {
    let grid = family.grid();
    let (a0, b0) = rayon::join(|| family.member(eps1), || family.member(eps2));
    let (a0, b0) = (a0?, b0?);
    let mut a = SpectralState::new(family.n, &a0.data, 0.0)?;
    let mut b = SpectralState::new(family.n, &b0.data, 0.0)?;
    let dist: Vec<f64> = (0..grid.len())
        .map(|k| grid.distance(grid.node_of(k), family.center))
        .collect();
    let init_diff: Vec<f64> = a.omega().iter().zip(b.omega()).map(|(x, y)| x - y).collect();
    let exterior_data_gap = init_diff
        .iter()
        .zip(&dist)
        .filter(|(_, d)| **d > cfg.delta)
        .map(|(v, _)| v.abs())
        .fold(0.0, f64::max);

    let mut snaps: Vec<(f64, Vec<f64>)> = vec![(0.0, init_diff)];
    let mut speeds: Vec<f64> = vec![a.max_speed().max(b.max_speed())];
    let mut grad_rates = Vec::new();
    let mut l2u = vec![(0.0, l2_velocity_difference(&a, &b))];
    let mut steps = 0;
    let mut next = cfg.monitor_every;
    while a.t < cfg.t_final - 1e-12 {
        let lim = a.cfl_limit().min(b.cfl_limit());
        let dt = (cfg.cfl * lim).min(next - a.t).min(cfg.t_final - a.t);
        let (ra, rb) = rayon::join(|| a.step(dt), || b.step(dt));
        ra?;
        rb?;
        steps += 1;
        if a.t >= next - 1e-12 || a.t >= cfg.t_final - 1e-12 {
            speeds.push(a.max_speed().max(b.max_speed()));
            let diff: Vec<f64> = a.omega().iter().zip(b.omega()).map(|(x, y)| x - y).collect();
            grad_rates.push(exterior_gradient(&a, &dist, cfg.delta));
            l2u.push((a.t, l2_velocity_difference(&a, &b)));
            snaps.push((a.t, diff));
            while next <= a.t + 1e-12 {
                next += cfg.monitor_every;
            }
        }
    }
    let c_star = speeds.iter().copied().fold(0.0, f64::max);
    let gradient_rate = grad_rates.iter().copied().fold(0.0, f64::max);
    let area = grid.cell_area();
    let mut rows = Vec::new();
    for (t, diff) in &snaps {
        let mut radius = cfg.delta + (cfg.speeds.0 * c_star + cfg.speeds.1) * t;
        let truncated = radius > PI / 2.0;
        if truncated {
            radius = PI / 2.0;
        }
        let mut ext = 0.0f64;
        let mut int_sup = 0.0f64;
        let mut inner = Vec::new();
        let mut front = 0.0f64;
        for (k, v) in diff.iter().enumerate() {
            let d = dist[k];
            if d > radius {
                ext = ext.max(v.abs());
            } else {
                int_sup = int_sup.max(v.abs());
                inner.push(*v);
            }
            if v.abs() > cfg.front_threshold {
                front = front.max(d);
            }
        }
        rows.push(ConeRow {
            t: *t,
            radius,
            exterior_sup: ext,
            interior_sup: int_sup,
            interior_lp: lp_norm_of(&inner, area, cfg.p)?,
            front_radius: front,
            bound_rhs: exterior_data_gap * (gradient_rate * t).exp(),
            truncated,
        });
    }
    let f0 = rows[0].front_radius;
    let front_speed = rows
        .iter()
        .skip(1)
        .map(|r| (r.front_radius - f0).max(0.0) / r.t)
        .fold(0.0, f64::max);
    let max_ratio = rows
        .iter()
        .map(|r| {
            if r.interior_sup > 0.0 {
                r.exterior_sup / r.interior_sup
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max);
    Ok(ConeReport {
        rows,
        c_star,
        front_speed,
        front_speed_bound: 2.0 * c_star + 3.0 * grid.h,
        max_ratio,
        gradient_rate,
        l2_velocity_diff: l2u,
        steps,
    })
}

fn l2_velocity_difference(a: &SpectralState, b: &SpectralState) -> f64 {
    let (ua, va) = a.velocity_hat();
    let (ub, vb) = b.velocity_hat();
    let w = 4.0 * PI * PI / (a.n as f64).powi(4);
    let s: f64 = (0..ua.len())
        .map(|i| (ua[i] - ub[i]).norm_sqr() + (va[i] - vb[i]).norm_sqr())
        .sum();
    (s * w).sqrt()
}

/// `max |∇u|` outside `B_δ`, from spectral derivatives.
fn exterior_gradient(s: &SpectralState, dist: &[f64], delta: f64) -> f64 {
    let (uh, vh) = s.velocity_hat();
    let mut d = [
        vec![Complex64::default(); uh.len()],
        vec![Complex64::default(); uh.len()],
        vec![Complex64::default(); uh.len()],
        vec![Complex64::default(); uh.len()],
    ];
    let i = Complex64::new(0.0, 1.0);
    for idx in 0..uh.len() {
        let (kx, ky) = s.fft.k_of(idx);
        d[0][idx] = i * kx * uh[idx];
        d[1][idx] = i * ky * uh[idx];
        d[2][idx] = i * kx * vh[idx];
        d[3][idx] = i * ky * vh[idx];
    }
    let (ux, uy) = s.fft.inverse_real_pair(&d[0], &d[1]);
    let (vx, vy) = s.fft.inverse_real_pair(&d[2], &d[3]);
    (0..ux.len())
        .into_par_iter()
        .filter(|&k| dist[k] > delta)
        .map(|k| (ux[k] * ux[k] + uy[k] * uy[k] + vx[k] * vx[k] + vy[k] * vy[k]).sqrt())
        .reduce(|| 0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GronwallRow {
    pub t: f64,
    pub diff: f64,
    pub bound: f64,
    pub held_out: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GronwallReport {
    pub k: f64,
    pub fitted: bool,
    pub trivial: bool,
    pub rows: Vec<GronwallRow>,
    pub pass: bool,
}

/// Smallest `K` with `d(t) ≤ d₀^{e^{−Kt}}` on the given rows.
fn fit_rate(series: &[(f64, f64)], d0: f64) -> f64 {
    let l0 = d0.ln();
    series
        .iter()
        .filter(|(t, _)| *t > 0.0)
        .map(|&(t, d)| if d <= 0.0 { 0.0 } else { (-(d.ln() / l0).ln() / t).max(0.0) })
        .fold(0.0, f64::max)
}

/// Held-out verification uses `FIT_MARGIN` times the fitted rate.
pub const FIT_MARGIN: f64 = 2.0;

/// Checks `d(t) ≤ d₀^{e^{−Kt}}`. With `k = None` the rate is fitted on the
/// first two thirds of the series and `FIT_MARGIN · K` is verified on the
/// rest.
pub fn gronwall_log_bound_check(series: &[(f64, f64)], k: Option<f64>) -> Result<GronwallReport> {
    let Some(&(_, d0)) = series.first() else {
        return domain("empty difference series");
    };
    if d0 >= 1.0 {
        return Err(Error::Precondition(format!("initial difference {d0} must be below 1")));
    }
    if d0 == 0.0 {
        let pass = series.iter().all(|(_, d)| *d == 0.0);
        let rows = series
            .iter()
            .map(|&(t, d)| GronwallRow {
                t,
                diff: d,
                bound: 0.0,
                held_out: false,
                pass: d == 0.0,
            })
            .collect();
        return Ok(GronwallReport {
            k: k.unwrap_or(0.0),
            fitted: k.is_none(),
            trivial: true,
            rows,
            pass,
        });
    }
    let split = (2 * series.len()).div_ceil(3);
    let (kk, fitted) = match k {
        Some(v) => (v, false),
        None => (FIT_MARGIN * fit_rate(&series[..split], d0), true),
    };
    let rows: Vec<GronwallRow> = series
        .iter()
        .enumerate()
        .map(|(i, &(t, d))| {
            let bound = d0.powf((-kk * t).exp());
            GronwallRow {
                t,
                diff: d,
                bound,
                held_out: fitted && i >= split,
                pass: d <= bound * (1.0 + 1e-12),
            }
        })
        .collect();
    let pass = rows.iter().all(|r| r.pass);
    Ok(GronwallReport {
        k: kk,
        fitted,
        trivial: false,
        rows,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_mode_is_equality() {
        let g = Grid2::torus(32);
        let f = ScalarField2D::from_fn(g, |x| (3.0 * x[0]).cos());
        for row in sobolev_interpolation_check(&f, 0.5, 3).unwrap() {
            assert!((row.lhs - row.rhs).abs() < 1e-12 * row.rhs);
            assert!(row.holds());
        }
    }

    #[test]
    fn zero_field_is_trivial() {
        let f = ScalarField2D::zeros(Grid2::torus(16));
        for row in sobolev_interpolation_check(&f, 1.0, 2).unwrap() {
            assert_eq!((row.lhs, row.rhs), (0.0, 0.0));
        }
    }

    #[test]
    fn random_fields_have_slack() {
        let s = interpolation_trials(50, 32, 8, &[0.5], 3, 3).unwrap();
        assert_eq!(s.violations, 0);
        assert!(s.min_rel_slack >= -INTERP_ROUNDING);
    }

    #[test]
    fn nyquist_content_is_rejected() {
        let g = Grid2::torus(16);
        let f = ScalarField2D::from_fn(g, |x| (8.0 * x[0]).cos());
        assert!(sobolev_interpolation_check(&f, 0.5, 2).is_err());
        let f = ScalarField2D::from_fn(g, |x| 1.0 + x[0].cos());
        assert!(matches!(sobolev_interpolation_check(&f, 0.5, 2), Err(Error::Precondition(_))));
    }

    #[test]
    fn members_differ_only_inside_the_ball() {
        let fam = RegularizedFamily::new(64, 1.0, 0.3, vec![0.4, 0.6]).unwrap();
        let (a, b) = (fam.member(0.4).unwrap(), fam.member(0.6).unwrap());
        let g = fam.grid();
        for k in 0..g.len() {
            if g.distance(g.node_of(k), fam.center) > 0.6 {
                assert!((a.data[k] - b.data[k]).abs() < 1e-11);
            }
        }
        assert!((a.mean() - b.mean()).abs() < 1e-14);
    }

    #[test]
    fn identical_regularizations_have_no_error() {
        let fam = RegularizedFamily::new(64, 1.0, 0.3, vec![0.4]).unwrap();
        let cfg = ConeConfig {
            t_final: 0.1,
            monitor_every: 0.05,
            delta: 0.4,
            ..Default::default()
        };
        let r = light_cone_experiment(&fam, 0.4, 0.4, &cfg).unwrap();
        assert!(r.rows.iter().all(|row| row.exterior_sup == 0.0 && row.interior_sup == 0.0));
    }

    #[test]
    fn gronwall_controls() {
        let same: Vec<(f64, f64)> = (0..5).map(|i| (i as f64 * 0.1, 0.0)).collect();
        let r = gronwall_log_bound_check(&same, None).unwrap();
        assert!(r.trivial && r.pass);
        let grow: Vec<(f64, f64)> = (0..11)
            .map(|i| {
                let t = i as f64 * 0.1;
                (t, 1e-3f64.powf((-0.8 * t).exp()))
            })
            .collect();
        let r = gronwall_log_bound_check(&grow, None).unwrap();
        assert!(r.pass && (r.k - FIT_MARGIN * 0.8).abs() < 1e-9);
        let r = gronwall_log_bound_check(&grow, Some(0.8)).unwrap();
        assert!(r.pass && !r.fitted);
        // A sharp early drop, played backwards, jumps past any envelope fitted on the flat part.
        let drop: Vec<(f64, f64)> = (0..11).map(|i| (i as f64 * 0.1, if i == 0 { 0.1 } else { 0.01 })).collect();
        let reversed: Vec<(f64, f64)> = drop.iter().zip(drop.iter().rev()).map(|(a, b)| (a.0, b.1)).collect();
        assert!(!gronwall_log_bound_check(&reversed, None).unwrap().pass);
        assert!(gronwall_log_bound_check(&[(0.0, 1.5)], None).is_err());
    }
}
