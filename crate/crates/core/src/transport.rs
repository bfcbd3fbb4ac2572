//! Semi-Lagrangian linear transport `θ(x, t) = θ₀(φ⁻¹(x, t))`, extraction of
//! the remainder `b = θ − γ F(M(|x − φ(x₀, t)|))`, and the associated
//! seminorm and sharpness experiments.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::field::{norm, sub, Grid2, Point, ScalarField2D};
use crate::flow::{flow_point, inverse_flow_cfg, VelocityField};
use crate::modulus::{GrowthFactor, ModulusSpec};
use crate::ode::OdeConfig;
use crate::profile::{smooth_cutoff, SingularProfile};
use crate::seminorm::{local_seminorm, SeminormTable};

/// Bounded part of the initial data.
#[derive(Debug, Clone)]
pub enum Background {
    Zero,
    Gaussian {
        center: Point,
        amplitude: f64,
        width: f64,
    },
    /// `amplitude · χ(|x − center|)` with a `C^∞` cutoff equal to 1 on half the radius.
    Patch {
        center: Point,
        radius: f64,
        amplitude: f64,
    },
    /// `sgn(x₁) sgn(x₂)`.
    Sign,
    Sampled(ScalarField2D),
}

impl Background {
    pub fn eval(&self, x: Point) -> f64 {
        match self {
            Background::Zero => 0.0,
            Background::Gaussian {
                center,
                amplitude,
                width,
            } => {
                let d = sub(x, *center);
                amplitude * (-(d[0] * d[0] + d[1] * d[1]) / (width * width)).exp()
            }
            Background::Patch {
                center,
                radius,
                amplitude,
            } => amplitude * smooth_cutoff(norm(sub(x, *center)), 0.5 * radius, *radius),
            Background::Sign => sgn(x[0]) * sgn(x[1]),
            Background::Sampled(f) => f.sample_cubic(x),
        }
    }
}

fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `θ₀ = profile + background`, evaluated pointwise.
#[derive(Debug, Clone)]
pub struct InitialData {
    pub profile: Option<SingularProfile>,
    pub background: Background,
}

impl InitialData {
    pub fn eval(&self, x: Point) -> f64 {
        self.profile.as_ref().map_or(0.0, |p| p.eval(x)) + self.background.eval(x)
    }

    /// `b₀ = θ₀ − γ F(M(|x − x₀|))` (undefined at `x₀`).
    pub fn remainder(&self, x: Point) -> f64 {
        match &self.profile {
            Some(p) => self.eval(x) - p.singular_part(norm(sub(x, p.center))),
            None => self.eval(x),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TransportSolution {
    pub field: ScalarField2D,
    pub time: f64,
    /// Nodes whose back-trajectory failed; their value is copied from a neighbor.
    pub failed_nodes: usize,
    pub evaluations: usize,
}

/// Integrator settings for back-trajectories on a grid of spacing `h`:
/// absolute tolerance tied to the cell size.
pub fn transport_ode_config(h: f64, rtol: f64) -> OdeConfig {
    OdeConfig::with_tols((1e-4 * h).min(rtol), rtol)
}

/// Semi-Lagrangian solve on `grid`: every node is traced back to time 0 and
/// the initial data is evaluated there.
pub fn solve_transport(
    u: &VelocityField,
    theta0: &InitialData,
    t: f64,
    grid: Grid2,
    cfg: &OdeConfig,
) -> Result<TransportSolution> {
    let results: Vec<Option<(f64, usize)>> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let x = grid.node_of(k);
            if t == 0.0 {
                return Some((theta0.eval(x), 0));
            }
            ode_back(u, x, t, cfg).ok().map(|(y, ev)| (theta0.eval(y), ev))
        })
        .collect();
    let failed_nodes = results.iter().filter(|r| r.is_none()).count();
    if failed_nodes == grid.len() {
        return Err(Error::Numeric("every back-trajectory failed".into()));
    }
    let evaluations = results.iter().flatten().map(|r| r.1).sum();
    let mut data: Vec<f64> = results.iter().map(|r| r.map_or(f64::NAN, |v| v.0)).collect();
    if failed_nodes > 0 {
        let snapshot = data.clone();
        for (k, v) in data.iter_mut().enumerate() {
            if v.is_nan() {
                *v = nearest_valid(&grid, &snapshot, k);
            }
        }
    }
    Ok(TransportSolution {
        field: ScalarField2D::from_data(grid, data)?,
        time: t,
        failed_nodes,
        evaluations,
    })
}

fn ode_back(u: &VelocityField, x: Point, t: f64, cfg: &OdeConfig) -> Result<(Point, usize)> {
    let (y, stats) = crate::ode::integrate_endpoint(|s, p| u.eval(s, p), t, x, 0.0, cfg)?;
    Ok((y, stats.evaluations))
}

fn nearest_valid(grid: &Grid2, data: &[f64], k: usize) -> f64 {
    let (i0, j0) = ((k % grid.nx) as isize, (k / grid.nx) as isize);
    for ring in 1..grid.nx.max(grid.ny) as isize {
        let mut best: Option<(isize, f64)> = None;
        for dj in -ring..=ring {
            for di in -ring..=ring {
                if di.abs().max(dj.abs()) != ring {
                    continue;
                }
                let (i, j) = (i0 + di, j0 + dj);
                if i < 0 || j < 0 || i >= grid.nx as isize || j >= grid.ny as isize {
                    continue;
                }
                let v = data[j as usize * grid.nx + i as usize];
                let d2 = di * di + dj * dj;
                if !v.is_nan() && best.is_none_or(|b| d2 < b.0) {
                    best = Some((d2, v));
                }
            }
        }
        if let Some((_, v)) = best {
            return v;
        }
    }
    f64::NAN
}

/// `R⁻¹(R(r) / μ)`: the radius whose preimage ball stays inside `B_r`.
pub fn valid_radius(spec: &ModulusSpec, r: f64, mu: f64) -> Result<f64> {
    spec.eval_r_inv(spec.eval_r(r)? / mu)
}

/// Largest `r` with `M(r) > 1` and `M(R⁻¹(μ R(r))) > 1`, shrunk by `safety`.
pub fn select_r0(spec: &ModulusSpec, mu: f64, safety: f64) -> Result<f64> {
    let target = (-1.0f64).exp() / mu;
    let r = spec.eval_r_inv(target)?;
    Ok(r * safety)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemainderRecord {
    pub t: f64,
    pub r: f64,
    pub r_valid: f64,
    pub h: f64,
    /// Nodes closer than this to the transported center are skipped.
    pub excluded_radius: f64,
    pub nodes: usize,
    pub sup_b: f64,
    pub b0_sup: f64,
    pub lint: f64,
    pub slope: f64,
    pub bound: f64,
    pub margin: f64,
    pub sign_changes: usize,
}

impl RemainderRecord {
    /// `sup|b| ≤ (‖b₀‖ + [F] lint)` with relative slack `rel`.
    pub fn holds(&self, rel: f64) -> bool {
        self.sup_b <= self.b0_sup + self.slope * self.lint * (1.0 + rel) + 1e-12
    }
}

/// `sup |b₀|` over `B_r(x₀)` sampled on an `n × n` window around `x₀`.
pub fn initial_remainder_sup(theta0: &InitialData, r: f64, n: usize) -> Result<f64> {
    let p = theta0
        .profile
        .as_ref()
        .ok_or_else(|| Error::Precondition("initial data has no singular profile".into()))?;
    let g = Grid2::window_staggered(p.center, r, n);
    let sup = (0..g.len())
        .into_par_iter()
        .map(|k| {
            let x = g.node_of(k);
            if norm(sub(x, p.center)) < r {
                theta0.remainder(x).abs()
            } else {
                0.0
            }
        })
        .reduce(|| 0.0f64, f64::max);
    Ok(sup)
}

/// Remainder on `B_{r_valid}(center_t)` from a transported field laid out on a
/// window around `center_t`.
pub fn extract_remainder(
    theta: &ScalarField2D,
    theta0: &InitialData,
    center_t: Point,
    mu: &GrowthFactor,
    r: f64,
) -> Result<(Vec<(Point, f64)>, RemainderRecord)> {
    let p = theta0
        .profile
        .as_ref()
        .ok_or_else(|| Error::Precondition("initial data has no singular profile".into()))?;
    let spec = &p.modulus;
    let g = theta.grid;
    let r_valid = valid_radius(spec, r, mu.mu)?;
    if r_valid < 8.0 * g.h {
        return Err(Error::Resolution(format!(
            "valid radius {r_valid:.3e} spans fewer than 8 cells (h = {:.3e})",
            g.h
        )));
    }
    let excluded = 2.0 * g.h;
    let b: Vec<(Point, f64)> = (0..g.len())
        .filter_map(|k| {
            let x = g.node_of(k);
            let d = g.distance(x, center_t);
            (d >= excluded && d < r_valid).then(|| (x, theta.data[k] - p.singular_part(d)))
        })
        .collect();
    if b.is_empty() {
        return Err(Error::Resolution("valid ball contains no grid nodes".into()));
    }
    let sup_b = b.iter().fold(0.0f64, |m, v| m.max(v.1.abs()));
    let b0_sup = initial_remainder_sup(theta0, r, 256)?;
    let slope = p.shape.slope_bound();
    let bound = b0_sup + slope * mu.lint;
    // Sign changes of θ along the ray from the center in the +x₁ direction.
    let mut ray: Vec<(f64, f64)> = (0..g.len())
        .filter_map(|k| {
            let x = g.node_of(k);
            let d = sub(x, center_t);
            (d[1].abs() < 0.5 * g.h && d[0] >= excluded && d[0] < r_valid).then(|| (d[0], theta.data[k]))
        })
        .collect();
    ray.sort_by(|a, b| a.0.total_cmp(&b.0));
    let sign_changes = ray.windows(2).filter(|w| w[0].1 * w[1].1 < 0.0).count();
    let rec = RemainderRecord {
        t: mu.t,
        r,
        r_valid,
        h: g.h,
        excluded_radius: excluded,
        nodes: b.len(),
        sup_b,
        b0_sup,
        lint: mu.lint,
        slope,
        bound,
        margin: bound - sup_b,
        sign_changes,
    };
    Ok((b, rec))
}

/// End-to-end remainder check: choose `r₀`, lay an `n × n` window over the
/// valid ball around `φ(x₀, t)`, transport and extract.
pub fn remainder_experiment(u: &VelocityField, theta0: &InitialData, t: f64, n: usize, rtol: f64) -> Result<RemainderRecord> {
    Ok(remainder_run(u, theta0, t, n, rtol)?.1)
}

/// Same as [`remainder_experiment`], also returning the transported window.
pub fn remainder_run(
    u: &VelocityField,
    theta0: &InitialData,
    t: f64,
    n: usize,
    rtol: f64,
) -> Result<(TransportSolution, RemainderRecord)> {
    let p = theta0
        .profile
        .as_ref()
        .ok_or_else(|| Error::Precondition("initial data has no singular profile".into()))?;
    let bound = u
        .modulus_bound
        .as_ref()
        .ok_or_else(|| Error::Precondition("velocity field carries no modulus bound".into()))?;
    let mu = bound.growth(t)?;
    let r = select_r0(&p.modulus, mu.mu, 0.999)?.min(p.taper_start);
    let r_valid = valid_radius(&p.modulus, r, mu.mu)?;
    let cfg_center = OdeConfig::with_tols(1e-6 * r_valid.min(1.0), rtol);
    let (center_t, _) = flow_point(u, p.center, t, &cfg_center)?;
    let grid = Grid2::window(center_t, r_valid, n);
    let sol = solve_transport(u, theta0, t, grid, &transport_ode_config(grid.h, rtol))?;
    let (_, rec) = extract_remainder(&sol.field, theta0, center_t, &mu, r)?;
    Ok((sol, rec))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeminormComparison {
    pub initial: SeminormTable,
    pub transported: SeminormTable,
    /// Radii of the initial table: `R⁻¹(μ R(r))` for each transported radius.
    pub mapped_radii: Vec<f64>,
    /// `(1 ∓ log μ / M(r))^γ` bracket per radius.
    pub bracket: Vec<(f64, f64)>,
    /// `value_t(r_min) / value_0(mapped r_min)`.
    pub agreement: f64,
}

/// Local seminorm of `θ₀` at `x₀` and of `θ(t)` at `φ(x₀, t)`, each on an
/// `n × n` window; initial radii are `R⁻¹(μ R(r))`.
pub fn seminorm_transport_check(
    u: &VelocityField,
    spec: &ModulusSpec,
    theta0: &InitialData,
    x0: Point,
    gamma: f64,
    t: f64,
    radii: &[f64],
    n: usize,
    rtol: f64,
) -> Result<SeminormComparison> {
    let bound = u
        .modulus_bound
        .as_ref()
        .ok_or_else(|| Error::Precondition("velocity field carries no modulus bound".into()))?;
    let mu = bound.growth(t)?;
    let mapped: Vec<f64> = radii
        .iter()
        .map(|&r| spec.eval_r_inv((spec.eval_r(r)? * mu.mu).min(spec.eval_r(spec.m_l())? * (1.0 - 1e-12))))
        .collect::<Result<_>>()?;
    let half0 = mapped[0] * 1.05;
    let g0 = Grid2::window(x0, half0, n);
    let mut f0 = ScalarField2D::from_fn(g0, |x| theta0.eval(x));
    let (ci, cj) = g0.nearest_node(x0);
    let c0 = g0.index(ci, cj);
    f0.data[c0] = theta0.eval(x0);
    // Initial radii below two cells are clamped to the resolution limit.
    let r0_radii: Vec<f64> = clamp_radii(&mapped, 2.0 * g0.h);
    let initial = local_seminorm(&f0, spec, x0, gamma, &r0_radii)?;

    let (center_t, _) = flow_point(u, x0, t, &OdeConfig::with_tols(1e-14, rtol))?;
    let half = radii[0] * 1.05;
    let g = Grid2::window(center_t, half, n);
    let mut sol = solve_transport(u, theta0, t, g, &transport_ode_config(g.h, rtol))?;
    // θ(φ(x₀, t), t) = θ₀(x₀) exactly.
    let (ci, cj) = g.nearest_node(center_t);
    let c = g.index(ci, cj);
    sol.field.data[c] = theta0.eval(x0);
    let transported = local_seminorm(&sol.field, spec, center_t, gamma, radii)?;
    let bracket = radii
        .iter()
        .map(|&r| {
            let q = mu.lint / spec.eval_m(r)?;
            Ok(((1.0 - q).max(0.0).powf(gamma), (1.0 + q).powf(gamma)))
        })
        .collect::<Result<Vec<_>>>()?;
    let agreement = transported.values.last().copied().unwrap_or(0.0) / initial.values.last().copied().unwrap_or(f64::NAN);
    Ok(SeminormComparison {
        initial,
        transported,
        mapped_radii: mapped,
        bracket,
        agreement,
    })
}

fn clamp_radii(r: &[f64], floor: f64) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for &v in r {
        let v = v.max(floor);
        if out.last().is_none_or(|&l| v < l) {
            out.push(v);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SharpnessKind {
    LipschitzSuperlinear,
    LoglipschitzSuperlinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharpnessRow {
    pub r: f64,
    pub log_inv_r: f64,
    pub m: f64,
    pub sup_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessTable {
    pub rows: Vec<SharpnessRow>,
    /// Least-squares slope of `sup|b|` against `M(r)`.
    pub slope: f64,
    pub intercept: f64,
    /// `min_r sup|b| / M(r)`.
    pub min_ratio: f64,
}

impl SharpnessTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,log_inv_r,M,sup_b\n");
        for r in &self.rows {
            s.push_str(&format!("{:.10e},{:.10e},{:.10e},{:.10e}\n", r.r, r.log_inv_r, r.m, r.sup_b));
        }
        s
    }
}

/// Least-squares line `y = a x + b`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let a = sxy / sxx;
    (a, my - a * mx)
}

/// `sup |b|` on dyadic annuli `r ≤ |x − φ(x₀,t)| < 2r` for a profile at `x₀`,
/// sampled on `rings` circles per annulus and `angles` directions.
pub fn annulus_remainder(
    u: &VelocityField,
    theta0: &InitialData,
    t: f64,
    radii: &[f64],
    rings: usize,
    angles: usize,
    rtol: f64,
) -> Result<Vec<SharpnessRow>> {
    let p = theta0
        .profile
        .as_ref()
        .ok_or_else(|| Error::Precondition("initial data has no singular profile".into()))?;
    let rmin = radii.iter().copied().fold(f64::INFINITY, f64::min);
    let cfg = OdeConfig::with_tols(1e-6 * rmin, rtol);
    let (center_t, _) = flow_point(u, p.center, t, &cfg)?;
    radii
        .iter()
        .map(|&r| {
            let pts: Vec<Point> = (0..rings)
                .flat_map(|i| {
                    let rho = r * 2f64.powf(i as f64 / rings as f64);
                    (0..angles).map(move |a| {
                        let th = 2.0 * PI * a as f64 / angles as f64;
                        [center_t[0] + rho * th.cos(), center_t[1] + rho * th.sin()]
                    })
                })
                .collect();
            let sup_b = pts
                .par_iter()
                .map(|&x| -> Result<f64> {
                    let y = inverse_flow_cfg(u, x, t, &cfg)?;
                    Ok((theta0.eval(y) - p.singular_part(norm(sub(x, center_t)))).abs())
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            Ok(SharpnessRow {
                r,
                log_inv_r: (1.0 / r).ln(),
                m: p.modulus.eval_m(r)?,
                sup_b,
            })
        })
        .collect()
}

/// Divergence of the remainder for superlinear `F`.
pub fn sharpness_experiment(u: &VelocityField, theta0: &InitialData, t: f64, radii: &[f64], rtol: f64) -> Result<SharpnessTable> {
    if radii.len() < 2 {
        return domain("sharpness fit needs at least two radii");
    }
    let rows = annulus_remainder(u, theta0, t, radii, 4, 512, rtol)?;
    let xs: Vec<f64> = rows.iter().map(|r| r.m).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.sup_b).collect();
    let (slope, intercept) = linear_fit(&xs, &ys);
    let min_ratio = rows.iter().map(|r| r.sup_b / r.m).fold(f64::INFINITY, f64::min);
    Ok(SharpnessTable {
        rows,
        slope,
        intercept,
        min_ratio,
    })
}
