//! Discrete Lᵖ and Yudovich norms, singularity seminorms
//! `[f]_{x,γ,L} = lim_{r→0} sup_{0<|x−y|<r} |f(x) − f(y)| / M(|x − y|)^γ`,
//! and quadrature of `‖log_n(1/|·|)‖_{L^p(B_1)}`.

use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::field::{deterministic_sum, Point, ScalarField2D};
use crate::modulus::{iterated_log, iterated_log_plus, ModulusSpec};
use crate::quad::{integrate_log_domain, QuadConfig};

/// Integration region for [`lp_norm`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Full,
    Disk { center: Point, radius: f64 },
}

fn region_values(field: &ScalarField2D, region: Region) -> Result<Vec<f64>> {
    let g = &field.grid;
    match region {
        Region::Full => Ok(field.data.clone()),
        Region::Disk { center, radius } => {
            if !(radius > 0.0) {
                return domain(format!("disk radius must be positive, got {radius}"));
            }
            if !g.periodic {
                let corners = [
                    [center[0] - radius, center[1] - radius],
                    [center[0] + radius, center[1] + radius],
                ];
                if !corners.iter().all(|c| g.contains(*c)) {
                    return domain("disk extends past the grid");
                }
            }
            let v: Vec<f64> = (0..g.len())
                .filter(|&k| g.distance(g.node_of(k), center) < radius)
                .map(|k| field.data[k])
                .collect();
            if v.is_empty() {
                return domain("disk contains no grid nodes");
            }
            Ok(v)
        }
    }
}

/// `(Σ |v|^p · cell_area)^{1/p}`; `p = ∞` gives `max |v|`. The sum is scaled
/// by the maximum so large `p` does not overflow.
pub fn lp_norm_of(values: &[f64], cell_area: f64, p: f64) -> Result<f64> {
    if values.is_empty() {
        return domain("Lp norm of an empty sample set");
    }
    if !(p >= 1.0) {
        return domain(format!("Lp exponent must be >= 1, got {p}"));
    }
    let top = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !top.is_finite() {
        return Err(Error::Numeric("non-finite sample in Lp norm".into()));
    }
    if p.is_infinite() || top == 0.0 {
        return Ok(top);
    }
    let scaled: Vec<f64> = values.iter().map(|v| (v.abs() / top).powf(p)).collect();
    let s = deterministic_sum(&scaled) * cell_area;
    Ok(top * s.powf(1.0 / p))
}

/// Midpoint-rule `‖f‖_{L^p(region)}`.
pub fn lp_norm(field: &ScalarField2D, p: f64, region: Region) -> Result<f64> {
    let v = region_values(field, region)?;
    lp_norm_of(&v, field.grid.cell_area(), p)
}

/// Growth function in the Yudovich norm `sup_p ‖f‖_p / Θ(p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theta {
    One,
    /// `log_k(p)`; `k = 0` is `Θ(p) = p`.
    IterLog(u32),
    /// `log p · log log p`.
    LogTimesLogLog,
}

impl Theta {
    pub fn eval(&self, p: f64) -> Result<f64> {
        match self {
            Theta::One => Ok(1.0),
            Theta::IterLog(k) => iterated_log(*k, p),
            Theta::LogTimesLogLog => Ok(iterated_log(1, p)? * iterated_log(2, p)?),
        }
    }

    /// Parses `1`, `p`, `log`, `loglog`, `log_k`/`log<k>` or `log*loglog`.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "1" | "one" | "const" => Ok(Theta::One),
            "p" => Ok(Theta::IterLog(0)),
            "log" => Ok(Theta::IterLog(1)),
            "loglog" => Ok(Theta::IterLog(2)),
            "log*loglog" | "logloglog-product" => Ok(Theta::LogTimesLogLog),
            _ => {
                let k = t
                    .strip_prefix("log_")
                    .or_else(|| t.strip_prefix("log"))
                    .and_then(|k| k.parse::<u32>().ok())
                    .ok_or_else(|| Error::Parse(format!("unknown theta {s:?}")))?;
                Ok(Theta::IterLog(k))
            }
        }
    }
}

impl fmt::Display for Theta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Theta::One => write!(f, "1"),
            Theta::IterLog(0) => write!(f, "p"),
            Theta::IterLog(1) => write!(f, "log"),
            Theta::IterLog(k) => write!(f, "log_{k}"),
            Theta::LogTimesLogLog => write!(f, "log*loglog"),
        }
    }
}

/// Relative growth per doubling of `p` above which a ratio sequence is
/// considered still increasing.
pub const GROWTH_PER_DOUBLING: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub p_grid: Vec<f64>,
    pub lp_values: Vec<f64>,
    pub theta_name: String,
    pub ratios: Vec<f64>,
    pub yudovich_ratio: f64,
    pub argmax_p: f64,
    /// Ratio still increasing at the largest `p`: membership inconclusive.
    pub still_growing: bool,
}

/// Growth of `ratios[last]` over `ratios[last-1]`, normalized per doubling of `p`.
pub fn growth_per_doubling(p: &[f64], ratios: &[f64]) -> Option<f64> {
    let n = ratios.len();
    if n < 2 || ratios[n - 2] <= 0.0 {
        return None;
    }
    let doublings = (p[n - 1] / p[n - 2]).log2();
    Some((ratios[n - 1] / ratios[n - 2]).powf(1.0 / doublings) - 1.0)
}

/// Builds a [`NormReport`] from precomputed norms.
pub fn yudovich_from_values(p_grid: &[f64], lp_values: &[f64], theta: Theta) -> Result<NormReport> {
    if p_grid.is_empty() || p_grid.len() != lp_values.len() {
        return domain("p grid and norm list must be non-empty and of equal length");
    }
    if p_grid.windows(2).any(|w| !(w[1] > w[0])) || !(p_grid[0] >= 1.0) {
        return domain("p grid must be increasing and start at p >= 1");
    }
    let mut ratios = Vec::with_capacity(p_grid.len());
    for (&p, &v) in p_grid.iter().zip(lp_values) {
        let th = theta.eval(p)?;
        if !(th > 0.0) {
            return domain(format!("Θ({p}) = {th} is not positive"));
        }
        ratios.push(v / th);
    }
    let (imax, &rmax) = ratios
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    let still_growing = growth_per_doubling(p_grid, &ratios).is_some_and(|g| g > GROWTH_PER_DOUBLING);
    Ok(NormReport {
        p_grid: p_grid.to_vec(),
        lp_values: lp_values.to_vec(),
        theta_name: theta.to_string(),
        ratios,
        yudovich_ratio: rmax,
        argmax_p: p_grid[imax],
        still_growing,
    })
}

pub fn yudovich_norm(field: &ScalarField2D, theta: Theta, p_grid: &[f64], region: Region) -> Result<NormReport> {
    let v = region_values(field, region)?;
    let lp = p_grid
        .iter()
        .map(|&p| lp_norm_of(&v, field.grid.cell_area(), p))
        .collect::<Result<Vec<_>>>()?;
    yudovich_from_values(p_grid, &lp, theta)
}

/// Dyadic exponents `2, 4, …, p_max`.
pub fn dyadic_p_grid(p_max: f64) -> Vec<f64> {
    let mut v = Vec::new();
    let mut p = 2.0;
    while p <= p_max * (1.0 + 1e-12) {
        v.push(p);
        p *= 2.0;
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    /// Last three values agree within [`CONVERGENCE_SPREAD`].
    Converged,
    /// Values decay like a positive power of the radius: limit 0.
    Vanishing,
    Diverging,
    Oscillating,
}

impl fmt::Display for Trend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Trend::Converged => "converged",
            Trend::Vanishing => "vanishing",
            Trend::Diverging => "diverging",
            Trend::Oscillating => "oscillating",
        };
        f.write_str(s)
    }
}

pub const CONVERGENCE_SPREAD: f64 = 0.02;
/// Minimum log-log slope of value against radius for a `Vanishing` verdict.
pub const VANISHING_SLOPE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeminormTable {
    /// `None` for the global seminorm.
    pub center: Option<Point>,
    pub gamma: f64,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub limit: f64,
    pub trend: Trend,
}

impl SeminormTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,value\n");
        for (r, v) in self.radii.iter().zip(&self.values) {
            s.push_str(&format!("{r:.10e},{v:.10e}\n"));
        }
        s
    }
}

/// Limit estimate from values at decreasing radii.
pub fn extrapolate(radii: &[f64], values: &[f64]) -> (f64, Trend) {
    let n = values.len();
    let last = values[n - 1];
    if n < 3 {
        return (last, Trend::Oscillating);
    }
    let tail = &values[n - 3..];
    let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
    if hi == 0.0 {
        return (0.0, Trend::Converged);
    }
    if lo > 0.0 && hi / lo - 1.0 < CONVERGENCE_SPREAD {
        return (last, Trend::Converged);
    }
    let decreasing = tail.windows(2).all(|w| w[1] < w[0]);
    let increasing = tail.windows(2).all(|w| w[1] > w[0]);
    if decreasing && lo > 0.0 {
        let rt = &radii[n - 3..];
        let slope = (tail[0] / tail[2]).ln() / (rt[0] / rt[2]).ln();
        if slope >= VANISHING_SLOPE {
            return (0.0, Trend::Vanishing);
        }
    }
    if increasing {
        return (f64::INFINITY, Trend::Diverging);
    }
    (last, Trend::Oscillating)
}

fn check_radii(radii: &[f64], spec: &ModulusSpec, h: f64) -> Result<()> {
    if radii.is_empty() {
        return domain("seminorm needs at least one radius");
    }
    if radii.windows(2).any(|w| !(w[1] < w[0])) {
        return domain("seminorm radii must be strictly decreasing");
    }
    if !(radii[0] < spec.m_l()) {
        return domain(format!("radius {} is not below m_L = {}", radii[0], spec.m_l()));
    }
    let rmin = radii[radii.len() - 1];
    if rmin < 2.0 * h {
        return Err(Error::Resolution(format!(
            "smallest radius {rmin:.3e} spans fewer than 4 cells (h = {h:.3e})"
        )));
    }
    Ok(())
}

#[inline]
fn finite_or_zero(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

/// Sorted `(distance, quotient)` list reduced to per-radius maxima.
fn sup_by_radius(mut pairs: Vec<(f64, f64)>, radii: &[f64]) -> Vec<f64> {
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut run = 0.0f64;
    let prefix: Vec<f64> = pairs
        .iter()
        .map(|p| {
            run = run.max(p.1);
            run
        })
        .collect();
    radii
        .iter()
        .map(|&r| {
            let k = pairs.partition_point(|p| p.0 < r);
            if k == 0 {
                0.0
            } else {
                prefix[k - 1]
            }
        })
        .collect()
}

/// Localized seminorm at `x`. The value at `x` is the field value at the
/// nearest node, with non-finite values read as 0. Pairs closer than two
/// cells are skipped.
pub fn local_seminorm(field: &ScalarField2D, spec: &ModulusSpec, x: Point, gamma: f64, radii: &[f64]) -> Result<SeminormTable> {
    let g = field.grid;
    check_radii(radii, spec, g.h)?;
    let rmax = radii[0];
    if !g.periodic {
        for c in [[x[0] - rmax, x[1] - rmax], [x[0] + rmax, x[1] + rmax]] {
            if !g.contains(c) {
                return domain("seminorm ball extends past the grid");
            }
        }
    }
    let (ci, cj) = g.nearest_node(x);
    let fx = finite_or_zero(field.at(ci, cj));
    let xc = g.node(ci, cj);
    let reach = (rmax / g.h).ceil() as isize + 1;
    let pairs: Vec<(f64, f64)> = (-reach..=reach)
        .into_par_iter()
        .flat_map_iter(|dj| {
            let g = &g;
            (-reach..=reach).filter_map(move |di| {
                let d = g.h * ((di * di + dj * dj) as f64).sqrt();
                if d < 2.0 * g.h * (1.0 - 1e-12) || d >= rmax {
                    return None;
                }
                let (i, j) = (ci as isize + di, cj as isize + dj);
                let (i, j) = if g.periodic {
                    (i.rem_euclid(g.nx as isize) as usize, j.rem_euclid(g.ny as isize) as usize)
                } else {
                    if i < 0 || j < 0 || i >= g.nx as isize || j >= g.ny as isize {
                        return None;
                    }
                    (i as usize, j as usize)
                };
                Some((d, (i, j)))
            })
        })
        .map(|(d, (i, j))| {
            let m = spec.eval_m(d).expect("radius below m_L");
            let q = (finite_or_zero(field.at(i, j)) - fx).abs() / m.powf(gamma);
            (d, q)
        })
        .collect();
    let values = sup_by_radius(pairs, radii);
    let (limit, trend) = extrapolate(radii, &values);
    Ok(SeminormTable {
        center: Some(xc),
        gamma,
        radii: radii.to_vec(),
        values,
        limit,
        trend,
    })
}

/// Global seminorm: sup over all node pairs with `2h ≤ |x − y| < r`.
pub fn global_seminorm(field: &ScalarField2D, spec: &ModulusSpec, gamma: f64, radii: &[f64]) -> Result<SeminormTable> {
    let g = field.grid;
    check_radii(radii, spec, g.h)?;
    let rmax = radii[0];
    let reach = (rmax / g.h).ceil() as isize + 1;
    // Half-plane offsets: each unordered pair is visited once.
    let mut offsets: Vec<(isize, isize, f64, f64)> = Vec::new();
    for dj in 0..=reach {
        for di in -reach..=reach {
            if dj == 0 && di <= 0 {
                continue;
            }
            let d = g.h * ((di * di + dj * dj) as f64).sqrt();
            if d < 2.0 * g.h * (1.0 - 1e-12) || d >= rmax {
                continue;
            }
            offsets.push((di, dj, d, spec.eval_m(d)?.powf(gamma)));
        }
    }
    offsets.sort_by(|a, b| a.2.total_cmp(&b.2));
    let bins: Vec<usize> = radii.iter().map(|&r| offsets.partition_point(|o| o.2 < r)).collect();
    let vals: Vec<f64> = field.data.iter().map(|&v| finite_or_zero(v)).collect();
    let per_node: Vec<Vec<f64>> = (0..g.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = ((k % g.nx) as isize, (k / g.nx) as isize);
            let f0 = vals[k];
            let mut best = vec![0.0f64; offsets.len()];
            let mut run = 0.0f64;
            for (o, b) in offsets.iter().zip(best.iter_mut()) {
                let (mut a, mut c) = (i + o.0, j + o.1);
                if g.periodic {
                    a = a.rem_euclid(g.nx as isize);
                    c = c.rem_euclid(g.ny as isize);
                } else if a < 0 || c < 0 || a >= g.nx as isize || c >= g.ny as isize {
                    *b = run;
                    continue;
                }
                let q = (vals[c as usize * g.nx + a as usize] - f0).abs() / o.3;
                run = run.max(q);
                *b = run;
            }
            bins.iter().map(|&n| if n == 0 { 0.0 } else { best[n - 1] }).collect()
        })
        .collect();
    let values: Vec<f64> = (0..radii.len())
        .map(|r| per_node.iter().fold(0.0f64, |m, v| m.max(v[r])))
        .collect();
    let (limit, trend) = extrapolate(radii, &values);
    Ok(SeminormTable {
        center: None,
        gamma,
        radii: radii.to_vec(),
        values,
        limit,
        trend,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaRow {
    pub p: f64,
    pub norm: f64,
    pub theta: f64,
    pub ratio: f64,
}

/// Natural log of `∫_{B_1} |log_n^+(1/|x|)|^p dx`, computed in the variable
/// `s = log(1/r)` where the integrand is `2π |log_{n−1}^+(s)|^p e^{−2s}`.
pub fn log_iterated_log_integral(n: u32, p: f64) -> Result<f64> {
    if n == 0 {
        return domain("iterated log order must be >= 1");
    }
    if !(p >= 1.0 && p.is_finite()) {
        return domain(format!("exponent must be finite and >= 1, got {p}"));
    }
    // log_{n-1}^+(s) vanishes below e_{n-2}(1).
    let s0 = if n == 1 {
        0.0
    } else {
        crate::modulus::iterated_exp(n - 2, 1.0)?
    };
    let s1 = s0 + 2.0 * p + 200.0;
    let log_f = |s: f64| {
        let l = iterated_log_plus(n - 1, s);
        if l > 0.0 {
            p * l.ln() - 2.0 * s
        } else {
            f64::NEG_INFINITY
        }
    };
    let li = integrate_log_domain(log_f, s0, s1, 8000, QuadConfig::rel(1e-11))?;
    Ok((2.0 * PI).ln() + li)
}

/// `‖log_n^+(1/|·|)‖_{L^p(B_1)}` by log-domain quadrature.
pub fn iterated_log_lp_norm(n: u32, p: f64) -> Result<f64> {
    let v = (log_iterated_log_integral(n, p)? / p).exp();
    if !v.is_finite() {
        return Err(Error::Numeric(format!("norm overflow at n = {n}, p = {p}")));
    }
    Ok(v)
}

/// Norms of `log_n(1/|x|)` on the unit disk and their ratios to `log_{n−1}(p)`.
pub fn iterated_log_lp_growth(n: u32, p_grid: &[f64]) -> Result<Vec<LemmaRow>> {
    p_grid
        .iter()
        .map(|&p| {
            if !(2.0..=1024.0).contains(&p) {
                return domain(format!("lemma exponents must lie in [2, 1024], got {p}"));
            }
            let norm = iterated_log_lp_norm(n, p)?;
            let theta = iterated_log(n - 1, p)?;
            Ok(LemmaRow {
                p,
                norm,
                theta,
                ratio: norm / theta,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gamma_fn_int(n: u32) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    #[test]
    fn constant_and_indicator() {
        let g = Grid2::periodic_square(64, 1.0);
        let c = ScalarField2D::from_fn(g, |_| -3.5);
        for p in [1.0, 2.0, 7.0, f64::INFINITY] {
            assert!((lp_norm(&c, p, Region::Full).unwrap() - 3.5).abs() < 1e-12);
        }
        let ind = ScalarField2D::from_fn(g, |x| if x[0] < 0.5 { 1.0 } else { 0.0 });
        assert!((lp_norm(&ind, 2.0, Region::Full).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn log_singularity_matches_radial_quadrature() {
        // ∫_0^1 |log r|^3 r dr = 3!/2^4
        let exact = (2.0 * PI * gamma_fn_int(3) / 16.0).powf(1.0 / 3.0);
        let g = Grid2::window_staggered([0.0, 0.0], 1.0, 1024);
        let f = ScalarField2D::from_fn(g, |x| (1.0 / x[0].hypot(x[1])).ln());
        let v = lp_norm(
            &f,
            3.0,
            Region::Disk {
                center: [0.0, 0.0],
                radius: 1.0,
            },
        )
        .unwrap();
        assert!((v / exact - 1.0).abs() < 0.02, "{v} vs {exact}");
        let q = iterated_log_lp_norm(1, 3.0).unwrap();
        assert!((q / exact - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lemma_n1_is_gamma_function() {
        for p in [2.0, 10.0, 200.0] {
            let exact_log = (2.0 * PI).ln() + libm_lgamma(p + 1.0) - (p + 1.0) * 2f64.ln();
            let q = log_iterated_log_integral(1, p).unwrap();
            assert!(
                (q - exact_log).abs() < 1e-8 * exact_log.abs().max(1.0),
                "{p}: {q} {exact_log}"
            );
        }
    }

    // Stirling series, accurate to ~1e-12 for x >= 3.
    fn libm_lgamma(x: f64) -> f64 {
        let mut x = x;
        let mut shift = 0.0;
        while x < 10.0 {
            shift -= x.ln();
            x += 1.0;
        }
        let x2 = x * x;
        shift + (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln() + 1.0 / (12.0 * x) - 1.0 / (360.0 * x * x2)
            + 1.0 / (1260.0 * x2 * x2 * x)
    }

    #[test]
    fn theta_parse_and_eval() {
        assert_eq!(Theta::parse("log").unwrap(), Theta::IterLog(1));
        assert_eq!(Theta::parse("log_3").unwrap(), Theta::IterLog(3));
        assert_eq!(Theta::parse("p").unwrap(), Theta::IterLog(0));
        assert!(Theta::parse("sqrt").is_err());
        assert!((Theta::LogTimesLogLog.eval(16.0).unwrap() - 16f64.ln() * 16f64.ln().ln()).abs() < 1e-14);
    }

    #[test]
    fn yudovich_constant_field_peaks_at_smallest_p() {
        let g = Grid2::periodic_square(32, 1.0);
        let f = ScalarField2D::from_fn(g, |_| 1.0);
        let r = yudovich_norm(&f, Theta::IterLog(1), &dyadic_p_grid(256.0), Region::Full).unwrap();
        assert_eq!(r.argmax_p, 2.0);
        assert!((r.yudovich_ratio - 1.0 / 2f64.ln()).abs() < 1e-12);
        assert!(!r.still_growing);
    }

    #[test]
    fn log_field_growth_flags() {
        let p = dyadic_p_grid(256.0);
        let lp: Vec<f64> = p.iter().map(|&q| iterated_log_lp_norm(1, q).unwrap()).collect();
        let vs_p = yudovich_from_values(&p, &lp, Theta::IterLog(0)).unwrap();
        assert!(!vs_p.still_growing);
        assert!(vs_p.yudovich_ratio < 1.0);
        let vs_log = yudovich_from_values(&p, &lp, Theta::IterLog(1)).unwrap();
        assert!(vs_log.still_growing);
    }

    #[test]
    fn cusp_seminorm_is_one() {
        let spec = ModulusSpec::log_lipschitz();
        let x0 = [0.1, -0.05];
        let g = Grid2::window(x0, 0.2, 256);
        let f = ScalarField2D::from_fn(g, |y| {
            let d = g.distance(y, x0);
            if d < 1e-9 {
                0.0
            } else {
                spec.eval_m(d.min(0.3)).unwrap().powf(0.7)
            }
        });
        let t = local_seminorm(&f, &spec, x0, 0.7, &[0.15, 0.05, 0.02, 0.01]).unwrap();
        for v in &t.values {
            assert!((v - 1.0).abs() < 1e-12, "{v}");
        }
        assert_eq!(t.trend, Trend::Converged);
    }

    #[test]
    fn smooth_field_vanishes() {
        let spec = ModulusSpec::lipschitz();
        let g = Grid2::window([0.0, 0.0], 0.5, 512);
        let f = ScalarField2D::from_fn(g, |y| (-(y[0] - 0.1).powi(2) - y[1] * y[1]).exp());
        let radii = [0.4, 0.1, 0.03, 0.01];
        let t = local_seminorm(&f, &spec, [0.0, 0.0], 1.0, &radii).unwrap();
        assert_eq!(t.trend, Trend::Vanishing, "{:?}", t.values);
        assert_eq!(t.limit, 0.0);
    }

    #[test]
    fn noisy_cusp_limit() {
        let spec = ModulusSpec::lipschitz();
        let g = Grid2::window([0.0, 0.0], 0.2, 512);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut f = ScalarField2D::from_fn(g, |y| 2.0 * spec.eval_m(y[0].hypot(y[1]).clamp(1e-300, 0.9)).unwrap());
        for v in f.data.iter_mut() {
            *v += rng.gen_range(-0.1..0.1);
        }
        let (ci, cj) = g.nearest_node([0.0, 0.0]);
        f.data[g.index(ci, cj)] = 0.0;
        let t = local_seminorm(&f, &spec, [0.0, 0.0], 1.0, &[0.1, 0.05, 0.02, 0.01, 0.005]).unwrap();
        assert_eq!(t.trend, Trend::Converged);
        assert!((t.limit / 2.0 - 1.0).abs() < 0.05, "{:?}", t.values);
        // Oracle: sup over the ball of (2M(d) + 0.1)/M(d) is attained at the largest distance.
        for (r, v) in t.radii.iter().zip(&t.values) {
            let bound = 2.0 + 0.1 / spec.eval_m(*r).unwrap();
            assert!(*v <= bound + 1e-12 && *v >= 2.0 - 0.1 / spec.eval_m(*r).unwrap());
        }
    }

    #[test]
    fn under_resolved_radius_is_rejected() {
        let spec = ModulusSpec::lipschitz();
        let g = Grid2::window([0.0, 0.0], 0.1, 64);
        let f = ScalarField2D::zeros(g);
        let e = local_seminorm(&f, &spec, [0.0, 0.0], 1.0, &[0.05, 0.001]).unwrap_err();
        assert!(matches!(e, Error::Resolution(_)));
    }

    #[test]
    fn global_dominates_local_and_is_monotone() {
        let spec = ModulusSpec::log_lipschitz();
        let g = Grid2::window([0.0, 0.0], 0.1, 64);
        let f = ScalarField2D::from_fn(g, |y| {
            let d = y[0].hypot(y[1]);
            if d == 0.0 {
                0.0
            } else {
                spec.eval_m(d).unwrap()
            }
        });
        let radii = [0.05, 0.02, 0.01];
        let gl = global_seminorm(&f, &spec, 1.0, &radii).unwrap();
        let lo = local_seminorm(&f, &spec, [0.0, 0.0], 1.0, &[0.05, 0.02, 0.01]).unwrap();
        for (a, b) in gl.values.iter().zip(&lo.values) {
            assert!(a + 1e-12 >= *b);
        }
        assert!(gl.values.windows(2).all(|w| w[1] <= w[0]));
    }
}
