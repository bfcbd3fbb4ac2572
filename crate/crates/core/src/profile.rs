//! Radial singular profiles `γ F(M(|x − x₀|))` and their circular velocity.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::field::{norm, perp, scale, sub, Point};
use crate::interp::hermite;
use crate::modulus::{log_grid, ModulusSpec};
use crate::quad::{integrate, QuadConfig};

/// Outer shape `F` applied to the profile `M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OuterShape {
    Identity,
    /// `sgn(z)|z|^a` with `0 < a ≤ 1`.
    Power(f64),
    /// `log z` for `z ≥ 1`, extended by `z − 1` below.
    Log,
    /// `sin(λ z)`.
    Sin(f64),
    /// `z²`; superlinear, unbounded slope.
    Square,
    /// `z log z` for `z > 0`; superlinear.
    ZLogZ,
}

impl OuterShape {
    pub fn eval(&self, z: f64) -> f64 {
        match *self {
            OuterShape::Identity => z,
            OuterShape::Power(a) => z.signum() * z.abs().powf(a),
            OuterShape::Log => {
                if z >= 1.0 {
                    z.ln()
                } else {
                    z - 1.0
                }
            }
            OuterShape::Sin(l) => (l * z).sin(),
            OuterShape::Square => z * z,
            OuterShape::ZLogZ => {
                if z > 0.0 {
                    z * z.ln()
                } else {
                    0.0
                }
            }
        }
    }

    pub fn deriv(&self, z: f64) -> f64 {
        match *self {
            OuterShape::Identity => 1.0,
            OuterShape::Power(a) => a * z.abs().powf(a - 1.0),
            OuterShape::Log => {
                if z >= 1.0 {
                    1.0 / z
                } else {
                    1.0
                }
            }
            OuterShape::Sin(l) => l * (l * z).cos(),
            OuterShape::Square => 2.0 * z,
            OuterShape::ZLogZ => {
                if z > 0.0 {
                    z.ln() + 1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `[F] = sup_{|z| ≥ 1} |F'(z)|`; infinite for superlinear shapes.
    pub fn slope_bound(&self) -> f64 {
        match *self {
            OuterShape::Identity => 1.0,
            OuterShape::Power(a) => a,
            OuterShape::Log => 1.0,
            OuterShape::Sin(l) => l.abs(),
            OuterShape::Square | OuterShape::ZLogZ => f64::INFINITY,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        let (name, arg) = match t.split_once(':') {
            Some((a, b)) => (a.to_string(), Some(b.to_string())),
            None => (t.clone(), None),
        };
        let num = |a: Option<String>| -> Result<f64> {
            a.ok_or_else(|| Error::Parse(format!("shape {s:?} needs a parameter")))?
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("shape {s:?}: {e}")))
        };
        let shape = match name.as_str() {
            "identity" | "id" => OuterShape::Identity,
            "power" => OuterShape::Power(num(arg)?),
            "log" => OuterShape::Log,
            "sin" => OuterShape::Sin(num(arg)?),
            "square" => OuterShape::Square,
            "zlogz" => OuterShape::ZLogZ,
            _ => return Err(Error::Parse(format!("unknown outer shape {s:?}"))),
        };
        if let OuterShape::Power(a) = shape {
            if !(a > 0.0 && a <= 1.0) {
                return domain(format!("power shape exponent must be in (0, 1], got {a}"));
            }
        }
        if let OuterShape::Sin(l) = shape {
            if !(l > 0.0) {
                return domain(format!("sin shape frequency must be positive, got {l}"));
            }
        }
        Ok(shape)
    }
}

impl fmt::Display for OuterShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OuterShape::Identity => write!(f, "identity"),
            OuterShape::Power(a) => write!(f, "power:{a}"),
            OuterShape::Log => write!(f, "log"),
            OuterShape::Sin(l) => write!(f, "sin:{l}"),
            OuterShape::Square => write!(f, "square"),
            OuterShape::ZLogZ => write!(f, "zlogz"),
        }
    }
}

/// `C^∞` step: 1 on `[0, r0]`, 0 on `[r1, ∞)`.
pub fn smooth_cutoff(d: f64, r0: f64, r1: f64) -> f64 {
    if d <= r0 {
        return 1.0;
    }
    if d >= r1 {
        return 0.0;
    }
    let t = (d - r0) / (r1 - r0);
    let a = (-1.0 / (1.0 - t)).exp();
    let b = (-1.0 / t).exp();
    a / (a + b)
}

/// Radial profile `γ F(M(min(d, r_cut))) χ(d)` with a smooth cutoff `χ` that
/// drops from 1 to 0 on `[taper_start, r_cut]`, and an optional `C²`
/// polynomial cap inside radius `mollify`.
#[derive(Debug, Clone)]
pub struct SingularProfile {
    pub center: Point,
    pub gamma: f64,
    pub modulus: ModulusSpec,
    pub shape: OuterShape,
    pub r_cut: f64,
    pub taper_start: f64,
    pub mollify: Option<f64>,
    cap: Option<[f64; 3]>,
}

impl SingularProfile {
    pub fn new(center: Point, gamma: f64, modulus: ModulusSpec, shape: OuterShape, r_cut: f64, taper_start: f64) -> Result<Self> {
        if !(r_cut > 0.0 && r_cut <= modulus.m_l() * (1.0 + 1e-12)) {
            return domain(format!("cutoff radius {r_cut} must lie in (0, m_L = {}]", modulus.m_l()));
        }
        if !(taper_start > 0.0 && taper_start <= r_cut) {
            return domain(format!("taper start {taper_start} must lie in (0, r_cut = {r_cut}]"));
        }
        let r_cut = r_cut.min(modulus.m_l());
        Ok(Self {
            center,
            gamma,
            modulus,
            shape,
            r_cut,
            taper_start,
            mollify: None,
            cap: None,
        })
    }

    /// Profile with the cutoff at `m_L` and the taper starting at `m_L / 2`.
    pub fn standard(center: Point, gamma: f64, modulus: ModulusSpec, shape: OuterShape) -> Result<Self> {
        let m = modulus.m_l();
        Self::new(center, gamma, modulus, shape, m, 0.5 * m)
    }

    pub fn at(mut self, center: Point) -> Self {
        self.center = center;
        self
    }

    /// Caps the profile inside radius `eps` by `a + b d² + c d⁴`, matching
    /// value and two derivatives at `eps`.
    pub fn mollified(mut self, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < self.taper_start) {
            return domain(format!("mollification radius {eps} must lie in (0, {})", self.taper_start));
        }
        self.mollify = None;
        self.cap = None;
        let g = |d: f64| self.radial(d);
        let dh = 1e-3 * eps;
        let (gm, g0, gp) = (g(eps - dh), g(eps), g(eps + dh));
        let g1 = (gp - gm) / (2.0 * dh);
        let g2 = (gp - 2.0 * g0 + gm) / (dh * dh);
        let c = (g2 - g1 / eps) / (8.0 * eps * eps);
        let b = (g1 - 4.0 * c * eps.powi(3)) / (2.0 * eps);
        let a = g0 - b * eps * eps - c * eps.powi(4);
        self.mollify = Some(eps);
        self.cap = Some([a, b, c]);
        Ok(self)
    }

    /// Uncapped singular part `γ F(M(d))`; needs `0 < d ≤ m_L`.
    pub fn singular_part(&self, d: f64) -> f64 {
        let m = self.modulus.eval_m(d.min(self.modulus.m_l())).unwrap_or(f64::INFINITY);
        self.gamma * self.shape.eval(m)
    }

    /// Radial value at distance `d`. The exact center maps to 0.
    pub fn radial(&self, d: f64) -> f64 {
        if let (Some(eps), Some([a, b, c])) = (self.mollify, self.cap) {
            if d < eps {
                let d2 = d * d;
                return a + b * d2 + c * d2 * d2;
            }
        }
        if d >= self.r_cut {
            return 0.0;
        }
        if d <= 0.0 {
            return 0.0;
        }
        let v = self.singular_part(d);
        v * smooth_cutoff(d, self.taper_start, self.r_cut)
    }

    pub fn eval(&self, x: Point) -> f64 {
        self.radial(norm(sub(x, self.center)))
    }

    /// Largest distance where the profile is nonzero.
    pub fn support(&self) -> f64 {
        self.r_cut
    }

    /// Tabulated circulation `Γ(r) = ∫_0^r ω(s) s ds`.
    pub fn circulation(&self) -> Result<Circulation> {
        Circulation::new(|d| self.radial(d), 1e-12, self.r_cut, 600)
    }

    /// `∫ ω dx` over the plane.
    pub fn mass(&self) -> Result<f64> {
        Ok(2.0 * std::f64::consts::PI * self.circulation()?.gamma_at(self.r_cut))
    }
}

/// `Γ(r) = ∫_0^r ω(s) s ds` on a log-spaced table with Hermite
/// interpolation (the derivative `ω(r) r` is exact at the knots).
#[derive(Debug, Clone, PartialEq)]
pub struct Circulation {
    r: Vec<f64>,
    g: Vec<f64>,
    dg: Vec<f64>,
}

impl Circulation {
    pub fn new(omega: impl Fn(f64) -> f64, r_min: f64, r_max: f64, nodes: usize) -> Result<Self> {
        if !(r_min > 0.0 && r_max > r_min && nodes >= 2) {
            return domain("circulation table needs 0 < r_min < r_max and at least 2 nodes");
        }
        let r = log_grid(r_min, r_max, nodes);
        // ω is taken constant on the innermost disk.
        let mut acc = omega(r_min) * r_min * r_min / 2.0;
        let mut g = vec![acc];
        let cfg = QuadConfig {
            abs_tol: 1e-16,
            rel_tol: 1e-12,
            max_intervals: 500,
        };
        for w in r.windows(2) {
            let piece = integrate(
                |tau: f64| {
                    let s = tau.exp();
                    omega(s) * s * s
                },
                w[0].ln(),
                w[1].ln(),
                cfg,
            )?;
            acc += piece.value;
            g.push(acc);
        }
        let dg: Vec<f64> = r.iter().map(|&s| omega(s) * s).collect();
        if g.iter().chain(&dg).any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite circulation table".into()));
        }
        Ok(Self { r, g, dg })
    }

    pub fn gamma_at(&self, d: f64) -> f64 {
        let n = self.r.len();
        if d <= self.r[0] {
            return self.g[0] * (d / self.r[0]).powi(2);
        }
        if d >= self.r[n - 1] {
            return self.g[n - 1];
        }
        let i = self.r.partition_point(|&v| v <= d).clamp(1, n - 1) - 1;
        hermite(
            self.r[i],
            self.r[i + 1],
            self.g[i],
            self.g[i + 1],
            self.dg[i],
            self.dg[i + 1],
            d,
        )
    }

    /// Circular velocity `x⊥ Γ(|x|) / |x|²` at offset `x` from the center.
    pub fn velocity(&self, x: Point) -> Point {
        let d2 = x[0] * x[0] + x[1] * x[1];
        if d2 == 0.0 {
            return [0.0, 0.0];
        }
        scale(perp(x), self.gamma_at(d2.sqrt()) / d2)
    }

    /// Angular speed `Γ(r)/r²`.
    pub fn angular_speed(&self, d: f64) -> f64 {
        if d <= 0.0 {
            return self.g[0] / (self.r[0] * self.r[0]);
        }
        self.gamma_at(d) / (d * d)
    }
}
