//! Osgood moduli of continuity.
//!
//! A modulus `L` on `(0, m_L]` determines the profile `M(z) = ∫_z^{m_L} dr / L(r)`
//! and the rescaling `R(z) = exp(-M(z))`. Under a velocity field with modulus
//! `L`, two-point separations satisfy `1/μ ≤ R(|φ_t x − φ_t y|) / R(|x − y|) ≤ μ`
//! with `μ(t) = exp(∫_0^t ‖u(s)‖_L ds)`.

use std::f64::consts::E;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::interp::Pchip;
use crate::quad::{integrate, QuadConfig};

/// `log_n(z)`, the n-fold natural logarithm. `log_0` is the identity.
pub fn iterated_log(n: u32, z: f64) -> Result<f64> {
    let mut v = z;
    for k in 0..n {
        if !(v > 0.0) || !v.is_finite() {
            return domain(format!("iterated_log({n}, {z}): argument of log number {} is {v}", k + 1));
        }
        v = v.ln();
    }
    Ok(v)
}

/// `e_n(z)`, the n-fold exponential; inverse of [`iterated_log`].
pub fn iterated_exp(n: u32, z: f64) -> Result<f64> {
    let mut v = z;
    for _ in 0..n {
        v = v.exp();
        if !v.is_finite() {
            return domain(format!("iterated_exp({n}, {z}) overflows"));
        }
    }
    Ok(v)
}

/// `log_n` with every stage clamped by `log_+(x) = max(0, log x)`.
pub fn iterated_log_plus(n: u32, z: f64) -> f64 {
    let mut v = z;
    for _ in 0..n {
        v = if v > 1.0 { v.ln() } else { 0.0 };
    }
    v
}

/// Named family of moduli.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModulusKind {
    Lipschitz,
    LogLipschitz,
    /// `L(z) = z log(1/z) log_2(1/z) ... log_n(1/z)`.
    IteratedLogChain(u32),
    Custom,
}

/// A tabulated modulus, interpolated monotonically in `(log z, log L)`.
#[derive(Debug)]
pub struct CustomTable {
    interp: Pchip,
    /// `M` at each knot, accumulated from the right end.
    m_at_knots: Vec<f64>,
    osgood: bool,
    divergence_threshold: f64,
}

/// An immutable modulus of continuity together with its domain bound `m_L`.
#[derive(Debug, Clone)]
pub struct ModulusSpec {
    kind: ModulusKind,
    m_l: f64,
    table: Option<Arc<CustomTable>>,
}

/// Default divergence threshold for declaring a tabulated modulus Osgood.
pub const DEFAULT_DIVERGENCE_THRESHOLD: f64 = 3.0;

impl ModulusSpec {
    pub fn lipschitz() -> Self {
        Self {
            kind: ModulusKind::Lipschitz,
            m_l: 1.0,
            table: None,
        }
    }

    pub fn log_lipschitz() -> Self {
        Self {
            kind: ModulusKind::LogLipschitz,
            m_l: 1.0 / E,
            table: None,
        }
    }

    /// Chain of `n ≥ 1` iterated logarithms with `m_L = 1 / e_n(1)`.
    pub fn iterated_log_chain(n: u32) -> Result<Self> {
        if n == 0 {
            return domain("iterated-log chain length must be positive");
        }
        let top = iterated_exp(n, 1.0)?;
        Ok(Self {
            kind: ModulusKind::IteratedLogChain(n),
            m_l: 1.0 / top,
            table: None,
        })
    }

    /// Tabulated modulus from strictly increasing `z` and positive,
    /// nondecreasing `L(z)`. `m_L` is the last node.
    pub fn custom(z: &[f64], l: &[f64], divergence_threshold: f64) -> Result<Self> {
        if z.len() != l.len() || z.len() < 3 {
            return domain("custom modulus needs at least three (z, L) rows");
        }
        if z[0] <= 0.0 {
            return domain("custom modulus nodes must be positive");
        }
        if z.windows(2).any(|w| !(w[1] > w[0])) {
            return domain("custom modulus nodes must be strictly increasing");
        }
        if l.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return domain("custom modulus values must be finite and positive");
        }
        if l.windows(2).any(|w| w[1] < w[0]) {
            return domain("custom modulus must be nondecreasing");
        }
        let lz: Vec<f64> = z.iter().map(|v| v.ln()).collect();
        let ll: Vec<f64> = l.iter().map(|v| v.ln()).collect();
        let interp = Pchip::new(lz, ll)?;
        let n = z.len();
        let mut m_at_knots = vec![0.0; n];
        for i in (0..n - 1).rev() {
            let piece = integrate_inverse(&interp, z[i], z[i + 1])?;
            m_at_knots[i] = m_at_knots[i + 1] + piece;
        }
        let osgood = m_at_knots[0] > divergence_threshold;
        Ok(Self {
            kind: ModulusKind::Custom,
            m_l: z[n - 1],
            table: Some(Arc::new(CustomTable {
                interp,
                m_at_knots,
                osgood,
                divergence_threshold,
            })),
        })
    }

    /// Tabulates `f` at `nodes` log-spaced points on `[z_min, m_l]`.
    pub fn tabulate(f: impl Fn(f64) -> f64, z_min: f64, m_l: f64, nodes: usize, divergence_threshold: f64) -> Result<Self> {
        if !(z_min > 0.0 && z_min < m_l) || nodes < 3 {
            return domain("tabulate needs 0 < z_min < m_L and at least three nodes");
        }
        let (a, b) = (z_min.ln(), m_l.ln());
        let z: Vec<f64> = (0..nodes)
            .map(|i| {
                if i == nodes - 1 {
                    m_l
                } else {
                    (a + (b - a) * i as f64 / (nodes - 1) as f64).exp()
                }
            })
            .collect();
        let l: Vec<f64> = z.iter().map(|&v| f(v)).collect();
        Self::custom(&z, &l, divergence_threshold)
    }

    /// Reads a two-column `(z, L)` text file; `#` starts a comment and
    /// columns may be separated by whitespace or commas.
    pub fn load_custom(path: &Path, divergence_threshold: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut z = Vec::new();
        let mut l = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            if cols.len() != 2 {
                return Err(Error::Parse(format!(
                    "{}:{}: expected two columns, found {}",
                    path.display(),
                    lineno + 1,
                    cols.len()
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("{}:{}: {e}: {s:?}", path.display(), lineno + 1)))
            };
            z.push(parse(cols[0])?);
            l.push(parse(cols[1])?);
        }
        Self::custom(&z, &l, divergence_threshold)
    }

    /// Parses `lipschitz`, `loglipschitz`, `chain:<n>` or `custom:<path>`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "lipschitz" | "lip" => return Ok(Self::lipschitz()),
            "loglipschitz" | "log-lipschitz" | "loglip" => return Ok(Self::log_lipschitz()),
            _ => {}
        }
        if let Some(n) = s.strip_prefix("chain:") {
            let n: u32 = n.parse().map_err(|_| Error::Parse(format!("bad chain length in {s:?}")))?;
            return Self::iterated_log_chain(n);
        }
        if let Some(p) = s.strip_prefix("custom:") {
            return Self::load_custom(Path::new(p), DEFAULT_DIVERGENCE_THRESHOLD);
        }
        Err(Error::Parse(format!("unknown modulus {s:?}")))
    }

    pub fn kind(&self) -> ModulusKind {
        self.kind
    }

    pub fn m_l(&self) -> f64 {
        self.m_l
    }

    /// Whether `M` diverges at 0 (for tabulated moduli: whether `M` at the
    /// smallest node exceeds the divergence threshold).
    pub fn is_osgood(&self) -> bool {
        match &self.table {
            Some(t) => t.osgood,
            None => true,
        }
    }

    pub fn divergence_threshold(&self) -> Option<f64> {
        self.table.as_ref().map(|t| t.divergence_threshold)
    }

    /// Smallest tabulated node, if any.
    pub fn smallest_node(&self) -> Option<f64> {
        self.table.as_ref().map(|t| t.interp.knots()[0].exp())
    }

    fn check(&self, z: f64, what: &str) -> Result<()> {
        if !(z > 0.0) || z > self.m_l || !z.is_finite() {
            return domain(format!("{what}: z = {z} outside (0, {}] for {self}", self.m_l));
        }
        Ok(())
    }

    /// `L(z)`.
    pub fn eval_l(&self, z: f64) -> Result<f64> {
        self.check(z, "eval_L")?;
        Ok(self.l_unchecked(z))
    }

    pub(crate) fn l_unchecked(&self, z: f64) -> f64 {
        match self.kind {
            ModulusKind::Lipschitz => z,
            ModulusKind::LogLipschitz => z * (1.0 / z).ln(),
            ModulusKind::IteratedLogChain(n) => {
                let mut v = 1.0 / z;
                let mut prod = z;
                for _ in 0..n {
                    v = v.ln();
                    prod *= v;
                }
                prod
            }
            ModulusKind::Custom => {
                let t = self.table.as_ref().expect("custom table");
                t.interp.eval(z.ln()).exp()
            }
        }
    }

    /// `M(z) = ∫_z^{m_L} dr / L(r)`.
    pub fn eval_m(&self, z: f64) -> Result<f64> {
        self.check(z, "eval_M")?;
        match self.kind {
            ModulusKind::Lipschitz => Ok((1.0 / z).ln()),
            ModulusKind::LogLipschitz => Ok((1.0 / z).ln().ln().max(0.0)),
            ModulusKind::IteratedLogChain(n) => Ok(iterated_log(n + 1, 1.0 / z)?.max(0.0)),
            ModulusKind::Custom => {
                let t = self.table.as_ref().expect("custom table");
                let knots = t.interp.knots();
                let lz = z.ln();
                // first knot at or above z
                let i = knots.partition_point(|&k| k < lz);
                if i >= knots.len() {
                    return Ok(0.0);
                }
                let zi = knots[i].exp();
                let piece = if zi > z { integrate_inverse(&t.interp, z, zi)? } else { 0.0 };
                Ok(t.m_at_knots[i] + piece)
            }
        }
    }

    /// `M'(z) = -1 / L(z)`.
    pub fn eval_m_prime(&self, z: f64) -> Result<f64> {
        Ok(-1.0 / self.eval_l(z)?)
    }

    /// `R(z) = exp(-M(z))`.
    pub fn eval_r(&self, z: f64) -> Result<f64> {
        self.check(z, "eval_R")?;
        match self.kind {
            ModulusKind::Lipschitz => Ok(z),
            ModulusKind::LogLipschitz => Ok(1.0 / (1.0 / z).ln()),
            ModulusKind::IteratedLogChain(n) => Ok(1.0 / iterated_log(n, 1.0 / z)?),
            ModulusKind::Custom => Ok((-self.eval_m(z)?).exp()),
        }
    }

    /// Inverse of [`Self::eval_r`] on `(0, 1]`.
    pub fn eval_r_inv(&self, w: f64) -> Result<f64> {
        if !(w > 0.0 && w <= 1.0) {
            return domain(format!("eval_R_inv: w = {w} outside (0, 1]"));
        }
        let z = match self.kind {
            ModulusKind::Lipschitz => w,
            ModulusKind::LogLipschitz => (-1.0 / w).exp(),
            ModulusKind::IteratedLogChain(n) => {
                let top = iterated_exp(n, 1.0 / w)?;
                1.0 / top
            }
            ModulusKind::Custom => return self.bisect_r_inv(w),
        };
        if !(z > 0.0) {
            return Err(Error::Numeric(format!("eval_R_inv({w}) underflows double precision")));
        }
        Ok(z.min(self.m_l))
    }

    fn bisect_r_inv(&self, w: f64) -> Result<f64> {
        let target = -w.ln(); // M(z) = target
        let mut hi = self.m_l;
        if target <= 0.0 {
            return Ok(hi);
        }
        // Walk the lower bracket down in log steps until M exceeds the target.
        let mut lo = hi;
        loop {
            lo *= 0.5;
            if lo < 1e-300 {
                return Err(Error::Numeric(format!(
                    "eval_R_inv({w}): M stays below {target} on the representable range"
                )));
            }
            if self.eval_m(lo)? >= target {
                break;
            }
            hi = lo;
        }
        // Bisect in log z; the bracket width shrinks to 1e-12 absolute.
        while hi - lo > 1e-12_f64.min(1e-13 * hi) {
            let mid = (lo * hi).sqrt();
            let mid = if mid > lo && mid < hi { mid } else { 0.5 * (lo + hi) };
            if !(mid > lo && mid < hi) {
                break;
            }
            if self.eval_m(mid)? >= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `sup_{z ≤ m_L} z / L(z)`: the modulus norm of a linear field with unit
    /// Lipschitz constant.
    pub fn linear_field_constant(&self) -> f64 {
        let zs = log_grid(self.m_l * 1e-12, self.m_l, 400);
        zs.iter().map(|&z| z / self.l_unchecked(z)).fold(0.0, f64::max)
    }

    /// Measured constant `C` in `z log(1/z) ≤ C L(z)` over `[z_min, m_L]`.
    pub fn continuity_constant(&self, z_min: f64) -> Result<f64> {
        if !(z_min > 0.0 && z_min < self.m_l.min(1.0)) {
            return domain("continuity_constant needs 0 < z_min < min(m_L, 1)");
        }
        let hi = self.m_l.min(1.0 / E);
        let zs = log_grid(z_min, hi, 400);
        Ok(zs
            .iter()
            .map(|&z| z * (1.0 / z).ln() / self.l_unchecked(z))
            .fold(0.0, f64::max))
    }

    pub fn name(&self) -> String {
        match self.kind {
            ModulusKind::Lipschitz => "lipschitz".into(),
            ModulusKind::LogLipschitz => "loglipschitz".into(),
            ModulusKind::IteratedLogChain(n) => format!("chain:{n}"),
            ModulusKind::Custom => {
                let n = self.table.as_ref().map(|t| t.interp.knots().len()).unwrap_or(0);
                format!("custom({n} nodes)")
            }
        }
    }
}

impl fmt::Display for ModulusSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (m_L = {:.6e})", self.name(), self.m_l)
    }
}

/// `∫_a^b dr / L(r)` for a table in log-log form, with `s = log(1/r)`:
/// the integrand becomes `exp(-s - log L(e^{-s}))`.
fn integrate_inverse(interp: &Pchip, a: f64, b: f64) -> Result<f64> {
    let (s_lo, s_hi) = ((1.0 / b).ln(), (1.0 / a).ln());
    let r = integrate(
        |s| (-s - interp.eval(-s)).exp(),
        s_lo,
        s_hi,
        QuadConfig {
            abs_tol: 1e-15,
            rel_tol: 1e-10,
            max_intervals: 4000,
        },
    )?;
    Ok(r.value)
}

/// `n` log-spaced points on `[a, b]` (inclusive).
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1).max(1) as f64).exp())
        .collect()
}

/// Accumulated modulus norm `∫_0^t ‖u(s)‖_L ds` and `μ(t) = e^{lint}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthFactor {
    pub t: f64,
    pub lint: f64,
    pub mu: f64,
}

impl GrowthFactor {
    pub fn log_mu(&self) -> f64 {
        self.lint
    }

    /// Constant-in-time modulus norm `c` over `[0, |t|]`.
    pub fn constant_rate(c: f64, t: f64) -> Result<Self> {
        if !(c >= 0.0) {
            return domain(format!("modulus norm must be nonnegative, got {c}"));
        }
        mu_factor(t, c * t.abs())
    }

    /// Piecewise-constant norms: `(duration, norm)` segments.
    pub fn piecewise(segments: &[(f64, f64)]) -> Result<Self> {
        let mut t = 0.0;
        let mut lint = 0.0;
        for &(dt, c) in segments {
            if !(dt >= 0.0 && c >= 0.0) {
                return domain("piecewise growth segments need nonnegative duration and norm");
            }
            t += dt;
            lint += dt * c;
        }
        mu_factor(t, lint)
    }
}

/// `μ = e^{lint}` for an accumulated modulus integral `lint ≥ 0` at time `t`.
pub fn mu_factor(t: f64, lint: f64) -> Result<GrowthFactor> {
    if !(lint >= 0.0) {
        return domain(format!("accumulated modulus integral must be >= 0, got {lint}"));
    }
    Ok(GrowthFactor { t, lint, mu: lint.exp() })
}
