//! Pseudo-spectral 2D Euler in vorticity form on `[0, 2π)²`, with singular
//! vortex tracking and remainder monitoring.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::field::{deterministic_sum, norm, perp, Grid2, Point, ScalarField2D, VectorField2D};
use crate::modulus::ModulusSpec;
use crate::profile::{Circulation, OuterShape, SingularProfile};
use crate::seminorm::{lp_norm_of, yudovich_from_values, Theta};
use crate::spectral::Fft2;

pub type Forcing = Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Vorticity modes on the `N × N` torus grid.
#[derive(Clone)]
pub struct SpectralState {
    pub n: usize,
    pub fft: Fft2,
    pub omega_hat: Vec<Complex64>,
    pub t: f64,
    pub mask: Arc<Vec<bool>>,
    pub forcing: Option<Forcing>,
}

impl std::fmt::Debug for SpectralState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SpectralState(n = {}, t = {})", self.n, self.t)
    }
}

/// Relative mean above which vorticity is rejected as not mean-free.
pub const MEAN_TOLERANCE: f64 = 1e-10;

impl SpectralState {
    /// Projects grid vorticity onto the dealiased band. The field must be
    /// mean-free.
    pub fn new(n: usize, omega: &[f64], t: f64) -> Result<Self> {
        let fft = Fft2::new(n)?;
        if omega.len() != n * n {
            return domain(format!("vorticity has {} values, grid needs {}", omega.len(), n * n));
        }
        let scale_ = omega.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let mean = deterministic_sum(omega) / (n * n) as f64;
        if mean.abs() > MEAN_TOLERANCE * scale_ {
            return Err(Error::Precondition(format!(
                "vorticity mean {mean:.3e} is not zero; Biot-Savart on the torus needs mean-free data"
            )));
        }
        let mask = Arc::new(fft.dealias_mask());
        let mut omega_hat = fft.forward_real(omega);
        for (w, &keep) in omega_hat.iter_mut().zip(mask.iter()) {
            if !keep {
                *w = Complex64::default();
            }
        }
        omega_hat[0] = Complex64::default();
        Ok(Self {
            n,
            fft,
            omega_hat,
            t,
            mask,
            forcing: None,
        })
    }

    /// Multiplies the modes by `exp(−σ²|k|²/2)`, i.e. convolves with a
    /// Gaussian of width `σ`.
    pub fn gaussian_filtered(mut self, sigma: f64) -> Self {
        for idx in 0..self.omega_hat.len() {
            let (kx, ky) = self.fft.k_of(idx);
            self.omega_hat[idx] *= (-0.5 * sigma * sigma * (kx * kx + ky * ky)).exp();
        }
        self
    }

    pub fn with_forcing(mut self, f: Forcing) -> Self {
        self.forcing = Some(f);
        self
    }

    pub fn grid(&self) -> Grid2 {
        Grid2::torus(self.n)
    }

    pub fn dx(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    pub fn omega(&self) -> Vec<f64> {
        self.fft.inverse_real(&self.omega_hat)
    }

    pub fn omega_field(&self) -> ScalarField2D {
        ScalarField2D {
            grid: self.grid(),
            data: self.omega(),
        }
    }

    fn velocity_hat_of(&self, w: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let (mut uh, mut vh) = (vec![Complex64::default(); w.len()], vec![Complex64::default(); w.len()]);
        for idx in 1..w.len() {
            let (kx, ky) = self.fft.k_of(idx);
            let k2 = kx * kx + ky * ky;
            uh[idx] = I * ky * w[idx] / k2;
            vh[idx] = -I * kx * w[idx] / k2;
        }
        (uh, vh)
    }

    pub fn velocity_hat(&self) -> (Vec<Complex64>, Vec<Complex64>) {
        self.velocity_hat_of(&self.omega_hat)
    }

    /// `u = ∇⊥ Δ⁻¹ ω` on the grid.
    pub fn velocity(&self) -> VectorField2D {
        let (uh, vh) = self.velocity_hat();
        let (u, v) = self.fft.inverse_real_pair(&uh, &vh);
        VectorField2D { grid: self.grid(), u, v }
    }

    pub fn max_speed(&self) -> f64 {
        self.velocity().max_speed()
    }

    /// `dt ≤ 0.5 Δx / max|u|`.
    pub fn cfl_limit(&self) -> f64 {
        let s = self.max_speed();
        if s == 0.0 {
            f64::INFINITY
        } else {
            0.5 * self.dx() / s
        }
    }

    /// Band-limited evaluation of the velocity at an arbitrary point.
    pub fn velocity_at(&self, x: Point) -> Point {
        let (uh, vh) = self.velocity_hat();
        eval_pair_off_grid(&self.fft, &uh, &vh, x)
    }

    /// `½ ∫ |u|²`.
    pub fn energy(&self) -> f64 {
        let s: f64 = (1..self.omega_hat.len())
            .map(|idx| {
                let (kx, ky) = self.fft.k_of(idx);
                self.omega_hat[idx].norm_sqr() / (kx * kx + ky * ky)
            })
            .sum();
        0.5 * s * spectral_weight(self.n)
    }

    /// `½ ∫ ω²`.
    pub fn enstrophy(&self) -> f64 {
        0.5 * self.omega_hat.iter().map(|c| c.norm_sqr()).sum::<f64>() * spectral_weight(self.n)
    }

    /// Largest spectral divergence `|k · û|` relative to `max |k||û|`.
    pub fn divergence_defect(&self) -> f64 {
        let (uh, vh) = self.velocity_hat();
        let mut div = 0.0f64;
        let mut top = 0.0f64;
        for idx in 0..uh.len() {
            let (kx, ky) = self.fft.k_of(idx);
            div = div.max((kx * uh[idx] + ky * vh[idx]).norm());
            top = top.max((kx * kx + ky * ky).sqrt() * uh[idx].norm().hypot(vh[idx].norm()));
        }
        if top == 0.0 {
            0.0
        } else {
            div / top
        }
    }

    /// Max `|curl u − ω|` relative to `max |ω̂|` over the band.
    pub fn biot_savart_round_trip(&self) -> f64 {
        let (uh, vh) = self.velocity_hat();
        let mut err = 0.0f64;
        let mut top = 0.0f64;
        for idx in 0..uh.len() {
            let (kx, ky) = self.fft.k_of(idx);
            let curl = I * kx * vh[idx] - I * ky * uh[idx];
            err = err.max((curl - self.omega_hat[idx]).norm());
            top = top.max(self.omega_hat[idx].norm());
        }
        if top == 0.0 {
            0.0
        } else {
            err / top
        }
    }

    fn forcing_hat(&self, t: f64) -> Option<Vec<Complex64>> {
        let f = self.forcing.as_ref()?;
        let g = self.grid();
        let vals: Vec<f64> = (0..g.len()).into_par_iter().map(|k| f(g.node_of(k), t)).collect();
        let mut h = self.fft.forward_real(&vals);
        h[0] = Complex64::default();
        Some(h)
    }

    /// `−u·∇ω + f` in spectral space, dealiased.
    fn rhs(&self, w: &[Complex64], t: f64) -> Vec<Complex64> {
        let (uh, vh) = self.velocity_hat_of(w);
        let mut wx = vec![Complex64::default(); w.len()];
        let mut wy = vec![Complex64::default(); w.len()];
        for idx in 0..w.len() {
            let (kx, ky) = self.fft.k_of(idx);
            wx[idx] = I * kx * w[idx];
            wy[idx] = I * ky * w[idx];
        }
        let (u, v) = self.fft.inverse_real_pair(&uh, &vh);
        let (ox, oy) = self.fft.inverse_real_pair(&wx, &wy);
        let nl: Vec<f64> = (0..u.len()).into_par_iter().map(|k| u[k] * ox[k] + v[k] * oy[k]).collect();
        let mut out = self.fft.forward_real(&nl);
        let f = self.forcing_hat(t);
        for idx in 0..out.len() {
            out[idx] = if self.mask[idx] && idx != 0 {
                -out[idx] + f.as_ref().map_or(Complex64::default(), |f| f[idx])
            } else {
                Complex64::default()
            };
        }
        out
    }

    fn check_cfl(&self, dt: f64) -> Result<()> {
        let lim = self.cfl_limit();
        if dt > lim {
            return Err(Error::Cfl {
                dt,
                suggested: 0.9 * lim,
            });
        }
        Ok(())
    }

    /// One classical RK4 step.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        self.check_cfl(dt)?;
        let mut no_centers: [Point; 0] = [];
        self.step_coupled(dt, &mut no_centers, &[])
    }

    /// RK4 step advancing centers with `dφⱼ/dt = u(φⱼ) − corrⱼ` at the
    /// same stages.
    fn step_coupled(&mut self, dt: f64, centers: &mut [Point], corrections: &[Point]) -> Result<()> {
        let t = self.t;
        let w0 = self.omega_hat.clone();
        let c0: Vec<Point> = centers.to_vec();
        let stage_vel = |w: &[Complex64], cs: &[Point]| -> Vec<Point> {
            if cs.is_empty() {
                return Vec::new();
            }
            let (uh, vh) = self.velocity_hat_of(w);
            cs.iter()
                .zip(corrections)
                .map(|(c, corr)| {
                    let u = eval_pair_off_grid(&self.fft, &uh, &vh, *c);
                    [u[0] - corr[0], u[1] - corr[1]]
                })
                .collect()
        };
        let add =
            |w: &[Complex64], k: &[Complex64], a: f64| -> Vec<Complex64> { w.iter().zip(k).map(|(x, y)| x + y * a).collect() };
        let addc = |c: &[Point], k: &[Point], a: f64| -> Vec<Point> {
            c.iter().zip(k).map(|(x, y)| [x[0] + a * y[0], x[1] + a * y[1]]).collect()
        };
        let k1 = self.rhs(&w0, t);
        let v1 = stage_vel(&w0, &c0);
        let w2 = add(&w0, &k1, 0.5 * dt);
        let c2 = addc(&c0, &v1, 0.5 * dt);
        let k2 = self.rhs(&w2, t + 0.5 * dt);
        let v2 = stage_vel(&w2, &c2);
        let w3 = add(&w0, &k2, 0.5 * dt);
        let c3 = addc(&c0, &v2, 0.5 * dt);
        let k3 = self.rhs(&w3, t + 0.5 * dt);
        let v3 = stage_vel(&w3, &c3);
        let w4 = add(&w0, &k3, dt);
        let c4 = addc(&c0, &v3, dt);
        let k4 = self.rhs(&w4, t + dt);
        let v4 = stage_vel(&w4, &c4);
        let new: Vec<Complex64> = (0..w0.len())
            .map(|i| w0[i] + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0))
            .collect();
        if new.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Numeric(format!("vorticity blew up at t = {}", t + dt)));
        }
        self.omega_hat = new;
        self.t = t + dt;
        for (j, c) in centers.iter_mut().enumerate() {
            for d in 0..2 {
                c[d] = c0[j][d] + dt / 6.0 * (v1[j][d] + 2.0 * v2[j][d] + 2.0 * v3[j][d] + v4[j][d]);
            }
        }
        Ok(())
    }

    /// Integer grid shift by `(si, sj)` cells, applied as a spectral phase.
    pub fn shifted(&self, si: i64, sj: i64) -> Self {
        let mut s = self.clone();
        let h = self.dx();
        for idx in 0..s.omega_hat.len() {
            let (kx, ky) = self.fft.k_of(idx);
            let ph = -(kx * si as f64 + ky * sj as f64) * h;
            s.omega_hat[idx] *= Complex64::from_polar(1.0, ph);
        }
        s
    }
}

/// `∫ f² = (4π²/N⁴) Σ |f̂|²`.
fn spectral_weight(n: usize) -> f64 {
    4.0 * PI * PI / (n as f64).powi(4)
}

/// Direct Fourier sum of two band-limited real fields at `x`.
pub fn eval_pair_off_grid(fft: &Fft2, a: &[Complex64], b: &[Complex64], x: Point) -> Point {
    let n = fft.n;
    let ex: Vec<Complex64> = (0..n).map(|i| Complex64::from_polar(1.0, fft.wavenumber(i) * x[0])).collect();
    let ey: Vec<Complex64> = (0..n).map(|j| Complex64::from_polar(1.0, fft.wavenumber(j) * x[1])).collect();
    let (mut sa, mut sb) = (Complex64::default(), Complex64::default());
    for j in 0..n {
        let (mut ra, mut rb) = (Complex64::default(), Complex64::default());
        let row = j * n;
        for i in 0..n {
            ra += a[row + i] * ex[i];
            rb += b[row + i] * ex[i];
        }
        sa += ra * ey[j];
        sb += rb * ey[j];
    }
    let s = 1.0 / (n * n) as f64;
    [sa.re * s, sb.re * s]
}

/// Grid velocity from vorticity.
pub fn biot_savart(state: &SpectralState) -> Result<VectorField2D> {
    if state.omega_hat[0].norm() > MEAN_TOLERANCE * (state.n * state.n) as f64 {
        return Err(Error::Precondition("vorticity is not mean-free".into()));
    }
    Ok(state.velocity())
}

/// A singular vortex: a mollified profile and its circulation table.
#[derive(Debug, Clone)]
pub struct Vortex {
    pub profile: SingularProfile,
    pub circulation: Arc<Circulation>,
    pub mass: f64,
}

impl Vortex {
    /// Profile mollified at `eps`.
    pub fn new(profile: SingularProfile, eps: f64) -> Result<Self> {
        let profile = profile.mollified(eps)?;
        let circulation = Arc::new(profile.circulation()?);
        let mass = 2.0 * PI * circulation.gamma_at(profile.r_cut);
        Ok(Self {
            profile,
            circulation,
            mass,
        })
    }

    /// Grid value with the torus minimum-image distance to `center`.
    pub fn radial_on(&self, grid: &Grid2, x: Point, center: Point) -> f64 {
        self.profile.radial(grid.distance(x, center))
    }

    /// Analytic circular velocity about `center`.
    pub fn self_velocity(&self, grid: &Grid2, x: Point, center: Point) -> Point {
        self.circulation.velocity(grid.displacement(x, center))
    }
}

/// `ω = Σᵢ vortexᵢ(|x − φᵢ|) + b`.
#[derive(Debug, Clone)]
pub struct VortexSystem {
    pub n: usize,
    pub vortices: Vec<Vortex>,
    pub centers: Vec<Point>,
    /// Remainder on the grid, including the uniform mean compensation.
    pub background: ScalarField2D,
    pub eps: f64,
}

impl VortexSystem {
    /// Profiles are mollified at `mollify_cells · Δx`; the background is
    /// sampled and shifted so the total vorticity is mean-free.
    pub fn new(
        n: usize,
        profiles: Vec<SingularProfile>,
        background: impl Fn(Point) -> f64 + Sync,
        mollify_cells: f64,
    ) -> Result<Self> {
        let grid = Grid2::torus(n);
        let eps = mollify_cells * grid.h;
        if mollify_cells < 2.0 {
            return domain(format!("mollification must span at least 2 cells, got {mollify_cells}"));
        }
        let centers: Vec<Point> = profiles.iter().map(|p| p.center).collect();
        for i in 0..centers.len() {
            for j in i + 1..centers.len() {
                let d = grid.distance(centers[i], centers[j]);
                if d < 4.0 * grid.h {
                    return Err(Error::Collision { i, j, separation: d });
                }
            }
        }
        let vortices = profiles
            .into_iter()
            .map(|p| {
                if p.support() > PI / 4.0 + 1e-12 {
                    return domain(format!("profile support {} exceeds π/4", p.support()));
                }
                Vortex::new(p, eps)
            })
            .collect::<Result<Vec<_>>>()?;
        let b = ScalarField2D::from_fn(grid, &background);
        let mut sys = Self {
            n,
            vortices,
            centers,
            background: b,
            eps,
        };
        let total = deterministic_sum(&sys.vorticity_data()) / (n * n) as f64;
        for v in sys.background.data.iter_mut() {
            *v -= total;
        }
        Ok(sys)
    }

    pub fn grid(&self) -> Grid2 {
        Grid2::torus(self.n)
    }

    /// `Σ vortices` on the grid for the given centers.
    pub fn singular_data(&self, centers: &[Point]) -> Vec<f64> {
        let g = self.grid();
        (0..g.len())
            .into_par_iter()
            .map(|k| {
                let x = g.node_of(k);
                self.vortices.iter().zip(centers).map(|(v, c)| v.radial_on(&g, x, *c)).sum()
            })
            .collect()
    }

    pub fn vorticity_data(&self) -> Vec<f64> {
        let s = self.singular_data(&self.centers);
        s.iter().zip(&self.background.data).map(|(a, b)| a + b).collect()
    }

    /// Grid-mollification correction: the spectral self-velocity of each
    /// vortex alone at its own center (zero in the continuum), with the same
    /// initial filter as the run.
    pub fn center_corrections(&self, sigma: f64) -> Result<Vec<Point>> {
        let g = self.grid();
        self.vortices
            .iter()
            .zip(&self.centers)
            .map(|(v, c)| {
                let mut data: Vec<f64> = (0..g.len()).map(|k| v.radial_on(&g, g.node_of(k), *c)).collect();
                let m = deterministic_sum(&data) / data.len() as f64;
                data.iter_mut().for_each(|x| *x -= m);
                let st = SpectralState::new(self.n, &data, 0.0)?.gaussian_filtered(sigma);
                Ok(st.velocity_at(*c))
            })
            .collect()
    }

    /// Nodes within `2 eps` of any center are excluded from remainder norms.
    pub fn excluded(&self, centers: &[Point], x: Point) -> bool {
        let g = self.grid();
        centers.iter().any(|c| g.distance(x, *c) < 2.0 * self.eps)
    }

    /// `b = ω − Σ vortices`, with `NaN` on excluded nodes.
    pub fn remainder(&self, omega: &[f64], centers: &[Point]) -> Vec<f64> {
        let g = self.grid();
        let s = self.singular_data(centers);
        (0..g.len())
            .map(|k| {
                if self.excluded(centers, g.node_of(k)) {
                    f64::NAN
                } else {
                    omega[k] - s[k]
                }
            })
            .collect()
    }

    /// Residual velocity `u − Σ self-velocities` on the grid.
    pub fn residual_velocity(&self, u: &VectorField2D, centers: &[Point]) -> VectorField2D {
        let g = self.grid();
        let (ru, rv): (Vec<f64>, Vec<f64>) = (0..g.len())
            .into_par_iter()
            .map(|k| {
                let x = g.node_of(k);
                let mut w = [u.u[k], u.v[k]];
                for (v, c) in self.vortices.iter().zip(centers) {
                    let s = v.self_velocity(&g, x, *c);
                    w[0] -= s[0];
                    w[1] -= s[1];
                }
                (w[0], w[1])
            })
            .unzip();
        VectorField2D { grid: g, u: ru, v: rv }
    }
}

/// Sampled `sup |u_r(x) − u_r(y)| / L(|x − y|)` over node pairs outside
/// the excluded zones, with `Δx ≤ |x − y| ≤ 0.9 m_L`.
pub fn residual_modulus_constant(
    sys: &VortexSystem,
    u_r: &VectorField2D,
    centers: &[Point],
    spec: &ModulusSpec,
    pairs: usize,
    seed: u64,
) -> Result<f64> {
    use rand::{Rng, SeedableRng};
    let g = sys.grid();
    let max_off = ((0.9 * spec.m_l() / g.h).floor() as i64).max(1);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = g.nx as i64;
    let mut best = 0.0f64;
    let mut tried = 0;
    while tried < pairs {
        let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let (di, dj) = (rng.gen_range(-max_off..=max_off), rng.gen_range(-max_off..=max_off));
        if di == 0 && dj == 0 {
            continue;
        }
        let dist = g.h * ((di * di + dj * dj) as f64).sqrt();
        if dist > 0.9 * spec.m_l() {
            continue;
        }
        let (a, b) = (
            g.index(i as usize, j as usize),
            g.index((i + di).rem_euclid(n) as usize, (j + dj).rem_euclid(n) as usize),
        );
        if sys.excluded(centers, g.node_of(a)) || sys.excluded(centers, g.node_of(b)) {
            continue;
        }
        tried += 1;
        let du = (u_r.u[a] - u_r.u[b]).hypot(u_r.v[a] - u_r.v[b]);
        best = best.max(du / spec.eval_l(dist)?);
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorRow {
    pub t: f64,
    pub centers: Vec<Point>,
    pub sup_b: f64,
    pub l1_b: f64,
    pub lp_b: Vec<f64>,
    pub yudovich_ratio: f64,
    pub energy: f64,
    pub enstrophy: f64,
    pub max_speed: f64,
    /// `‖ω(t) − ω(0)‖₂ / ‖ω(0)‖₂`.
    pub drift_l2: f64,
    pub divergence: f64,
    /// Sampled exterior modulus constant of `u_r` (0 when not sampled).
    pub ur_modulus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub t_final: f64,
    /// Upper bound on the step; the step also stays below `cfl` times the limit.
    pub dt: f64,
    pub cfl: f64,
    pub monitor_every: f64,
    pub theta: Theta,
    pub p_grid: Vec<f64>,
    /// Width, in cells, of the Gaussian filter applied to the initial grid
    /// vorticity. Zero disables it.
    pub filter_cells: f64,
    /// Node pairs for the `u_r` modulus estimate; 0 disables it.
    pub modulus_pairs: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            t_final: 1.0,
            dt: 0.05,
            cfl: 0.5,
            monitor_every: 0.25,
            theta: Theta::IterLog(1),
            p_grid: vec![2.0, 4.0, 8.0, 16.0],
            filter_cells: 1.0,
            modulus_pairs: 0,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rows: Vec<MonitorRow>,
    /// Center positions at every step.
    pub tracks: Vec<(f64, Vec<Point>)>,
    pub steps: usize,
    pub state: SpectralState,
    pub system: VortexSystem,
    pub corrections: Vec<Point>,
}

impl RunOutput {
    pub fn norms_csv(&self) -> String {
        let mut s = String::from("t,sup_b,l1_b");
        if let Some(r) = self.rows.first() {
            for k in 0..r.lp_b.len() {
                s.push_str(&format!(",lp_b_{k}"));
            }
        }
        s.push_str(",yudovich_ratio,energy,enstrophy,max_speed,drift_l2\n");
        for r in &self.rows {
            s.push_str(&format!("{:.6},{:.10e},{:.10e}", r.t, r.sup_b, r.l1_b));
            for v in &r.lp_b {
                s.push_str(&format!(",{v:.10e}"));
            }
            s.push_str(&format!(
                ",{:.10e},{:.12e},{:.12e},{:.10e},{:.10e}\n",
                r.yudovich_ratio, r.energy, r.enstrophy, r.max_speed, r.drift_l2
            ));
        }
        s
    }

    pub fn centers_csv(&self) -> String {
        let mut s = String::from("t");
        let nv = self.tracks.first().map_or(0, |t| t.1.len());
        for j in 0..nv {
            s.push_str(&format!(",x{j},y{j}"));
        }
        s.push('\n');
        for (t, cs) in &self.tracks {
            s.push_str(&format!("{t:.8}"));
            for c in cs {
                s.push_str(&format!(",{:.12e},{:.12e}", c[0], c[1]));
            }
            s.push('\n');
        }
        s
    }
}

fn monitor(state: &SpectralState, sys: &VortexSystem, centers: &[Point], omega0: &[f64], cfg: &RunConfig) -> Result<MonitorRow> {
    let omega = state.omega();
    let b = sys.remainder(&omega, centers);
    let vals: Vec<f64> = b.iter().copied().filter(|v| !v.is_nan()).collect();
    let area = sys.grid().cell_area();
    let sup_b = lp_norm_of(&vals, area, f64::INFINITY)?;
    let l1_b = lp_norm_of(&vals, area, 1.0)?;
    let lp_b = cfg
        .p_grid
        .iter()
        .map(|&p| lp_norm_of(&vals, area, p))
        .collect::<Result<Vec<_>>>()?;
    let yud = yudovich_from_values(&cfg.p_grid, &lp_b, cfg.theta)?;
    let diff: Vec<f64> = omega.iter().zip(omega0).map(|(a, b)| (a - b) * (a - b)).collect();
    let base: Vec<f64> = omega0.iter().map(|a| a * a).collect();
    let drift_l2 = (deterministic_sum(&diff) / deterministic_sum(&base).max(f64::MIN_POSITIVE)).sqrt();
    let ur_modulus = match sys.vortices.first() {
        Some(v) if cfg.modulus_pairs > 0 => {
            let u_r = sys.residual_velocity(&state.velocity(), centers);
            residual_modulus_constant(sys, &u_r, centers, &v.profile.modulus, cfg.modulus_pairs, cfg.seed)?
        }
        _ => 0.0,
    };
    Ok(MonitorRow {
        t: state.t,
        centers: centers.to_vec(),
        sup_b,
        l1_b,
        lp_b,
        yudovich_ratio: yud.yudovich_ratio,
        energy: state.energy(),
        enstrophy: state.enstrophy(),
        max_speed: state.max_speed(),
        drift_l2,
        divergence: state.divergence_defect(),
        ur_modulus,
    })
}

/// Co-evolves the spectral vorticity and the vortex centers.
pub fn run_singular_vortex(system: VortexSystem, cfg: &RunConfig, forcing: Option<Forcing>) -> Result<RunOutput> {
    let omega_grid = system.vorticity_data();
    let sigma = cfg.filter_cells * Grid2::torus(system.n).h;
    let mut state = SpectralState::new(system.n, &omega_grid, 0.0)?.gaussian_filtered(sigma);
    if let Some(f) = forcing {
        state = state.with_forcing(f);
    }
    let omega0 = state.omega();
    let corrections = system.center_corrections(sigma)?;
    let mut centers = system.centers.clone();
    let mut rows = vec![monitor(&state, &system, &centers, &omega0, cfg)?];
    let mut tracks = vec![(0.0, centers.clone())];
    let mut steps = 0;
    let mut next_monitor = cfg.monitor_every;
    let grid = system.grid();
    while state.t < cfg.t_final - 1e-12 {
        let lim = state.cfl_limit();
        let mut dt = cfg.dt.min(cfg.cfl * lim);
        dt = dt.min(cfg.t_final - state.t);
        if next_monitor > state.t {
            dt = dt.min(next_monitor - state.t);
        }
        if dt > lim {
            return Err(Error::Cfl {
                dt,
                suggested: 0.9 * lim,
            });
        }
        state.step_coupled(dt, &mut centers, &corrections)?;
        for c in centers.iter_mut() {
            *c = grid.wrap(*c);
        }
        steps += 1;
        tracks.push((state.t, centers.clone()));
        for i in 0..centers.len() {
            for j in i + 1..centers.len() {
                let d = grid.distance(centers[i], centers[j]);
                if d < 4.0 * grid.h {
                    return Err(Error::Collision { i, j, separation: d });
                }
            }
        }
        if state.t >= next_monitor - 1e-12 || state.t >= cfg.t_final - 1e-12 {
            rows.push(monitor(&state, &system, &centers, &omega0, cfg)?);
            while next_monitor <= state.t + 1e-12 {
                next_monitor += cfg.monitor_every;
            }
        }
    }
    Ok(RunOutput {
        rows,
        tracks,
        steps,
        state,
        system,
        corrections,
    })
}

/// Source term of the remainder equation at `x` for vortex `j`:
/// `(x − φ)·(u_r(φ) − u_r(x))/|x − φ| · γ F'(M) M'(|x − φ|) + f`.
pub fn remainder_source(
    vortex: &Vortex,
    center: Point,
    u_r_center: Point,
    u_r_x: Point,
    x: Point,
    eps: f64,
    f: f64,
) -> Result<f64> {
    let d = [x[0] - center[0], x[1] - center[1]];
    let r = norm(d);
    if r < 2.0 * eps {
        return domain(format!(
            "point at distance {r:.3e} lies in the excluded zone 2ε = {:.3e}",
            2.0 * eps
        ));
    }
    let p = &vortex.profile;
    let mprime = p.modulus.eval_m_prime(r.min(p.modulus.m_l()))?;
    let m = p.modulus.eval_m(r.min(p.modulus.m_l()))?;
    let diff = [u_r_center[0] - u_r_x[0], u_r_center[1] - u_r_x[1]];
    Ok((d[0] * diff[0] + d[1] * diff[1]) / r * p.gamma * p.shape.deriv(m) * mprime + f)
}

/// Angular velocity of a co-rotating pair from the reduced center ODE
/// `dφⱼ/dt = Σ_{i≠j} [u_i(φⱼ) − (m_i / 2A)(φⱼ − φᵢ)⊥]`.
pub fn reduced_pair_angular_velocity(a: &Vortex, b: &Vortex, d: f64) -> f64 {
    let area = 4.0 * PI * PI;
    let ua = a.circulation.gamma_at(d) / d - a.mass / (2.0 * area) * d;
    let ub = b.circulation.gamma_at(d) / d - b.mass / (2.0 * area) * d;
    (ua + ub) / d
}

/// Integrates the reduced two-center ODE with RK4 and returns the center tracks.
pub fn reduced_pair_tracks(a: &Vortex, b: &Vortex, ca: Point, cb: Point, t_final: f64, dt: f64) -> Vec<(f64, Point, Point)> {
    let area = 4.0 * PI * PI;
    let vel = |p: Point, q: Point| -> (Point, Point) {
        let dab = [p[0] - q[0], p[1] - q[1]];
        let on_a = b.circulation.velocity(dab);
        let on_a = [
            on_a[0] - b.mass / (2.0 * area) * perp(dab)[0],
            on_a[1] - b.mass / (2.0 * area) * perp(dab)[1],
        ];
        let dba = [-dab[0], -dab[1]];
        let on_b = a.circulation.velocity(dba);
        let on_b = [
            on_b[0] - a.mass / (2.0 * area) * perp(dba)[0],
            on_b[1] - a.mass / (2.0 * area) * perp(dba)[1],
        ];
        (on_a, on_b)
    };
    let mut out = vec![(0.0, ca, cb)];
    let (mut p, mut q, mut t) = (ca, cb, 0.0);
    let steps = (t_final / dt).ceil() as usize;
    let h = t_final / steps as f64;
    let ax = |x: Point, v: Point, s: f64| [x[0] + s * v[0], x[1] + s * v[1]];
    for _ in 0..steps {
        let (k1p, k1q) = vel(p, q);
        let (k2p, k2q) = vel(ax(p, k1p, h / 2.0), ax(q, k1q, h / 2.0));
        let (k3p, k3q) = vel(ax(p, k2p, h / 2.0), ax(q, k2q, h / 2.0));
        let (k4p, k4q) = vel(ax(p, k3p, h), ax(q, k3q, h));
        for d in 0..2 {
            p[d] += h / 6.0 * (k1p[d] + 2.0 * k2p[d] + 2.0 * k3p[d] + k4p[d]);
            q[d] += h / 6.0 * (k1q[d] + 2.0 * k2q[d] + 2.0 * k3q[d] + k4q[d]);
        }
        t += h;
        out.push((t, p, q));
    }
    out
}

/// Unwrapped angle of `q − p` along a track.
pub fn pair_angles(grid: &Grid2, track: &[(f64, Vec<Point>)]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(track.len());
    let mut prev: Option<f64> = None;
    let mut offset = 0.0;
    for (t, cs) in track {
        let d = grid.displacement(cs[1], cs[0]);
        let a = d[1].atan2(d[0]);
        if let Some(pa) = prev {
            let jump = a - pa;
            if jump > PI {
                offset -= 2.0 * PI;
            } else if jump < -PI {
                offset += 2.0 * PI;
            }
        }
        prev = Some(a);
        out.push((*t, a + offset));
    }
    out
}

/// Loglog vortex of strength `gamma` with the taper on `[m_L/2, m_L]`.
pub fn loglog_vortex(center: Point, gamma: f64) -> Result<SingularProfile> {
    SingularProfile::standard(center, gamma, ModulusSpec::log_lipschitz(), OuterShape::Identity)
}

/// `log₂(1/z) log₃(1/z)` vortex: `z log z` applied to the loglog profile.
pub fn breakdown_vortex(center: Point, gamma: f64) -> Result<SingularProfile> {
    SingularProfile::standard(center, gamma, ModulusSpec::log_lipschitz(), OuterShape::ZLogZ)
}

/// `sgn(x₁ − c₁) sgn(x₂ − c₂)` on the torus, with the jumps smoothed by
/// `tanh(s/δ)` where `s` is the signed periodic distance to each axis.
pub fn smoothed_sign(center: Point, delta: f64) -> impl Fn(Point) -> f64 + Sync {
    move |x: Point| {
        let sx = wrap_signed(x[0] - center[0]);
        let sy = wrap_signed(x[1] - center[1]);
        smooth_square_wave(sx, delta) * smooth_square_wave(sy, delta)
    }
}

fn wrap_signed(v: f64) -> f64 {
    (v + PI).rem_euclid(2.0 * PI) - PI
}

/// Periodic square wave: +1 on `(0, π)`, −1 on `(−π, 0)`, with both jumps
/// (at 0 and ±π) smoothed.
fn smooth_square_wave(s: f64, delta: f64) -> f64 {
    let a = (s / delta).tanh();
    let edge = PI - s.abs();
    a * (edge / delta).tanh()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakdownRow {
    pub n: usize,
    pub t: f64,
    pub sup_b: f64,
    pub lp_b: Vec<f64>,
    pub yudovich_ratio: f64,
}

/// `log₂ log₃` vortex at the center of the torus with `b₀` the smoothed
/// sign field, run at each grid size. Reports the remainder trend only.
pub fn breakdown_experiment(sizes: &[usize], cfg: &RunConfig) -> Result<(Vec<BreakdownRow>, Vec<RunOutput>)> {
    let c = [PI, PI];
    let mut rows = Vec::new();
    let mut outs = Vec::new();
    for &n in sizes {
        let h = 2.0 * PI / n as f64;
        let sys = VortexSystem::new(n, vec![breakdown_vortex(c, 1.0)?], smoothed_sign(c, h), 2.0)?;
        let out = run_singular_vortex(sys, cfg, None)?;
        rows.extend(out.rows.iter().map(|r| BreakdownRow {
            n,
            t: r.t,
            sup_b: r.sup_b,
            lp_b: r.lp_b.clone(),
            yudovich_ratio: r.yudovich_ratio,
        }));
        outs.push(out);
    }
    Ok((rows, outs))
}

/// Rigid shift of a point set.
pub fn shift_points(p: &[Point], by: Point) -> Vec<Point> {
    p.iter().map(|q| [q[0] + by[0], q[1] + by[1]]).collect()
}
