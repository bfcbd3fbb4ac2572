//! The named experiments. Each preset owns a parameter schema, runs a module
//! pipeline and reports per-check verdicts, scalar metrics and artifacts.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use osgood_core::euler2d::{
    breakdown_experiment, loglog_vortex, pair_angles, reduced_pair_angular_velocity, reduced_pair_tracks, run_singular_vortex,
    RunConfig, SpectralState, VortexSystem,
};
use osgood_core::field::{Grid2, ScalarField2D};
use osgood_core::flow::{pair_separation_certificate, AnalyticField, Certificate, VelocityField, CERTIFICATE_SLACK_TOL};
use osgood_core::modulus::ModulusSpec;
use osgood_core::profile::{OuterShape, SingularProfile};
use osgood_core::seminorm::{dyadic_p_grid, iterated_log_lp_growth, Theta};
use osgood_core::stability::{interpolation_trials, light_cone_experiment, ConeConfig, RegularizedFamily};
use osgood_core::transport::{
    linear_fit, remainder_experiment, seminorm_transport_check, sharpness_experiment, Background, InitialData,
};

use crate::config::{param, Kind, Param, Params};
use crate::error::{Error, Result, StageExt};
use crate::parse;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

pub fn check(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        pass,
        detail: detail.into(),
    }
}

/// What a pipeline hands back to the manifest writer.
#[derive(Debug, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub metrics: BTreeMap<String, f64>,
    /// File name and content, written under the output directory.
    pub artifacts: Vec<(String, Vec<u8>)>,
    pub steps: u64,
}

impl Outcome {
    pub fn metric(&mut self, k: impl Into<String>, v: f64) {
        self.metrics.insert(k.into(), v);
    }

    pub fn text(&mut self, name: &str, content: String) {
        self.artifacts.push((name.to_string(), content.into_bytes()));
    }

    pub fn json<T: Serialize>(&mut self, name: &str, v: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(v)?;
        s.push('\n');
        self.text(name, s);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    OsgoodCertificate,
    SeminormPropagation,
    LocalStructure,
    SharpnessLipschitz,
    SharpnessLoglipschitz,
    LemmaLp,
    EulerSteady,
    EulerPerturbed,
    EulerTwoVortex,
    EulerBreakdown,
    Lightcone,
    Interp,
}

const OSGOOD: &[Param] = &[
    param("pairs", Kind::Int, "100", "pairs per family (stable line and off line)"),
    param("t", Kind::Float, "1.0", "flow time"),
    param("tol", Kind::Float, "1e-12", "ODE tolerance"),
    param("seed", Kind::Int, "1", "pair sampling seed"),
    param("box", Kind::Float, "0.5", "half width of the sampling box"),
    param("d_min", Kind::Float, "1e-4", "smallest pair separation"),
    param("d_max", Kind::Float, "0.3", "largest pair separation"),
    param("ratio_tol", Kind::Float, "1e-6", "allowed |ratio - e^-t| on the stable line"),
];

const SEMINORM: &[Param] = &[
    param("n", Kind::Int, "1024", "local grid nodes per side"),
    param("t", Kind::Float, "0.5", "flow time"),
    param("gamma", Kind::Float, "1.0", "seminorm exponent, in (0, 1]"),
    param("field", Kind::Text, "hyperbolic", "velocity field"),
    param("x0", Kind::Floats, "0.1,0.05", "cusp location"),
    param(
        "radii",
        Kind::Floats,
        "0.05,0.02,0.01,0.005",
        "decreasing radii around the transported point",
    ),
    param("tol", Kind::Float, "1e-10", "ODE relative tolerance"),
    param(
        "agreement_tol",
        Kind::Float,
        "0.1",
        "allowed relative gap between the two limits",
    ),
];

const LOCAL: &[Param] = &[
    param("fields", Kind::Text, "rotation,hyperbolic", "comma-separated velocity fields"),
    param("shapes", Kind::Text, "identity,sin:0.3", "comma-separated outer shapes"),
    param("times", Kind::Floats, "0.25,0.5,1", "flow times"),
    param("n", Kind::Int, "64", "window nodes per side"),
    param("tol", Kind::Float, "1e-12", "ODE relative tolerance"),
    param("x0", Kind::Floats, "0.3,0.1", "profile center"),
    param("background", Kind::Text, "patch:0.3,0.1,0.2,0.5", "bounded part of the data"),
    param("slack", Kind::Float, "0.05", "relative slack on the remainder bound"),
];

const SHARP_LIP: &[Param] = &[
    param("t", Kind::Float, "1.0", "flow time"),
    param("radii_exp", Kind::Ints, "4,5,6,7,8,9,10", "annulus radii 2^-k"),
    param("tol", Kind::Float, "1e-12", "ODE relative tolerance"),
    param("slope_tol", Kind::Float, "0.1", "relative tolerance on the slope 2t"),
    param(
        "control_margin",
        Kind::Float,
        "0.05",
        "allowed excess of the identity control over t",
    ),
];

const SHARP_LOGLIP: &[Param] = &[
    param("k", Kind::Int, "64", "Bahouri-Chemin series truncation"),
    param("t", Kind::Float, "1.0", "flow time"),
    param("radii_exp", Kind::Ints, "2,3,4,5,6,7,8", "annulus radii 2^-k"),
    param("tol", Kind::Float, "1e-10", "ODE relative tolerance"),
    param(
        "small_r",
        Kind::Float,
        "0.0625",
        "radii at or below this enter the growth check",
    ),
    param("c_fraction", Kind::Float, "0.25", "required sup|b| / M(r) as a fraction of t"),
];

const LEMMA: &[Param] = &[
    param("orders", Kind::Ints, "1,2,3", "iterated-log orders n"),
    param(
        "p_max",
        Kind::Float,
        "256",
        "largest exponent of the dyadic grid starting at 2",
    ),
    param("band_lo", Kind::Float, "0.1", "lower edge of the ratio band"),
    param("band_hi", Kind::Float, "10", "upper edge of the ratio band"),
    param("growth_tol", Kind::Float, "0.15", "allowed relative change per doubling"),
    param(
        "p_tail",
        Kind::Float,
        "64",
        "doublings from this exponent on enter the growth check",
    ),
];

const STEADY: &[Param] = &[
    param("n", Kind::Int, "256", "grid nodes per side"),
    param("t_final", Kind::Float, "1.0", "final time"),
    param("dt", Kind::Float, "0.05", "largest time step"),
    param("monitor_every", Kind::Float, "0.25", "monitor cadence"),
    param("gamma", Kind::Float, "1.0", "vortex strength"),
    param("mollify_cells", Kind::Float, "2", "core mollification radius in cells"),
    param("filter_cells", Kind::Float, "1", "initial Gaussian filter width in cells"),
    param("drift_tol", Kind::Float, "1e-3", "allowed relative L2 vorticity drift"),
    param("control_n", Kind::Int, "128", "Taylor-Green control grid"),
    param("control_t", Kind::Float, "1.0", "Taylor-Green control final time"),
    param("control_dt", Kind::Float, "0.01", "Taylor-Green control step"),
    param(
        "conservation_tol",
        Kind::Float,
        "1e-6",
        "allowed relative energy and enstrophy drift",
    ),
];

const PERTURBED: &[Param] = &[
    param("n", Kind::Int, "256", "grid nodes per side"),
    param("t_final", Kind::Float, "1.0", "final time"),
    param("dt", Kind::Float, "0.05", "largest time step"),
    param("monitor_every", Kind::Float, "0.25", "monitor cadence"),
    param("gamma", Kind::Float, "1.0", "vortex strength"),
    param(
        "patch",
        Kind::Text,
        "patch:3.7415926535897931,3.3415926535897931,0.5,0.5",
        "bounded part of the data",
    ),
    param("theta", Kind::Text, "1", "growth function: 1 or log"),
    param("p_grid", Kind::Floats, "2,4,8,16", "Lp exponents"),
    param("modulus_pairs", Kind::Int, "20000", "node pairs for the u_r modulus estimate"),
    param("seed", Kind::Int, "7", "pair sampling seed"),
    param("slack", Kind::Float, "0.1", "relative slack on the growth term"),
];

const PAIR: &[Param] = &[
    param("n", Kind::Int, "256", "grid nodes per side"),
    param("separation", Kind::Float, "0.7853981633974483", "initial center distance"),
    param("gamma", Kind::Float, "1.0", "strength of each vortex"),
    param("r_cut", Kind::Float, "0.25", "profile support radius"),
    param("taper", Kind::Float, "0.125", "radius where the taper starts"),
    param("dt", Kind::Float, "0.5", "largest time step"),
    param("period_tol", Kind::Float, "0.05", "allowed relative period error"),
];

const BREAKDOWN: &[Param] = &[
    param("sizes", Kind::Ints, "256,512", "grid sizes"),
    param("t_final", Kind::Float, "1.0", "final time"),
    param("dt", Kind::Float, "0.05", "largest time step"),
    param("monitor_every", Kind::Float, "0.25", "monitor cadence"),
];

const CONE: &[Param] = &[
    param("n", Kind::Int, "512", "grid nodes per side"),
    param("gamma", Kind::Float, "1.0", "vortex strength"),
    param("background", Kind::Float, "0.3", "amplitude of the smooth part"),
    param("eps1", Kind::Float, "0.3", "first regularization radius"),
    param("eps2", Kind::Float, "0.5", "second regularization radius"),
    param("delta", Kind::Float, "0.5", "initial ball radius"),
    param("t_final", Kind::Float, "1.0", "final time"),
    param("monitor_every", Kind::Float, "0.05", "monitor cadence"),
    param("speed_c", Kind::Float, "2", "cone speed factor on max|u|"),
    param("speed_a", Kind::Float, "0.25", "additive cone speed"),
    param(
        "front_threshold",
        Kind::Float,
        "1e-6",
        "difference level that defines the front",
    ),
    param("p", Kind::Float, "4", "interior Lp exponent"),
    param("ratio_tol", Kind::Float, "1e-3", "allowed exterior / interior sup ratio"),
];

const INTERP: &[Param] = &[
    param("trials", Kind::Int, "10000", "random fields"),
    param("n", Kind::Int, "32", "grid nodes per side"),
    param("band", Kind::Int, "10", "largest wavenumber component"),
    param("s", Kind::Floats, "0.25,0.5,1", "smoothness indices"),
    param("k_max", Kind::Int, "4", "largest derivative order"),
    param("seed", Kind::Int, "1", "field sampling seed"),
];

impl Preset {
    pub const ALL: [Preset; 12] = [
        Preset::OsgoodCertificate,
        Preset::SeminormPropagation,
        Preset::LocalStructure,
        Preset::SharpnessLipschitz,
        Preset::SharpnessLoglipschitz,
        Preset::LemmaLp,
        Preset::EulerSteady,
        Preset::EulerPerturbed,
        Preset::EulerTwoVortex,
        Preset::EulerBreakdown,
        Preset::Lightcone,
        Preset::Interp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::OsgoodCertificate => "osgood-certificate",
            Preset::SeminormPropagation => "seminorm-propagation",
            Preset::LocalStructure => "local-structure",
            Preset::SharpnessLipschitz => "sharpness-lipschitz",
            Preset::SharpnessLoglipschitz => "sharpness-loglipschitz",
            Preset::LemmaLp => "lemma-lp",
            Preset::EulerSteady => "euler-steady",
            Preset::EulerPerturbed => "euler-perturbed",
            Preset::EulerTwoVortex => "euler-two-vortex",
            Preset::EulerBreakdown => "euler-breakdown",
            Preset::Lightcone => "lightcone",
            Preset::Interp => "interp",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Self::ALL.iter().map(|p| p.name()).collect();
            Error::Config(format!("unknown preset {s:?}; available: {}", names.join(", ")))
        })
    }

    /// The mathematical statement the preset exercises.
    pub fn statement(self) -> &'static str {
        match self {
            Preset::OsgoodCertificate => "Osgood two-point bound: 1/mu(t) <= R(|phi_t x - phi_t y|) / R(|x - y|) <= mu(t)",
            Preset::SeminormPropagation => "Local seminorms are transported: [theta(t)] at phi(x,t) equals [theta_0] at x",
            Preset::LocalStructure => "Transported singular structure: sup|b(t)| <= sup|b_0| + [F] log mu(t)",
            Preset::SharpnessLipschitz => "Sharpness under a Lipschitz flow: superlinear F gives sup|b| ~ 2t log(1/r)",
            Preset::SharpnessLoglipschitz => "Sharpness under the Bahouri-Chemin flow: superlinear F gives sup|b| >= c M(r)",
            Preset::LemmaLp => "Iterated-log Lp lemma: ||log_n(1/|x|)||_Lp(B1) is comparable to log_(n-1)(p)",
            Preset::EulerSteady => "Radial vortices have no self-interaction and stay steady",
            Preset::EulerPerturbed => "Perturbed singular vortex: ||b(t)||_p <= ||b_0||_p + t C Theta(p)",
            Preset::EulerTwoVortex => "Several singular vortices: centers follow the reduced point-vortex dynamics",
            Preset::EulerBreakdown => "log_2 log_3 vortex with bounded perturbation: remainder trend (conjectured breakdown)",
            Preset::Lightcone => "Exterior regularity light cone for two regularizations differing in B_delta",
            Preset::Interp => "Homogeneous Sobolev interpolation inequality on band-limited fields",
        }
    }

    pub fn schema(self) -> &'static [Param] {
        match self {
            Preset::OsgoodCertificate => OSGOOD,
            Preset::SeminormPropagation => SEMINORM,
            Preset::LocalStructure => LOCAL,
            Preset::SharpnessLipschitz => SHARP_LIP,
            Preset::SharpnessLoglipschitz => SHARP_LOGLIP,
            Preset::LemmaLp => LEMMA,
            Preset::EulerSteady => STEADY,
            Preset::EulerPerturbed => PERTURBED,
            Preset::EulerTwoVortex => PAIR,
            Preset::EulerBreakdown => BREAKDOWN,
            Preset::Lightcone => CONE,
            Preset::Interp => INTERP,
        }
    }

    pub fn run(self, p: &Params) -> Result<Outcome> {
        match self {
            Preset::OsgoodCertificate => osgood_certificate(p),
            Preset::SeminormPropagation => seminorm_propagation(p),
            Preset::LocalStructure => local_structure(p),
            Preset::SharpnessLipschitz => sharpness_lipschitz(p),
            Preset::SharpnessLoglipschitz => sharpness_loglipschitz(p),
            Preset::LemmaLp => lemma_lp(p),
            Preset::EulerSteady => euler_steady(p),
            Preset::EulerPerturbed => euler_perturbed(p),
            Preset::EulerTwoVortex => euler_two_vortex(p),
            Preset::EulerBreakdown => euler_breakdown(p),
            Preset::Lightcone => lightcone(p),
            Preset::Interp => interp(p),
        }
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, a: f64, b: f64) -> f64 {
    (a.ln() + rng.gen::<f64>() * (b / a).ln()).exp()
}

fn certificate_line(c: &Certificate, family: &str) -> Result<String> {
    let mut v = serde_json::to_value(c)?;
    v["family"] = family.into();
    Ok(serde_json::to_string(&v)?)
}

fn osgood_certificate(p: &Params) -> Result<Outcome> {
    let spec = ModulusSpec::lipschitz();
    let u = VelocityField::analytic(AnalyticField::Hyperbolic)
        .with_exact_bound(spec.clone())
        .stage("modulus bound")?;
    let (t, tol, half) = (p.f64("t"), p.f64("tol"), p.f64("box"));
    let (d_min, d_max) = (p.f64("d_min"), p.f64("d_max"));
    if !(0.0 < d_min && d_min < d_max) || !(half > 0.0) {
        return Err(Error::Config("need 0 < d_min < d_max and box > 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.u64("seed"));
    let target = (-t).exp();
    let mut lines = String::new();
    let mut out = Outcome::default();

    // x₁ + x₂ = 0 contracts by exactly e^{−t}.
    let mut stable_err = 0.0f64;
    let mut stable_slack = f64::INFINITY;
    let diag = std::f64::consts::FRAC_1_SQRT_2;
    for _ in 0..p.usize("pairs") {
        let s = rng.gen_range(-half..half);
        let d = log_uniform(&mut rng, d_min, d_max);
        let x = [s, -s];
        let y = [s + d * diag, -s - d * diag];
        let c = pair_separation_certificate(&u, &spec, x, y, t, tol).stage("stable-line certificate")?;
        stable_err = stable_err.max((c.ratio - target).abs());
        stable_slack = stable_slack.min(c.slack);
        lines.push_str(&certificate_line(&c, "stable")?);
        lines.push('\n');
    }

    let mut off_slack = f64::INFINITY;
    let mut off_pass = 0usize;
    let pairs = p.usize("pairs");
    for _ in 0..pairs {
        let x = [rng.gen_range(-half..half), rng.gen_range(-half..half)];
        let d = log_uniform(&mut rng, d_min, d_max);
        let a = rng.gen_range(0.0..2.0 * PI);
        let y = [x[0] + d * a.cos(), x[1] + d * a.sin()];
        let c = pair_separation_certificate(&u, &spec, x, y, t, tol).stage("off-line certificate")?;
        off_slack = off_slack.min(c.slack);
        off_pass += c.pass as usize;
        lines.push_str(&certificate_line(&c, "off-line")?);
        lines.push('\n');
    }
    out.text("certificates.jsonl", lines);
    out.metric("stable_max_ratio_error", stable_err);
    out.metric("stable_min_slack", stable_slack);
    out.metric("offline_min_slack", off_slack);
    out.metric("offline_pass_fraction", off_pass as f64 / pairs.max(1) as f64);
    let ratio_tol = p.f64("ratio_tol");
    out.checks.push(check(
        "stable-line ratio equals e^-t",
        stable_err <= ratio_tol,
        format!("max |R-ratio - e^-t| = {stable_err:.3e} (limit {ratio_tol:.1e})"),
    ));
    out.checks.push(check(
        "off-line pairs inside [1/mu, mu]",
        off_slack >= -CERTIFICATE_SLACK_TOL,
        format!("min slack = {off_slack:.3e} over {pairs} pairs (integration noise allowance {CERTIFICATE_SLACK_TOL:.0e})"),
    ));
    Ok(out)
}

fn cusp_shape(gamma: f64) -> Result<OuterShape> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Config(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    Ok(if gamma == 1.0 {
        OuterShape::Identity
    } else {
        OuterShape::Power(gamma)
    })
}

fn seminorm_propagation(p: &Params) -> Result<Outcome> {
    let spec = ModulusSpec::log_lipschitz();
    let gamma = p.f64("gamma");
    let x0 = p.point("x0")?;
    let field = parse::analytic_field(p.text("field"))?;
    let u = VelocityField::analytic(field)
        .with_exact_bound(spec.clone())
        .stage("modulus bound")?;
    let profile = SingularProfile::standard(x0, 1.0, spec.clone(), cusp_shape(gamma)?).stage("profile")?;
    let theta0 = InitialData {
        profile: Some(profile),
        background: Background::Zero,
    };
    let radii = p.floats("radii");
    let cmp = seminorm_transport_check(&u, &spec, &theta0, x0, gamma, p.f64("t"), &radii, p.usize("n"), p.f64("tol"))
        .stage("seminorm transport")?;
    let mut out = Outcome::default();
    out.text("initial.csv", cmp.initial.to_csv());
    out.text("transported.csv", cmp.transported.to_csv());
    out.json("comparison.json", &cmp)?;
    let tol = p.f64("agreement_tol");
    let (lo, hi) = *cmp.bracket.last().expect("nonempty radii");
    out.metric("agreement", cmp.agreement);
    out.metric("initial_limit", cmp.initial.limit);
    out.metric("transported_limit", cmp.transported.limit);
    out.checks.push(check(
        "limits agree",
        (cmp.agreement - 1.0).abs() <= tol,
        format!("transported / initial = {:.4} (allowed 1 +- {tol})", cmp.agreement),
    ));
    out.checks.push(check(
        "ratio inside the proof bracket",
        cmp.agreement >= lo && cmp.agreement <= hi,
        format!("{:.4} in [{lo:.4}, {hi:.4}]", cmp.agreement),
    ));
    Ok(out)
}

fn local_structure(p: &Params) -> Result<Outcome> {
    let spec = ModulusSpec::log_lipschitz();
    let x0 = p.point("x0")?;
    let bg = parse::background(p.text("background"))?;
    let slack = p.f64("slack");
    let mut out = Outcome::default();
    let mut csv = String::from("field,shape,t,r,r_valid,nodes,sup_b,b0_sup,lint,slope,bound,margin,sign_changes,pass\n");
    let mut worst = f64::INFINITY;
    for f in p.text("fields").split(',') {
        let field = parse::analytic_field(f)?;
        let u = VelocityField::analytic(field.clone())
            .with_exact_bound(spec.clone())
            .stage("modulus bound")?;
        for s in p.text("shapes").split(',') {
            let shape = OuterShape::parse(s).map_err(|e| Error::Config(e.to_string()))?;
            let profile = SingularProfile::standard(x0, 1.0, spec.clone(), shape).stage("profile")?;
            let theta0 = InitialData {
                profile: Some(profile),
                background: bg.clone(),
            };
            for &t in &p.floats("times") {
                let rec = remainder_experiment(&u, &theta0, t, p.usize("n"), p.f64("tol")).stage("remainder")?;
                let ok = rec.holds(slack);
                let room = rec.b0_sup + rec.slope * rec.lint * (1.0 + slack) - rec.sup_b;
                worst = worst.min(room);
                csv.push_str(&format!(
                    "{},{},{t},{:.6e},{:.6e},{},{:.10e},{:.10e},{:.10e},{:.6e},{:.10e},{:.10e},{},{ok}\n",
                    field.name(),
                    shape,
                    rec.r,
                    rec.r_valid,
                    rec.nodes,
                    rec.sup_b,
                    rec.b0_sup,
                    rec.lint,
                    rec.slope,
                    rec.bound,
                    rec.margin,
                    rec.sign_changes
                ));
                out.checks.push(check(
                    format!("{} / {shape} / t={t}", field.name()),
                    ok,
                    format!(
                        "sup|b| = {:.6} <= {:.6} + {:.3} * {:.6} * {:.2}",
                        rec.sup_b,
                        rec.b0_sup,
                        rec.slope,
                        rec.lint,
                        1.0 + slack
                    ),
                ));
            }
        }
    }
    out.metric("min_room", worst);
    out.text("remainder.csv", csv);
    Ok(out)
}

fn radii_from_exponents(e: &[usize]) -> Vec<f64> {
    e.iter().map(|&k| 2f64.powi(-(k as i32))).collect()
}

fn sharpness_lipschitz(p: &Params) -> Result<Outcome> {
    let spec = ModulusSpec::lipschitz();
    let u = VelocityField::analytic(AnalyticField::Hyperbolic);
    let t = p.f64("t");
    let radii = radii_from_exponents(&p.usizes("radii_exp"));
    let tol = p.f64("tol");
    let mk = |shape| -> Result<InitialData> {
        Ok(InitialData {
            profile: Some(SingularProfile::new([0.0, 0.0], 1.0, spec.clone(), shape, 1.0, 0.5).stage("profile")?),
            background: Background::Zero,
        })
    };
    let sq = sharpness_experiment(&u, &mk(OuterShape::Square)?, t, &radii, tol).stage("superlinear annuli")?;
    let id = sharpness_experiment(&u, &mk(OuterShape::Identity)?, t, &radii, tol).stage("control annuli")?;
    let xs: Vec<f64> = sq.rows.iter().map(|r| r.log_inv_r).collect();
    let ys: Vec<f64> = sq.rows.iter().map(|r| r.sup_b).collect();
    let (slope, _) = linear_fit(&xs, &ys);
    let control = id.rows.iter().map(|r| r.sup_b).fold(0.0, f64::max);
    let mut out = Outcome::default();
    out.text("square.csv", sq.to_csv());
    out.text("identity.csv", id.to_csv());
    out.metric("slope", slope);
    out.metric("control_max", control);
    let (target, rel) = (2.0 * t, p.f64("slope_tol"));
    out.checks.push(check(
        "slope of sup|b| against log(1/r)",
        (slope - target).abs() <= rel * target,
        format!("slope = {slope:.6} (target {target} +- {:.3})", rel * target),
    ));
    let margin = p.f64("control_margin");
    out.checks.push(check(
        "identity control stays bounded",
        control <= t + margin,
        format!("max sup|b| = {control:.6} <= {:.3}", t + margin),
    ));
    Ok(out)
}

fn sharpness_loglipschitz(p: &Params) -> Result<Outcome> {
    let spec = ModulusSpec::log_lipschitz();
    let u = VelocityField::analytic(AnalyticField::BahouriChemin { k: p.usize("k") });
    let t = p.f64("t");
    let radii = radii_from_exponents(&p.usizes("radii_exp"));
    let profile = SingularProfile::new([0.0, 0.0], 1.0, spec.clone(), OuterShape::Square, spec.m_l(), 0.3).stage("profile")?;
    let theta0 = InitialData {
        profile: Some(profile),
        background: Background::Zero,
    };
    let tab = sharpness_experiment(&u, &theta0, t, &radii, p.f64("tol")).stage("superlinear annuli")?;
    let small_r = p.f64("small_r");
    let c_min = tab
        .rows
        .iter()
        .filter(|r| r.r <= small_r * (1.0 + 1e-12))
        .map(|r| r.sup_b / r.m)
        .fold(f64::INFINITY, f64::min);
    let need = p.f64("c_fraction") * t;
    let mut out = Outcome::default();
    out.text("annuli.csv", tab.to_csv());
    out.metric("slope_vs_m", tab.slope);
    out.metric("min_ratio_small_r", c_min);
    out.checks.push(check(
        "sup|b| >= c M(r) on small annuli",
        c_min.is_finite() && c_min >= need,
        format!("min sup|b| / M(r) over r <= {small_r} is {c_min:.4} (need >= {need:.3})"),
    ));
    Ok(out)
}

fn lemma_lp(p: &Params) -> Result<Outcome> {
    let grid = dyadic_p_grid(p.f64("p_max"));
    let (lo, hi) = (p.f64("band_lo"), p.f64("band_hi"));
    let (gtol, tail) = (p.f64("growth_tol"), p.f64("p_tail"));
    let mut out = Outcome::default();
    let mut csv = String::from("n,p,norm,theta,ratio\n");
    for n in p.usizes("orders") {
        let rows = iterated_log_lp_growth(n as u32, &grid).stage("lemma quadrature")?;
        for r in &rows {
            csv.push_str(&format!("{n},{},{:.12e},{:.12e},{:.12e}\n", r.p, r.norm, r.theta, r.ratio));
        }
        let outside: Vec<String> = rows
            .iter()
            .filter(|r| !(r.ratio >= lo && r.ratio <= hi))
            .map(|r| format!("p={} ratio={:.4}", r.p, r.ratio))
            .collect();
        let (rmin, rmax) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| {
            (a.min(r.ratio), b.max(r.ratio))
        });
        out.metric(format!("ratio_min_n{n}"), rmin);
        out.metric(format!("ratio_max_n{n}"), rmax);
        out.checks.push(check(
            format!("n={n}: ratio inside [{lo}, {hi}]"),
            outside.is_empty(),
            if outside.is_empty() {
                format!("ratios in [{rmin:.4}, {rmax:.4}]")
            } else {
                format!("outside the band: {}", outside.join("; "))
            },
        ));
        let change = rows
            .windows(2)
            .filter(|w| w[0].p >= tail)
            .map(|w| ((w[1].ratio - w[0].ratio) / w[0].ratio).abs())
            .fold(0.0, f64::max);
        out.metric(format!("tail_change_n{n}"), change);
        out.checks.push(check(
            format!("n={n}: change per doubling for p >= {tail}"),
            change < gtol,
            format!("max relative change {change:.4} (limit {gtol})"),
        ));
    }
    out.text("lemma.csv", csv);
    Ok(out)
}

fn euler_cfg(p: &Params) -> RunConfig {
    RunConfig {
        t_final: p.f64("t_final"),
        dt: p.f64("dt"),
        monitor_every: p.f64("monitor_every"),
        ..Default::default()
    }
}

/// `(t, energy, enstrophy)`.
type ConservationRow = (f64, f64, f64);

/// Perturbed Taylor-Green vortex integrated with a fixed step; returns the
/// conservation rows and the step count.
fn taylor_green(n: usize, t_final: f64, dt: f64) -> Result<(Vec<ConservationRow>, u64)> {
    let g = Grid2::torus(n);
    let w0 = ScalarField2D::from_fn(g, |x| 2.0 * x[0].cos() * x[1].cos() + 0.5 * (2.0 * x[0] + x[1]).sin());
    let mut s = SpectralState::new(n, &w0.data, 0.0).stage("control state")?;
    let steps = (t_final / dt).ceil() as u64;
    let h = t_final / steps as f64;
    let mut rows = vec![(0.0, s.energy(), s.enstrophy())];
    for _ in 0..steps {
        s.step(h).stage("control step")?;
        rows.push((s.t, s.energy(), s.enstrophy()));
    }
    Ok((rows, steps))
}

fn euler_steady(p: &Params) -> Result<Outcome> {
    let n = p.usize("n");
    let c = [PI, PI];
    let sys = VortexSystem::new(
        n,
        vec![loglog_vortex(c, p.f64("gamma")).stage("profile")?],
        |_| 0.0,
        p.f64("mollify_cells"),
    )
    .stage("vortex system")?;
    let cfg = RunConfig {
        filter_cells: p.f64("filter_cells"),
        ..euler_cfg(p)
    };
    let run = run_singular_vortex(sys, &cfg, None).stage("vortex run")?;
    let drift = run.rows.iter().map(|r| r.drift_l2).fold(0.0, f64::max);
    let g = Grid2::torus(n);
    let shift = run.tracks.iter().map(|(_, cs)| g.distance(cs[0], c)).fold(0.0, f64::max);

    let (ctl, ctl_steps) = taylor_green(p.usize("control_n"), p.f64("control_t"), p.f64("control_dt"))?;
    let (e0, z0) = (ctl[0].1, ctl[0].2);
    let de = ctl.iter().map(|r| ((r.1 - e0) / e0).abs()).fold(0.0, f64::max);
    let dz = ctl.iter().map(|r| ((r.2 - z0) / z0).abs()).fold(0.0, f64::max);

    let mut out = Outcome {
        steps: run.steps as u64 + ctl_steps,
        ..Default::default()
    };
    out.text("norms.csv", run.norms_csv());
    out.text("centers.csv", run.centers_csv());
    let mut s = String::from("t,energy,enstrophy\n");
    for r in &ctl {
        s.push_str(&format!("{:.6},{:.15e},{:.15e}\n", r.0, r.1, r.2));
    }
    out.text("control.csv", s);
    out.artifacts.push((
        "omega_final.bin".into(),
        run.state.omega_field().encode("omega", run.state.t).stage("field encoding")?,
    ));
    out.metric("drift_l2", drift);
    out.metric("center_shift", shift);
    out.metric("sup_b_final", run.rows.last().map_or(f64::NAN, |r| r.sup_b));
    out.metric("control_energy_drift", de);
    out.metric("control_enstrophy_drift", dz);
    let tol = p.f64("drift_tol");
    out.checks.push(check(
        "vorticity drift",
        drift < tol,
        format!("max relative L2 drift {drift:.3e} (limit {tol:.0e})"),
    ));
    let ctol = p.f64("conservation_tol");
    out.checks.push(check(
        "control energy",
        de < ctol,
        format!("relative energy drift {de:.3e} (limit {ctol:.0e})"),
    ));
    out.checks.push(check(
        "control enstrophy",
        dz < ctol,
        format!("relative enstrophy drift {dz:.3e} (limit {ctol:.0e})"),
    ));
    Ok(out)
}

fn euler_perturbed(p: &Params) -> Result<Outcome> {
    let n = p.usize("n");
    let bg = parse::background(p.text("patch"))?;
    let theta = Theta::parse(p.text("theta")).map_err(|e| Error::Config(e.to_string()))?;
    let sys = VortexSystem::new(
        n,
        vec![loglog_vortex([PI, PI], p.f64("gamma")).stage("profile")?],
        move |x| bg.eval(x),
        2.0,
    )
    .stage("vortex system")?;
    let cfg = RunConfig {
        theta,
        p_grid: p.floats("p_grid"),
        modulus_pairs: p.usize("modulus_pairs"),
        seed: p.u64("seed"),
        ..euler_cfg(p)
    };
    let run = run_singular_vortex(sys, &cfg, None).stage("vortex run")?;
    let c_meas = run.rows.iter().map(|r| r.ur_modulus).fold(0.0, f64::max);
    let slack = p.f64("slack");
    let b0 = run.rows[0].lp_b.clone();
    let mut worst = f64::INFINITY;
    let mut failures = Vec::new();
    let mut csv = String::from("t,p,lp_b,bound\n");
    for r in &run.rows {
        for ((&pp, b), b0) in cfg.p_grid.iter().zip(&r.lp_b).zip(&b0) {
            let th = theta.eval(pp).stage("theta")?;
            let bound = b0 + r.t * c_meas * th * (1.0 + slack);
            csv.push_str(&format!("{:.6},{pp},{b:.10e},{bound:.10e}\n", r.t));
            if r.t > 0.0 {
                worst = worst.min(bound - b);
            }
            if *b > bound {
                failures.push(format!("t={:.3} p={pp}", r.t));
            }
        }
    }
    let mut out = Outcome {
        steps: run.steps as u64,
        ..Default::default()
    };
    out.text("norms.csv", run.norms_csv());
    out.text("centers.csv", run.centers_csv());
    out.text("bound.csv", csv);
    out.metric("c_meas", c_meas);
    out.metric("min_room", worst);
    out.metric("sup_b_final", run.rows.last().map_or(f64::NAN, |r| r.sup_b));
    out.checks.push(check(
        "remainder Lp growth bound",
        failures.is_empty() && c_meas > 0.0,
        if failures.is_empty() {
            format!("C_meas = {c_meas:.4}, smallest room {worst:.3e}, Theta = {theta}")
        } else {
            format!("violations at {}", failures.join(", "))
        },
    ));
    Ok(out)
}

fn euler_two_vortex(p: &Params) -> Result<Outcome> {
    let n = p.usize("n");
    let d = p.f64("separation");
    let gamma = p.f64("gamma");
    let ca = [PI - d / 2.0, PI];
    let cb = [PI + d / 2.0, PI];
    let spec = ModulusSpec::log_lipschitz();
    let mk =
        |c| SingularProfile::new(c, gamma, spec.clone(), OuterShape::Identity, p.f64("r_cut"), p.f64("taper")).stage("profile");
    let sys = VortexSystem::new(n, vec![mk(ca)?, mk(cb)?], |_| 0.0, 2.0).stage("vortex system")?;
    let om = reduced_pair_angular_velocity(&sys.vortices[0], &sys.vortices[1], d);
    if !(om.abs() > 0.0) {
        return Err(Error::Config("the pair does not rotate".into()));
    }
    let half = PI / om.abs();
    let oracle = reduced_pair_tracks(&sys.vortices[0], &sys.vortices[1], ca, cb, half, 0.01);
    let cfg = RunConfig {
        t_final: half,
        dt: p.f64("dt"),
        monitor_every: half / 4.0,
        ..Default::default()
    };
    let run = run_singular_vortex(sys, &cfg, None).stage("vortex run")?;
    let ang = pair_angles(&Grid2::torus(n), &run.tracks);
    let (t, a) = *ang.last().expect("nonempty track");
    let measured = 2.0 * PI * t / a.abs();
    let predicted = 2.0 * half;
    let rel = measured / predicted - 1.0;
    let mut out = Outcome {
        steps: run.steps as u64,
        ..Default::default()
    };
    out.text("centers.csv", run.centers_csv());
    out.text("norms.csv", run.norms_csv());
    let mut s = String::from("t,xa,ya,xb,yb\n");
    for (t, pa, pb) in &oracle {
        s.push_str(&format!(
            "{t:.6},{:.12e},{:.12e},{:.12e},{:.12e}\n",
            pa[0], pa[1], pb[0], pb[1]
        ));
    }
    out.text("oracle.csv", s);
    out.metric("period_measured", measured);
    out.metric("period_oracle", predicted);
    out.metric("period_rel_error", rel);
    let tol = p.f64("period_tol");
    out.checks.push(check(
        "rotation period against the reduced ODE",
        rel.abs() < tol,
        format!("measured {measured:.4}, oracle {predicted:.4}, relative error {rel:+.4} (limit {tol})"),
    ));
    Ok(out)
}

fn euler_breakdown(p: &Params) -> Result<Outcome> {
    let sizes = p.usizes("sizes");
    let cfg = euler_cfg(p);
    let (rows, outs) = breakdown_experiment(&sizes, &cfg).stage("breakdown runs")?;
    let mut out = Outcome::default();
    let mut csv = String::from("n,t,sup_b");
    for k in &cfg.p_grid {
        csv.push_str(&format!(",lp_b_{k}"));
    }
    csv.push_str(",yudovich_ratio\n");
    for r in &rows {
        csv.push_str(&format!("{},{:.6},{:.10e}", r.n, r.t, r.sup_b));
        for v in &r.lp_b {
            csv.push_str(&format!(",{v:.10e}"));
        }
        csv.push_str(&format!(",{:.10e}\n", r.yudovich_ratio));
    }
    out.text("trend.csv", csv);
    let mut done = true;
    for (n, o) in sizes.iter().zip(&outs) {
        out.steps += o.steps as u64;
        let last = o.rows.last().expect("monitor rows");
        done &= (last.t - cfg.t_final).abs() < 1e-9;
        out.metric(format!("sup_b_final_n{n}"), last.sup_b);
        out.metric(format!("sup_b_initial_n{n}"), o.rows[0].sup_b);
    }
    out.checks.push(check(
        "runs reach the final time",
        done,
        format!("sizes {sizes:?}; trend only, no numeric bound"),
    ));
    Ok(out)
}

fn lightcone(p: &Params) -> Result<Outcome> {
    let fam = RegularizedFamily::new(
        p.usize("n"),
        p.f64("gamma"),
        p.f64("background"),
        vec![p.f64("eps1"), p.f64("eps2")],
    )
    .stage("regularized family")?;
    let cfg = ConeConfig {
        t_final: p.f64("t_final"),
        monitor_every: p.f64("monitor_every"),
        delta: p.f64("delta"),
        speeds: (p.f64("speed_c"), p.f64("speed_a")),
        front_threshold: p.f64("front_threshold"),
        p: p.f64("p"),
        ..Default::default()
    };
    let rep = light_cone_experiment(&fam, p.f64("eps1"), p.f64("eps2"), &cfg).stage("light cone")?;
    let mut out = Outcome {
        steps: rep.steps as u64,
        ..Default::default()
    };
    out.text("cone.csv", rep.to_csv());
    let mut s = String::from("t,l2_velocity_diff\n");
    for (t, v) in &rep.l2_velocity_diff {
        s.push_str(&format!("{t:.6},{v:.12e}\n"));
    }
    out.text("velocity_diff.csv", s);
    out.metric("c_star", rep.c_star);
    out.metric("max_ratio", rep.max_ratio);
    out.metric("front_speed", rep.front_speed);
    out.metric("front_speed_bound", rep.front_speed_bound);
    let fits = rep.rows.iter().all(|r| !r.truncated);
    out.checks.push(check(
        "cone fits in the domain",
        fits,
        format!("final radius {:.4}", rep.rows.last().map_or(f64::NAN, |r| r.radius)),
    ));
    let tol = p.f64("ratio_tol");
    out.checks.push(check(
        "exterior error small against interior error",
        rep.max_ratio < tol,
        format!("max exterior sup / interior sup = {:.3e} (limit {tol:.0e})", rep.max_ratio),
    ));
    out.checks.push(check(
        "error front speed",
        rep.front_speed <= rep.front_speed_bound,
        format!(
            "front speed {:.4} vs 2 max|u| + 3 cells = {:.4} (threshold {:.0e})",
            rep.front_speed, rep.front_speed_bound, cfg.front_threshold
        ),
    ));
    Ok(out)
}

fn interp(p: &Params) -> Result<Outcome> {
    let s = interpolation_trials(
        p.usize("trials"),
        p.usize("n"),
        p.usize("band"),
        &p.floats("s"),
        p.u64("k_max") as u32,
        p.u64("seed"),
    )
    .stage("interpolation trials")?;
    let mut out = Outcome::default();
    out.json("summary.json", &s)?;
    out.metric("checks", s.checks as f64);
    out.metric("violations", s.violations as f64);
    out.metric("min_rel_slack", s.min_rel_slack);
    out.checks.push(check(
        "no interpolation violations",
        s.violations == 0,
        format!(
            "{} violations in {} checks, min relative slack {:.3e}",
            s.violations, s.checks, s.min_rel_slack
        ),
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip_and_schemas_validate() {
        for p in Preset::ALL {
            assert_eq!(Preset::from_name(p.name()).unwrap(), p);
            Params::resolve(p.schema(), &[]).unwrap();
            assert!(!p.statement().is_empty());
        }
        assert!(matches!(Preset::from_name("euler"), Err(Error::Config(_))));
    }

    #[test]
    fn small_osgood_run_passes() {
        let p = Params::resolve(OSGOOD, &[("pairs".into(), "5".into())]).unwrap();
        let o = osgood_certificate(&p).unwrap();
        assert!(o.checks.iter().all(|c| c.pass), "{:?}", o.checks);
        assert_eq!(o.artifacts[0].1.iter().filter(|b| **b == b'\n').count(), 10);
    }
}
