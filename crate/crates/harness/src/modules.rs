//! Direct access to single modules, outside the named experiments.
//!
//! Every module command takes the same flat `key=value` overrides as the
//! presets and goes through the same manifest writer.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use osgood_core::euler2d::{run_singular_vortex, RunConfig, SpectralState, VortexSystem};
use osgood_core::field::{Grid2, ScalarField2D};
use osgood_core::flow::{integrate_flow, pair_separation_certificate, Rate, VelocityField};
use osgood_core::modulus::ModulusSpec;
use osgood_core::profile::{OuterShape, SingularProfile};
use osgood_core::seminorm::{dyadic_p_grid, iterated_log_lp_growth, local_seminorm, Theta};
use osgood_core::stability::{random_band_limited, sobolev_interpolation_check};
use osgood_core::transport::{annulus_remainder, remainder_run, InitialData};

use crate::config::{param, Kind, Param, Params};
use crate::error::{Error, Result, StageExt};
use crate::parse;
use crate::presets::{check, Outcome, Preset};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Module {
    ModulusEval,
    LemmaLp,
    Seminorm,
    FlowTrace,
    FlowCertify,
    TransportRun,
    EulerRun,
    StabilityLightcone,
    StabilityInterp,
}

const MODULUS_EVAL: &[Param] = &[
    param(
        "modulus",
        Kind::Text,
        "loglipschitz",
        "lipschitz, loglipschitz, chain:n or custom:path",
    ),
    param("z_min", Kind::Float, "1e-6", "smallest z"),
    param("z_max", Kind::Float, "0", "largest z; 0 means m_L"),
    param("count", Kind::Int, "25", "log-spaced sample count"),
];

const LEMMA_LP: &[Param] = &[
    param("n", Kind::Int, "2", "iterated-log order"),
    param("p_max", Kind::Float, "256", "largest exponent of the dyadic grid"),
];

const SEMINORM: &[Param] = &[
    param("modulus", Kind::Text, "loglipschitz", "modulus of the profile"),
    param("shape", Kind::Text, "identity", "outer shape F"),
    param("center", Kind::Floats, "0,0", "profile center"),
    param("background", Kind::Text, "zero", "bounded part of the data"),
    param("x", Kind::Floats, "0,0", "point where the seminorm is taken"),
    param("gamma", Kind::Float, "1", "seminorm exponent"),
    param("radii", Kind::Floats, "0.05,0.02,0.01,0.005", "decreasing radii"),
    param("n", Kind::Int, "512", "window nodes per side"),
];

const FLOW_TRACE: &[Param] = &[
    param("field", Kind::Text, "hyperbolic", "velocity field"),
    param("x0", Kind::Floats, "0.5,0.5", "start point"),
    param("t", Kind::Float, "1", "final time, negative for the backward flow"),
    param("tol", Kind::Float, "1e-10", "ODE tolerance"),
];

const FLOW_CERTIFY: &[Param] = &[
    param("field", Kind::Text, "hyperbolic", "velocity field"),
    param("modulus", Kind::Text, "lipschitz", "modulus of the bound"),
    param("rate", Kind::Text, "exact", "exact (linear fields) or a constant C"),
    param("pairs", Kind::Int, "20", "random pairs"),
    param("t", Kind::Float, "1", "flow time"),
    param("tol", Kind::Float, "1e-12", "ODE tolerance"),
    param("seed", Kind::Int, "1", "pair sampling seed"),
    param("box", Kind::Float, "0.5", "half width of the sampling box"),
    param("d_min", Kind::Float, "1e-4", "smallest separation"),
    param("d_max", Kind::Float, "0.3", "largest separation"),
];

const TRANSPORT_RUN: &[Param] = &[
    param("field", Kind::Text, "hyperbolic", "velocity field"),
    param("profile", Kind::Text, "loglipschitz", "modulus of the singular profile"),
    param("shape", Kind::Text, "identity", "outer shape F"),
    param("gamma", Kind::Float, "1", "profile strength"),
    param("x0", Kind::Floats, "0.3,0.1", "profile center"),
    param("background", Kind::Text, "zero", "bounded part of the data"),
    param("t", Kind::Float, "0.5", "flow time"),
    param("n", Kind::Int, "128", "window nodes per side"),
    param("tol", Kind::Float, "1e-10", "ODE relative tolerance"),
    param(
        "radii",
        Kind::Floats,
        "0.0625,0.03125,0.015625,0.0078125",
        "annulus radii of the divergence table",
    ),
    param("slack", Kind::Float, "0.05", "relative slack on the remainder bound"),
];

const EULER_RUN: &[Param] = &[
    param("n", Kind::Int, "128", "grid nodes per side"),
    param("dt", Kind::Float, "0.05", "largest time step"),
    param("t_final", Kind::Float, "0.5", "final time"),
    param(
        "vortices",
        Kind::Text,
        "1@3.141592653589793,3.141592653589793",
        "gamma@x,y[:loglog|breakdown];...",
    ),
    param("background", Kind::Text, "zero", "bounded part b0"),
    param("theta", Kind::Text, "1", "growth function: 1 or log"),
    param("monitor_every", Kind::Float, "0.25", "monitor cadence"),
    param("p_grid", Kind::Floats, "2,4,8,16", "Lp exponents"),
    param("mollify_cells", Kind::Float, "2", "core mollification radius in cells"),
    param("filter_cells", Kind::Float, "1", "initial Gaussian filter width in cells"),
    param("modulus_pairs", Kind::Int, "0", "node pairs for the u_r modulus estimate"),
    param("seed", Kind::Int, "7", "pair sampling seed"),
];

const STABILITY_INTERP: &[Param] = &[
    param("trials", Kind::Int, "20", "random fields"),
    param("n", Kind::Int, "32", "grid nodes per side"),
    param("band", Kind::Int, "10", "largest wavenumber component"),
    param("s", Kind::Floats, "0.25,0.5,1", "smoothness indices"),
    param("k_max", Kind::Int, "4", "largest derivative order"),
    param("seed", Kind::Int, "1", "field sampling seed"),
];

impl Module {
    pub const ALL: [Module; 9] = [
        Module::ModulusEval,
        Module::LemmaLp,
        Module::Seminorm,
        Module::FlowTrace,
        Module::FlowCertify,
        Module::TransportRun,
        Module::EulerRun,
        Module::StabilityLightcone,
        Module::StabilityInterp,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Module::ModulusEval => "modulus-eval",
            Module::LemmaLp => "lemma-lp",
            Module::Seminorm => "seminorm",
            Module::FlowTrace => "flow-trace",
            Module::FlowCertify => "flow-certify",
            Module::TransportRun => "transport-run",
            Module::EulerRun => "euler-run",
            Module::StabilityLightcone => "stability-lightcone",
            Module::StabilityInterp => "stability-interp",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Module::ModulusEval => "modulus table (z, L, M, R)",
            Module::LemmaLp => "Lp norms of the iterated logarithm (p, norm, ratio)",
            Module::Seminorm => "local seminorm table of a singular profile",
            Module::FlowTrace => "flow trajectory (t, x1, x2)",
            Module::FlowCertify => "two-point separation certificates",
            Module::TransportRun => "transported field, remainder record and divergence table",
            Module::EulerRun => "singular-vortex Euler run",
            Module::StabilityLightcone => "light-cone comparison of two regularizations",
            Module::StabilityInterp => "interpolation inequality rows (k, lhs, rhs, slack)",
        }
    }

    pub fn schema(self) -> &'static [Param] {
        match self {
            Module::ModulusEval => MODULUS_EVAL,
            Module::LemmaLp => LEMMA_LP,
            Module::Seminorm => SEMINORM,
            Module::FlowTrace => FLOW_TRACE,
            Module::FlowCertify => FLOW_CERTIFY,
            Module::TransportRun => TRANSPORT_RUN,
            Module::EulerRun => EULER_RUN,
            Module::StabilityLightcone => Preset::Lightcone.schema(),
            Module::StabilityInterp => STABILITY_INTERP,
        }
    }

    /// Artifact printed to stdout when no output directory is given.
    pub fn primary(self) -> &'static str {
        match self {
            Module::ModulusEval => "modulus.csv",
            Module::LemmaLp => "lemma.csv",
            Module::Seminorm => "seminorm.csv",
            Module::FlowTrace => "trajectory.csv",
            Module::FlowCertify => "certificates.jsonl",
            Module::TransportRun => "remainder.json",
            Module::EulerRun => "norms.csv",
            Module::StabilityLightcone => "cone.csv",
            Module::StabilityInterp => "interp.csv",
        }
    }

    pub fn run(self, p: &Params) -> Result<Outcome> {
        match self {
            Module::ModulusEval => modulus_eval(p),
            Module::LemmaLp => lemma_lp(p),
            Module::Seminorm => seminorm(p),
            Module::FlowTrace => flow_trace(p),
            Module::FlowCertify => flow_certify(p),
            Module::TransportRun => transport_run(p),
            Module::EulerRun => euler_run(p),
            Module::StabilityLightcone => Preset::Lightcone.run(p),
            Module::StabilityInterp => stability_interp(p),
        }
    }
}

fn modulus(s: &str) -> Result<ModulusSpec> {
    ModulusSpec::parse(s).map_err(|e| Error::Config(format!("modulus {s:?}: {e}")))
}

fn shape(s: &str) -> Result<OuterShape> {
    OuterShape::parse(s).map_err(|e| Error::Config(format!("shape {s:?}: {e}")))
}

fn done(out: &mut Outcome, what: &str) {
    out.checks.push(check(what, true, "completed"));
}

fn modulus_eval(p: &Params) -> Result<Outcome> {
    let spec = modulus(p.text("modulus"))?;
    let (a, n) = (p.f64("z_min"), p.usize("count"));
    let b = match p.f64("z_max") {
        0.0 => spec.m_l(),
        b => b,
    };
    if !(0.0 < a && a < b) || n < 2 {
        return Err(Error::Config("need 0 < z_min < z_max and count >= 2".into()));
    }
    let mut csv = String::from("z,L,M,R\n");
    for k in 0..n {
        let z = a * (b / a).powf(k as f64 / (n - 1) as f64);
        let l = spec.eval_l(z).stage("eval L")?;
        let m = spec.eval_m(z).stage("eval M")?;
        let r = spec.eval_r(z).stage("eval R")?;
        let _ = writeln!(csv, "{z:.10e},{l:.12e},{m:.12e},{r:.12e}");
    }
    let mut out = Outcome::default();
    out.text("modulus.csv", csv);
    out.metric("m_l", spec.m_l());
    out.checks.push(check(
        "Osgood condition",
        spec.is_osgood(),
        format!(
            "{spec}: M(z) {} as z -> 0",
            if spec.is_osgood() { "diverges" } else { "stays bounded" }
        ),
    ));
    Ok(out)
}

fn lemma_lp(p: &Params) -> Result<Outcome> {
    let n = p.usize("n") as u32;
    let rows = iterated_log_lp_growth(n, &dyadic_p_grid(p.f64("p_max"))).stage("lemma quadrature")?;
    let mut csv = String::from("p,norm,ratio\n");
    for r in &rows {
        let _ = writeln!(csv, "{},{:.12e},{:.12e}", r.p, r.norm, r.ratio);
    }
    let mut out = Outcome::default();
    out.text("lemma.csv", csv);
    if let Some(r) = rows.last() {
        out.metric("ratio_at_p_max", r.ratio);
    }
    out.checks.push(check(
        "finite norms",
        rows.iter().all(|r| r.norm.is_finite() && r.ratio.is_finite()),
        format!("{} exponents", rows.len()),
    ));
    Ok(out)
}

fn seminorm(p: &Params) -> Result<Outcome> {
    let spec = modulus(p.text("modulus"))?;
    let profile = SingularProfile::standard(p.point("center")?, 1.0, spec.clone(), shape(p.text("shape"))?).stage("profile")?;
    let theta = InitialData {
        profile: Some(profile),
        background: parse::background(p.text("background"))?,
    };
    let x = p.point("x")?;
    let radii = p.floats("radii");
    let rmax = radii.iter().copied().fold(0.0, f64::max);
    let grid = Grid2::window(x, 1.05 * rmax, p.usize("n"));
    let f = ScalarField2D::from_fn(grid, |y| theta.eval(y));
    let tab = local_seminorm(&f, &spec, x, p.f64("gamma"), &radii).stage("local seminorm")?;
    let mut out = Outcome::default();
    out.text("seminorm.csv", tab.to_csv());
    out.metric("limit", tab.limit);
    out.checks.push(check(
        "seminorm table",
        tab.limit.is_finite(),
        format!("limit {:.6}, trend {}", tab.limit, tab.trend),
    ));
    Ok(out)
}

fn flow_trace(p: &Params) -> Result<Outcome> {
    let u = VelocityField::analytic(parse::analytic_field(p.text("field"))?);
    let tr = integrate_flow(&u, p.point("x0")?, p.f64("t"), p.f64("tol")).stage("flow")?;
    let mut csv = String::from("t,x1,x2\n");
    for (t, x) in tr.times.iter().zip(&tr.positions) {
        let _ = writeln!(csv, "{t:.12e},{:.15e},{:.15e}", x[0], x[1]);
    }
    let mut out = Outcome {
        steps: tr.times.len().saturating_sub(1) as u64,
        ..Default::default()
    };
    out.text("trajectory.csv", csv);
    let e = tr.end();
    out.metric("x1_end", e[0]);
    out.metric("x2_end", e[1]);
    done(&mut out, "trajectory");
    Ok(out)
}

fn bounded_field(p: &Params) -> Result<(VelocityField, ModulusSpec)> {
    let spec = modulus(p.text("modulus"))?;
    let u = VelocityField::analytic(parse::analytic_field(p.text("field"))?);
    let u = match p.text("rate") {
        "exact" => u.with_exact_bound(spec.clone()).stage("modulus bound")?,
        c => {
            let c: f64 = c
                .parse()
                .map_err(|_| Error::Config(format!("rate must be `exact` or a number, got {c:?}")))?;
            u.with_bound(spec.clone(), Rate::Constant(c))
        }
    };
    Ok((u, spec))
}

fn flow_certify(p: &Params) -> Result<Outcome> {
    let (u, spec) = bounded_field(p)?;
    let (half, d_min, d_max) = (p.f64("box"), p.f64("d_min"), p.f64("d_max"));
    if !(0.0 < d_min && d_min < d_max) || !(half > 0.0) {
        return Err(Error::Config("need 0 < d_min < d_max and box > 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.u64("seed"));
    let mut lines = String::new();
    let mut fails = 0usize;
    let mut worst = f64::INFINITY;
    let n = p.usize("pairs");
    for _ in 0..n {
        let x = [rng.gen_range(-half..half), rng.gen_range(-half..half)];
        let d = (d_min.ln() + rng.gen::<f64>() * (d_max / d_min).ln()).exp();
        let a = rng.gen_range(0.0..std::f64::consts::TAU);
        let y = [x[0] + d * a.cos(), x[1] + d * a.sin()];
        let c = pair_separation_certificate(&u, &spec, x, y, p.f64("t"), p.f64("tol")).stage("certificate")?;
        fails += !c.pass as usize;
        worst = worst.min(c.slack);
        lines.push_str(&serde_json::to_string(&c)?);
        lines.push('\n');
    }
    let mut out = Outcome::default();
    out.text("certificates.jsonl", lines);
    out.metric("min_slack", worst);
    out.checks.push(check(
        "certificates",
        fails == 0,
        format!("{fails} of {n} pairs outside the bracket"),
    ));
    Ok(out)
}

fn transport_run(p: &Params) -> Result<Outcome> {
    let spec = modulus(p.text("profile"))?;
    let u = VelocityField::analytic(parse::analytic_field(p.text("field"))?)
        .with_exact_bound(spec.clone())
        .stage("modulus bound")?;
    let shape = shape(p.text("shape"))?;
    let profile = SingularProfile::standard(p.point("x0")?, p.f64("gamma"), spec, shape).stage("profile")?;
    let theta0 = InitialData {
        profile: Some(profile),
        background: parse::background(p.text("background"))?,
    };
    let t = p.f64("t");
    let (sol, rec) = remainder_run(&u, &theta0, t, p.usize("n"), p.f64("tol")).stage("transport")?;
    let rows = annulus_remainder(&u, &theta0, t, &p.floats("radii"), 4, 256, p.f64("tol")).stage("annuli")?;
    let mut csv = String::from("r,log_inv_r,M,sup_b\n");
    for r in &rows {
        let _ = writeln!(csv, "{:.10e},{:.10e},{:.10e},{:.10e}", r.r, r.log_inv_r, r.m, r.sup_b);
    }
    let mut out = Outcome::default();
    out.artifacts
        .push(("theta.bin".into(), sol.field.encode("theta", t).stage("field encoding")?));
    out.json("remainder.json", &rec)?;
    out.text("divergence.csv", csv);
    out.metric("sup_b", rec.sup_b);
    out.metric("bound", rec.bound);
    out.metric("failed_nodes", sol.failed_nodes as f64);
    out.checks.push(check(
        "back-trajectories",
        sol.failed_nodes == 0,
        format!("{} failed nodes", sol.failed_nodes),
    ));
    if shape.slope_bound().is_finite() {
        let slack = p.f64("slack");
        out.checks.push(check(
            "remainder bound",
            rec.holds(slack),
            format!("sup|b| = {:.6}, bound {:.6}", rec.sup_b, rec.bound),
        ));
    }
    Ok(out)
}

fn euler_run(p: &Params) -> Result<Outcome> {
    let n = p.usize("n");
    let profiles = parse::vortex_list(p.text("vortices"))?;
    let bg = parse::background(p.text("background"))?;
    let theta = Theta::parse(p.text("theta")).map_err(|e| Error::Config(e.to_string()))?;
    let sys = VortexSystem::new(n, profiles, move |x| bg.eval(x), p.f64("mollify_cells")).stage("vortex system")?;
    let cfg = RunConfig {
        t_final: p.f64("t_final"),
        dt: p.f64("dt"),
        monitor_every: p.f64("monitor_every"),
        theta,
        p_grid: p.floats("p_grid"),
        filter_cells: p.f64("filter_cells"),
        modulus_pairs: p.usize("modulus_pairs"),
        seed: p.u64("seed"),
        ..Default::default()
    };
    let sigma = cfg.filter_cells * Grid2::torus(n).h;
    let initial = SpectralState::new(n, &sys.vorticity_data(), 0.0)
        .stage("initial state")?
        .gaussian_filtered(sigma);
    let run = run_singular_vortex(sys, &cfg, None).stage("vortex run")?;
    let last = run.rows.last().expect("monitor rows");
    let centers = &run.tracks.last().expect("center track").1;
    let b = run.system.remainder(&run.state.omega(), centers);
    let b = ScalarField2D::from_data(
        run.state.grid(),
        b.into_iter().map(|v| if v.is_nan() { 0.0 } else { v }).collect(),
    )
    .stage("remainder field")?;
    let mut out = Outcome {
        steps: run.steps as u64,
        ..Default::default()
    };
    out.text("centers.csv", run.centers_csv());
    out.text("norms.csv", run.norms_csv());
    out.artifacts.push((
        "omega_initial.bin".into(),
        initial.omega_field().encode("omega", 0.0).stage("field encoding")?,
    ));
    out.artifacts.push((
        "omega_final.bin".into(),
        run.state.omega_field().encode("omega", run.state.t).stage("field encoding")?,
    ));
    out.artifacts.push((
        "velocity_final.bin".into(),
        run.state.velocity().encode("u", run.state.t).stage("field encoding")?,
    ));
    out.artifacts.push((
        "remainder_final.bin".into(),
        b.encode("b", run.state.t).stage("field encoding")?,
    ));
    out.metric("sup_b_final", last.sup_b);
    out.metric("drift_l2_final", last.drift_l2);
    out.metric("energy_final", last.energy);
    out.checks.push(check(
        "run reaches the final time",
        (last.t - cfg.t_final).abs() < 1e-9 && last.sup_b.is_finite(),
        format!("t = {:.4} after {} steps", last.t, run.steps),
    ));
    Ok(out)
}

fn stability_interp(p: &Params) -> Result<Outcome> {
    let (n, band, k_max) = (p.usize("n"), p.usize("band"), p.u64("k_max") as u32);
    let mut rng = ChaCha8Rng::seed_from_u64(p.u64("seed"));
    let mut csv = String::from("trial,s,k,lhs,rhs,slack\n");
    let (mut checks, mut bad) = (0usize, 0usize);
    for trial in 0..p.usize("trials") {
        let f = random_band_limited(n, band, &mut rng).stage("random field")?;
        for &s in &p.floats("s") {
            for r in sobolev_interpolation_check(&f, s, k_max).stage("interpolation")? {
                checks += 1;
                bad += !r.holds() as usize;
                let _ = writeln!(csv, "{trial},{s},{},{:.12e},{:.12e},{:.6e}", r.k, r.lhs, r.rhs, r.slack);
            }
        }
    }
    let mut out = Outcome::default();
    out.text("interp.csv", csv);
    out.metric("violations", bad as f64);
    out.checks.push(check(
        "interpolation inequality",
        bad == 0,
        format!("{bad} violations in {checks} checks"),
    ));
    Ok(out)
}
