use std::f64::consts::PI;
use std::sync::Arc;

use osgood_core::euler2d::*;
use osgood_core::field::{Grid2, ScalarField2D};
use osgood_core::modulus::ModulusSpec;
use osgood_core::profile::{OuterShape, SingularProfile};
use osgood_core::Error;

fn short(t_final: f64) -> RunConfig {
    RunConfig {
        t_final,
        dt: 0.05,
        monitor_every: t_final / 4.0,
        ..Default::default()
    }
}

#[test]
fn lone_vortex_stays_put() {
    let sys = VortexSystem::new(128, vec![loglog_vortex([PI, PI], 1.0).unwrap()], |_| 0.0, 2.0).unwrap();
    let out = run_singular_vortex(sys, &short(1.0), None).unwrap();
    let peak = out.system.vortices[0].profile.radial(0.0);
    for r in &out.rows {
        assert!((r.centers[0][0] - PI).abs() < 1e-4 && (r.centers[0][1] - PI).abs() < 1e-4);
        assert!(r.sup_b < 0.05 * peak, "t = {}: {} vs {}", r.t, r.sup_b, peak);
        assert!(r.divergence < 1e-14);
    }
}

#[test]
fn off_center_vortex_stays_put() {
    // Not on a node: exercises the grid-mollification correction.
    let c = [2.0, 3.7];
    let sys = VortexSystem::new(128, vec![loglog_vortex(c, 1.0).unwrap()], |_| 0.0, 2.0).unwrap();
    let out = run_singular_vortex(sys, &short(1.0), None).unwrap();
    let end = out.tracks.last().unwrap().1[0];
    assert!((end[0] - c[0]).abs() < 1e-4 && (end[1] - c[1]).abs() < 1e-4, "{end:?}");
}

#[test]
fn pair_starts_at_the_reduced_rate() {
    let d = PI / 4.0;
    let mk = |c| SingularProfile::new(c, 1.0, ModulusSpec::log_lipschitz(), OuterShape::Identity, 0.25, 0.125).unwrap();
    let sys = VortexSystem::new(128, vec![mk([PI - d / 2.0, PI]), mk([PI + d / 2.0, PI])], |_| 0.0, 2.0).unwrap();
    let om = reduced_pair_angular_velocity(&sys.vortices[0], &sys.vortices[1], d);
    let oracle = reduced_pair_tracks(
        &sys.vortices[0],
        &sys.vortices[1],
        [PI - d / 2.0, PI],
        [PI + d / 2.0, PI],
        4.0,
        0.01,
    );
    let (_, p, q) = oracle.last().unwrap();
    let oracle_angle = (q[1] - p[1]).atan2(q[0] - p[0]);
    assert!((oracle_angle - 4.0 * om).abs() < 1e-6);
    let out = run_singular_vortex(sys, &RunConfig { dt: 0.2, ..short(4.0) }, None).unwrap();
    let ang = pair_angles(&Grid2::torus(128), &out.tracks);
    let (t, a) = *ang.last().unwrap();
    assert!((a / t - om).abs() < 0.02 * om, "{} vs {om}", a / t);
}

#[test]
fn lattice_shift_moves_everything() {
    let n = 128;
    let h = 2.0 * PI / n as f64;
    let bg = |x: [f64; 2]| 0.2 * (x[0] + 0.3).sin() * x[1].cos();
    let c = [2.0, 2.5];
    let shift = [5.0 * h, -3.0 * h];
    let c2 = [c[0] + shift[0], c[1] + shift[1]];
    let a = VortexSystem::new(n, vec![loglog_vortex(c, 1.0).unwrap()], bg, 2.0).unwrap();
    let b = VortexSystem::new(
        n,
        vec![loglog_vortex(c2, 1.0).unwrap()],
        move |x| bg([x[0] - shift[0], x[1] - shift[1]]),
        2.0,
    )
    .unwrap();
    let cfg = RunConfig {
        filter_cells: 0.0,
        ..short(0.25)
    };
    let (ra, rb) = (
        run_singular_vortex(a, &cfg, None).unwrap(),
        run_singular_vortex(b, &cfg, None).unwrap(),
    );
    let moved = ra.state.shifted(5, -3);
    let err = moved
        .omega_hat
        .iter()
        .zip(&rb.state.omega_hat)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    assert!(err < 1e-9, "{err}");
    let (ea, eb) = (ra.tracks.last().unwrap().1[0], rb.tracks.last().unwrap().1[0]);
    assert!((ea[0] + shift[0] - eb[0]).abs() < 1e-9 && (ea[1] + shift[1] - eb[1]).abs() < 1e-9);
}

#[test]
fn colliding_centers_are_rejected() {
    let h = 2.0 * PI / 64.0;
    let e = VortexSystem::new(
        64,
        vec![
            loglog_vortex([2.0, 2.0], 1.0).unwrap(),
            loglog_vortex([2.0 + 3.0 * h, 2.0], 1.0).unwrap(),
        ],
        |_| 0.0,
        2.0,
    );
    assert!(matches!(e, Err(Error::Collision { .. })));
}

#[test]
fn steady_forcing_of_a_shear() {
    let n = 32;
    let zero = vec![0.0; n * n];
    let mut s = SpectralState::new(n, &zero, 0.0)
        .unwrap()
        .with_forcing(Arc::new(|x: [f64; 2], _t: f64| x[0].cos()));
    for _ in 0..10 {
        s.step(0.05).unwrap();
    }
    let g = Grid2::torus(n);
    let w = s.omega();
    for k in 0..g.len() {
        assert!((w[k] - 0.5 * g.node_of(k)[0].cos()).abs() < 1e-12);
    }
}

#[test]
fn remainder_source_vanishes_at_the_center_for_linear_residual() {
    let v = Vortex::new(loglog_vortex([0.0, 0.0], 1.0).unwrap(), 1e-4).unwrap();
    let s = 2.0;
    let mut prev = f64::INFINITY;
    for r in [0.1, 0.01, 1e-3] {
        let x = [r, 0.0];
        let g = remainder_source(&v, [0.0, 0.0], [0.0, 0.0], [s * r, 0.0], x, 1e-5, 0.0).unwrap();
        assert!(g.abs() <= s / (1.0 / r).ln() * (1.0 + 1e-9));
        assert!(g.abs() < prev);
        prev = g.abs();
    }
}

#[test]
fn breakdown_profile_alone_is_steady() {
    let sys = VortexSystem::new(128, vec![breakdown_vortex([PI, PI], 1.0).unwrap()], |_| 0.0, 2.0).unwrap();
    let out = run_singular_vortex(sys, &short(0.5), None).unwrap();
    assert!(out.rows.last().unwrap().drift_l2 < 1e-3);
}

#[test]
fn breakdown_background_starts_at_one() {
    let g = Grid2::torus(256);
    let b = ScalarField2D::from_fn(g, smoothed_sign([PI, PI], g.h));
    assert!((b.max_abs() - 1.0).abs() < 1e-6);
}

#[test]
fn perturbed_vortex_norm_bound() {
    use osgood_core::transport::Background;
    let bg = Background::Patch {
        center: [PI + 0.6, PI + 0.2],
        radius: 0.5,
        amplitude: 0.5,
    };
    let sys = VortexSystem::new(128, vec![loglog_vortex([PI, PI], 1.0).unwrap()], move |x| bg.eval(x), 2.0).unwrap();
    let cfg = RunConfig {
        modulus_pairs: 5000,
        ..short(0.5)
    };
    let out = run_singular_vortex(sys, &cfg, None).unwrap();
    let c = out.rows.iter().map(|r| r.ur_modulus).fold(0.0, f64::max);
    assert!(c > 0.0);
    let b0 = &out.rows[0].lp_b;
    for r in &out.rows {
        for (b, b0) in r.lp_b.iter().zip(b0) {
            assert!(*b <= b0 + r.t * c * 1.1);
        }
    }
}
