use osgood_core::field::{norm, sub};
use osgood_core::flow::{flow_point, jacobian_defect, pair_separation_certificate, AnalyticField, VelocityField};
use osgood_core::modulus::ModulusSpec;
use osgood_core::ode::OdeConfig;
use osgood_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fields() -> Vec<VelocityField> {
    vec![
        VelocityField::analytic(AnalyticField::Hyperbolic),
        VelocityField::analytic(AnalyticField::rotation(0.8)),
        VelocityField::analytic(AnalyticField::BahouriChemin { k: 15 }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn group_property(x in -0.5f64..0.5, y in -0.5f64..0.5, t in 0.05f64..0.6, s in 0.05f64..0.6, which in 0usize..3) {
        let u = &fields()[which];
        let tol = 1e-10;
        let cfg = OdeConfig::with_tol(tol);
        let direct = flow_point(u, [x, y], t + s, &cfg).unwrap().0;
        // Autonomous fields: φ_{t+s} = φ_t ∘ φ_s.
        let mid = flow_point(u, [x, y], s, &cfg).unwrap().0;
        let composed = flow_point(u, mid, t, &cfg).unwrap().0;
        prop_assert!(norm(sub(direct, composed)) < 10.0 * tol * (1.0 + norm(direct)));
    }
}

#[test]
fn flows_are_volume_preserving() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pts: Vec<[f64; 2]> = (0..12)
        .map(|_| [rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6)])
        .collect();
    for u in fields() {
        assert!(jacobian_defect(&u, &pts, 0.7, 1e-5, 1e-10).unwrap() < 1e-4, "{}", u.name());
    }
}

#[test]
fn certificates_pass_for_exact_constants() {
    let cases = [
        (AnalyticField::Hyperbolic, ModulusSpec::lipschitz()),
        (AnalyticField::rotation(0.8), ModulusSpec::lipschitz()),
        (AnalyticField::rotation(0.8), ModulusSpec::log_lipschitz()),
    ];
    for (f, spec) in cases {
        let u = VelocityField::analytic(f).with_exact_bound(spec.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (mut tried, mut passed) = (0, 0);
        while tried < 100 {
            let x = [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)];
            let d = rng.gen_range(1e-4..0.05);
            let a = rng.gen_range(0.0..std::f64::consts::TAU);
            let y = [x[0] + d * a.cos(), x[1] + d * a.sin()];
            match pair_separation_certificate(&u, &spec, x, y, 0.5, 1e-11) {
                Ok(c) => {
                    tried += 1;
                    if c.pass {
                        passed += 1;
                    }
                }
                Err(Error::Precondition(_)) => continue,
                Err(e) => panic!("{e}"),
            }
        }
        assert!(passed >= 99, "{} / {}: {passed}", u.name(), spec.name());
    }
}

#[test]
fn stable_line_contracts_exactly() {
    let spec = ModulusSpec::lipschitz();
    let u = VelocityField::analytic(AnalyticField::Hyperbolic)
        .with_exact_bound(spec.clone())
        .unwrap();
    // x₁ + x₂ = 0 is the stable line: separations shrink by e^{−t}.
    let c = pair_separation_certificate(&u, &spec, [0.3, -0.3], [0.1, -0.1], 1.0, 1e-12).unwrap();
    assert!((c.m_change.abs() - 1.0).abs() < 1e-6, "{}", c.m_change);
}
