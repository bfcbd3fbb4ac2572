use osgood_core::modulus::{ModulusSpec, DEFAULT_DIVERGENCE_THRESHOLD};
use proptest::prelude::*;

fn named() -> Vec<ModulusSpec> {
    vec![
        ModulusSpec::lipschitz(),
        ModulusSpec::log_lipschitz(),
        ModulusSpec::iterated_log_chain(2).unwrap(),
    ]
}

proptest! {
    #[test]
    fn m_decreases_and_r_increases(a in 0.0f64..1.0, b in 0.0f64..1.0, which in 0usize..3) {
        let spec = &named()[which];
        let lo = 1e-12f64.ln();
        let hi = spec.m_l().ln();
        let (z1, z2) = ((lo + (hi - lo) * a.min(b)).exp(), (lo + (hi - lo) * a.max(b)).exp());
        prop_assume!(z2 > z1 * (1.0 + 1e-9));
        prop_assert!(spec.eval_m(z1).unwrap() > spec.eval_m(z2).unwrap());
        prop_assert!(spec.eval_r(z1).unwrap() < spec.eval_r(z2).unwrap());
    }

    #[test]
    fn r_is_exp_of_minus_m(a in 0.0f64..1.0, which in 0usize..3) {
        let spec = &named()[which];
        let z = (1e-10f64.ln() + (spec.m_l().ln() - 1e-10f64.ln()) * a).exp();
        let (m, r) = (spec.eval_m(z).unwrap(), spec.eval_r(z).unwrap());
        prop_assert!((r - (-m).exp()).abs() <= 1e-12 * r.max(1e-300) + 1e-300);
    }

    #[test]
    fn r_inverse_round_trip(a in 0.0f64..1.0, which in 0usize..3) {
        let spec = &named()[which];
        let z = (1e-8f64.ln() + (spec.m_l().ln() - 1e-8f64.ln()) * a).exp();
        let back = spec.eval_r_inv(spec.eval_r(z).unwrap()).unwrap();
        prop_assert!((back - z).abs() <= 1e-9 * z);
    }
}

#[test]
fn tabulated_named_moduli_match_closed_forms() {
    for spec in [ModulusSpec::lipschitz(), ModulusSpec::log_lipschitz()] {
        let z_min = 1e-8;
        let f = |z: f64| spec.eval_l(z).unwrap();
        let tab = ModulusSpec::tabulate(f, z_min, spec.m_l(), 400, DEFAULT_DIVERGENCE_THRESHOLD).unwrap();
        let (a, b) = (1e-7f64.ln(), (0.999 * spec.m_l()).ln());
        for i in 0..100 {
            let z = (a + (b - a) * i as f64 / 99.0).exp();
            let (m0, m1) = (spec.eval_m(z).unwrap(), tab.eval_m(z).unwrap());
            assert!((m0 - m1).abs() < 1e-6 * m0.max(1.0), "{} at {z}: {m0} vs {m1}", spec.name());
        }
    }
}

#[test]
fn osgood_detection() {
    for s in named() {
        assert!(s.is_osgood());
    }
    let holder = ModulusSpec::tabulate(|z| z.sqrt(), 1e-12, 1.0, 200, DEFAULT_DIVERGENCE_THRESHOLD).unwrap();
    assert!(!holder.is_osgood());
    let lip = ModulusSpec::tabulate(|z| z, 1e-12, 1.0, 200, DEFAULT_DIVERGENCE_THRESHOLD).unwrap();
    assert!(lip.is_osgood());
}
