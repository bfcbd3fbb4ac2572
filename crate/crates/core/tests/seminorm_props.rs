use osgood_core::field::{Grid2, ScalarField2D};
use osgood_core::modulus::ModulusSpec;
use osgood_core::seminorm::{local_seminorm, lp_norm, Region};
use proptest::prelude::*;

fn field(seed: &[f64]) -> ScalarField2D {
    let g = Grid2::torus(16);
    ScalarField2D::from_fn(g, |x| {
        seed.iter()
            .enumerate()
            .map(|(k, a)| a * ((k as f64 + 1.0) * x[0] + 0.7 * k as f64 * x[1]).sin())
            .sum::<f64>()
    })
}

fn p_strategy() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(2.0), Just(3.5), Just(8.0), Just(64.0), Just(f64::INFINITY)]
}

proptest! {
    #[test]
    fn lp_scales_exactly(a in prop::collection::vec(-2.0f64..2.0, 4), c in prop_oneof![Just(-2.0), Just(0.5), Just(4.0), Just(-0.25)], p in p_strategy()) {
        let f = field(&a);
        let g = f.map(|v| c * v);
        let (nf, ng) = (lp_norm(&f, p, Region::Full).unwrap(), lp_norm(&g, p, Region::Full).unwrap());
        prop_assert_eq!(ng, c.abs() * nf);
    }

    #[test]
    fn lp_triangle(a in prop::collection::vec(-2.0f64..2.0, 4), b in prop::collection::vec(-2.0f64..2.0, 4), p in p_strategy()) {
        let (f, g) = (field(&a), field(&b));
        let s = f.zip_with(&g, |x, y| x + y).unwrap();
        let lhs = lp_norm(&s, p, Region::Full).unwrap();
        let rhs = lp_norm(&f, p, Region::Full).unwrap() + lp_norm(&g, p, Region::Full).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn product_bound(a in prop::collection::vec(-2.0f64..2.0, 4), b in prop::collection::vec(-2.0f64..2.0, 4), p in prop_oneof![Just(1.0), Just(2.0), Just(5.0), Just(16.0)]) {
        let (f, g) = (field(&a), field(&b));
        let fg = f.zip_with(&g, |x, y| x * y).unwrap();
        let lhs = lp_norm(&fg, p, Region::Full).unwrap();
        let rhs = lp_norm(&f, 2.0 * p, Region::Full).unwrap() * lp_norm(&g, 2.0 * p, Region::Full).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-12);
    }
}

#[test]
fn smooth_bump_does_not_change_the_cusp_seminorm() {
    let spec = ModulusSpec::log_lipschitz();
    let g = Grid2::window([0.0, 0.0], 0.2, 1024);
    let cusp = ScalarField2D::from_fn(g, |x| {
        let d = (x[0] * x[0] + x[1] * x[1]).sqrt();
        if d < 1e-12 {
            0.0
        } else {
            spec.eval_m(d.min(spec.m_l())).unwrap()
        }
    });
    let bumped = ScalarField2D::from_fn(g, |x| {
        let d = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let c = if d < 1e-12 {
            0.0
        } else {
            spec.eval_m(d.min(spec.m_l())).unwrap()
        };
        c + 0.5 * (-(x[0] - 0.02).powi(2) / 0.01 - x[1].powi(2) / 0.02).exp()
    });
    let radii = [0.16, 0.08, 0.04, 0.02, 0.01, 0.005];
    let a = local_seminorm(&cusp, &spec, [0.0, 0.0], 1.0, &radii).unwrap();
    let b = local_seminorm(&bumped, &spec, [0.0, 0.0], 1.0, &radii).unwrap();
    assert!((a.limit - b.limit).abs() < 0.05 * a.limit, "{} vs {}", a.limit, b.limit);
}
