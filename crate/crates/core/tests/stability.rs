use osgood_core::euler2d::SpectralState;
use osgood_core::field::{Grid2, ScalarField2D};
use osgood_core::stability::*;

#[test]
fn interpolation_holds_on_random_fields() {
    let s = interpolation_trials(500, 32, 10, &[0.25, 0.5, 1.0], 4, 17).unwrap();
    assert_eq!(s.checks, 500 * 3 * 4);
    assert_eq!(s.violations, 0);
}

#[test]
fn gronwall_envelope_for_two_smooth_runs() {
    let n = 64;
    let g = Grid2::torus(n);
    let base = |x: [f64; 2]| x[0].cos() * x[1].cos() + 0.4 * (2.0 * x[0] + x[1]).sin();
    let a0 = ScalarField2D::from_fn(g, base);
    let b0 = ScalarField2D::from_fn(g, |x| base(x) + 1e-3 * (x[0] - x[1]).cos());
    let mut a = SpectralState::new(n, &a0.data, 0.0).unwrap().gaussian_filtered(0.05);
    let mut b = SpectralState::new(n, &b0.data, 0.0).unwrap().gaussian_filtered(0.1);
    let mut series = Vec::new();
    for i in 0..=10 {
        let (va, vb) = (a.velocity(), b.velocity());
        let d: f64 =
            va.u.iter()
                .zip(&vb.u)
                .chain(va.v.iter().zip(&vb.v))
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>();
        series.push((i as f64 * 0.1, (d * g.cell_area()).sqrt()));
        for _ in 0..4 {
            a.step(0.025).unwrap();
            b.step(0.025).unwrap();
        }
    }
    let r = gronwall_log_bound_check(&series, None).unwrap();
    assert!(r.k.is_finite() && !r.trivial);
    assert!(r.pass, "{:?}", r.rows);
}

#[test]
fn regularizations_converge_in_lp() {
    let fam = RegularizedFamily::new(256, 1.0, 0.3, vec![0.4, 0.2, 0.1]).unwrap();
    let c = fam.convergence(4.0).unwrap();
    assert!(c.windows(2).all(|w| w[1].1 < w[0].1), "{c:?}");
}
