use super::*;
use crate::geometry::sample_ball;
use crate::spectral::gram_spectrum;
use approx::assert_relative_eq;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn one() -> HoloFunction {
    HoloFunction::constant(1, c(1.0, 0.0))
}

fn z_fn() -> HoloFunction {
    HoloFunction::monomial(vec![1], c(1.0, 0.0)).unwrap()
}

#[test]
fn margin_is_enforced() {
    assert!(matches!(
        DiskMap::unweighted(vec![c(0.0, 0.0), c(1.0, 0.0)]),
        Err(Error::Construction(_))
    ));
    assert!(matches!(
        DiskMap::unweighted(vec![c(0.0, 0.0), c(0.995, 0.0)]),
        Err(Error::Construction(_))
    ));
    let m = DiskMap::unweighted(vec![c(0.1, 0.0), c(0.0, 0.0), c(0.5, 0.0)]).unwrap();
    assert_relative_eq!(m.delta_safe(), 0.4, epsilon = 1e-12);
    let json = serde_json::to_string(&m.to_file()).unwrap();
    let back = DiskMap::from_file(&serde_json::from_str(&json).unwrap()).unwrap();
    assert_eq!(back, m);
}

#[test]
fn pullback_examples() {
    let zero = DiskMap::unweighted(vec![c(0.0, 0.0)]).unwrap();
    let mu = pullback_measure(&zero, 32).unwrap();
    assert_eq!(mu.len(), 1);
    assert_relative_eq!(mu.total_mass(), 1.0, epsilon = 1e-14);
    let half = DiskMap::linear(c(0.5, 0.0), one()).unwrap();
    let mu = pullback_measure(&half, 64).unwrap();
    assert_eq!(mu.len(), 64);
    assert_relative_eq!(mu.total_mass(), 1.0, epsilon = 1e-13);
    assert!(mu.atoms().iter().all(|a| (a.z.norm() - 0.5).abs() < 1e-15));
    // Parseval: mean of |u|² on the grid is ‖u‖²_{H²} for polynomial u.
    let u = HoloFunction::from_parts(
        1,
        [(vec![0], c(1.0, 0.0)), (vec![2], c(0.0, 0.5))]
            .into_iter()
            .collect(),
        Vec::new(),
    )
    .unwrap();
    let m = DiskMap::linear(c(0.3, 0.2), u).unwrap();
    assert_relative_eq!(
        pullback_measure(&m, 64).unwrap().total_mass(),
        1.25,
        epsilon = 1e-13
    );
    assert!(pullback_measure(&m, 8).is_err());
    let uz = DiskMap::linear(c(0.5, 0.0), HoloFunction::zero(1)).unwrap();
    assert!(pullback_measure(&uz, 16).unwrap().is_empty());
}

#[test]
fn wcomp_examples() {
    let id = DiskMap::unweighted(vec![c(0.0, 0.0), c(0.98, 0.0)]).unwrap();
    let w = wcomp_matrix(&id, 5).unwrap();
    for i in 0..5 {
        for j in 0..5 {
            let want = if i == j { 0.98f64.powi(i as i32) } else { 0.0 };
            assert!((w[i * 5 + j] - c(want, 0.0)).norm() < 1e-15);
        }
    }
    let half = DiskMap::linear(c(0.5, 0.0), one()).unwrap();
    let s = wcomp_singular_values(&half, 64).unwrap();
    for (k, v) in s.iter().enumerate().take(40) {
        assert_relative_eq!(*v, 0.5f64.powi(k as i32), max_relative = 1e-12);
    }
    assert!(wcomp_matrix(&half, 257).is_err());
}

#[test]
fn wcomp_squares_match_pullback_spectrum() {
    let u = HoloFunction::kernel(&Point::disk(0.2, 0.1).unwrap(), 1.0).unwrap();
    let m = DiskMap::new(vec![c(0.1, 0.0), c(0.4, 0.1), c(0.0, 0.2)], u).unwrap();
    let s = wcomp_singular_values(&m, 64).unwrap();
    let g = gram_spectrum(&pullback_measure(&m, 256).unwrap()).unwrap();
    for (sv, lam) in s.iter().zip(&g.eigenvalues).take(8) {
        assert_relative_eq!(*sv, lam.sqrt(), max_relative = 1e-6);
    }
}

#[test]
fn nevanlinna_examples() {
    let sq = [c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];
    assert_relative_eq!(nevanlinna(&sq, c(0.25, 0.0)).unwrap(), 1.5, epsilon = 1e-13);
    let half = [c(0.0, 0.0), c(0.5, 0.0)];
    assert_relative_eq!(
        nevanlinna(&half, c(0.1, 0.2)).unwrap(),
        1.0 - 4.0 * 0.05,
        epsilon = 1e-13
    );
    assert_eq!(nevanlinna(&half, c(0.6, 0.0)).unwrap(), 0.0);
    assert!(matches!(
        nevanlinna(&half, c(0.0, 0.0)),
        Err(Error::Domain(_))
    ));
    assert!(matches!(
        nevanlinna(&[c(0.3, 0.0)], c(0.1, 0.0)),
        Err(Error::Domain(_))
    ));
    // Multiplicity: φ = (z − 0.2)², w close to 0 has two nearby preimages.
    let dbl = [c(0.04, 0.0), c(-0.4, 0.0), c(1.0, 0.0)];
    assert_relative_eq!(
        nevanlinna(&dbl, c(1e-6, 0.0)).unwrap(),
        2.0 * (1.0 - 0.04),
        max_relative = 1e-3
    );
}

#[test]
fn change_of_variables_identity() {
    let ball = sample_ball(1, 200_000, 20, 11);
    let r = change_of_variables(&z_fn(), &[c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], &ball).unwrap();
    assert_relative_eq!(r.lhs, 4.0 / 3.0, max_relative = 1e-2);
    assert!((r.lhs - r.rhs).abs() <= 0.01 * r.lhs, "{r:?}");
}

#[test]
fn besov_examples() {
    let ball = sample_ball(1, 40_000, 24, 5);
    let r = besov_seminorm(&z_fn(), 2.0, &ball).unwrap();
    assert!((r.value - 0.5).abs() <= 3.0 * r.std_error, "{r:?}");
    assert!(!r.divergence_warning);
    let k = besov_seminorm(&one(), 2.0, &ball).unwrap();
    assert_eq!(k.value, 0.0);
    for p in [0.5, 1.0] {
        assert!(
            besov_seminorm(&z_fn(), p, &ball)
                .unwrap()
                .divergence_warning,
            "p = {p}"
        );
    }
}

#[test]
fn volterra_measure_mass() {
    // ∫ |z|² · 2(1−|z|²) dv = 2(1/2 − 1/3) = 1/3.
    let ball = sample_ball(1, 20_000, 20, 2);
    let mu = volterra_measure(&z_fn(), &ball).unwrap();
    let se = ball
        .integrate(|z| 2.0 * z.norm_sq() * (1.0 - z.norm_sq()))
        .std_error;
    assert!((mu.total_mass() - 1.0 / 3.0).abs() <= 3.0 * se + 1e-12);
    assert!(volterra_measure(&one(), &ball).unwrap().is_empty());
}

#[test]
fn criterion_trivial_cases_and_range() {
    let cfg = CriterionConfig::default();
    let r = schatten_criterion_integral(CriterionSource::Volterra(&one()), 2.0, 1.0, &cfg).unwrap();
    assert_eq!(r.value, 0.0);
    let uz = DiskMap::linear(c(0.5, 0.0), HoloFunction::zero(1)).unwrap();
    assert_eq!(
        schatten_criterion_integral(CriterionSource::Wcomp(&uz), 2.0, 1.0, &cfg)
            .unwrap()
            .value,
        0.0
    );
    // t_{p/2} = 1 at p = 1.
    assert!(matches!(
        schatten_criterion_integral(CriterionSource::Volterra(&z_fn()), 1.0, 1.0, &cfg),
        Err(Error::Parameter(_))
    ));
}

#[test]
fn derivative_of_kernel() {
    let a = Point::disk(0.3, -0.4).unwrap();
    let f = HoloFunction::kernel(&a, 1.5)
        .unwrap()
        .add(&HoloFunction::monomial(vec![3], c(0.0, 2.0)).unwrap())
        .unwrap();
    let d = derivative(&f).unwrap();
    let z = c(0.2, 0.1);
    let h = 1e-6;
    let fd = (f.eval(&[z + h]).unwrap() - f.eval(&[z - h]).unwrap()) / (2.0 * h);
    assert!((d.eval(&[z]).unwrap() - fd).norm() < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn nevanlinna_positive_exactly_on_the_image(re in -0.9f64..0.9, im in -0.9f64..0.9) {
        let phi = [c(0.1, 0.0), c(0.5, 0.0), c(0.0, 0.3)];
        let w = c(re, im);
        prop_assume!((w - phi[0]).norm() > 1e-6);
        let v = nevanlinna(&phi, w).unwrap();
        let shifted = [phi[0] - w, phi[1], phi[2]];
        let inside = poly_roots(&shifted).unwrap().iter().any(|z| z.norm() < 1.0);
        prop_assert_eq!(v > 0.0, inside);
    }
}
