use num_complex::Complex64;
use proptest::prelude::*;
use ypq_core::ads::*;
use ypq_core::geometry::solve_geometry;
use ypq_core::propagator::*;
use ypq_core::radial::GalerkinSolver;
use ypq_core::spectrum::{TruncationPolicy, YPoint};
use ypq_core::validation::random_coefficients;
use ypq_core::Error;

fn basis() -> ModeBasis {
    let gp = solve_geometry(2, 1).unwrap();
    let trunc = AdsTruncation {
        y: TruncationPolicy { n_max: 1, m_max: 1, l_max: 0, k_max: 1, j_max: 0, lambda_max: None },
        s1_max: 1,
        i_max: 3,
    };
    ModeBasis::build(&gp, 0.3, 2.0, &trunc, &GalerkinSolver::default()).unwrap()
}

fn points() -> Vec<SlicePoint> {
    (1..6)
        .map(|k| SlicePoint {
            x: 0.25 * k as f64,
            theta1: 0.9,
            theta2: 1.2,
            theta3: 0.3,
            eta: YPoint { y: 0.1, theta: 0.8, phi: 0.4, psi: 0.2, alpha: 0.1 },
        })
        .collect()
}

fn single(beta: ModeIndex, i: u32, v: f64) -> SpectralCoefficients {
    let mut c = SpectralCoefficients::default();
    c.entries.insert((beta, i), Complex64::new(v, 0.0));
    c
}

#[test]
fn single_mode_is_a_cosine() {
    let b = basis();
    let e = &b.entries[5];
    let data = CauchyData::from_coefficients(single(e.beta, 1, 1.0), SpectralCoefficients::default());
    let prop = Propagator::new(&b, points());
    let om = b.omega(&e.beta, 1).unwrap();
    for t in [0.0, 0.4, 3.3] {
        let fs = prop.evolve(&data, t).unwrap();
        let c = fs.coefficients.get(&e.beta, 1);
        assert!((c.re - (t * om.sqrt()).cos()).abs() < 1e-15);
        for (pt, v) in fs.points.iter().zip(&fs.values) {
            let want = basis_value(&b, e, pt) * (t * om.sqrt()).cos();
            assert!((v - want).norm() < 1e-14);
        }
    }
    let en = prop.mode_energy(&data).unwrap();
    for m in &en {
        let want = if m.beta == e.beta && m.i == 1 { om } else { 0.0 };
        assert!((m.energy - want).abs() < 1e-12 * om);
    }
}

fn basis_value(b: &ModeBasis, e: &BetaEntry, pt: &SlicePoint) -> Complex64 {
    b.eval_product(e, 1, pt).unwrap()
}

#[test]
fn derivative_at_zero_reproduces_velocity() {
    let b = basis();
    let a0 = random_coefficients(&b, 1);
    let a1 = random_coefficients(&b, 2);
    let prop = Propagator::new(&b, points());
    let data = CauchyData::from_coefficients(a0.clone(), a1.clone());
    let h = 1e-6;
    let p = prop.evolve(&data, h).unwrap();
    let m = prop.evolve(&data, -h).unwrap();
    let f0 = prop.evolve(&data, 0.0).unwrap();
    assert!(f0.coefficients.max_abs_diff(&a0) == 0.0);
    for (((v1, v0), pt), _) in p.values.iter().zip(&m.values).zip(&f0.points).zip(0..) {
        let fd = (v1 - v0) / (2.0 * h);
        let want = eval_field(&a1, &b, pt).unwrap();
        assert!((fd - want).norm() < 1e-5 * want.norm().max(1.0), "{fd} vs {want}");
    }
}

#[test]
fn zero_data_zero_energy() {
    let b = basis();
    let prop = Propagator::new(&b, vec![]);
    let data = CauchyData { phi0: FieldData::zero(), phi1: FieldData::zero() };
    assert!(prop.mode_energy(&data).unwrap().iter().all(|e| e.energy == 0.0));
}

#[test]
fn reflection_of_static_data_is_exact() {
    let b = basis();
    let a0 = random_coefficients(&b, 5);
    let data = CauchyData::from_coefficients(a0, SpectralCoefficients::default());
    let prop = Propagator::new(&b, vec![]);
    assert_eq!(prop.check_reflection(&data, 2.7).unwrap(), 0.0);
    let data = CauchyData::from_coefficients(random_coefficients(&b, 6), random_coefficients(&b, 7));
    assert_eq!(prop.check_reflection(&data, 0.0).unwrap(), 0.0);
    assert!(prop.check_reflection(&data, 4.2).unwrap() < 1e-12);
}

#[test]
fn zero_source_matches_homogeneous() {
    let b = basis();
    let data = CauchyData::from_coefficients(random_coefficients(&b, 8), random_coefficients(&b, 9));
    let src = SourceTerm { times: vec![0.0, 2.0, 4.0], slices: vec![FieldData::zero(); 3] };
    let prop = Propagator::new(&b, points());
    let a = prop.evolve(&data, 3.0).unwrap();
    let c = prop.evolve_inhomogeneous(&data, &src, 3.0).unwrap();
    assert!(a.coefficients.max_abs_diff(&c.coefficients) < 1e-14);
}

#[test]
fn constant_source_closed_form() {
    let b = basis();
    let e = &b.entries[2];
    let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.5).collect();
    let src = SourceTerm { times: times.clone(), slices: vec![FieldData::Coefficients(single(e.beta, 0, 1.0)); times.len()] };
    let om = b.omega(&e.beta, 0).unwrap();
    for t in [0.3, 1.0, 6.5, 10.0] {
        let d = duhamel_coefficients(&b, &src, t).unwrap().get(&e.beta, 0);
        assert!((d.re - (1.0 - (t * om.sqrt()).cos()) / om).abs() < 1e-10);
    }
}

#[test]
fn source_linearity() {
    let b = basis();
    let times = vec![0.0, 1.0, 2.5, 4.0];
    let s1: Vec<FieldData> = (0..4).map(|k| FieldData::Coefficients(random_coefficients(&b, 20 + k))).collect();
    let s2: Vec<FieldData> = (0..4).map(|k| FieldData::Coefficients(random_coefficients(&b, 40 + k))).collect();
    let sum: Vec<FieldData> = s1
        .iter()
        .zip(&s2)
        .map(|(a, c)| match (a, c) {
            (FieldData::Coefficients(x), FieldData::Coefficients(y)) => FieldData::Coefficients(x.add(y)),
            _ => unreachable!(),
        })
        .collect();
    let mk = |s: Vec<FieldData>| SourceTerm { times: times.clone(), slices: s };
    let r1 = duhamel_coefficients(&b, &mk(s1), 3.7).unwrap();
    let r2 = duhamel_coefficients(&b, &mk(s2), 3.7).unwrap();
    let r = duhamel_coefficients(&b, &mk(sum), 3.7).unwrap();
    assert!(r.max_abs_diff(&r1.add(&r2)) < 1e-12);
}

#[test]
fn source_coverage_enforced() {
    let b = basis();
    let src = SourceTerm { times: vec![0.0, 1.0], slices: vec![FieldData::zero(); 2] };
    assert!(matches!(duhamel_coefficients(&b, &src, 2.0), Err(Error::SourceCoverage { .. })));
    assert!(matches!(duhamel_coefficients(&b, &src, -0.5), Err(Error::SourceCoverage { .. })));
    let late = SourceTerm { times: vec![0.5, 3.0], slices: vec![FieldData::zero(); 2] };
    assert!(duhamel_coefficients(&b, &late, 1.0).is_err());
}

#[test]
fn sector_data_and_tail_warning() {
    let b = basis();
    let key = SectorKey { s3: 0, n: 0, m: 0, l: 0 };
    // a Gaussian shell is not band limited, so truncation leaves a tail
    let d0 = sample_sectors(&b, &[key], 96, |_, pt| Complex64::new((-((pt[0] - 0.8) / 0.1).powi(2)).exp(), 0.0)).unwrap();
    let data = CauchyData { phi0: FieldData::Sectors(d0), phi1: FieldData::zero() };
    let prop = Propagator::new(&b, points());
    let fs = prop.evolve(&data, 1.0).unwrap();
    assert!(fs.tail_norm > 0.0);
    assert!(fs.truncation_warning.is_some());
    assert!(fs.per_mode_energy.iter().all(|e| e.energy >= 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn energy_conserved(seed in 0u64..10_000, t in -10.0f64..10.0) {
        let b = basis();
        let a0 = random_coefficients(&b, seed);
        let a1 = random_coefficients(&b, seed + 1);
        let e0 = mode_energy_coeffs(&b, &a0, &a1).unwrap();
        let (x, v) = evolve_coefficients(&b, &a0, &a1, t).unwrap();
        let et = mode_energy_coeffs(&b, &x, &v).unwrap();
        for (p, q) in e0.iter().zip(&et) {
            prop_assert!((p.energy - q.energy).abs() <= 1e-12 * p.energy);
        }
    }

    #[test]
    fn translation_composes(seed in 0u64..10_000, t1 in -5.0f64..5.0, t2 in -5.0f64..5.0) {
        let b = basis();
        let a0 = random_coefficients(&b, seed);
        let a1 = random_coefficients(&b, seed + 7);
        prop_assert!(translation_discrepancy(&b, &a0, &a1, t1, t2).unwrap() < 1e-12);
        prop_assert!(reflection_discrepancy(&b, &a0, &a1, t1).unwrap() < 1e-12);
    }
}
