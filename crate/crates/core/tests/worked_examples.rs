//! Small worked cases with hand or closed-form answers, one per operation.

use std::f64::consts::{LN_2, PI};

use fraczeta_core::boxcount::{
    self, dimension_estimate, greedy_packing, mesh_count, tessellation_dimension, tessellation_string, AnalyticSet,
    CloudMeta, PointCloud, TessellationSource, Variant,
};
use fraczeta_core::chain::{box_scale_range, dimension_chain, ChainSpec};
use fraczeta_core::distzeta::{self, LogPeriodicOutcome};
use fraczeta_core::golden;
use fraczeta_core::ifs::IfsSpec;
use fraczeta_core::strings::{FractalString, GeometricTail, Scale};
use fraczeta_core::tube::{self, ExactTube1d, FnTube, ProbeSpec, ProbeVerdict};
use fraczeta_core::zeta::{self, MeasurabilityFit, Verdict, Window};
use fraczeta_core::Error;
use num_complex::Complex64;

fn d_cantor() -> f64 {
    2f64.ln() / 3f64.ln()
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn cloud_1d(pts: &[f64]) -> PointCloud {
    PointCloud::new(1, pts.to_vec(), CloudMeta::default()).unwrap()
}

#[test]
fn cantor_counting_function() {
    let s = golden::cantor_string();
    assert_eq!(s.counting_function(100.0).unwrap(), 15);
    assert_eq!(s.counting_function(2.9).unwrap(), 0);
    for n in 1..12 {
        assert_eq!(s.counting_function(3f64.powi(n)).unwrap(), (1u64 << n) - 1, "n = {n}");
    }
}

#[test]
fn abscissae() {
    assert_eq!(
        golden::cantor_string().abscissa_of_convergence().unwrap().value,
        d_cantor()
    );
    assert_eq!(golden::setf_box_string().abscissa_of_convergence().unwrap().value, 1.0);
    let flat = FractalString::new(
        vec![Scale { l: 0.5, m: 1 }],
        Some(GeometricTail {
            r: 0.5,
            g: 1,
            onset: 1,
            period: 1,
        }),
    )
    .unwrap();
    assert_eq!(flat.abscissa_of_convergence().unwrap().value, 0.0);
    let est = golden::power_string(2.0, 100_000)
        .abscissa_of_convergence()
        .unwrap()
        .value;
    assert!((est - 0.5).abs() <= 0.02, "{est}");
}

#[test]
fn growth_equivalence() {
    let s = golden::power_string(2.0, 100_000);
    let r = s.check_growth_equivalence(0.5).unwrap();
    assert!(r.counting_bounded && r.lengths_bounded, "{r:?}");
    let r = s.check_growth_equivalence(0.25).unwrap();
    assert!(!r.counting_bounded && !r.lengths_bounded, "{r:?}");
    let r = golden::cantor_string().check_growth_equivalence(d_cantor()).unwrap();
    assert!(r.counting_bounded && r.lengths_bounded, "{r:?}");
}

#[test]
fn moran_and_lattice_examples() {
    let sys = IfsSpec::from_ratios(&[0.5, 0.25, 0.25]).unwrap();
    assert!((sys.moran_solve().dimension - 1.0).abs() <= 1e-12);
    let l = IfsSpec::from_ratios(&[1.0 / 3.0, 1.0 / 3.0])
        .unwrap()
        .classify_lattice(1e-9);
    assert!(l.is_lattice && (l.r - 1.0 / 3.0).abs() < 1e-12 && l.k == vec![1, 1]);
    assert!((l.period - 3f64.ln()).abs() < 1e-12);
    let l = IfsSpec::from_ratios(&[0.5, 0.25]).unwrap().classify_lattice(1e-9);
    assert!(l.is_lattice && (l.r - 0.5).abs() < 1e-12 && l.k == vec![1, 2]);
    assert!(
        !IfsSpec::from_ratios(&[0.5, 1.0 / 3.0])
            .unwrap()
            .classify_lattice(1e-9)
            .is_lattice
    );
}

#[test]
fn attractor_examples() {
    let c2 = golden::cantor_ifs().generate_attractor(2).unwrap();
    let mut pts = c2.sorted_1d().unwrap();
    pts.dedup();
    let want = [0.0, 2.0 / 9.0, 2.0 / 3.0, 8.0 / 9.0];
    assert_eq!(pts.len(), 4);
    for (a, b) in pts.iter().zip(want) {
        assert!((a - b).abs() < 1e-12);
    }
    let f3 = golden::setf_ifs().generate_attractor(3).unwrap();
    assert_eq!(f3.len(), 64);
    assert!(f3.coords().iter().all(|&x| (0.0..=1.0).contains(&x)));
}

#[test]
fn small_box_counts() {
    // Left endpoints: a right endpoint on a cell boundary would open the next cell.
    let left = golden::cantor_ifs().generate_attractor(8).unwrap();
    assert_eq!(mesh_count(&left, 81.0).unwrap(), 16);
    let one = PointCloud::new(2, vec![0.3, 0.7], CloudMeta::default()).unwrap();
    for x in [0.5, 3.0, 1e6] {
        assert_eq!(mesh_count(&one, x).unwrap(), 1);
    }
    assert_eq!(greedy_packing(&cloud_1d(&[0.0, 1.0]), 4.0).unwrap(), 2);
}

#[test]
fn box_dimension_estimates() {
    let e = dimension_estimate(&golden::cantor_endpoints(12), 3.0, 2, 10, Variant::MeshCount).unwrap();
    assert!((e.upper - d_cantor()).abs() <= 0.02, "{e:?}");
    let a = golden::a_string_cloud(100_000);
    let (lo, hi) = box_scale_range(&a, a.meta.delta);
    let k0 = lo.log2().ceil() as i32;
    let k1 = hi.log2().floor() as i32;
    let e = dimension_estimate(&a, 2.0, k0, k1, Variant::MeshCount).unwrap();
    assert!((e.upper - 0.5).abs() <= 0.03, "{e:?}");
    let g = golden::unit_square_grid(100);
    let (lo, hi) = box_scale_range(&g, g.meta.delta);
    let e = dimension_estimate(
        &g,
        2.0,
        lo.log2().ceil() as i32,
        hi.log2().floor() as i32,
        Variant::MeshCount,
    )
    .unwrap();
    assert!((e.upper - 2.0).abs() <= 0.05, "{e:?}");
}

#[test]
fn tessellation_examples() {
    let f = tessellation_string(TessellationSource::Analytic(AnalyticSet::SetF), 0.25, 1, 10).unwrap();
    for (n, lv) in f.levels().take(10).enumerate() {
        assert_eq!(lv.m, 9.0 * 4f64.powi(n as i32 + 1));
    }
    assert_eq!(tessellation_dimension(&f).unwrap(), 1.0);
    let cs = tessellation_string(TessellationSource::Analytic(AnalyticSet::Cantor), 1.0 / 3.0, 1, 10).unwrap();
    assert!((tessellation_dimension(&cs).unwrap() - d_cantor()).abs() < 1e-12);
    let cloud = golden::cantor_ifs().generate_attractor(12).unwrap();
    let emp = tessellation_string(TessellationSource::Cloud(&cloud), 1.0 / 3.0, 1, 10).unwrap();
    for (n, lv) in emp.levels().take(10).enumerate() {
        assert_eq!(lv.m, 2f64.powi(n as i32 + 1), "n = {}", n + 1);
    }
}

#[test]
fn dirichlet_values() {
    let v = zeta::eval_dirichlet(&golden::cantor_box_string(), c(1.0, 0.0)).unwrap();
    assert!((v.value.re - 4.0).abs() < 1e-12 && v.value.im.abs() < 1e-15);
    let v = zeta::eval_dirichlet(&golden::cantor_string(), c(2.0, 0.0)).unwrap();
    assert!((v.value.re - 1.0 / 7.0).abs() < 1e-15);
}

#[test]
fn cantor_string_poles() {
    let form = zeta::lattice_closed_form(&golden::cantor_string()).unwrap();
    let poles = form.poles_in_window(Window {
        sigma_min: -10.0,
        t_max: 20.0,
    });
    assert_eq!(poles.len(), 7);
    for p in &poles {
        assert!((p.location.re - d_cantor()).abs() < 1e-12);
        assert!((p.location.im - 2.0 * PI * p.k as f64 / 3f64.ln()).abs() < 1e-12);
        assert!((p.residue - c(0.5 / 3f64.ln(), 0.0)).norm() < 1e-12);
    }
    let none = form.poles_in_window(Window {
        sigma_min: 0.7,
        t_max: 20.0,
    });
    assert!(none.is_empty());
}

#[test]
fn integral_transform_examples() {
    let s = golden::cantor_string();
    for z in [c(1.0, 0.0), c(0.8, 3.0)] {
        assert!(zeta::integral_transform_check(&s, z).unwrap().gap <= 1e-10);
    }
    assert!(matches!(
        zeta::integral_transform_check(&s, c(0.5, 0.0)),
        Err(Error::Divergent { .. })
    ));
}

#[test]
fn explicit_formula_at_100() {
    let s = golden::cantor_string();
    let form = zeta::lattice_closed_form(&s).unwrap();
    let z0 = form.eval(c(0.0, 0.0));
    assert!((z0 - c(-1.0, 0.0)).norm() < 1e-15);
    let poles = form.poles_in_window(Window {
        sigma_min: 0.0,
        t_max: 50.5 * 2.0 * PI / 3f64.ln(),
    });
    let v = zeta::explicit_counting_formula(&poles, Some(z0), 100.0, 50).unwrap();
    assert!((v - 15.0).abs() <= 0.05 * 15.0, "{v}");
}

#[test]
fn measurability_verdicts() {
    let r = zeta::measurability_criterion(&golden::cantor_string(), MeasurabilityFit::default()).unwrap();
    assert_eq!(r.verdict, Verdict::Oscillatory);
    assert_eq!(r.pole_verdict, Some(Verdict::Oscillatory));
    let flat = FractalString::new(
        vec![Scale { l: 0.5, m: 1 }],
        Some(GeometricTail {
            r: 0.5,
            g: 1,
            onset: 1,
            period: 1,
        }),
    )
    .unwrap();
    assert!(matches!(
        zeta::measurability_criterion(&flat, MeasurabilityFit::default()),
        Err(Error::Scope(_))
    ));
}

#[test]
fn tube_volumes() {
    assert!((tube::tube_volume(&cloud_1d(&[0.0, 1.0]), 0.25).unwrap() - 1.0).abs() < 1e-15);
    let v = tube::tube_volume(&golden::cantor_endpoints(12), 1.0 / 6.0).unwrap();
    assert!((v - 4.0 / 3.0).abs() <= 1e-9);
    let corners = PointCloud::new(2, vec![0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0], CloudMeta::default()).unwrap();
    let r = tube::tube_volume_2d(&corners, 0.1, None).unwrap();
    assert!((r.vol - 4.0 * PI * 0.01).abs() <= r.error, "{r:?}");
}

#[test]
fn inner_tube_of_strings() {
    let s = golden::cantor_string();
    assert!((tube::inner_tube_volume(&s, 1.0 / 18.0).unwrap() - 7.0 / 9.0).abs() < 1e-12);
    assert!((tube::inner_tube_volume(&s, 1.0).unwrap() - 1.0).abs() < 1e-12);
    let one = FractalString::new(vec![Scale { l: 0.6, m: 1 }], None).unwrap();
    assert!((tube::inner_tube_volume(&one, 0.15).unwrap() - 0.3).abs() < 1e-15);
}

#[test]
fn interval_content() {
    let pts: Vec<f64> = (0..=100_000).map(|i| i as f64 / 100_000.0).collect();
    let t = ExactTube1d::new(&pts).unwrap();
    let grid = fraczeta_core::fit::geometric_grid(1e-4, 1e-2, 20);
    let e = tube::minkowski_estimate(&t, 1.0, &grid).unwrap();
    assert!(
        (e.upper_content - 1.0).abs() < 0.01 && (e.lower_content - 1.0).abs() < 0.01,
        "{e:?}"
    );
    assert!((e.dim_upper - 1.0).abs() < 0.01, "{e:?}");
}

#[test]
fn synthetic_power_law_is_measurable() {
    let t = FnTube {
        m: 1,
        f: |e: f64| 3.0 * e.powf(0.4),
    };
    let r = tube::measurability_probe(&t, 0.6, &ProbeSpec::for_eps(1e-8, 1e-2)).unwrap();
    match r.verdict {
        ProbeVerdict::MeasurableConsistent { content } => assert!((content - 3.0).abs() < 1e-9),
        v => panic!("{v:?}"),
    }
    match distzeta::log_periodic_analysis(&t, 0.6, 3, &ProbeSpec::for_eps(1e-8, 1e-2)).unwrap() {
        LogPeriodicOutcome::NoPeriod { content } => assert!((content - 3.0).abs() < 1e-9),
        o => panic!("{o:?}"),
    }
}

#[test]
fn distance_zeta_examples() {
    let cantor = golden::cantor_endpoints(12);
    let v = distzeta::distance_zeta_1d(&cantor, 1.0 / 6.0, c(1.0, 0.0), None).unwrap();
    assert!((v.value - c(4.0 / 3.0, 0.0)).norm() < 1e-12);
    let v = distzeta::distance_zeta_1d(&cloud_1d(&[0.0, 1.0]), 0.25, c(1.0, 0.0), None).unwrap();
    assert!((v.value - c(1.0, 0.0)).norm() < 1e-15);
    let v = distzeta::distance_zeta_1d(&cantor, 1.0 / 6.0, c(d_cantor(), 0.0), Some(d_cantor())).unwrap();
    assert!(v.warning.is_some());
}

#[test]
fn string_form_examples() {
    let v = distzeta::distance_zeta_string_form(&golden::cantor_string(), 1.0 / 6.0, c(1.0, 0.0)).unwrap();
    assert!((v - c(4.0 / 3.0, 0.0)).norm() < 1e-12);
    let one = FractalString::new(vec![Scale { l: 1.0, m: 1 }], None).unwrap();
    let v = distzeta::distance_zeta_string_form(&one, 0.5, c(2.0, 0.0)).unwrap();
    assert!((v - c(0.5, 0.0)).norm() < 1e-15);
    let res = distzeta::residue_closed_form(&golden::cantor_string()).unwrap();
    assert!((res - 2f64.powf(-d_cantor()) / LN_2).abs() < 1e-12);
}

#[test]
fn tube_zeta_of_interval() {
    let t = FnTube {
        m: 1,
        f: |e: f64| 1.0 + 2.0 * e,
    };
    let v = distzeta::tube_zeta(&t, 0.1, c(2.0, 0.0), Default::default()).unwrap();
    assert!((v.value - c(0.11, 0.0)).norm() < 1e-12);
}

#[test]
fn identity_examples() {
    let cantor = golden::cantor_endpoints(12);
    assert!(
        distzeta::identity_check(&cantor, 1.0 / 6.0, c(0.8, 0.0), 0)
            .unwrap()
            .gap
            <= 1e-6
    );
    assert!(
        distzeta::identity_check(&cantor, 1.0 / 6.0, c(1.0, 0.0), 0)
            .unwrap()
            .gap
            <= 1e-12
    );
    let a = golden::a_string_cloud(10_000);
    assert!(distzeta::identity_check(&a, 0.25, c(0.7, 0.0), 0).unwrap().gap <= 1e-5);
}

#[test]
fn cantor_average_content() {
    let t = ExactTube1d::from_cloud(&golden::cantor_endpoints(14)).unwrap();
    let d = d_cantor();
    let out = distzeta::log_periodic_analysis(&t, d, 3, &ProbeSpec::for_eps(1e-6, 1e-2)).unwrap();
    let LogPeriodicOutcome::LogPeriodic(r) = out else {
        panic!("{out:?}");
    };
    assert!((r.period - 3f64.ln()).abs() <= 0.01 * 3f64.ln());
    let want = distzeta::residue_closed_form(&golden::cantor_string()).unwrap() / (1.0 - d);
    assert!(
        (r.average_content - want).abs() <= 0.02 * want,
        "{} vs {want}",
        r.average_content
    );
}

#[test]
fn a_string_chain() {
    let r = dimension_chain(&golden::a_string_cloud(10_000), &ChainSpec::default()).unwrap();
    for leg in &r.legs {
        let u = leg.upper.unwrap_or_else(|| panic!("{leg:?}"));
        assert!((u - 0.5).abs() <= 0.05, "{leg:?}");
    }
}

#[test]
fn constant_curve_is_degenerate() {
    let curve = boxcount::BoxCountCurve {
        variant: Variant::MeshCount,
        samples: vec![(1.0, 1), (10.0, 1), (100.0, 1)],
    };
    let r = boxcount::extract_box_counting_string(boxcount::CurveSource::Sampled(&curve), 100.0);
    match r {
        Ok(ex) => assert!(ex.warning.is_some()),
        Err(e) => assert!(matches!(e, Error::Degenerate(_) | Error::InsufficientData(_)), "{e}"),
    }
}
