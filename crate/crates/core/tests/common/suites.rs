use std::cell::RefCell;

use fraczeta_core::boxcount::{CloudMeta, PointCloud, Variant};
use fraczeta_core::chain::{box_estimate_in_range, box_scale_range};
use fraczeta_core::distzeta::{self, residue_extrapolate, MonteCarloSpec, QuadSpec};
use fraczeta_core::golden;
use fraczeta_core::strings::{FractalString, GeometricTail, Scale};
use fraczeta_core::tube::ExactTube1d;
use fraczeta_core::zeta;
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestError, TestRng, TestRunner};

use super::Outcome;

pub const CASES: u32 = 100;
pub const DIM_TOL: f64 = 0.03;
pub const RESIDUE_TOL: f64 = 1e-6;

fn runner() -> TestRunner {
    let config = Config {
        cases: CASES,
        failure_persistence: None,
        max_shrink_iters: 64,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn outcome<T: std::fmt::Debug>(name: &str, r: Result<(), TestError<T>>) -> Outcome {
    match r {
        Ok(()) => Outcome::new(true, format!("{name}: {CASES} cases")),
        Err(TestError::Fail(why, value)) => Outcome::new(false, format!("{name}: {why}; minimal input {value:?}")),
        Err(TestError::Abort(why)) => Outcome::new(false, format!("{name}: aborted: {why}")),
    }
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, TestCaseError> {
    r.map_err(|e| TestCaseError::fail(e.to_string()))
}

/// Strictly decreasing scales with an optional geometric tail over the last one or two.
pub fn arb_string() -> impl Strategy<Value = FractalString> {
    (
        prop::collection::vec((0.3f64..0.95, 1u64..5), 1..6),
        0.1f64..1.0,
        prop::option::of((0.2f64..0.9, 1u64..5, 1usize..=2)),
    )
        .prop_filter_map("valid string", |(steps, l1, tail)| {
            let mut l = l1;
            let scales: Vec<Scale> = steps
                .iter()
                .map(|&(q, m)| {
                    let s = Scale { l, m };
                    l *= q;
                    s
                })
                .collect();
            let n = scales.len();
            let tail = tail.and_then(|(u, g, p)| {
                if p > n {
                    return None;
                }
                let r = if p == 1 {
                    u
                } else {
                    u * scales[n - 1].l / scales[n - 2].l
                };
                Some(GeometricTail {
                    r,
                    g,
                    onset: n - p + 1,
                    period: p,
                })
            });
            FractalString::new(scales, tail).ok()
        })
}

pub fn arb_tailed_string() -> impl Strategy<Value = FractalString> {
    arb_string().prop_filter("has tail", |s| s.tail().is_some())
}

/// Tailed strings with total length finite (g r < 1 per block), so the distance zeta closed form applies.
pub fn arb_ordinary_lattice_string() -> impl Strategy<Value = FractalString> {
    arb_tailed_string().prop_filter("ordinary", |s| s.exact_dimension().map(|d| d < 0.95).unwrap_or(false))
}

pub fn counting_monotone() -> Outcome {
    let strat = (arb_string(), prop::collection::vec(-2.0f64..8.0, 2..40));
    let r = runner().run(&strat, |(s, mut logs)| {
        logs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut prev = 0u64;
        for u in logs {
            let n = ok(s.counting_function(10f64.powf(u)))?;
            prop_assert!(n >= prev, "N decreased from {prev} to {n} at x = 10^{u}");
            prev = n;
        }
        let below = ok(s.counting_function(0.5 / s.scales()[0].l))?;
        prop_assert_eq!(below, 0);
        Ok(())
    });
    outcome("counting-function monotonicity", r)
}

pub fn prefix_invariance() -> Outcome {
    let strat = (
        arb_tailed_string(),
        prop::collection::vec((1.05f64..3.0, 1u64..6), 1..5),
    );
    let r = runner().run(&strat, |(s, prefix)| {
        let before = ok(s.abscissa_of_convergence())?.value;
        let mut l = s.scales()[0].l;
        let mut head: Vec<Scale> = prefix
            .iter()
            .map(|&(q, m)| {
                l *= q;
                Scale { l, m }
            })
            .collect();
        head.reverse();
        let k = head.len();
        head.extend_from_slice(s.scales());
        let mut t = *s.tail().unwrap();
        t.onset += k;
        let longer = ok(FractalString::new(head, Some(t)))?;
        let after = ok(longer.abscissa_of_convergence())?.value;
        prop_assert_eq!(before, after);
        Ok(())
    });
    outcome("string prefix-invariance", r)
}

/// The golden clouds the box-dimension suites draw from.
pub fn golden_clouds() -> Vec<PointCloud> {
    vec![
        golden::cantor_endpoints(12),
        golden::a_string_cloud(10_000),
        golden::setf_ifs().generate_attractor(6).unwrap(),
        golden::unit_square_grid(100),
    ]
}

fn estimate(cloud: &PointCloud, lambda: f64, range: (f64, f64)) -> Result<(f64, f64), TestCaseError> {
    let e = ok(box_estimate_in_range(
        cloud,
        lambda,
        range.0,
        range.1,
        Variant::MeshCount,
    ))?;
    Ok((e.upper, e.lower))
}

fn translated(cloud: &PointCloud, by: &[f64]) -> PointCloud {
    let m = cloud.m();
    let coords = cloud.coords().iter().enumerate().map(|(i, &x)| x + by[i % m]).collect();
    PointCloud::new(m, coords, cloud.meta.clone()).unwrap()
}

fn subcloud(cloud: &PointCloud, lo: &[f64], hi: &[f64]) -> Option<PointCloud> {
    let m = cloud.m();
    let coords: Vec<f64> = cloud
        .points()
        .filter(|p| (0..m).all(|i| p[i] >= lo[i] && p[i] <= hi[i]))
        .flat_map(|p| p.to_vec())
        .collect();
    if coords.len() < 2 * m {
        return None;
    }
    PointCloud::new(m, coords, cloud.meta.clone()).ok()
}

/// Worst deviation per label over all cases; the suite passes when every one is within `tol`.
struct Worst {
    rows: RefCell<Vec<(String, f64)>>,
}

impl Worst {
    fn new() -> Self {
        Worst {
            rows: RefCell::new(Vec::new()),
        }
    }

    fn record(&self, label: &str, dev: f64) {
        let mut rows = self.rows.borrow_mut();
        match rows.iter_mut().find(|(l, _)| l == label) {
            Some(row) => row.1 = row.1.max(dev),
            None => rows.push((label.to_string(), dev)),
        }
    }

    fn outcome<T: std::fmt::Debug>(self, name: &str, tol: f64, r: Result<(), TestError<T>>) -> Outcome {
        if let Err(e) = r {
            return outcome(name, Err(e));
        }
        let rows = self.rows.into_inner();
        let pass = rows.iter().all(|(_, d)| *d <= tol);
        let shown: Vec<String> = rows.iter().map(|(l, d)| format!("{l} {d:.4}")).collect();
        Outcome::new(
            pass,
            format!(
                "{name}: {CASES} cases, worst deviation per input: {} (tol {tol})",
                shown.join(", ")
            ),
        )
    }
}

/// A random translation in [0, 1)^m.
fn arb_shift() -> impl Strategy<Value = [f64; 2]> {
    [0.0f64..1.0, 0.0f64..1.0]
}

pub fn lambda_invariance() -> Outcome {
    let clouds = golden_clouds();
    let worst = Worst::new();
    let strat = (0..clouds.len(), arb_shift());
    let r = runner().run(&strat, |(i, v)| {
        let cloud = translated(&clouds[i], &v);
        let range = box_scale_range(&cloud, cloud.meta.delta);
        let a = estimate(&cloud, 2.0, range)?;
        let b = estimate(&cloud, 3.0, range)?;
        worst.record(&cloud.meta.source, (a.0 - b.0).abs().max((a.1 - b.1).abs()));
        Ok(())
    });
    worst.outcome("lambda-invariance (meshCount, 2 vs 3)", DIM_TOL, r)
}

pub fn monotonicity() -> Outcome {
    let clouds = golden_clouds();
    let worst = Worst::new();
    let strat = (0..clouds.len(), arb_shift(), 0.0f64..0.7, 0.3f64..1.0);
    let r = runner().run(&strat, |(i, v, start, width)| {
        let big = translated(&clouds[i], &v);
        let (bl, bh) = big.bounding_box();
        let m = big.m();
        let lo: Vec<f64> = (0..m).map(|k| bl[k] + start * (bh[k] - bl[k])).collect();
        let hi: Vec<f64> = (0..m).map(|k| lo[k] + width * (bh[k] - bl[k])).collect();
        let Some(small) = subcloud(&big, &lo, &hi) else {
            return Ok(());
        };
        let range = box_scale_range(&big, big.meta.delta);
        let a = estimate(&small, 2.0, range)?;
        let b = estimate(&big, 2.0, range)?;
        worst.record(&big.meta.source, (a.0 - b.0).max(a.1 - b.1).max(0.0));
        Ok(())
    });
    worst.outcome("monotonicity under inclusion", DIM_TOL, r)
}

pub fn finite_stability() -> Outcome {
    let clouds = golden_clouds();
    let worst = Worst::new();
    let strat = (0..clouds.len(), 0..clouds.len(), arb_shift(), 0.5f64..3.0);
    let r = runner().run(&strat, |(i, j, v, gap)| {
        let a = translated(&clouds[i], &v);
        if clouds[j].m() != a.m() {
            return Ok(());
        }
        let mut by = vec![0.0; a.m()];
        by[0] = a.bounding_box().1[0] + gap - clouds[j].bounding_box().0[0];
        let b = translated(&clouds[j], &by);
        let u = ok(a.union(&b))?;
        let range = box_scale_range(&u, u.meta.delta);
        let ea = estimate(&a, 2.0, range)?;
        let eb = estimate(&b, 2.0, range)?;
        let eu = estimate(&u, 2.0, range)?;
        worst.record(&u.meta.source, (eu.0 - ea.0.max(eb.0)).abs());
        Ok(())
    });
    worst.outcome("finite stability of the upper estimate", DIM_TOL, r)
}

fn conj_equal(a: Complex64, b: Complex64) -> bool {
    a.conj() == b
}

pub fn conjugate_symmetry() -> Outcome {
    let strat = (arb_string(), 0.0f64..2.5, 0.1f64..25.0);
    let r = runner().run(&strat, |(st, re_off, im)| {
        let d = st.exact_dimension().unwrap_or(0.0);
        let s = Complex64::new(d + 0.05 + re_off, im);
        let pairs =
            |name: &str, f: &dyn Fn(Complex64) -> fraczeta_core::Result<Complex64>| -> Result<(), TestCaseError> {
                let a = ok(f(s))?;
                let b = ok(f(s.conj()))?;
                prop_assert!(conj_equal(a, b), "{name}: f(s) = {a}, f(conj s) = {b}");
                Ok(())
            };
        pairs("dirichlet", &|z| zeta::eval_dirichlet(&st, z).map(|v| v.value))?;
        if let Ok(form) = zeta::lattice_closed_form(&st) {
            let z = Complex64::new(d - 0.7 - re_off, im);
            let (a, b) = (form.eval(z), form.eval(z.conj()));
            prop_assert!(conj_equal(a, b), "closed form at {z}: {a} vs {b}");
        }
        if d < 1.0 {
            let eps = st.scales()[0].l;
            pairs("string-form distance zeta", &|z| {
                distzeta::distance_zeta_string_form(&st, eps, z)
            })?;
        }
        let pts = st.realize_points(400);
        let cloud = PointCloud::new(1, pts.clone(), CloudMeta::default()).unwrap();
        let eps = 0.3 * st.scales()[0].l;
        let z = Complex64::new(0.3 + re_off, im);
        let (a, b) = (
            ok(distzeta::distance_zeta_1d(&cloud, eps, z, None))?.value,
            ok(distzeta::distance_zeta_1d(&cloud, eps, z.conj(), None))?.value,
        );
        prop_assert!(conj_equal(a, b), "exact 1-D distance zeta: {a} vs {b}");
        let tube = ok(ExactTube1d::new(&pts))?;
        let quad = QuadSpec::default();
        let (a, b) = (
            ok(distzeta::tube_zeta(&tube, eps, z, quad))?.value,
            ok(distzeta::tube_zeta(&tube, eps, z.conj(), quad))?.value,
        );
        prop_assert!(conj_equal(a, b), "tube zeta: {a} vs {b}");
        let w = Complex64::new(0.55 + re_off, im);
        prop_assert!(conj_equal(
            distzeta::a_string_zeta(w),
            distzeta::a_string_zeta(w.conj())
        ));
        pairs("a-string distance zeta", &|z| {
            distzeta::a_string_distance_zeta(0.3, z + 0.5)
        })?;
        let planar = PointCloud::new(2, vec![0.0, 0.0, 1.0, 0.0, 0.3, 0.8], CloudMeta::default()).unwrap();
        let mc = MonteCarloSpec {
            samples_per_cell: 4,
            ..Default::default()
        };
        let z2 = Complex64::new(1.5 + re_off, im);
        let (a, b) = (
            ok(distzeta::distance_zeta_2d(&planar, 0.2, z2, mc))?.value,
            ok(distzeta::distance_zeta_2d(&planar, 0.2, z2.conj(), mc))?.value,
        );
        prop_assert!(conj_equal(a, b), "planar Monte-Carlo distance zeta: {a} vs {b}");
        Ok(())
    });
    outcome("conjugate symmetry of zeta evaluations", r)
}

pub fn residue_eps_invariance() -> Outcome {
    let strat = (prop::option::of(arb_ordinary_lattice_string()), 1.0f64..4.0);
    let r = runner().run(&strat, |(st, scale)| {
        let (d, r1, r2) = match &st {
            Some(st) => {
                let d = st.exact_dimension().unwrap();
                let eps = scale * st.scales()[0].l / 2.0;
                let f =
                    |e: f64| move |s: f64| Ok(distzeta::distance_zeta_string_form(st, e, Complex64::new(s, 0.0))?.re);
                let a = ok(residue_extrapolate(&f(eps), d, 9))?.value;
                let b = ok(residue_extrapolate(&f(2.0 * eps), d, 9))?.value;
                (d, a, b)
            }
            None => {
                let eps = 0.25 * scale;
                let f = |e: f64| move |s: f64| Ok(distzeta::a_string_distance_zeta(e, Complex64::new(s, 0.0))?.re);
                let a = ok(residue_extrapolate(&f(eps), 0.5, 9))?.value;
                let b = ok(residue_extrapolate(&f(2.0 * eps), 0.5, 9))?.value;
                (0.5, a, b)
            }
        };
        prop_assert!(
            (r1 - r2).abs() <= RESIDUE_TOL,
            "D = {d}: residue {r1} at eps vs {r2} at 2 eps"
        );
        Ok(())
    });
    outcome("epsilon-invariance of residues", r)
}

pub fn all() -> Vec<(&'static str, fn() -> Outcome)> {
    vec![
        ("counting-monotone", counting_monotone as fn() -> Outcome),
        ("prefix-invariance", prefix_invariance),
        ("lambda-invariance", lambda_invariance),
        ("monotonicity", monotonicity),
        ("finite-stability", finite_stability),
        ("conjugate-symmetry", conjugate_symmetry),
        ("residue-eps-invariance", residue_eps_invariance),
    ]
}
