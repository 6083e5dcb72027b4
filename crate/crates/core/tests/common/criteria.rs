use std::time::Instant;

use fraczeta_core::boxcount::{extract_box_counting_string, AnalyticCurve, CurveSource};
use fraczeta_core::chain::{dimension_chain, ChainSpec};
use fraczeta_core::distzeta::{
    self, identity_check, log_periodic_analysis, residue_closed_form, residue_extrapolate, LogPeriodicOutcome,
};
use fraczeta_core::golden;
use fraczeta_core::ifs::IfsSpec;
use fraczeta_core::quad::contour_residue;
use fraczeta_core::strings::FractalString;
use fraczeta_core::tube::{self, ExactTube1d, FnTube, ProbeSpec, ProbeVerdict};
use fraczeta_core::zeta::{self, Window, TWO_PI};
use fraczeta_core::{fit, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{log3_2, Outcome};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn cpow(a: f64, s: Complex64) -> Complex64 {
    (s * a.ln()).exp()
}

fn run(f: impl FnOnce() -> Result<Outcome>) -> Outcome {
    match f() {
        Ok(o) => o,
        Err(e) => Outcome::err(e),
    }
}

fn random_s(rng: &mut ChaCha8Rng, re_lo: f64, re_hi: f64, im: f64) -> Complex64 {
    c(rng.gen_range(re_lo..re_hi), rng.gen_range(-im..im))
}

/// Depth-12 Cantor endpoints: five legs near log₃2, small discrepancy, fast.
pub fn cantor_chain() -> Outcome {
    run(|| {
        let t = Instant::now();
        let r = dimension_chain(&golden::cantor_endpoints(12), &ChainSpec::default())?;
        let secs = t.elapsed().as_secs_f64();
        let d = log3_2();
        let mut worst = 0.0f64;
        let mut legs = Vec::new();
        for l in &r.legs {
            let u = l.upper.unwrap_or(f64::NAN);
            worst = worst.max((u - d).abs());
            legs.push(format!("{}={u:.4}", l.leg));
        }
        let pass = r.legs.len() == 5 && worst <= 0.05 && r.discrepancy <= 0.05 && secs < 5.0;
        Ok(Outcome::new(
            pass,
            format!(
                "{} | max |est-D| {worst:.4} <= 0.05, discrepancy {:.4} <= 0.05, {secs:.2}s < 5s",
                legs.join(" "),
                r.discrepancy
            ),
        ))
    })
}

fn same_length(a: f64, b: f64) -> bool {
    (a - b).abs() <= 4.0 * f64::EPSILON * b
}

/// Analytic extraction against the closed-form box-counting strings.
pub fn box_counting_strings() -> Outcome {
    run(|| {
        let cantor = extract_box_counting_string(CurveSource::Analytic(AnalyticCurve::CantorDiam), 3f64.powi(22))?;
        let levels: Vec<_> = cantor.string.levels().take(20).collect();
        let mut bad = Vec::new();
        for (i, lv) in levels.iter().enumerate() {
            let n = i as i32 + 1;
            let (l, m) = if n == 1 {
                (1.0, 2.0)
            } else {
                (3f64.powi(-(n - 1)), 2f64.powi(n - 1))
            };
            if !same_length(lv.l, l) || lv.m != m {
                bad.push(format!("cantor n={n}: ({}, {}) vs ({l}, {m})", lv.l, lv.m));
            }
        }
        if levels.len() < 20 {
            bad.push(format!("cantor: only {} levels", levels.len()));
        }

        let f = extract_box_counting_string(CurveSource::Analytic(AnalyticCurve::SetFPacking), 4f64.powi(12))?;
        let s2 = std::f64::consts::SQRT_2;
        let mut want = vec![(s2 / 2.0, 2.0)];
        for k in 0..=10 {
            let p = 4f64.powi(k);
            if k >= 1 {
                want.push((s2 / (2.0 * p), p));
            }
            want.push((17f64.sqrt() / (8.0 * p), p));
            want.push((1.0 / (2.0 * p), p));
        }
        want.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let got: Vec<_> = f.string.levels().take(want.len()).collect();
        for (i, (lv, w)) in got.iter().zip(&want).enumerate() {
            if !same_length(lv.l, w.0) || lv.m != w.1 {
                bad.push(format!("set F level {}: ({}, {}) vs {w:?}", i + 1, lv.l, lv.m));
            }
        }
        if got.len() < want.len() {
            bad.push("set F: too few levels".into());
        }
        Ok(Outcome::new(
            bad.is_empty(),
            if bad.is_empty() {
                format!(
                    "Cantor levels n<=20 and {} set-F levels (k<=10) match; multiplicities exact, lengths within 4 ulp",
                    want.len()
                )
            } else {
                bad.join("; ")
            },
        ))
    })
}

/// Closed forms against Dirichlet partial sums at 100 random s each.
pub fn lattice_closed_forms() -> Outcome {
    run(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s2 = std::f64::consts::SQRT_2;
        let cases: Vec<(&str, FractalString, Box<dyn Fn(Complex64) -> Complex64>)> = vec![
            (
                "cantor",
                golden::cantor_box_string(),
                Box::new(|s| c(1.0, 0.0) + c(1.0, 0.0) / (c(1.0, 0.0) - cpow(3.0, -s) * 2.0)),
            ),
            (
                "setF",
                golden::setf_box_string(),
                Box::new(move |s| {
                    cpow(s2 / 2.0, s)
                        + (cpow(s2 / 2.0, s) + cpow(17f64.sqrt() / 8.0, s) + cpow(0.5, s))
                            / (c(1.0, 0.0) - cpow(4.0, -s) * 4.0)
                }),
            ),
            (
                "tessellation",
                golden::setf_tessellation_string(),
                Box::new(|s| c(9.0, 0.0) / (cpow(4.0, s - 1.0) - 1.0)),
            ),
        ];
        let mut parts = Vec::new();
        let mut pass = true;
        for (name, st, expected) in &cases {
            let d = st.exact_dimension().unwrap();
            let form = zeta::lattice_closed_form(st)?;
            let mut worst = 0.0f64;
            for _ in 0..100 {
                let s = random_s(&mut rng, d + 0.1, d + 3.0, 30.0);
                let sum = zeta::dirichlet_partial_sum(st, s, 1e-15)?.value;
                let want = expected(s);
                worst = worst
                    .max((sum - want).norm() / want.norm())
                    .max((form.eval(s) - want).norm() / want.norm());
            }
            pass &= worst <= 1e-10;
            parts.push(format!("{name} max rel {worst:.2e}"));
        }
        Ok(Outcome::new(pass, parts.join(", ") + " (<= 1e-10)"))
    })
}

/// Pole locations on the lattice progressions and residues from contour integrals.
pub fn complex_dimensions() -> Outcome {
    run(|| {
        let mut parts = Vec::new();
        let mut pass = true;
        let cases = [
            ("cantor", golden::cantor_string(), log3_2(), 3f64.ln()),
            ("cantor-box", golden::cantor_box_string(), log3_2(), 3f64.ln()),
            ("setF", golden::setf_box_string(), 1.0, 4f64.ln()),
            ("setF-tess", golden::setf_tessellation_string(), 1.0, 4f64.ln()),
        ];
        for (name, st, d, lr) in cases {
            let p = TWO_PI / lr;
            let form = zeta::lattice_closed_form(&st)?;
            let poles = form.poles_in_window(Window {
                sigma_min: 0.0,
                t_max: 5.5 * p,
            });
            let mut loc = 0.0f64;
            let mut res = 0.0f64;
            let mut ks: Vec<i64> = Vec::new();
            for pole in &poles {
                let k = (pole.location.im / p).round();
                ks.push(k as i64);
                loc = loc.max((pole.location - c(d, k * p)).norm());
                let num = contour_residue(|s| form.eval(s), pole.location, 0.01, 256);
                res = res.max((num - pole.residue).norm());
            }
            ks.sort();
            let complete = ks == (-5..=5).collect::<Vec<_>>();
            pass &= complete && loc <= 1e-12 && res <= 1e-8;
            parts.push(format!("{name}: {} poles, loc {loc:.1e}, res {res:.1e}", poles.len()));
        }
        Ok(Outcome::new(
            pass,
            parts.join("; ") + " (|k|<=5, loc<=1e-12, res<=1e-8)",
        ))
    })
}

/// Moran roots on the two worked equations and random ratio sets.
pub fn moran() -> Outcome {
    run(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let n = rng.gen_range(2..=8);
            let ratios: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..0.99)).collect();
            let sol = IfsSpec::from_ratios(&ratios)?.moran_solve();
            let resid = (ratios.iter().map(|r| r.powf(sol.dimension)).sum::<f64>() - 1.0).abs();
            worst = worst.max(resid).max(sol.residual);
        }
        let cantor = IfsSpec::from_ratios(&[1.0 / 3.0, 1.0 / 3.0])?.moran_solve();
        let four = IfsSpec::from_ratios(&[0.25; 4])?.moran_solve();
        let e1 = (cantor.dimension - log3_2()).abs();
        let e2 = (four.dimension - 1.0).abs();
        worst = worst.max(cantor.residual).max(four.residual);
        Ok(Outcome::new(
            worst <= 1e-12 && e1 <= 1e-12 && e2 <= 1e-12,
            format!(
                "max residual {worst:.1e} <= 1e-12; {{1/3,1/3}} -> {} (err {e1:.1e}); 4x{{1/4}} -> {} (err {e2:.1e})",
                cantor.dimension, four.dimension
            ),
        ))
    })
}

pub fn golden_strings() -> Vec<(&'static str, FractalString)> {
    vec![
        ("cantor", golden::cantor_string()),
        ("cantor-box", golden::cantor_box_string()),
        ("setF", golden::setf_box_string()),
        ("setF-tess", golden::setf_tessellation_string()),
        ("power-2", golden::power_string(2.0, 500)),
    ]
}

/// ζ(s) = s ∫ N(x) x^(-s-1) dx at 20 random s per golden string.
pub fn integral_transform() -> Outcome {
    run(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut parts = Vec::new();
        let mut pass = true;
        for (name, st) in golden_strings() {
            let d = st.exact_dimension().unwrap_or(0.5);
            let mut worst = 0.0f64;
            for _ in 0..20 {
                let s = random_s(&mut rng, d + 0.1, d + 2.0, 10.0);
                worst = worst.max(zeta::integral_transform_check(&st, s)?.gap);
            }
            pass &= worst <= 1e-10;
            parts.push(format!("{name} {worst:.1e}"));
        }
        Ok(Outcome::new(pass, format!("max gap: {} (<= 1e-10)", parts.join(", "))))
    })
}

const K_MAX: i64 = 50;

/// Truncated explicit formula vs the exact Cantor counting function.
pub fn explicit_formula() -> Outcome {
    run(|| {
        let st = golden::cantor_string();
        let form = zeta::lattice_closed_form(&st)?;
        let lr = 3f64.ln();
        let z0 = form.eval(c(0.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut xs = Vec::new();
        while xs.len() < 20 {
            let x = 10f64.powf(rng.gen_range(1.0..4.0));
            // Within half a wavelength of the top retained harmonic, no finite K converges.
            let phase = x.ln() / lr - (x.ln() / lr).round();
            let near_jump = phase.abs() < 1.0 / (2.0 * K_MAX as f64);
            if !near_jump {
                xs.push(x);
            }
        }
        let ks = [5i64, 10, 20, 35, K_MAX];
        let mut means = Vec::new();
        let mut worst_50 = 0.0f64;
        for &k in &ks {
            let poles = form.poles_in_window(Window {
                sigma_min: 0.0,
                t_max: (k as f64 + 0.5) * TWO_PI / lr,
            });
            let mut total = 0.0;
            for &x in &xs {
                let exact = st.counting_function(x)? as f64;
                let v = zeta::explicit_counting_formula(&poles, Some(z0), x, k)?;
                let rel = (v - exact).abs() / exact;
                total += rel;
                if k == K_MAX {
                    worst_50 = worst_50.max(rel);
                }
            }
            means.push(total / xs.len() as f64);
        }
        let nonincreasing = means.windows(2).all(|w| w[1] <= w[0]);
        let shown: Vec<String> = ks.iter().zip(&means).map(|(k, m)| format!("K={k}:{m:.4}")).collect();
        Ok(Outcome::new(
            worst_50 <= 0.05 && nonincreasing,
            format!(
                "K=50 max rel err {worst_50:.4} <= 0.05; mean rel err {} nonincreasing={nonincreasing}",
                shown.join(" ")
            ),
        ))
    })
}

/// ζ_d = ε^(s-m)|A_ε| + (m-s) ζ̃ on exact 1-D paths.
pub fn distance_tube_identity() -> Outcome {
    run(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let cases = [
            ("cantor", golden::cantor_endpoints(12), 1.0 / 6.0, log3_2()),
            ("a-string", golden::a_string_cloud(10_000), 0.25, 0.5),
        ];
        let mut parts = Vec::new();
        let mut pass = true;
        for (name, cloud, eps, d) in cases {
            let mut worst = 0.0f64;
            for _ in 0..10 {
                let s = random_s(&mut rng, d + 0.05, 2.0, 10.0);
                worst = worst.max(identity_check(&cloud, eps, s, 0)?.gap);
            }
            pass &= worst <= 1e-6;
            parts.push(format!("{name} {worst:.1e}"));
        }
        Ok(Outcome::new(pass, format!("max gap: {} (<= 1e-6)", parts.join(", "))))
    })
}

/// Closed-form Cantor residue and its strict bracketing by the tube contents.
pub fn residue_content() -> Outcome {
    run(|| {
        let d = log3_2();
        let res = residue_closed_form(&golden::cantor_string())?;
        let want = 2f64.powf(-d) / 2f64.ln();
        let err = (res - want).abs();
        let t = ExactTube1d::from_cloud(&golden::cantor_endpoints(14))?;
        let grid = fit::geometric_grid(1e-6, 1e-2, 400);
        let m = tube::minkowski_estimate(&t, d, &grid)?;
        let lo = (1.0 - d) * m.lower_content;
        let hi = (1.0 - d) * m.upper_content;
        let (g1, g2) = (res - lo, hi - res);
        let content_lo = (1.0 / d) * (2.0 * d / (1.0 - d)).powf(1.0 - d);
        let content_hi = 2f64.powf(2.0 - d);
        Ok(Outcome::new(
            err <= 1e-12 && g1 > 0.005 && g2 > 0.005,
            format!(
                "res {res:.6} (err {err:.1e} <= 1e-12); {lo:.4} < res < {hi:.4}, gaps {g1:.4}, {g2:.4} > 0.005; \
                 contents {:.4}/{:.4} vs closed forms {content_lo:.4}/{content_hi:.4}",
                m.lower_content, m.upper_content
            ),
        ))
    })
}

/// a-string: extrapolated residue against (1-D) times the probed content.
pub fn measurable_case() -> Outcome {
    run(|| {
        let f = |s: f64| Ok(distzeta::a_string_distance_zeta(0.25, c(s, 0.0))?.re);
        let r = residue_extrapolate(&f, 0.5, 9)?;
        let t = ExactTube1d::from_cloud(&golden::a_string_cloud(100_000))?;
        let probe = tube::measurability_probe(&t, 0.5, &ProbeSpec::for_eps(1e-6, 1e-3))?;
        let ProbeVerdict::MeasurableConsistent { content } = probe.verdict else {
            return Ok(Outcome::new(false, format!("probe verdict {:?}", probe.verdict)));
        };
        let target = 0.5 * content;
        let rel = (r.value - target).abs() / target;
        Ok(Outcome::new(
            rel <= 0.02,
            format!(
                "residue {:.6} (stable={}) vs (1-D)M = {target:.6}, rel {rel:.4} <= 0.02",
                r.value, r.stable
            ),
        ))
    })
}

/// Cantor period and the synthetic sine Fourier magnitude.
pub fn log_periodic() -> Outcome {
    run(|| {
        let t = ExactTube1d::from_cloud(&golden::cantor_endpoints(14))?;
        let out = log_periodic_analysis(&t, log3_2(), 3, &ProbeSpec::for_eps(1e-6, 1e-2))?;
        let LogPeriodicOutcome::LogPeriodic(rep) = out else {
            return Ok(Outcome::new(false, "Cantor tube function reported no period"));
        };
        let pe = (rep.period / 3f64.ln() - 1.0).abs();
        let t0 = 1.3;
        let syn = FnTube {
            m: 1,
            f: move |e: f64| e.powf(0.4) * (2.0 + (TWO_PI * (1.0 / e).ln() / t0).sin()),
        };
        let out = log_periodic_analysis(&syn, 0.6, 2, &ProbeSpec::for_eps(1e-6, 1e-1))?;
        let LogPeriodicOutcome::LogPeriodic(srep) = out else {
            return Ok(Outcome::new(false, "synthetic case reported no period"));
        };
        let g1 = srep
            .fourier
            .iter()
            .find(|f| f.0 == 1)
            .map(|f| f.1.norm())
            .unwrap_or(0.0);
        let ge = (g1 / (t0 / 2.0) - 1.0).abs();
        Ok(Outcome::new(
            pe <= 0.01 && ge <= 0.01,
            format!(
                "Cantor T = {:.5} (log 3 = {:.5}, rel {pe:.4}); |G(1/T0)| = {g1:.5} vs T0/2 = {:.5} (rel {ge:.4}); tol 0.01",
                rep.period,
                3f64.ln(),
                t0 / 2.0
            ),
        ))
    })
}
