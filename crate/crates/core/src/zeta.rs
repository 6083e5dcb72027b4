//! Geometric zeta functions: Dirichlet series, exact lattice forms, poles
//! and residues, the integral transform, the explicit counting formula and
//! the measurability criterion.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit;
use crate::strings::FractalString;

/// Margin above the abscissa required for evaluating a Dirichlet series.
pub const ABSCISSA_MARGIN: f64 = 1e-9;
pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn cpow(a: f64, s: Complex64) -> Complex64 {
    (s * a.ln()).exp()
}

/// c * a^s
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpTerm {
    pub c: f64,
    pub a: f64,
}

pub fn eval_exp_sum(terms: &[ExpTerm], s: Complex64) -> Complex64 {
    terms.iter().map(|t| cpow(t.a, s) * t.c).sum()
}

/// g(s) / (1 - b r^s), with r taken from the enclosing form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarTerm {
    pub g: Vec<ExpTerm>,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeZetaForm {
    pub r: f64,
    pub entire: Vec<ExpTerm>,
    pub polar: Vec<PolarTerm>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleData {
    pub location: Complex64,
    pub residue: Complex64,
    pub order: u32,
    /// Index k of the lattice progression D + 2πik/log(1/r).
    pub k: i64,
}

/// Row of the pole table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleRow {
    pub re: f64,
    pub im: f64,
    pub res_re: f64,
    pub res_im: f64,
}

impl From<&PoleData> for PoleRow {
    fn from(p: &PoleData) -> Self {
        PoleRow {
            re: p.location.re,
            im: p.location.im,
            res_re: p.residue.re,
            res_im: p.residue.im,
        }
    }
}

/// {Re s >= sigma_min, |Im s| <= t_max}
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub sigma_min: f64,
    pub t_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirichletValue {
    pub value: Complex64,
    /// Bound on the neglected remainder; 0 when the tail is summed exactly.
    pub tail_bound: f64,
    /// Finite string: the value is a plain partial sum.
    pub truncated: bool,
}

fn check_half_plane(s: &FractalString, z: Complex64) -> Result<()> {
    if let Some(d) = s.exact_dimension() {
        if z.re <= d + ABSCISSA_MARGIN {
            return Err(Error::Divergent { re: z.re, abscissa: d });
        }
    }
    Ok(())
}

/// sum over the stored scales, plus the geometric tail in closed form.
pub fn eval_dirichlet(s: &FractalString, z: Complex64) -> Result<DirichletValue> {
    check_half_plane(s, z)?;
    let head: Complex64 = s.scales().iter().map(|sc| cpow(sc.l, z) * sc.m as f64).sum();
    let Some(t) = s.tail() else {
        return Ok(DirichletValue {
            value: head,
            tail_bound: 0.0,
            truncated: true,
        });
    };
    let block = &s.scales()[s.scales().len() - t.period..];
    let bsum: Complex64 = block.iter().map(|sc| cpow(sc.l, z) * sc.m as f64).sum();
    let q = cpow(t.r, z) * t.g as f64;
    Ok(DirichletValue {
        value: head + bsum * q / (Complex64::new(1.0, 0.0) - q),
        tail_bound: 0.0,
        truncated: false,
    })
}

/// Term-by-term partial sum, continued until the geometric remainder bound
/// drops below `rel` times the running value.
pub fn dirichlet_partial_sum(s: &FractalString, z: Complex64, rel: f64) -> Result<DirichletValue> {
    check_half_plane(s, z)?;
    let mut acc = Complex64::new(0.0, 0.0);
    let Some(t) = s.tail() else {
        return eval_dirichlet(s, z);
    };
    let qabs = t.g as f64 * t.r.powf(z.re);
    let p = s.scales().len();
    let stored = p;
    let mut block_abs = 0.0;
    let mut bound = f64::INFINITY;
    for (i, lv) in s.levels().enumerate() {
        let term = cpow(lv.l, z) * lv.m;
        acc += term;
        if i >= stored - t.period {
            block_abs += term.norm();
        }
        if i + 1 >= stored && (i + 1 - stored) % t.period == 0 && i + 1 > stored {
            bound = block_abs * qabs / (1.0 - qabs);
            if bound <= rel * acc.norm() {
                break;
            }
            block_abs = 0.0;
        }
        if i > 5_000_000 {
            break;
        }
    }
    Ok(DirichletValue {
        value: acc,
        tail_bound: bound,
        truncated: false,
    })
}

impl LatticeZetaForm {
    pub fn eval(&self, s: Complex64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        let mut v = eval_exp_sum(&self.entire, s);
        let rs = cpow(self.r, s);
        for p in &self.polar {
            v += eval_exp_sum(&p.g, s) / (one - rs * p.b);
        }
        v
    }

    /// Poles D + 2πik/log(1/r) in the window with residues g(ω)/log(1/r);
    /// coincident poles are merged and cancelled ones dropped.
    pub fn poles_in_window(&self, w: Window) -> Vec<PoleData> {
        let lr = (1.0 / self.r).ln();
        let step = TWO_PI / lr;
        let mut out: Vec<PoleData> = Vec::new();
        for p in &self.polar {
            let d = p.b.ln() / lr;
            if d < w.sigma_min {
                continue;
            }
            let kmax = (w.t_max / step + 1e-12).floor() as i64;
            for k in -kmax..=kmax {
                let omega = Complex64::new(d, k as f64 * step);
                let res = eval_exp_sum(&p.g, omega) / lr;
                if let Some(existing) = out
                    .iter_mut()
                    .find(|q| (q.location - omega).norm() <= 1e-12 * (1.0 + omega.norm()))
                {
                    existing.residue += res;
                } else {
                    out.push(PoleData {
                        location: omega,
                        residue: res,
                        order: 1,
                        k,
                    });
                }
            }
        }
        let scale: f64 = self
            .polar
            .iter()
            .flat_map(|p| p.g.iter())
            .map(|t| t.c.abs() * t.a.max(1.0))
            .sum::<f64>()
            .max(1.0);
        out.retain(|p| p.residue.norm() > 1e-13 * scale);
        out.sort_by(|a, b| {
            a.location
                .re
                .partial_cmp(&b.location.re)
                .unwrap()
                .then(a.location.im.partial_cmp(&b.location.im).unwrap())
        });
        out
    }

    /// max |b r^ω - 1| over the polar terms whose real part matches ω.
    pub fn pole_certificate(&self, omega: Complex64) -> f64 {
        let lr = (1.0 / self.r).ln();
        self.polar
            .iter()
            .filter(|p| (p.b.ln() / lr - omega.re).abs() < 1e-9)
            .map(|p| (cpow(self.r, omega) * p.b - 1.0).norm())
            .fold(f64::INFINITY, f64::min)
    }
}

fn merge_terms(terms: &mut Vec<ExpTerm>) {
    let mut merged: Vec<ExpTerm> = Vec::new();
    for t in terms.iter() {
        if let Some(m) = merged.iter_mut().find(|m| ((m.a - t.a) / t.a).abs() <= 1e-12) {
            m.c += t.c;
        } else {
            merged.push(*t);
        }
    }
    merged.retain(|t| t.c.abs() > 1e-15);
    merged.sort_by(|a, b| b.a.partial_cmp(&a.a).unwrap());
    *terms = merged;
}

/// Exact rational form of ζ for a string with a geometric tail. Numerator
/// terms c a^s are rewritten as (c/b)(a/r)^s while a/r does not exceed the
/// largest scale, moving the difference into the entire part.
pub fn lattice_closed_form(s: &FractalString) -> Result<LatticeZetaForm> {
    let t = *s.tail().ok_or(Error::NotLattice)?;
    let sc = s.scales();
    let l1 = sc[0].l;
    let mut entire: Vec<ExpTerm> = sc[..t.onset - 1]
        .iter()
        .map(|x| ExpTerm { c: x.m as f64, a: x.l })
        .collect();
    let b = t.g as f64;
    let mut g: Vec<ExpTerm> = Vec::new();
    for x in &sc[t.onset - 1..t.onset - 1 + t.period] {
        let mut term = ExpTerm { c: x.m as f64, a: x.l };
        while term.a / t.r <= l1 * (1.0 + 1e-12) {
            term = ExpTerm {
                c: term.c / b,
                a: term.a / t.r,
            };
            entire.push(ExpTerm { c: -term.c, a: term.a });
        }
        g.push(term);
    }
    merge_terms(&mut entire);
    merge_terms(&mut g);
    Ok(LatticeZetaForm {
        r: t.r,
        entire,
        polar: vec![PolarTerm { g, b }],
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralCheck {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub gap: f64,
}

/// Compares ζ(z) with z ∫ N(x) x^(-z-1) dx, the latter summed exactly over
/// the intervals between jumps: Σ C_n (l_n^z - l_(n+1)^z).
pub fn integral_transform_check(s: &FractalString, z: Complex64) -> Result<IntegralCheck> {
    let lhs = eval_dirichlet(s, z)?.value;
    let levels: Box<dyn Iterator<Item = crate::strings::Level>> = s.levels();
    let mut it = levels.peekable();
    let mut cum = 0.0;
    let mut acc = Complex64::new(0.0, 0.0);
    let q = s.tail().map(|t| cpow(t.r, z) * t.g as f64);
    let period = s.tail().map(|t| t.period).unwrap_or(1);
    let mut block = Complex64::new(0.0, 0.0);
    let mut n = 0usize;
    let mut quiet = 0;
    while let Some(lv) = it.next() {
        cum += lv.m;
        let next = it.peek().map(|nx| cpow(nx.l, z)).unwrap_or(Complex64::new(0.0, 0.0));
        let term = (cpow(lv.l, z) - next) * cum;
        acc += term;
        block += term;
        n += 1;
        if q.is_some() && n > s.scales().len() && n % period == 0 {
            if block.norm() <= 1e-17 * acc.norm() {
                quiet += 1;
                if quiet >= 3 {
                    break;
                }
            } else {
                quiet = 0;
            }
            if n > 2_000_000 {
                return Err(Error::Numeric("integral transform sum did not settle".into()));
            }
            block = Complex64::new(0.0, 0.0);
        }
    }
    let rhs = match q {
        Some(q) => acc + block * q / (Complex64::new(1.0, 0.0) - q),
        None => acc,
    };
    Ok(IntegralCheck {
        lhs,
        rhs,
        gap: (lhs - rhs).norm(),
    })
}

/// Re Σ_{|k| <= K} x^ω/ω res(ω) + ζ(0).
pub fn explicit_counting_formula(
    poles: &[PoleData],
    zeta_at_zero: Option<Complex64>,
    x: f64,
    k_max: i64,
) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain("x must be positive".into()));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for p in poles {
        if p.order != 1 {
            return Err(Error::Unsupported("the explicit formula needs simple poles".into()));
        }
        if p.k.abs() > k_max {
            continue;
        }
        if p.location.norm() == 0.0 {
            return Err(Error::PoleAtZero);
        }
        acc += cpow(x, p.location) / p.location * p.residue;
    }
    if let Some(z0) = zeta_at_zero {
        acc += z0;
    }
    if acc.im.abs() > 1e-10 * acc.re.abs().max(1.0) {
        return Err(Error::Numeric(format!("explicit formula is not real: Im = {}", acc.im)));
    }
    Ok(acc.re)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    MeasurableConsistent,
    Oscillatory,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurabilityFit {
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub per_decade: usize,
    /// Largest (max - min)/mean of N(x)/x^D over the last decade still called measurable.
    pub tol: f64,
    /// Known dimension; estimated from the string when absent.
    pub dimension: Option<f64>,
}

impl Default for MeasurabilityFit {
    fn default() -> Self {
        MeasurabilityFit {
            x_min: None,
            x_max: None,
            per_decade: 40,
            tol: 0.05,
            dimension: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurabilityReport {
    pub verdict: Verdict,
    pub dimension: f64,
    pub oscillation: f64,
    /// Fitted c in N(x) ~ c x^D.
    pub c: Option<f64>,
    /// c 2^(1-D) / (1-D).
    pub content: Option<f64>,
    /// Verdict from the poles on Re s = D, when a lattice form exists.
    pub pole_verdict: Option<Verdict>,
}

pub fn measurability_criterion(s: &FractalString, fit_spec: MeasurabilityFit) -> Result<MeasurabilityReport> {
    let d = match fit_spec.dimension {
        Some(d) => d,
        None => s.abscissa_of_convergence()?.value,
    };
    if !(d > 0.0 && d < 1.0) {
        return Err(Error::Scope(format!("the criterion needs D in (0, 1), got {d}")));
    }
    let x0 = fit_spec.x_min.unwrap_or(1.0 / s.scales()[0].l);
    let x1 = fit_spec.x_max.unwrap_or(match s.tail() {
        Some(_) => x0 * 1e8,
        None => 1.0 / s.scales()[s.scales().len() - 1].l,
    });
    let grid = fit::geometric_grid(x0, x1, fit_spec.per_decade.max(4));
    let cut = x1 / 10.0;
    let mut ratios = Vec::new();
    for &x in grid.iter().filter(|&&x| x >= cut * (1.0 - 1e-12)) {
        ratios.push(s.counting_function(x)? as f64 / x.powf(d));
    }
    if ratios.len() < 3 {
        return Err(Error::InsufficientData("grid too coarse for the last decade".into()));
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let oscillation = (hi - lo) / mean;
    let verdict = if oscillation <= fit_spec.tol {
        Verdict::MeasurableConsistent
    } else {
        Verdict::Oscillatory
    };
    let pole_verdict = match s.tail() {
        Some(t) => {
            let form = lattice_closed_form(s)?;
            let lr = (1.0 / t.r).ln();
            let poles = form.poles_in_window(Window {
                sigma_min: d - 1e-9,
                t_max: 3.0 * TWO_PI / lr,
            });
            let line_nonreal = poles
                .iter()
                .any(|p| (p.location.re - d).abs() < 1e-9 && p.location.im.abs() > 1e-12);
            Some(if line_nonreal {
                Verdict::Oscillatory
            } else {
                Verdict::MeasurableConsistent
            })
        }
        None => None,
    };
    if let Some(pv) = pole_verdict {
        if pv != verdict {
            return Err(Error::Numeric(format!(
                "fit verdict {verdict:?} contradicts pole verdict {pv:?} (oscillation {oscillation})"
            )));
        }
    }
    let (c, content) = match verdict {
        Verdict::MeasurableConsistent => (Some(mean), Some(mean * 2f64.powf(1.0 - d) / (1.0 - d))),
        Verdict::Oscillatory => (None, None),
    };
    Ok(MeasurabilityReport {
        verdict,
        dimension: d,
        oscillation,
        c,
        content,
        pole_verdict,
    })
}
