//! Distance and tube zeta functions, the identity linking them, residues,
//! log-periodic Fourier analysis and divergence thresholds.

use std::collections::{BTreeSet, HashMap};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boxcount::PointCloud;
use crate::error::{Error, Result};
use crate::fit;
use crate::quad::GaussRule;
use crate::strings::FractalString;
use crate::tube::{self, ExactTube1d, ProbeSpec, ProbeVerdict, TubeVolume};
use crate::zeta;

fn cpow(a: f64, s: Complex64) -> Complex64 {
    (s * a.ln()).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact1d,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZetaSample {
    pub s: Complex64,
    pub value: Complex64,
    pub method: Method,
    /// 0 exactly for the closed-form 1-D path.
    pub error_estimate: f64,
    pub warning: Option<String>,
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("eps must be positive, got {eps}")))
    }
}

fn below_guard(s: Complex64, guard: Option<f64>) -> Option<String> {
    guard.filter(|&d| s.re <= d + zeta::ABSCISSA_MARGIN).map(|d| {
        format!(
            "Re(s) = {} is not above the dimension estimate {d}; the integral diverges for the limit set",
            s.re
        )
    })
}

/// Σ over gaps of (2/s) min(ℓ/2, ε)^s plus 2ε^s/s for the two outer ends.
pub fn distance_zeta_1d(cloud: &PointCloud, eps: f64, s: Complex64, guard: Option<f64>) -> Result<ZetaSample> {
    check_eps(eps)?;
    let pts = cloud.sorted_1d()?;
    if pts.is_empty() {
        return Err(Error::InsufficientData("empty cloud".into()));
    }
    if s.norm() == 0.0 {
        return Err(Error::PoleAtZero);
    }
    let two_over_s = Complex64::new(2.0, 0.0) / s;
    let mut acc = cpow(eps, s) * two_over_s;
    for w in pts.windows(2) {
        let gap = w[1] - w[0];
        if gap > 0.0 {
            acc += cpow((gap / 2.0).min(eps), s) * two_over_s;
        }
    }
    Ok(ZetaSample {
        s,
        value: acc,
        method: Method::Exact1d,
        error_estimate: 0.0,
        warning: below_guard(s, guard),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloSpec {
    pub samples_per_cell: usize,
    /// Stratum side as a fraction of ε.
    pub cell_fraction: f64,
    pub seed: u64,
}

impl Default for MonteCarloSpec {
    fn default() -> Self {
        MonteCarloSpec {
            samples_per_cell: 64,
            cell_fraction: 0.25,
            seed: 0,
        }
    }
}

/// ∫_{A_ε} d(x, A)^(s-2) dx by stratified sampling over the cells meeting
/// A_ε; each stratum draws from its own ChaCha stream.
pub fn distance_zeta_2d(cloud: &PointCloud, eps: f64, s: Complex64, mc: MonteCarloSpec) -> Result<ZetaSample> {
    check_eps(eps)?;
    if cloud.m() != 2 {
        return Err(Error::InvalidInput("planar distance zeta needs m = 2".into()));
    }
    if cloud.is_empty() {
        return Err(Error::InsufficientData("empty cloud".into()));
    }
    if mc.samples_per_cell < 2 {
        return Err(Error::Domain("need at least two samples per stratum".into()));
    }
    let pts: Vec<[f64; 2]> = cloud.points().map(|p| [p[0], p[1]]).collect();
    let mut index: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in pts.iter().enumerate() {
        index
            .entry(((p[0] / eps).floor() as i64, (p[1] / eps).floor() as i64))
            .or_default()
            .push(i);
    }
    let nearest = |x: [f64; 2]| -> f64 {
        let (cx, cy) = ((x[0] / eps).floor() as i64, (x[1] / eps).floor() as i64);
        let mut best = f64::INFINITY;
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = index.get(&(cx + dx, cy + dy)) {
                    for &i in ids {
                        best = best.min((pts[i][0] - x[0]).hypot(pts[i][1] - x[1]));
                    }
                }
            }
        }
        best
    };
    let h = eps * mc.cell_fraction;
    let reach = ((eps + h) / h).ceil() as i64 + 1;
    let mut cells: BTreeSet<(i64, i64)> = BTreeSet::new();
    for p in &pts {
        let (ci, cj) = ((p[0] / h).floor() as i64, (p[1] / h).floor() as i64);
        for di in -reach..=reach {
            for dj in -reach..=reach {
                let (i, j) = (ci + di, cj + dj);
                let cx = (i as f64 + 0.5) * h - p[0];
                let cy = (j as f64 + 0.5) * h - p[1];
                if cx.hypot(cy) < eps + h * std::f64::consts::FRAC_1_SQRT_2 {
                    cells.insert((i, j));
                }
            }
        }
    }
    let k = mc.samples_per_cell;
    let area = h * h;
    let mut total = Complex64::new(0.0, 0.0);
    let mut var = 0.0;
    for (stream, &(i, j)) in cells.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(mc.seed);
        rng.set_stream(stream as u64);
        let mut sum = Complex64::new(0.0, 0.0);
        let mut sum2 = 0.0;
        for _ in 0..k {
            let x = [(i as f64 + rng.gen::<f64>()) * h, (j as f64 + rng.gen::<f64>()) * h];
            let d = nearest(x);
            if d < eps && d > 0.0 {
                let f = cpow(d, s - 2.0);
                sum += f;
                sum2 += f.norm_sqr();
            }
        }
        let mean = sum / k as f64;
        let sample_var = ((sum2 / k as f64) - mean.norm_sqr()).max(0.0) * k as f64 / (k - 1) as f64;
        total += mean * area;
        var += area * area * sample_var / k as f64;
    }
    Ok(ZetaSample {
        s,
        value: total,
        method: Method::MonteCarlo,
        error_estimate: 3.0 * var.sqrt(),
        warning: None,
    })
}

/// Dispatch on the ambient dimension.
pub fn distance_zeta(cloud: &PointCloud, eps: f64, s: Complex64, guard: Option<f64>, seed: u64) -> Result<ZetaSample> {
    match cloud.m() {
        1 => distance_zeta_1d(cloud, eps, s, guard),
        2 => {
            let mut z = distance_zeta_2d(
                cloud,
                eps,
                s,
                MonteCarloSpec {
                    seed,
                    ..Default::default()
                },
            )?;
            z.warning = below_guard(s, guard);
            Ok(z)
        }
        m => Err(Error::Unsupported(format!("distance zeta in dimension {m}"))),
    }
}

/// ζ_L(z) through the lattice form when one exists, else the Dirichlet series.
pub fn geometric_zeta(st: &FractalString, z: Complex64) -> Result<Complex64> {
    if st.tail().is_some() {
        Ok(zeta::lattice_closed_form(st)?.eval(z))
    } else {
        Ok(zeta::eval_dirichlet(st, z)?.value)
    }
}

/// (2^(1-z)/z) ζ_L(z) + 2ε^z/z, the distance zeta of the endpoint
/// realisation of the string, valid for ε >= ℓ_1/2.
pub fn distance_zeta_string_form(st: &FractalString, eps: f64, z: Complex64) -> Result<Complex64> {
    check_eps(eps)?;
    let l1 = st.scales()[0].l;
    if eps < l1 / 2.0 * (1.0 - 1e-12) {
        return Err(Error::Domain(format!("eps must be at least l_1/2 = {}", l1 / 2.0)));
    }
    if z.norm() == 0.0 {
        return Err(Error::PoleAtZero);
    }
    let zl = geometric_zeta(st, z)?;
    Ok(cpow(2.0, 1.0 - z) / z * zl + cpow(eps, z) * 2.0 / z)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSpec {
    pub order: usize,
    /// Largest panel width in u = log(1/t).
    pub max_width: f64,
    /// Stop once a panel adds less than this fraction of the running value.
    pub tail_rel: f64,
    pub u_cap: f64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            order: 20,
            max_width: 1.0,
            tail_rel: 1e-14,
            u_cap: 700.0,
        }
    }
}

/// ∫_0^ε t^(s-m-1) vol(t) dt with t = e^(-u), composite Gauss–Legendre split
/// at the kinks of vol. Exact small-scale laws and sampled power-law tails
/// are integrated in closed form.
pub fn tube_zeta(tf: &dyn TubeVolume, eps: f64, s: Complex64, q: QuadSpec) -> Result<ZetaSample> {
    check_eps(eps)?;
    let m = tf.m() as f64;
    let hi = GaussRule::new(q.order);
    let lo = GaussRule::new((q.order / 2).max(2));
    let width = q.max_width.min(3.0 / s.im.abs().max(1e-300)).max(1e-3);
    let u0 = -eps.ln();
    let law = tf.small_scale_law();
    let t_floor = tf.domain_min();
    let mut warning = None;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    let integrand = |u: f64| -> Result<(Complex64, f64)> {
        let t = (-u).exp();
        let (v, e) = tf.vol_with_error(t)?;
        let w = (-u * (s - m)).exp();
        Ok((w * v, w.norm() * e))
    };
    let panel = |a: f64, b: f64, acc: &mut Complex64, err: &mut f64| -> Result<Complex64> {
        let mut fail = None;
        let mut verr = 0.0;
        let vh = hi.integrate_c(a, b, |u| match integrand(u) {
            Ok((v, e)) => {
                verr += e;
                v
            }
            Err(x) => {
                fail = Some(x);
                Complex64::new(0.0, 0.0)
            }
        });
        let vl = lo.integrate_c(a, b, |u| integrand(u).map(|x| x.0).unwrap_or_default());
        if let Some(e) = fail {
            return Err(e);
        }
        *acc += vh;
        *err += (vh - vl).norm() + verr * (b - a) / q.order as f64;
        Ok(vh)
    };
    let u_law = law.map(|(t1, _)| if t1.is_finite() { -t1.ln() } else { f64::NEG_INFINITY });
    let u_floor = if t_floor > 0.0 { -t_floor.ln() } else { f64::INFINITY };
    let u_end = u_law.unwrap_or(f64::INFINITY).min(u_floor).max(u0);
    let mut cuts: Vec<f64> = tf
        .breakpoints()
        .into_iter()
        .filter(|&b| b > 0.0)
        .map(|b| -b.ln())
        .filter(|&u| u > u0 && u < u_end)
        .collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    let mut knots = vec![u0];
    knots.extend(cuts);
    if u_end.is_finite() {
        knots.push(u_end);
    }
    for w in knots.windows(2) {
        let n = ((w[1] - w[0]) / width).ceil().max(1.0) as usize;
        let step = (w[1] - w[0]) / n as f64;
        for i in 0..n {
            panel(w[0] + i as f64 * step, w[0] + (i + 1) as f64 * step, &mut acc, &mut err)?;
        }
    }
    if let (Some((t1, c)), true) = (law, u_law.map(|u| u <= u_floor).unwrap_or(false)) {
        if s.re <= 0.0 {
            warning = Some("the small-scale tail diverges for Re(s) <= 0".to_string());
        }
        let top = t1.min(eps);
        acc += cpow(top, s) * c / s;
    } else if u_floor.is_finite() {
        // power-law extrapolation of the first decade of samples
        let us: Vec<f64> = (0..8)
            .map(|i| u_floor - i as f64 * fit::DECADE / 8.0)
            .filter(|&u| u >= u0)
            .collect();
        let vs: Vec<f64> = us
            .iter()
            .map(|&u| Ok(tf.vol((-u).exp())?.max(f64::MIN_POSITIVE).ln()))
            .collect::<Result<_>>()?;
        let xs: Vec<f64> = us.iter().map(|u| -u).collect();
        let p = fit::linreg(&xs, &vs).map(|(p, _)| p).unwrap_or(m);
        let expo = s - m + p;
        if expo.re <= 0.0 {
            warning = Some(format!("extrapolated tail diverges: Re(s) <= {}", m - p));
        } else {
            let vt = tf.vol(t_floor)?;
            let tail = cpow(t_floor, s - m) * vt / expo;
            err += 0.01 * tail.norm();
            acc += tail;
        }
    } else {
        let mut u = *knots.last().unwrap();
        let mut quiet = 0;
        loop {
            let v = panel(u, u + width, &mut acc, &mut err)?;
            u += width;
            if v.norm() <= q.tail_rel * acc.norm() {
                quiet += 1;
                if quiet >= 3 {
                    break;
                }
            } else {
                quiet = 0;
            }
            if u >= q.u_cap {
                warning = Some("tube zeta integrand did not decay; Re(s) is at or below the abscissa".to_string());
                break;
            }
        }
    }
    Ok(ZetaSample {
        s,
        value: acc,
        method: Method::Quadrature,
        error_estimate: err.max(f64::EPSILON * acc.norm()),
        warning,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityReport {
    pub zeta_d: Complex64,
    /// ε^(s-m) |A_ε|
    pub boundary_term: Complex64,
    pub tube_zeta: Complex64,
    pub gap: f64,
    /// Combined error estimate of the two sides.
    pub bound: f64,
}

fn identity_from(zd: &ZetaSample, tf: &dyn TubeVolume, eps: f64, s: Complex64) -> Result<IdentityReport> {
    let m = tf.m() as f64;
    let tz = tube_zeta(tf, eps, s, QuadSpec::default())?;
    let (v, ve) = tf.vol_with_error(eps)?;
    let boundary = cpow(eps, s - m) * v;
    let rhs = boundary + (m - s) * tz.value;
    Ok(IdentityReport {
        zeta_d: zd.value,
        boundary_term: boundary,
        tube_zeta: tz.value,
        gap: (zd.value - rhs).norm(),
        bound: zd.error_estimate + (m - s).norm() * tz.error_estimate + cpow(eps, s - m).norm() * ve,
    })
}

/// |ζ_d(s) - ε^(s-m)|A_ε| - (m-s) ζ̃_A(s)| with ζ_d exact and ζ̃ by quadrature (m = 1),
/// or both sides numerical (m = 2).
pub fn identity_check(cloud: &PointCloud, eps: f64, s: Complex64, seed: u64) -> Result<IdentityReport> {
    match cloud.m() {
        1 => {
            let zd = distance_zeta_1d(cloud, eps, s, None)?;
            identity_from(&zd, &ExactTube1d::from_cloud(cloud)?, eps, s)
        }
        2 => {
            let zd = distance_zeta_2d(
                cloud,
                eps,
                s,
                MonteCarloSpec {
                    seed,
                    ..Default::default()
                },
            )?;
            identity_from(&zd, &tube::RasterTube::new(cloud)?, eps, s)
        }
        m => Err(Error::Unsupported(format!("identity check in dimension {m}"))),
    }
}

/// Residue of the string-form distance zeta at D from the lattice pole:
/// (2^(1-D)/D) res(ζ_L; D).
pub fn residue_closed_form(st: &FractalString) -> Result<f64> {
    let form = zeta::lattice_closed_form(st)?;
    let d = st.exact_dimension().ok_or(Error::NotLattice)?;
    if !(d > 0.0) {
        return Err(Error::Scope("closed-form residue needs D > 0".into()));
    }
    let poles = form.poles_in_window(zeta::Window {
        sigma_min: d - 1e-9,
        t_max: 0.0,
    });
    let p = poles
        .iter()
        .find(|p| p.k == 0 && (p.location.re - d).abs() < 1e-9)
        .ok_or_else(|| Error::Numeric("no real pole at the dimension".into()))?;
    Ok(2f64.powf(1.0 - d) / d * p.residue.re)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidueEstimate {
    pub value: f64,
    /// (δ, δ ζ(D + δ))
    pub sequence: Vec<(f64, f64)>,
    /// Last two diagonal entries of the Richardson table.
    pub diagonal: Vec<f64>,
    /// False when the last two diagonal entries differ by more than 1e-4 relative.
    pub stable: bool,
}

/// Richardson limit of δ f(D + δ) along δ = 0.1 2^-i, i < levels.
pub fn residue_extrapolate(f: &dyn Fn(f64) -> Result<f64>, d: f64, levels: usize) -> Result<ResidueEstimate> {
    if levels < 3 {
        return Err(Error::Domain("need at least three extrapolation levels".into()));
    }
    let mut sequence = Vec::with_capacity(levels);
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(levels);
    for i in 0..levels {
        let delta = 0.1 * 0.5f64.powi(i as i32);
        let a = delta * f(d + delta)?;
        sequence.push((delta, a));
        let mut row = vec![a];
        for j in 1..=i {
            let p = 2f64.powi(j as i32);
            let prev = &table[i - 1];
            row.push(row[j - 1] + (row[j - 1] - prev[j - 1]) / (p - 1.0));
        }
        table.push(row);
    }
    let last = table[levels - 1][levels - 1];
    let prev = table[levels - 2][levels - 2];
    let stable = (last - prev).abs() <= 1e-4 * last.abs().max(1e-300);
    Ok(ResidueEstimate {
        value: last,
        sequence,
        diagonal: vec![prev, last],
        stable,
    })
}

const A_STRING_DIRECT: usize = 1000;

/// ζ_L(s) = Σ_{j>=1} (j(j+1))^(-s) for the string of gaps of {1/j}: direct
/// sum plus an Euler–Maclaurin tail, continued to Re s > -1/2 except s = 1/2.
pub fn a_string_zeta(s: Complex64) -> Complex64 {
    let n = A_STRING_DIRECT;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 1..n {
        let jf = j as f64;
        acc += (-s * (jf * (jf + 1.0)).ln()).exp();
    }
    let nf = n as f64;
    // f(x) = Σ_k c_k x^(-2s-k), c_k = binom(-s, k)
    let kmax = 14;
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for k in 1..kmax {
        let prev = c[k - 1];
        c.push(prev * (-s - (k as f64 - 1.0)) / k as f64);
    }
    let npow = |e: Complex64| (e * nf.ln()).exp();
    let mut integral = Complex64::new(0.0, 0.0);
    for (k, ck) in c.iter().enumerate() {
        integral += ck * npow(1.0 - 2.0 * s - k as f64) / (2.0 * s + k as f64 - 1.0);
    }
    let deriv = |order: usize| -> Complex64 {
        let mut v = Complex64::new(0.0, 0.0);
        for (k, ck) in c.iter().enumerate() {
            let mut ff = Complex64::new(1.0, 0.0);
            let a = -2.0 * s - k as f64;
            for i in 0..order {
                ff *= a - i as f64;
            }
            v += ck * ff * npow(a - order as f64);
        }
        v
    };
    let bern = [(2usize, 1.0 / 6.0), (4, -1.0 / 30.0), (6, 1.0 / 42.0), (8, -1.0 / 30.0)];
    let mut fact = 1.0;
    let mut last = 0usize;
    let mut em = Complex64::new(0.0, 0.0);
    for &(p, b) in &bern {
        for i in last + 1..=p {
            fact *= i as f64;
        }
        last = p;
        em -= deriv(p - 1) * (b / fact);
    }
    acc + integral + deriv(0) * 0.5 + em
}

/// Distance zeta of {0} ∪ {1/j : j >= 1} for ε >= 1/4.
pub fn a_string_distance_zeta(eps: f64, s: Complex64) -> Result<Complex64> {
    check_eps(eps)?;
    if eps < 0.25 * (1.0 - 1e-12) {
        return Err(Error::Domain("eps must be at least 1/4".into()));
    }
    if s.norm() == 0.0 {
        return Err(Error::PoleAtZero);
    }
    Ok(cpow(2.0, 1.0 - s) / s * a_string_zeta(s) + cpow(eps, s) * 2.0 / s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogPeriodicReport {
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "T")]
    pub period: f64,
    /// (k, Ĝ_0(k/T))
    pub fourier: Vec<(i64, Complex64)>,
    /// (k, Ĝ_0(k/T)/T), the tube zeta residues at D + 2πik/T.
    pub residues: Vec<(i64, Complex64)>,
    pub average_content: f64,
    pub g_min: f64,
    pub g_max: f64,
    pub periods_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum LogPeriodicOutcome {
    LogPeriodic(LogPeriodicReport),
    /// No significant oscillation: measurable-consistent.
    NoPeriod {
        content: f64,
    },
}

/// Fourier coefficients of G over whole periods, averaged across the periods in range.
pub fn log_periodic_analysis(
    tf: &dyn TubeVolume,
    d: f64,
    k_max: usize,
    spec: &ProbeSpec,
) -> Result<LogPeriodicOutcome> {
    let probe = tube::measurability_probe(tf, d, spec)?;
    let (period, g_min, g_max) = match probe.verdict {
        ProbeVerdict::MeasurableConsistent { content } => return Ok(LogPeriodicOutcome::NoPeriod { content }),
        ProbeVerdict::LogPeriodic { period, g_min, g_max } => (period, g_min, g_max),
    };
    let span = spec.tau_max - spec.tau_min;
    if span < 5.0 * period * (1.0 - 1e-9) {
        return Err(Error::InsufficientData(format!(
            "samples span {:.3} periods; at least 5 are needed",
            span / period
        )));
    }
    let windows = (span / period).floor() as usize;
    let m = tf.m() as f64;
    let nodes = 1024;
    let h = period / nodes as f64;
    let mut coef = vec![Complex64::new(0.0, 0.0); k_max + 1];
    for w in 0..windows {
        let a = spec.tau_min + w as f64 * period;
        // periodic trapezoid: endpoints merged
        for i in 0..nodes {
            let tau = a + i as f64 * h;
            let g = tf.vol((-tau).exp())? * (tau * (m - d)).exp();
            for (k, ck) in coef.iter_mut().enumerate() {
                let ph = -2.0 * std::f64::consts::PI * k as f64 * tau / period;
                *ck += Complex64::from_polar(g * h, ph);
            }
        }
    }
    for ck in coef.iter_mut() {
        *ck /= windows as f64;
    }
    let mut fourier = Vec::with_capacity(2 * k_max + 1);
    for k in (1..=k_max).rev() {
        fourier.push((-(k as i64), coef[k].conj()));
    }
    for (k, ck) in coef.iter().enumerate() {
        fourier.push((k as i64, *ck));
    }
    let residues = fourier.iter().map(|&(k, g)| (k, g / period)).collect();
    Ok(LogPeriodicOutcome::LogPeriodic(LogPeriodicReport {
        d,
        period,
        fourier,
        residues,
        average_content: coef[0].re / period,
        g_min,
        g_max,
        periods_used: windows,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub per_decade: usize,
    /// Gauss–Legendre nodes per band.
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub threshold: f64,
    pub bands: usize,
    /// Regression slope of log J_k against log(1/t_k) at s = 0.
    pub slope_at_zero: f64,
}

/// Real s at which the band integrals J_k(s) = ∫ t^(s-m-1) vol(t) dt over
/// geometric bands in [t_min, min(ε, t_max)] stop decaying towards t = 0,
/// i.e. the abscissa of convergence of the tube zeta integral (and, through
/// the identity, of the distance zeta).
pub fn divergence_threshold(tf: &dyn TubeVolume, eps: f64, band: BandSpec) -> Result<DivergenceReport> {
    check_eps(eps)?;
    let top = eps.min(band.t_max);
    if !(band.t_min > 0.0) || top / band.t_min < 10.0 * (1.0 - 1e-9) {
        return Err(Error::InsufficientData("bands must span at least one decade".into()));
    }
    let m = tf.m() as f64;
    let edges: Vec<f64> = fit::geometric_grid(band.t_min, top, band.per_decade.max(2))
        .into_iter()
        .map(|t| -t.ln())
        .rev()
        .collect();
    let rule = GaussRule::new(band.nodes.max(2));
    // cached (u, weight * vol) per band
    let mut nodes: Vec<Vec<(f64, f64)>> = Vec::new();
    for w in edges.windows(2) {
        let band_nodes = rule
            .mapped(w[0], w[1])
            .map(|(u, wt)| Ok((u, wt * tf.vol((-u).exp())?)))
            .collect::<Result<Vec<_>>>()?;
        nodes.push(band_nodes);
    }
    let xs: Vec<f64> = edges[..edges.len() - 1].to_vec();
    let slope = |s: f64| -> f64 {
        let ys: Vec<f64> = nodes
            .iter()
            .map(|b| {
                b.iter()
                    .map(|&(u, wv)| wv * (-u * (s - m)).exp())
                    .sum::<f64>()
                    .max(f64::MIN_POSITIVE)
                    .ln()
            })
            .collect();
        fit::linreg(&xs, &ys).map(|(a, _)| a).unwrap_or(0.0)
    };
    let (mut a, mut b) = (0.0, m + 1.0);
    let sa = slope(a);
    if sa <= 0.0 {
        return Ok(DivergenceReport {
            threshold: 0.0,
            bands: nodes.len(),
            slope_at_zero: sa,
        });
    }
    for _ in 0..80 {
        let c = 0.5 * (a + b);
        if slope(c) > 0.0 {
            a = c;
        } else {
            b = c;
        }
    }
    Ok(DivergenceReport {
        threshold: 0.5 * (a + b),
        bands: nodes.len(),
        slope_at_zero: sa,
    })
}
