//! ε-neighbourhood volumes, inner tube volumes of fractal strings and
//! Minkowski content estimates.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boxcount::PointCloud;
use crate::error::{Error, Result};
use crate::fit;
use crate::strings::FractalString;

/// Cells visited by a single raster before a resource error is raised.
pub const RASTER_CELL_BUDGET: f64 = 2e8;
/// Raster pitch as a fraction of ε.
pub const RASTER_PITCH: f64 = 1.0 / 50.0;

/// Anything that can report vol_m(A_ε).
pub trait TubeVolume {
    fn m(&self) -> usize;
    fn vol(&self, eps: f64) -> Result<f64>;
    fn exact(&self) -> bool;
    /// ε values where vol is not smooth (panel splits for quadrature).
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
    /// `(t1, c)` with vol(t) = c t^m exactly for t <= t1.
    fn small_scale_law(&self) -> Option<(f64, f64)> {
        None
    }
    /// Smallest ε at which `vol` is defined.
    fn domain_min(&self) -> f64 {
        0.0
    }
    /// Volume and an absolute error bound.
    fn vol_with_error(&self, eps: f64) -> Result<(f64, f64)> {
        Ok((self.vol(eps)?, 0.0))
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("eps must be positive, got {eps}")))
    }
}

/// Exact tube of a finite subset of the line: 2ε + Σ min(gap, 2ε).
#[derive(Debug, Clone, PartialEq)]
pub struct ExactTube1d {
    gaps: Vec<f64>,
    prefix: Vec<f64>,
}

impl ExactTube1d {
    pub fn new(sorted: &[f64]) -> Result<Self> {
        if sorted.is_empty() {
            return Err(Error::InsufficientData("empty cloud".into()));
        }
        let mut gaps: Vec<f64> = sorted.windows(2).map(|w| w[1] - w[0]).filter(|&g| g > 0.0).collect();
        gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut prefix = Vec::with_capacity(gaps.len() + 1);
        prefix.push(0.0);
        for g in &gaps {
            prefix.push(prefix.last().unwrap() + g);
        }
        Ok(ExactTube1d { gaps, prefix })
    }

    pub fn from_cloud(cloud: &PointCloud) -> Result<Self> {
        Self::new(&cloud.sorted_1d()?)
    }

    /// Positive gaps in increasing order.
    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }
}

impl TubeVolume for ExactTube1d {
    fn m(&self) -> usize {
        1
    }

    fn vol(&self, eps: f64) -> Result<f64> {
        check_eps(eps)?;
        let k = self.gaps.partition_point(|&g| g < 2.0 * eps);
        Ok(2.0 * eps + self.prefix[k] + (self.gaps.len() - k) as f64 * 2.0 * eps)
    }

    fn exact(&self) -> bool {
        true
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.gaps.iter().map(|g| g / 2.0).collect();
        b.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs());
        b
    }

    fn small_scale_law(&self) -> Option<(f64, f64)> {
        let t1 = self.gaps.first().map(|g| g / 2.0).unwrap_or(f64::INFINITY);
        Some((t1, 2.0 * (self.gaps.len() + 1) as f64))
    }
}

/// Tube volume given by a closed-form function of ε.
pub struct FnTube<F: Fn(f64) -> f64> {
    pub m: usize,
    pub f: F,
}

impl<F: Fn(f64) -> f64> TubeVolume for FnTube<F> {
    fn m(&self) -> usize {
        self.m
    }
    fn vol(&self, eps: f64) -> Result<f64> {
        check_eps(eps)?;
        Ok((self.f)(eps))
    }
    fn exact(&self) -> bool {
        true
    }
}

/// Raster result with a two-sided error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RasterVolume {
    pub vol: f64,
    pub error: f64,
    pub pitch: f64,
}

/// Planar tube by rasterising: cells of pitch h whose centre lies within ε
/// of the cloud. The error is the area of cells whose classification could
/// change under a centre shift of h/√2, which brackets the true area.
pub fn tube_volume_2d(cloud: &PointCloud, eps: f64, pitch: Option<f64>) -> Result<RasterVolume> {
    raster_2d(cloud, eps, pitch, true)
}

/// Raster volume only, skipping the two passes that bound the error.
pub fn tube_volume_2d_unbounded(cloud: &PointCloud, eps: f64, pitch: Option<f64>) -> Result<f64> {
    Ok(raster_2d(cloud, eps, pitch, false)?.vol)
}

fn raster_2d(cloud: &PointCloud, eps: f64, pitch: Option<f64>, bounds: bool) -> Result<RasterVolume> {
    check_eps(eps)?;
    if cloud.m() != 2 {
        return Err(Error::InvalidInput("planar raster needs m = 2".into()));
    }
    if cloud.is_empty() {
        return Err(Error::InsufficientData("empty cloud".into()));
    }
    let h = pitch.unwrap_or(eps * RASTER_PITCH);
    if !(h > 0.0) {
        return Err(Error::Domain("raster pitch must be positive".into()));
    }
    let slack = if bounds {
        h * std::f64::consts::FRAC_1_SQRT_2
    } else {
        0.0
    };
    let outer = eps + slack;
    let inner = (eps - slack).max(0.0);
    let rows_per_point = 2.0 * outer / h + 1.0;
    let cols_per_row = 2.0 * outer / h + 1.0;
    let work = cloud.len() as f64 * rows_per_point * cols_per_row.log2().max(1.0);
    if cloud.len() as f64 * rows_per_point * cols_per_row > RASTER_CELL_BUDGET * 50.0 || work > RASTER_CELL_BUDGET {
        return Err(Error::Resource {
            requested: cloud.len() as f64 * rows_per_point * cols_per_row,
            budget: RASTER_CELL_BUDGET as usize,
            suggested_depth: 0,
        });
    }
    let (lo, _) = cloud.bounding_box();
    let x0 = lo[0] - outer - h;
    let y0 = lo[1] - outer - h;
    let mut pts: Vec<(f64, f64)> = cloud.points().map(|p| (p[0], p[1])).collect();
    pts.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.partial_cmp(&b.0).unwrap()));
    let row_of = |y: f64| ((y - y0) / h - 0.5).floor() as i64;
    let (mut n_mid, mut n_out, mut n_in) = (0u64, 0u64, 0u64);
    let mut start = 0usize;
    let mut row = row_of(pts[0].1 - outer);
    let last_row = row_of(pts[pts.len() - 1].1 + outer) + 1;
    let mut iv_mid: Vec<(i64, i64)> = Vec::new();
    let mut iv_out: Vec<(i64, i64)> = Vec::new();
    let mut iv_in: Vec<(i64, i64)> = Vec::new();
    while row <= last_row {
        let yc = y0 + (row as f64 + 0.5) * h;
        while start < pts.len() && pts[start].1 < yc - outer {
            start += 1;
        }
        if start == pts.len() {
            break;
        }
        if pts[start].1 > yc + outer {
            row = row_of(pts[start].1 - outer).max(row + 1);
            continue;
        }
        iv_mid.clear();
        iv_out.clear();
        iv_in.clear();
        let mut i = start;
        while i < pts.len() && pts[i].1 <= yc + outer {
            let (px, py) = pts[i];
            let dy = (py - yc).abs();
            let passes = if bounds { 3 } else { 1 };
            for pass in 0..passes {
                let (rad, store) = match pass {
                    0 => (eps, &mut iv_mid),
                    1 => (outer, &mut iv_out),
                    _ => (inner, &mut iv_in),
                };
                if dy < rad {
                    let w = (rad * rad - dy * dy).sqrt();
                    // columns with |x_c - px| < w, x_c = x0 + (j + 0.5) h
                    let a = ((px - w - x0) / h - 0.5).floor() as i64 + 1;
                    let b = ((px + w - x0) / h - 0.5).ceil() as i64 - 1;
                    if a <= b {
                        store.push((a, b));
                    }
                }
            }
            i += 1;
        }
        n_mid += union_len(&mut iv_mid);
        n_out += union_len(&mut iv_out);
        n_in += union_len(&mut iv_in);
        row += 1;
    }
    let area = h * h;
    Ok(RasterVolume {
        vol: n_mid as f64 * area,
        error: if bounds { (n_out - n_in) as f64 * area } else { f64::NAN },
        pitch: h,
    })
}

fn union_len(iv: &mut [(i64, i64)]) -> u64 {
    if iv.is_empty() {
        return 0;
    }
    iv.sort_unstable();
    let mut total = 0u64;
    let (mut a, mut b) = iv[0];
    for &(c, d) in iv.iter().skip(1) {
        if c > b + 1 {
            total += (b - a + 1) as u64;
            a = c;
            b = d;
        } else if d > b {
            b = d;
        }
    }
    total + (b - a + 1) as u64
}

/// Tube volume of a point cloud: exact for m = 1, rastered for m = 2.
pub fn tube_volume(cloud: &PointCloud, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    match cloud.m() {
        1 => ExactTube1d::from_cloud(cloud)?.vol(eps),
        2 => Ok(tube_volume_2d(cloud, eps, None)?.vol),
        m => Err(Error::Unsupported(format!("tube volumes in dimension {m}"))),
    }
}

/// Rastered planar tube as a [`TubeVolume`]. Below half the minimal point
/// separation the tube is a union of disjoint disks and is used exactly.
pub struct RasterTube<'a> {
    cloud: &'a PointCloud,
    distinct: usize,
    half_sep: f64,
    fraction: f64,
}

impl<'a> RasterTube<'a> {
    pub fn new(cloud: &'a PointCloud) -> Result<Self> {
        Self::with_pitch_fraction(cloud, RASTER_PITCH)
    }

    /// Raster pitch `fraction * ε` instead of the default.
    pub fn with_pitch_fraction(cloud: &'a PointCloud, fraction: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::Domain("pitch fraction must lie in (0, 1]".into()));
        }
        if cloud.m() != 2 {
            return Err(Error::InvalidInput("planar raster needs m = 2".into()));
        }
        let mut pts: Vec<(f64, f64)> = cloud.points().map(|p| (p[0], p[1])).collect();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        let mut best = f64::INFINITY;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let dx = pts[j].0 - pts[i].0;
                if dx >= best {
                    break;
                }
                best = best.min(dx.hypot(pts[j].1 - pts[i].1));
            }
        }
        Ok(RasterTube {
            cloud,
            distinct: pts.len(),
            half_sep: best / 2.0,
            fraction,
        })
    }
}

impl TubeVolume for RasterTube<'_> {
    fn m(&self) -> usize {
        2
    }
    fn vol(&self, eps: f64) -> Result<f64> {
        check_eps(eps)?;
        if eps <= self.half_sep {
            return Ok(std::f64::consts::PI * self.distinct as f64 * eps * eps);
        }
        tube_volume_2d_unbounded(self.cloud, eps, Some(eps * self.fraction))
    }
    fn exact(&self) -> bool {
        false
    }
    fn small_scale_law(&self) -> Option<(f64, f64)> {
        Some((self.half_sep, std::f64::consts::PI * self.distinct as f64))
    }
    fn vol_with_error(&self, eps: f64) -> Result<(f64, f64)> {
        check_eps(eps)?;
        if eps <= self.half_sep {
            return Ok((std::f64::consts::PI * self.distinct as f64 * eps * eps, 0.0));
        }
        let r = tube_volume_2d(self.cloud, eps, Some(eps * self.fraction))?;
        Ok((r.vol, r.error))
    }
}

/// Sampled ε ↦ vol with log-log interpolation between samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeFunction {
    pub samples: Vec<(f64, f64)>,
    pub exact: bool,
    pub m: usize,
}

#[derive(Serialize, Deserialize)]
struct TubeRow {
    eps: f64,
    vol: f64,
}

impl TubeFunction {
    pub fn new(samples: Vec<(f64, f64)>, exact: bool, m: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InsufficientData("no tube samples".into()));
        }
        for w in samples.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidInput("eps must be strictly increasing".into()));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::InvalidInput("tube volume must be nondecreasing".into()));
            }
        }
        if samples
            .iter()
            .any(|&(e, v)| !(e > 0.0) || !(v >= 0.0) || !v.is_finite())
        {
            return Err(Error::InvalidInput("eps must be positive and vol nonnegative".into()));
        }
        Ok(TubeFunction { samples, exact, m })
    }

    /// Samples `src` on `grid` (ascending).
    pub fn sample(src: &dyn TubeVolume, grid: &[f64]) -> Result<Self> {
        let samples = grid.iter().map(|&e| Ok((e, src.vol(e)?))).collect::<Result<Vec<_>>>()?;
        Self::new(samples, src.exact(), src.m())
    }

    pub fn read_csv<R: Read>(reader: R, m: usize) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut samples = Vec::new();
        for row in rdr.deserialize::<TubeRow>() {
            let row = row?;
            samples.push((row.eps, row.vol));
        }
        Self::new(samples, false, m)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["eps", "vol"])?;
        for &(e, v) in &self.samples {
            w.write_record([format!("{e:?}"), format!("{v:?}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

impl TubeVolume for TubeFunction {
    fn m(&self) -> usize {
        self.m
    }

    fn vol(&self, eps: f64) -> Result<f64> {
        check_eps(eps)?;
        let s = &self.samples;
        let (e0, e1) = (s[0].0, s[s.len() - 1].0);
        if eps < e0 * (1.0 - 1e-12) || eps > e1 * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "eps {eps} outside the sampled range [{e0}, {e1}]"
            )));
        }
        let j = s.partition_point(|&(e, _)| e < eps);
        if j == 0 {
            return Ok(s[0].1);
        }
        if j == s.len() {
            return Ok(s[s.len() - 1].1);
        }
        let (a, va) = s[j - 1];
        let (b, vb) = s[j];
        if va <= 0.0 || vb <= 0.0 {
            return Ok(va + (vb - va) * (eps - a) / (b - a));
        }
        let t = (eps / a).ln() / (b / a).ln();
        Ok((va.ln() + t * (vb / va).ln()).exp())
    }

    fn exact(&self) -> bool {
        self.exact
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.0).collect()
    }

    fn domain_min(&self) -> f64 {
        self.samples[0].0
    }
}

/// vol_1{x in Ω : d(x, ∂Ω) < ε} = Σ_j min(ℓ_j, 2ε), tails summed in closed form.
pub fn inner_tube_volume(s: &FractalString, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let two = 2.0 * eps;
    let head: f64 = s.scales().iter().map(|sc| sc.m as f64 * sc.l.min(two)).sum();
    let Some(t) = s.tail() else {
        return Ok(head);
    };
    let g = t.g as f64;
    let gr = g * t.r;
    if gr >= 1.0 {
        return Err(Error::NotOrdinary);
    }
    let block = &s.scales()[s.scales().len() - t.period..];
    let mut acc = head;
    for e in block {
        let me = e.m as f64;
        // first k >= 1 with l r^k <= 2ε
        let mut k0 = 1i32;
        if e.l * t.r > two {
            k0 = ((e.l / two).ln() / (1.0 / t.r).ln()).ceil() as i32;
            while e.l * t.r.powi(k0) > two {
                k0 += 1;
            }
            while k0 > 1 && e.l * t.r.powi(k0 - 1) <= two {
                k0 -= 1;
            }
        }
        let saturated = if t.g == 1 {
            (k0 - 1) as f64
        } else {
            (g.powi(k0) - g) / (g - 1.0)
        };
        acc += two * me * saturated + me * e.l * gr.powi(k0) / (1.0 - gr);
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinkowskiEstimate {
    pub upper_content: f64,
    pub lower_content: f64,
    pub dim_upper: f64,
    pub dim_lower: f64,
}

/// Contents are max/min of vol/ε^(m-r) over the smallest decade of the grid;
/// dimensions come from one-decade windowed regressions of log vol on log ε.
pub fn minkowski_estimate(tf: &dyn TubeVolume, r: f64, grid: &[f64]) -> Result<MinkowskiEstimate> {
    let m = tf.m() as f64;
    if !(r >= 0.0 && r <= m) {
        return Err(Error::Domain(format!("r must lie in [0, {m}]")));
    }
    let mut g: Vec<f64> = grid.to_vec();
    g.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if g.len() < 6 || g[g.len() - 1] / g[0] < 100.0 * (1.0 - 1e-9) {
        return Err(Error::InsufficientData(
            "the eps grid must span at least two decades".into(),
        ));
    }
    let vols: Vec<f64> = g.iter().map(|&e| tf.vol(e)).collect::<Result<_>>()?;
    let cut = g[0] * 10.0 * (1.0 + 1e-12);
    let ratios: Vec<f64> = g
        .iter()
        .zip(&vols)
        .filter(|(e, _)| **e <= cut)
        .map(|(e, v)| v / e.powf(m - r))
        .collect();
    let upper_content = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lower_content = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    // u = log(1/ε) ascending, v = log vol; local dimension is m + slope
    let mut us: Vec<f64> = g.iter().map(|e| -e.ln()).collect();
    let mut vs: Vec<f64> = vols.iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).collect();
    us.reverse();
    vs.reverse();
    let (hi, lo) = fit::limsup_liminf_slopes(&us, &vs, fit::DECADE)
        .ok_or_else(|| Error::InsufficientData("too few grid points for a regression".into()))?;
    Ok(MinkowskiEstimate {
        upper_content,
        lower_content,
        dim_upper: (m + hi).clamp(0.0, m),
        dim_lower: (m + lo).clamp(0.0, m),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSpec {
    /// Range of τ = log(1/ε).
    pub tau_min: f64,
    pub tau_max: f64,
    pub points: usize,
    /// Largest relative oscillation (max - min)/mean still called measurable.
    pub tol: f64,
}

impl ProbeSpec {
    pub fn for_eps(eps_min: f64, eps_max: f64) -> Self {
        ProbeSpec {
            tau_min: -eps_max.ln(),
            tau_max: -eps_min.ln(),
            points: 4096,
            tol: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum ProbeVerdict {
    MeasurableConsistent { content: f64 },
    LogPeriodic { period: f64, g_min: f64, g_max: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub verdict: ProbeVerdict,
    pub oscillation: f64,
    pub mean: f64,
    /// (frequency in 1/τ, Hann-windowed amplitude) on the coarse scan.
    pub spectrum: Vec<(f64, f64)>,
}

/// g(τ) = vol(e^-τ) e^(τ(m-D)) on a uniform τ grid.
pub fn g_samples(tf: &dyn TubeVolume, d: f64, spec: &ProbeSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(spec.tau_max > spec.tau_min) || spec.points < 16 {
        return Err(Error::InsufficientData("probe grid too short".into()));
    }
    let m = tf.m() as f64;
    let n = spec.points;
    let dt = (spec.tau_max - spec.tau_min) / (n - 1) as f64;
    let taus: Vec<f64> = (0..n).map(|i| spec.tau_min + i as f64 * dt).collect();
    let gs = taus
        .iter()
        .map(|&t| Ok(tf.vol((-t).exp())? * (t * (m - d)).exp()))
        .collect::<Result<Vec<_>>>()?;
    Ok((taus, gs))
}

fn hann_amplitude(taus: &[f64], dev: &[f64], f: f64) -> f64 {
    let n = taus.len();
    let t0 = taus[0];
    let span = taus[n - 1] - t0;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut wsum = 0.0;
    for (t, v) in taus.iter().zip(dev) {
        let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * (t - t0) / span).cos();
        acc += Complex64::from_polar(w * v, -2.0 * std::f64::consts::PI * f * t);
        wsum += w;
    }
    2.0 * acc.norm() / wsum
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Dominant period of g: Hann-windowed spectral peak (preferring a strong
/// subharmonic), then refined by minimising the mean square of g(τ+T) - g(τ).
pub fn dominant_period(taus: &[f64], gs: &[f64]) -> Result<(f64, Vec<(f64, f64)>)> {
    let n = taus.len();
    let span = taus[n - 1] - taus[0];
    let dt = span / (n - 1) as f64;
    let mean = gs.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = gs.iter().map(|g| g - mean).collect();
    let f_lo = 2.0 / span;
    let f_hi = (0.25 / dt).min(64.0 / span * 8.0);
    if f_hi <= f_lo {
        return Err(Error::InsufficientData(
            "probe grid too short to resolve one period".into(),
        ));
    }
    let steps = 400;
    let mut spectrum = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        let f = f_lo + (f_hi - f_lo) * i as f64 / steps as f64;
        spectrum.push((f, hann_amplitude(taus, &dev, f)));
    }
    let (i_best, &(_, a_best)) = spectrum
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
        .unwrap();
    let df = (f_hi - f_lo) / steps as f64;
    let refine = |f0: f64| {
        golden_max(
            |f| hann_amplitude(taus, &dev, f),
            (f0 - df).max(f_lo * 0.5),
            f0 + df,
            60,
        )
    };
    let mut f_star = refine(spectrum[i_best].0);
    for k in [4.0, 3.0, 2.0] {
        let fs = f_star / k;
        if fs >= f_lo && hann_amplitude(taus, &dev, refine(fs)) >= 0.3 * a_best {
            f_star = refine(fs);
            break;
        }
    }
    let t_guess = 1.0 / f_star;
    if span < 2.0 * t_guess {
        return Err(Error::InsufficientData(
            "probe grid too short to resolve one period".into(),
        ));
    }
    let mismatch = |t: f64| {
        let shift = t / dt;
        let mut acc = 0.0;
        let mut cnt = 0usize;
        for i in 0..n {
            let x = i as f64 + shift;
            let j = x.floor() as usize;
            if j + 1 >= n {
                break;
            }
            let fr = x - j as f64;
            let v = gs[j] * (1.0 - fr) + gs[j + 1] * fr;
            acc += (v - gs[i]).powi(2);
            cnt += 1;
        }
        -(acc / cnt.max(1) as f64)
    };
    let t = golden_max(mismatch, 0.8 * t_guess, 1.2 * t_guess, 80);
    Ok((t, spectrum))
}

pub fn measurability_probe(tf: &dyn TubeVolume, d: f64, spec: &ProbeSpec) -> Result<ProbeReport> {
    let (taus, gs) = g_samples(tf, d, spec)?;
    let mean = gs.iter().sum::<f64>() / gs.len() as f64;
    let hi = gs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = gs.iter().cloned().fold(f64::INFINITY, f64::min);
    let oscillation = (hi - lo) / mean;
    if oscillation <= spec.tol {
        return Ok(ProbeReport {
            verdict: ProbeVerdict::MeasurableConsistent { content: mean },
            oscillation,
            mean,
            spectrum: Vec::new(),
        });
    }
    let (period, spectrum) = dominant_period(&taus, &gs)?;
    Ok(ProbeReport {
        verdict: ProbeVerdict::LogPeriodic {
            period,
            g_min: lo,
            g_max: hi,
        },
        oscillation,
        mean,
        spectrum,
    })
}
