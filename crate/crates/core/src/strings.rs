//! Fractal strings stored as (scale, multiplicity) pairs with an optional
//! exact geometric tail.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit;

/// Relative slack used when deciding whether `l >= 1/x` at a jump point.
pub const BOUNDARY_REL: f64 = 1e-12;
/// Relative tolerance for the tail recurrence on stored scales.
pub const TAIL_REL: f64 = 1e-9;
/// Slope threshold separating a bounded running supremum from a growing one.
pub const GROWTH_SLOPE_TOL: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scale {
    pub l: f64,
    pub m: u64,
}

fn one() -> usize {
    1
}

fn is_one(p: &usize) -> bool {
    *p == 1
}

/// For n >= onset (1-based): l[n + period] = r * l[n] and m[n + period] = g * m[n].
/// The stored scales must contain at least one full block starting at `onset`;
/// the tail continues by repeating the last `period` stored scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricTail {
    pub r: f64,
    pub g: u64,
    pub onset: usize,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub period: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawString", into = "RawString")]
pub struct FractalString {
    scales: Vec<Scale>,
    tail: Option<GeometricTail>,
}

#[derive(Serialize, Deserialize)]
struct RawString {
    scales: Vec<Scale>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tail: Option<GeometricTail>,
}

impl TryFrom<RawString> for FractalString {
    type Error = Error;
    fn try_from(raw: RawString) -> Result<Self> {
        FractalString::new(raw.scales, raw.tail)
    }
}

impl From<FractalString> for RawString {
    fn from(s: FractalString) -> Self {
        RawString {
            scales: s.scales,
            tail: s.tail,
        }
    }
}

/// One level of the expanded string; multiplicities are carried as `f64`
/// because tail growth overflows integers long before the scales underflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub l: f64,
    pub m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderEstimate {
    pub value: f64,
    /// Closed form from the geometric tail.
    pub exact: bool,
    /// Estimated from a finite, tail-less string.
    pub truncated: bool,
    pub windows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub per_decade: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            x_min: None,
            x_max: None,
            per_decade: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthReport {
    pub alpha: f64,
    pub sup_counting: f64,
    pub sup_lengths: f64,
    pub counting_bounded: bool,
    pub lengths_bounded: bool,
    pub levels_used: usize,
}

impl FractalString {
    pub fn new(scales: Vec<Scale>, tail: Option<GeometricTail>) -> Result<Self> {
        if scales.is_empty() {
            return Err(Error::InvalidInput("a fractal string needs at least one scale".into()));
        }
        for (i, s) in scales.iter().enumerate() {
            if !(s.l.is_finite() && s.l > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "scale {} is not a positive finite length",
                    i + 1
                )));
            }
            if s.m == 0 {
                return Err(Error::InvalidInput(format!("scale {} has multiplicity 0", i + 1)));
            }
            if i > 0 && s.l >= scales[i - 1].l {
                return Err(Error::InvalidInput(format!(
                    "scales must strictly decrease (index {})",
                    i + 1
                )));
            }
        }
        if let Some(t) = tail {
            if !(t.r > 0.0 && t.r < 1.0) {
                return Err(Error::InvalidInput("tail ratio must lie in (0, 1)".into()));
            }
            if t.g == 0 || t.period == 0 || t.onset == 0 {
                return Err(Error::InvalidInput("tail needs g >= 1, period >= 1, onset >= 1".into()));
            }
            let len = scales.len();
            if t.onset + t.period - 1 > len {
                return Err(Error::InvalidInput(format!(
                    "tail onset {} with period {} needs {} stored scales, found {}",
                    t.onset,
                    t.period,
                    t.onset + t.period - 1,
                    len
                )));
            }
            for n in t.onset..=len.saturating_sub(t.period) {
                if n < t.onset || n + t.period > len {
                    continue;
                }
                let a = scales[n - 1];
                let b = scales[n + t.period - 1];
                if ((b.l - t.r * a.l) / b.l).abs() > TAIL_REL || b.m != t.g * a.m {
                    return Err(Error::InvalidInput(format!(
                        "stored scale {} does not follow the tail recurrence",
                        n + t.period
                    )));
                }
            }
            if t.r * scales[len - t.period].l >= scales[len - 1].l {
                return Err(Error::InvalidInput("tail continuation would not be decreasing".into()));
            }
        }
        Ok(FractalString { scales, tail })
    }

    /// Groups a nonincreasing list of lengths into distinct scales.
    pub fn from_lengths(lengths: &[f64]) -> Result<Self> {
        let mut scales: Vec<Scale> = Vec::new();
        for &l in lengths {
            match scales.last_mut() {
                Some(last) if last.l == l => last.m += 1,
                Some(last) if l > last.l => return Err(Error::InvalidInput("lengths must be nonincreasing".into())),
                _ => scales.push(Scale { l, m: 1 }),
            }
        }
        FractalString::new(scales, None)
    }

    pub fn scales(&self) -> &[Scale] {
        &self.scales
    }

    pub fn tail(&self) -> Option<&GeometricTail> {
        self.tail.as_ref()
    }

    fn block(&self) -> &[Scale] {
        match self.tail {
            Some(t) => &self.scales[self.scales.len() - t.period..],
            None => &[],
        }
    }

    /// All levels in decreasing order of scale; infinite when a tail is present.
    pub fn levels(&self) -> Box<dyn Iterator<Item = Level> + '_> {
        let head = self.scales.iter().map(|s| Level { l: s.l, m: s.m as f64 });
        match self.tail {
            None => Box::new(head),
            Some(t) => {
                let block = self.block();
                let tail = (1..).flat_map(move |k: i32| {
                    block.iter().map(move |s| Level {
                        l: s.l * t.r.powi(k),
                        m: s.m as f64 * (t.g as f64).powi(k),
                    })
                });
                Box::new(head.chain(tail.take_while(|lv| lv.l > 0.0)))
            }
        }
    }

    /// N(x) = sum of multiplicities over scales with l >= 1/x.
    pub fn counting_function(&self, x: f64) -> Result<u64> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::Domain(format!("counting function needs x > 0, got {x}")));
        }
        let mut total: u128 = 0;
        for s in &self.scales {
            if reaches(s.l, x) {
                total = total.saturating_add(s.m as u128);
            } else {
                return Ok(saturate(total));
            }
        }
        if let Some(t) = self.tail {
            for s in self.block() {
                let k = tail_levels_reached(s.l, t.r, x);
                total = total.saturating_add((s.m as u128).saturating_mul(geometric_sum(t.g, k)));
            }
        }
        Ok(saturate(total))
    }

    /// Exact abscissa log g / log(1/r) when a tail exists.
    pub fn exact_dimension(&self) -> Option<f64> {
        self.tail.map(|t| (t.g as f64).ln() / (1.0 / t.r).ln())
    }

    pub fn order_of_counting_function(&self, grid: GridSpec) -> Result<OrderEstimate> {
        self.order_of_counting_function_windowed(grid, fit::DECADE)
    }

    /// As [`FractalString::order_of_counting_function`] with regression windows of log-width `width`.
    pub fn order_of_counting_function_windowed(&self, grid: GridSpec, width: f64) -> Result<OrderEstimate> {
        if let Some(d) = self.exact_dimension() {
            return Ok(OrderEstimate {
                value: d,
                exact: true,
                truncated: false,
                windows: 0,
            });
        }
        if self.scales.len() < 8 {
            return Err(Error::InsufficientData(format!(
                "order estimate needs at least 8 distinct scales or a tail, found {}",
                self.scales.len()
            )));
        }
        let x_min = grid.x_min.unwrap_or(1.0 / self.scales[0].l);
        let x_max = grid.x_max.unwrap_or(1.0 / self.scales[self.scales.len() - 1].l);
        if !(x_max > x_min) || (x_max / x_min).log10() < 3.0 - 1e-9 {
            return Err(Error::InsufficientData(
                "the x grid must cover at least 3 decades".into(),
            ));
        }
        let mut us = Vec::new();
        let mut vs = Vec::new();
        for x in fit::geometric_grid(x_min, x_max, grid.per_decade.max(2)) {
            let n = self.counting_function(x)?;
            if n > 0 {
                us.push(x.ln());
                vs.push((n as f64).ln());
            }
        }
        if us.len() < 3 {
            return Err(Error::InsufficientData("fewer than 3 usable grid points".into()));
        }
        let slopes = fit::trailing_window_slopes(&us, &vs, width);
        let value = slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max).max(0.0);
        Ok(OrderEstimate {
            value,
            exact: false,
            truncated: true,
            windows: slopes.len(),
        })
    }

    /// The tail never shifts the abscissa, so this is the exact value for
    /// tailed strings and the counting-order estimate otherwise.
    pub fn abscissa_of_convergence(&self) -> Result<OrderEstimate> {
        self.order_of_counting_function(GridSpec::default())
    }

    pub fn check_growth_equivalence(&self, alpha: f64) -> Result<GrowthReport> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
        }
        // Both suprema are attained at jump points x_n = 1/l_n, where the
        // cumulative count C_n is reached.
        let mut us = Vec::new();
        let mut log_a = Vec::new();
        let mut log_b = Vec::new();
        let mut cum = 0.0f64;
        for lv in self.levels().take(200_000) {
            cum += lv.m;
            let lc = cum.ln();
            us.push(-lv.l.ln());
            log_a.push(lc + alpha * lv.l.ln());
            log_b.push(lv.l.ln() + lc / alpha);
            if cum > 1e15 || lv.l < 1e-200 {
                break;
            }
        }
        let run_max = |v: &mut Vec<f64>| {
            for i in 1..v.len() {
                if v[i] < v[i - 1] {
                    v[i] = v[i - 1];
                }
            }
        };
        run_max(&mut log_a);
        run_max(&mut log_b);
        let sa = trailing_slope(&us, &log_a);
        let sb = trailing_slope(&us, &log_b) * alpha;
        Ok(GrowthReport {
            alpha,
            sup_counting: log_a.last().copied().unwrap_or(f64::NAN).exp(),
            sup_lengths: log_b.last().copied().unwrap_or(f64::NAN).exp(),
            counting_bounded: sa <= GROWTH_SLOPE_TOL,
            lengths_bounded: sb <= GROWTH_SLOPE_TOL,
            levels_used: us.len(),
        })
    }

    /// Total length, or `None` when it diverges.
    pub fn total_length(&self) -> Option<f64> {
        let head: f64 = self.scales.iter().map(|s| s.l * s.m as f64).sum();
        match self.tail {
            None => Some(head),
            Some(t) => {
                let q = t.g as f64 * t.r;
                if q >= 1.0 {
                    return None;
                }
                let block: f64 = self.block().iter().map(|s| s.l * s.m as f64).sum();
                Some(head + block * q / (1.0 - q))
            }
        }
    }

    /// Endpoints 0, l_1, l_1 + l_2, ... of the flattened string laid out
    /// left to right, using at most `max_lengths` lengths.
    pub fn realize_points(&self, max_lengths: usize) -> Vec<f64> {
        let mut pts = vec![0.0];
        let mut acc = 0.0;
        'outer: for lv in self.levels() {
            let m = lv.m as usize;
            for _ in 0..m {
                if pts.len() > max_lengths {
                    break 'outer;
                }
                acc += lv.l;
                pts.push(acc);
            }
        }
        pts
    }

    /// Replaces an eventually geometric tail-less string by its shortest
    /// prefix plus an exact tail. Needs at least two full periods of
    /// agreement; returns `None` if none is found.
    pub fn detect_tail(&self, rel_tol: f64) -> Option<FractalString> {
        self.detect_tail_periodic(rel_tol, usize::MAX)
    }

    /// As [`FractalString::detect_tail`], trying block periods up to `max_period`.
    pub fn detect_tail_periodic(&self, rel_tol: f64, max_period: usize) -> Option<FractalString> {
        if self.tail.is_some() {
            return Some(self.clone());
        }
        let s = &self.scales;
        let n = s.len();
        for p in 1..=(n / 3).min(max_period) {
            for onset in 1..=n {
                let relations = n.saturating_sub(p).saturating_sub(onset - 1);
                if relations < 2 * p {
                    break;
                }
                let i0 = onset - 1;
                let r0 = s[i0 + p].l / s[i0].l;
                let g0 = s[i0 + p].m / s[i0].m;
                let mut ok = g0 >= 1;
                let mut log_sum = 0.0;
                for i in i0..n - p {
                    let r = s[i + p].l / s[i].l;
                    if (r / r0 - 1.0).abs() > rel_tol || s[i + p].m != g0 * s[i].m {
                        ok = false;
                        break;
                    }
                    log_sum += r.ln();
                }
                if !ok {
                    continue;
                }
                let mut r = (log_sum / relations as f64).exp();
                let inv = (1.0 / r).round();
                if inv >= 2.0 && ((1.0 / r) / inv - 1.0).abs() < rel_tol {
                    r = 1.0 / inv;
                }
                let tail = GeometricTail {
                    r,
                    g: g0,
                    onset,
                    period: p,
                };
                let kept = s[..onset + p - 1].to_vec();
                if let Ok(out) = FractalString::new(kept, Some(tail)) {
                    return Some(out);
                }
            }
        }
        None
    }
}

fn reaches(l: f64, x: f64) -> bool {
    l * x >= 1.0 - BOUNDARY_REL
}

/// Largest k >= 0 with l * r^k reaching 1/x.
fn tail_levels_reached(l: f64, r: f64, x: f64) -> u32 {
    let lx = l * x;
    if lx < 1.0 - BOUNDARY_REL {
        return 0;
    }
    let mut k = (lx.ln() / (1.0 / r).ln()).floor().max(0.0) as i64;
    while reaches(l * r.powi(k as i32 + 1), x) {
        k += 1;
    }
    while k > 0 && !reaches(l * r.powi(k as i32), x) {
        k -= 1;
    }
    k as u32
}

/// g + g^2 + ... + g^k, saturating.
fn geometric_sum(g: u64, k: u32) -> u128 {
    let mut acc: u128 = 0;
    let mut p: u128 = 1;
    for _ in 0..k {
        p = p.saturating_mul(g as u128);
        acc = acc.saturating_add(p);
    }
    acc
}

fn saturate(v: u128) -> u64 {
    v.min(u64::MAX as u128) as u64
}

fn trailing_slope(us: &[f64], vs: &[f64]) -> f64 {
    if us.len() < 3 {
        return 0.0;
    }
    let lo = us[0];
    let hi = us[us.len() - 1];
    let mid = lo + 0.5 * (hi - lo);
    let start = us.partition_point(|&u| u < mid);
    let (u, v) = if us.len() - start >= 3 {
        (&us[start..], &vs[start..])
    } else {
        (us, vs)
    };
    fit::linreg(u, v).map(|(s, _)| s).unwrap_or(0.0)
}
