//! Log-log regression helpers shared by every dimension estimator.
//!
//! limsup and liminf are approximated by the maximum and minimum regression
//! slope over windows spanning one decade, restricted to the trailing half of
//! the available range.

/// Width of a regression window in natural-log units (one decade).
pub const DECADE: f64 = std::f64::consts::LN_10;

/// Least-squares slope and intercept. Returns `None` for fewer than two
/// points or zero spread in `xs`.
pub fn linreg(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Regression slopes over every full window of log-width `width`, with the
/// window start in the trailing half of the admissible range. `us` must be
/// increasing. Each window needs at least three points; windows that do not
/// fit fall back to a single regression over all points.
pub fn trailing_window_slopes(us: &[f64], vs: &[f64], width: f64) -> Vec<f64> {
    let n = us.len();
    if n < 3 {
        return Vec::new();
    }
    let first = us[0];
    let last = us[n - 1];
    let span = last - first;
    if span <= width {
        return linreg(us, vs).map(|(s, _)| vec![s]).unwrap_or_default();
    }
    let start_cut = first + (span - width) / 2.0;
    let mut out = Vec::new();
    for i in 0..n {
        if us[i] + 1e-12 < start_cut {
            continue;
        }
        let end = us[i] + width;
        if end > last + 1e-9 {
            break;
        }
        let j = us.partition_point(|&u| u <= end + 1e-9);
        if j - i >= 3 {
            if let Some((s, _)) = linreg(&us[i..j], &vs[i..j]) {
                out.push(s);
            }
        }
    }
    if out.is_empty() {
        if let Some((s, _)) = linreg(us, vs) {
            out.push(s);
        }
    }
    out
}

/// (max, min) of the trailing-window slopes.
pub fn limsup_liminf_slopes(us: &[f64], vs: &[f64], width: f64) -> Option<(f64, f64)> {
    let slopes = trailing_window_slopes(us, vs, width);
    if slopes.is_empty() {
        return None;
    }
    let hi = slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = slopes.iter().cloned().fold(f64::INFINITY, f64::min);
    Some((hi, lo))
}

/// Geometric grid `x_min * q^i` with `per_decade` points per decade, including both ends.
pub fn geometric_grid(x_min: f64, x_max: f64, per_decade: usize) -> Vec<f64> {
    let decades = (x_max / x_min).log10();
    let n = ((decades * per_decade as f64).ceil() as usize).max(1);
    (0..=n)
        .map(|i| x_min * (x_max / x_min).powf(i as f64 / n as f64))
        .collect()
}
