//! Point clouds, box-counting functions, dimension estimates, extraction of
//! box-counting strings and tessellation strings.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit;
use crate::strings::{FractalString, Scale};

/// Points closer than this fraction of a cell to the cell's lower face are
/// snapped into it, absorbing round-off at exact grid coordinates.
pub const GRID_SNAP: f64 = 1e-9;
/// Relative width to which sampled jump locations are refined.
pub const JUMP_REL_WIDTH: f64 = 1e-9;
/// Largest cloud accepted by the exact branch-and-bound counts.
pub const EXACT_MAX_POINTS: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudMeta {
    pub source: String,
    pub depth: Option<u32>,
    /// Bound on the Hausdorff distance to the intended set; 0 if exact.
    pub delta: f64,
}

impl Default for CloudMeta {
    fn default() -> Self {
        CloudMeta {
            source: "unknown".into(),
            depth: None,
            delta: 0.0,
        }
    }
}

/// Points stored row-major: point i occupies coords[i*m .. (i+1)*m].
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    m: usize,
    coords: Vec<f64>,
    pub meta: CloudMeta,
}

impl PointCloud {
    pub fn new(m: usize, coords: Vec<f64>, meta: CloudMeta) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidInput("ambient dimension must be positive".into()));
        }
        if coords.is_empty() || coords.len() % m != 0 {
            return Err(Error::InvalidInput("a cloud needs at least one complete point".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("all coordinates must be finite".into()));
        }
        if !(meta.delta >= 0.0) || !meta.delta.is_finite() {
            return Err(Error::InvalidInput("resolution must be finite and nonnegative".into()));
        }
        Ok(PointCloud { m, coords, meta })
    }

    pub fn from_points(points: &[Vec<f64>], meta: CloudMeta) -> Result<Self> {
        let m = points.first().map(|p| p.len()).unwrap_or(0);
        if points.iter().any(|p| p.len() != m) {
            return Err(Error::InvalidInput("points have mixed dimensions".into()));
        }
        PointCloud::new(m, points.concat(), meta)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.m
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.m..(i + 1) * self.m]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.m)
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.m];
        let mut hi = vec![f64::NEG_INFINITY; self.m];
        for p in self.points() {
            for i in 0..self.m {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        (lo, hi)
    }

    pub fn diameter_bound(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        lo.iter().zip(&hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
    }

    /// Sorted coordinates of a 1-D cloud.
    pub fn sorted_1d(&self) -> Result<Vec<f64>> {
        if self.m != 1 {
            return Err(Error::Unsupported("operation needs a 1-D cloud".into()));
        }
        let mut v = self.coords.clone();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(v)
    }

    /// Union of two clouds of equal dimension; the resolution is the larger one.
    pub fn union(&self, other: &PointCloud) -> Result<PointCloud> {
        if self.m != other.m {
            return Err(Error::InvalidInput("dimension mismatch".into()));
        }
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        PointCloud::new(
            self.m,
            coords,
            CloudMeta {
                source: format!("{}+{}", self.meta.source, other.meta.source),
                depth: None,
                delta: self.meta.delta.max(other.meta.delta),
            },
        )
    }

    /// CSV with header `x1[,x2,...]`, one point per row.
    pub fn read_csv<R: Read>(reader: R, delta: f64) -> Result<PointCloud> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let m = headers.len();
        for (i, h) in headers.iter().enumerate() {
            if h != format!("x{}", i + 1) {
                return Err(Error::Parse(format!("expected header x1..x{m}, found {h:?}")));
            }
        }
        let mut coords = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != m {
                return Err(Error::Parse("row length differs from header".into()));
            }
            for f in rec.iter() {
                coords.push(f.parse::<f64>().map_err(|e| Error::Parse(format!("{f:?}: {e}")))?);
            }
        }
        PointCloud::new(
            m,
            coords,
            CloudMeta {
                source: "csv".into(),
                depth: None,
                delta,
            },
        )
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record((1..=self.m).map(|i| format!("x{i}")))?;
        for p in self.points() {
            w.write_record(p.iter().map(|c| format!("{c:?}")))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Variant {
    Packing,
    DiamCover,
    BallCover,
    CubeCover,
    MeshCount,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Packing,
        Variant::DiamCover,
        Variant::BallCover,
        Variant::CubeCover,
        Variant::MeshCount,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Packing => "packing",
            Variant::DiamCover => "diamCover",
            Variant::BallCover => "ballCover",
            Variant::CubeCover => "cubeCover",
            Variant::MeshCount => "meshCount",
        }
    }

    /// Comparison constants (c_lo, c_hi) with
    /// c_lo * meshCount <= count <= c_hi * meshCount for the cover variants.
    pub fn mesh_constants(self, m: usize) -> (f64, f64) {
        let mf = m as f64;
        let two_m = 2f64.powi(m as i32);
        match self {
            Variant::CubeCover => (1.0 / two_m, 1.0),
            Variant::DiamCover => (1.0 / two_m, mf.sqrt().ceil().powi(m as i32)),
            Variant::BallCover => (1.0 / 3f64.powi(m as i32), (mf.sqrt() / 2.0).ceil().powi(m as i32)),
            Variant::MeshCount | Variant::Packing => (1.0, 1.0),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .iter()
            .copied()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown variant {s:?}")))
    }
}

/// Exact counts have lo == hi.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountBracket {
    pub lo: u64,
    pub hi: u64,
}

impl CountBracket {
    pub fn exact(n: u64) -> Self {
        CountBracket { lo: n, hi: n }
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn geometric_mid(&self) -> f64 {
        ((self.lo as f64) * (self.hi as f64)).sqrt()
    }
}

fn check_scale(x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("box-counting scale must be positive, got {x}")));
    }
    Ok(())
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum CellKey {
    Small([i64; 3]),
    Large(Vec<i64>),
}

fn cell_key(p: &[f64], scale: f64, snap: f64) -> CellKey {
    let q = |c: f64| (c * scale + snap).floor() as i64;
    if p.len() <= 3 {
        let mut k = [0i64; 3];
        for (i, &c) in p.iter().enumerate() {
            k[i] = q(c);
        }
        CellKey::Small(k)
    } else {
        CellKey::Large(p.iter().map(|&c| q(c)).collect())
    }
}

/// Number of origin-anchored grid cells of side 1/x containing a point.
pub fn mesh_count(cloud: &PointCloud, x: f64) -> Result<u64> {
    check_scale(x)?;
    if cloud.m == 1 {
        let mut keys: Vec<i64> = cloud
            .coords
            .iter()
            .map(|&c| (c * x + GRID_SNAP).floor() as i64)
            .collect();
        keys.sort_unstable();
        keys.dedup();
        return Ok(keys.len() as u64);
    }
    let mut keys: Vec<CellKey> = cloud.points().map(|p| cell_key(p, x, GRID_SNAP)).collect();
    keys.sort_unstable();
    keys.dedup();
    Ok(keys.len() as u64)
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Greedy packing in cloud order: a point is accepted when it lies at
/// distance >= 2/x from every accepted point, so closed balls of radius 1/x
/// around accepted points have disjoint interiors.
pub fn greedy_packing(cloud: &PointCloud, x: f64) -> Result<u64> {
    check_scale(x)?;
    let sep = 2.0 / x;
    let sep2 = sep * sep;
    let cell = 1.0 / sep;
    let m = cloud.m;
    let mut grid: HashMap<CellKey, Vec<usize>> = HashMap::new();
    let mut accepted = 0u64;
    let mut offsets: Vec<Vec<i64>> = vec![vec![]];
    for _ in 0..m {
        offsets = offsets
            .into_iter()
            .flat_map(|o| {
                (-1..=1).map(move |d| {
                    let mut o = o.clone();
                    o.push(d);
                    o
                })
            })
            .collect();
    }
    let mut nb = vec![0i64; m];
    for (i, p) in cloud.points().enumerate() {
        let base: Vec<i64> = p.iter().map(|&c| (c * cell).floor() as i64).collect();
        let mut ok = true;
        'search: for off in &offsets {
            for d in 0..m {
                nb[d] = base[d] + off[d];
            }
            let key = key_from_ints(&nb);
            if let Some(list) = grid.get(&key) {
                for &j in list {
                    if dist2(p, cloud.point(j)) < sep2 * (1.0 - 1e-12) {
                        ok = false;
                        break 'search;
                    }
                }
            }
        }
        if ok {
            accepted += 1;
            grid.entry(key_from_ints(&base)).or_default().push(i);
        }
    }
    Ok(accepted)
}

fn key_from_ints(v: &[i64]) -> CellKey {
    if v.len() <= 3 {
        let mut k = [0i64; 3];
        k[..v.len()].copy_from_slice(v);
        CellKey::Small(k)
    } else {
        CellKey::Large(v.to_vec())
    }
}

/// Box count for any variant. Cover variants come back as brackets built
/// from the mesh count and the comparison constants.
pub fn box_count(cloud: &PointCloud, x: f64, variant: Variant) -> Result<CountBracket> {
    match variant {
        Variant::MeshCount => Ok(CountBracket::exact(mesh_count(cloud, x)?)),
        Variant::Packing => Ok(CountBracket::exact(greedy_packing(cloud, x)?)),
        v => {
            let n = mesh_count(cloud, x)? as f64;
            let (lo, hi) = v.mesh_constants(cloud.m);
            Ok(CountBracket {
                lo: ((n * lo).ceil() as u64).max(1),
                hi: (n * hi).floor().max(1.0) as u64,
            })
        }
    }
}

/// Minimum number of sets of diameter <= 1/x covering a 1-D cloud (greedy is optimal).
pub fn diam_cover_1d(sorted: &[f64], x: f64) -> Result<u64> {
    check_scale(x)?;
    let w = 1.0 / x;
    let mut count = 0u64;
    let mut i = 0;
    while i < sorted.len() {
        count += 1;
        let start = sorted[i];
        while i < sorted.len() && sorted[i] - start <= w * (1.0 + 1e-12) {
            i += 1;
        }
    }
    Ok(count)
}

/// Exact counts for clouds of at most 24 points by branch and bound:
/// maximum packing, or minimum cover by sets of diameter <= 1/x,
/// closed balls of radius 1/x, or axis-parallel cubes of side 1/x.
pub fn exact_count(cloud: &PointCloud, x: f64, variant: Variant) -> Result<u64> {
    check_scale(x)?;
    let n = cloud.len();
    if n > EXACT_MAX_POINTS {
        return Err(Error::Unsupported(format!(
            "exact counts need at most {EXACT_MAX_POINTS} points"
        )));
    }
    let d = 1.0 / x;
    let eps = 1e-12;
    match variant {
        Variant::MeshCount => mesh_count(cloud, x),
        Variant::Packing => {
            let mut adj = vec![0u32; n];
            for i in 0..n {
                for j in 0..n {
                    if i != j && dist2(cloud.point(i), cloud.point(j)) < 4.0 * d * d * (1.0 - eps) {
                        adj[i] |= 1 << j;
                    }
                }
            }
            Ok(max_independent_set(&adj, (1u32 << n).wrapping_sub(1) & full_mask(n)) as u64)
        }
        Variant::DiamCover => {
            let mut sets = Vec::new();
            cover_candidates_diam(cloud, d * d * (1.0 + eps), &mut sets);
            Ok(min_set_cover(n, &sets) as u64)
        }
        Variant::CubeCover => {
            let m = cloud.m;
            let mut anchors: Vec<Vec<f64>> = vec![vec![]];
            for axis in 0..m {
                let mut vals: Vec<f64> = cloud.points().map(|p| p[axis]).collect();
                vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
                vals.dedup();
                anchors = anchors
                    .into_iter()
                    .flat_map(|a| {
                        vals.iter().map(move |&v| {
                            let mut a = a.clone();
                            a.push(v);
                            a
                        })
                    })
                    .collect();
            }
            let sets: Vec<u32> = anchors
                .iter()
                .map(|a| {
                    (0..n).fold(0u32, |acc, i| {
                        let p = cloud.point(i);
                        let inside = p.iter().zip(a).all(|(c, lo)| *c >= *lo && *c <= lo + d * (1.0 + eps));
                        if inside {
                            acc | (1 << i)
                        } else {
                            acc
                        }
                    })
                })
                .collect();
            Ok(min_set_cover(n, &sets) as u64)
        }
        Variant::BallCover => {
            let mut centers: Vec<Vec<f64>> = cloud.points().map(|p| p.to_vec()).collect();
            match cloud.m {
                1 => {
                    for p in cloud.points() {
                        centers.push(vec![p[0] + d]);
                    }
                }
                2 => {
                    for i in 0..n {
                        for j in i + 1..n {
                            let (a, b) = (cloud.point(i), cloud.point(j));
                            let dd = dist2(a, b);
                            if dd > 4.0 * d * d * (1.0 + eps) || dd == 0.0 {
                                continue;
                            }
                            let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
                            let h = (d * d - dd / 4.0).max(0.0).sqrt();
                            let len = dd.sqrt();
                            let (ux, uy) = (-(b[1] - a[1]) / len, (b[0] - a[0]) / len);
                            centers.push(vec![mid[0] + h * ux, mid[1] + h * uy]);
                            centers.push(vec![mid[0] - h * ux, mid[1] - h * uy]);
                        }
                    }
                }
                _ => return Err(Error::Unsupported("exact ball covers need m <= 2".into())),
            }
            let sets: Vec<u32> = centers
                .iter()
                .map(|c| {
                    (0..n).fold(0u32, |acc, i| {
                        if dist2(cloud.point(i), c) <= d * d * (1.0 + 1e-9) {
                            acc | (1 << i)
                        } else {
                            acc
                        }
                    })
                })
                .collect();
            Ok(min_set_cover(n, &sets) as u64)
        }
    }
}

fn full_mask(n: usize) -> u32 {
    if n >= 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

fn max_independent_set(adj: &[u32], candidates: u32) -> u32 {
    if candidates == 0 {
        return 0;
    }
    let v = candidates.trailing_zeros() as usize;
    let rest = candidates & !(1 << v);
    let with = 1 + max_independent_set(adj, rest & !adj[v]);
    if adj[v] & rest == 0 {
        return with;
    }
    if with > rest.count_ones() {
        return with;
    }
    with.max(max_independent_set(adj, rest))
}

fn cover_candidates_diam(cloud: &PointCloud, d2: f64, out: &mut Vec<u32>) {
    // Maximal cliques of the "distance <= d" graph (Bron–Kerbosch).
    let n = cloud.len();
    let mut adj = vec![0u32; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && dist2(cloud.point(i), cloud.point(j)) <= d2 {
                adj[i] |= 1 << j;
            }
        }
    }
    fn bk(r: u32, p: u32, x: u32, adj: &[u32], out: &mut Vec<u32>) {
        if p == 0 && x == 0 {
            out.push(r);
            return;
        }
        let mut p_iter = p;
        let mut p = p;
        let mut x = x;
        while p_iter != 0 {
            let v = p_iter.trailing_zeros() as usize;
            p_iter &= !(1 << v);
            bk(r | (1 << v), p & adj[v], x & adj[v], adj, out);
            p &= !(1 << v);
            x |= 1 << v;
        }
    }
    bk(0, full_mask(n), 0, &adj, out);
}

fn min_set_cover(n: usize, sets: &[u32]) -> u32 {
    let all = full_mask(n);
    let mut sets: Vec<u32> = sets.iter().copied().filter(|&s| s != 0).collect();
    sets.sort_unstable_by_key(|s| std::cmp::Reverse(s.count_ones()));
    sets.dedup();
    let max_size = sets.first().map(|s| s.count_ones()).unwrap_or(1).max(1);
    let mut best = n as u32;
    fn go(covered: u32, used: u32, all: u32, sets: &[u32], max_size: u32, best: &mut u32) {
        if covered == all {
            *best = (*best).min(used);
            return;
        }
        let left = (all & !covered).count_ones();
        if used + left.div_ceil(max_size) >= *best {
            return;
        }
        let p = (all & !covered).trailing_zeros();
        for &s in sets {
            if s & (1 << p) != 0 {
                go(covered | s, used + 1, all, sets, max_size, best);
            }
        }
    }
    go(0, 0, all, &sets, max_size, &mut best);
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionEstimate {
    pub upper: f64,
    pub lower: f64,
    /// (k, count) pairs actually used.
    pub samples: Vec<(i32, f64)>,
    /// Exponents refused because λ^-k is finer than the cloud resolution.
    pub refused: Vec<i32>,
    pub windows: usize,
}

/// Upper/lower box-dimension estimates from counts at x = λ^k, one-decade windows.
pub fn dimension_estimate(
    cloud: &PointCloud,
    lambda: f64,
    k_min: i32,
    k_max: i32,
    variant: Variant,
) -> Result<DimensionEstimate> {
    dimension_estimate_windowed(cloud, lambda, k_min, k_max, variant, fit::DECADE)
}

/// As [`dimension_estimate`] with regression windows of log-width `width`.
pub fn dimension_estimate_windowed(
    cloud: &PointCloud,
    lambda: f64,
    k_min: i32,
    k_max: i32,
    variant: Variant,
    width: f64,
) -> Result<DimensionEstimate> {
    if !(lambda > 1.0) {
        return Err(Error::Domain("lambda must exceed 1".into()));
    }
    if k_max - k_min < 2 {
        return Err(Error::InsufficientData("k range must span at least 3 values".into()));
    }
    let mut samples = Vec::new();
    let mut refused = Vec::new();
    for k in k_min..=k_max {
        let x = lambda.powi(k);
        if 1.0 / x < cloud.meta.delta {
            refused.push(k);
            continue;
        }
        let c = box_count(cloud, x, variant)?;
        samples.push((k, c.geometric_mid()));
    }
    if samples.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} scales are coarser than the cloud resolution {}; refused k = {:?}",
            samples.len(),
            cloud.meta.delta,
            refused
        )));
    }
    let us: Vec<f64> = samples.iter().map(|(k, _)| *k as f64 * lambda.ln()).collect();
    let vs: Vec<f64> = samples.iter().map(|(_, c)| c.ln()).collect();
    let slopes = fit::trailing_window_slopes(&us, &vs, width);
    let m = cloud.m as f64;
    let upper = slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max).clamp(0.0, m);
    let lower = slopes.iter().cloned().fold(f64::INFINITY, f64::min).clamp(0.0, m);
    Ok(DimensionEstimate {
        upper,
        lower,
        samples,
        refused,
        windows: slopes.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxCountCurve {
    pub variant: Variant,
    /// (x, count), increasing in x.
    pub samples: Vec<(f64, u64)>,
}

impl BoxCountCurve {
    pub fn sample(cloud: &PointCloud, variant: Variant, xs: &[f64]) -> Result<Self> {
        let samples = xs
            .iter()
            .map(|&x| Ok((x, box_count(cloud, x, variant)?.hi)))
            .collect::<Result<Vec<_>>>()?;
        Ok(BoxCountCurve { variant, samples })
    }

    /// Running maximum, turning any sampled curve into a nondecreasing one.
    pub fn monotone_envelope(&self) -> BoxCountCurve {
        let mut best = 0;
        let samples = self
            .samples
            .iter()
            .map(|&(x, c)| {
                best = best.max(c);
                (x, best)
            })
            .collect();
        BoxCountCurve {
            variant: self.variant,
            samples,
        }
    }
}

/// Closed-form box-counting functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalyticCurve {
    /// Cantor set, diameter covers: N = 1 on (0, 1], N = 2^n on (3^(n-1), 3^n].
    CantorDiam,
    /// Set F, packing: levels j * 4^k on (., 4^k c_j] with c = (√2, 8/√17, 2).
    SetFPacking,
}

impl AnalyticCurve {
    /// Levels (sup of level set, value) in increasing order, up to the first level whose sup exceeds `x_max`.
    pub fn levels(&self, x_max: f64) -> Vec<(f64, u64)> {
        let mut out = Vec::new();
        match self {
            AnalyticCurve::CantorDiam => {
                out.push((1.0, 1));
                let mut n = 1;
                loop {
                    let sup = 3f64.powi(n);
                    out.push((sup, 1u64 << n));
                    if sup > x_max || n >= 62 {
                        break;
                    }
                    n += 1;
                }
            }
            AnalyticCurve::SetFPacking => {
                let c = [std::f64::consts::SQRT_2, 8.0 / 17f64.sqrt(), 2.0];
                'outer: for k in 0..31 {
                    let p = 4f64.powi(k);
                    for (j, cj) in c.iter().enumerate() {
                        let sup = p * cj;
                        out.push((sup, (j as u64 + 1) << (2 * k)));
                        if sup > x_max {
                            break 'outer;
                        }
                    }
                }
            }
        }
        out
    }

    pub fn count(&self, x: f64) -> u64 {
        let mut upto = 4.0f64.max(x * 5.0);
        loop {
            let levels = self.levels(upto);
            if let Some(&(_, v)) = levels.iter().find(|(s, _)| x <= *s) {
                return v;
            }
            upto *= 16.0;
        }
    }

    pub fn variant(&self) -> Variant {
        match self {
            AnalyticCurve::CantorDiam => Variant::DiamCover,
            AnalyticCurve::SetFPacking => Variant::Packing,
        }
    }
}

pub enum CurveSource<'a> {
    Analytic(AnalyticCurve),
    /// Samples only; jump locations are taken at the last sample of each level.
    Sampled(&'a BoxCountCurve),
    /// Samples bracket the jumps, which are then refined by bisection on `count`.
    Refined {
        curve: &'a BoxCountCurve,
        count: &'a dyn Fn(f64) -> Result<u64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub string: FractalString,
    /// (sup of level set, level value), strictly increasing in both.
    pub jumps: Vec<(f64, u64)>,
    pub warning: Option<String>,
}

/// Box-counting fractal string: l_n = 1/sup{x : N = M_n}, m_1 = M_2,
/// m_n = M_(n+1) - M_n. The last level in range has no known sup and only
/// supplies M_(L).
pub fn extract_box_counting_string(source: CurveSource<'_>, x_max: f64) -> Result<Extraction> {
    let tail_tol = match source {
        CurveSource::Refined { .. } => 8.0 * JUMP_REL_WIDTH,
        _ => 1e-9,
    };
    let levels = match source {
        CurveSource::Analytic(a) => a.levels(x_max),
        CurveSource::Sampled(curve) => sampled_levels(curve, None)?,
        CurveSource::Refined { curve, count } => sampled_levels(curve, Some(count))?,
    };
    if levels.len() < 2 {
        return Err(Error::Degenerate(
            "the counting curve is constant over the whole range (finite or one-point set)".into(),
        ));
    }
    let mut scales = Vec::with_capacity(levels.len() - 1);
    for n in 0..levels.len() - 1 {
        let m = if n == 0 {
            levels[1].1
        } else {
            levels[n + 1].1 - levels[n].1
        };
        scales.push(Scale {
            l: 1.0 / levels[n].0,
            m,
        });
    }
    let string = FractalString::new(scales, None)?;
    let string = string.detect_tail(tail_tol).unwrap_or(string);
    Ok(Extraction {
        string,
        jumps: levels,
        warning: None,
    })
}

fn sampled_levels(curve: &BoxCountCurve, count: Option<&dyn Fn(f64) -> Result<u64>>) -> Result<Vec<(f64, u64)>> {
    let s = &curve.samples;
    if s.is_empty() {
        return Err(Error::InvalidInput("empty curve".into()));
    }
    for w in s.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::InvalidInput("curve samples must have increasing x".into()));
        }
        if w[1].1 < w[0].1 {
            return Err(Error::InvalidInput(format!(
                "curve decreases between x = {} and x = {}",
                w[0].0, w[1].0
            )));
        }
    }
    if s[0].1 != 1 {
        return Err(Error::InvalidInput("curve must start at count 1".into()));
    }
    let mut levels = Vec::new();
    for w in s.windows(2) {
        let ((x0, c0), (x1, c1)) = (w[0], w[1]);
        if c1 == c0 {
            continue;
        }
        match count {
            None => levels.push((x0, c0)),
            Some(f) => {
                let mut lo = x0;
                let mut level = c0;
                while level < c1 {
                    let mut hi = x1;
                    while (hi - lo) / lo > JUMP_REL_WIDTH {
                        let mid = 0.5 * (lo + hi);
                        let c = f(mid)?;
                        if c < level {
                            return Err(Error::InvalidInput(format!(
                                "counting function decreases near x = {mid}"
                            )));
                        }
                        if c <= level {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    levels.push((lo, level));
                    let next = f(hi)?;
                    if next <= level {
                        return Err(Error::InvalidInput("counting function is not monotone".into()));
                    }
                    level = next;
                    lo = hi;
                }
            }
        }
    }
    if levels.is_empty() {
        return Ok(Vec::new());
    }
    let last = s[s.len() - 1];
    levels.push((f64::INFINITY, last.1));
    Ok(levels)
}

/// Closed-form tessellation counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalyticSet {
    /// Cantor set, λ = 1/3: m_n = 2^n.
    Cantor,
    /// Set F, λ = 1/4: m_n = 9 * 4^n.
    SetF,
}

impl AnalyticSet {
    pub fn tessellation_count(&self, lambda: f64, n: u32) -> Result<u64> {
        match self {
            AnalyticSet::Cantor if (lambda - 1.0 / 3.0).abs() < 1e-15 => Ok(1u64 << n),
            AnalyticSet::SetF if lambda == 0.25 => Ok(9u64 << (2 * n)),
            _ => Err(Error::Unsupported(format!(
                "no closed-form tessellation count for λ = {lambda}"
            ))),
        }
    }
}

pub enum TessellationSource<'a> {
    Cloud(&'a PointCloud),
    Analytic(AnalyticSet),
}

/// Scales λ^n (n in range) with multiplicity = occupied cubes of side λ^n.
/// An exact tail is attached when m_(n+1)/m_n settles to one integer.
pub fn tessellation_string(
    source: TessellationSource<'_>,
    lambda: f64,
    n_min: u32,
    n_max: u32,
) -> Result<FractalString> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Domain("lambda must lie in (0, 1)".into()));
    }
    if n_max < n_min + 2 {
        return Err(Error::InsufficientData("need at least 3 tessellation levels".into()));
    }
    let mut scales = Vec::new();
    let mut refused = Vec::new();
    for n in n_min..=n_max {
        let side = lambda.powi(n as i32);
        let m = match &source {
            TessellationSource::Analytic(a) => a.tessellation_count(lambda, n)?,
            TessellationSource::Cloud(c) => {
                if side < c.meta.delta {
                    refused.push(n);
                    continue;
                }
                mesh_count(c, 1.0 / side)?
            }
        };
        scales.push(Scale { l: side, m });
    }
    if scales.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "fewer than 3 levels are coarser than the cloud resolution; refused n = {refused:?}"
        )));
    }
    let s = FractalString::new(scales, None)?;
    Ok(s.detect_tail_periodic(1e-12, 1).unwrap_or(s))
}

/// Exact when a tail is attached; otherwise the max trailing-window slope of
/// log m_n against log λ^-n.
pub fn tessellation_dimension(s: &FractalString) -> Result<f64> {
    if let Some(d) = s.exact_dimension() {
        return Ok(d);
    }
    let sc = s.scales();
    if sc.len() < 3 {
        return Err(Error::InsufficientData("need at least 3 levels".into()));
    }
    let us: Vec<f64> = sc.iter().map(|x| -x.l.ln()).collect();
    let vs: Vec<f64> = sc.iter().map(|x| (x.m as f64).ln()).collect();
    let slopes = fit::trailing_window_slopes(&us, &vs, fit::DECADE);
    Ok(slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max).max(0.0))
}
