//! Every dimension of a point cloud computed along independent routes:
//! box counts (mesh and packing), Minkowski dimension from tube volumes,
//! the counting-function order of the extracted box-counting string, and
//! the divergence threshold of the tube (equivalently distance) zeta.

use serde::{Deserialize, Serialize};

use crate::boxcount::{
    self, diam_cover_1d, dimension_estimate_windowed, BoxCountCurve, CloudMeta, CurveSource, DimensionEstimate,
    PointCloud, Variant,
};
use crate::distzeta::{self, BandSpec};
use crate::error::{Error, Result};
use crate::fit;
use crate::strings::GridSpec;
use crate::tube::{self, ExactTube1d, TubeVolume};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainSpec {
    pub lambda: f64,
    /// Resolution; defaults to the cloud's recorded δ, else the mean nearest-neighbour spacing.
    pub delta: Option<f64>,
    pub per_decade: usize,
    /// Tube volume samples per decade for the Minkowski leg.
    pub tube_per_decade: usize,
    /// Raster pitch as a fraction of ε for planar tubes.
    pub raster_fraction: f64,
}

impl Default for ChainSpec {
    fn default() -> Self {
        ChainSpec {
            lambda: 2.0,
            delta: None,
            per_decade: 20,
            tube_per_decade: 10,
            raster_fraction: 1.0 / 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    pub leg: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Leg {
    fn from_result(name: &str, r: Result<(f64, Option<f64>)>) -> Leg {
        match r {
            Ok((upper, lower)) => Leg {
                leg: name.to_string(),
                upper: Some(upper),
                lower,
                error: None,
            },
            Err(e) => Leg {
                leg: name.to_string(),
                upper: None,
                lower: None,
                error: Some(e.to_string()),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub m: usize,
    pub points: usize,
    pub delta: f64,
    pub legs: Vec<Leg>,
    /// Largest pairwise difference between the upper values of the legs that succeeded.
    pub discrepancy: f64,
}

impl ChainReport {
    pub fn leg(&self, name: &str) -> Option<&Leg> {
        self.legs.iter().find(|l| l.leg == name)
    }
}

/// Mean distance from each point to its nearest neighbour.
pub fn mean_nearest_spacing(cloud: &PointCloud) -> Result<f64> {
    let n = cloud.len();
    if n < 2 {
        return Err(Error::InsufficientData("need at least two points".into()));
    }
    if cloud.m() == 1 {
        let s = cloud.sorted_1d()?;
        let mut total = 0.0;
        for i in 0..n {
            let l = if i > 0 { s[i] - s[i - 1] } else { f64::INFINITY };
            let r = if i + 1 < n { s[i + 1] - s[i] } else { f64::INFINITY };
            total += l.min(r);
        }
        return Ok(total / n as f64);
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| cloud.point(a)[0].partial_cmp(&cloud.point(b)[0]).unwrap());
    let dist = |a: usize, b: usize| -> f64 {
        cloud
            .point(a)
            .iter()
            .zip(cloud.point(b))
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };
    let mut total = 0.0;
    for (pos, &i) in idx.iter().enumerate() {
        let x = cloud.point(i)[0];
        let mut best = f64::INFINITY;
        for &j in idx[pos + 1..].iter() {
            if cloud.point(j)[0] - x >= best {
                break;
            }
            best = best.min(dist(i, j));
        }
        for &j in idx[..pos].iter().rev() {
            if x - cloud.point(j)[0] >= best {
                break;
            }
            best = best.min(dist(i, j));
        }
        total += best;
    }
    Ok(total / n as f64)
}

fn translated_to_origin(cloud: &PointCloud) -> Result<PointCloud> {
    let (lo, _) = cloud.bounding_box();
    let m = cloud.m();
    let coords = cloud.coords().iter().enumerate().map(|(i, c)| c - lo[i % m]).collect();
    PointCloud::new(m, coords, CloudMeta { ..cloud.meta.clone() })
}

/// Half the available log-range, and at least a decade, so that each window
/// averages several log-periods of a self-similar set.
pub fn chain_window(lo: f64, hi: f64) -> f64 {
    (0.5 * (hi / lo).ln()).max(fit::DECADE)
}

/// Box-dimension estimate from counts at x = λ^k within [x_lo, x_hi], with [`chain_window`] windows.
pub fn box_estimate_in_range(
    cloud: &PointCloud,
    lambda: f64,
    x_lo: f64,
    x_hi: f64,
    variant: Variant,
) -> Result<DimensionEstimate> {
    if !(lambda > 1.0) {
        return Err(Error::Domain("lambda must exceed 1".into()));
    }
    if !(x_hi > x_lo && x_lo > 0.0) {
        return Err(Error::Domain(format!("empty scale range [{x_lo}, {x_hi}]")));
    }
    let k_min = (x_lo.ln() / lambda.ln()).ceil() as i32;
    let k_max = (x_hi.ln() / lambda.ln()).floor() as i32;
    dimension_estimate_windowed(cloud, lambda, k_min, k_max, variant, chain_window(x_lo, x_hi))
}

/// The scale range used by the box legs: from 4/diam to 1/(2δ).
pub fn box_scale_range(cloud: &PointCloud, delta: f64) -> (f64, f64) {
    (4.0 / cloud.diameter_bound(), 1.0 / (2.0 * delta))
}

fn box_leg(cloud: &PointCloud, lambda: f64, x_lo: f64, x_hi: f64, variant: Variant) -> Result<(f64, Option<f64>)> {
    let e = box_estimate_in_range(cloud, lambda, x_lo, x_hi, variant)?;
    Ok((e.upper, Some(e.lower)))
}

fn counting_leg(cloud: &PointCloud, x_lo: f64, x_hi: f64, per_decade: usize) -> Result<(f64, Option<f64>)> {
    let xs = fit::geometric_grid(x_lo, x_hi, per_decade);
    let ex = if cloud.m() == 1 {
        let sorted = cloud.sorted_1d()?;
        let samples = xs
            .iter()
            .map(|&x| Ok((x, diam_cover_1d(&sorted, x)?)))
            .collect::<Result<Vec<_>>>()?;
        let curve = BoxCountCurve {
            variant: Variant::DiamCover,
            samples,
        };
        let count = |x: f64| diam_cover_1d(&sorted, x);
        boxcount::extract_box_counting_string(
            CurveSource::Refined {
                curve: &curve,
                count: &count,
            },
            x_hi,
        )?
    } else {
        let curve = BoxCountCurve::sample(cloud, Variant::MeshCount, &xs)?.monotone_envelope();
        boxcount::extract_box_counting_string(CurveSource::Sampled(&curve), x_hi)?
    };
    let l = ex.string.scales();
    let width = chain_window(1.0 / l[0].l, 1.0 / l[l.len() - 1].l);
    let est = ex.string.order_of_counting_function_windowed(
        GridSpec {
            per_decade,
            ..Default::default()
        },
        width,
    )?;
    Ok((est.value, None))
}

/// Runs every leg; a leg that cannot be computed records its error.
pub fn dimension_chain(cloud: &PointCloud, spec: &ChainSpec) -> Result<ChainReport> {
    if cloud.len() < 2 {
        return Err(Error::InsufficientData("need at least two points".into()));
    }
    if cloud.m() > 2 {
        return Err(Error::Unsupported("the dimension chain handles m <= 2".into()));
    }
    let delta = match spec.delta {
        Some(d) => d,
        None if cloud.meta.delta > 0.0 => cloud.meta.delta,
        None => mean_nearest_spacing(cloud)?,
    };
    if !(delta > 0.0) {
        return Err(Error::Domain("resolution must be positive".into()));
    }
    let diam = cloud.diameter_bound();
    if !(diam > 0.0) {
        return Err(Error::Degenerate("all points coincide".into()));
    }
    let work = translated_to_origin(cloud)?;
    let mut work = work;
    work.meta.delta = delta;
    let (x_lo, x_hi) = box_scale_range(&work, delta);
    let m = cloud.m();

    let mut legs = vec![
        Leg::from_result("boxMesh", box_leg(&work, spec.lambda, x_lo, x_hi, Variant::MeshCount)),
        Leg::from_result("boxPacking", box_leg(&work, spec.lambda, x_lo, x_hi, Variant::Packing)),
    ];

    let exact1;
    let raster;
    let tf: &dyn TubeVolume = if m == 1 {
        exact1 = ExactTube1d::from_cloud(&work)?;
        &exact1
    } else {
        raster = tube::RasterTube::with_pitch_fraction(&work, spec.raster_fraction)?;
        &raster
    };
    let grid = fit::geometric_grid(delta, diam / 2.0, spec.tube_per_decade);
    let mink = tube::minkowski_estimate(tf, m as f64, &grid).map(|e| (e.dim_upper, Some(e.dim_lower)));
    legs.push(Leg::from_result("minkowski", mink));
    legs.push(Leg::from_result(
        "countingOrder",
        counting_leg(&work, 0.5 / diam, x_hi, spec.per_decade),
    ));
    let div = distzeta::divergence_threshold(
        tf,
        diam / 4.0,
        BandSpec {
            t_min: delta,
            t_max: diam / 4.0,
            per_decade: 4,
            nodes: 6,
        },
    )
    .map(|r| (r.threshold, None));
    legs.push(Leg::from_result("divergenceThreshold", div));

    let ups: Vec<f64> = legs.iter().filter_map(|l| l.upper).collect();
    let mut discrepancy = 0.0f64;
    for i in 0..ups.len() {
        for j in i + 1..ups.len() {
            discrepancy = discrepancy.max((ups[i] - ups[j]).abs());
        }
    }
    Ok(ChainReport {
        m,
        points: cloud.len(),
        delta,
        legs,
        discrepancy,
    })
}
