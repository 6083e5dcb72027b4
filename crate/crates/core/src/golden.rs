//! Built-in strings, systems and clouds with known closed forms.

use crate::boxcount::{CloudMeta, PointCloud};
use crate::ifs::{IfsSpec, SimMap};
use crate::strings::{FractalString, GeometricTail, Scale};

fn tail(r: f64, g: u64, onset: usize, period: usize) -> Option<GeometricTail> {
    Some(GeometricTail { r, g, onset, period })
}

/// l_n = 3^-n with multiplicity 2^(n-1).
pub fn cantor_string() -> FractalString {
    FractalString::new(vec![Scale { l: 1.0 / 3.0, m: 1 }], tail(1.0 / 3.0, 2, 1, 1)).unwrap()
}

/// Box-counting string of the Cantor set for the diameter-cover variant.
pub fn cantor_box_string() -> FractalString {
    FractalString::new(
        vec![Scale { l: 1.0, m: 2 }, Scale { l: 1.0 / 3.0, m: 2 }],
        tail(1.0 / 3.0, 2, 2, 1),
    )
    .unwrap()
}

/// Box-counting string of the set F for the packing variant.
pub fn setf_box_string() -> FractalString {
    let s2 = std::f64::consts::SQRT_2;
    FractalString::new(
        vec![
            Scale { l: s2 / 2.0, m: 2 },
            Scale {
                l: 17f64.sqrt() / 8.0,
                m: 1,
            },
            Scale { l: 0.5, m: 1 },
            Scale { l: s2 / 8.0, m: 4 },
        ],
        tail(0.25, 4, 2, 3),
    )
    .unwrap()
}

/// Tessellation string of F for lambda = 1/4: l_n = 4^-n, m_n = 9 * 4^n, n >= 1.
pub fn setf_tessellation_string() -> FractalString {
    FractalString::new(vec![Scale { l: 0.25, m: 36 }], tail(0.25, 4, 1, 1)).unwrap()
}

/// l_j = j^-p for j = 1..=n.
pub fn power_string(p: f64, n: usize) -> FractalString {
    let scales = (1..=n)
        .map(|j| Scale {
            l: (j as f64).powf(-p),
            m: 1,
        })
        .collect();
    FractalString::new(scales, None).unwrap()
}

pub fn cantor_ifs() -> IfsSpec {
    IfsSpec::new(
        1,
        vec![
            SimMap {
                r: 1.0 / 3.0,
                b: vec![0.0],
            },
            SimMap {
                r: 1.0 / 3.0,
                b: vec![2.0 / 3.0],
            },
        ],
        true,
    )
    .unwrap()
}

pub fn setf_ifs() -> IfsSpec {
    let q = 0.75;
    IfsSpec::new(
        2,
        [[0.0, 0.0], [q, 0.0], [q, q], [0.0, q]]
            .iter()
            .map(|b| SimMap { r: 0.25, b: b.to_vec() })
            .collect(),
        true,
    )
    .unwrap()
}

/// Both endpoints of every stage-`depth` interval of the Cantor construction,
/// sorted. Hausdorff distance to the Cantor set is 3^-depth / 2.
pub fn cantor_endpoints(depth: u32) -> PointCloud {
    let mut lefts = vec![0.0f64];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(lefts.len() * 2);
        for &a in &lefts {
            next.push(a / 3.0);
        }
        for &a in &lefts {
            next.push(a / 3.0 + 2.0 / 3.0);
        }
        lefts = next;
    }
    let w = 3f64.powi(-(depth as i32));
    let mut pts: Vec<f64> = lefts.iter().flat_map(|&a| [a, a + w]).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    PointCloud::new(
        1,
        pts,
        CloudMeta {
            source: format!("cantor-endpoints-{depth}"),
            depth: Some(depth),
            delta: 0.5 * w,
        },
    )
    .unwrap()
}

/// {1/j : j = 1..=n}; Hausdorff distance to {1/j} ∪ {0} is 1/n.
pub fn a_string_cloud(n: usize) -> PointCloud {
    let mut pts: Vec<f64> = (1..=n).map(|j| 1.0 / j as f64).collect();
    pts.reverse();
    PointCloud::new(
        1,
        pts,
        CloudMeta {
            source: format!("a-string-{n}"),
            depth: None,
            delta: 1.0 / n as f64,
        },
    )
    .unwrap()
}

/// side x side grid of points (i/side, j/side) in the unit square.
pub fn unit_square_grid(side: usize) -> PointCloud {
    let h = 1.0 / side as f64;
    let mut pts = Vec::with_capacity(2 * side * side);
    for i in 0..side {
        for j in 0..side {
            pts.push(i as f64 * h);
            pts.push(j as f64 * h);
        }
    }
    PointCloud::new(
        2,
        pts,
        CloudMeta {
            source: format!("unit-square-grid-{side}"),
            depth: None,
            delta: h * std::f64::consts::SQRT_2,
        },
    )
    .unwrap()
}
