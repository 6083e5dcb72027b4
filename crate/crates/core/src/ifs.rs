//! Similarity systems x -> r x + b, attractor sampling, the Moran equation
//! and lattice classification.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boxcount::{CloudMeta, PointCloud};
use crate::error::{Error, Result};

pub const DEFAULT_POINT_BUDGET: usize = 10_000_000;
/// Largest continued-fraction denominator tried by [`IfsSpec::classify_lattice`].
pub const MAX_DENOMINATOR: i64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMap {
    pub r: f64,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct IfsSpec {
    m: usize,
    maps: Vec<SimMap>,
    osc: bool,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    m: usize,
    maps: Vec<SimMap>,
    #[serde(default)]
    osc: bool,
}

impl TryFrom<RawSpec> for IfsSpec {
    type Error = Error;
    fn try_from(r: RawSpec) -> Result<Self> {
        IfsSpec::new(r.m, r.maps, r.osc)
    }
}

impl From<IfsSpec> for RawSpec {
    fn from(s: IfsSpec) -> Self {
        RawSpec {
            m: s.m,
            maps: s.maps,
            osc: s.osc,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeInfo {
    pub is_lattice: bool,
    /// Base ratio; meaningful only when `is_lattice`.
    pub r: f64,
    /// Exponents per map (in map order), gcd 1.
    pub k: Vec<u64>,
    /// Oscillatory period log(1/r).
    pub period: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoranSolution {
    pub dimension: f64,
    pub residual: f64,
    /// The root exceeds the ambient dimension (reported, not enforced).
    pub exceeds_ambient: bool,
}

impl IfsSpec {
    pub fn new(m: usize, maps: Vec<SimMap>, osc: bool) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidInput("ambient dimension must be positive".into()));
        }
        if maps.len() < 2 {
            return Err(Error::InvalidInput("an IFS needs at least two maps".into()));
        }
        for (i, f) in maps.iter().enumerate() {
            if !(f.r > 0.0 && f.r < 1.0) {
                return Err(Error::InvalidInput(format!("map {i}: ratio must lie in (0, 1)")));
            }
            if f.b.len() != m || f.b.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "map {i}: translation must be {m} finite numbers"
                )));
            }
        }
        Ok(IfsSpec { m, maps, osc })
    }

    /// Spec with the given ratios and zero translations in dimension 1.
    pub fn from_ratios(ratios: &[f64]) -> Result<Self> {
        let maps = ratios
            .iter()
            .enumerate()
            .map(|(i, &r)| SimMap { r, b: vec![i as f64] })
            .collect();
        IfsSpec::new(1, maps, false)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn maps(&self) -> &[SimMap] {
        &self.maps
    }

    pub fn osc(&self) -> bool {
        self.osc
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.maps.iter().map(|f| f.r).collect()
    }

    fn apply(&self, j: usize, p: &[f64], out: &mut [f64]) {
        let f = &self.maps[j];
        for i in 0..self.m {
            out[i] = f.r * p[i] + f.b[i];
        }
    }

    /// Root of sum r_j^s = 1 by bisection.
    pub fn moran_solve(&self) -> MoranSolution {
        let ratios = self.ratios();
        let f = |s: f64| ratios.iter().map(|r| r.powf(s)).sum::<f64>() - 1.0;
        let mut lo = 0.0;
        let mut hi = 1.0;
        while f(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let d = if f(lo).abs() <= f(hi).abs() { lo } else { hi };
        MoranSolution {
            dimension: d,
            residual: f(d).abs(),
            exceeds_ambient: d > self.m as f64,
        }
    }

    /// Lattice test on log ratios: each log(1/r_j)/log(1/r_min) must be a
    /// continued-fraction convergent p/q (q <= 10^6) within `tol / q`.
    pub fn classify_lattice(&self, tol: f64) -> LatticeInfo {
        let logs: Vec<f64> = self.maps.iter().map(|f| (1.0 / f.r).ln()).collect();
        let base = logs.iter().cloned().fold(f64::INFINITY, f64::min);
        let not_lattice = LatticeInfo {
            is_lattice: false,
            r: f64::NAN,
            k: Vec::new(),
            period: f64::NAN,
        };
        let mut fracs = Vec::with_capacity(logs.len());
        for &x in &logs {
            match rational_approx(x / base, tol) {
                Some(pq) => fracs.push(pq),
                None => return not_lattice,
            }
        }
        let l = fracs.iter().fold(1i64, |acc, &(_, q)| lcm(acc, q));
        let ks: Vec<i64> = fracs.iter().map(|&(p, q)| p * (l / q)).collect();
        let g = ks.iter().fold(0i64, |acc, &k| gcd(acc, k));
        let ks: Vec<u64> = ks.iter().map(|&k| (k / g) as u64).collect();
        let step = base * g as f64 / l as f64;
        let r = (-step).exp();
        for (f, &k) in self.maps.iter().zip(&ks) {
            let approx = (-(step * k as f64)).exp();
            if ((approx - f.r) / f.r).abs() > tol.max(1e-12) {
                return not_lattice;
            }
        }
        LatticeInfo {
            is_lattice: true,
            r,
            k: ks,
            period: step,
        }
    }

    /// Fixed point of the first map.
    pub fn seed(&self) -> Vec<f64> {
        let f = &self.maps[0];
        f.b.iter().map(|b| b / (1.0 - f.r)).collect()
    }

    /// Radius of a ball around the seed that contains the attractor.
    pub fn containing_radius(&self) -> f64 {
        let p = self.seed();
        let rmax = self.maps.iter().map(|f| f.r).fold(0.0, f64::max);
        let mut img = vec![0.0; self.m];
        let mut far: f64 = 0.0;
        for j in 0..self.maps.len() {
            self.apply(j, &p, &mut img);
            let d = img.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            far = far.max(d);
        }
        far / (1.0 - rmax)
    }

    pub fn generate_attractor(&self, depth: u32) -> Result<PointCloud> {
        self.generate_attractor_with_budget(depth, DEFAULT_POINT_BUDGET)
    }

    /// All N^depth images of the seed, ordered lexicographically by map-index
    /// word (outermost map first). `meta.delta` bounds the Hausdorff distance
    /// to the attractor.
    pub fn generate_attractor_with_budget(&self, depth: u32, budget: usize) -> Result<PointCloud> {
        if depth == 0 {
            return Err(Error::Domain("depth must be at least 1".into()));
        }
        let n = self.maps.len();
        let requested = (n as f64).powi(depth as i32);
        if requested > budget as f64 {
            let suggested = ((budget as f64).ln() / (n as f64).ln()).floor().max(1.0) as u32;
            return Err(Error::Resource {
                requested,
                budget,
                suggested_depth: suggested,
            });
        }
        let m = self.m;
        let mut level = self.seed();
        let mut buf = vec![0.0; m];
        for _ in 0..depth {
            let count = level.len() / m;
            let mut next = Vec::with_capacity(level.len() * n);
            for j in 0..n {
                for i in 0..count {
                    self.apply(j, &level[i * m..(i + 1) * m], &mut buf);
                    next.extend_from_slice(&buf);
                }
            }
            level = next;
        }
        let rmax = self.maps.iter().map(|f| f.r).fold(0.0, f64::max);
        let delta = 2.0 * self.containing_radius() * rmax.powi(depth as i32);
        PointCloud::new(
            m,
            level,
            CloudMeta {
                source: "ifs-deterministic".into(),
                depth: Some(depth),
                delta,
            },
        )
    }

    /// Chaos game: uniform map choice, 100 discarded burn-in steps.
    pub fn chaos_game(&self, points: usize, seed: u64) -> Result<PointCloud> {
        if points == 0 {
            return Err(Error::Domain("need at least one point".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = self.m;
        let mut p = self.seed();
        let mut q = vec![0.0; m];
        let mut out = Vec::with_capacity(points * m);
        for step in 0..points + 100 {
            let j = rng.gen_range(0..self.maps.len());
            self.apply(j, &p, &mut q);
            std::mem::swap(&mut p, &mut q);
            if step >= 100 {
                out.extend_from_slice(&p);
            }
        }
        PointCloud::new(
            m,
            out,
            CloudMeta {
                source: format!("ifs-chaos-game-{seed}"),
                depth: None,
                delta: 0.0,
            },
        )
    }
}

/// Continued-fraction convergent p/q of x with |x - p/q| <= tol / q.
fn rational_approx(x: f64, tol: f64) -> Option<(i64, i64)> {
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1i64, 1i64, 0i64);
    let mut y = x;
    for _ in 0..64 {
        let a = y.floor();
        if a.abs() > 1e12 {
            return None;
        }
        let a = a as i64;
        let p2 = a.checked_mul(p1)?.checked_add(p0)?;
        let q2 = a.checked_mul(q1)?.checked_add(q0)?;
        if q2 > MAX_DENOMINATOR {
            return None;
        }
        if (x - p2 as f64 / q2 as f64).abs() <= tol / q2 as f64 {
            return Some((p2, q2));
        }
        let frac = y - a as f64;
        if frac <= 0.0 {
            return None;
        }
        y = 1.0 / frac;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    None
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: i64, b: i64) -> i64 {
    a / gcd(a, b) * b
}
