use std::fs::File;
use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fraczeta_core::boxcount::{
    self, AnalyticCurve, AnalyticSet, BoxCountCurve, CurveSource, PointCloud, TessellationSource, Variant,
};
use fraczeta_core::chain::{self, ChainReport, ChainSpec};
use fraczeta_core::distzeta::{self, LogPeriodicOutcome};
use fraczeta_core::ifs::{IfsSpec, LatticeInfo, MoranSolution};
use fraczeta_core::strings::FractalString;
use fraczeta_core::tube::{self, ExactTube1d, MinkowskiEstimate, ProbeSpec, RasterTube, TubeFunction, TubeVolume};
use fraczeta_core::zeta::{self, PoleRow, Window};
use fraczeta_core::{fit, golden, Error};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(
    name = "fraczeta",
    version,
    about = "Fractal dimensions, fractal strings and their zeta functions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Every dimension leg of a point cloud and their largest disagreement.
    Dim(DimArgs),
    /// Box-counting or tessellation fractal string of a set.
    String(StringArgs),
    /// Sweep a zeta function over a rectangle of s values.
    Zeta(ZetaArgs),
    /// Complex dimensions and residues of a lattice string.
    Poles(PolesArgs),
    /// Tube function, Minkowski estimates and log-periodic analysis.
    Tube(TubeArgs),
    /// Similarity dimension from the Moran equation.
    Moran(MoranArgs),
    /// Built-in golden checks.
    Verify(OutArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum AnalyticName {
    Cantor,
    Setf,
    Astring,
    Square,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum FormName {
    Cantor,
    CantorBox,
    Setf,
    SetfTess,
    Astring,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum StringKind {
    Box,
    Tessellation,
}

#[derive(Args, Debug, Clone)]
struct OutArgs {
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct CloudArgs {
    /// Point cloud CSV (header x1[,x2,...]).
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum)]
    analytic: Option<AnalyticName>,
    /// Construction depth (cantor, setf) or size (astring points, square side).
    #[arg(long)]
    depth: Option<u32>,
    /// Resolution of the cloud.
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Args, Debug)]
struct DimArgs {
    #[command(flatten)]
    cloud: CloudArgs,
    #[arg(long, default_value_t = 2.0)]
    lambda: f64,
    #[arg(long, default_value_t = 20)]
    per_decade: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct StringArgs {
    #[command(flatten)]
    cloud: CloudArgs,
    #[arg(long, value_enum, default_value = "box")]
    kind: StringKind,
    #[arg(long, value_parser = parse_variant)]
    variant: Option<Variant>,
    /// Grid base: counts at x = lambda^k (box), or tile side lambda^n (tessellation).
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    kmin: Option<i32>,
    #[arg(long, allow_hyphen_values = true)]
    kmax: Option<i32>,
    /// Largest x for analytic curves.
    #[arg(long, default_value_t = 1e9)]
    xmax: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct ZetaArgs {
    #[command(flatten)]
    cloud: CloudArgs,
    #[arg(long, value_enum)]
    form: Option<FormName>,
    /// Fractal string JSON, used when --input is not given.
    #[arg(long)]
    string: Option<PathBuf>,
    /// Neighbourhood radius; switches to the distance zeta function.
    #[arg(long)]
    eps: Option<f64>,
    /// re0,re1,im0,im1,nre,nim
    #[arg(long, value_parser = parse_rect, allow_hyphen_values = true)]
    s_rect: SRect,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct PolesArgs {
    #[arg(long, value_enum)]
    form: Option<FormName>,
    /// Fractal string JSON.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 20.0)]
    tmax: f64,
    #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
    sigma_min: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct TubeArgs {
    /// Point cloud CSV, or a tube function CSV with header eps,vol.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum)]
    analytic: Option<AnalyticName>,
    #[arg(long)]
    depth: Option<u32>,
    #[arg(long)]
    delta: Option<f64>,
    /// Ambient dimension of a tube function CSV.
    #[arg(long, default_value_t = 1)]
    m: usize,
    /// Largest ε sampled.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    eps_min: Option<f64>,
    #[arg(long, default_value_t = 40)]
    per_decade: usize,
    /// Dimension used to normalise the tube function; defaults to the known or estimated value.
    #[arg(long)]
    dim: Option<f64>,
    #[arg(long, default_value_t = 3)]
    kmax: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct MoranArgs {
    #[arg(long, value_delimiter = ',')]
    ratios: Option<Vec<f64>>,
    /// IFS JSON.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum)]
    analytic: Option<AnalyticName>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct SRect {
    re0: f64,
    re1: f64,
    im0: f64,
    im1: f64,
    nre: usize,
    nim: usize,
}

impl SRect {
    fn points(&self) -> Vec<Complex64> {
        let axis = |a: f64, b: f64, n: usize| -> Vec<f64> {
            if n == 1 {
                vec![a]
            } else {
                (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
            }
        };
        let res = axis(self.re0, self.re1, self.nre);
        let ims = axis(self.im0, self.im1, self.nim);
        res.iter()
            .flat_map(|&re| ims.iter().map(move |&im| Complex64::new(re, im)))
            .collect()
    }
}

fn parse_rect(s: &str) -> Result<SRect, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 6 {
        return Err("expected re0,re1,im0,im1,nre,nim".into());
    }
    let f = |i: usize| parts[i].parse::<f64>().map_err(|e| format!("{}: {e}", parts[i]));
    let n = |i: usize| parts[i].parse::<usize>().map_err(|e| format!("{}: {e}", parts[i]));
    let r = SRect {
        re0: f(0)?,
        re1: f(1)?,
        im0: f(2)?,
        im1: f(3)?,
        nre: n(4)?,
        nim: n(5)?,
    };
    if r.nre == 0 || r.nim == 0 || r.nre * r.nim > 1_000_000 {
        return Err("grid counts must be positive with at most 10^6 points".into());
    }
    if ![r.re0, r.re1, r.im0, r.im1].iter().all(|v| v.is_finite()) {
        return Err("rectangle corners must be finite".into());
    }
    Ok(r)
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    Variant::ALL
        .iter()
        .copied()
        .find(|v| v.name().eq_ignore_ascii_case(s))
        .ok_or_else(|| {
            let names: Vec<&str> = Variant::ALL.iter().map(|v| v.name()).collect();
            format!("unknown variant {s:?}; expected one of {}", names.join(", "))
        })
}

/// Failure classes map onto the exit codes 1 (usage), 2 (data), 3 (numeric).
#[derive(Debug)]
enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Core(Error::Io(e.to_string()))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Core(Error::Parse(e.to_string()))
    }
}

type CmdResult<T> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> CmdResult<T> {
    Err(Failure::Usage(msg.into()))
}

fn positive(name: &str, v: Option<f64>) -> CmdResult<()> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => usage(format!("--{name} must be a positive finite number")),
        _ => Ok(()),
    }
}

fn open(path: &Path) -> CmdResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::Core(Error::Io(format!("{}: {e}", path.display()))))
}

fn read_to_string(path: &Path) -> CmdResult<String> {
    let mut s = String::new();
    open(path)?.read_to_string(&mut s)?;
    Ok(s)
}

struct LoadedCloud {
    cloud: PointCloud,
    /// Dimension of the generating set when it is known in closed form.
    known_dim: Option<f64>,
}

fn load_cloud(a: &CloudArgs) -> CmdResult<LoadedCloud> {
    positive("delta", a.delta)?;
    let mut out = match (&a.input, a.analytic) {
        (Some(_), Some(_)) => return usage("give either --input or --analytic, not both"),
        (None, None) => return usage("a point cloud is required: --input PATH or --analytic NAME"),
        (Some(p), None) => LoadedCloud {
            cloud: PointCloud::read_csv(open(p)?, a.delta.unwrap_or(0.0))?,
            known_dim: None,
        },
        (None, Some(name)) => analytic_cloud(name, a.depth)?,
    };
    if let Some(d) = a.delta {
        out.cloud.meta.delta = d;
    }
    Ok(out)
}

fn analytic_cloud(name: AnalyticName, depth: Option<u32>) -> CmdResult<LoadedCloud> {
    Ok(match name {
        AnalyticName::Cantor => LoadedCloud {
            cloud: golden::cantor_endpoints(depth.unwrap_or(12).min(20)),
            known_dim: Some(2f64.ln() / 3f64.ln()),
        },
        AnalyticName::Setf => LoadedCloud {
            cloud: golden::setf_ifs().generate_attractor(depth.unwrap_or(6))?,
            known_dim: Some(1.0),
        },
        AnalyticName::Astring => LoadedCloud {
            cloud: golden::a_string_cloud(depth.unwrap_or(10_000).max(2) as usize),
            known_dim: Some(0.5),
        },
        AnalyticName::Square => LoadedCloud {
            cloud: golden::unit_square_grid(depth.unwrap_or(256).clamp(2, 4096) as usize),
            known_dim: Some(2.0),
        },
    })
}

fn form_string(f: FormName) -> Option<FractalString> {
    match f {
        FormName::Cantor => Some(golden::cantor_string()),
        FormName::CantorBox => Some(golden::cantor_box_string()),
        FormName::Setf => Some(golden::setf_box_string()),
        FormName::SetfTess => Some(golden::setf_tessellation_string()),
        FormName::Astring => None,
    }
}

fn load_string(path: &Path) -> CmdResult<FractalString> {
    Ok(serde_json::from_reader(open(path)?)?)
}

fn emit(out: &OutArgs, body: &str) -> CmdResult<()> {
    match &out.output {
        Some(p) => {
            let mut f = File::create(p).map_err(|e| Failure::Core(Error::Io(format!("{}: {e}", p.display()))))?;
            f.write_all(body.as_bytes())?;
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn json_line<T: Serialize>(v: &T) -> CmdResult<String> {
    Ok(serde_json::to_string(v)? + "\n")
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn cmd_dim(a: &DimArgs) -> CmdResult<String> {
    if !(a.lambda > 1.0 && a.lambda.is_finite()) {
        return usage("--lambda must exceed 1");
    }
    if a.per_decade < 2 {
        return usage("--per-decade must be at least 2");
    }
    let loaded = load_cloud(&a.cloud)?;
    let spec = ChainSpec {
        lambda: a.lambda,
        per_decade: a.per_decade,
        ..Default::default()
    };
    let report: ChainReport = chain::dimension_chain(&loaded.cloud, &spec)?;
    match a.out.format {
        Format::Json => json_line(&report),
        Format::Csv => Ok(csv_text(
            &["leg", "upper", "lower", "error"],
            report.legs.iter().map(|l| {
                vec![
                    l.leg.clone(),
                    opt_num(l.upper),
                    opt_num(l.lower),
                    l.error.clone().map(|e| format!("{e:?}")).unwrap_or_default(),
                ]
            }),
        )),
    }
}

fn string_csv(s: &FractalString) -> String {
    csv_text(
        &["l", "m"],
        s.scales().iter().map(|sc| vec![num(sc.l), sc.m.to_string()]),
    )
}

fn cmd_string(a: &StringArgs) -> CmdResult<String> {
    positive("lambda", a.lambda)?;
    positive("xmax", Some(a.xmax))?;
    let s = match (a.kind, a.cloud.analytic, &a.cloud.input) {
        (_, Some(_), Some(_)) => return usage("give either --input or --analytic, not both"),
        (StringKind::Box, Some(name), None) => {
            let curve = match name {
                AnalyticName::Cantor => AnalyticCurve::CantorDiam,
                AnalyticName::Setf => AnalyticCurve::SetFPacking,
                _ => return usage("analytic box-counting curves exist for cantor and setf only"),
            };
            if let Some(v) = a.variant {
                if v != curve.variant() {
                    return usage(format!(
                        "the analytic {name:?} curve uses the {} variant",
                        curve.variant().name()
                    ));
                }
            }
            boxcount::extract_box_counting_string(CurveSource::Analytic(curve), a.xmax)?.string
        }
        (StringKind::Tessellation, Some(name), None) => {
            let (set, lambda) = match name {
                AnalyticName::Cantor => (AnalyticSet::Cantor, 1.0 / 3.0),
                AnalyticName::Setf => (AnalyticSet::SetF, 0.25),
                _ => return usage("analytic tessellation counts exist for cantor and setf only"),
            };
            let lambda = a.lambda.unwrap_or(lambda);
            let (lo, hi) = n_range(a, 1, 10)?;
            boxcount::tessellation_string(TessellationSource::Analytic(set), lambda, lo, hi)?
        }
        (StringKind::Box, None, Some(_)) => {
            let Some(variant) = a.variant else {
                return usage("--variant is required for a cloud box-counting string");
            };
            let cloud = load_cloud(&a.cloud)?.cloud;
            cloud_box_string(&cloud, variant, a)?
        }
        (StringKind::Tessellation, None, Some(_)) => {
            let cloud = load_cloud(&a.cloud)?.cloud;
            let lambda = a.lambda.unwrap_or(0.5);
            if lambda >= 1.0 {
                return usage("--lambda must lie in (0, 1) for tessellations");
            }
            let (lo, hi) = n_range(a, 1, 8)?;
            boxcount::tessellation_string(TessellationSource::Cloud(&cloud), lambda, lo, hi)?
        }
        (_, None, None) => return usage("a source is required: --input PATH or --analytic NAME"),
    };
    match a.out.format {
        Format::Json => json_line(&s),
        Format::Csv => Ok(string_csv(&s)),
    }
}

fn n_range(a: &StringArgs, lo: i32, hi: i32) -> CmdResult<(u32, u32)> {
    let lo = a.kmin.unwrap_or(lo);
    let hi = a.kmax.unwrap_or(hi);
    if lo < 0 || hi < lo {
        return usage("tessellation levels need 0 <= kmin <= kmax");
    }
    Ok((lo as u32, hi as u32))
}

fn cloud_box_string(cloud: &PointCloud, variant: Variant, a: &StringArgs) -> CmdResult<FractalString> {
    let lambda = a.lambda.unwrap_or(2.0);
    if lambda <= 1.0 {
        return usage("--lambda must exceed 1 for box counts");
    }
    let diam = cloud.diameter_bound();
    if !(diam > 0.0) {
        return Err(Error::Degenerate("all points coincide".into()).into());
    }
    let delta = if cloud.meta.delta > 0.0 {
        cloud.meta.delta
    } else {
        chain::mean_nearest_spacing(cloud)?
    };
    let kmin = a.kmin.unwrap_or(((0.5 / diam).ln() / lambda.ln()).floor() as i32);
    let kmax = a.kmax.unwrap_or(((0.5 / delta).ln() / lambda.ln()).floor() as i32);
    if kmax < kmin + 2 {
        return usage("--kmin/--kmax must span at least 3 grid exponents");
    }
    let xs: Vec<f64> = (kmin..=kmax).map(|k| lambda.powi(k)).collect();
    let x_hi = *xs.last().unwrap();
    if 1.0 / x_hi < cloud.meta.delta {
        return Err(Error::Domain(format!(
            "scale 1/x = {} is finer than the cloud resolution {}",
            1.0 / x_hi,
            cloud.meta.delta
        ))
        .into());
    }
    let curve = BoxCountCurve::sample(cloud, variant, &xs)?;
    let ex = if cloud.m() == 1 && variant == Variant::DiamCover {
        let sorted = cloud.sorted_1d()?;
        let count = |x: f64| boxcount::diam_cover_1d(&sorted, x);
        boxcount::extract_box_counting_string(
            CurveSource::Refined {
                curve: &curve,
                count: &count,
            },
            x_hi,
        )?
    } else {
        let env = curve.monotone_envelope();
        boxcount::extract_box_counting_string(CurveSource::Sampled(&env), x_hi)?
    };
    if let Some(w) = &ex.warning {
        eprintln!("warning: {w}");
    }
    Ok(ex.string)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct ZetaRow {
    re: f64,
    im: f64,
    zeta_re: f64,
    zeta_im: f64,
    err: f64,
}

fn cmd_zeta(a: &ZetaArgs) -> CmdResult<String> {
    positive("eps", a.eps)?;
    let has_cloud = a.cloud.input.is_some() || a.cloud.analytic.is_some();
    let sources = [a.form.is_some(), a.string.is_some(), has_cloud]
        .iter()
        .filter(|b| **b)
        .count();
    if sources != 1 {
        return usage("give exactly one of --form, --string, or a cloud (--input/--analytic)");
    }
    let pts = a.s_rect.points();
    let mut rows = Vec::with_capacity(pts.len());
    if has_cloud {
        let Some(eps) = a.eps else {
            return usage("--eps is required for the distance zeta function of a cloud");
        };
        let cloud = load_cloud(&a.cloud)?.cloud;
        for s in pts {
            let z = distzeta::distance_zeta(&cloud, eps, s, None, a.seed)?;
            if let Some(w) = &z.warning {
                eprintln!("warning at s = {s}: {w}");
            }
            rows.push(row(s, z.value, z.error_estimate));
        }
    } else if a.form == Some(FormName::Astring) {
        for s in pts {
            let v = match a.eps {
                Some(eps) => distzeta::a_string_distance_zeta(eps, s)?,
                None => {
                    if s.re <= 0.5 {
                        return Err(Error::Divergent {
                            re: s.re,
                            abscissa: 0.5,
                        }
                        .into());
                    }
                    distzeta::a_string_zeta(s)
                }
            };
            rows.push(row(s, v, 0.0));
        }
    } else {
        let st = match (a.form, &a.string) {
            (Some(f), _) => form_string(f).unwrap(),
            (None, Some(p)) => load_string(p)?,
            _ => unreachable!(),
        };
        let closed = zeta::lattice_closed_form(&st).ok();
        for s in pts {
            let (v, err) = match (a.eps, &closed) {
                (Some(eps), _) => (distzeta::distance_zeta_string_form(&st, eps, s)?, 0.0),
                (None, Some(form)) => (form.eval(s), 0.0),
                (None, None) => {
                    let d = zeta::eval_dirichlet(&st, s)?;
                    (d.value, d.tail_bound)
                }
            };
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::Numeric(format!("zeta is not finite at s = {s} (a pole)")).into());
            }
            rows.push(row(s, v, err));
        }
    }
    match a.out.format {
        Format::Json => json_line(&rows),
        Format::Csv => Ok(csv_text(
            &["re", "im", "zeta_re", "zeta_im", "err"],
            rows.iter()
                .map(|r| vec![num(r.re), num(r.im), num(r.zeta_re), num(r.zeta_im), num(r.err)]),
        )),
    }
}

fn row(s: Complex64, v: Complex64, err: f64) -> ZetaRow {
    ZetaRow {
        re: s.re,
        im: s.im,
        zeta_re: v.re,
        zeta_im: v.im,
        err,
    }
}

fn cmd_poles(a: &PolesArgs) -> CmdResult<String> {
    positive("tmax", Some(a.tmax))?;
    if !a.sigma_min.is_finite() {
        return usage("--sigma-min must be finite");
    }
    let st = match (a.form, &a.input) {
        (Some(FormName::Astring), None) => {
            return Err(Error::NotLattice.into());
        }
        (Some(f), None) => form_string(f).unwrap(),
        (None, Some(p)) => load_string(p)?,
        _ => return usage("give exactly one of --form or --input"),
    };
    let form = zeta::lattice_closed_form(&st)?;
    let poles = form.poles_in_window(Window {
        sigma_min: a.sigma_min,
        t_max: a.tmax,
    });
    let rows: Vec<PoleRow> = poles.iter().map(PoleRow::from).collect();
    match a.out.format {
        Format::Json => json_line(&rows),
        Format::Csv => Ok(csv_text(
            &["re", "im", "res_re", "res_im"],
            rows.iter()
                .map(|r| vec![num(r.re), num(r.im), num(r.res_re), num(r.res_im)]),
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TubeReport {
    m: usize,
    eps_min: f64,
    eps_max: f64,
    samples: usize,
    minkowski: MinkowskiEstimate,
    /// Dimension used for the log-periodic normalisation.
    dimension: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    log_periodic: Option<LogPeriodicOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    log_periodic_error: Option<String>,
}

fn sniff_tube_csv(path: &Path) -> CmdResult<bool> {
    let text = read_to_string(path)?;
    let header = text.lines().next().unwrap_or("");
    Ok(header.replace(' ', "") == "eps,vol")
}

fn cmd_tube(a: &TubeArgs) -> CmdResult<String> {
    positive("eps", a.eps)?;
    positive("eps-min", a.eps_min)?;
    if a.per_decade < 2 {
        return usage("--per-decade must be at least 2");
    }
    if let Some(d) = a.dim {
        if !(d.is_finite() && d >= 0.0) {
            return usage("--dim must be a nonnegative number");
        }
    }
    let tube_csv = match &a.input {
        Some(p) if a.analytic.is_none() => sniff_tube_csv(p)?,
        _ => false,
    };
    let cloud_args = CloudArgs {
        input: a.input.clone(),
        analytic: a.analytic,
        depth: a.depth,
        delta: a.delta,
    };
    let mut known = None;
    let tf = if tube_csv {
        let f = TubeFunction::read_csv(open(a.input.as_ref().unwrap())?, a.m)?;
        let lo = f.samples[0].0;
        let hi = f.samples[f.samples.len() - 1].0;
        let grid = grid_between(a.eps_min.unwrap_or(lo), a.eps.unwrap_or(hi), a.per_decade)?;
        TubeFunction::sample(&f, &grid)?
    } else {
        let loaded = load_cloud(&cloud_args)?;
        known = loaded.known_dim;
        let cloud = loaded.cloud;
        let diam = cloud.diameter_bound();
        let delta = if cloud.meta.delta > 0.0 {
            cloud.meta.delta
        } else {
            chain::mean_nearest_spacing(&cloud)?
        };
        let grid = grid_between(
            a.eps_min.unwrap_or(10.0 * delta),
            a.eps.unwrap_or(diam / 4.0),
            a.per_decade,
        )?;
        match cloud.m() {
            1 => TubeFunction::sample(&ExactTube1d::from_cloud(&cloud)?, &grid)?,
            2 => TubeFunction::sample(&RasterTube::new(&cloud)?, &grid)?,
            m => return Err(Error::Unsupported(format!("tube volumes for m = {m}")).into()),
        }
    };
    let eps_min = tf.samples[0].0;
    let eps_max = tf.samples[tf.samples.len() - 1].0;
    if let Format::Csv = a.out.format {
        let mut buf = Vec::new();
        tf.write_csv(&mut buf)?;
        return Ok(String::from_utf8(buf).expect("csv output is utf-8"));
    }
    let grid: Vec<f64> = tf.samples.iter().map(|s| s.0).collect();
    let dims = tube::minkowski_estimate(&tf, tf.m as f64, &grid)?;
    let d = a.dim.or(known).unwrap_or(dims.dim_upper);
    let mink = tube::minkowski_estimate(&tf, d, &grid)?;
    let (log_periodic, log_periodic_error) =
        match distzeta::log_periodic_analysis(&tf, d, a.kmax, &ProbeSpec::for_eps(eps_min, eps_max)) {
            Ok(o) => (Some(o), None),
            Err(e) => (None, Some(e.to_string())),
        };
    json_line(&TubeReport {
        m: tf.m(),
        eps_min,
        eps_max,
        samples: tf.samples.len(),
        minkowski: mink,
        dimension: d,
        log_periodic,
        log_periodic_error,
    })
}

fn grid_between(lo: f64, hi: f64, per_decade: usize) -> CmdResult<Vec<f64>> {
    if !(hi > lo) {
        return usage(format!("empty ε range [{lo}, {hi}]"));
    }
    Ok(fit::geometric_grid(lo, hi, per_decade))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MoranReport {
    #[serde(flatten)]
    solution: MoranSolution,
    lattice: LatticeInfo,
}

fn cmd_moran(a: &MoranArgs) -> CmdResult<String> {
    let given = [a.ratios.is_some(), a.input.is_some(), a.analytic.is_some()];
    if given.iter().filter(|b| **b).count() != 1 {
        return usage("give exactly one of --ratios, --input or --analytic");
    }
    let spec = if let Some(r) = &a.ratios {
        if r.iter().any(|x| !(*x > 0.0 && *x < 1.0)) {
            return usage("every ratio must lie in (0, 1)");
        }
        IfsSpec::from_ratios(r)?
    } else if let Some(p) = &a.input {
        serde_json::from_reader(open(p)?)?
    } else {
        match a.analytic.unwrap() {
            AnalyticName::Cantor => golden::cantor_ifs(),
            AnalyticName::Setf => golden::setf_ifs(),
            other => return usage(format!("{other:?} is not generated by a similarity system")),
        }
    };
    let report = MoranReport {
        solution: spec.moran_solve(),
        lattice: spec.classify_lattice(1e-9),
    };
    match a.out.format {
        Format::Json => json_line(&report),
        Format::Csv => Ok(csv_text(
            &["dimension", "residual", "exceeds_ambient", "is_lattice", "r", "period"],
            [vec![
                num(report.solution.dimension),
                num(report.solution.residual),
                report.solution.exceeds_ambient.to_string(),
                report.lattice.is_lattice.to_string(),
                num(report.lattice.r),
                num(report.lattice.period),
            ]],
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Check {
    name: String,
    passed: bool,
    value: f64,
    tolerance: f64,
}

fn check(name: &str, value: f64, tol: f64) -> Check {
    Check {
        name: name.to_string(),
        passed: value.abs() <= tol,
        value,
        tolerance: tol,
    }
}

fn verify_checks() -> CmdResult<Vec<Check>> {
    let d_cantor = 2f64.ln() / 3f64.ln();
    let mut out = Vec::new();

    let chain = chain::dimension_chain(&golden::cantor_endpoints(12), &ChainSpec::default())?;
    let worst = chain
        .legs
        .iter()
        .map(|l| l.upper.map(|u| (u - d_cantor).abs()).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    out.push(check("cantor-chain-legs", worst, 0.05));
    out.push(check("cantor-chain-discrepancy", chain.discrepancy, 0.05));

    let ex = boxcount::extract_box_counting_string(CurveSource::Analytic(AnalyticCurve::CantorDiam), 1e9)?;
    let same = ex.string == golden::cantor_box_string();
    out.push(check("cantor-box-string", if same { 0.0 } else { 1.0 }, 0.0));

    let form = zeta::lattice_closed_form(&golden::cantor_string())?;
    let mut worst = 0.0f64;
    for s in [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.8, 5.0),
        Complex64::new(2.0, -3.0),
    ] {
        let direct = zeta::dirichlet_partial_sum(&golden::cantor_string(), s, 1e-15)?.value;
        worst = worst.max((form.eval(s) - direct).norm() / direct.norm());
    }
    out.push(check("cantor-closed-form", worst, 1e-10));

    let poles = zeta::lattice_closed_form(&golden::cantor_box_string())?.poles_in_window(Window {
        sigma_min: -10.0,
        t_max: 20.0,
    });
    let period = zeta::TWO_PI / 3f64.ln();
    let mut worst = if poles.len() == 7 { 0.0f64 } else { f64::INFINITY };
    for p in &poles {
        let k = (p.location.im / period).round();
        worst = worst
            .max((p.location - Complex64::new(d_cantor, k * period)).norm())
            .max((p.residue - Complex64::new(1.0 / 3f64.ln(), 0.0)).norm());
    }
    out.push(check("cantor-box-poles", worst, 1e-12));

    let moran = IfsSpec::from_ratios(&[0.25; 4])?.moran_solve();
    out.push(check("moran-four-quarters", moran.dimension - 1.0, 1e-12));
    let moran = golden::cantor_ifs().moran_solve();
    out.push(check("moran-cantor", moran.dimension - d_cantor, 1e-12));

    let cloud = golden::cantor_endpoints(12);
    let mut worst = 0.0f64;
    for s in [Complex64::new(1.0, 0.0), Complex64::new(0.7, 3.0)] {
        worst = worst.max(distzeta::identity_check(&cloud, 1.0 / 6.0, s, 0)?.gap);
    }
    out.push(check("cantor-distance-tube-identity", worst, 1e-6));

    let res = distzeta::residue_closed_form(&golden::cantor_string())?;
    out.push(check(
        "cantor-distance-residue",
        res - 2f64.powf(-d_cantor) / 2f64.ln(),
        1e-12,
    ));
    Ok(out)
}

fn cmd_verify(a: &OutArgs) -> CmdResult<(String, bool)> {
    let checks = verify_checks()?;
    let ok = checks.iter().all(|c| c.passed);
    let body = match a.format {
        Format::Json => json_line(&checks)?,
        Format::Csv => csv_text(
            &["name", "passed", "value", "tolerance"],
            checks
                .iter()
                .map(|c| vec![c.name.clone(), c.passed.to_string(), num(c.value), num(c.tolerance)]),
        ),
    };
    Ok((body, ok))
}

fn run(cli: Cli) -> CmdResult<bool> {
    let (body, out, ok) = match &cli.command {
        Command::Dim(a) => (cmd_dim(a)?, &a.out, true),
        Command::String(a) => (cmd_string(a)?, &a.out, true),
        Command::Zeta(a) => (cmd_zeta(a)?, &a.out, true),
        Command::Poles(a) => (cmd_poles(a)?, &a.out, true),
        Command::Tube(a) => (cmd_tube(a)?, &a.out, true),
        Command::Moran(a) => (cmd_moran(a)?, &a.out, true),
        Command::Verify(a) => {
            let (b, ok) = cmd_verify(a)?;
            (b, a, ok)
        }
    };
    emit(out, &body)?;
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: some checks failed");
            ExitCode::from(3)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_data_error() { 2 } else { 3 })
        }
    }
}
