//! Batch driver behind the `nctorus` binary: configuration, sweeps and
//! CSV/JSON tables.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;

use crate::algebra::{random_element, with_coeff_norm, TorusElement, C64};
use crate::ample::{
    ample_check, fingen_check, gen_ample_sequence, module_dims, vanishing_bound, zalgebra_dims, SlopeSequence,
};
use crate::chern::{complete_sl2, dual_spec, fm_chern, fm_slope, gcd, stability, ChernPair, FmSlope};
use crate::dolbeault::{
    build_q, cohomology, euler_char_check, index_homotopy, q_norm_bound, CohomologyOptions, CohomologyResult,
    HoloStructure,
};
use crate::duality::{dual_structure, pairing_t, serre_gram_from};
use crate::error::Error;
use crate::grid::Grid;
use crate::interval::Theta;
use crate::module::{tail_report, BundleSpec, Section, SectionGrid, SectionHermite};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CERTIFICATION: i32 = 3;

const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Parser, Debug)]
#[command(name = "nctorus", version, about = "Cohomology, duality and slope arithmetic for bundles on noncommutative two-tori")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Default)]
pub struct GlobalArgs {
    /// TOML file with run settings; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// `sqrt2-1`, `golden`, or a decimal value.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub theta: Option<String>,
    /// `re,im`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub tau: Option<String>,
    /// Point of the Jacobian, `re,im`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub z: Option<String>,
    /// Bundle `c,d` or `c,d,copies`; repeatable.
    #[arg(long = "bundle", global = true, allow_hyphen_values = true)]
    pub bundles: Vec<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Hermite levels per sector.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Mode band for c = 0.
    #[arg(long, global = true)]
    pub modes: Option<usize>,
    #[arg(long, global = true)]
    pub rel_threshold: Option<f64>,
    #[arg(long, global = true)]
    pub required_gap: Option<f64>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Certified h0 and h1 for each bundle.
    Cohomology {
        /// Coefficient norm of a random perturbation (0 for the standard structure).
        #[arg(long, default_value_t = 0.0)]
        phi_norm: f64,
        #[arg(long, default_value_t = 1)]
        phi_band: u32,
    },
    /// h0 − h1 against the degree over all small coprime (c, d).
    RiemannRochSweep {
        #[arg(long, default_value_t = 3)]
        cmax: i64,
        #[arg(long)]
        dmax: Option<i64>,
        #[arg(long, value_delimiter = ',', default_values_t = [1u32, 2])]
        copies: Vec<u32>,
    },
    /// Norm bound of Q against random vectors and the ladder supremum.
    QBound {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 256)]
        levels: usize,
    },
    /// Index along t ↦ ∇̄ + tφ for random φ.
    IndexHomotopy {
        #[arg(long, default_value_t = 5)]
        trials: usize,
        #[arg(long, default_value_t = 0.1)]
        phi_norm: f64,
        #[arg(long, default_value_t = 1)]
        phi_band: u32,
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.25, 0.5, 0.75, 1.0])]
        t: Vec<f64>,
    },
    /// Gram matrices of the Serre pairing in both degrees.
    SerreCheck,
    /// Coefficients of t(f₁, f₂) for harmonic representatives on E^∨ and E.
    PairingDump {
        #[arg(long, default_value_t = 2)]
        band: u32,
    },
    /// Morita and Fourier–Mukai data of E_{d,c}(θ).
    #[command(allow_negative_numbers = true)]
    MoritaInfo {
        #[arg(allow_hyphen_values = true)]
        c: i64,
        #[arg(allow_hyphen_values = true)]
        d: i64,
    },
    #[command(subcommand)]
    Ample(AmpleCommand),
    /// Localization of harmonic representatives on a grid.
    TailReport {
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 12.0)]
        half_width: f64,
        #[arg(long, default_value_t = 1024)]
        points: usize,
        /// Also write the grid samples of every representative as CSV.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
pub struct SequenceArgs {
    #[arg(long, default_value_t = 50)]
    pub count: usize,
    #[arg(long, default_value_t = 1.0)]
    pub rk_floor: f64,
}

#[derive(Subcommand, Debug)]
pub enum AmpleCommand {
    Gen(SequenceArgs),
    Check(SequenceArgs),
    /// ℤ-algebra dimensions on a window, plus module dimensions for each bundle.
    Dims {
        #[command(flatten)]
        seq: SequenceArgs,
        /// Entry positions `start,end`.
        #[arg(long, default_value = "0,8")]
        window: String,
        #[arg(long, default_value_t = 0.0)]
        phi_norm: f64,
    },
    Fingen {
        #[command(flatten)]
        seq: SequenceArgs,
        #[arg(long, default_value_t = 0.0)]
        phi_norm: f64,
    },
}

/// Contents of the `--config` file. Every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub theta: Option<ThetaValue>,
    pub tau: Option<[f64; 2]>,
    pub z: Option<[f64; 2]>,
    pub bundles: Option<Vec<Vec<i64>>>,
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub modes: Option<usize>,
    pub rel_threshold: Option<f64>,
    pub required_gap: Option<f64>,
    pub jobs: Option<usize>,
    pub format: Option<Format>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum ThetaValue {
    Number(f64),
    Name(String),
}

/// Resolved settings for one run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub theta: Theta,
    pub tau: C64,
    pub z: C64,
    pub bundles: Vec<ChernPair>,
    pub seed: u64,
    pub opts: CohomologyOptions,
    pub jobs: usize,
    pub format: Format,
    pub output: Option<PathBuf>,
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub fn parse_theta(s: &str) -> Result<Theta, Error> {
    match s.trim() {
        "sqrt2-1" => Ok(Theta::sqrt2_minus_1()),
        "golden" => Ok(Theta::golden_conjugate()),
        other => {
            let v: f64 = other.parse().map_err(|_| config_error(format!("theta '{other}' is not a number")))?;
            if !v.is_finite() {
                return Err(config_error("theta must be finite"));
            }
            Ok(Theta::Float(v))
        }
    }
}

pub fn parse_complex(s: &str) -> Result<C64, Error> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [re, im] = parts.as_slice() else {
        return Err(config_error(format!("'{s}' is not of the form re,im")));
    };
    let p = |t: &str| t.parse::<f64>().map_err(|_| config_error(format!("'{t}' is not a number")));
    Ok(C64::new(p(re)?, p(im)?))
}

pub fn parse_bundle(s: &str) -> Result<ChernPair, Error> {
    let v: Result<Vec<i64>, _> = s.split(',').map(|t| t.trim().parse::<i64>()).collect();
    let v = v.map_err(|_| config_error(format!("bundle '{s}' is not c,d[,copies]")))?;
    bundle_from_ints(&v)
}

fn bundle_from_ints(v: &[i64]) -> Result<ChernPair, Error> {
    match *v {
        [c, d] => Ok(ChernPair::new(c, d)),
        [c, d, k] if k >= 1 && k <= u32::MAX as i64 => Ok(ChernPair::with_copies(c, d, k as u32)),
        _ => Err(config_error(format!("bundle {v:?} is not c,d[,copies] with copies >= 1"))),
    }
}

impl RunConfig {
    pub fn resolve(g: &GlobalArgs) -> Result<RunConfig, Error> {
        let file = match &g.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| config_error(format!("{}: {e}", p.display())))?;
                toml::from_str::<FileConfig>(&text).map_err(|e| config_error(format!("{}: {e}", p.display())))?
            }
            None => FileConfig::default(),
        };
        let theta = match (&g.theta, &file.theta) {
            (Some(s), _) => parse_theta(s)?,
            (None, Some(ThetaValue::Name(s))) => parse_theta(s)?,
            (None, Some(ThetaValue::Number(v))) => parse_theta(&v.to_string())?,
            (None, None) => Theta::sqrt2_minus_1(),
        };
        let tau = match (&g.tau, file.tau) {
            (Some(s), _) => parse_complex(s)?,
            (None, Some([re, im])) => C64::new(re, im),
            (None, None) => C64::new(0.0, -1.0),
        };
        let z = match (&g.z, file.z) {
            (Some(s), _) => parse_complex(s)?,
            (None, Some([re, im])) => C64::new(re, im),
            (None, None) => C64::new(0.0, 0.0),
        };
        let bundles = if !g.bundles.is_empty() {
            g.bundles.iter().map(|s| parse_bundle(s)).collect::<Result<Vec<_>, _>>()?
        } else {
            file.bundles.unwrap_or_default().iter().map(|v| bundle_from_ints(v)).collect::<Result<Vec<_>, _>>()?
        };
        let mut opts = CohomologyOptions::default();
        if let Some(n) = g.n.or(file.n) {
            opts.n = n;
        }
        if let Some(m) = g.modes.or(file.modes) {
            opts.modes = m;
        }
        if let Some(t) = g.rel_threshold.or(file.rel_threshold) {
            opts.rel_threshold = t;
        }
        if let Some(t) = g.required_gap.or(file.required_gap) {
            opts.required_gap = t;
        }
        if !(opts.rel_threshold > 0.0 && opts.rel_threshold < 1.0) {
            return Err(config_error(format!("rel_threshold {} must lie in (0, 1)", opts.rel_threshold)));
        }
        if !(opts.required_gap > 1.0) {
            return Err(config_error(format!("required_gap {} must exceed 1", opts.required_gap)));
        }
        if opts.n < 2 {
            return Err(config_error("n must be at least 2"));
        }
        let jobs = g.jobs.or(file.jobs).unwrap_or(4).max(1);
        Ok(RunConfig {
            theta,
            tau,
            z,
            bundles,
            seed: g.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            opts,
            jobs,
            format: g.format.or(file.format).unwrap_or(Format::Csv),
            output: g.output.clone().or(file.output),
        })
    }

    fn theta_value(&self) -> f64 {
        self.theta.value()
    }

    fn require_bundles(&self) -> Result<&[ChernPair], Error> {
        if self.bundles.is_empty() {
            return Err(config_error("no bundles given (use --bundle c,d[,copies])"));
        }
        Ok(&self.bundles)
    }

    fn structure(&self, e: &ChernPair) -> Result<HoloStructure, Error> {
        e.validate(&self.theta)?;
        HoloStructure::standard(BundleSpec::from_pair(e, self.theta_value())?, self.tau, self.z)
    }

    /// Random perturbation acting on the left of `hs`, seeded per bundle.
    fn random_phi(&self, hs: &HoloStructure, norm: f64, band: u32, stream: u64) -> TorusElement {
        let mut rng = rng_for(self.seed, stream);
        let raw = random_element(&mut rng, hs.spec.theta_prime(), hs.spec.copies, band);
        with_coeff_norm(&raw, norm)
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A table cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => fmt_float(*x),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        use serde_json::Value;
        match self {
            Cell::Int(i) => Value::from(*i),
            Cell::Float(x) if x.is_finite() => Value::from(*x),
            Cell::Float(x) => Value::from(fmt_float(*x)),
            Cell::Text(s) => Value::from(s.clone()),
            Cell::Bool(b) => Value::from(*b),
            Cell::Empty => Value::Null,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Cell::Empty => 0,
            Cell::Bool(_) => 1,
            Cell::Int(_) | Cell::Float(_) => 2,
            Cell::Text(_) => 3,
        }
    }

    fn cmp_key(&self, other: &Cell) -> Ordering {
        match (self, other) {
            (Cell::Int(a), Cell::Int(b)) => a.cmp(b),
            (Cell::Int(a), Cell::Float(b)) => (*a as f64).total_cmp(b),
            (Cell::Float(a), Cell::Int(b)) => a.total_cmp(&(*b as f64)),
            (Cell::Float(a), Cell::Float(b)) => a.total_cmp(b),
            (Cell::Text(a), Cell::Text(b)) => a.cmp(b),
            (Cell::Bool(a), Cell::Bool(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        // shortest representation that round-trips
        format!("{x:?}")
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}
impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

macro_rules! row {
    ($($v:expr),* $(,)?) => { vec![$(Cell::from($v)),*] };
}

/// Rows sorted on the first `key` columns before writing.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<&'static str>,
    pub key: usize,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(columns: &[&'static str], key: usize) -> Self {
        Table { meta: Vec::new(), columns: columns.to_vec(), key, rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn sort(&mut self) {
        let k = self.key;
        self.rows.sort_by(|a, b| {
            a[..k].iter().zip(&b[..k]).map(|(x, y)| x.cmp_key(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
        });
    }

    pub fn to_csv(&self) -> Result<String, Error> {
        let mut out = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k}={v}");
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let ser = |e: csv::Error| Error::Serialization(e.to_string());
        w.write_record(&self.columns).map_err(ser)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::csv)).map_err(ser)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Serialization(e.to_string()))?;
        out.push_str(&String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))?);
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String, Error> {
        let meta: serde_json::Map<String, serde_json::Value> =
            self.meta.iter().map(|(k, v)| (k.clone(), serde_json::Value::from(v.clone()))).collect();
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|r| {
                serde_json::Value::Object(self.columns.iter().zip(r).map(|(c, v)| (c.to_string(), v.json())).collect())
            })
            .collect();
        let doc = serde_json::json!({ "meta": meta, "columns": self.columns, "rows": rows });
        Ok(serde_json::to_string_pretty(&doc)? + "\n")
    }
}

/// A finished command: its table and whether every certificate held.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub table: Table,
    pub failures: Vec<String>,
}

impl Outcome {
    fn new(table: Table) -> Self {
        Outcome { table, failures: Vec::new() }
    }
}

/// Status column for a row whose computation failed.
fn status(e: &Error) -> String {
    e.kind().to_string()
}

fn exit_code_for(e: &Error) -> i32 {
    if e.is_certification_failure() {
        EXIT_CERTIFICATION
    } else {
        EXIT_CONFIG
    }
}

fn meta(cfg: &RunConfig, command: &str) -> Vec<(String, String)> {
    let theta = match cfg.theta {
        Theta::Quadratic(q) => format!("({}+{}*sqrt({}))/{}", q.p, q.q, q.d, q.r),
        Theta::Float(t) => fmt_float(t),
    };
    vec![
        ("command".into(), command.into()),
        ("theta".into(), theta),
        ("tau".into(), format!("{},{}", fmt_float(cfg.tau.re), fmt_float(cfg.tau.im))),
        ("z".into(), format!("{},{}", fmt_float(cfg.z.re), fmt_float(cfg.z.im))),
        ("seed".into(), cfg.seed.to_string()),
        ("n".into(), cfg.opts.n.to_string()),
        ("rel_threshold".into(), fmt_float(cfg.opts.rel_threshold)),
        ("required_gap".into(), fmt_float(cfg.opts.required_gap)),
    ]
}

fn pool(cfg: &RunConfig) -> Result<rayon::ThreadPool, Error> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| config_error(format!("worker pool: {e}")))
}

fn cohomology_rows(cfg: &RunConfig, phi_norm: f64, phi_band: u32) -> Result<Outcome, Error> {
    let bundles = cfg.require_bundles()?.to_vec();
    if phi_norm < 0.0 {
        return Err(config_error("phi_norm must be non-negative"));
    }
    let mut structures = Vec::new();
    for (i, e) in bundles.iter().enumerate() {
        let hs = cfg.structure(e)?;
        let hs = if phi_norm > 0.0 {
            let phi = cfg.random_phi(&hs, phi_norm, phi_band, i as u64);
            hs.with_perturbation(crate::dolbeault::Perturbation { element: phi, side: crate::module::Side::Left })?
        } else {
            hs
        };
        structures.push((*e, hs));
    }
    let results: Vec<_> = pool(cfg)?.install(|| {
        structures.par_iter().map(|(e, hs)| (*e, cohomology(hs, &cfg.opts))).collect()
    });
    let mut t = Table::new(
        &["c", "d", "copies", "phi_norm", "h0", "h1", "chi", "deg", "gap_nabla", "gap_adjoint", "status"],
        4,
    );
    let mut out_failures = Vec::new();
    for (e, r) in results {
        let deg = e.copies as i64 * e.c;
        match r {
            Ok(r) => t.push(row![
                e.c, e.d, e.copies, phi_norm, r.h0, r.h1, r.chi, deg,
                r.gap_report.nabla.gap, r.gap_report.adjoint.gap, "ok"
            ]),
            Err(err) => {
                out_failures.push(format!("({}, {}, {}): {err}", e.c, e.d, e.copies));
                t.push(row![e.c, e.d, e.copies, phi_norm, Cell::Empty, Cell::Empty, Cell::Empty, deg, Cell::Empty, Cell::Empty, status(&err)]);
            }
        }
    }
    Ok(Outcome { table: t, failures: out_failures })
}

/// Coprime `(c, d)` with `|c| ≤ cmax`, `|d| ≤ dmax` and certified positive rank.
pub fn sweep_pairs(theta: &Theta, cmax: i64, dmax: i64, copies: &[u32]) -> Vec<ChernPair> {
    let mut out = Vec::new();
    for c in -cmax..=cmax {
        for d in -dmax..=dmax {
            if gcd(c, d) != 1 {
                continue;
            }
            for &k in copies {
                let e = ChernPair::with_copies(c, d, k);
                if e.validate(theta).is_ok() {
                    out.push(e);
                }
            }
        }
    }
    out
}

fn riemann_roch_sweep(cfg: &RunConfig, cmax: i64, dmax: Option<i64>, copies: &[u32]) -> Result<Outcome, Error> {
    if cfg.tau.im >= 0.0 {
        return Err(Error::TauOrientation(cfg.tau.im));
    }
    if cmax < 0 || copies.is_empty() || copies.contains(&0) {
        return Err(config_error("cmax must be non-negative and copies a list of positive integers"));
    }
    let pairs = if cfg.bundles.is_empty() { sweep_pairs(&cfg.theta, cmax, dmax.unwrap_or(cmax), copies) } else { cfg.bundles.clone() };
    if pairs.is_empty() {
        return Err(config_error("the sweep contains no bundles"));
    }
    let results: Vec<_> = pool(cfg)?.install(|| {
        pairs
            .par_iter()
            .map(|e| (*e, cfg.structure(e).and_then(|hs| euler_char_check(&hs, &cfg.opts))))
            .collect()
    });
    let mut t = Table::new(&["c", "d", "copies", "deg", "h0", "h1", "chi", "ok", "min_gap", "status"], 3);
    let mut failures = Vec::new();
    for (e, r) in results {
        let deg = e.copies as i64 * e.c;
        match r {
            Ok(chk) => {
                if !chk.ok {
                    failures.push(format!("({}, {}, {}): chi {} != deg {}", e.c, e.d, e.copies, chk.chi, deg));
                }
                t.push(row![e.c, e.d, e.copies, deg, chk.h0, chk.h1, chk.chi, chk.ok, chk.min_gap, "ok"]);
            }
            Err(err) => {
                failures.push(format!("({}, {}, {}): {err}", e.c, e.d, e.copies));
                t.push(row![e.c, e.d, e.copies, deg, Cell::Empty, Cell::Empty, Cell::Empty, false, Cell::Empty, status(&err)]);
            }
        }
    }
    Ok(Outcome { table: t, failures })
}

/// Largest `‖Qe‖/‖e‖` over random coefficient vectors, and the top singular
/// value of the ladder matrix.
pub fn q_bound_measure(hs: &HoloStructure, levels: usize, samples: usize, seed: u64, stream: u64) -> Result<(f64, f64, f64), Error> {
    let bound = q_norm_bound(hs)?;
    let q = build_q(hs)?;
    let frame = hs.ladder_frame()?;
    let sup = q.ladder_matrix(levels)?.singular_values().iter().cloned().fold(0.0, f64::max);
    let mut rng = rng_for(seed, stream);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let coeffs = (0..hs.spec.blocks() * levels)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let e = SectionHermite::from_coeffs(hs.spec, frame, levels, coeffs)?;
        let qe = q.apply_hermite(&e)?;
        worst = worst.max(qe.norm() / e.norm());
    }
    Ok((bound, sup, worst))
}

fn q_bound(cfg: &RunConfig, samples: usize, levels: usize) -> Result<Outcome, Error> {
    let bundles = cfg.require_bundles()?;
    let mut t = Table::new(
        &["c", "d", "copies", "levels", "samples", "bound", "ladder_sup", "ladder_rel_dev", "max_ratio", "ok", "status"],
        3,
    );
    let mut failures = Vec::new();
    for (i, e) in bundles.iter().enumerate() {
        let hs = cfg.structure(e)?;
        match q_bound_measure(&hs, levels, samples, cfg.seed, i as u64) {
            Ok((bound, sup, worst)) => {
                let dev = (sup - bound).abs() / bound;
                let ok = worst <= bound * (1.0 + 1e-9) && dev <= 1e-6;
                if !ok {
                    failures.push(format!("({}, {}): ratio {worst} vs bound {bound}", e.c, e.d));
                }
                t.push(row![e.c, e.d, e.copies, levels, samples, bound, sup, dev, worst, ok, "ok"]);
            }
            Err(err) => {
                failures.push(format!("({}, {}): {err}", e.c, e.d));
                t.push(row![e.c, e.d, e.copies, levels, samples, Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty, false, status(&err)]);
            }
        }
    }
    Ok(Outcome { table: t, failures })
}

fn index_homotopy_rows(cfg: &RunConfig, trials: usize, phi_norm: f64, phi_band: u32, tgrid: &[f64]) -> Result<Outcome, Error> {
    if cfg.tau.im >= 0.0 {
        return Err(Error::TauOrientation(cfg.tau.im));
    }
    let bundles = cfg.require_bundles()?;
    let mut jobs = Vec::new();
    for (i, e) in bundles.iter().enumerate() {
        let hs = cfg.structure(e)?;
        for trial in 0..trials {
            let phi = cfg.random_phi(&hs, phi_norm, phi_band, (i * trials + trial) as u64);
            jobs.push((*e, trial, hs.clone(), phi));
        }
    }
    let results: Vec<_> = pool(cfg)?.install(|| {
        jobs.par_iter().map(|(e, trial, hs, phi)| (*e, *trial, index_homotopy(hs, phi, tgrid, &cfg.opts))).collect()
    });
    let mut t = Table::new(&["c", "d", "copies", "trial", "t", "chi", "deg", "ok", "status"], 5);
    let mut failures = Vec::new();
    for (e, trial, r) in results {
        let deg = e.copies as i64 * e.c;
        match r {
            Ok(chis) => {
                for (&tv, &chi) in tgrid.iter().zip(&chis) {
                    if chi != deg {
                        failures.push(format!("({}, {}) trial {trial} t = {tv}: chi {chi}", e.c, e.d));
                    }
                    t.push(row![e.c, e.d, e.copies, trial, tv, chi, deg, chi == deg, "ok"]);
                }
            }
            Err(err) => {
                failures.push(format!("({}, {}) trial {trial}: {err}", e.c, e.d));
                let tv = match &err {
                    Error::HomotopyGap { t, .. } => Cell::Float(*t),
                    _ => Cell::Empty,
                };
                t.push(row![e.c, e.d, e.copies, trial, tv, Cell::Empty, deg, false, status(&err)]);
            }
        }
    }
    Ok(Outcome { table: t, failures })
}

fn dual_pair(cfg: &RunConfig, e: &ChernPair) -> Result<(HoloStructure, HoloStructure, CohomologyResult, CohomologyResult), Error> {
    let hs = cfg.structure(e)?;
    let hd = dual_structure(&hs)?;
    let ce = cohomology(&hs, &cfg.opts)?;
    let cd = cohomology(&hd, &cfg.opts)?;
    Ok((hs, hd, ce, cd))
}

fn serre_check(cfg: &RunConfig) -> Result<Outcome, Error> {
    let bundles = cfg.require_bundles()?;
    let mut t = Table::new(
        &["c", "d", "copies", "i", "rows", "cols", "sigma_min", "sigma_max", "ratio", "perfect", "status"],
        4,
    );
    let mut failures = Vec::new();
    for e in bundles {
        let pair = dual_pair(cfg, e);
        for i in 0..2u8 {
            let r = pair.as_ref().map_err(Clone::clone).and_then(|(hs, hd, ce, cd)| serre_gram_from(hs, hd, ce, cd, i));
            match r {
                Ok(rep) => {
                    if !rep.perfect {
                        failures.push(format!("({}, {}) i = {i}: pairing degenerate", e.c, e.d));
                    }
                    t.push(row![e.c, e.d, e.copies, i as i64, rep.rows, rep.cols, rep.sigma_min, rep.sigma_max, rep.ratio(), rep.perfect, "ok"]);
                }
                Err(err) => {
                    failures.push(format!("({}, {}) i = {i}: {err}", e.c, e.d));
                    t.push(row![e.c, e.d, e.copies, i as i64, Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty, false, status(&err)]);
                }
            }
        }
    }
    Ok(Outcome { table: t, failures })
}

fn grid_of(s: &Section, points: usize) -> Result<SectionGrid, Error> {
    match s {
        Section::Grid(g) => Ok(g.clone()),
        Section::Hermite(h) => {
            let extent = h.frame.extent(h.n).max(6.0);
            let k = h.frame.max_frequency(h.n, extent);
            let g = Grid::resolving(extent, k)?;
            let g = if g.points < points { Grid::new(extent, points)? } else { g };
            Ok(h.to_grid(g))
        }
        Section::Modes(_) => Err(Error::TrivialBundle("mode sections have no grid samples")),
    }
}

fn pairing_dump(cfg: &RunConfig, band: u32) -> Result<Outcome, Error> {
    let bundles = cfg.require_bundles()?;
    let mut t = Table::new(&["c", "d", "copies", "i", "m", "n", "re", "im", "edge_magnitude", "decay_warning"], 6);
    let mut failures = Vec::new();
    for e in bundles {
        if e.c == 0 {
            return Err(Error::TrivialBundle("pairing-dump needs c != 0"));
        }
        let (_, _, ce, cd) = dual_pair(cfg, e)?;
        // the nonzero degree: H⁰(E) with H¹(E^∨) for c > 0, else H¹(E) with H⁰(E^∨)
        let (i, on_e, on_dual) = if e.c > 0 { (0, &ce.harmonic0, &cd.harmonic1) } else { (1, &ce.harmonic1, &cd.harmonic0) };
        let (Some(f2), Some(f1)) = (on_e.first(), on_dual.first()) else {
            failures.push(format!("({}, {}): no harmonic representatives", e.c, e.d));
            continue;
        };
        let (f1, f2) = (grid_of(f1, 512)?, grid_of(f2, 512)?);
        let p = pairing_t(&f1, &f2, band)?;
        let b = band as i64;
        for m in -b..=b {
            for n in -b..=b {
                let v = p.value.scalar_coeff(m, n);
                t.push(row![e.c, e.d, e.copies, i as i64, m, n, v.re, v.im, p.edge_magnitude, p.decay_warning]);
            }
        }
    }
    Ok(Outcome { table: t, failures })
}

fn morita_info(cfg: &RunConfig, c: i64, d: i64) -> Result<Outcome, Error> {
    let e = ChernPair::new(c, d);
    e.validate(&cfg.theta)?;
    let theta = cfg.theta_value();
    let spec = BundleSpec::from_pair(&e, theta)?;
    let (a, b) = complete_sl2(c, d)?;
    let dual = dual_spec(c, d, theta)?;
    let fm = fm_chern(&e);
    let fm_mu = match fm_slope(&e, theta) {
        FmSlope::Finite(x) => Cell::Float(x),
        FmSlope::Torsion => Cell::Text("torsion".into()),
    };
    let mut t = Table::new(
        &[
            "c", "d", "a", "b", "theta_prime", "rank", "slope", "dual_c", "dual_d", "dual_theta", "fm_rk", "fm_deg",
            "fm_slope", "stable",
        ],
        2,
    );
    let mu = if c == 0 { Cell::Float(0.0) } else { Cell::Float(spec.mu()) };
    t.push(vec![
        c.into(), d.into(), a.into(), b.into(), spec.theta_prime().into(), spec.rank().into(), mu,
        dual.c.into(), dual.d.into(), dual.theta.into(), fm.rk.into(), fm.deg.into(), fm_mu,
        stability(&fm, &cfg.theta)?.into(),
    ]);
    Ok(Outcome::new(t))
}

fn sequence(cfg: &RunConfig, s: &SequenceArgs) -> Result<SlopeSequence, Error> {
    if s.count == 0 {
        return Err(config_error("count must be positive"));
    }
    gen_ample_sequence(cfg.theta, s.count, s.rk_floor)
}

fn parse_window(s: &str) -> Result<(usize, usize), Error> {
    let v: Result<Vec<usize>, _> = s.split(',').map(|t| t.trim().parse::<usize>()).collect();
    match v.map_err(|_| config_error(format!("window '{s}' is not start,end")))?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(config_error(format!("window '{s}' is not start,end"))),
    }
}

fn bound_for(cfg: &RunConfig, e: &ChernPair, phi_norm: f64, stream: u64) -> Result<f64, Error> {
    let hs = cfg.structure(e)?;
    let phi = cfg.random_phi(&hs, phi_norm, 1, stream);
    Ok(vanishing_bound(e, cfg.theta_value(), &phi, cfg.tau)?.c_bound)
}

fn ample(cfg: &RunConfig, cmd: &AmpleCommand) -> Result<Outcome, Error> {
    match cmd {
        AmpleCommand::Gen(s) => {
            let seq = sequence(cfg, s)?;
            let mut t = Table::new(&["n", "c", "d", "rank", "slope", "scan_excess"], 1);
            for (k, e) in seq.entries.iter().enumerate() {
                t.push(row![SlopeSequence::index(k), e.c, e.d, seq.rank(k), seq.slope(k), seq.scan_excess[k]]);
            }
            Ok(Outcome::new(t))
        }
        AmpleCommand::Check(s) => {
            let seq = sequence(cfg, s)?;
            let r = ample_check(&seq);
            let mut t = Table::new(
                &["entries", "rk_floor", "floor_ok", "divergence_ok", "fm_ok", "monotone_ok", "non_monotone", "passed", "failures"],
                1,
            );
            let nm = r.non_monotone.iter().map(i64::to_string).collect::<Vec<_>>().join(";");
            t.push(row![r.entries, s.rk_floor, r.floor_ok, r.divergence_ok, r.fm_ok, r.monotone_ok, nm, r.passed, r.failures.join(";")]);
            Ok(Outcome { table: t, failures: r.failures })
        }
        AmpleCommand::Dims { seq: s, window, phi_norm } => {
            let seq = sequence(cfg, s)?;
            let w = parse_window(window)?;
            let z = zalgebra_dims(&seq, w)?;
            let mut t = Table::new(&["kind", "i", "j", "dim", "status"], 3);
            for (p, &i) in z.indices.iter().enumerate() {
                for (q, &j) in z.indices.iter().enumerate().skip(p) {
                    let d = z.dims[p][q];
                    t.push(row!["zalgebra", i, j, d, if d.is_some() { "certified" } else { "unknown" }]);
                }
            }
            for (b, e) in cfg.bundles.iter().enumerate() {
                let c_bound = bound_for(cfg, e, *phi_norm, b as u64)?;
                let label = format!("module:{}:{}:{}", e.c, e.d, e.copies);
                for (i, d) in module_dims(&seq, e, w, c_bound)? {
                    t.push(row![label.clone(), i, Cell::Empty, d, if d.is_some() { "certified" } else { "unknown" }]);
                }
            }
            Ok(Outcome::new(t))
        }
        AmpleCommand::Fingen { seq: s, phi_norm } => {
            let seq = sequence(cfg, s)?;
            let mut t = Table::new(
                &["c", "d", "copies", "c_bound", "witness", "i0", "i1", "first_inequality", "tail", "max_mu_f", "limit", "message"],
                3,
            );
            for (b, e) in cfg.require_bundles()?.iter().enumerate() {
                let c_bound = bound_for(cfg, e, *phi_norm, b as u64)?;
                let r = fingen_check(&seq, e, c_bound);
                let w = r.witness.as_ref();
                t.push(row![
                    e.c, e.d, e.copies, c_bound, w.is_some(),
                    w.map(|w| w.i0), w.map(|w| w.i1), w.map(|w| w.first_inequality), w.map(|w| w.tail),
                    w.map(|w| w.max_mu_f), w.map(|w| w.limit), r.message
                ]);
            }
            Ok(Outcome::new(t))
        }
    }
}

fn tail_rows(cfg: &RunConfig, tol: f64, half_width: f64, points: usize, dump: Option<&Path>) -> Result<Outcome, Error> {
    let bundles = cfg.require_bundles()?;
    let grid = Grid::new(half_width, points)?;
    let mut t = Table::new(
        &["c", "d", "copies", "group", "index", "outer_mass", "edge_max", "spectral_tail", "ok"],
        5,
    );
    let mut failures = Vec::new();
    let mut dumped = Vec::new();
    for e in bundles {
        let hs = cfg.structure(e)?;
        if e.c == 0 {
            return Err(Error::TrivialBundle("tail-report needs c != 0"));
        }
        let r = cohomology(&hs, &cfg.opts)?;
        for (group, reps) in [(0i64, &r.harmonic0), (1, &r.harmonic1)] {
            for (k, s) in reps.iter().enumerate() {
                let Section::Hermite(h) = s else { continue };
                let g = h.to_grid(grid);
                let rep = tail_report(&g, tol);
                if !rep.ok {
                    failures.push(format!("({}, {}) H{group} #{k}: outer mass {}", e.c, e.d, rep.outer_mass));
                }
                t.push(row![e.c, e.d, e.copies, group, k, rep.outer_mass, rep.edge_max, rep.spectral_tail, rep.ok]);
                dumped.push(((e.c, e.d, e.copies, group, k), g));
            }
        }
    }
    if let Some(path) = dump {
        let mut text = String::new();
        for ((c, d, copies, group, k), g) in &dumped {
            let mut buf = Vec::new();
            g.write_csv(&mut buf)?;
            let body = String::from_utf8(buf).map_err(|e| Error::Serialization(e.to_string()))?;
            let _ = writeln!(text, "# bundle={c},{d},{copies} group={group} index={k}");
            text.push_str(&body);
        }
        std::fs::write(path, text).map_err(|e| Error::Serialization(format!("{}: {e}", path.display())))?;
    }
    Ok(Outcome { table: t, failures })
}

/// Run a parsed command.
pub fn execute(cfg: &RunConfig, command: &Command) -> Result<Outcome, Error> {
    let (name, mut out) = match command {
        Command::Cohomology { phi_norm, phi_band } => ("cohomology", cohomology_rows(cfg, *phi_norm, *phi_band)?),
        Command::RiemannRochSweep { cmax, dmax, copies } => ("riemann-roch-sweep", riemann_roch_sweep(cfg, *cmax, *dmax, copies)?),
        Command::QBound { samples, levels } => ("q-bound", q_bound(cfg, *samples, *levels)?),
        Command::IndexHomotopy { trials, phi_norm, phi_band, t } => {
            ("index-homotopy", index_homotopy_rows(cfg, *trials, *phi_norm, *phi_band, t)?)
        }
        Command::SerreCheck => ("serre-check", serre_check(cfg)?),
        Command::PairingDump { band } => ("pairing-dump", pairing_dump(cfg, *band)?),
        Command::MoritaInfo { c, d } => ("morita-info", morita_info(cfg, *c, *d)?),
        Command::Ample(a) => {
            let name = match a {
                AmpleCommand::Gen(_) => "ample gen",
                AmpleCommand::Check(_) => "ample check",
                AmpleCommand::Dims { .. } => "ample dims",
                AmpleCommand::Fingen { .. } => "ample fingen",
            };
            (name, ample(cfg, a)?)
        }
        Command::TailReport { tol, half_width, points, dump } => {
            ("tail-report", tail_rows(cfg, *tol, *half_width, *points, dump.as_deref())?)
        }
    };
    out.table.meta = meta(cfg, name);
    out.table.sort();
    Ok(out)
}

fn error_record(kind: &str, message: &str, code: i32) -> String {
    serde_json::json!({ "status": "error", "kind": kind, "message": message, "exit_code": code }).to_string()
}

/// Parse `args`, run, write the table, and return the exit status. Error
/// records go to `stderr` as one JSON object per line.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return EXIT_OK;
            }
            let _ = writeln!(stderr, "{}", error_record("usage", e.to_string().trim(), EXIT_CONFIG));
            return EXIT_CONFIG;
        }
    };
    let cfg = match RunConfig::resolve(&cli.global) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(stderr, "{}", error_record("config", &e.to_string(), EXIT_CONFIG));
            return EXIT_CONFIG;
        }
    };
    let _ = writeln!(stderr, "nctorus: seed={}", cfg.seed);
    let out = match execute(&cfg, &cli.command) {
        Ok(o) => o,
        Err(e) => {
            let code = exit_code_for(&e);
            let _ = writeln!(stderr, "{}", error_record(e.kind(), &e.to_string(), code));
            return code;
        }
    };
    let text = match cfg.format {
        Format::Csv => out.table.to_csv(),
        Format::Json => out.table.to_json(),
    };
    let text = match text {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(stderr, "{}", error_record(e.kind(), &e.to_string(), EXIT_CONFIG));
            return EXIT_CONFIG;
        }
    };
    let written = match &cfg.output {
        Some(p) => std::fs::write(p, &text).map_err(|e| format!("{}: {e}", p.display())),
        None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(msg) = written {
        let _ = writeln!(stderr, "{}", error_record("output", &msg, EXIT_CONFIG));
        return EXIT_CONFIG;
    }
    if !out.failures.is_empty() {
        let msg = out.failures.join("; ");
        let _ = writeln!(stderr, "{}", error_record("certification_failure", &msg, EXIT_CERTIFICATION));
        return EXIT_CERTIFICATION;
    }
    EXIT_OK
}
