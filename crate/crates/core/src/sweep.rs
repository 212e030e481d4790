//! Grid sweeps over `(k, α, ω)` with continuation along `k`, parallel rows,
//! ordered checkpointed output and resume.
//!
//! A row is one `(ω, α)` pair swept over the whole `k` grid. Rows are solved
//! independently, so the result file only depends on the spec: rows are
//! written strictly in grid order whatever the worker count, and resuming
//! recomputes the first incomplete row from scratch.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::WalkerError;
use crate::limit_cycle::{
    cold_start, continue_to, find_fixed_point, ColdStart, ContinuationConfig, LimitCycle, NewtonConfig, ParamAxis,
};
use crate::metrics::{gait_metrics, WorkConvention};
use crate::params::ModelParams;
use crate::sim::SimConfig;

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("numerical failure: {0}")]
    Numerical(#[from] WalkerError),
}

impl SweepError {
    fn io(path: &Path, source: io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Process exit code: 1 configuration, 2 numerical, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 1,
            Self::Numerical(_) => 2,
            Self::Io { .. } => 3,
        }
    }
}

pub type SweepResultT<T> = std::result::Result<T, SweepError>;

/// Either an explicit list or an inclusive `min..=max` range with `step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Range { min: f64, max: f64, step: f64 },
    Values(Vec<f64>),
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Axis::Values(v) => v.clone(),
            Axis::Range { min, max, step } => {
                let n = ((max - min) / step + 1e-9).floor() as usize;
                (0..=n).map(|i| min + i as f64 * step).collect()
            }
        }
    }

    fn validate(&self, name: &str) -> SweepResultT<()> {
        if let Axis::Range { min, max, step } = self {
            if !(step.is_finite() && *step > 0.0) {
                return Err(SweepError::Config(format!("{name}: step must be positive")));
            }
            if !(min.is_finite() && max.is_finite() && min <= max) {
                return Err(SweepError::Config(format!("{name}: need finite min <= max")));
            }
        }
        let v = self.values();
        if v.is_empty() {
            return Err(SweepError::Config(format!("{name}: grid is empty")));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(SweepError::Config(format!("{name}: non-finite grid value")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub k: Axis,
    pub alpha: Axis,
    pub omega: Vec<f64>,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            k: Axis::Range {
                min: 0.25,
                max: 30.0,
                step: 0.25,
            },
            alpha: Axis::Range {
                min: 0.05,
                max: 0.6,
                step: 0.05,
            },
            omega: vec![2.0, 3.0],
        }
    }
}

/// How each row is seeded before continuation fills it in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Seeding {
    /// Explicit seed values of `k`.
    pub seed_k: Vec<f64>,
    /// Also seed just above the first `resonance_orders` wobble resonances
    /// `k_n = α(1−α)(2πn/T)²`, with `T` the compass stride period at the
    /// row's `ω`.
    pub resonance_orders: usize,
    pub resonance_factor: f64,
    pub cold_start: ColdStart,
    /// Retry unsolved points once from the nearest converged neighbour.
    pub retry_from_neighbor: bool,
}

impl Default for Seeding {
    fn default() -> Self {
        Self {
            seed_k: vec![0.5, 6.0, 22.5],
            resonance_orders: 4,
            resonance_factor: 1.15,
            cold_start: ColdStart::default(),
            retry_from_neighbor: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Output {
    pub dir: PathBuf,
}

impl Default for Output {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

/// Recorded in every manifest written with default parameters.
pub const DEFAULT_TUNING_NOTE: &str =
    "reset_phase retuned from pi to 3.4 so that the k = 0.5 group A cycle at alpha = 0.25, omega = 3 is stable; all other parameters at their defaults";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSpec {
    /// Free text copied into the run manifest, e.g. to record parameter
    /// retuning.
    pub tuning_note: String,
    /// 0 lets the thread pool decide.
    pub workers: usize,
    pub work_convention: WorkConvention,
    pub grid: Grid,
    pub params: ModelParams,
    pub sim: SimConfig,
    pub newton: NewtonConfig,
    pub continuation: ContinuationConfig,
    pub seeding: Seeding,
    pub output: Output,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            tuning_note: DEFAULT_TUNING_NOTE.to_string(),
            workers: 0,
            work_convention: WorkConvention::Absolute,
            grid: Grid::default(),
            params: ModelParams::default(),
            sim: SimConfig::default(),
            newton: NewtonConfig::default(),
            continuation: ContinuationConfig::default(),
            seeding: Seeding::default(),
            output: Output::default(),
        }
    }
}

impl SweepSpec {
    pub fn from_toml_str(text: &str) -> SweepResultT<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| SweepError::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> SweepResultT<Self> {
        let text = fs::read_to_string(path).map_err(|e| SweepError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> SweepResultT<()> {
        self.grid.k.validate("grid.k")?;
        self.grid.alpha.validate("grid.alpha")?;
        if self.grid.omega.is_empty() {
            return Err(SweepError::Config("grid.omega: grid is empty".into()));
        }
        for &omega in &self.grid.omega {
            for &alpha in &self.grid.alpha.values() {
                for &k in &self.grid.k.values() {
                    self.params
                        .with_k_alpha_omega(k, alpha, omega)
                        .validate()
                        .map_err(|e| SweepError::Config(e.to_string()))?;
                }
            }
        }
        self.sim.validate().map_err(|e| SweepError::Config(e.to_string()))?;
        let cs = &self.seeding.cold_start;
        if cs.theta1.is_empty() || cs.dtheta1.is_empty() || cs.dx.is_empty() {
            return Err(SweepError::Config(
                "seeding.cold_start: guess lists must be non-empty".into(),
            ));
        }
        if [self.continuation.min_step, self.newton.tol]
            .iter()
            .any(|v| v.is_nan() || *v <= 0.0)
        {
            return Err(SweepError::Config(
                "solver tolerances and steps must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Hash over everything that influences the result file.
    pub fn content_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.workers = 0;
        canonical.output = Output::default();
        canonical.tuning_note.clear();
        let json = serde_json::to_string(&canonical).expect("spec serialises");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// `(ω, α)` pairs in output order.
    pub fn rows(&self) -> Vec<(f64, f64)> {
        let alphas = self.grid.alpha.values();
        self.grid
            .omega
            .iter()
            .flat_map(|&o| alphas.iter().map(move |&a| (o, a)))
            .collect()
    }

    pub fn grid_size(&self) -> usize {
        self.rows().len() * self.grid.k.values().len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Stable,
    Unstable,
    None,
}

/// How a grid point's cycle was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Seed,
    Continuation,
    Retry,
}

/// One result row. Column order is the field order; metric columns are
/// empty when no cycle was found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub index: usize,
    pub omega: f64,
    pub alpha: f64,
    pub k: f64,
    pub status: SolveStatus,
    pub source: Option<Source>,
    pub group: Option<String>,
    pub x_oscillations: Option<usize>,
    pub dtheta1_peaks: Option<usize>,
    pub consistent: Option<bool>,
    pub max_lambda: Option<f64>,
    pub period: Option<f64>,
    pub d_max: Option<f64>,
    pub d_upper: Option<f64>,
    pub d_lower: Option<f64>,
    pub cot: Option<f64>,
    pub mean_speed: Option<f64>,
    pub work: Option<f64>,
    pub x_peak: Option<f64>,
    pub residual: Option<f64>,
    pub iterations: Option<usize>,
    pub z_theta1: Option<f64>,
    pub z_dtheta1: Option<f64>,
    pub z_dtheta2: Option<f64>,
    pub z_x: Option<f64>,
    pub z_dx: Option<f64>,
    pub z_phi: Option<f64>,
    pub failure: Option<String>,
}

impl SweepRecord {
    pub fn empty(index: usize, params: &ModelParams, failure: String) -> Self {
        Self {
            index,
            omega: params.omega,
            alpha: params.alpha,
            k: params.k,
            status: SolveStatus::None,
            source: None,
            group: None,
            x_oscillations: None,
            dtheta1_peaks: None,
            consistent: None,
            max_lambda: None,
            period: None,
            d_max: None,
            d_upper: None,
            d_lower: None,
            cot: None,
            mean_speed: None,
            work: None,
            x_peak: None,
            residual: None,
            iterations: None,
            z_theta1: None,
            z_dtheta1: None,
            z_dtheta2: None,
            z_x: None,
            z_dx: None,
            z_phi: None,
            // keep every record on one line
            failure: Some(failure.replace(['\n', '\r'], " ")),
        }
    }

    /// Evaluates metrics on a converged cycle. A cycle whose metrics cannot
    /// be evaluated is recorded as a failure.
    pub fn from_cycle(
        index: usize,
        cycle: &LimitCycle,
        source: Source,
        sim: &SimConfig,
        convention: WorkConvention,
    ) -> Self {
        let p = &cycle.params;
        let metrics = cycle.trajectory(sim).and_then(|tr| gait_metrics(&tr, p, convention));
        let m = match metrics {
            Ok(m) => m,
            Err(e) => return Self::empty(index, p, format!("metrics: {e}")),
        };
        let z = cycle.fixed_point.to_state(p);
        let c = &m.classification;
        Self {
            index,
            omega: p.omega,
            alpha: p.alpha,
            k: p.k,
            status: if cycle.stable {
                SolveStatus::Stable
            } else {
                SolveStatus::Unstable
            },
            source: Some(source),
            group: Some(c.group.to_string()),
            x_oscillations: Some(c.x_oscillations),
            dtheta1_peaks: Some(c.dtheta1_peaks),
            consistent: Some(c.consistent),
            max_lambda: Some(cycle.max_multiplier()),
            period: Some(cycle.period),
            d_max: Some(m.d_max),
            d_upper: Some(m.d_upper),
            d_lower: Some(m.d_lower),
            cot: Some(m.cot),
            mean_speed: Some(m.mean_speed),
            work: Some(m.work),
            x_peak: Some(m.x_peak),
            residual: Some(cycle.residual),
            iterations: Some(cycle.iterations),
            z_theta1: Some(z.theta1),
            z_dtheta1: Some(z.dtheta1),
            z_dtheta2: Some(z.dtheta2),
            z_x: (!p.is_compass()).then_some(z.x),
            z_dx: (!p.is_compass()).then_some(z.dx),
            z_phi: (!p.phase_reset).then_some(z.phi),
            failure: None,
        }
    }

    pub fn solved(&self) -> bool {
        self.status != SolveStatus::None
    }

    /// Section coordinates of the stored fixed point.
    pub fn section_coords(&self) -> Option<Vec<f64>> {
        let mut v = vec![self.z_theta1?, self.z_dtheta1?, self.z_dtheta2?];
        if let (Some(x), Some(dx)) = (self.z_x, self.z_dx) {
            v.extend([x, dx]);
        }
        if let Some(phi) = self.z_phi {
            v.push(phi);
        }
        Some(v)
    }
}

pub fn csv_header() -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fake = SweepRecord::empty(0, &ModelParams::default(), String::new());
    w.serialize(&fake).expect("in-memory write");
    let bytes = w.into_inner().expect("in-memory write");
    let text = String::from_utf8(bytes).expect("utf8");
    text.lines().next().unwrap_or_default().to_string()
}

fn record_line(r: &SweepRecord) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.serialize(r).expect("in-memory write");
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf8")
}

pub fn records_to_csv(records: &[SweepRecord]) -> String {
    let mut out = csv_header();
    out.push('\n');
    for r in records {
        out.push_str(&record_line(r));
    }
    out
}

pub fn read_records(path: &Path) -> SweepResultT<Vec<SweepRecord>> {
    let file = File::open(path).map_err(|e| SweepError::io(path, e))?;
    csv::Reader::from_reader(file)
        .deserialize()
        .collect::<std::result::Result<Vec<SweepRecord>, _>>()
        .map_err(|e| SweepError::Config(format!("{}: {e}", path.display())))
}

/// Compass stride period used to place the resonance seeds.
fn resonance_seeds(spec: &SweepSpec, alpha: f64, compass_period: Option<f64>) -> Vec<f64> {
    let mut seeds = spec.seeding.seed_k.clone();
    if let Some(t) = compass_period {
        for n in 1..=spec.seeding.resonance_orders {
            let w = 2.0 * std::f64::consts::PI * n as f64 / t;
            seeds.push(spec.seeding.resonance_factor * alpha * (1.0 - alpha) * w * w);
        }
    }
    seeds
}

fn nearest_index(grid: &[f64], value: f64) -> usize {
    let mut best = 0;
    for (i, g) in grid.iter().enumerate() {
        if (g - value).abs() < (grid[best] - value).abs() {
            best = i;
        }
    }
    best
}

/// Solves one `(ω, α)` row of the `k` grid.
pub fn solve_row(spec: &SweepSpec, omega: f64, alpha: f64, first_index: usize) -> Vec<SweepRecord> {
    let ks = spec.grid.k.values();
    let base = spec.params.with_k_alpha_omega(ks[0], alpha, omega);
    let compass_period = cold_start(&base.compass(), &spec.sim, &spec.newton, &spec.seeding.cold_start)
        .ok()
        .map(|c| c.period);

    let mut cycles: Vec<Option<(LimitCycle, Source)>> = vec![None; ks.len()];
    let mut failures: Vec<String> = vec![String::new(); ks.len()];

    let mut seed_idx: Vec<usize> = resonance_seeds(spec, alpha, compass_period)
        .into_iter()
        .filter(|s| s.is_finite() && *s >= ks[0] - 1e-12 && *s <= ks[ks.len() - 1] + 1e-12)
        .map(|s| nearest_index(&ks, s))
        .collect();
    seed_idx.dedup();

    for &i in &seed_idx {
        if cycles[i].is_some() {
            continue;
        }
        let p = base.with_k_alpha_omega(ks[i], alpha, omega);
        match cold_start(&p, &spec.sim, &spec.newton, &spec.seeding.cold_start) {
            Ok(c) => cycles[i] = Some((c, Source::Seed)),
            Err(e) => {
                failures[i] = format!("seed: {e}");
                continue;
            }
        }
        for dir in [1isize, -1] {
            let mut j = i as isize + dir;
            while j >= 0 && (j as usize) < ks.len() && cycles[j as usize].is_none() {
                let prev = cycles[(j - dir) as usize]
                    .as_ref()
                    .map(|c| c.0.clone())
                    .expect("converged neighbour");
                match continue_to(&prev, ParamAxis::K, ks[j as usize], &spec.sim, &spec.continuation) {
                    Ok(c) => cycles[j as usize] = Some((c, Source::Continuation)),
                    Err(e) => {
                        failures[j as usize] = format!("continuation: {e}");
                        break;
                    }
                }
                j += dir;
            }
        }
    }

    if spec.seeding.retry_from_neighbor {
        let converged: Vec<usize> = (0..ks.len()).filter(|&i| cycles[i].is_some()).collect();
        for i in 0..ks.len() {
            if cycles[i].is_some() {
                continue;
            }
            let Some(&n) = converged.iter().min_by_key(|&&n| n.abs_diff(i)) else {
                if failures[i].is_empty() {
                    failures[i] = "no converged neighbour".into();
                }
                continue;
            };
            let from = &cycles[n].as_ref().expect("converged").0;
            let p = from.params.with_k_alpha_omega(ks[i], alpha, omega);
            match find_fixed_point(&from.fixed_point, &p, &spec.sim, &spec.continuation.newton) {
                Ok(c) => cycles[i] = Some((c, Source::Retry)),
                Err(e) => failures[i] = format!("retry: {e}"),
            }
        }
    }

    ks.iter()
        .enumerate()
        .map(|(i, &k)| match &cycles[i] {
            Some((c, src)) => SweepRecord::from_cycle(first_index + i, c, *src, &spec.sim, spec.work_convention),
            None => SweepRecord::empty(
                first_index + i,
                &base.with_k_alpha_omega(k, alpha, omega),
                if failures[i].is_empty() {
                    "unreached".into()
                } else {
                    failures[i].clone()
                },
            ),
        })
        .collect()
}

/// Compass baseline, one record per `ω`.
pub fn run_baseline_compass(spec: &SweepSpec) -> Vec<SweepRecord> {
    spec.grid
        .omega
        .iter()
        .enumerate()
        .map(|(i, &omega)| {
            let mut p = spec.params.compass();
            p.omega = omega;
            match cold_start(&p, &spec.sim, &spec.newton, &spec.seeding.cold_start) {
                Ok(c) => SweepRecord::from_cycle(i, &c, Source::Seed, &spec.sim, spec.work_convention),
                Err(e) => SweepRecord::empty(i, &p, format!("seed: {e}")),
            }
        })
        .collect()
}

/// Solves a single grid point from a cold start.
pub fn solve_point(spec: &SweepSpec, k: f64, alpha: f64, omega: f64) -> SweepResultT<(LimitCycle, SweepRecord)> {
    let p = spec.params.with_k_alpha_omega(k, alpha, omega);
    p.validate().map_err(|e| SweepError::Config(e.to_string()))?;
    let cycle = cold_start(&p, &spec.sim, &spec.newton, &spec.seeding.cold_start)?;
    let record = SweepRecord::from_cycle(0, &cycle, Source::Seed, &spec.sim, spec.work_convention);
    Ok((cycle, record))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub spec_hash: String,
    pub version: String,
    pub started_at: String,
    pub finished_at: Option<String>,
    pub complete: bool,
    pub rows_done: usize,
    pub rows_total: usize,
    pub records: usize,
    pub tuning_note: String,
    pub spec: SweepSpec,
}

impl Manifest {
    pub fn load(path: &Path) -> SweepResultT<Self> {
        let text = fs::read_to_string(path).map_err(|e| SweepError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| SweepError::Config(format!("{}: {e}", path.display())))
    }

    fn save(&self, path: &Path) -> SweepResultT<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serialises");
        fs::write(path, text).map_err(|e| SweepError::io(path, e))
    }
}

pub const RESULTS_FILE: &str = "results.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const BASELINE_FILE: &str = "baseline.csv";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub resume: bool,
    /// Overrides `spec.workers` when set.
    pub workers: Option<usize>,
    /// Stop after this many rows in total have been written (used to
    /// exercise interruption).
    pub stop_after_rows: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub results: PathBuf,
    pub manifest: PathBuf,
    pub rows_done: usize,
    pub rows_total: usize,
    pub records: usize,
    pub solved: usize,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Number of complete rows already present in a partial result file, after
/// truncating any trailing partial row.
fn resume_point(path: &Path, header: &str, row_len: usize) -> SweepResultT<usize> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(0),
        Err(e) => return Err(SweepError::io(path, e)),
    };
    let mut lines = text.split_inclusive('\n');
    match lines.next() {
        Some(h) if h.trim_end() == header => {}
        None => return Ok(0),
        Some(_) => return Err(SweepError::Config(format!("{}: unexpected header", path.display()))),
    }
    // a line without its newline was cut off mid-write
    let complete: Vec<&str> = lines.take_while(|l| l.ends_with('\n')).collect();
    let rows = complete.len() / row_len;
    let mut kept = String::with_capacity(text.len());
    kept.push_str(header);
    kept.push('\n');
    for l in &complete[..rows * row_len] {
        kept.push_str(l);
    }
    if kept.len() != text.len() {
        fs::write(path, kept).map_err(|e| SweepError::io(path, e))?;
    }
    Ok(rows)
}

/// Runs (or resumes) a sweep, writing `results.csv` and `manifest.json` under
/// `out_dir`.
pub fn run_sweep(spec: &SweepSpec, out_dir: &Path, options: &RunOptions) -> SweepResultT<SweepSummary> {
    spec.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| SweepError::io(out_dir, e))?;
    let results = out_dir.join(RESULTS_FILE);
    let manifest_path = out_dir.join(MANIFEST_FILE);
    let header = csv_header();
    let rows = spec.rows();
    let row_len = spec.grid.k.values().len();
    let hash = spec.content_hash();

    let mut manifest = Manifest {
        spec_hash: hash.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        started_at: now(),
        finished_at: None,
        complete: false,
        rows_done: 0,
        rows_total: rows.len(),
        records: 0,
        tuning_note: spec.tuning_note.clone(),
        spec: spec.clone(),
    };

    let start_row = if options.resume && results.exists() {
        if manifest_path.exists() {
            let previous = Manifest::load(&manifest_path)?;
            if previous.spec_hash != hash {
                return Err(SweepError::Config(
                    "resume: spec differs from the one that produced the partial results".into(),
                ));
            }
            manifest.started_at = previous.started_at;
        }
        resume_point(&results, &header, row_len)?
    } else {
        fs::write(&results, format!("{header}\n")).map_err(|e| SweepError::io(&results, e))?;
        0
    };
    let end_row = options
        .stop_after_rows
        .map_or(rows.len(), |n| n.clamp(start_row, rows.len()));
    manifest.rows_done = start_row;
    manifest.records = start_row * row_len;
    manifest.save(&manifest_path)?;

    let workers = options.workers.unwrap_or(spec.workers);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| SweepError::Config(format!("thread pool: {e}")))?;

    let mut file = OpenOptions::new()
        .append(true)
        .open(&results)
        .map_err(|e| SweepError::io(&results, e))?;
    let mut solved = 0;
    let (tx, rx) = mpsc::channel::<(usize, Vec<SweepRecord>)>();
    let todo: Vec<usize> = (start_row..end_row).collect();

    let written = std::thread::scope(|scope| -> SweepResultT<usize> {
        let rows = &rows;
        scope.spawn(move || {
            pool.install(|| {
                todo.par_iter().for_each_with(tx, |tx, &r| {
                    let (omega, alpha) = rows[r];
                    let _ = tx.send((r, solve_row(spec, omega, alpha, r * row_len)));
                });
            });
        });

        let mut pending = BTreeMap::new();
        let mut next = start_row;
        for (r, records) in rx {
            pending.insert(r, records);
            while let Some(records) = pending.remove(&next) {
                let mut chunk = String::new();
                for rec in &records {
                    solved += usize::from(rec.solved());
                    chunk.push_str(&record_line(rec));
                }
                file.write_all(chunk.as_bytes())
                    .and_then(|_| file.flush())
                    .map_err(|e| SweepError::io(&results, e))?;
                next += 1;
                manifest.rows_done = next;
                manifest.records = next * row_len;
                manifest.save(&manifest_path)?;
            }
        }
        Ok(next)
    })?;

    manifest.complete = written == rows.len();
    if manifest.complete {
        manifest.finished_at = Some(now());
    }
    manifest.save(&manifest_path)?;
    Ok(SweepSummary {
        results,
        manifest: manifest_path,
        rows_done: written,
        rows_total: rows.len(),
        records: written * row_len,
        solved,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_axis_includes_endpoints() {
        let a = Axis::Range {
            min: 0.25,
            max: 1.0,
            step: 0.25,
        };
        assert_eq!(a.values(), vec![0.25, 0.5, 0.75, 1.0]);
        let single = Axis::Range {
            min: 6.0,
            max: 6.0,
            step: 1.0,
        };
        assert_eq!(single.values(), vec![6.0]);
    }

    #[test]
    fn spec_parses_nested_toml() {
        let spec = SweepSpec::from_toml_str(
            r#"
            workers = 2
            [grid]
            k = { min = 1.0, max = 2.0, step = 0.5 }
            alpha = [0.25]
            omega = [3.0]
            [params]
            mu = 0.2
            [sim]
            rel_tol = 1e-9
            "#,
        )
        .unwrap();
        assert_eq!(spec.grid.k.values(), vec![1.0, 1.5, 2.0]);
        assert_eq!(spec.grid.alpha.values(), vec![0.25]);
        assert_eq!(spec.params.mu, 0.2);
        assert_eq!(spec.sim.rel_tol, 1e-9);
        assert_eq!(spec.grid_size(), 3);
    }

    #[test]
    fn invalid_specs_are_config_errors() {
        let bad_step = "[grid]\nk = { min = 1.0, max = 2.0, step = 0.0 }\nalpha = [0.25]\nomega = [3.0]\n";
        assert_eq!(SweepSpec::from_toml_str(bad_step).unwrap_err().exit_code(), 1);
        let empty = "[grid]\nk = [1.0]\nalpha = []\nomega = [3.0]\n";
        assert_eq!(SweepSpec::from_toml_str(empty).unwrap_err().exit_code(), 1);
        let bad_alpha = "[grid]\nk = [1.0]\nalpha = [1.5]\nomega = [3.0]\n";
        assert_eq!(SweepSpec::from_toml_str(bad_alpha).unwrap_err().exit_code(), 1);
        assert_eq!(SweepSpec::from_toml_str("grid = 3").unwrap_err().exit_code(), 1);
    }

    #[test]
    fn hash_ignores_workers_and_output() {
        let a = SweepSpec::default();
        let mut b = a.clone();
        b.workers = 7;
        b.output.dir = "elsewhere".into();
        assert_eq!(a.content_hash(), b.content_hash());
        b.params.mu = 0.2;
        assert_ne!(a.content_hash(), b.content_hash());
    }

    #[test]
    fn records_round_trip_through_csv() {
        let p = ModelParams::default();
        let mut r = SweepRecord::empty(3, &p, "no, \"luck\"\nhere".into());
        r.max_lambda = Some(0.123456789012345);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        fs::write(&path, records_to_csv(&[r.clone()])).unwrap();
        let back = read_records(&path).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].max_lambda, r.max_lambda);
        assert_eq!(back[0].failure.as_deref(), Some("no, \"luck\" here"));
    }

    #[test]
    fn resume_point_drops_partial_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let header = csv_header();
        fs::write(&path, format!("{header}\na\nb\nc\nd\ne\nf")).unwrap();
        assert_eq!(resume_point(&path, &header, 2).unwrap(), 2);
        assert_eq!(fs::read_to_string(&path).unwrap(), format!("{header}\na\nb\nc\nd\n"));
    }

    #[test]
    fn nearest_index_picks_closest() {
        assert_eq!(nearest_index(&[0.5, 1.0, 1.5], 1.2), 1);
        assert_eq!(nearest_index(&[0.5, 1.0, 1.5], 9.0), 2);
    }
}
