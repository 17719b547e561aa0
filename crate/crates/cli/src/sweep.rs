//! Parallel parameter sweeps with a content-addressed result cache.
//!
//! Config file (JSON):
//!
//! ```json
//! {
//!   "q": [0.2, 0.5], "beta": [0, 0.5], "n_range": [1, 10],
//!   "output": "widths.csv", "format": "csv", "workers": 4,
//!   "cache_dir": ".nwidth-cache", "verify": true, "cy2n": true
//! }
//! ```
//!
//! `n` (explicit list) and `n_range` (inclusive) are alternatives. The
//! environment variables `NWIDTH_WORKERS` and `NWIDTH_CACHE_DIR` override
//! `workers` and `cache_dir`.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use neumann_widths::kernel::NeumannParams;
use neumann_widths::oracles::OracleConfig;
use neumann_widths::spline::{verify_cy2n, DerivativePath, ShiftPoint};
use neumann_widths::thresholds::compute_nq_beta;
use neumann_widths::widths::exact_width;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{oracle_check, CliError, CliResult};

/// Bumped whenever the row contents change meaning, so stale cache entries miss.
const CACHE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Overrides for the sup-norm oracle used by `verify`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyOverrides {
    pub grid_points: Option<usize>,
    pub golden_tol: Option<f64>,
}

impl PolicyOverrides {
    pub fn oracle(&self) -> OracleConfig {
        let d = OracleConfig::default();
        OracleConfig {
            grid_points: self.grid_points.unwrap_or(d.grid_points),
            golden_tol: self.golden_tol.unwrap_or(d.golden_tol),
        }
    }
}

fn default_cy2n_max_n() -> u32 {
    40
}

fn default_nq_cap() -> u64 {
    100_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub q: Vec<f64>,
    pub beta: Vec<f64>,
    #[serde(default)]
    pub n: Option<Vec<u32>>,
    #[serde(default)]
    pub n_range: Option<[u32; 2]>,
    #[serde(default)]
    pub policy: PolicyOverrides,
    pub output: PathBuf,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    /// Compare each width with the sup-norm oracle.
    #[serde(default)]
    pub verify: bool,
    /// Check the alternating-sign condition at `y0` for `n <= cy2n_max_n`.
    #[serde(default)]
    pub cy2n: bool,
    #[serde(default = "default_cy2n_max_n")]
    pub cy2n_max_n: u32,
    #[serde(default = "default_nq_cap")]
    pub nq_cap: u64,
}

impl SweepConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg: SweepConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if let Ok(w) = std::env::var("NWIDTH_WORKERS") {
            let w = w
                .parse()
                .map_err(|_| CliError::Config(format!("NWIDTH_WORKERS must be a positive integer, got {w:?}")))?;
            cfg.workers = Some(w);
        }
        if let Ok(dir) = std::env::var("NWIDTH_CACHE_DIR") {
            cfg.cache_dir = Some(PathBuf::from(dir));
        }
        // relative output paths are taken relative to the config file
        if cfg.output.is_relative() {
            if let Some(parent) = path.parent() {
                cfg.output = parent.join(&cfg.output);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.q.is_empty() || self.beta.is_empty() {
            return bad("q and beta lists must be nonempty".into());
        }
        for &q in &self.q {
            neumann_widths::kernel::validate_q(q)?;
        }
        for &b in &self.beta {
            if !b.is_finite() {
                return bad(format!("beta must be finite, got {b}"));
            }
        }
        match (&self.n, &self.n_range) {
            (Some(_), Some(_)) => return bad("give either n or n_range, not both".into()),
            (None, None) => return bad("one of n or n_range is required".into()),
            (Some(v), None) if v.is_empty() || v.contains(&0) => {
                return bad("n must be a nonempty list of positive integers".into())
            }
            (None, Some([a, b])) if *a == 0 || a > b => {
                return bad(format!("n_range must satisfy 1 <= start <= end, got [{a}, {b}]"))
            }
            _ => {}
        }
        if self.workers == Some(0) {
            return bad("workers must be positive".into());
        }
        let oracle = self.policy.oracle();
        if oracle.grid_points < 64 || !(oracle.golden_tol > 0.0) {
            return bad("policy needs grid_points >= 64 and golden_tol > 0".into());
        }
        Ok(())
    }

    pub fn n_values(&self) -> Vec<u32> {
        match (&self.n, &self.n_range) {
            (Some(v), _) => v.clone(),
            (None, Some([a, b])) => (*a..=*b).collect(),
            _ => Vec::new(),
        }
    }

    /// Grid points in output order.
    pub fn jobs(&self) -> Vec<Job> {
        let ns = self.n_values();
        let mut out = Vec::with_capacity(self.q.len() * self.beta.len() * ns.len());
        for &q in &self.q {
            for &beta in &self.beta {
                for &n in &ns {
                    out.push(Job { q, beta, n });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Job {
    pub q: f64,
    pub beta: f64,
    pub n: u32,
}

/// One output row; the CSV columns follow the field order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub q: f64,
    pub beta: f64,
    pub n: u32,
    pub theta_n: f64,
    pub y0: f64,
    pub width: f64,
    pub gamma_n: f64,
    pub sandwich_lo: f64,
    pub sandwich_hi: f64,
    /// `n >= n_{q,beta}`; false when no threshold was found below the cap.
    pub nq_flag: bool,
    pub cy2n_holds: Option<bool>,
    pub oracle_delta: Option<f64>,
}

#[derive(Serialize)]
struct CacheKey<'a> {
    version: u32,
    q: u64,
    beta: u64,
    n: u32,
    policy: &'a PolicyOverrides,
    verify: bool,
    cy2n: bool,
    cy2n_max_n: u32,
    nq_cap: u64,
}

fn cache_key(cfg: &SweepConfig, job: &Job) -> String {
    let key = CacheKey {
        version: CACHE_VERSION,
        q: job.q.to_bits(),
        beta: job.beta.to_bits(),
        n: job.n,
        policy: &cfg.policy,
        verify: cfg.verify,
        cy2n: cfg.cy2n,
        cy2n_max_n: cfg.cy2n_max_n,
        nq_cap: cfg.nq_cap,
    };
    let bytes = serde_json::to_vec(&key).expect("cache key serializes");
    hex::encode(Sha256::digest(&bytes))
}

fn cache_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(&key[..2]).join(format!("{key}.json"))
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.{}.{:?}.tmp", std::process::id(), std::thread::current().id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

fn compute_row(cfg: &SweepConfig, job: &Job, nq: Option<u64>) -> CliResult<SweepRow> {
    let params = NeumannParams::new(job.q, job.beta)?;
    let w = exact_width(params, job.n)?;
    let oracle_delta = if cfg.verify {
        Some(oracle_check(&w, &cfg.policy.oracle())?.delta)
    } else {
        None
    };
    let cy2n_holds = if cfg.cy2n && job.n <= cfg.cy2n_max_n {
        let shift = ShiftPoint::extremal(params, job.n)?;
        match verify_cy2n(params, job.n, &shift, DerivativePath::Lemma1) {
            Ok(r) => Some(r.holds),
            Err(neumann_widths::Error::SignDegenerate { .. } | neumann_widths::Error::SingularSystem { .. }) => None,
            Err(e) => return Err(e.into()),
        }
    } else {
        None
    };
    Ok(SweepRow {
        q: job.q,
        beta: job.beta,
        n: job.n,
        theta_n: w.theta,
        y0: w.y0,
        width: w.width,
        gamma_n: w.gamma_n,
        sandwich_lo: w.sandwich_lo,
        sandwich_hi: w.sandwich_hi,
        nq_flag: nq.is_some_and(|t| job.n as u64 >= t),
        cy2n_holds,
        oracle_delta,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub output: PathBuf,
    pub rows: usize,
    pub cache_hits: usize,
    pub workers: usize,
}

fn partial_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".partial");
    PathBuf::from(s)
}

/// Runs the sweep. Rows are appended to `<output>.partial` as they finish,
/// so an interrupted run leaves its completed rows on disk; the final file
/// is written atomically in grid order and the partial file removed.
pub fn run_sweep(cfg: &SweepConfig, timestamp: bool) -> CliResult<SweepSummary> {
    cfg.validate()?;
    let workers = cfg.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Io(e.to_string()))?;
    let jobs = cfg.jobs();

    let mut pairs: Vec<(u64, u64)> = Vec::new();
    for &q in &cfg.q {
        for &b in &cfg.beta {
            if !pairs.contains(&(q.to_bits(), b.to_bits())) {
                pairs.push((q.to_bits(), b.to_bits()));
            }
        }
    }
    let thresholds: HashMap<(u64, u64), Option<u64>> = pool.install(|| {
        pairs
            .par_iter()
            .map(|&(q, b)| {
                let r = compute_nq_beta(f64::from_bits(q), f64::from_bits(b), cfg.nq_cap);
                ((q, b), r.ok())
            })
            .collect()
    });

    let partial = partial_path(&cfg.output);
    if let Some(dir) = partial.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut partial_file = fs::File::create(&partial)?;
    let (tx, rx) = mpsc::channel::<(usize, SweepRow, bool)>();
    let mut rows: Vec<Option<SweepRow>> = vec![None; jobs.len()];
    let mut hits = 0;

    let result: CliResult<()> = std::thread::scope(|s| {
        let worker = s.spawn(|| {
            pool.install(|| {
                jobs.par_iter().enumerate().try_for_each_with(tx, |tx, (i, job)| -> CliResult<()> {
                    let key = cache_key(cfg, job);
                    if let Some(dir) = &cfg.cache_dir {
                        if let Ok(text) = fs::read_to_string(cache_path(dir, &key)) {
                            if let Ok(row) = serde_json::from_str::<SweepRow>(&text) {
                                let _ = tx.send((i, row, true));
                                return Ok(());
                            }
                        }
                    }
                    let nq = thresholds[&(job.q.to_bits(), job.beta.to_bits())];
                    let row = compute_row(cfg, job, nq)?;
                    if let Some(dir) = &cfg.cache_dir {
                        let bytes = serde_json::to_vec(&row).expect("row serializes");
                        write_atomic(&cache_path(dir, &key), &bytes)?;
                    }
                    let _ = tx.send((i, row, false));
                    Ok(())
                })
            })
        });
        for (i, row, hit) in rx {
            serde_json::to_writer(&mut partial_file, &row).map_err(|e| CliError::Io(e.to_string()))?;
            partial_file.write_all(b"\n")?;
            partial_file.flush()?;
            hits += usize::from(hit);
            rows[i] = Some(row);
        }
        worker.join().expect("sweep worker panicked")
    });
    result?;

    let rows: Vec<SweepRow> = rows.into_iter().map(|r| r.expect("every job reported")).collect();
    let stamp = timestamp.then(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true));
    let bytes = match cfg.format {
        Format::Csv => render_csv(&rows, stamp.as_deref())?,
        Format::Json => render_json(&rows, stamp.as_deref()),
    };
    write_atomic(&cfg.output, &bytes)?;
    fs::remove_file(&partial)?;
    Ok(SweepSummary {
        output: cfg.output.clone(),
        rows: rows.len(),
        cache_hits: hits,
        workers,
    })
}

pub fn render_csv(rows: &[SweepRow], timestamp: Option<&str>) -> CliResult<Vec<u8>> {
    let mut out = Vec::new();
    if let Some(t) = timestamp {
        writeln!(out, "# generated {t}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

pub fn render_json(rows: &[SweepRow], timestamp: Option<&str>) -> Vec<u8> {
    #[derive(Serialize)]
    struct Doc<'a> {
        #[serde(skip_serializing_if = "Option::is_none")]
        generated: Option<&'a str>,
        rows: &'a [SweepRow],
    }
    let mut v = serde_json::to_vec_pretty(&Doc { generated: timestamp, rows }).expect("rows serialize");
    v.push(b'\n');
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SweepConfig {
        serde_json::from_str(r#"{"q":[0.3],"beta":[0.5],"n_range":[1,3],"output":"o.csv"}"#).unwrap()
    }

    #[test]
    fn config_defaults_and_jobs() {
        let c = cfg();
        assert_eq!(c.format, Format::Csv);
        assert_eq!(c.nq_cap, 100_000);
        assert_eq!(c.jobs().len(), 3);
        c.validate().unwrap();
    }

    #[test]
    fn config_validation() {
        let mut c = cfg();
        c.q = vec![1.5];
        assert!(matches!(c.validate(), Err(CliError::Core(_))));
        let mut c = cfg();
        c.n = Some(vec![2]);
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.n_range = Some([4, 2]);
        assert!(c.validate().is_err());
        assert!(serde_json::from_str::<SweepConfig>(r#"{"q":[0.3],"beta":[0],"n":[1],"output":"o","bogus":1}"#).is_err());
    }

    #[test]
    fn cache_key_depends_on_settings() {
        let c = cfg();
        let j = c.jobs()[0];
        let mut d = c.clone();
        d.verify = true;
        assert_ne!(cache_key(&c, &j), cache_key(&d, &j));
        assert_eq!(cache_key(&c, &j), cache_key(&c.clone(), &j));
        assert_eq!(cache_key(&c, &j).len(), 64);
    }

    #[test]
    fn csv_layout() {
        let row = SweepRow {
            q: 0.5,
            beta: 1.0,
            n: 2,
            theta_n: 0.0,
            y0: 0.0,
            width: 0.1,
            gamma_n: 0.0,
            sandwich_lo: 0.1,
            sandwich_hi: 0.2,
            nq_flag: false,
            cy2n_holds: None,
            oracle_delta: Some(1e-17),
        };
        let text = String::from_utf8(render_csv(&[row], None).unwrap()).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "q,beta,n,theta_n,y0,width,gamma_n,sandwich_lo,sandwich_hi,nq_flag,cy2n_holds,oracle_delta"
        );
        assert_eq!(lines.next().unwrap(), "0.5,1.0,2,0.0,0.0,0.1,0.0,0.1,0.2,false,,1e-17");
    }
}
