//! Experiment runner: parses a flat key=value config, executes one of the
//! named experiment pipelines, and writes deterministic CSV artifacts.
//!
//! Re-running with an identical config yields byte-identical files; every CSV
//! starts with a comment naming the config hash and the constant conventions
//! (unit-cost model, natural logs, asymptotic constants fixed to 1).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use dppm::bounds::{ratio_empirical, RatioStudyConfig};
use dppm::eig::symmetric_eig;
use dppm::federated::{overhead, FederationMode};
use dppm::matrix::DenseMatrix;
use dppm::ppm::{projection_error, run_centralized, PowerMethodConfig};
use dppm::privacy::PrivacyBudget;
use dppm::recsys::{
    build_item_item, lowpass_filter, relative_error, synthetic_power_law, ExperimentCell,
};
use dppm::rng::{RngStream, StreamPurpose};
use dppm::sensitivity::{coherence, SensitivityPolicy};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error("empty input")]
    EmptyInput,
}

impl From<dppm::Error> for CliError {
    fn from(e: dppm::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl CliError {
    /// Process exit code: 2 for config problems, 3 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Figure1,
    Figure3,
    Table1,
    Table2,
    SingleRun,
}

/// Parsed flat key=value config. Unknown keys are rejected so typos fail
/// loudly instead of silently using defaults.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub runs: usize,
    pub p: usize,
    pub iterations: usize,
    pub epsilon_grid: Vec<f64>,
    pub users: usize,
    pub items: usize,
    pub dataset: Option<PathBuf>,
    pub n_grid: Vec<usize>,
    pub k_grid: Option<Vec<usize>>,
    pub trials: usize,
    pub s_grid: Vec<usize>,
    pub eigenvalues: Vec<f64>,
    pub k: usize,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    /// Canonical text the config hash is computed from.
    canonical: String,
}

const KNOWN_KEYS: &[&str] = &[
    "experiment",
    "seed",
    "runs",
    "p",
    "iterations",
    "epsilon_grid",
    "users",
    "items",
    "dataset",
    "n_grid",
    "k_grid",
    "trials",
    "s_grid",
    "eigenvalues",
    "k",
    "epsilon",
    "delta",
];

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| CliError::Config(format!("bad value for {key}: {v:?}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(|tok| parse_num(key, tok.trim()))
        .collect()
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if !KNOWN_KEYS.contains(&k.as_str()) {
                return Err(CliError::Config(format!("unknown key {k:?}")));
            }
            if map.insert(k.clone(), v).is_some() {
                return Err(CliError::Config(format!("duplicate key {k:?}")));
            }
        }
        let experiment = match map
            .get("experiment")
            .ok_or_else(|| CliError::Config("missing key \"experiment\"".into()))?
            .as_str()
        {
            "figure1" => Experiment::Figure1,
            "figure3" => Experiment::Figure3,
            "table1" => Experiment::Table1,
            "table2" => Experiment::Table2,
            "single-run" => Experiment::SingleRun,
            other => {
                return Err(CliError::Config(format!("unknown experiment {other:?}")));
            }
        };
        let get = |key: &str| map.get(key).map(String::as_str);
        let cfg = Self {
            experiment,
            seed: get("seed").map(|v| parse_num("seed", v)).transpose()?.unwrap_or(0),
            runs: get("runs").map(|v| parse_num("runs", v)).transpose()?.unwrap_or(10),
            p: get("p").map(|v| parse_num("p", v)).transpose()?.unwrap_or(32),
            iterations: get("iterations")
                .map(|v| parse_num("iterations", v))
                .transpose()?
                .unwrap_or(3),
            epsilon_grid: get("epsilon_grid")
                .map(|v| parse_list("epsilon_grid", v))
                .transpose()?
                .unwrap_or_else(|| vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 1000.0]),
            users: get("users").map(|v| parse_num("users", v)).transpose()?.unwrap_or(500),
            items: get("items").map(|v| parse_num("items", v)).transpose()?.unwrap_or(200),
            dataset: get("dataset").map(PathBuf::from),
            n_grid: get("n_grid")
                .map(|v| parse_list("n_grid", v))
                .transpose()?
                .unwrap_or_else(|| vec![1000, 2000]),
            k_grid: get("k_grid").map(|v| parse_list("k_grid", v)).transpose()?,
            trials: get("trials").map(|v| parse_num("trials", v)).transpose()?.unwrap_or(5),
            s_grid: get("s_grid")
                .map(|v| parse_list("s_grid", v))
                .transpose()?
                .unwrap_or_else(|| vec![1, 2, 4, 8, 16, 64, 256, 1024]),
            eigenvalues: get("eigenvalues")
                .map(|v| parse_list("eigenvalues", v))
                .transpose()?
                .unwrap_or_else(|| vec![4.0, 1.0, 0.1]),
            k: get("k").map(|v| parse_num("k", v)).transpose()?.unwrap_or(1),
            epsilon: get("epsilon").map(|v| parse_num("epsilon", v)).transpose()?,
            delta: get("delta").map(|v| parse_num("delta", v)).transpose()?,
            canonical: map
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join("\n"),
        };
        if cfg.runs < 1 {
            return Err(CliError::Config("runs must be >= 1".into()));
        }
        cfg.budget()?;
        Ok(cfg)
    }

    /// Budget from explicit epsilon/delta keys, if present. Enforces the
    /// accountant's validity condition delta <= exp(-epsilon/4).
    pub fn budget(&self) -> Result<Option<PrivacyBudget>> {
        match self.epsilon {
            None => Ok(None),
            Some(eps) => {
                if eps <= 0.0 {
                    return Err(CliError::Config("epsilon must be positive".into()));
                }
                let delta = self.delta.unwrap_or_else(|| PrivacyBudget::default_delta(eps));
                if !(delta > 0.0 && delta < 1.0) {
                    return Err(CliError::Config("delta must lie in (0,1)".into()));
                }
                let b = PrivacyBudget::new(eps, delta);
                if !b.valid() {
                    return Err(CliError::Config(format!(
                        "invalid delta {delta:e}: the privacy analysis requires \
                         delta <= exp(-epsilon/4) = {:e}",
                        (-eps / 4.0).exp()
                    )));
                }
                Ok(Some(b))
            }
        }
    }

    /// Apply a seed override (flag or environment); folded into the config
    /// hash so overridden runs are distinguishable from the file's own seed.
    pub fn set_seed(&mut self, seed: u64) {
        if seed != self.seed {
            self.seed = seed;
            self.canonical.push_str(&format!("\nseed_override={seed}"));
        }
    }

    /// Stable 64-bit hash of the canonical key=value text.
    pub fn hash(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for b in self.canonical.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }

    fn header_comment(&self) -> String {
        format!(
            "# config_hash={:016x}; conventions: natural logs, asymptotic constants = 1, unit-cost model\n",
            self.hash()
        )
    }
}

/// Percentile bootstrap confidence interval: (mean, lo, hi).
pub fn bootstrap_ci(
    values: &[f64],
    level: f64,
    resamples: usize,
    seed: u64,
) -> Result<(f64, f64, f64)> {
    if values.is_empty() {
        return Err(CliError::EmptyInput);
    }
    assert!(level > 0.0 && level < 1.0);
    assert!(resamples >= 1);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let mut sampler = RngStream::new(seed, StreamPurpose::Bootstrap).sampler();
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| {
            let mut acc = 0.0;
            for _ in 0..values.len() {
                acc += values[sampler.next_index(values.len())];
            }
            acc / values.len() as f64
        })
        .collect();
    means.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |p: f64| -> f64 {
        let idx = (p * (means.len() - 1) as f64).round() as usize;
        means[idx]
    };
    let tail = (1.0 - level) / 2.0;
    Ok((mean, q(tail), q(1.0 - tail)))
}

fn write_artifact(out: &Path, name: &str, body: String) -> Result<PathBuf> {
    std::fs::create_dir_all(out)?;
    let path = out.join(name);
    std::fs::write(&path, body)?;
    Ok(path)
}

/// Run the configured experiment; returns the artifact files written.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    match cfg.experiment {
        Experiment::Figure1 => figure1(cfg, out),
        Experiment::Figure3 => figure3(cfg, out),
        Experiment::Table1 => table1(cfg, out),
        Experiment::Table2 => table2(cfg, out),
        Experiment::SingleRun => single_run(cfg, out),
    }
}

/// Relative filter error vs epsilon for every sensitivity calibration.
/// Cells (method x epsilon) run concurrently; rows are sorted before write.
fn figure1(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let ds = match &cfg.dataset {
        Some(path) => dppm::recsys::load_dataset(path)?,
        None => synthetic_power_law(cfg.users, cfg.items, cfg.seed)?,
    };
    let dataset_name = match &cfg.dataset {
        Some(p) => p
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into()),
        None => format!("synthetic-{}x{}", cfg.users, cfg.items),
    };
    if cfg.p > ds.items() {
        return Err(CliError::Config(format!(
            "p = {} exceeds item count {}",
            cfg.p,
            ds.items()
        )));
    }
    let norm = build_item_item(&ds);
    let u_p = symmetric_eig(&norm.p_tilde)?.top_k(cfg.p);
    let r_p_true = lowpass_filter(&ds, &u_p)?;

    let mut jobs: Vec<(SensitivityPolicy, f64)> = Vec::new();
    for policy in dppm::recsys::experiment_policies(cfg.p) {
        for &eps in &cfg.epsilon_grid {
            jobs.push((policy, eps));
        }
    }
    let cells: Vec<ExperimentCell> = jobs
        .par_iter()
        .map(|&(policy, epsilon)| -> Result<Vec<ExperimentCell>> {
            let budget = PrivacyBudget::new(epsilon, PrivacyBudget::default_delta(epsilon));
            let mut rows = Vec::with_capacity(cfg.runs);
            for run in 0..cfg.runs {
                let run_cfg = PowerMethodConfig {
                    target_rank: cfg.p,
                    iteration_rank: cfg.p,
                    iterations: cfg.iterations,
                    budget: Some(budget),
                    policy,
                    seed: cfg.seed + run as u64,
                };
                let (u_tilde, _) = run_centralized(&norm.p_tilde, &run_cfg, None)?;
                let approx = lowpass_filter(&ds, &u_tilde)?;
                rows.push(ExperimentCell {
                    method: policy.name(),
                    epsilon,
                    run,
                    rel_error: relative_error(&r_p_true, &approx)?,
                });
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let mut rows: Vec<&ExperimentCell> = cells.iter().collect();
    rows.sort_by(|a, b| {
        (a.method, a.epsilon, a.run)
            .partial_cmp(&(b.method, b.epsilon, b.run))
            .unwrap()
    });
    let mut body = cfg.header_comment();
    body.push_str("dataset,method,epsilon,run,rel_error\n");
    for c in &rows {
        writeln!(
            body,
            "{dataset_name},{},{},{},{}",
            c.method, c.epsilon, c.run, c.rel_error
        )
        .unwrap();
    }
    let raw = write_artifact(out, "figure1.csv", body)?;

    // companion summary with bootstrap confidence intervals per cell
    let mut summary = cfg.header_comment();
    summary.push_str("dataset,method,epsilon,mean,lo99,hi99\n");
    let mut keys: Vec<(&str, f64)> = jobs.iter().map(|&(p, e)| (p.name(), e)).collect();
    keys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (method, eps) in keys {
        let vals: Vec<f64> = cells
            .iter()
            .filter(|c| c.method == method && c.epsilon == eps)
            .map(|c| c.rel_error)
            .collect();
        let (mean, lo, hi) = bootstrap_ci(&vals, 0.99, 1000, cfg.seed)?;
        writeln!(summary, "{dataset_name},{method},{eps},{mean},{lo},{hi}").unwrap();
    }
    let summary_path = write_artifact(out, "figure1_summary.csv", summary)?;
    Ok(vec![raw, summary_path])
}

/// Sensitivity-ratio study: one row per (n, k) grid point.
fn figure3(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let mut studies: Vec<RatioStudyConfig> = cfg
        .n_grid
        .iter()
        .map(|&n| {
            let mut s = RatioStudyConfig::new(n, cfg.seed);
            if let Some(ks) = &cfg.k_grid {
                if ks.iter().any(|&k| k > n) {
                    return Err(CliError::Config(format!("k_grid entry exceeds n = {n}")));
                }
                s.k_grid = ks.clone();
            }
            s.trials = cfg.trials;
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    studies.sort_by_key(|s| s.n);

    let tables = studies
        .par_iter()
        .map(|s| ratio_empirical(s).map_err(CliError::from))
        .collect::<Result<Vec<_>>>()?;

    let mut body = cfg.header_comment();
    body.push_str("n,k,ratio_empirical,ratio_theoretical\n");
    for table in tables {
        for p in table {
            writeln!(body, "{},{},{},{}", p.n, p.k, p.empirical, p.theoretical).unwrap();
        }
    }
    Ok(vec![write_artifact(out, "figure3.csv", body)?])
}

/// Per-iteration overhead counts for both federation modes.
fn table1(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let mut body = cfg.header_comment();
    body.push_str("mode,s,n,p,client_comm,server_comm,client_flops,server_flops\n");
    let n = *cfg.n_grid.first().unwrap_or(&1000);
    for mode in [FederationMode::SecureAggregation, FederationMode::PlainFederated] {
        for &s in &cfg.s_grid {
            let r = overhead(s, n, cfg.p, mode);
            writeln!(body, "{}", r.to_csv_row()).unwrap();
        }
    }
    Ok(vec![write_artifact(out, "table1.csv", body)?])
}

/// Coherence statistics of the item-item matrix for several seeded datasets,
/// with the two noise-bound branch values they induce at iteration rank p.
fn table2(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let mut body = cfg.header_comment();
    body.push_str("dataset,n,mu0,mu1,mu0_branch,winning_branch\n");
    for offset in 0..3u64 {
        let seed = cfg.seed + offset;
        let ds = synthetic_power_law(cfg.users, cfg.items, seed)?;
        let norm = build_item_item(&ds);
        let rep = coherence(&norm.p_tilde)?;
        let mu0_branch = rep.mu0 * ((cfg.p as f64) * (rep.n as f64).ln()).sqrt();
        let winner = if mu0_branch <= rep.mu1 { "mu0" } else { "mu1" };
        writeln!(
            body,
            "synthetic-{seed},{},{},{},{mu0_branch},{winner}",
            rep.n, rep.mu0, rep.mu1
        )
        .unwrap();
    }
    Ok(vec![write_artifact(out, "table2.csv", body)?])
}

/// One power-method run on a diagonal-spectrum matrix; prints the projection
/// error against the exact eigenbasis and writes the iteration trace.
fn single_run(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let eigs = &cfg.eigenvalues;
    if eigs.is_empty() {
        return Err(CliError::Config("eigenvalues must be nonempty".into()));
    }
    let n = eigs.len();
    let p = cfg.p.min(n);
    if cfg.k > p {
        return Err(CliError::Config(format!("k = {} exceeds p = {p}", cfg.k)));
    }
    let a = DenseMatrix::diag(eigs);
    let u_k = DenseMatrix::from_fn(n, cfg.k, |i, j| if i == j { 1.0 } else { 0.0 });
    let run_cfg = PowerMethodConfig {
        target_rank: cfg.k,
        iteration_rank: p,
        iterations: cfg.iterations,
        budget: cfg.budget()?,
        policy: SensitivityPolicy::ImprovedMaxRow,
        seed: cfg.seed,
    };
    let (x, trace) = run_centralized(&a, &run_cfg, Some(&u_k))?;
    let err = projection_error(&x, &u_k)?;
    println!("projection error: {err:e}");
    if let Some(check) = trace.budget_check {
        println!(
            "budget: epsilon_effective = {}, satisfied = {}",
            check.epsilon_effective, check.satisfied
        );
    }
    let mut body = cfg.header_comment();
    body.push_str(&trace.to_csv());
    Ok(vec![write_artifact(out, "single_run_trace.csv", body)?])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> ExperimentConfig {
        ExperimentConfig::parse(text).unwrap()
    }

    #[test]
    fn config_parsing() {
        let cfg = parse("experiment = figure3\nseed = 7\nn_grid = 100, 200\ntrials = 2\n");
        assert_eq!(cfg.experiment, Experiment::Figure3);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.n_grid, vec![100, 200]);

        assert!(matches!(
            ExperimentConfig::parse("experiment = nope"),
            Err(CliError::Config(_))
        ));
        assert!(matches!(
            ExperimentConfig::parse("bogus_key = 1"),
            Err(CliError::Config(_))
        ));
        assert!(matches!(
            ExperimentConfig::parse("experiment = figure1\nexperiment = figure1"),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn invalid_delta_is_config_error() {
        let err = ExperimentConfig::parse(
            "experiment = single-run\nepsilon = 10\ndelta = 0.5\n",
        )
        .unwrap_err();
        match err {
            CliError::Config(msg) => assert!(msg.contains("exp(-epsilon/4)"), "{msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
        assert_eq!(
            ExperimentConfig::parse("experiment = single-run\nepsilon = 10\ndelta = 0.5\n")
                .unwrap_err()
                .exit_code(),
            2
        );
    }

    #[test]
    fn config_hash_stable_under_formatting() {
        let a = parse("experiment = figure1\nseed = 1");
        let b = parse("seed=1   # comment\n\nexperiment=figure1");
        assert_eq!(a.hash(), b.hash());
        let c = parse("experiment = figure1\nseed = 2");
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn bootstrap_basics() {
        let (m, lo, hi) = bootstrap_ci(&[2.0, 2.0, 2.0], 0.99, 200, 1).unwrap();
        assert_eq!((m, lo, hi), (2.0, 2.0, 2.0));

        let (m, lo, hi) = bootstrap_ci(&[0.0, 1.0], 0.99, 1000, 1).unwrap();
        assert!((m - 0.5).abs() < 1e-12);
        assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi) && lo <= hi);

        let (m, lo, hi) = bootstrap_ci(&[0.7], 0.99, 50, 1).unwrap();
        assert_eq!((m, lo, hi), (0.7, 0.7, 0.7));

        assert!(matches!(
            bootstrap_ci(&[], 0.99, 10, 1),
            Err(CliError::EmptyInput)
        ));

        // deterministic given seed
        let x: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        assert_eq!(
            bootstrap_ci(&x, 0.95, 500, 9).unwrap(),
            bootstrap_ci(&x, 0.95, 500, 9).unwrap()
        );
    }

    #[test]
    fn figure3_shape_and_reproducibility() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse("experiment = figure3\nn_grid = 64\nk_grid = 1, 4, 16\ntrials = 2\n");
        let files = run_experiment(&cfg, dir.path()).unwrap();
        let body = std::fs::read_to_string(&files[0]).unwrap();
        // comment + header + one row per k grid point
        assert_eq!(body.lines().count(), 2 + 3);

        let dir2 = tempfile::tempdir().unwrap();
        let files2 = run_experiment(&cfg, dir2.path()).unwrap();
        assert_eq!(body, std::fs::read_to_string(&files2[0]).unwrap());
    }

    #[test]
    fn table1_and_table2_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse("experiment = table1\ns_grid = 1, 8\np = 4\nn_grid = 100\n");
        let files = run_experiment(&cfg, dir.path()).unwrap();
        let body = std::fs::read_to_string(&files[0]).unwrap();
        assert_eq!(body.lines().count(), 2 + 4);
        assert!(body.contains("plain-federated,8,100,4,400,3200,400,3200"));

        let cfg2 = parse("experiment = table2\nusers = 20\nitems = 12\np = 4\n");
        let files2 = run_experiment(&cfg2, dir.path()).unwrap();
        let body2 = std::fs::read_to_string(&files2[0]).unwrap();
        assert_eq!(body2.lines().count(), 2 + 3);
    }

    #[test]
    fn single_run_noiseless_converges() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse(
            "experiment = single-run\neigenvalues = 4, 1, 0.1\nk = 1\np = 2\niterations = 20\n",
        );
        let files = run_experiment(&cfg, dir.path()).unwrap();
        let body = std::fs::read_to_string(&files[0]).unwrap();
        let last = body.lines().last().unwrap();
        let proj: f64 = last.split(',').nth(4).unwrap().parse().unwrap();
        assert!(proj <= 1e-8, "proj {proj}");
    }

    #[test]
    fn figure1_small_grid() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse(
            "experiment = figure1\nusers = 40\nitems = 24\np = 6\nruns = 2\nepsilon_grid = 10, 100\n",
        );
        let files = run_experiment(&cfg, dir.path()).unwrap();
        let body = std::fs::read_to_string(&files[0]).unwrap();
        // 4 methods x 2 epsilons x 2 runs
        assert_eq!(body.lines().count(), 2 + 16);
        let summary = std::fs::read_to_string(&files[1]).unwrap();
        assert_eq!(summary.lines().count(), 2 + 8);
        // byte-identical on re-run despite parallel cells
        let dir2 = tempfile::tempdir().unwrap();
        let files2 = run_experiment(&cfg, dir2.path()).unwrap();
        assert_eq!(body, std::fs::read_to_string(&files2[0]).unwrap());
    }
}
