//! Recommender-system application: interaction ingestion, normalized
//! user/item matrices, per-user partitioning of the item-item matrix,
//! DP eigenvector extraction, ideal low-pass filtering, and the relative
//! approximation-error experiment.

use std::path::Path;

use crate::error::{Error, Result};
use crate::federated::{run_federated, PartyShard, ShardData};
use crate::matrix::DenseMatrix;
use crate::ppm::{run_centralized, IterationTrace, PowerMethodConfig};
use crate::privacy::PrivacyBudget;
use crate::rng::{RngStream, StreamPurpose};
use crate::sensitivity::SensitivityPolicy;

/// Binary user-item interactions with contiguous 0-based ids. Every user has
/// degree >= 1 by construction; the user normalization divides by degree.
#[derive(Debug, Clone)]
pub struct InteractionDataset {
    users: usize,
    items: usize,
    /// Sorted unique (user, item) pairs.
    interactions: Vec<(usize, usize)>,
    user_items: Vec<Vec<usize>>,
    item_degrees: Vec<usize>,
    duplicates_removed: usize,
}

impl InteractionDataset {
    /// Build from raw id pairs: ids are reindexed to contiguous 0-based
    /// ranges, duplicates dropped (counted). Users without interactions
    /// cannot occur after reindexing.
    pub fn from_pairs(pairs: &[(u64, u64)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut user_ids: Vec<u64> = pairs.iter().map(|p| p.0).collect();
        user_ids.sort_unstable();
        user_ids.dedup();
        let mut item_ids: Vec<u64> = pairs.iter().map(|p| p.1).collect();
        item_ids.sort_unstable();
        item_ids.dedup();
        let uidx = |id: u64| user_ids.binary_search(&id).expect("indexed above");
        let iidx = |id: u64| item_ids.binary_search(&id).expect("indexed above");

        let mut interactions: Vec<(usize, usize)> =
            pairs.iter().map(|&(u, i)| (uidx(u), iidx(i))).collect();
        interactions.sort_unstable();
        let before = interactions.len();
        interactions.dedup();
        let duplicates_removed = before - interactions.len();

        let users = user_ids.len();
        let items = item_ids.len();
        let mut user_items = vec![Vec::new(); users];
        let mut item_degrees = vec![0usize; items];
        for &(u, i) in &interactions {
            user_items[u].push(i);
            item_degrees[i] += 1;
        }
        Ok(Self {
            users,
            items,
            interactions,
            user_items,
            item_degrees,
            duplicates_removed,
        })
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn items(&self) -> usize {
        self.items
    }

    pub fn interactions(&self) -> &[(usize, usize)] {
        &self.interactions
    }

    pub fn duplicates_removed(&self) -> usize {
        self.duplicates_removed
    }

    pub fn user_degree(&self, u: usize) -> usize {
        self.user_items[u].len()
    }

    pub fn item_degrees(&self) -> &[usize] {
        &self.item_degrees
    }

    /// Dense binary interaction matrix R (users x items).
    pub fn interaction_matrix(&self) -> DenseMatrix {
        let mut r = DenseMatrix::zeros(self.users, self.items);
        for &(u, i) in &self.interactions {
            r.set(u, i, 1.0);
        }
        r
    }
}

/// Parse a triples text file: one "user_id item_id" pair of whitespace
/// separated integers per line; blank lines are skipped.
pub fn load_dataset(path: &Path) -> Result<InteractionDataset> {
    let text = std::fs::read_to_string(path)?;
    let mut pairs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let parse = |tok: Option<&str>, lineno: usize| -> Result<u64> {
            let tok = tok.ok_or(Error::Parse {
                line: lineno + 1,
                msg: "expected two integers".into(),
            })?;
            tok.parse::<u64>().map_err(|e| Error::Parse {
                line: lineno + 1,
                msg: format!("bad integer {tok:?}: {e}"),
            })
        };
        let u = parse(fields.next(), lineno)?;
        let i = parse(fields.next(), lineno)?;
        if fields.next().is_some() {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: "expected exactly two fields".into(),
            });
        }
        pairs.push((u, i));
    }
    InteractionDataset::from_pairs(&pairs)
}

/// User-normalized interactions and the item-item matrix they induce.
/// Item degrees are treated as public.
#[derive(Debug, Clone)]
pub struct NormalizedMatrices {
    /// `U^{-1/2} R` (users x items).
    pub r_tilde: DenseMatrix,
    /// `P = sum_u (1/d_u) R_u^T R_u` (items x items), symmetric PSD.
    pub p_tilde: DenseMatrix,
    pub item_degrees: Vec<usize>,
}

pub fn build_item_item(ds: &InteractionDataset) -> NormalizedMatrices {
    let (s, n) = (ds.users, ds.items);
    let mut r_tilde = DenseMatrix::zeros(s, n);
    let mut p_tilde = DenseMatrix::zeros(n, n);
    for u in 0..s {
        let items = &ds.user_items[u];
        let d = items.len() as f64;
        let inv_sqrt = 1.0 / d.sqrt();
        for &i in items {
            r_tilde.set(u, i, inv_sqrt);
        }
        // entry formula: P_ij += (1/d_u) r_ui r_uj
        for &i in items {
            for &j in items {
                p_tilde.set(i, j, p_tilde.get(i, j) + 1.0 / d);
            }
        }
    }
    NormalizedMatrices {
        r_tilde,
        p_tilde,
        item_degrees: ds.item_degrees.clone(),
    }
}

/// Per-user additive shards of the item-item matrix for the federated run.
pub fn user_shards(ds: &InteractionDataset) -> Vec<PartyShard> {
    (0..ds.users)
        .map(|u| PartyShard {
            index: u,
            data: ShardData::UserItems {
                items: ds.user_items[u].clone(),
                weight: 1.0 / ds.user_items[u].len() as f64,
                n: ds.items,
            },
        })
        .collect()
}

/// DP approximation of the top-p eigenvectors of the item-item matrix via the
/// federated power method under the sqrt(2)-scaled row-norm sensitivity,
/// protecting one user-item interaction under deletion adjacency.
pub fn dp_top_eigenvectors(
    ds: &InteractionDataset,
    p: usize,
    iterations: usize,
    budget: Option<PrivacyBudget>,
    seed: u64,
) -> Result<(DenseMatrix, IterationTrace)> {
    let cfg = PowerMethodConfig {
        target_rank: p,
        iteration_rank: p,
        iterations,
        budget,
        policy: SensitivityPolicy::RecsysSqrt2,
        seed,
    };
    run_federated(&user_shards(ds), &cfg, None)
}

/// Result of the exhaustive deletion sweep.
#[derive(Debug, Clone, Copy)]
pub struct SensitivityOracleReport {
    /// Max over deletions of `sqrt(sum_i ||C_{i:}||_1^2)`.
    pub max_constraint: f64,
    pub checked: usize,
    /// Deleting a degree-1 user's only interaction removes the user entirely
    /// and leaves 1/(d-1) undefined; such deletions are skipped and counted.
    pub skipped_degree_one: usize,
}

/// For every deletable interaction, form the item-item difference matrix
/// explicitly and compare its mixed row norm against the closed form
/// `4(d-1)/d^2 + 1` to 1e-10. The closed form caps at 2 (equality at d = 2),
/// giving the sqrt(2) sensitivity bound.
pub fn recsys_sensitivity_oracle(ds: &InteractionDataset) -> Result<SensitivityOracleReport> {
    assert!(ds.interactions.len() <= 10_000, "oracle is for small datasets");
    let mut max_constraint = 0.0f64;
    let mut checked = 0usize;
    let mut skipped = 0usize;
    for &(u, v) in &ds.interactions {
        let items = &ds.user_items[u];
        let d = items.len();
        if d == 1 {
            skipped += 1;
            continue;
        }
        // C = (1/d) r r^T - (1/(d-1)) r' r'^T restricted to the user's items;
        // rows outside the user's item set are zero.
        let df = d as f64;
        let mut sum_sq = 0.0f64;
        for &i in items {
            let mut row_l1 = 0.0f64;
            for &j in items {
                let before = 1.0 / df;
                let after = if i == v || j == v {
                    0.0
                } else {
                    1.0 / (df - 1.0)
                };
                row_l1 += (before - after).abs();
            }
            sum_sq += row_l1 * row_l1;
        }
        let closed = 4.0 * (df - 1.0) / (df * df) + 1.0;
        assert!(
            (sum_sq - closed).abs() <= 1e-10,
            "deletion ({u},{v}) d={d}: explicit {sum_sq} vs closed {closed}"
        );
        max_constraint = max_constraint.max(sum_sq.sqrt());
        checked += 1;
    }
    Ok(SensitivityOracleReport {
        max_constraint,
        checked,
        skipped_degree_one: skipped,
    })
}

/// Ideal low-pass filter `R_p = R I^{-1/2} U_p U_p^T I^{1/2}`. Degree-0 items
/// get a zero inverse factor; their R columns are zero anyway.
pub fn lowpass_filter(ds: &InteractionDataset, u_p: &DenseMatrix) -> Result<DenseMatrix> {
    let n = ds.items;
    if u_p.rows() != n {
        return Err(Error::ShapeMismatch {
            expected: format!("{n} rows"),
            got: format!("{} rows", u_p.rows()),
        });
    }
    let r = ds.interaction_matrix();
    if u_p.cols() == 0 {
        return Ok(DenseMatrix::zeros(ds.users, n));
    }
    let inv_sqrt: Vec<f64> = ds
        .item_degrees
        .iter()
        .map(|&d| if d == 0 { 0.0 } else { 1.0 / (d as f64).sqrt() })
        .collect();
    let sqrt_deg: Vec<f64> = ds.item_degrees.iter().map(|&d| (d as f64).sqrt()).collect();

    // scale U_p rows by I^{-1/2}, then project, then scale columns by I^{1/2}
    let scaled = DenseMatrix::from_fn(n, u_p.cols(), |i, j| inv_sqrt[i] * u_p.get(i, j));
    let proj = scaled.matmul(&u_p.transpose())?;
    let filter = DenseMatrix::from_fn(n, n, |i, j| proj.get(i, j) * sqrt_deg[j]);
    r.matmul(&filter)
}

/// `||approx - reference||_F / ||reference||_F`.
pub fn relative_error(reference: &DenseMatrix, approx: &DenseMatrix) -> Result<f64> {
    if reference.rows() != approx.rows() || reference.cols() != approx.cols() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} x {}", reference.rows(), reference.cols()),
            got: format!("{} x {}", approx.rows(), approx.cols()),
        });
    }
    let denom = reference.frobenius();
    if denom == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(approx.sub(reference)?.frobenius() / denom)
}

/// Seed-fixed synthetic benchmark with power-law degrees and community
/// structure: items are laid out round-robin into up to 32 groups, each user
/// has a home group and draws items there under a log-uniform (power-law)
/// within-group popularity, crossing into a random group 10% of the time;
/// user degrees follow a heavy-tailed power law. The communities give the
/// item-item matrix a strong leading eigenspace, so subspace recovery under
/// noise is measurable at benchmark scale.
pub fn synthetic_power_law(users: usize, items: usize, seed: u64) -> Result<InteractionDataset> {
    assert!(users >= 1 && items >= 2);
    let groups = (items / 6).clamp(1, 32);
    let max_degree = (items / 4).max(2);
    // item j sits in group j % groups at within-group popularity rank j / groups
    let group_size = |g: usize| items / groups + usize::from(g < items % groups);

    let mut pairs: Vec<(u64, u64)> = Vec::new();
    for u in 0..users {
        let mut s = RngStream::new(seed, StreamPurpose::Data)
            .with_party(u as u64)
            .sampler();
        let home = s.next_index(groups);
        // heavy-tailed degree: 5 / uniform^{0.7}, capped
        let degree = ((5.0 / s.next_uniform().powf(0.7)) as usize).clamp(2, max_degree);
        let mut chosen: Vec<usize> = Vec::with_capacity(degree);
        while chosen.len() < degree {
            let g = if s.next_uniform() < 0.1 {
                s.next_index(groups)
            } else {
                home
            };
            let size = group_size(g);
            // log-uniform rank: low ranks (popular items) drawn most often
            let r = s.next_uniform();
            let rank = (((size as f64).powf(1.0 - r) - 1.0) as usize).min(size - 1);
            let item = g + groups * rank;
            if !chosen.contains(&item) {
                chosen.push(item);
            }
        }
        for item in chosen {
            pairs.push((u as u64, item as u64));
        }
    }
    InteractionDataset::from_pairs(&pairs)
}

/// One (method, epsilon, run) measurement of the experiment grid.
#[derive(Debug, Clone)]
pub struct ExperimentCell {
    pub method: &'static str,
    pub epsilon: f64,
    pub run: usize,
    pub rel_error: f64,
}

#[derive(Debug, Clone)]
pub struct RelativeErrorConfig {
    pub epsilon_grid: Vec<f64>,
    pub runs: usize,
    pub p: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for RelativeErrorConfig {
    fn default() -> Self {
        Self {
            epsilon_grid: vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 1000.0],
            runs: 10,
            p: 32,
            iterations: 3,
            seed: 0,
        }
    }
}

/// Sensitivity calibrations compared in the relative-error experiment. The
/// non-adaptive baseline is pinned to sqrt(2 p), the a-priori ceiling of the
/// sqrt(2)-scaled row norm at iteration rank p, so it brackets the adaptive
/// policies from above at every epsilon.
pub fn experiment_policies(p: usize) -> Vec<SensitivityPolicy> {
    vec![
        SensitivityPolicy::RecsysSqrt2,
        SensitivityPolicy::ImprovedMaxRow,
        SensitivityPolicy::Prior,
        SensitivityPolicy::FixedWorstCase((2.0 * p as f64).sqrt()),
    ]
}

/// Relative filter error across (method, epsilon, run). The aggregate noise
/// of the federated protocol equals central calibration, so each cell runs
/// the centralized method on the item-item matrix directly.
pub fn relative_error_experiment(
    ds: &InteractionDataset,
    cfg: &RelativeErrorConfig,
) -> Result<Vec<ExperimentCell>> {
    let norm = build_item_item(ds);
    let u_p = crate::eig::symmetric_eig(&norm.p_tilde)?.top_k(cfg.p);
    let r_p_true = lowpass_filter(ds, &u_p)?;

    let mut cells = Vec::new();
    for policy in experiment_policies(cfg.p) {
        for &epsilon in &cfg.epsilon_grid {
            let budget = PrivacyBudget::new(epsilon, PrivacyBudget::default_delta(epsilon));
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
                let r_p_approx = lowpass_filter(ds, &u_tilde)?;
                cells.push(ExperimentCell {
                    method: policy.name(),
                    epsilon,
                    run,
                    rel_error: relative_error(&r_p_true, &r_p_approx)?,
                });
            }
        }
    }
    Ok(cells)
}

/// Mean relative error per (method, epsilon), ordered as produced.
pub fn mean_errors(cells: &[ExperimentCell]) -> Vec<(&'static str, f64, f64)> {
    let mut out: Vec<(&'static str, f64, f64, usize)> = Vec::new();
    for cell in cells {
        match out
            .iter_mut()
            .find(|(m, e, _, _)| *m == cell.method && *e == cell.epsilon)
        {
            Some(entry) => {
                entry.2 += cell.rel_error;
                entry.3 += 1;
            }
            None => out.push((cell.method, cell.epsilon, cell.rel_error, 1)),
        }
    }
    out.into_iter()
        .map(|(m, e, sum, c)| (m, e, sum / c as f64))
        .collect()
}
