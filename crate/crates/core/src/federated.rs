//! Federated private power method over simulated secure aggregation.
//!
//! Each party holds an additive share of the data matrix, computes its local
//! product plus Gaussian noise at the distributed scale `nu = sigma / sqrt(s)`,
//! and the server only ever sees the aggregate. Aggregation is simulated as an
//! exact sum with an isolation contract: no individual share leaves this
//! module. The threat model is honest-but-curious with no dropouts; a missing
//! party is a hard error, not a recovery path.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::ppm::{initial_iterate, IterationRecord, IterationTrace, PowerMethodConfig};
use crate::privacy::{calibrate_sigma, verify_algorithm_budget};
use crate::qr::qr_orthonormalize;
use crate::rng::{gaussian_matrix, RngStream, StreamPurpose};

/// Local data held by one party: either a dense additive share of `A`, or a
/// single user's rank-one contribution `(1/d) r r^T` to an item-item matrix,
/// stored as the item index set to avoid materializing `n x n` per user.
#[derive(Debug, Clone)]
pub enum ShardData {
    Dense(DenseMatrix),
    UserItems {
        items: Vec<usize>,
        weight: f64,
        n: usize,
    },
}

#[derive(Debug, Clone)]
pub struct PartyShard {
    /// 0-based party index; shard lists must be contiguous in this index.
    pub index: usize,
    pub data: ShardData,
}

impl PartyShard {
    pub fn dense(index: usize, a: DenseMatrix) -> Result<Self> {
        if !a.is_symmetric(1e-10) {
            return Err(Error::NotSymmetric);
        }
        Ok(Self {
            index,
            data: ShardData::Dense(a),
        })
    }

    pub fn dim(&self) -> usize {
        match &self.data {
            ShardData::Dense(a) => a.rows(),
            ShardData::UserItems { n, .. } => *n,
        }
    }

    /// Local product `A^{(i)} X`.
    pub fn product(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        match &self.data {
            ShardData::Dense(a) => a.matmul(x),
            ShardData::UserItems { items, weight, n } => {
                if x.rows() != *n {
                    return Err(Error::ShapeMismatch {
                        expected: format!("{n} rows"),
                        got: format!("{} rows", x.rows()),
                    });
                }
                let p = x.cols();
                // (w r r^T) x = w * r * (r^T x)
                let mut proj = vec![0.0f64; p];
                for &i in items {
                    for (j, pj) in proj.iter_mut().enumerate() {
                        *pj += x.get(i, j);
                    }
                }
                let mut out = DenseMatrix::zeros(*n, p);
                for &i in items {
                    for (j, &pj) in proj.iter().enumerate() {
                        out.set(i, j, weight * pj);
                    }
                }
                Ok(out)
            }
        }
    }

    /// Dense form of the share, used by tests and shard-sum checks.
    pub fn to_dense(&self) -> DenseMatrix {
        match &self.data {
            ShardData::Dense(a) => a.clone(),
            ShardData::UserItems { items, weight, n } => {
                let mut m = DenseMatrix::zeros(*n, *n);
                for &i in items {
                    for &j in items {
                        m.set(i, j, *weight);
                    }
                }
                m
            }
        }
    }
}

/// Exact sum of same-shape shares in a fixed reduction order: pairwise left
/// fold over ascending party index. The fixed order makes the result
/// schedule-invariant.
pub fn sec_agg(shares: &[DenseMatrix]) -> Result<DenseMatrix> {
    assert!(!shares.is_empty(), "need at least one share");
    let mut acc = shares[0].clone();
    for share in &shares[1..] {
        acc = acc.add(share)?;
    }
    Ok(acc)
}

fn check_roster(shards: &[PartyShard]) -> Result<usize> {
    assert!(!shards.is_empty(), "need at least one party");
    for (pos, shard) in shards.iter().enumerate() {
        if shard.index != pos {
            return Err(Error::DropoutUnsupported {
                expected: shards.len(),
                got: pos,
            });
        }
    }
    let n = shards[0].dim();
    for shard in shards {
        if shard.dim() != n {
            return Err(Error::ShapeMismatch {
                expected: format!("{n} x {n} shares"),
                got: format!("{0} x {0}", shard.dim()),
            });
        }
    }
    Ok(n)
}

pub fn run_federated(
    shards: &[PartyShard],
    cfg: &PowerMethodConfig,
    oracle_topk: Option<&DenseMatrix>,
) -> Result<(DenseMatrix, IterationTrace)> {
    let n = check_roster(shards)?;
    cfg.validate(n)?;
    let s = shards.len();

    // Distributed noise scale: nu = sigma / sqrt(s), so the aggregate noise
    // variance is s nu^2 = sigma^2, matching central calibration.
    let sigma_base = match cfg.budget {
        Some(b) => Some(calibrate_sigma(b, cfg.iterations)?),
        None => None,
    };
    let nu_base = sigma_base.map(|sig| sig / (s as f64).sqrt());

    let mut x = initial_iterate(n, cfg.iteration_rank, cfg.seed)?;
    let mut trace = IterationTrace::default();
    let mut releases: Vec<(f64, f64)> = Vec::new();
    let mut rho_cum = 0.0;

    for l in 1..=cfg.iterations {
        let delta = cfg.policy.evaluate(&x);
        let max_row = x.max_row_l2();
        let sigma_l = sigma_base.map(|sig| delta * sig);

        let y = aggregate_round(shards, &x, cfg, StreamPurpose::Noise, l, delta, nu_base)?;
        if let Some(sig) = sigma_l {
            releases.push((delta, sig));
            rho_cum += delta * delta / (2.0 * sig * sig);
        }

        let next = match qr_orthonormalize(&y) {
            Ok((q, _)) => q,
            Err(Error::RankDeficient { .. }) if sigma_l.is_some() => {
                let y2 =
                    aggregate_round(shards, &x, cfg, StreamPurpose::Resample, l, delta, nu_base)?;
                let sig = sigma_l.unwrap();
                releases.push((delta, sig));
                rho_cum += delta * delta / (2.0 * sig * sig);
                qr_orthonormalize(&y2)?.0
            }
            Err(e) => return Err(e),
        };

        trace.records.push(IterationRecord {
            iteration: l,
            delta,
            sigma: sigma_l.unwrap_or(0.0),
            max_row_l2: max_row,
            noise_spectral: None,
            projection_error: oracle_topk
                .map(|u| crate::ppm::projection_error(&next, u))
                .transpose()?,
            rho_cumulative: rho_cum,
        });
        x = next;
    }

    if let Some(b) = cfg.budget {
        trace.budget_check = Some(verify_algorithm_budget(b, releases.len(), &releases)?);
    }
    Ok((x, trace))
}

/// One round: each party's `A^{(i)} X + G^{(i)}`, aggregated. Only the sum is
/// returned; per-party messages stay local to this function.
fn aggregate_round(
    shards: &[PartyShard],
    x: &DenseMatrix,
    cfg: &PowerMethodConfig,
    purpose: StreamPurpose,
    iteration: usize,
    delta: f64,
    nu_base: Option<f64>,
) -> Result<DenseMatrix> {
    let mut messages: Vec<DenseMatrix> = Vec::with_capacity(shards.len());
    for shard in shards {
        let mut y_i = shard.product(x)?;
        if let Some(nu) = nu_base {
            let g_i = gaussian_matrix(
                RngStream::new(cfg.seed, purpose)
                    .with_party(shard.index as u64)
                    .with_iteration(iteration as u64),
                x.rows(),
                x.cols(),
                delta * nu,
            )?;
            y_i = y_i.add(&g_i)?;
        }
        messages.push(y_i);
    }
    sec_agg(&messages)
}

/// Per-iteration communication and computation mode for [`overhead`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FederationMode {
    SecureAggregation,
    PlainFederated,
}

impl FederationMode {
    pub fn name(&self) -> &'static str {
        match self {
            FederationMode::SecureAggregation => "secure-aggregation",
            FederationMode::PlainFederated => "plain-federated",
        }
    }
}

/// Exact per-iteration counts under a declared unit-constant cost model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OverheadReport {
    pub mode: FederationMode,
    pub parties: u64,
    pub n: u64,
    pub p: u64,
    pub client_comm: u64,
    pub server_comm: u64,
    pub client_flops: u64,
    pub server_flops: u64,
}

/// Cost-model convention (unit constants): secure aggregation adds one scalar
/// per log2-level handshake on top of the n*p payload, and log2^2 + n*p*log2
/// masking flops with the log factor floored at 1 so a single party still
/// computes its payload; plain federation is payload-only. Server totals are
/// s times the client figures.
pub fn overhead(s: usize, n: usize, p: usize, mode: FederationMode) -> OverheadReport {
    assert!(s >= 1 && n >= 1 && p >= 1);
    let (s64, n64, p64) = (s as u64, n as u64, p as u64);
    let log2s = (64 - (s64 - 1).leading_zeros().min(63)) as u64 * u64::from(s64 > 1);
    let payload = n64 * p64;
    let (client_comm, client_flops) = match mode {
        FederationMode::SecureAggregation => (log2s + payload, log2s * log2s + payload * log2s.max(1)),
        FederationMode::PlainFederated => (payload, payload),
    };
    OverheadReport {
        mode,
        parties: s64,
        n: n64,
        p: p64,
        client_comm,
        server_comm: s64 * client_comm,
        client_flops,
        server_flops: s64 * client_flops,
    }
}

impl OverheadReport {
    pub fn csv_header() -> &'static str {
        "mode,s,n,p,client_comm,server_comm,client_flops,server_flops"
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.mode.name(),
            self.parties,
            self.n,
            self.p,
            self.client_comm,
            self.server_comm,
            self.client_flops,
            self.server_flops
        )
    }
}

/// Split a symmetric matrix into `s` additive dense shards whose fixed-order
/// aggregate is exactly `a`: the last shard is `a` minus the fold of the
/// random ones, so `sec_agg(shards) == a` bitwise.
pub fn random_partition(a: &DenseMatrix, s: usize, seed: u64) -> Result<Vec<PartyShard>> {
    assert!(s >= 1);
    let n = a.rows();
    let mut shards = Vec::with_capacity(s);
    let mut folded: Option<DenseMatrix> = None;
    for i in 0..s - 1 {
        let g = gaussian_matrix(
            RngStream::new(seed, StreamPurpose::Data).with_party(i as u64),
            n,
            n,
            1.0,
        )?;
        let share = g.add(&g.transpose())?.scale(0.5);
        folded = Some(match folded {
            Some(f) => f.add(&share)?,
            None => share.clone(),
        });
        shards.push(PartyShard::dense(i, share)?);
    }
    let last = match folded {
        Some(f) => a.sub(&f)?,
        None => a.clone(),
    };
    shards.push(PartyShard::dense(s - 1, last)?);
    Ok(shards)
}
