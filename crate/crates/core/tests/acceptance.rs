//! End-to-end acceptance suite: one test per release gate, each printing a
//! PASS line with its runtime and asserting a wall-clock limit. Tolerances
//! are pinned inline next to each assertion.

use std::time::{Duration, Instant};

use dppm::bounds::{ratio_empirical, ratio_theoretical, spearman, RatioStudyConfig};
use dppm::eig::symmetric_eig;
use dppm::federated::{
    overhead, random_partition, run_federated, FederationMode, OverheadReport,
};
use dppm::matrix::DenseMatrix;
use dppm::ppm::{
    projection_error, run_centralized, run_centralized_with_noise, CentralNoise,
    PowerMethodConfig,
};
use dppm::privacy::{calibrate_sigma, verify_algorithm_budget, PrivacyBudget};
use dppm::recsys::{
    mean_errors, recsys_sensitivity_oracle, relative_error_experiment, synthetic_power_law,
    RelativeErrorConfig,
};
use dppm::rng::{gaussian_matrix, RngStream, StreamPurpose};
use dppm::sensitivity::{
    brute_force_sensitivity, coherence, single_entry_update, SensitivityPolicy,
};

fn random_orthonormal(seed: u64, n: usize, p: usize) -> DenseMatrix {
    let g = gaussian_matrix(RngStream::new(seed, StreamPurpose::Trial), n, p, 1.0).unwrap();
    dppm::qr::qr_orthonormalize(&g).unwrap().0
}

fn random_psd(seed: u64, n: usize) -> DenseMatrix {
    let g = gaussian_matrix(RngStream::new(seed, StreamPurpose::Trial), n, n, 1.0).unwrap();
    g.matmul(&g.transpose()).unwrap().scale(1.0 / n as f64)
}

fn finish(name: &str, start: Instant, limit: Duration) {
    let elapsed = start.elapsed();
    assert!(
        elapsed < limit,
        "{name}: took {elapsed:?}, limit {limit:?}"
    );
    println!("PASS {name} ({:.2}s)", elapsed.as_secs_f64());
}

/// The adaptive row-norm sensitivity never exceeds the sqrt(p)-scaled
/// max-entry bound on random orthonormal iterates.
#[test]
fn sensitivity_dominates_prior_on_random_orthonormal() {
    let start = Instant::now();
    for i in 0..1000u64 {
        let n = 4 + (i as usize % 61); // n in {4, ..., 64}
        let p = 1 + (i as usize * 7 % n);
        let x = random_orthonormal(i, n, p);
        let improved = SensitivityPolicy::ImprovedMaxRow.evaluate(&x);
        let prior = SensitivityPolicy::Prior.evaluate(&x);
        assert!(
            improved <= prior + 1e-12,
            "n={n} p={p}: improved {improved} > prior {prior}"
        );
    }
    finish(
        "sensitivity dominance on 1000 random orthonormal iterates",
        start,
        Duration::from_secs(5),
    );
}

/// A brute-force search over 10^4 sampled admissible updates never exceeds
/// the declared sensitivity, and a single-entry witness attains it exactly.
#[test]
fn sensitivity_sound_against_brute_force_oracle() {
    let start = Instant::now();
    // 10 iterate matrices x 1000 sampled updates each = 10^4 updates total.
    for seed in 0..10u64 {
        let n = 6 + (seed as usize % 11); // n <= 16
        let p = 1 + (seed as usize % 4);
        let x = random_orthonormal(1000 + seed, n, p);
        let bound = SensitivityPolicy::ImprovedMaxRow.evaluate(&x);
        let stream = RngStream::new(seed, StreamPurpose::Adjacency);
        let observed = brute_force_sensitivity(&x, 1000, stream).unwrap();
        assert!(
            observed <= bound + 1e-10,
            "n={n} p={p}: oracle {observed} > bound {bound}"
        );
    }
    // Witness: on an identity slice the diagonal unit update attains the bound.
    let xi = DenseMatrix::from_fn(8, 3, |i, j| if i == j { 1.0 } else { 0.0 });
    let witness = single_entry_update(8, 0, 0, 1.0).unwrap();
    let attained = witness.matrix().matmul(&xi).unwrap().frobenius();
    let bound = SensitivityPolicy::ImprovedMaxRow.evaluate(&xi);
    assert!((attained - bound).abs() <= 1e-10, "witness {attained} vs bound {bound}");
    finish(
        "sensitivity soundness against brute-force adjacency oracle",
        start,
        Duration::from_secs(30),
    );
}

/// Over a grid of valid budgets, composing every calibrated release and
/// converting back to approximate DP never exceeds the declared epsilon;
/// budgets outside the delta gate are rejected.
#[test]
fn accountant_sound_on_budget_grid() {
    let start = Instant::now();
    let eps_grid = [0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0];
    let delta_grid = [1e-12, 1e-14, 1e-16, 1e-18];
    for &epsilon in &eps_grid {
        for &delta in &delta_grid {
            let budget = PrivacyBudget::new(epsilon, delta);
            assert!(delta <= (-epsilon / 4.0).exp());
            assert!(budget.valid(), "eps={epsilon} delta={delta} should pass the gate");
            for iterations in 1..=20usize {
                let sigma_base = calibrate_sigma(budget, iterations).unwrap();
                // Arbitrary per-iteration sensitivities; sigma scales with them.
                let releases: Vec<(f64, f64)> = (0..iterations)
                    .map(|l| {
                        let d = 0.5 + 0.1 * l as f64;
                        (d, d * sigma_base)
                    })
                    .collect();
                let check = verify_algorithm_budget(budget, iterations, &releases).unwrap();
                assert!(
                    check.epsilon_effective <= epsilon + 1e-12,
                    "eps={epsilon} delta={delta} L={iterations}: composed {}",
                    check.epsilon_effective
                );
                assert!(check.satisfied);
            }
        }
        // Just outside the gate: delta > exp(-eps/4) must be rejected.
        let bad = PrivacyBudget::new(epsilon, ((-epsilon / 4.0).exp() * 2.0).min(0.99));
        assert!(!bad.valid());
        assert!(calibrate_sigma(bad, 3).is_err());
    }
    finish(
        "accountant soundness over the full budget grid",
        start,
        Duration::from_secs(1),
    );
}

/// Federated execution agrees with the centralized method: exactly (to
/// 1e-10) without noise for any partition, bit-for-bit with noise for a
/// single party, and to 1e-10 against the centralized replay of the
/// per-party noise tape for multi-party partitions.
#[test]
fn federated_matches_centralized() {
    let start = Instant::now();
    let parts = [1usize, 2, 4, 8];
    for trial in 0..50u64 {
        let s = parts[trial as usize % parts.len()];
        let n = 12 + (trial as usize % 9);
        let a = random_psd(3000 + trial, n);
        let shards = random_partition(&a, s, 7000 + trial).unwrap();

        let mut cfg = PowerMethodConfig::new(3, 100 + trial);
        cfg.iteration_rank = 6;
        cfg.iterations = 3;

        // Zero noise: any partition reproduces the centralized run.
        let (xf, _) = run_federated(&shards, &cfg, None).unwrap();
        let (xc, _) = run_centralized(&a, &cfg, None).unwrap();
        let diff = xf.max_abs_diff(&xc);
        assert!(diff <= 1e-10, "s={s} n={n}: zero-noise diff {diff}");

        // With noise on shared streams.
        cfg.budget = Some(PrivacyBudget::new(1.0, 1e-6));
        let (xf, tf) = run_federated(&shards, &cfg, None).unwrap();
        if s == 1 {
            let (xc, _) = run_centralized(&a, &cfg, None).unwrap();
            assert!(xf.bit_equal(&xc), "s=1 must be bit-identical");
        } else {
            let (xc, _) =
                run_centralized_with_noise(&a, &cfg, None, CentralNoise::PartyTape { parties: s })
                    .unwrap();
            let diff = xf.max_abs_diff(&xc);
            assert!(diff <= 1e-10, "s={s} n={n}: tape diff {diff}");
        }
        // The per-party scale nu = sigma/sqrt(s) keeps the privacy spend
        // identical across partition sizes.
        let check = tf.budget_check.unwrap();
        assert!(check.epsilon_effective.is_finite());
    }
    finish(
        "federated/centralized equivalence over 50 random partitions",
        start,
        Duration::from_secs(30),
    );
}

/// Exhaustive deletion sweeps over random interaction datasets: every
/// difference matrix matches the closed-form constraint value and never
/// exceeds the sqrt(2) sensitivity ceiling.
#[test]
fn deletion_sensitivity_bounded_by_sqrt2() {
    let start = Instant::now();
    let mut total_checked = 0usize;
    for seed in 0..20u64 {
        let users = 20 + (seed as usize % 15);
        let items = 15 + (seed as usize % 10);
        let ds = synthetic_power_law(users, items, 9000 + seed).unwrap();
        // The oracle itself asserts the closed form 4(d-1)/d^2 + 1 against
        // each explicitly-formed difference matrix to 1e-10.
        let report = recsys_sensitivity_oracle(&ds).unwrap();
        assert!(
            report.max_constraint <= 2f64.sqrt() + 1e-10,
            "seed {seed}: max constraint {}",
            report.max_constraint
        );
        total_checked += report.checked;
    }
    assert!(total_checked > 0);
    finish(
        "deletion sensitivity sweep bounded by sqrt(2)",
        start,
        Duration::from_secs(60),
    );
}

/// Relative filter error on the synthetic recommender dataset: error decays
/// with epsilon, the adaptive calibrations beat the prior one at every
/// epsilon, the non-adaptive worst-case baseline loses everywhere, and the
/// improved calibration reaches 0.3 error at no more than half the epsilon
/// the prior one needs.
#[test]
fn relative_error_trends_across_calibrations() {
    let start = Instant::now();
    let ds = synthetic_power_law(500, 200, 42).unwrap();
    let cfg = RelativeErrorConfig::default(); // eps grid, 10 runs, p=32, L=3
    let cells = relative_error_experiment(&ds, &cfg).unwrap();
    let means = mean_errors(&cells);
    let mean_of = |method: &str, eps: f64| -> f64 {
        means
            .iter()
            .find(|(m, e, _)| *m == method && *e == eps)
            .map(|(_, _, v)| *v)
            .unwrap()
    };
    let methods = ["recsys-sqrt2", "improved-max-row", "prior", "fixed-worst-case"];
    for method in methods {
        let mut prev = f64::INFINITY;
        for &eps in &cfg.epsilon_grid {
            let m = mean_of(method, eps);
            assert!(
                m <= prev + 0.02,
                "{method}: mean error rose from {prev} to {m} at eps={eps}"
            );
            prev = m;
        }
    }
    for &eps in &cfg.epsilon_grid {
        let prior = mean_of("prior", eps);
        let worst = mean_of("fixed-worst-case", eps);
        for adaptive in ["improved-max-row", "recsys-sqrt2"] {
            let m = mean_of(adaptive, eps);
            assert!(m <= prior + 1e-12, "{adaptive} {m} > prior {prior} at eps={eps}");
        }
        for other in ["improved-max-row", "recsys-sqrt2", "prior"] {
            let m = mean_of(other, eps);
            assert!(m <= worst + 1e-12, "{other} {m} > worst-case {worst} at eps={eps}");
        }
    }
    let first_below = |method: &str| -> Option<f64> {
        cfg.epsilon_grid
            .iter()
            .find(|&&e| mean_of(method, e) <= 0.3)
            .copied()
    };
    let eps_improved =
        first_below("improved-max-row").expect("improved policy never reaches 0.3 error");
    // If the prior policy never reaches 0.3 inside the grid, its crossing
    // point is bounded below by the largest grid epsilon (means decrease in
    // epsilon), which still witnesses the factor-2 separation.
    let eps_prior = first_below("prior").unwrap_or(*cfg.epsilon_grid.last().unwrap());
    assert!(
        eps_improved <= eps_prior / 2.0,
        "improved needs eps {eps_improved}, prior lower bound {eps_prior}"
    );
    finish(
        "relative-error trends across sensitivity calibrations",
        start,
        Duration::from_secs(300),
    );
}

/// The measured prior/improved sensitivity ratio is always >= 1, tracks the
/// order-statistics prediction (Spearman >= 0.9), and sits at or above it on
/// at least 90% of the grid.
#[test]
fn sensitivity_ratio_tracks_theory() {
    let start = Instant::now();
    let mut empirical = Vec::new();
    let mut theoretical = Vec::new();
    let mut at_or_above = 0usize;
    for &n in &[1000usize, 2000] {
        let cfg = RatioStudyConfig::new(n, 11); // trials = 5
        assert_eq!(cfg.trials, 5);
        for point in ratio_empirical(&cfg).unwrap() {
            assert!(
                point.empirical >= 1.0 - 1e-12,
                "n={n} k={}: ratio {}",
                point.k,
                point.empirical
            );
            assert!((point.theoretical - ratio_theoretical(point.k, n)).abs() < 1e-15);
            if point.empirical >= point.theoretical {
                at_or_above += 1;
            }
            empirical.push(point.empirical);
            theoretical.push(point.theoretical);
        }
    }
    let rho = spearman(&empirical, &theoretical);
    assert!(rho >= 0.9, "Spearman {rho}");
    assert!(
        at_or_above * 10 >= empirical.len() * 9,
        "empirical >= theoretical at only {at_or_above}/{} points",
        empirical.len()
    );
    finish(
        "sensitivity ratio study tracks the theoretical prediction",
        start,
        Duration::from_secs(180),
    );
}

/// Coherence chain on random PSD matrices: mu0 <= mu1 <= 1, and the row
/// norms of every power-method iterate stay below mu1.
#[test]
fn coherence_chain_bounds_iterate_rows() {
    let start = Instant::now();
    for seed in 0..100u64 {
        let n = 8 + (seed as usize % 9);
        let a = random_psd(5000 + seed, n);
        let rep = coherence(&a).unwrap();
        assert!(rep.mu0 <= rep.mu1 + 1e-8, "mu0 {} > mu1 {}", rep.mu0, rep.mu1);
        assert!(rep.mu1 <= 1.0 + 1e-8, "mu1 {}", rep.mu1);

        let mut cfg = PowerMethodConfig::new(2, seed);
        cfg.iteration_rank = 4;
        cfg.iterations = 4;
        let (_, trace) = run_centralized(&a, &cfg, None).unwrap();
        for rec in &trace.records {
            assert!(
                rec.max_row_l2 <= rep.mu1 + 1e-8,
                "iterate row norm {} exceeds mu1 {}",
                rec.max_row_l2,
                rep.mu1
            );
        }
    }
    finish(
        "coherence chain bounds all power-method iterates",
        start,
        Duration::from_secs(30),
    );
}

/// Noiseless convergence at the theoretically sufficient iteration count for
/// a spectrum with gap ratio 1/2.
#[test]
fn noiseless_convergence_within_predicted_iterations() {
    let start = Instant::now();
    let n = 50usize;
    let k = 3usize;
    let q = 3usize;
    // lambda_{q+1} / lambda_k = 0.5
    let eigenvalues: Vec<f64> = (0..n).map(|i| if i < q { 1.0 } else { 0.5 }).collect();
    let a = DenseMatrix::diag(&eigenvalues);
    let iterations = (4.0 * (n as f64).ln() / 0.5).ceil() as usize;
    let cfg = PowerMethodConfig {
        target_rank: k,
        iteration_rank: 8,
        iterations,
        budget: None,
        policy: SensitivityPolicy::ImprovedMaxRow,
        seed: 77,
    };
    let u_k = symmetric_eig(&a).unwrap().top_k(k);
    let (x, _) = run_centralized(&a, &cfg, Some(&u_k)).unwrap();
    let err = projection_error(&x.leading_columns(k), &u_k).unwrap();
    assert!(err <= 1e-6, "projection error {err} after {iterations} iterations");
    finish(
        "noiseless convergence within the predicted iteration count",
        start,
        Duration::from_secs(10),
    );
}

/// The per-iteration cost counts match their closed forms exactly, and the
/// server side is the party count times the client side.
#[test]
fn overhead_matches_closed_forms() {
    let start = Instant::now();
    let tuples: [(usize, usize, usize); 20] = [
        (1, 10, 4),
        (2, 10, 4),
        (3, 10, 4),
        (4, 10, 4),
        (5, 16, 8),
        (8, 16, 8),
        (16, 16, 8),
        (17, 16, 8),
        (31, 100, 4),
        (32, 100, 4),
        (33, 100, 4),
        (64, 100, 32),
        (100, 200, 32),
        (128, 200, 32),
        (256, 500, 16),
        (500, 500, 16),
        (1000, 1000, 32),
        (1024, 1000, 32),
        (4096, 2000, 64),
        (100_000, 5000, 64),
    ];
    for (s, n, p) in tuples {
        let log2s: u64 = if s == 1 {
            0
        } else {
            (s as f64).log2().ceil() as u64
        };
        let payload = (n * p) as u64;

        let sa = overhead(s, n, p, FederationMode::SecureAggregation);
        let expected_sa = OverheadReport {
            mode: FederationMode::SecureAggregation,
            parties: s as u64,
            n: n as u64,
            p: p as u64,
            client_comm: log2s + payload,
            server_comm: s as u64 * (log2s + payload),
            client_flops: log2s * log2s + payload * log2s.max(1),
            server_flops: s as u64 * (log2s * log2s + payload * log2s.max(1)),
        };
        assert_eq!(sa, expected_sa, "secure aggregation at s={s} n={n} p={p}");

        let plain = overhead(s, n, p, FederationMode::PlainFederated);
        let expected_plain = OverheadReport {
            mode: FederationMode::PlainFederated,
            parties: s as u64,
            n: n as u64,
            p: p as u64,
            client_comm: payload,
            server_comm: s as u64 * payload,
            client_flops: payload,
            server_flops: s as u64 * payload,
        };
        assert_eq!(plain, expected_plain, "plain federation at s={s} n={n} p={p}");

        assert_eq!(sa.server_comm, sa.parties * sa.client_comm);
        assert_eq!(sa.server_flops, sa.parties * sa.client_flops);
        assert_eq!(plain.server_comm, plain.parties * plain.client_comm);
        assert_eq!(plain.server_flops, plain.parties * plain.client_flops);
    }
    finish(
        "overhead model matches closed forms on 20 tuples",
        start,
        Duration::from_secs(1),
    );
}
