//! Counter-based random number streams.
//!
//! Every stream is keyed by `(seed, purpose, party, iteration)` so that any
//! component can regenerate exactly the draws it owns, independent of thread
//! scheduling or evaluation order. Output is a keyed SplitMix64 sequence;
//! Gaussian samples come from inverse-CDF transformation of uniforms, which
//! keeps streams splittable and platform-stable (no rejection steps).

use crate::error::Result;
use crate::matrix::DenseMatrix;

/// What a stream's draws are used for. Part of the stream identity, so two
/// different purposes never share samples even under the same seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamPurpose {
    /// Initial Gaussian sketch behind `X^0`.
    Init,
    /// Per-iteration privacy noise.
    Noise,
    /// One-shot fresh noise after a rank-deficient QR.
    Resample,
    /// Random adjacency updates for the sensitivity oracle.
    Adjacency,
    /// Independent trials in the sensitivity-ratio study.
    Trial,
    /// Synthetic dataset generation.
    Data,
    /// Bootstrap resampling.
    Bootstrap,
}

impl StreamPurpose {
    fn tag(self) -> u64 {
        match self {
            StreamPurpose::Init => 0x494e4954,
            StreamPurpose::Noise => 0x4e4f4953,
            StreamPurpose::Resample => 0x52455341,
            StreamPurpose::Adjacency => 0x41444a41,
            StreamPurpose::Trial => 0x54524941,
            StreamPurpose::Data => 0x44415441,
            StreamPurpose::Bootstrap => 0x424f4f54,
        }
    }
}

/// Identity of one random stream. Identical identities yield identical sample
/// sequences across runs and thread schedules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub purpose: StreamPurpose,
    pub party: u64,
    pub iteration: u64,
}

impl RngStream {
    pub fn new(seed: u64, purpose: StreamPurpose) -> Self {
        Self {
            seed,
            purpose,
            party: 0,
            iteration: 0,
        }
    }

    pub fn with_party(mut self, party: u64) -> Self {
        self.party = party;
        self
    }

    pub fn with_iteration(mut self, iteration: u64) -> Self {
        self.iteration = iteration;
        self
    }

    pub fn sampler(&self) -> StreamSampler {
        let mut key = mix64(self.seed ^ 0x6A09E667F3BCC908);
        key = mix64(key ^ self.purpose.tag());
        key = mix64(key ^ self.party.wrapping_mul(0xD1342543DE82EF95));
        key = mix64(key ^ self.iteration.wrapping_mul(0x8CB92BA72F3D8DD7));
        StreamSampler { key, counter: 0 }
    }
}

/// Stateless-key, counter-advanced sampler over one stream.
#[derive(Debug, Clone)]
pub struct StreamSampler {
    key: u64,
    counter: u64,
}

impl StreamSampler {
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(
            self.key
                .wrapping_add(self.counter.wrapping_mul(0x9E3779B97F4A7C15)),
        )
    }

    /// Uniform draw in the open interval (0, 1).
    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) / 9007199254740992.0
    }

    /// Standard normal draw via the inverse CDF.
    #[inline]
    pub fn next_standard_normal(&mut self) -> f64 {
        inverse_normal_cdf(self.next_uniform())
    }

    /// Uniform index in `[0, n)`.
    pub fn next_index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        // Modulo bias is negligible for the index ranges used here.
        (self.next_u64() % n as u64) as usize
    }
}

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Matrix with i.i.d. `N(0, sigma^2)` entries drawn from `stream`.
/// `sigma = 0` returns the zero matrix without consuming the stream.
pub fn gaussian_matrix(
    stream: RngStream,
    rows: usize,
    cols: usize,
    sigma: f64,
) -> Result<DenseMatrix> {
    assert!(sigma >= 0.0, "sigma must be nonnegative");
    if sigma == 0.0 {
        return Ok(DenseMatrix::zeros(rows, cols));
    }
    let mut s = stream.sampler();
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| sigma * s.next_standard_normal())
        .collect();
    DenseMatrix::new(rows, cols, data)
}

/// Acklam's rational approximation to the standard normal quantile function
/// (max relative error about 1.15e-9, ample for noise generation and the
/// statistical tolerances used in tests).
pub fn inverse_normal_cdf(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}
