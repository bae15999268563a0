//! Gaussian-Bernoulli soft-error injection.
//!
//! Every position is hit independently with probability `epsilon`; a hit adds
//! a draw from `Normal(0, sigma_f^2)`. Injection never mutates its input and
//! returns the ground-truth log of what it added.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, Normal};

use crate::error::{Error, Result};
use crate::linalg::RealMatrix;

pub const DEFAULT_SIGMA_F: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultTarget {
    /// Entries of a weight matrix, before it enters a product.
    Weights,
    /// Outputs of an activation bank.
    ActivationOutputs,
    /// Outputs of a vector-matrix product.
    LinearOutputs,
}

impl FaultTarget {
    fn name(self) -> &'static str {
        match self {
            FaultTarget::Weights => "weights",
            FaultTarget::ActivationOutputs => "activation outputs",
            FaultTarget::LinearOutputs => "linear outputs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultModel {
    pub epsilon: f64,
    pub sigma_f: f64,
    pub target: FaultTarget,
}

impl FaultModel {
    pub fn new(epsilon: f64, sigma_f: f64, target: FaultTarget) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::Config(format!(
                "epsilon must lie in [0, 1], got {epsilon}"
            )));
        }
        if !(sigma_f.is_finite() && sigma_f > 0.0) {
            return Err(Error::Config(format!(
                "sigma_f must be positive, got {sigma_f}"
            )));
        }
        Ok(Self {
            epsilon,
            sigma_f,
            target,
        })
    }

    pub fn with_target(self, target: FaultTarget) -> Self {
        Self { target, ..self }
    }

    /// Draws the hit positions and magnitudes over `len` positions.
    ///
    /// Hit positions are found by geometric skipping, which has the same law
    /// as one Bernoulli trial per position.
    pub fn sample<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> FaultLog {
        let mut log = FaultLog::default();
        if self.epsilon == 0.0 || len == 0 {
            return log;
        }
        let gap = Geometric::new(self.epsilon).expect("epsilon in (0, 1]");
        let size = Normal::new(0.0, self.sigma_f).expect("sigma_f > 0");
        let mut pos = 0u64;
        loop {
            pos += gap.sample(rng);
            if pos >= len as u64 {
                break;
            }
            log.entries.push(FaultEntry {
                position: pos as usize,
                magnitude: size.sample(rng),
            });
            pos += 1;
        }
        log
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultEntry {
    /// Flattened (row-major) position.
    pub position: usize,
    pub magnitude: f64,
}

/// Faults injected in one pass, in increasing position order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FaultLog {
    pub entries: Vec<FaultEntry>,
}

impl FaultLog {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn apply(&self, data: &mut [f64]) {
        for e in &self.entries {
            data[e.position] += e.magnitude;
        }
    }
}

pub fn inject_matrix<R: Rng + ?Sized>(
    w: &RealMatrix,
    model: &FaultModel,
    rng: &mut R,
) -> Result<(RealMatrix, FaultLog)> {
    if model.target != FaultTarget::Weights {
        return Err(Error::TargetMismatch {
            expected: model.target.name(),
            actual: FaultTarget::Weights.name(),
        });
    }
    let log = model.sample(w.as_slice().len(), rng);
    let mut out = w.clone();
    log.apply(out.as_mut_slice());
    Ok((out, log))
}

pub fn inject_vector<R: Rng + ?Sized>(
    v: &[f64],
    model: &FaultModel,
    rng: &mut R,
) -> Result<(Vec<f64>, FaultLog)> {
    if model.target == FaultTarget::Weights {
        return Err(Error::TargetMismatch {
            expected: model.target.name(),
            actual: "a vector",
        });
    }
    let log = model.sample(v.len(), rng);
    let mut out = v.to_vec();
    log.apply(&mut out);
    Ok((out, log))
}

pub const FAULT_LOG_HEADER: &str = "pass,position,magnitude";

/// Appends one `pass,position,magnitude` row per injected fault.
pub fn write_fault_log_csv<W: Write>(mut w: W, pass: u64, log: &FaultLog) -> Result<()> {
    for e in &log.entries {
        writeln!(w, "{pass},{},{}", e.position, e.magnitude)?;
    }
    Ok(())
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for one pass of a campaign.
///
/// `stream` separates sub-campaigns sharing a seed (one per epsilon value,
/// calibration, ...); `pass` selects the ChaCha stream within it.
pub fn pass_rng(seed: u64, stream: u64, pass: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(stream)));
    rng.set_stream(pass);
    rng
}
