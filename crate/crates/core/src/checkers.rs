//! Dual-parity comparisons for the three matrix computations of a stage.
//!
//! Every check forms one parity set from the computed output and a second
//! one from the inputs through a precomputed combined matrix, then compares
//! them position by position.

use crate::codes::ParityGenerator;
use crate::error::{dim_err, Error, Result};
use crate::linalg::{ComplexMatrix, RealMatrix, C64};
use crate::network::LearningParams;

pub const DEFAULT_TAU_REL: f64 = 1e-8;
pub const DEFAULT_SAFETY_FACTOR: f64 = 10.0;

/// How two parity values are judged equal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    /// `|a - b| <= tau * (1 + max(|a|, |b|))`.
    Relative(f64),
    /// `|a - b| <= tau`.
    Absolute(f64),
}

impl Tolerance {
    #[inline]
    pub fn mismatch(self, a: C64, b: C64) -> bool {
        let d = (a - b).norm();
        match self {
            Tolerance::Relative(tau) => d > tau * (1.0 + a.norm().max(b.norm())),
            Tolerance::Absolute(tau) => d > tau,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceConfig {
    pub tau_rel: f64,
    pub tau_act: f64,
    pub safety_factor: f64,
}

impl ToleranceConfig {
    pub fn new(tau_rel: f64, tau_act: f64, safety_factor: f64) -> Result<Self> {
        for (name, v) in [
            ("tau_rel", tau_rel),
            ("tau_act", tau_act),
            ("safety_factor", safety_factor),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self {
            tau_rel,
            tau_act,
            safety_factor,
        })
    }

    pub fn weighting(&self) -> Tolerance {
        Tolerance::Relative(self.tau_rel)
    }

    pub fn activation(&self) -> Tolerance {
        Tolerance::Absolute(self.tau_act)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub detected: bool,
    /// Flattened parity positions that disagree (row-major for matrix checks).
    pub mismatch_positions: Vec<usize>,
    pub max_deviation: f64,
    /// `(rho, rho_a)`: output-side and input-side parities.
    pub parities: (Vec<C64>, Vec<C64>),
    /// Multiplications spent forming the two parity sets online.
    pub mults: u64,
}

impl DetectionResult {
    /// Distinct rows holding a mismatch, for a check over `width`-wide rows.
    pub fn mismatch_rows(&self, width: usize) -> Vec<usize> {
        let mut rows: Vec<usize> = self.mismatch_positions.iter().map(|p| p / width).collect();
        rows.dedup();
        rows
    }
}

pub fn compare_parities(rho: &[C64], rho_a: &[C64], tol: Tolerance) -> Result<DetectionResult> {
    if rho.len() != rho_a.len() {
        return Err(dim_err(rho.len(), rho_a.len()));
    }
    let mut positions = Vec::new();
    let mut max_dev = 0.0f64;
    for (i, (&a, &b)) in rho.iter().zip(rho_a).enumerate() {
        max_dev = max_dev.max((a - b).norm());
        if tol.mismatch(a, b) {
            positions.push(i);
        }
    }
    Ok(DetectionResult {
        detected: !positions.is_empty(),
        mismatch_positions: positions,
        max_deviation: max_dev,
        parities: (rho.to_vec(), rho_a.to_vec()),
        mults: 0,
    })
}

/// `W G`, formed once per weight matrix.
pub fn precompute_combined(w: &RealMatrix, gen: &ParityGenerator) -> Result<ComplexMatrix> {
    Ok(gen.parity_rows(w)?.0)
}

/// `Y * M` for a real row vector and a dense complex matrix, counting
/// multiplications.
fn dense_parity(y: &[f64], m: &ComplexMatrix) -> Result<(Vec<C64>, u64)> {
    if y.len() != m.rows() {
        return Err(dim_err(m.rows(), y.len()));
    }
    let mut re = vec![0.0; m.cols()];
    let mut im = vec![0.0; m.cols()];
    for (i, &yi) in y.iter().enumerate() {
        for ((r, s), g) in re.iter_mut().zip(im.iter_mut()).zip(m.row(i)) {
            *r += yi * g.re;
            *s += yi * g.im;
        }
    }
    let out = re
        .into_iter()
        .zip(im)
        .map(|(r, i)| C64::new(r, i))
        .collect();
    Ok((out, m.as_slice().len() as u64))
}

/// Forward weighting check: `rho = S G` against `rho_a = Y (W G)`.
pub fn check_forward_parts(
    s: &[f64],
    y_in: &[f64],
    combined: &ComplexMatrix,
    gen: &ParityGenerator,
    tol: Tolerance,
) -> Result<DetectionResult> {
    let (rho, m1) = gen.parity_counted(s)?;
    let (rho_a, m2) = dense_parity(y_in, combined)?;
    let mut res = compare_parities(&rho, &rho_a, tol)?;
    res.mults = m1 + m2;
    Ok(res)
}

/// [`check_forward_parts`] driven by a stage snapshot with its cached
/// combined matrix.
pub fn check_forward(
    state: &crate::network::StageState,
    gen: &ParityGenerator,
    tol: Tolerance,
) -> Result<DetectionResult> {
    check_forward_parts(&state.s, &state.y_in, state.combined()?, gen, tol)
}

/// Outcome of the weight-update check, with `W_nw G` kept for the backward
/// check that follows.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateCheck {
    pub result: DetectionResult,
    pub updated_combined: ComplexMatrix,
    /// `W G + eta * delta^T (Y G)`: what `W_nw G` is for a clean update.
    pub expected_combined: ComplexMatrix,
}

/// Weight-update check: the rows of `W_nw G` against
/// `W G + eta * delta^T (Y G)`, reusing `W G` and `Y G` from the forward pass.
pub fn check_weight_update_cached(
    combined: &ComplexMatrix,
    y_parity: &[C64],
    w_nw: &RealMatrix,
    params: LearningParams,
    delta: &[f64],
    gen: &ParityGenerator,
    tol: Tolerance,
) -> Result<UpdateCheck> {
    let r = gen.parity_len();
    if combined.shape() != (w_nw.rows(), r) || y_parity.len() != r || delta.len() != w_nw.rows() {
        return Err(dim_err(
            format!(
                "{}x{r} combined, {r} input parities, {} deltas",
                w_nw.rows(),
                w_nw.rows()
            ),
            format!(
                "{}x{}, {}, {}",
                combined.rows(),
                combined.cols(),
                y_parity.len(),
                delta.len()
            ),
        ));
    }
    let (nw, m1) = gen.parity_rows(w_nw)?;
    let mut alt = combined.clone();
    for (j, &d) in delta.iter().enumerate() {
        let scale = params.eta * d;
        for (o, &p) in alt.row_mut(j).iter_mut().zip(y_parity) {
            *o += p * scale;
        }
    }
    let mut result = compare_parities(nw.as_slice(), alt.as_slice(), tol)?;
    result.mults = m1 + (delta.len() * (r + 1)) as u64;
    Ok(UpdateCheck {
        result,
        updated_combined: nw,
        expected_combined: alt,
    })
}

/// [`check_weight_update_cached`] starting from raw `W` and `Y`.
pub fn check_weight_update(
    w: &RealMatrix,
    w_nw: &RealMatrix,
    params: LearningParams,
    delta: &[f64],
    y: &[f64],
    gen: &ParityGenerator,
    tol: Tolerance,
) -> Result<UpdateCheck> {
    let combined = precompute_combined(w, gen)?;
    let y_parity = gen.parity(y)?;
    check_weight_update_cached(&combined, &y_parity, w_nw, params, delta, gen, tol)
}

/// Backward check: `rho = sigma G` against `rho_a = delta (W_nw G)`.
pub fn check_backward(
    delta: &[f64],
    sigma: &[f64],
    updated_combined: Option<&ComplexMatrix>,
    gen: &ParityGenerator,
    tol: Tolerance,
) -> Result<DetectionResult> {
    let combined = updated_combined.ok_or(Error::State("the updated combined parity matrix"))?;
    check_forward_parts(sigma, delta, combined, gen, tol)
}
