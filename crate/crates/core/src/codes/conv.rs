//! DFT-kernel convolutional parity codes.
//!
//! A data segment of `L` sub-vectors, each `k - 1` long, is protected by `L`
//! parity groups of `n - k + 1` values. Parity group `r` encodes the window of
//! sub-vectors `r ..= r + mu` through the kernel blocks `Xi_0 .. Xi_mu`:
//!
//! ```text
//! rho_r = Y_r Xi_0^T + Y_{r+1} Xi_1^T + ... + Y_{r+mu} Xi_mu^T
//! ```
//!
//! Sub-vectors past the end of the segment are taken as zero, so the full
//! parity-generating matrix is block banded.

use std::f64::consts::PI;
use std::path::PathBuf;

use super::{xi_file, GeneratorKind, ParityGenerator};
use crate::error::{dim_err, Error, Result};
use crate::linalg::{ComplexMatrix, C64};

/// Relative pivot tolerance for the kernel stack rank test.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvCodeParams {
    pub n: usize,
    pub k: usize,
    pub mu: usize,
    /// Number of data sub-vectors per segment (`L`).
    pub segments: usize,
}

impl ConvCodeParams {
    pub fn new(n: usize, k: usize, mu: usize, segments: usize) -> Result<Self> {
        if k < 2 || n <= k {
            return Err(Error::Parameter(format!(
                "convolutional code needs n > k >= 2, got n = {n}, k = {k}"
            )));
        }
        if segments == 0 {
            return Err(Error::Parameter(
                "segment count L must be at least 1".into(),
            ));
        }
        Ok(Self { n, k, mu, segments })
    }

    /// The four simulation codes, indexed 1 to 4, as `(k - 1, n - k + 1, mu)`.
    pub const TABLE: [(usize, usize, usize); 4] = [(8, 4, 2), (11, 4, 2), (11, 5, 2), (10, 3, 10)];

    pub fn from_table(id: usize, segments: usize) -> Result<Self> {
        let &(info, width, mu) = id
            .checked_sub(1)
            .and_then(|i| Self::TABLE.get(i))
            .ok_or_else(|| Error::Parameter(format!("code id must be 1..=4, got {id}")))?;
        let k = info + 1;
        Self::new(k + width - 1, k, mu, segments)
    }

    /// Data sub-vector length `k - 1`.
    pub fn info_len(&self) -> usize {
        self.k - 1
    }

    /// Parity values per window, `n - k + 1`.
    pub fn parity_len(&self) -> usize {
        self.n - self.k + 1
    }

    /// Protected data length `L(k - 1)`.
    pub fn data_len(&self) -> usize {
        self.segments * self.info_len()
    }

    /// Parity count `L(n - k + 1)`.
    pub fn parity_count(&self) -> usize {
        self.segments * self.parity_len()
    }

    /// Right-hand side of the length constraint `n > (mu + 1)(n - k)`.
    pub fn constraint_bound(&self) -> usize {
        (self.mu + 1) * (self.n - self.k)
    }

    pub fn satisfies_constraint(&self) -> bool {
        self.n > self.constraint_bound()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidityReport {
    pub valid: bool,
    pub n: usize,
    pub bound: usize,
    pub warning: Option<String>,
}

/// Checks `n > (mu + 1)(n - k)`. Strict mode turns a violation into an
/// error; permissive mode reports it as a warning.
pub fn validate_conv_params(p: &ConvCodeParams, strict: bool) -> Result<ValidityReport> {
    let bound = p.constraint_bound();
    if p.satisfies_constraint() {
        return Ok(ValidityReport {
            valid: true,
            n: p.n,
            bound,
            warning: None,
        });
    }
    if strict {
        return Err(Error::Constraint { n: p.n, bound });
    }
    Ok(ValidityReport {
        valid: false,
        n: p.n,
        bound,
        warning: Some(format!(
            "(n, k, mu) = ({}, {}, {}) violates n > (mu + 1)(n - k): {} <= {}",
            p.n, p.k, p.mu, p.n, bound
        )),
    })
}

/// The `mu + 1` kernel blocks, each `(n - k + 1) x (k - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct XiSubmatrices {
    n: usize,
    k: usize,
    blocks: Vec<ComplexMatrix>,
}

impl XiSubmatrices {
    /// Validates block shapes and full column rank of the vertical stack.
    pub fn new(n: usize, k: usize, blocks: Vec<ComplexMatrix>) -> Result<Self> {
        if k < 2 || n <= k {
            return Err(Error::Parameter(format!(
                "kernel needs n > k >= 2, got n = {n}, k = {k}"
            )));
        }
        if blocks.is_empty() {
            return Err(Error::Parameter("kernel needs at least one block".into()));
        }
        let shape = (n - k + 1, k - 1);
        for (i, b) in blocks.iter().enumerate() {
            if b.shape() != shape {
                return Err(dim_err(
                    format!("{}x{}", shape.0, shape.1),
                    format!("{}x{} for block {i}", b.rows(), b.cols()),
                ));
            }
        }
        let xi = Self { n, k, blocks };
        let rank = xi.stacked().rank(RANK_TOL);
        if rank < k - 1 {
            return Err(Error::Construction {
                rank,
                expected: k - 1,
            });
        }
        Ok(xi)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn mu(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn blocks(&self) -> &[ComplexMatrix] {
        &self.blocks
    }

    /// Vertical stack `(Xi_0; ...; Xi_mu)`, shape `(mu + 1)(n - k + 1) x (k - 1)`.
    pub fn stacked(&self) -> ComplexMatrix {
        let rows = self.blocks[0].rows();
        ComplexMatrix::from_fn(self.blocks.len() * rows, self.k - 1, |r, c| {
            self.blocks[r / rows][(r % rows, c)]
        })
    }

    /// Horizontal window matrix `(Xi_0, ..., Xi_mu)`, shape
    /// `(n - k + 1) x (mu + 1)(k - 1)`.
    pub fn window_matrix(&self) -> ComplexMatrix {
        let cols = self.k - 1;
        ComplexMatrix::from_fn(self.n - self.k + 1, self.blocks.len() * cols, |r, c| {
            self.blocks[c / cols][(r, c % cols)]
        })
    }
}

/// Source of the kernel blocks.
#[derive(Debug, Clone, PartialEq)]
pub enum XiKernel {
    /// Built-in roots-of-unity kernel.
    Dft,
    /// Externally supplied blocks in the plain-text kernel format.
    File(PathBuf),
}

/// Builds the kernel blocks for `p`.
///
/// The DFT kernel assigns stacked row `j = i(n - k + 1) + r` (block `i`, row
/// `r`) the frequency `j` of an `N = (mu + 1)(n - k + 1)` point DFT:
/// `Xi_i[r][c] = w^(j c)` with `w = exp(-2 pi i / N)`. The stack is then the
/// first `k - 1` columns of the `N`-point DFT matrix, which has orthogonal
/// columns whenever `N >= k - 1`.
pub fn build_xi(p: &ConvCodeParams, kernel: &XiKernel) -> Result<XiSubmatrices> {
    validate_conv_params(p, false)?;
    match kernel {
        XiKernel::Dft => {
            let width = p.parity_len();
            let info = p.info_len();
            let size = (p.mu + 1) * width;
            let blocks = (0..=p.mu)
                .map(|i| {
                    ComplexMatrix::from_fn(width, info, |r, c| {
                        let j = i * width + r;
                        root_of_unity((j * c) % size, size)
                    })
                })
                .collect();
            XiSubmatrices::new(p.n, p.k, blocks)
        }
        XiKernel::File(path) => {
            let xi = xi_file::read_xi_path(path)?;
            if (xi.n(), xi.k(), xi.mu()) != (p.n, p.k, p.mu) {
                return Err(Error::Format {
                    line: 1,
                    msg: format!(
                        "kernel file is for (n, k, mu) = ({}, {}, {}), expected ({}, {}, {})",
                        xi.n(),
                        xi.k(),
                        xi.mu(),
                        p.n,
                        p.k,
                        p.mu
                    ),
                });
            }
            Ok(xi)
        }
    }
}

fn root_of_unity(e: usize, size: usize) -> C64 {
    if e == 0 {
        return C64::new(1.0, 0.0);
    }
    C64::from_polar(1.0, -2.0 * PI * e as f64 / size as f64)
}

/// Assembles the `L(k - 1) x L(n - k + 1)` parity-generating matrix.
///
/// Column block `r` holds `Xi_w^T` in row block `r + w` for every
/// `w <= mu` with `r + w < L`; windows running off the segment end see zeros.
pub fn build_gamma(xi: &XiSubmatrices, segments: usize) -> Result<ParityGenerator> {
    let p = ConvCodeParams::new(xi.n(), xi.k(), xi.mu(), segments)?;
    let (info, width) = (p.info_len(), p.parity_len());
    let mut gamma_t = ComplexMatrix::zeros(p.data_len(), p.parity_count());
    for r in 0..segments {
        for (w, block) in xi.blocks().iter().enumerate() {
            let sub = r + w;
            if sub >= segments {
                break;
            }
            for row in 0..width {
                for c in 0..info {
                    gamma_t[(sub * info + c, r * width + row)] = block[(row, c)];
                }
            }
        }
    }
    ParityGenerator::new(gamma_t, GeneratorKind::Convolutional(p))
}

/// Parity group of one window: `(Y_r, ..., Y_{r+mu}) Xi^T`.
pub fn sliding_parity(subvecs: &[&[f64]], xi: &XiSubmatrices) -> Result<Vec<C64>> {
    if subvecs.len() != xi.blocks().len() {
        return Err(dim_err(
            format!("{} sub-vectors", xi.blocks().len()),
            subvecs.len(),
        ));
    }
    let width = xi.n() - xi.k() + 1;
    let mut out = vec![C64::default(); width];
    for (y, block) in subvecs.iter().zip(xi.blocks()) {
        if y.len() != xi.k() - 1 {
            return Err(dim_err(
                format!("sub-vector of length {}", xi.k() - 1),
                y.len(),
            ));
        }
        for (row, o) in out.iter_mut().enumerate() {
            *o += y
                .iter()
                .zip(block.row(row))
                .map(|(&v, &g)| g * v)
                .sum::<C64>();
        }
    }
    Ok(out)
}
