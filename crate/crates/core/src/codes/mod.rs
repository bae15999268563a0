//! Real- and complex-valued error-detecting parity generators.
//!
//! Two families are provided: block codes lifted from binary cyclic
//! generator polynomials ([`block`]) and DFT-kernel convolutional codes whose
//! parity-generating matrix has a sliding-window band structure ([`conv`]).
//! Both end up as a [`ParityGenerator`], a `D x R` complex matrix mapping a
//! data row vector to its parity row vector.

pub mod block;
pub mod conv;
pub mod xi_file;

pub use block::{
    generator_matrix, lift_binary_generator, to_systematic, BlockCodeParams, GeneratorPolynomial,
    SystematicCode,
};
pub use conv::{
    build_gamma, build_xi, sliding_parity, validate_conv_params, ConvCodeParams, ValidityReport,
    XiKernel, XiSubmatrices,
};
pub use xi_file::{read_xi, read_xi_path, write_xi, write_xi_path};

use crate::error::{dim_err, Error, Result};
use crate::linalg::{ComplexMatrix, RealMatrix, C64};

/// Entries at or below this magnitude are treated as structural zeros.
const ZERO_ENTRY: f64 = 0.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    Block,
    Convolutional(ConvCodeParams),
}

/// Nonzero support of one parity column: a contiguous run of data rows.
#[derive(Debug, Clone, PartialEq)]
struct Band {
    lo: usize,
    values: Vec<C64>,
}

/// Dense parity-generating matrix plus the per-column band of nonzero rows.
///
/// The band lets the parity kernels skip structural zeros; the dense matrix
/// stays available for audits and the dense reference kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct ParityGenerator {
    matrix: ComplexMatrix,
    kind: GeneratorKind,
    bands: Vec<Band>,
}

impl ParityGenerator {
    /// Wraps a `D x R` matrix, rejecting any data position that no parity
    /// depends on.
    pub fn new(matrix: ComplexMatrix, kind: GeneratorKind) -> Result<Self> {
        let (d, r) = matrix.shape();
        if d == 0 || r == 0 {
            return Err(Error::Parameter(format!(
                "parity generator must be non-empty, got {d}x{r}"
            )));
        }
        for row in 0..d {
            if matrix.row(row).iter().all(|z| z.norm() <= ZERO_ENTRY) {
                return Err(Error::Parameter(format!(
                    "data position {row} is not covered by any parity"
                )));
            }
        }
        if let GeneratorKind::Convolutional(p) = kind {
            if d != p.data_len() || r != p.parity_count() {
                return Err(dim_err(
                    format!("{}x{}", p.data_len(), p.parity_count()),
                    format!("{d}x{r}"),
                ));
            }
        }
        let bands = (0..r)
            .map(|col| {
                let nz = |row: &usize| matrix[(*row, col)].norm() > ZERO_ENTRY;
                match ((0..d).find(nz), (0..d).rev().find(nz)) {
                    (Some(lo), Some(hi)) => Band {
                        lo,
                        values: (lo..=hi).map(|row| matrix[(row, col)]).collect(),
                    },
                    _ => Band {
                        lo: 0,
                        values: Vec::new(),
                    },
                }
            })
            .collect();
        let gen = Self {
            matrix,
            kind,
            bands,
        };
        if let GeneratorKind::Convolutional(p) = kind {
            gen.check_banding(&p)?;
        }
        Ok(gen)
    }

    /// Block-code generator from a systematic parity block `P` (`k x (n-k)`).
    pub fn block(parity: &RealMatrix) -> Result<Self> {
        Self::new(parity.to_complex(), GeneratorKind::Block)
    }

    fn check_banding(&self, p: &ConvCodeParams) -> Result<()> {
        let (info, width) = (p.info_len(), p.parity_len());
        for row in 0..self.data_len() {
            let sub = row / info;
            for col in 0..self.parity_len() {
                let window = col / width;
                let inside = window <= sub && sub <= window + p.mu;
                if !inside && self.matrix[(row, col)].norm() > ZERO_ENTRY {
                    return Err(Error::Parameter(format!(
                        "entry ({row}, {col}) lies outside the sliding-window band"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn kind(&self) -> GeneratorKind {
        self.kind
    }

    /// Protected data length `D`.
    pub fn data_len(&self) -> usize {
        self.matrix.rows()
    }

    /// Parity count `R`.
    pub fn parity_len(&self) -> usize {
        self.matrix.cols()
    }

    /// Multiplications the banded kernel spends on one data vector.
    pub fn banded_mults(&self) -> u64 {
        self.bands.iter().map(|b| b.values.len() as u64).sum()
    }

    /// Multiplications the dense kernel spends on one data vector.
    pub fn dense_mults(&self) -> u64 {
        (self.data_len() * self.parity_len()) as u64
    }

    /// Half-open row range of nonzero entries in parity column `col`.
    pub fn column_support(&self, col: usize) -> std::ops::Range<usize> {
        let b = &self.bands[col];
        b.lo..b.lo + b.values.len()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.data_len() {
            return Err(dim_err(
                format!("data of length {}", self.data_len()),
                format!("length {len}"),
            ));
        }
        Ok(())
    }

    /// `data * G` using the band structure.
    pub fn parity(&self, data: &[f64]) -> Result<Vec<C64>> {
        Ok(self.parity_counted(data)?.0)
    }

    /// [`Self::parity`] together with the number of multiplications executed.
    pub fn parity_counted(&self, data: &[f64]) -> Result<(Vec<C64>, u64)> {
        self.check_len(data.len())?;
        let mut mults = 0u64;
        let out = self
            .bands
            .iter()
            .map(|b| {
                let seg = &data[b.lo..b.lo + b.values.len()];
                mults += seg.len() as u64;
                band_dot(seg, &b.values)
            })
            .collect();
        Ok((out, mults))
    }

    /// Banded parity of a complex data vector.
    pub fn parity_complex(&self, data: &[C64]) -> Result<Vec<C64>> {
        self.check_len(data.len())?;
        Ok(self
            .bands
            .iter()
            .map(|b| {
                data[b.lo..b.lo + b.values.len()]
                    .iter()
                    .zip(&b.values)
                    .map(|(&x, &g)| x * g)
                    .sum()
            })
            .collect())
    }

    /// Reference kernel touching every entry of the dense matrix.
    pub fn parity_dense(&self, data: &[f64]) -> Result<(Vec<C64>, u64)> {
        self.check_len(data.len())?;
        let mut out = vec![C64::default(); self.parity_len()];
        for (i, &x) in data.iter().enumerate() {
            for (o, &g) in out.iter_mut().zip(self.matrix.row(i)) {
                *o += g * x;
            }
        }
        Ok((out, self.dense_mults()))
    }

    /// Row-by-row parity of a real matrix: `M * G`, shape `rows x R`.
    pub fn parity_rows(&self, m: &RealMatrix) -> Result<(ComplexMatrix, u64)> {
        self.check_len(m.cols())?;
        let r = self.parity_len();
        let mut out = ComplexMatrix::zeros(m.rows(), r);
        for row in 0..m.rows() {
            let src = m.row(row);
            for (o, b) in out.row_mut(row).iter_mut().zip(&self.bands) {
                *o = band_dot(&src[b.lo..b.lo + b.values.len()], &b.values);
            }
        }
        Ok((out, m.rows() as u64 * self.banded_mults()))
    }
}

#[inline]
fn band_dot(seg: &[f64], values: &[C64]) -> C64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (&x, g) in seg.iter().zip(values) {
        re += x * g.re;
        im += x * g.im;
    }
    C64::new(re, im)
}

/// Parity row vector of `data` under `gen`.
pub fn parity(data: &[f64], gen: &ParityGenerator) -> Result<Vec<C64>> {
    gen.parity(data)
}
