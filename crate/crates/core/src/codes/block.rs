//! Real-number block codes lifted from binary cyclic generator polynomials.

use crate::error::{dim_err, Error, Result};
use crate::linalg::RealMatrix;

/// Pivots smaller than this (relative to the largest entry) count as zero.
const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockCodeParams {
    pub n: usize,
    pub k: usize,
}

impl BlockCodeParams {
    /// `n == k` is accepted as the degenerate parity-free code.
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if k == 0 || n < k {
            return Err(Error::Parameter(format!(
                "block code needs n >= k >= 1, got n = {n}, k = {k}"
            )));
        }
        Ok(Self { n, k })
    }

    pub fn redundancy(&self) -> usize {
        self.n - self.k
    }
}

/// Real generator polynomial, highest degree first, constant term last.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorPolynomial {
    coeffs: Vec<f64>,
}

impl GeneratorPolynomial {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        match coeffs.first() {
            Some(1.0) => Ok(Self { coeffs }),
            Some(&lead) => Err(Error::InvalidPolynomial(format!(
                "leading coefficient must be +1, got {lead}"
            ))),
            None => Err(Error::InvalidPolynomial("empty coefficient list".into())),
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

/// Lifts a binary generator polynomial to the reals.
///
/// `bits` runs from degree `degree` down to degree 0. The coefficient of
/// `X^(degree - t)` is an elementary symmetric sum of `t` negated roots, so a
/// set bit becomes `+1` for even `t` and `-1` for odd `t`.
pub fn lift_binary_generator(bits: &[u8], degree: usize) -> Result<GeneratorPolynomial> {
    if bits.len() != degree + 1 {
        return Err(Error::InvalidPolynomial(format!(
            "degree {degree} needs {} bits, got {}",
            degree + 1,
            bits.len()
        )));
    }
    if let Some(b) = bits.iter().find(|&&b| b > 1) {
        return Err(Error::InvalidPolynomial(format!(
            "non-binary coefficient {b}"
        )));
    }
    if bits[0] != 1 {
        return Err(Error::InvalidPolynomial("leading bit is zero".into()));
    }
    let coeffs = bits
        .iter()
        .enumerate()
        .map(|(t, &b)| match (b, t % 2) {
            (0, _) => 0.0,
            (_, 0) => 1.0,
            _ => -1.0,
        })
        .collect();
    GeneratorPolynomial::new(coeffs)
}

/// Banded `k x n` generator matrix: row `i` is the coefficient list shifted
/// right by `i` columns.
pub fn generator_matrix(gp: &GeneratorPolynomial, params: BlockCodeParams) -> Result<RealMatrix> {
    if gp.degree() != params.redundancy() {
        return Err(Error::Parameter(format!(
            "polynomial degree {} does not match n - k = {}",
            gp.degree(),
            params.redundancy()
        )));
    }
    let mut g = RealMatrix::zeros(params.k, params.n);
    for i in 0..params.k {
        for (j, &c) in gp.coeffs().iter().enumerate() {
            g[(i, i + j)] = c;
        }
    }
    Ok(g)
}

/// A generator matrix in the form `(I_k | P)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystematicCode {
    pub generator: RealMatrix,
    pub parity: RealMatrix,
}

/// Reduces `g` to reduced row echelon form `(I_k | P)` by Gauss-Jordan
/// elimination with partial pivoting.
pub fn to_systematic(g: &RealMatrix) -> Result<SystematicCode> {
    let (k, n) = g.shape();
    if k == 0 || n < k {
        return Err(dim_err("k x n with n >= k >= 1", format!("{k}x{n}")));
    }
    let scale = g.as_slice().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let tol = PIVOT_TOL * scale.max(f64::MIN_POSITIVE);
    let mut a = g.clone();
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&x, &y| a[(x, col)].abs().total_cmp(&a[(y, col)].abs()))
            .expect("non-empty pivot range");
        if a[(pivot, col)].abs() <= tol {
            let rank = RealMatrix::to_complex(g).rank(PIVOT_TOL);
            return Err(Error::SingularCode { rank, expected: k });
        }
        a.swap_rows(col, pivot);
        let p = a[(col, col)];
        a.row_mut(col).iter_mut().for_each(|x| *x /= p);
        for r in 0..k {
            if r == col {
                continue;
            }
            let f = a[(r, col)];
            if f == 0.0 {
                continue;
            }
            for c in 0..n {
                let v = a[(col, c)];
                a[(r, c)] -= f * v;
            }
        }
    }
    // Clean the identity block of roundoff so callers can test it exactly.
    for r in 0..k {
        for c in 0..k {
            a[(r, c)] = if r == c { 1.0 } else { 0.0 };
        }
    }
    let parity = RealMatrix::from_fn(k, n - k, |r, c| a[(r, k + c)]);
    Ok(SystematicCode {
        generator: a,
        parity,
    })
}
