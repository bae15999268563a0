//! Plain-text kernel block format.
//!
//! ```text
//! n k mu
//! re,im re,im ...        # (mu + 1)(n - k + 1) rows of (k - 1) entries
//! ```
//!
//! Rows of `Xi_0` come first, then `Xi_1`, and so on. Entries are written with
//! 17 significant digits so that reading them back is bit-exact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::XiSubmatrices;
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};

pub fn write_xi<W: Write>(mut w: W, xi: &XiSubmatrices) -> Result<()> {
    writeln!(w, "{} {} {}", xi.n(), xi.k(), xi.mu())?;
    for block in xi.blocks() {
        for r in 0..block.rows() {
            let line: Vec<String> = block
                .row(r)
                .iter()
                .map(|z| format!("{:.16e},{:.16e}", z.re, z.im))
                .collect();
            writeln!(w, "{}", line.join(" "))?;
        }
    }
    Ok(())
}

pub fn write_xi_path(path: impl AsRef<Path>, xi: &XiSubmatrices) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_xi(&mut w, xi)?;
    w.flush()?;
    Ok(())
}

fn fmt_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Format {
        line,
        msg: msg.into(),
    }
}

pub fn read_xi<R: Read>(r: R) -> Result<XiSubmatrices> {
    let mut lines = BufReader::new(r).lines();
    let header = lines.next().ok_or_else(|| fmt_err(1, "empty file"))??;
    let nums: Vec<usize> = header
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| fmt_err(1, format!("bad header field {t:?}")))
        })
        .collect::<Result<_>>()?;
    let [n, k, mu] = nums[..] else {
        return Err(fmt_err(1, "header must be \"n k mu\""));
    };
    if k < 2 || n <= k {
        return Err(fmt_err(
            1,
            format!("header needs n > k >= 2, got n = {n}, k = {k}"),
        ));
    }
    let (rows, cols) = (n - k + 1, k - 1);
    let mut blocks = Vec::with_capacity(mu + 1);
    for b in 0..=mu {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let lineno = 2 + b * rows + r;
            let line = lines
                .next()
                .ok_or_else(|| fmt_err(lineno, "missing kernel row"))??;
            let before = data.len();
            for tok in line.split_whitespace() {
                data.push(
                    parse_entry(tok)
                        .ok_or_else(|| fmt_err(lineno, format!("bad complex entry {tok:?}")))?,
                );
            }
            if data.len() - before != cols {
                return Err(fmt_err(
                    lineno,
                    format!("expected {cols} entries, found {}", data.len() - before),
                ));
            }
        }
        blocks.push(ComplexMatrix::from_vec(rows, cols, data)?);
    }
    if let Some(extra) = lines.next() {
        if !extra?.trim().is_empty() {
            return Err(fmt_err(
                2 + (mu + 1) * rows,
                "trailing data after kernel rows",
            ));
        }
    }
    XiSubmatrices::new(n, k, blocks)
}

pub fn read_xi_path(path: impl AsRef<Path>) -> Result<XiSubmatrices> {
    read_xi(File::open(path)?)
}

fn parse_entry(tok: &str) -> Option<C64> {
    let (re, im) = tok.split_once(',')?;
    Some(C64::new(re.parse().ok()?, im.parse().ok()?))
}
