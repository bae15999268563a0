//! Activation-bank protection.
//!
//! The activation bank is nonlinear, so its second parity set comes from an
//! approximation `g_s` of the activation: a truncated Taylor series on
//! `|x| <= 1` and piecewise constants beyond. The approximation error sets
//! the floor for the absolute comparison threshold, which is calibrated on
//! fault-free data. A duplication check covers look-up-table implementations.

use std::io::{BufRead, BufReader, Read, Write};

use num_rational::Ratio;

use crate::checkers::{compare_parities, DetectionResult, Tolerance};
use crate::codes::ParityGenerator;
use crate::error::{dim_err, Error, Result};
use crate::faults::pass_rng;
use crate::linalg::C64;
use crate::network::{forward_linear, random_input, random_weights, Activation};

/// Highest series power for which exact coefficients fit in `i128`.
pub const MAX_SERIES_POWER: usize = 15;

/// Segment breakpoints beyond the series range.
pub const TANH_BREAKPOINTS: [f64; 7] = [1.0, 1.25, 1.5, 1.75, 2.0, 5.0, f64::INFINITY];

/// Constant values of `g_s` on the segments between [`TANH_BREAKPOINTS`].
pub const TANH_SEGMENT_VALUES: [f64; 6] = [0.8049, 0.8767, 0.9233, 0.9527, 0.9820, 1.0];

/// Inputs with `|x|` up to this use the series branch.
pub const SERIES_RADIUS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoeffSource {
    /// Exact Taylor coefficients of tanh.
    #[default]
    Analytic,
    /// The published five-term series, whose `x^9` coefficient reads
    /// `63/2835` instead of the exact `62/2835`.
    PaperLiteral,
}

/// `A_0 .. A_m` of a truncated power series about 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorCoeffs {
    coeffs: Vec<f64>,
}

impl TaylorCoeffs {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    /// Exact tanh coefficients through `x^m`, from `t' = 1 - t^2` in rational
    /// arithmetic.
    pub fn tanh(m: usize) -> Result<Self> {
        if m > MAX_SERIES_POWER {
            return Err(Error::Parameter(format!(
                "series power {m} exceeds the supported maximum {MAX_SERIES_POWER}"
            )));
        }
        let zero = Ratio::<i128>::from_integer(0);
        let mut a = vec![zero; m + 1];
        for n in 0..m {
            let mut rhs = if n == 0 { Ratio::from_integer(1) } else { zero };
            for i in 0..=n {
                rhs -= a[i] * a[n - i];
            }
            a[n + 1] = rhs / Ratio::from_integer(n as i128 + 1);
        }
        Ok(Self {
            coeffs: a
                .iter()
                .map(|r| *r.numer() as f64 / *r.denom() as f64)
                .collect(),
        })
    }

    pub fn tanh_from(source: CoeffSource) -> Self {
        match source {
            CoeffSource::Analytic => Self::tanh(9).expect("power 9 is supported"),
            CoeffSource::PaperLiteral => Self::new(vec![
                0.0,
                1.0,
                0.0,
                -1.0 / 3.0,
                0.0,
                2.0 / 15.0,
                0.0,
                -17.0 / 315.0,
                0.0,
                63.0 / 2835.0,
            ]),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }

    /// Highest power retained, `m`.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }
}

/// Horner evaluation of `sum A_i x^i`.
pub fn taylor_eval(x: f64, coeffs: &TaylorCoeffs) -> f64 {
    coeffs.coeffs.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

/// Coefficients of the term-by-term derivative: `(i + 1) A_{i+1}`.
pub fn taylor_deriv_coeffs(coeffs: &TaylorCoeffs) -> TaylorCoeffs {
    TaylorCoeffs::new(
        coeffs
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &a)| i as f64 * a)
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    /// `f(-x) = -f(x)`
    Odd,
    /// `f(-x) = f(x)`
    Even,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub value: f64,
}

/// Piecewise-constant values on `(lo, hi]` for positive arguments, extended
/// to negative ones by symmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentTable {
    segments: Vec<Segment>,
    symmetry: Symmetry,
}

impl SegmentTable {
    pub fn new(segments: Vec<Segment>, symmetry: Symmetry) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Parameter("segment table is empty".into()));
        }
        for (i, s) in segments.iter().enumerate() {
            if s.lo.is_nan() || s.hi.is_nan() || s.lo >= s.hi || !s.value.is_finite() {
                return Err(Error::Parameter(format!("segment {i} is malformed: {s:?}")));
            }
            if i > 0 && segments[i - 1].hi != s.lo {
                return Err(Error::Parameter(format!(
                    "segment {i} starts at {} but the previous one ends at {}",
                    s.lo,
                    segments[i - 1].hi
                )));
            }
        }
        Ok(Self { segments, symmetry })
    }

    /// The constant segments of `g_s` for tanh.
    pub fn tanh() -> Self {
        let segments = TANH_BREAKPOINTS
            .windows(2)
            .zip(TANH_SEGMENT_VALUES)
            .map(|(w, value)| Segment {
                lo: w[0],
                hi: w[1],
                value,
            })
            .collect();
        Self::new(segments, Symmetry::Odd).expect("static table is well formed")
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.segments.iter().map(|s| s.lo).collect();
        b.push(self.segments.last().expect("non-empty").hi);
        b
    }

    /// Value for `|x|` inside the table, `None` below the first breakpoint.
    pub fn lookup(&self, x: f64) -> Option<f64> {
        let ax = x.abs();
        let seg = self.segments.iter().find(|s| s.lo < ax && ax <= s.hi)?;
        Some(match self.symmetry {
            Symmetry::Odd if x < 0.0 => -seg.value,
            _ => seg.value,
        })
    }

    /// Writes one `lo hi value` row per segment.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for s in &self.segments {
            writeln!(w, "{} {} {}", s.lo, s.hi, s.value)?;
        }
        Ok(())
    }

    pub fn read<R: Read>(r: R, symmetry: Symmetry) -> Result<Self> {
        let mut segments = Vec::new();
        for (i, line) in BufReader::new(r).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Format {
                    line: i + 1,
                    msg: e.to_string(),
                })?;
            let [lo, hi, value] = vals[..] else {
                return Err(Error::Format {
                    line: i + 1,
                    msg: "expected \"lo hi value\"".into(),
                });
            };
            segments.push(Segment { lo, hi, value });
        }
        Self::new(segments, symmetry)
    }
}

/// Segment table for `tanh'` on the given breakpoints: each constant is the
/// midpoint of `tanh'` at the segment ends, an unbounded segment gets 0.
pub fn build_deriv_segments(breakpoints: &[f64]) -> Result<SegmentTable> {
    if breakpoints.len() < 2 {
        return Err(Error::Parameter("need at least two breakpoints".into()));
    }
    let d = |x: f64| Activation::Tanh.derivative(x);
    let segments = breakpoints
        .windows(2)
        .map(|w| Segment {
            lo: w[0],
            hi: w[1],
            value: if w[1].is_infinite() {
                0.0
            } else {
                0.5 * (d(w[0]) + d(w[1]))
            },
        })
        .collect();
    SegmentTable::new(segments, Symmetry::Even)
}

/// `g_s`: series inside `|x| <= 1`, table outside.
pub fn g_s(x: f64, table: &SegmentTable, coeffs: &TaylorCoeffs) -> f64 {
    if x.abs() <= SERIES_RADIUS {
        taylor_eval(x, coeffs)
    } else {
        // Beyond a bounded table, hold the last value.
        table.lookup(x).unwrap_or_else(|| {
            let last = table.segments.last().expect("non-empty").value;
            match table.symmetry {
                Symmetry::Odd if x < 0.0 => -last,
                _ => last,
            }
        })
    }
}

/// Series plus segment table, bundled.
#[derive(Debug, Clone, PartialEq)]
pub struct Approximant {
    pub coeffs: TaylorCoeffs,
    pub table: SegmentTable,
}

impl Approximant {
    pub fn tanh(source: CoeffSource) -> Self {
        Self {
            coeffs: TaylorCoeffs::tanh_from(source),
            table: SegmentTable::tanh(),
        }
    }

    pub fn tanh_derivative(source: CoeffSource) -> Self {
        Self {
            coeffs: taylor_deriv_coeffs(&TaylorCoeffs::tanh_from(source)),
            table: build_deriv_segments(&TANH_BREAKPOINTS).expect("static breakpoints"),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        g_s(x, &self.table, &self.coeffs)
    }
}

/// Activation check: `rho = Y_out G` against `rho_a = g_s(S) G`.
pub fn check_activation(
    s: &[f64],
    y_out: &[f64],
    approx: &Approximant,
    gen: &ParityGenerator,
    tol: Tolerance,
) -> Result<DetectionResult> {
    check_activation_with(s, y_out, |x| approx.eval(x), gen, tol)
}

/// [`check_activation`] with an arbitrary reference function.
pub fn check_activation_with(
    s: &[f64],
    y_out: &[f64],
    reference: impl Fn(f64) -> f64,
    gen: &ParityGenerator,
    tol: Tolerance,
) -> Result<DetectionResult> {
    if s.len() != y_out.len() {
        return Err(dim_err(s.len(), y_out.len()));
    }
    let y_hat: Vec<f64> = s.iter().map(|&x| reference(x)).collect();
    let (rho, m1) = gen.parity_counted(y_out)?;
    let (rho_a, m2) = gen.parity_counted(&y_hat)?;
    let mut res = compare_parities(&rho, &rho_a, tol)?;
    res.mults = m1 + m2;
    Ok(res)
}

/// Power form `sum_i (A_i G) S^i` of the input-side parity. Only meaningful
/// when every `|S_i|` is within the series radius.
pub fn power_form_parity(
    s: &[f64],
    coeffs: &TaylorCoeffs,
    gen: &ParityGenerator,
) -> Result<Vec<C64>> {
    let mut out = vec![C64::default(); gen.parity_len()];
    let mut power = vec![1.0; s.len()];
    for &a in coeffs.as_slice() {
        if a != 0.0 {
            let p = gen.parity(&power)?;
            for (o, v) in out.iter_mut().zip(p) {
                *o += v * a;
            }
        }
        for (pw, &x) in power.iter_mut().zip(s) {
            *pw *= x;
        }
    }
    Ok(out)
}

/// Evaluates the activation bank twice in separate passes.
pub fn duplicate_outputs(s: &[f64], g: Activation) -> (Vec<f64>, Vec<f64>) {
    let first: Vec<f64> = s
        .iter()
        .map(|&x| g.apply(std::hint::black_box(x)))
        .collect();
    let second: Vec<f64> = s
        .iter()
        .map(|&x| g.apply(std::hint::black_box(x)))
        .collect();
    (first, second)
}

/// Zero-tolerance positionwise comparison of two output copies.
pub fn compare_duplicates(a: &[f64], b: &[f64]) -> Result<DetectionResult> {
    if a.len() != b.len() {
        return Err(dim_err(a.len(), b.len()));
    }
    let positions: Vec<usize> = (0..a.len())
        .filter(|&i| a[i].to_bits() != b[i].to_bits())
        .collect();
    let max_dev = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let c = |v: &[f64]| v.iter().map(|&x| C64::new(x, 0.0)).collect();
    Ok(DetectionResult {
        detected: !positions.is_empty(),
        mismatch_positions: positions,
        max_deviation: max_dev,
        parities: (c(a), c(b)),
        mults: 0,
    })
}

pub fn check_by_duplication(s: &[f64], g: Activation) -> DetectionResult {
    let (a, b) = duplicate_outputs(s, g);
    compare_duplicates(&a, &b).expect("copies have equal length")
}

/// RNG stream tag for calibration passes.
pub const CALIBRATION_STREAM: u64 = 0xCA1B;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub tau_act: f64,
    pub max_deviation: f64,
    pub passes: usize,
}

/// Linear outputs of a random stage: uniform inputs through uniform weights.
pub fn random_linear_output<R: rand::Rng + ?Sized>(width: usize, rng: &mut R) -> Vec<f64> {
    let y = random_input(width, rng);
    let w = random_weights(width, rng);
    forward_linear(&y, &w).expect("square weights")
}

/// Largest fault-free deviation between `tanh(S) G` and `reference(S) G`
/// over one pass.
fn clean_deviation(
    gen: &ParityGenerator,
    reference: &(impl Fn(f64) -> f64 + Sync),
    seed: u64,
    pass: u64,
) -> f64 {
    let mut rng = pass_rng(seed, CALIBRATION_STREAM, pass);
    let s = random_linear_output(gen.data_len(), &mut rng);
    let y: Vec<f64> = s.iter().map(|x| x.tanh()).collect();
    check_activation_with(&s, &y, reference, gen, Tolerance::Absolute(f64::INFINITY))
        .expect("lengths match the generator")
        .max_deviation
}

/// Sets `tau_act` to `safety_factor` times the worst fault-free deviation
/// seen over `passes` random passes.
pub fn calibrate_threshold(
    gen: &ParityGenerator,
    approx: &Approximant,
    passes: usize,
    safety_factor: f64,
    seed: u64,
) -> Result<Calibration> {
    calibrate_threshold_with(gen, |x| approx.eval(x), passes, safety_factor, seed)
}

pub fn calibrate_threshold_with(
    gen: &ParityGenerator,
    reference: impl Fn(f64) -> f64 + Sync,
    passes: usize,
    safety_factor: f64,
    seed: u64,
) -> Result<Calibration> {
    if passes < 1000 {
        return Err(Error::Config(format!(
            "calibration needs at least 1000 passes, got {passes}"
        )));
    }
    if !(safety_factor.is_finite() && safety_factor > 0.0) {
        return Err(Error::Config(format!(
            "safety factor must be positive, got {safety_factor}"
        )));
    }
    let per_pass = |p: usize| clean_deviation(gen, &reference, seed, p as u64);
    #[cfg(feature = "parallel")]
    let max_dev = {
        use rayon::prelude::*;
        (0..passes)
            .into_par_iter()
            .map(per_pass)
            .reduce(|| 0.0, f64::max)
    };
    #[cfg(not(feature = "parallel"))]
    let max_dev = (0..passes).map(per_pass).fold(0.0, f64::max);
    Ok(Calibration {
        tau_act: safety_factor * max_dev,
        max_deviation: max_dev,
        passes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_coefficients_are_exact() {
        let c = TaylorCoeffs::tanh(9).unwrap();
        let want = [
            0.0,
            1.0,
            0.0,
            -1.0 / 3.0,
            0.0,
            2.0 / 15.0,
            0.0,
            -17.0 / 315.0,
            0.0,
            62.0 / 2835.0,
        ];
        assert_eq!(c.as_slice(), &want);
        let c = TaylorCoeffs::tanh(11).unwrap();
        assert_eq!(c.as_slice()[11], -1382.0 / 155_925.0);
        assert!(TaylorCoeffs::tanh(MAX_SERIES_POWER).is_ok());
        assert!(TaylorCoeffs::tanh(MAX_SERIES_POWER + 1).is_err());
    }

    #[test]
    fn even_coefficients_vanish() {
        let c = TaylorCoeffs::tanh(MAX_SERIES_POWER).unwrap();
        assert!(c.as_slice().iter().step_by(2).all(|&a| a == 0.0));
    }

    #[test]
    fn literal_series_values() {
        let lit = TaylorCoeffs::tanh_from(CoeffSource::PaperLiteral);
        assert_eq!(taylor_eval(0.0, &lit), 0.0);
        assert!((taylor_eval(1.0, &lit) - 0.768_254_0).abs() < 5e-8);
        let v = taylor_eval(0.5, &lit);
        assert!((v - 0.462_121_8).abs() < 5e-8);
        assert!((v - 0.5f64.tanh()).abs() < 5e-6);
    }

    #[test]
    fn segment_values() {
        let a = Approximant::tanh(CoeffSource::Analytic);
        assert_eq!(a.eval(1.1), 0.8049);
        assert!(((a.eval(1.1) - 1.1f64.tanh()).abs() - 4.4e-3).abs() < 1e-4);
        assert_eq!(a.eval(-3.0), -0.9820);
        assert_eq!(a.eval(7.0), 1.0);
        assert_eq!(a.eval(-7.0), -1.0);
        assert_eq!(a.eval(1.25), 0.8049);
        assert_eq!(a.eval(1.2500001), 0.8767);
    }

    #[test]
    fn derivative_coefficients() {
        let lit = TaylorCoeffs::tanh_from(CoeffSource::PaperLiteral);
        let d = taylor_deriv_coeffs(&lit);
        let want = [
            1.0,
            0.0,
            -1.0,
            0.0,
            2.0 / 3.0,
            0.0,
            -17.0 / 45.0,
            0.0,
            9.0 * 63.0 / 2835.0,
        ];
        for (got, want) in d.as_slice().iter().zip(want) {
            assert!((got - want).abs() < 1e-15);
        }
        assert_eq!(taylor_eval(0.0, &d), 1.0);
        assert!(taylor_deriv_coeffs(&TaylorCoeffs::new(vec![0.0; 4]))
            .as_slice()
            .iter()
            .all(|&a| a == 0.0));
    }

    #[test]
    fn derivative_segments() {
        let t = build_deriv_segments(&TANH_BREAKPOINTS).unwrap();
        let seg = t.segments()[4];
        assert_eq!((seg.lo, seg.hi), (2.0, 5.0));
        assert!((seg.value - 0.035_416_2).abs() < 1e-7);
        assert_eq!(t.segments()[5].value, 0.0);
        assert!(t.segments().iter().all(|s| (0.0..=1.0).contains(&s.value)));
        assert_eq!(t.lookup(-3.0), t.lookup(3.0));
        assert_eq!(t.breakpoints(), TANH_BREAKPOINTS.to_vec());
    }

    #[test]
    fn tanh_table_constants_are_endpoint_midpoints() {
        let t = SegmentTable::tanh();
        let mut prev = f64::NEG_INFINITY;
        for s in t.segments() {
            let hi = if s.hi.is_infinite() { 1.0 } else { s.hi.tanh() };
            let mid = 0.5 * (s.lo.tanh() + hi);
            assert!((s.value - mid).abs() < 5e-4, "{s:?} vs midpoint {mid}");
            assert!(s.value >= prev);
            prev = s.value;
        }
    }

    #[test]
    fn segment_table_text_round_trip() {
        let t = SegmentTable::tanh();
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next(), Some("1 1.25 0.8049"));
        assert_eq!(text.lines().last(), Some("5 inf 1"));
        assert_eq!(
            SegmentTable::read(buf.as_slice(), Symmetry::Odd).unwrap(),
            t
        );
        assert!(SegmentTable::read("1 2\n".as_bytes(), Symmetry::Odd).is_err());
        assert!(SegmentTable::read("1 2 0.5\n3 4 0.6\n".as_bytes(), Symmetry::Odd).is_err());
    }

    #[test]
    fn duplication_check() {
        let s = [0.1, -2.0, 3.5, 0.0];
        assert!(!check_by_duplication(&s, Activation::Tanh).detected);
        let (a, mut b) = duplicate_outputs(&s, Activation::Tanh);
        b[2] += 1e-3;
        let r = compare_duplicates(&a, &b).unwrap();
        assert_eq!(r.mismatch_positions, vec![2]);
        let (mut a, mut b) = duplicate_outputs(&s, Activation::Tanh);
        a[1] += 0.5;
        b[1] += 0.5;
        assert!(!compare_duplicates(&a, &b).unwrap().detected);
    }

    #[test]
    fn calibration_rejects_few_passes() {
        let gen = ParityGenerator::block(&crate::linalg::RealMatrix::identity(3)).unwrap();
        let a = Approximant::tanh(CoeffSource::Analytic);
        assert!(calibrate_threshold(&gen, &a, 999, 10.0, 1).is_err());
        assert!(calibrate_threshold(&gen, &a, 1000, 0.0, 1).is_err());
    }
}
