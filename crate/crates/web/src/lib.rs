//! Browser bindings for the demo page in `www/`.
//!
//! Three operations are exposed: activation approximation curves, a small
//! detection sweep, and the magnitude structure of the parity-generating
//! matrix. Results cross the boundary as flat `f64` arrays.

use abft_core::approx::{Approximant, CoeffSource};
use abft_core::harness::{
    count_overhead, run_activation_suite, run_weighting_suite, SimConfig, Suite,
};
use wasm_bindgen::prelude::*;

const MAX_DEMO_PASSES: usize = 5_000;

fn source(paper_literal: bool) -> CoeffSource {
    if paper_literal {
        CoeffSource::PaperLiteral
    } else {
        CoeffSource::Analytic
    }
}

/// `[x, tanh(x), g_s(x), tanh'(x), g_s'(x)]` per point.
pub fn curves(lo: f64, hi: f64, points: usize, paper_literal: bool) -> Vec<f64> {
    let g = Approximant::tanh(source(paper_literal));
    let dg = Approximant::tanh_derivative(source(paper_literal));
    let n = points.max(2);
    (0..n)
        .flat_map(|i| {
            let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            let t = x.tanh();
            [x, t, g.eval(x), 1.0 - t * t, dg.eval(x)]
        })
        .collect()
}

/// Per epsilon: `[epsilon, fault_passes, detected, missed, false_positives,
/// faults_injected]`.
pub fn sweep(
    code: usize,
    activation: bool,
    eps: &[f64],
    passes: usize,
    seed: u64,
    tau_act: f64,
) -> Result<Vec<f64>, String> {
    if passes > MAX_DEMO_PASSES {
        return Err(format!("at most {MAX_DEMO_PASSES} passes in the browser"));
    }
    let cfg = SimConfig {
        code,
        epsilons: eps.to_vec(),
        passes,
        seed,
        parallel: false,
        suite: if activation {
            Suite::Activation
        } else {
            Suite::Weighting
        },
        tau_act: activation.then_some(tau_act),
        ..SimConfig::default()
    };
    let report = if activation {
        run_activation_suite(&cfg)
    } else {
        run_weighting_suite(&cfg)
    }
    .map_err(|e| e.to_string())?;
    Ok(report
        .rows
        .iter()
        .flat_map(|r| {
            [
                r.epsilon,
                r.fault_passes as f64,
                r.detected as f64,
                r.missed as f64,
                r.false_positives as f64,
                r.faults_injected as f64,
            ]
        })
        .collect())
}

/// `[rows, cols, dense, banded, |G|...]` with the magnitudes row-major.
pub fn gamma(code: usize, segments: usize) -> Result<Vec<f64>, String> {
    let cfg = SimConfig {
        code,
        segments,
        ..SimConfig::default()
    };
    let (gen, _) = cfg.generator().map_err(|e| e.to_string())?;
    let counts = count_overhead(&cfg).map_err(|e| e.to_string())?;
    let (rows, cols) = gen.matrix().shape();
    let mut out = vec![
        rows as f64,
        cols as f64,
        counts.dense as f64,
        counts.banded as f64,
    ];
    out.extend(gen.matrix().as_slice().iter().map(|v| v.norm()));
    Ok(out)
}

#[wasm_bindgen]
pub fn activation_curves(lo: f64, hi: f64, points: usize, paper_literal: bool) -> Vec<f64> {
    curves(lo, hi, points, paper_literal)
}

#[wasm_bindgen]
pub fn detection_sweep(
    code: usize,
    activation: bool,
    eps: Vec<f64>,
    passes: usize,
    seed: u64,
    tau_act: f64,
) -> Result<Vec<f64>, JsValue> {
    sweep(code, activation, &eps, passes, seed, tau_act).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn gamma_structure(code: usize, segments: usize) -> Result<Vec<f64>, JsValue> {
    gamma(code, segments).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_layout() {
        let c = curves(-2.0, 2.0, 5, false);
        assert_eq!(c.len(), 25);
        assert_eq!(&c[10..13], &[0.0, 0.0, 0.0]);
        assert_eq!(c[13], 1.0);
        assert_eq!(c[20], 2.0);
        assert_eq!(c[22], 0.9527);
    }

    #[test]
    fn small_sweeps() {
        let w = sweep(1, false, &[0.0, 0.05], 20, 3, 0.0).unwrap();
        assert_eq!(w.len(), 12);
        assert_eq!(&w[1..5], &[0.0, 0.0, 0.0, 0.0]);
        assert_eq!(w[8], w[7]);
        let a = sweep(1, true, &[0.1], 50, 3, 0.5).unwrap();
        assert_eq!(a[2] + a[3], a[1]);
        assert!(sweep(1, false, &[0.1], MAX_DEMO_PASSES + 1, 3, 0.0).is_err());
        assert!(sweep(9, false, &[0.1], 10, 3, 0.0).is_err());
    }

    #[test]
    fn gamma_layout() {
        let g = gamma(1, 12).unwrap();
        assert_eq!(&g[..4], &[96.0, 48.0, 9216.0, 5664.0]);
        assert_eq!(g.len(), 4 + 96 * 48);
        let nonzero = g[4..].iter().filter(|&&v| v > 0.0).count();
        assert_eq!(nonzero, 1056);
    }
}
