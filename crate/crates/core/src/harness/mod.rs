//! Fault-injection campaigns.
//!
//! A weighting pass draws fresh random data and runs three checked matrix
//! computations: the forward product, the weight update and the backward
//! product. An activation pass runs one checked activation bank. Each pass
//! owns an RNG stream derived from `(seed, epsilon index, pass index)`, so a
//! campaign gives the same counts whether passes run serially or in
//! parallel.

pub mod config;
pub mod report;

pub use config::{default_epsilons, parse_eps_list, FaultSite, SimConfig, Suite};
pub use report::{
    emit_report, parse_report_csv, write_report_csv, CsvRow, DetectionReport, EpsilonRow,
    CSV_HEADER,
};

use crate::approx::{
    calibrate_threshold, check_activation, random_linear_output, Approximant, Calibration,
};
use crate::checkers::{
    check_backward, check_forward_parts, check_weight_update_cached, precompute_combined, Tolerance,
};
use crate::codes::{ConvCodeParams, ParityGenerator};
use crate::error::{Error, Result};
use crate::faults::{inject_matrix, inject_vector, pass_rng, FaultModel, FaultTarget};
use crate::network::{
    backward_linear, forward_linear, random_input, random_weights, update_weights, LearningParams,
};

const WEIGHTING_STREAM: u64 = 0x5745_0000_0000;
const ACTIVATION_STREAM: u64 = 0x4143_0000_0000;
const OVERHEAD_STREAM: u64 = 0x4F56_0000_0000;

#[derive(Debug, Clone, Copy, Default)]
struct SectionOutcome {
    faults: u64,
    flagged: bool,
}

#[derive(Debug, Clone, Default)]
struct PassOutcome {
    sections: Vec<SectionOutcome>,
    recomputations: u64,
    primary_mults: u64,
}

/// Commutative per-epsilon counters.
#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    passes: u64,
    faults: u64,
    fault_passes: u64,
    detected: u64,
    missed: u64,
    false_positives: u64,
    faulted_sections: u64,
    detected_sections: u64,
    faults_in_detected: u64,
    spurious: u64,
    recomputations: u64,
    primary_mults: u64,
}

impl Tally {
    fn from_pass(p: &PassOutcome) -> Self {
        let mut t = Tally {
            passes: 1,
            recomputations: p.recomputations,
            primary_mults: p.primary_mults,
            ..Default::default()
        };
        t.faults = p.sections.iter().map(|s| s.faults).sum();
        if t.faults == 0 {
            t.false_positives = p.sections.iter().any(|s| s.flagged) as u64;
            return t;
        }
        t.fault_passes = 1;
        let mut all_caught = true;
        for s in &p.sections {
            match (s.faults > 0, s.flagged) {
                (true, true) => {
                    t.faulted_sections += 1;
                    t.detected_sections += 1;
                    t.faults_in_detected += s.faults;
                }
                (true, false) => {
                    t.faulted_sections += 1;
                    all_caught = false;
                }
                (false, true) => t.spurious += 1,
                (false, false) => {}
            }
        }
        if all_caught {
            t.detected = 1;
        } else {
            t.missed = 1;
        }
        t
    }

    fn merge(self, o: Self) -> Self {
        Tally {
            passes: self.passes + o.passes,
            faults: self.faults + o.faults,
            fault_passes: self.fault_passes + o.fault_passes,
            detected: self.detected + o.detected,
            missed: self.missed + o.missed,
            false_positives: self.false_positives + o.false_positives,
            faulted_sections: self.faulted_sections + o.faulted_sections,
            detected_sections: self.detected_sections + o.detected_sections,
            faults_in_detected: self.faults_in_detected + o.faults_in_detected,
            spurious: self.spurious + o.spurious,
            recomputations: self.recomputations + o.recomputations,
            primary_mults: self.primary_mults + o.primary_mults,
        }
    }

    fn into_row(self, epsilon: f64, overhead: &OverheadCounts) -> EpsilonRow {
        EpsilonRow {
            epsilon,
            passes: self.passes,
            faults_injected: self.faults,
            fault_passes: self.fault_passes,
            detected: self.detected,
            missed: self.missed,
            false_positives: self.false_positives,
            faulted_sections: self.faulted_sections,
            detected_sections: self.detected_sections,
            faults_in_detected_sections: self.faults_in_detected,
            spurious_section_flags: self.spurious,
            recomputations: self.recomputations,
            mults_measured: self.primary_mults.checked_div(self.passes).unwrap_or(0),
            mults_paper: overhead.paper,
            mults_dense: overhead.dense,
        }
    }
}

fn run_passes<F>(passes: usize, parallel: bool, f: F) -> Result<Tally>
where
    F: Fn(u64) -> Result<PassOutcome> + Sync,
{
    let one = |p: usize| f(p as u64).map(|o| Tally::from_pass(&o));
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return (0..passes)
            .into_par_iter()
            .map(one)
            .try_reduce(Tally::default, |a, b| Ok(a.merge(b)));
    }
    let _ = parallel;
    (0..passes).try_fold(Tally::default(), |acc, p| Ok(acc.merge(one(p)?)))
}

/// Multiplication counts for one forward checked product (`S G` and
/// `Y (W G)`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OverheadCounts {
    /// Counted by the instrumented kernels on an actual check.
    pub measured: u64,
    /// `2 L(n-k+1) (L(k-1))^2`, the published closed form.
    pub paper: u64,
    /// `2 L(n-k+1) L(k-1)`: two dense vector-matrix products.
    pub dense: u64,
    /// Banded `S G` plus dense `Y (W G)`.
    pub banded: u64,
}

fn closed_forms(p: &ConvCodeParams, gen: &ParityGenerator) -> (u64, u64, u64) {
    let (d, r) = (p.data_len() as u64, p.parity_count() as u64);
    (2 * r * d * d, 2 * r * d, gen.banded_mults() + d * r)
}

pub fn count_overhead(cfg: &SimConfig) -> Result<OverheadCounts> {
    let p = cfg.conv_params()?;
    let (gen, _) = cfg.generator()?;
    let mut rng = pass_rng(cfg.seed, OVERHEAD_STREAM, 0);
    let y = random_input(gen.data_len(), &mut rng);
    let w = random_weights(gen.data_len(), &mut rng);
    let combined = precompute_combined(&w, &gen)?;
    let s = forward_linear(&y, &w)?;
    let res = check_forward_parts(&s, &y, &combined, &gen, Tolerance::Relative(cfg.tau_rel))?;
    let (paper, dense, banded) = closed_forms(&p, &gen);
    Ok(OverheadCounts {
        measured: res.mults,
        paper,
        dense,
        banded,
    })
}

struct WeightingPass<'a> {
    cfg: &'a SimConfig,
    gen: &'a ParityGenerator,
    model: FaultModel,
    params: LearningParams,
    tol: Tolerance,
    stream: u64,
}

impl WeightingPass<'_> {
    fn run(&self, pass: u64) -> Result<PassOutcome> {
        let mut rng = pass_rng(self.cfg.seed, self.stream, pass);
        let rng = &mut rng;
        let (gen, tol) = (self.gen, self.tol);
        let k = gen.data_len();
        let recompute = self.cfg.recompute_on_detect;
        let weights_model = self.model.with_target(FaultTarget::Weights);
        let output_model = self.model.with_target(FaultTarget::LinearOutputs);
        let mut out = PassOutcome::default();

        let y = random_input(k, rng);
        let w = random_weights(k, rng);
        let delta = random_input(k, rng);
        let combined = precompute_combined(&w, gen)?;
        let y_parity = gen.parity(&y)?;

        // Forward product.
        let (s, faults) = match self.cfg.fault_site {
            FaultSite::Weights => {
                let (wf, log) = inject_matrix(&w, &weights_model, rng)?;
                (forward_linear(&y, &wf)?, log.len())
            }
            FaultSite::Outputs => {
                let (s, log) = inject_vector(&forward_linear(&y, &w)?, &output_model, rng)?;
                (s, log.len())
            }
        };
        let fwd = check_forward_parts(&s, &y, &combined, gen, tol)?;
        out.primary_mults = fwd.mults;
        if fwd.detected && recompute {
            out.recomputations += 1;
        }
        out.sections.push(SectionOutcome {
            faults: faults as u64,
            flagged: fwd.detected,
        });

        // Weight update, checked before the backward product uses it.
        let w_nw = update_weights(&w, self.params, &delta, &y)?;
        let (w_nw_faulty, log) = inject_matrix(&w_nw, &weights_model, rng)?;
        let upd = check_weight_update_cached(
            &combined,
            &y_parity,
            &w_nw_faulty,
            self.params,
            &delta,
            gen,
            tol,
        )?;
        out.sections.push(SectionOutcome {
            faults: log.len() as u64,
            flagged: upd.result.detected,
        });
        let (w_used, updated_combined) = if upd.result.detected && recompute {
            out.recomputations += 1;
            (w_nw, upd.expected_combined)
        } else {
            (w_nw_faulty, upd.updated_combined)
        };

        // Backward product with the new weights.
        let (sigma, faults) = match self.cfg.fault_site {
            FaultSite::Weights => {
                let (wf, log) = inject_matrix(&w_used, &weights_model, rng)?;
                (backward_linear(&delta, &wf)?, log.len())
            }
            FaultSite::Outputs => {
                let (s, log) =
                    inject_vector(&backward_linear(&delta, &w_used)?, &output_model, rng)?;
                (s, log.len())
            }
        };
        let bwd = check_backward(&delta, &sigma, Some(&updated_combined), gen, tol)?;
        if bwd.detected && recompute {
            out.recomputations += 1;
        }
        out.sections.push(SectionOutcome {
            faults: faults as u64,
            flagged: bwd.detected,
        });
        Ok(out)
    }
}

/// Forward, weight-update and backward sections per pass, over the epsilon
/// sweep.
pub fn run_weighting_suite(cfg: &SimConfig) -> Result<DetectionReport> {
    cfg.validate()?;
    let (gen, validity) = cfg.generator()?;
    let overhead = count_overhead(cfg)?;
    let params = LearningParams::new(cfg.eta)?;
    let mut rows = Vec::with_capacity(cfg.epsilons.len());
    for (i, &eps) in cfg.epsilons.iter().enumerate() {
        let runner = WeightingPass {
            cfg,
            gen: &gen,
            model: FaultModel::new(eps, cfg.sigma_f, FaultTarget::Weights)?,
            params,
            tol: Tolerance::Relative(cfg.tau_rel),
            stream: WEIGHTING_STREAM | i as u64,
        };
        let tally = run_passes(cfg.passes, cfg.parallel, |p| runner.run(p))?;
        rows.push(tally.into_row(eps, &overhead));
    }
    rows.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
    Ok(DetectionReport {
        suite: Suite::Weighting,
        validity,
        tau_act: None,
        rows,
    })
}

/// Calibrates the activation threshold for `cfg`'s code.
pub fn calibrate(cfg: &SimConfig) -> Result<Calibration> {
    cfg.validate()?;
    let (gen, _) = cfg.generator()?;
    let approx = Approximant::tanh(cfg.coeff_source);
    calibrate_threshold(
        &gen,
        &approx,
        cfg.calibration_passes,
        cfg.safety_factor,
        cfg.seed,
    )
}

/// Activation banks with errors added on top of the true outputs, checked
/// against the segmented approximation. Needs `cfg.tau_act`.
pub fn run_activation_suite(cfg: &SimConfig) -> Result<DetectionReport> {
    cfg.validate()?;
    let tau_act = cfg.tau_act.ok_or(Error::Uncalibrated)?;
    let (gen, validity) = cfg.generator()?;
    let overhead = count_overhead(cfg)?;
    let approx = Approximant::tanh(cfg.coeff_source);
    let tol = Tolerance::Absolute(tau_act);
    let mut rows = Vec::with_capacity(cfg.epsilons.len());
    for (i, &eps) in cfg.epsilons.iter().enumerate() {
        let model = FaultModel::new(eps, cfg.sigma_f, FaultTarget::ActivationOutputs)?;
        let stream = ACTIVATION_STREAM | i as u64;
        let pass = |p: u64| -> Result<PassOutcome> {
            let mut rng = pass_rng(cfg.seed, stream, p);
            let s = random_linear_output(gen.data_len(), &mut rng);
            let y: Vec<f64> = s.iter().map(|x| x.tanh()).collect();
            let (y_out, log) = inject_vector(&y, &model, &mut rng)?;
            let r = check_activation(&s, &y_out, &approx, &gen, tol)?;
            Ok(PassOutcome {
                sections: vec![SectionOutcome {
                    faults: log.len() as u64,
                    flagged: r.detected,
                }],
                recomputations: (r.detected && cfg.recompute_on_detect) as u64,
                primary_mults: r.mults,
            })
        };
        let tally = run_passes(cfg.passes, cfg.parallel, pass)?;
        rows.push(tally.into_row(eps, &overhead));
    }
    rows.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
    Ok(DetectionReport {
        suite: Suite::Activation,
        validity,
        tau_act: Some(tau_act),
        rows,
    })
}

/// Runs the suite selected in `cfg`, calibrating first for the activation
/// suite when no threshold is given.
pub fn run_suite(cfg: &SimConfig) -> Result<DetectionReport> {
    match cfg.suite {
        Suite::Weighting => run_weighting_suite(cfg),
        Suite::Activation if cfg.tau_act.is_some() => run_activation_suite(cfg),
        Suite::Activation => {
            let cal = calibrate(cfg)?;
            run_activation_suite(&SimConfig {
                tau_act: Some(cal.tau_act),
                ..cfg.clone()
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(eps: Vec<f64>, passes: usize) -> SimConfig {
        SimConfig {
            epsilons: eps,
            passes,
            segments: 4,
            ..SimConfig::default()
        }
    }

    #[test]
    fn tally_accounting() {
        let p = PassOutcome {
            sections: vec![
                SectionOutcome {
                    faults: 2,
                    flagged: true,
                },
                SectionOutcome {
                    faults: 0,
                    flagged: true,
                },
                SectionOutcome {
                    faults: 1,
                    flagged: false,
                },
            ],
            ..Default::default()
        };
        let t = Tally::from_pass(&p);
        assert_eq!((t.fault_passes, t.detected, t.missed), (1, 0, 1));
        assert_eq!(
            (t.faulted_sections, t.detected_sections, t.spurious),
            (2, 1, 1)
        );
        assert_eq!(t.false_positives, 0);
        let clean = Tally::from_pass(&PassOutcome {
            sections: vec![SectionOutcome {
                faults: 0,
                flagged: true,
            }],
            ..Default::default()
        });
        assert_eq!((clean.fault_passes, clean.false_positives), (0, 1));
    }

    #[test]
    fn fault_free_weighting_is_quiet() {
        let rep = run_weighting_suite(&small(vec![0.0], 200)).unwrap();
        let r = &rep.rows[0];
        assert_eq!(
            (r.passes, r.fault_passes, r.detected, r.false_positives),
            (200, 0, 0, 0)
        );
    }

    #[test]
    fn activation_requires_threshold() {
        let cfg = SimConfig {
            suite: Suite::Activation,
            ..small(vec![0.01], 10)
        };
        assert!(matches!(
            run_activation_suite(&cfg),
            Err(Error::Uncalibrated)
        ));
    }

    #[test]
    fn output_site_detects() {
        let cfg = SimConfig {
            fault_site: FaultSite::Outputs,
            ..small(vec![0.05], 300)
        };
        let rep = run_weighting_suite(&cfg).unwrap();
        let r = &rep.rows[0];
        assert!(r.fault_passes > 0);
        assert_eq!(r.missed, 0);
        assert_eq!(r.detected + r.missed, r.fault_passes);
    }

    #[test]
    fn rows_sorted_by_epsilon() {
        let rep = run_weighting_suite(&small(vec![0.05, 0.001, 0.01], 20)).unwrap();
        let e: Vec<f64> = rep.rows.iter().map(|r| r.epsilon).collect();
        assert_eq!(e, vec![0.001, 0.01, 0.05]);
    }
}
