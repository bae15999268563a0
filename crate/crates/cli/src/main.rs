use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use abft_core::harness::{
    self, calibrate, count_overhead, emit_report, write_report_csv, DetectionReport, SimConfig,
    Suite,
};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "abft-sim",
    version,
    about = "Fault-injection campaigns for ABFT-protected network stages"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Forward, weight-update and backward checks under injected faults.
    RunWeighting(Opts),
    /// Activation-bank checks; calibrates the threshold unless --tau-act is given.
    RunActivation(Opts),
    /// Measures the fault-free activation threshold.
    Calibrate(Opts),
    /// Multiplication counts for one checked product.
    Overhead(Opts),
}

#[derive(Args, Default)]
struct Opts {
    /// Key = value settings file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Simulation code 1..=4.
    #[arg(long)]
    code: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    mu: Option<usize>,
    /// Number of segments.
    #[arg(long = "L")]
    segments: Option<usize>,
    /// Comma-separated insertion probabilities.
    #[arg(long, allow_hyphen_values = true)]
    eps: Option<String>,
    #[arg(long)]
    passes: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sigma_f: Option<f64>,
    #[arg(long)]
    tau_rel: Option<f64>,
    #[arg(long)]
    tau_act: Option<f64>,
    #[arg(long)]
    safety_factor: Option<f64>,
    #[arg(long)]
    calibration_passes: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
    /// weights | outputs
    #[arg(long)]
    fault_site: Option<String>,
    /// Read the parity kernel from a file instead of building the DFT kernel.
    #[arg(long)]
    xi_file: Option<PathBuf>,
    /// Reject codes that violate the window constraint.
    #[arg(long)]
    strict_params: bool,
    /// Use the series coefficients exactly as printed in the source table.
    #[arg(long)]
    paper_literal: bool,
    #[arg(long)]
    no_recompute: bool,
    /// Run passes on one thread.
    #[arg(long)]
    serial: bool,
    /// CSV report path.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Opts {
    fn settings(&self) -> Vec<(&'static str, String)> {
        let mut s = Vec::new();
        macro_rules! opt {
            ($key:literal, $field:expr) => {
                if let Some(v) = &$field {
                    s.push(($key, v.to_string()));
                }
            };
        }
        opt!("code", self.code);
        opt!("n", self.n);
        opt!("k", self.k);
        opt!("mu", self.mu);
        opt!("L", self.segments);
        opt!("eps", self.eps);
        opt!("passes", self.passes);
        opt!("seed", self.seed);
        opt!("sigma-f", self.sigma_f);
        opt!("tau-rel", self.tau_rel);
        opt!("tau-act", self.tau_act);
        opt!("safety-factor", self.safety_factor);
        opt!("calibration-passes", self.calibration_passes);
        opt!("eta", self.eta);
        opt!("fault-site", self.fault_site);
        opt!("xi-file", self.xi_file.as_ref().map(|p| p.display()));
        opt!("out", self.out.as_ref().map(|p| p.display()));
        for (key, on) in [
            ("strict-params", self.strict_params),
            ("paper-literal", self.paper_literal),
        ] {
            if on {
                s.push((key, "true".into()));
            }
        }
        if self.no_recompute {
            s.push(("recompute", "false".into()));
        }
        if self.serial {
            s.push(("parallel", "false".into()));
        }
        s
    }

    fn config(&self) -> abft_core::Result<SimConfig> {
        let mut cfg = SimConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        for (k, v) in self.settings() {
            cfg.set(k, &v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_summary(report: &DetectionReport) {
    if let Some(w) = &report.validity.warning {
        eprintln!("warning: {w}");
    }
    if let Some(t) = report.tau_act {
        println!("tau_act = {t:.6e}");
    }
    println!(
        "{:>10} {:>8} {:>8} {:>8} {:>6} {:>4} {:>9} {:>9} {:>8}",
        "epsilon", "passes", "faulted", "detected", "missed", "fp", "faults", "in_det", "spurious"
    );
    for r in &report.rows {
        println!(
            "{:>10.4e} {:>8} {:>8} {:>8} {:>6} {:>4} {:>9} {:>9} {:>8}",
            r.epsilon,
            r.passes,
            r.fault_passes,
            r.detected,
            r.missed,
            r.false_positives,
            r.faults_injected,
            r.faults_in_detected_sections,
            r.spurious_section_flags
        );
    }
}

fn finish(report: &DetectionReport, cfg: &SimConfig) -> abft_core::Result<()> {
    match &cfg.out {
        Some(path) => {
            emit_report(report, path)?;
            print_summary(report);
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_report_csv(&mut lock, report)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> abft_core::Result<()> {
    match cli.command {
        Command::RunWeighting(o) => {
            let cfg = o.config()?;
            let report = harness::run_weighting_suite(&cfg)?;
            finish(&report, &cfg)
        }
        Command::RunActivation(o) => {
            let cfg = SimConfig {
                suite: Suite::Activation,
                ..o.config()?
            };
            let report = harness::run_suite(&cfg)?;
            finish(&report, &cfg)
        }
        Command::Calibrate(o) => {
            let cfg = o.config()?;
            let cal = calibrate(&cfg)?;
            println!("passes = {}", cal.passes);
            println!("max_deviation = {:.6e}", cal.max_deviation);
            println!("tau_act = {:.6e}", cal.tau_act);
            Ok(())
        }
        Command::Overhead(o) => {
            let cfg = o.config()?;
            let (_, validity) = cfg.generator()?;
            if let Some(w) = &validity.warning {
                eprintln!("warning: {w}");
            }
            let c = count_overhead(&cfg)?;
            println!("measured = {}", c.measured);
            println!("banded = {}", c.banded);
            println!("dense = {}", c.dense);
            println!("paper = {}", c.paper);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
