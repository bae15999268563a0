//! Campaign configuration and its flat `key = value` file form.

use std::path::{Path, PathBuf};

use crate::approx::CoeffSource;
use crate::checkers::{DEFAULT_SAFETY_FACTOR, DEFAULT_TAU_REL};
use crate::codes::{
    build_gamma, build_xi, validate_conv_params, ConvCodeParams, ParityGenerator, ValidityReport,
    XiKernel,
};
use crate::error::{Error, Result};
use crate::faults::DEFAULT_SIGMA_F;

pub const DEFAULT_SEGMENTS: usize = 12;
pub const DEFAULT_PASSES: usize = 10_000;
pub const DEFAULT_CALIBRATION_PASSES: usize = 10_000;
pub const DEFAULT_SEED: u64 = 20_240_101;
pub const DEFAULT_ETA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Suite {
    #[default]
    Weighting,
    Activation,
}

/// Where the weighting suite adds its errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FaultSite {
    /// Into the weight matrix before each product.
    #[default]
    Weights,
    /// Into the product outputs (`S`, `W_nw`, `sigma`).
    Outputs,
}

/// 13 values spaced evenly in log scale from 1e-3 to 1e-1.
pub fn default_epsilons() -> Vec<f64> {
    (0..13)
        .map(|i| 10f64.powf(-3.0 + 2.0 * i as f64 / 12.0))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Simulation code id 1..=4; ignored when `explicit` is set.
    pub code: usize,
    /// Explicit `(n, k, mu)`.
    pub explicit: Option<(usize, usize, usize)>,
    pub segments: usize,
    pub epsilons: Vec<f64>,
    pub passes: usize,
    pub seed: u64,
    pub sigma_f: f64,
    pub tau_rel: f64,
    pub safety_factor: f64,
    pub strict_params: bool,
    pub suite: Suite,
    pub recompute_on_detect: bool,
    pub eta: f64,
    pub fault_site: FaultSite,
    pub calibration_passes: usize,
    /// Activation threshold; the activation suite refuses to run without it.
    pub tau_act: Option<f64>,
    pub coeff_source: CoeffSource,
    pub kernel: XiKernel,
    pub parallel: bool,
    pub out: Option<PathBuf>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            code: 1,
            explicit: None,
            segments: DEFAULT_SEGMENTS,
            epsilons: default_epsilons(),
            passes: DEFAULT_PASSES,
            seed: DEFAULT_SEED,
            sigma_f: DEFAULT_SIGMA_F,
            tau_rel: DEFAULT_TAU_REL,
            safety_factor: DEFAULT_SAFETY_FACTOR,
            strict_params: false,
            suite: Suite::Weighting,
            recompute_on_detect: true,
            eta: DEFAULT_ETA,
            fault_site: FaultSite::Weights,
            calibration_passes: DEFAULT_CALIBRATION_PASSES,
            tau_act: None,
            coeff_source: CoeffSource::Analytic,
            kernel: XiKernel::Dft,
            parallel: true,
            out: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.passes == 0 {
            return Err(Error::Config("passes must be at least 1".into()));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(Error::Config(format!("epsilon {e} outside [0, 1]")));
        }
        for (name, v) in [
            ("sigma-f", self.sigma_f),
            ("tau-rel", self.tau_rel),
            ("safety-factor", self.safety_factor),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(Error::Config(format!(
                "eta must be non-negative, got {}",
                self.eta
            )));
        }
        if let Some(t) = self.tau_act {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::Config(format!("tau-act must be positive, got {t}")));
            }
        }
        Ok(())
    }

    pub fn conv_params(&self) -> Result<ConvCodeParams> {
        match self.explicit {
            Some((n, k, mu)) => ConvCodeParams::new(n, k, mu, self.segments),
            None => ConvCodeParams::from_table(self.code, self.segments),
        }
    }

    /// Validates the code parameters (strictly if configured) and builds the
    /// parity generator.
    pub fn generator(&self) -> Result<(ParityGenerator, ValidityReport)> {
        let p = self.conv_params()?;
        let report = validate_conv_params(&p, self.strict_params)?;
        let xi = build_xi(&p, &self.kernel)?;
        Ok((build_gamma(&xi, p.segments)?, report))
    }

    /// Applies one `key = value` setting. Keys are the long CLI flag names;
    /// `_` and `-` are interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        let bad = |what: &str| Error::Config(format!("invalid {what} value {value:?}"));
        macro_rules! parse {
            ($what:expr) => {
                value.parse().map_err(|_| bad($what))?
            };
        }
        match key.as_str() {
            "code" => self.code = parse!("code"),
            "n" | "k" | "mu" => {
                let v: usize = parse!(&key);
                let (mut n, mut k, mut mu) = self.explicit.unwrap_or((0, 0, 0));
                match key.as_str() {
                    "n" => n = v,
                    "k" => k = v,
                    _ => mu = v,
                }
                self.explicit = Some((n, k, mu));
            }
            "L" | "l" | "segments" => self.segments = parse!("L"),
            "eps" => self.epsilons = parse_eps_list(value)?,
            "passes" => self.passes = parse!("passes"),
            "seed" => self.seed = parse!("seed"),
            "sigma-f" => self.sigma_f = parse!("sigma-f"),
            "tau-rel" => self.tau_rel = parse!("tau-rel"),
            "tau-act" => self.tau_act = Some(parse!("tau-act")),
            "safety-factor" => self.safety_factor = parse!("safety-factor"),
            "strict-params" => self.strict_params = parse_bool(value).ok_or_else(|| bad("flag"))?,
            "recompute" => {
                self.recompute_on_detect = parse_bool(value).ok_or_else(|| bad("flag"))?
            }
            "paper-literal" => {
                self.coeff_source = if parse_bool(value).ok_or_else(|| bad("flag"))? {
                    CoeffSource::PaperLiteral
                } else {
                    CoeffSource::Analytic
                }
            }
            "parallel" => self.parallel = parse_bool(value).ok_or_else(|| bad("flag"))?,
            "eta" => self.eta = parse!("eta"),
            "calibration-passes" => self.calibration_passes = parse!("calibration-passes"),
            "suite" => {
                self.suite = match value {
                    "weighting" => Suite::Weighting,
                    "activation" => Suite::Activation,
                    _ => return Err(bad("suite")),
                }
            }
            "fault-site" => {
                self.fault_site = match value {
                    "weights" => FaultSite::Weights,
                    "outputs" => FaultSite::Outputs,
                    _ => return Err(bad("fault-site")),
                }
            }
            "xi-file" => self.kernel = XiKernel::File(PathBuf::from(value)),
            "out" => self.out = Some(PathBuf::from(value)),
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies every setting of a config file on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Format {
                line: i + 1,
                msg: format!("expected key = value, got {raw:?}"),
            })?;
            self.set(k, v).map_err(|e| Error::Format {
                line: i + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.apply_text(&text)
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "1" | "yes" | "on" => Some(true),
        "false" | "0" | "no" | "off" => Some(false),
        _ => None,
    }
}

/// Comma-separated epsilon list; an empty string gives an empty sweep.
pub fn parse_eps_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Config(format!("invalid epsilon {t:?}")))
        })
        .collect()
}
