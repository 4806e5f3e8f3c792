//! Experiment specifications: the TOML schema, the built-in presets, and
//! validation of sweep grids and fixed parameters.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use blockcalc::latency_model::REFERENCE_BP_RATE;

use crate::CliError;

pub const ALPHA_GRID: [f64; 5] = [1.01, 1.03, 1.05, 1.07, 1.09];
pub const BS_GRID: [f64; 7] = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0];
pub const RANGE_GRID: [f64; 5] = [25.0, 50.0, 100.0, 200.0, 400.0];
pub const RP_GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
/// Block sizes of the reference latency evaluation.
pub const LATENCY_BS_GRID: [f64; 6] = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    #[serde(alias = "case1")]
    Case1AllWrite,
    #[serde(alias = "case2")]
    Case2ReadWrite,
    #[serde(alias = "case3")]
    Case3SplitRw,
    #[serde(alias = "latency")]
    LatencySweep,
    #[serde(alias = "overlap")]
    OverlapTable,
}

impl Kind {
    pub fn label(self) -> &'static str {
        match self {
            Kind::Case1AllWrite => "all-write clients",
            Kind::Case2ReadWrite => "read-write clients",
            Kind::Case3SplitRw => "split read/write clients",
            Kind::LatencySweep => "latency model",
            Kind::OverlapTable => "distribution overlap",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    Alpha,
    Bs,
    Range,
    Rp,
    ArrivalRate,
}

impl Parameter {
    pub fn name(self) -> &'static str {
        match self {
            Parameter::Alpha => "alpha",
            Parameter::Bs => "bs",
            Parameter::Range => "range",
            Parameter::Rp => "rp",
            Parameter::ArrivalRate => "arrival_rate",
        }
    }
}

/// Concrete parameter set for one sweep point; the sweep rewrites one
/// field per value.
#[derive(Clone, Debug, PartialEq)]
pub struct Fixed {
    pub alpha: f64,
    pub bs: u32,
    pub range: u32,
    pub rp: f64,
    pub trials: u32,
    pub ops: u64,
    pub seed: u64,
    pub num_clients: Option<u32>,
    pub arrival_rate: f64,
    pub bto: f64,
    pub c0: f64,
    pub c1: f64,
    pub bp_rate: f64,
    pub noise_sigma: f64,
    pub reps: u32,
    pub measurements: Option<PathBuf>,
}

impl Default for Fixed {
    fn default() -> Self {
        Self {
            alpha: 1.03,
            bs: 8,
            range: 100,
            rp: 0.5,
            trials: 50,
            ops: 1000,
            seed: 42,
            num_clients: None,
            arrival_rate: 8.0,
            bto: 2.0,
            c0: 0.003,
            c1: 0.12,
            bp_rate: REFERENCE_BP_RATE,
            noise_sigma: 0.01,
            reps: 10,
            measurements: None,
        }
    }
}

impl Fixed {
    /// Copy with `parameter` replaced by the sweep value. Integer
    /// parameters have already been validated as integral.
    pub fn with(&self, parameter: Parameter, value: f64) -> Self {
        let mut fx = self.clone();
        match parameter {
            Parameter::Alpha => fx.alpha = value,
            Parameter::Bs => fx.bs = value as u32,
            Parameter::Range => fx.range = value as u32,
            Parameter::Rp => fx.rp = value,
            Parameter::ArrivalRate => fx.arrival_rate = value,
        }
        fx
    }
}

/// One fully resolved experiment: a kind, a sweep, fixed parameters, and
/// an output location. Produces `<output_dir>/<name>.csv` and, for
/// plotted kinds, `<output_dir>/<name>.py`.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub name: String,
    pub kind: Kind,
    pub parameter: Parameter,
    pub values: Vec<f64>,
    pub fixed: Fixed,
    pub output_dir: PathBuf,
}

impl Experiment {
    pub fn validate(&self) -> Result<(), CliError> {
        let cfg = |msg: String| Err(CliError::Config(msg));
        if self.values.is_empty() {
            return cfg(format!("{}: sweep value list is empty", self.name));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return cfg(format!("{}: sweep values must be finite", self.name));
        }
        if self.values.windows(2).any(|w| w[1] <= w[0]) {
            return cfg(format!(
                "{}: sweep values must be strictly increasing",
                self.name
            ));
        }

        let allowed: &[Parameter] = match self.kind {
            Kind::Case1AllWrite | Kind::Case2ReadWrite => {
                &[Parameter::Alpha, Parameter::Bs, Parameter::Range]
            }
            Kind::Case3SplitRw => {
                &[Parameter::Alpha, Parameter::Bs, Parameter::Range, Parameter::Rp]
            }
            Kind::LatencySweep => &[Parameter::Bs, Parameter::ArrivalRate],
            Kind::OverlapTable => &[Parameter::Alpha],
        };
        if !allowed.contains(&self.parameter) {
            return cfg(format!(
                "{}: {} experiments cannot sweep {}",
                self.name,
                self.kind.label(),
                self.parameter.name()
            ));
        }

        for &v in &self.values {
            let ok = match self.parameter {
                Parameter::Alpha => v > 1.0,
                Parameter::Bs | Parameter::Range => {
                    v.fract() == 0.0 && v >= 1.0 && v <= u32::MAX as f64
                }
                Parameter::Rp => (0.0..=1.0).contains(&v),
                Parameter::ArrivalRate => v > 0.0,
            };
            if !ok {
                return cfg(format!(
                    "{}: {v} is not a valid {} value",
                    self.name,
                    self.parameter.name()
                ));
            }
        }

        let fx = &self.fixed;
        let checks = [
            (fx.alpha > 1.0, "alpha must exceed 1"),
            (fx.bs >= 1, "bs must be at least 1"),
            (fx.range >= 1, "range must be at least 1"),
            ((0.0..=1.0).contains(&fx.rp), "rp must lie in [0, 1]"),
            (fx.trials >= 1, "trials must be at least 1"),
            (fx.ops >= 1, "ops must be at least 1"),
            (fx.bto > 0.0, "bto must be positive"),
            (fx.arrival_rate > 0.0, "arrival_rate must be positive"),
            (fx.bp_rate > 0.0, "bp_rate must be positive"),
            (fx.noise_sigma >= 0.0, "noise_sigma must be non-negative"),
            (fx.reps >= 1, "reps must be at least 1"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return cfg(format!("{}: {msg}", self.name));
            }
        }
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    kind: Kind,
    sweep: SweepFile,
    #[serde(default)]
    fixed: FixedFile,
    output_dir: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    parameter: Parameter,
    values: Vec<f64>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FixedFile {
    alpha: Option<f64>,
    bs: Option<u32>,
    range: Option<u32>,
    rp: Option<f64>,
    trials: Option<u32>,
    ops: Option<u64>,
    seed: Option<u64>,
    num_clients: Option<u32>,
    arrival_rate: Option<f64>,
    bto: Option<f64>,
    c0: Option<f64>,
    c1: Option<f64>,
    bp_rate: Option<f64>,
    noise_sigma: Option<f64>,
    reps: Option<u32>,
    measurements: Option<PathBuf>,
}

/// Load a single experiment from a TOML spec file; its name is the file
/// stem and unset fixed fields take the documented defaults.
pub fn from_file(path: &Path) -> Result<Experiment, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Config(format!("cannot read spec {}: {e}", path.display()))
    })?;
    let file: SpecFile = toml::from_str(&text).map_err(|e| {
        CliError::Config(format!("invalid spec {}: {e}", path.display()))
    })?;
    let defaults = Fixed::default();
    let f = file.fixed;
    let fixed = Fixed {
        alpha: f.alpha.unwrap_or(defaults.alpha),
        bs: f.bs.unwrap_or(defaults.bs),
        range: f.range.unwrap_or(defaults.range),
        rp: f.rp.unwrap_or(defaults.rp),
        trials: f.trials.unwrap_or(defaults.trials),
        ops: f.ops.unwrap_or(defaults.ops),
        seed: f.seed.unwrap_or(defaults.seed),
        num_clients: f.num_clients,
        arrival_rate: f.arrival_rate.unwrap_or(defaults.arrival_rate),
        bto: f.bto.unwrap_or(defaults.bto),
        c0: f.c0.unwrap_or(defaults.c0),
        c1: f.c1.unwrap_or(defaults.c1),
        bp_rate: f.bp_rate.unwrap_or(defaults.bp_rate),
        noise_sigma: f.noise_sigma.unwrap_or(defaults.noise_sigma),
        reps: f.reps.unwrap_or(defaults.reps),
        measurements: f.measurements,
    };
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "experiment".into());
    Ok(Experiment {
        name,
        kind: file.kind,
        parameter: file.sweep.parameter,
        values: file.sweep.values,
        fixed,
        output_dir: file.output_dir.unwrap_or_else(|| PathBuf::from("results")),
    })
}

/// The built-in presets mirroring the reference evaluations.
pub fn preset(name: &str) -> Option<Vec<Experiment>> {
    let make = |name: &str, kind, parameter, values: &[f64]| Experiment {
        name: name.into(),
        kind,
        parameter,
        values: values.to_vec(),
        fixed: Fixed::default(),
        output_dir: PathBuf::from("results"),
    };
    let bundle = match name {
        "fig8" => vec![
            make("fig8_alpha", Kind::Case1AllWrite, Parameter::Alpha, &ALPHA_GRID),
            make("fig8_bs", Kind::Case1AllWrite, Parameter::Bs, &BS_GRID),
            make("fig8_range", Kind::Case1AllWrite, Parameter::Range, &RANGE_GRID),
        ],
        "fig9" => vec![
            make("fig9_alpha", Kind::Case2ReadWrite, Parameter::Alpha, &ALPHA_GRID),
            make("fig9_bs", Kind::Case2ReadWrite, Parameter::Bs, &BS_GRID),
            make("fig9_range", Kind::Case2ReadWrite, Parameter::Range, &RANGE_GRID),
        ],
        "fig11" => vec![
            make("fig11_rp", Kind::Case3SplitRw, Parameter::Rp, &RP_GRID),
            make("fig11_alpha", Kind::Case3SplitRw, Parameter::Alpha, &ALPHA_GRID),
        ],
        "table3" => vec![make("table3", Kind::OverlapTable, Parameter::Alpha, &ALPHA_GRID)],
        "fig1" => vec![make("fig1", Kind::LatencySweep, Parameter::Bs, &LATENCY_BS_GRID)],
        _ => return None,
    };
    Some(bundle)
}

/// Resolve an `experiment` target: preset names take precedence, anything
/// else is treated as a spec-file path.
pub fn resolve(target: &str) -> Result<Vec<Experiment>, CliError> {
    if let Some(bundle) = preset(target) {
        return Ok(bundle);
    }
    let path = Path::new(target);
    if path.exists() {
        return Ok(vec![from_file(path)?]);
    }
    Err(CliError::Config(format!(
        "unknown preset '{target}' (expected fig8, fig9, fig11, table3, fig1, or a spec-file path)"
    )))
}
