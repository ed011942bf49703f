//! Scenario and sweep configuration files: JSON with lab-unit string values
//! ("26uK", "8G/cm", "160um"). Errors carry the offending field path.

use serde::Deserialize;

use velsel::ensemble::IntegratorConfig;
use velsel::experiments::{Scenario, SweepAxis};
use velsel::physics::{parse_to_si, PhysicalConstants, Unit};
use velsel::potential::PotentialConfig;
use velsel::theory::CloudSpec;

#[derive(Debug)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(path: &str, message: impl std::fmt::Display) -> ConfigError {
    ConfigError {
        path: path.to_string(),
        message: message.to_string(),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCloud {
    pub temperature: String,
    pub rms_radius: String,
    #[serde(default)]
    pub center: Option<String>,
    pub count: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPotential {
    /// Magnetic field gradient, e.g. "3G/cm" or "0.03T/m".
    #[serde(default)]
    pub gradient: Option<String>,
    /// Raw U′ in J/m; written by manifests so replay is bit-exact.
    #[serde(default)]
    pub u_prime_si: Option<f64>,
    pub barrier_height: String,
    #[serde(default)]
    pub barrier_center: Option<String>,
    #[serde(default)]
    pub barrier_waist: Option<String>,
    #[serde(default)]
    pub trap_offset: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawIntegrator {
    #[serde(default)]
    pub dt: Option<String>,
    #[serde(default)]
    pub record_stride: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawScenario {
    pub cloud: RawCloud,
    pub potential: RawPotential,
    #[serde(default)]
    pub hold_time: Option<String>,
    #[serde(default)]
    pub separation_time: Option<String>,
    #[serde(default)]
    pub tof_times: Option<Vec<String>>,
    #[serde(default)]
    pub integrator: Option<RawIntegrator>,
    pub seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawAxis {
    #[serde(default)]
    pub min: Option<String>,
    #[serde(default)]
    pub max: Option<String>,
    #[serde(default)]
    pub points: Option<usize>,
    #[serde(default)]
    pub spacing: Option<String>,
    #[serde(default)]
    pub values: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSweep {
    pub scenario: RawScenario,
    pub axis: RawAxis,
}

/// A manifest embeds the resolved inputs under these keys; accepting them
/// here lets a manifest be replayed as the config it records.
#[derive(Debug, Deserialize)]
struct MaybeWrapped {
    #[serde(default)]
    scenario: Option<serde_json::Value>,
    #[serde(default)]
    sweep: Option<serde_json::Value>,
}

fn quantity(field: &str, s: &str, unit: Unit) -> Result<f64, ConfigError> {
    parse_to_si(s, unit).map_err(|e| err(field, e))
}

fn opt_quantity(
    field: &str,
    s: &Option<String>,
    unit: Unit,
    default: f64,
) -> Result<f64, ConfigError> {
    match s {
        Some(s) => quantity(field, s, unit),
        None => Ok(default),
    }
}

pub fn resolve_scenario(
    raw: RawScenario,
    constants: &PhysicalConstants,
) -> Result<Scenario, ConfigError> {
    let cloud = CloudSpec {
        temperature: quantity("cloud.temperature", &raw.cloud.temperature, Unit::Kelvin)?,
        rms_radius: quantity("cloud.rms_radius", &raw.cloud.rms_radius, Unit::Meter)?,
        center: opt_quantity("cloud.center", &raw.cloud.center, Unit::Meter, 0.0)?,
        count: raw.cloud.count,
    };
    let u_prime = match (&raw.potential.u_prime_si, &raw.potential.gradient) {
        (Some(u), _) if *u >= 0.0 => *u,
        (Some(u), _) => return Err(err("potential.u_prime_si", format!("must be >= 0, got {u}"))),
        (None, Some(g)) => {
            let gradient_si = quantity("potential.gradient", g, Unit::TeslaPerMeter)?;
            constants
                .gradient_energy_per_length(gradient_si)
                .map_err(|e| err("potential.gradient", e))?
        }
        (None, None) => return Err(err("potential.gradient", "missing")),
    };
    let potential = PotentialConfig {
        u_prime,
        barrier_height: quantity(
            "potential.barrier_height",
            &raw.potential.barrier_height,
            Unit::Joule,
        )?,
        barrier_center: opt_quantity(
            "potential.barrier_center",
            &raw.potential.barrier_center,
            Unit::Meter,
            0.0,
        )?,
        barrier_waist: opt_quantity(
            "potential.barrier_waist",
            &raw.potential.barrier_waist,
            Unit::Meter,
            6e-6,
        )?,
        trap_offset: opt_quantity(
            "potential.trap_offset",
            &raw.potential.trap_offset,
            Unit::Meter,
            2e-3,
        )?,
    };
    let hold_time = opt_quantity("hold_time", &raw.hold_time, Unit::Second, 20e-3)?;
    let separation_time =
        opt_quantity("separation_time", &raw.separation_time, Unit::Second, 0.5e-3)?;
    let tof_times = match raw.tof_times {
        None => vec![5e-3, 10e-3, 15e-3, 20e-3],
        Some(list) => {
            let mut out = Vec::with_capacity(list.len());
            for (i, s) in list.iter().enumerate() {
                out.push(quantity(&format!("tof_times[{i}]"), s, Unit::Second)?);
            }
            out
        }
    };
    let integrator = match raw.integrator {
        None => IntegratorConfig {
            dt: 1e-6,
            t_total: hold_time,
            record_stride: 100,
        },
        Some(raw_i) => IntegratorConfig {
            dt: opt_quantity("integrator.dt", &raw_i.dt, Unit::Second, 1e-6)?,
            t_total: hold_time,
            record_stride: raw_i.record_stride.unwrap_or(100),
        },
    };
    let scenario = Scenario {
        cloud,
        potential,
        hold_time,
        separation_time,
        tof_times,
        integrator,
        seed: raw.seed,
    };
    scenario.validate().map_err(|e| err("scenario", e))?;
    Ok(scenario)
}

pub fn resolve_axis(raw: RawAxis) -> Result<SweepAxis, ConfigError> {
    if let Some(values) = raw.values {
        let mut out = Vec::with_capacity(values.len());
        for (i, s) in values.iter().enumerate() {
            out.push(quantity(&format!("axis.values[{i}]"), s, Unit::Kelvin)?);
        }
        return SweepAxis::from_values(out).map_err(|e| err("axis.values", e));
    }
    let min = quantity(
        "axis.min",
        raw.min.as_deref().ok_or_else(|| err("axis.min", "missing"))?,
        Unit::Kelvin,
    )?;
    let max = quantity(
        "axis.max",
        raw.max.as_deref().ok_or_else(|| err("axis.max", "missing"))?,
        Unit::Kelvin,
    )?;
    let points = raw.points.ok_or_else(|| err("axis.points", "missing"))?;
    match raw.spacing.as_deref().unwrap_or("log") {
        "log" => SweepAxis::log_spaced(min, max, points).map_err(|e| err("axis", e)),
        other => Err(err("axis.spacing", format!("unknown spacing {other:?}"))),
    }
}

fn parse_json(text: &str) -> Result<serde_json::Value, ConfigError> {
    serde_json::from_str(text).map_err(|e| err("(json)", e))
}

fn from_value<T: serde::de::DeserializeOwned>(value: serde_json::Value) -> Result<T, ConfigError> {
    serde_json::from_value(value).map_err(|e| err("(schema)", e))
}

/// Load a scenario config; a manifest file (with a top-level "scenario"
/// object) replays as the run it describes.
pub fn load_scenario(text: &str, constants: &PhysicalConstants) -> Result<Scenario, ConfigError> {
    let value = parse_json(text)?;
    let inner = match serde_json::from_value::<MaybeWrapped>(value.clone()) {
        Ok(MaybeWrapped {
            scenario: Some(inner),
            ..
        }) => inner,
        _ => value,
    };
    resolve_scenario(from_value(inner)?, constants)
}

/// Load a sweep config ({"scenario": …, "axis": …}); a sweep manifest
/// (top-level "sweep") replays the same way.
pub fn load_sweep(
    text: &str,
    constants: &PhysicalConstants,
) -> Result<(Scenario, SweepAxis), ConfigError> {
    let value = parse_json(text)?;
    let inner = match serde_json::from_value::<MaybeWrapped>(value.clone()) {
        Ok(MaybeWrapped {
            sweep: Some(inner), ..
        }) => inner,
        _ => value,
    };
    let raw: RawSweep = from_value(inner)?;
    let scenario = resolve_scenario(raw.scenario, constants)?;
    let axis = resolve_axis(raw.axis)?;
    Ok((scenario, axis))
}

/// Re-encode a resolved scenario in the config-file schema (SI base units),
/// for embedding in manifests.
pub fn scenario_to_config_json(s: &Scenario) -> serde_json::Value {
    serde_json::json!({
        "cloud": {
            "temperature": format!("{}K", s.cloud.temperature),
            "rms_radius": format!("{}m", s.cloud.rms_radius),
            "center": format!("{}m", s.cloud.center),
            "count": s.cloud.count,
        },
        "potential": {
            // The raw U′ replays bit-exactly; a gradient string would lose
            // a ulp in the divide/multiply round trip.
            "u_prime_si": s.potential.u_prime,
            "barrier_height": format!("{}J", s.potential.barrier_height),
            "barrier_center": format!("{}m", s.potential.barrier_center),
            "barrier_waist": format!("{}m", s.potential.barrier_waist),
            "trap_offset": format!("{}m", s.potential.trap_offset),
        },
        "hold_time": format!("{}s", s.hold_time),
        "separation_time": format!("{}s", s.separation_time),
        "tof_times": s.tof_times.iter().map(|t| format!("{t}s")).collect::<Vec<_>>(),
        "integrator": {
            "dt": format!("{}s", s.integrator.dt),
            "record_stride": s.integrator.record_stride,
        },
        "seed": s.seed,
    })
}
