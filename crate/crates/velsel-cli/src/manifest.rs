//! Run manifests: every output directory gets a `manifest.json` holding the
//! resolved inputs, seed, tool version, and constants fingerprint, enough to
//! reproduce the outputs byte-for-byte (`velsel simulate manifest.json` or
//! `velsel sweep manifest.json` replay it).

use std::path::Path;

use velsel::experiments::{Scenario, SweepAxis};
use velsel::physics::PhysicalConstants;

use crate::config::scenario_to_config_json;

pub fn simulate_manifest(
    input_path: &str,
    scenario: &Scenario,
    constants: &PhysicalConstants,
    outputs: &[&str],
) -> serde_json::Value {
    serde_json::json!({
        "tool": "velsel",
        "version": env!("CARGO_PKG_VERSION"),
        "command": "simulate",
        "input_config": input_path,
        "seed": scenario.seed,
        "constants": constants,
        "constants_fingerprint": constants.fingerprint(),
        "scenario": scenario_to_config_json(scenario),
        "outputs": outputs,
    })
}

pub fn sweep_manifest(
    input_path: &str,
    figure: u8,
    scenario: &Scenario,
    axis: &SweepAxis,
    constants: &PhysicalConstants,
    outputs: &[&str],
) -> serde_json::Value {
    serde_json::json!({
        "tool": "velsel",
        "version": env!("CARGO_PKG_VERSION"),
        "command": "sweep",
        "figure": figure,
        "input_config": input_path,
        "seed": scenario.seed,
        "constants": constants,
        "constants_fingerprint": constants.fingerprint(),
        "sweep": {
            "scenario": scenario_to_config_json(scenario),
            "axis": {
                "values": axis.barrier_heights_k.iter().map(|k| format!("{k}K")).collect::<Vec<_>>(),
            },
        },
        "outputs": outputs,
    })
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    std::fs::write(path, text)
}
