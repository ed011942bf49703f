//! `velsel` — 1-D velocity selection of cold atoms from the command line.
//!
//! Subcommands:
//! - `theory`: closed-form predictions (η, T_s in both regimes, β) for
//!   lab-unit inputs.
//! - `simulate`: run one selection scenario from a JSON config; writes a
//!   summary JSON, density-profile CSVs, the potential profile, and a
//!   manifest.
//! - `sweep`: barrier-height sweep (temperature or efficiency figure);
//!   writes the sweep CSV, an SVG plot, and a manifest.
//!
//! Exit codes: 0 success, 2 usage/config error, 3 physically infeasible
//! scenario (no trapping well).

mod config;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use velsel::ensemble::Tag;
use velsel::error::Error as VelselError;
use velsel::experiments::{run_selection_detailed, sweep_fig3, sweep_fig4, SweepTable};
use velsel::observables::{density_profile, BinSpec};
use velsel::physics::{parse_to_si, PhysicalConstants, Unit, K_B};
use velsel::potential::capture_bounds;
use velsel::theory;

#[derive(Parser)]
#[command(
    name = "velsel",
    version,
    about = "1-D velocity selection of laser-cooled atoms: theory and Monte Carlo simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form predictions for lab-unit inputs.
    Theory(TheoryArgs),
    /// Run one selection scenario from a JSON config file.
    Simulate(SimulateArgs),
    /// Run a barrier-height sweep from a JSON config file.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct TheoryArgs {
    /// Initial cloud temperature, e.g. "26uK".
    #[arg(long, visible_alias = "T")]
    temperature: String,
    /// Well depth U0, e.g. "0.13uK" (temperature units via k_B) or "1e-29J".
    #[arg(long, visible_alias = "U0")]
    u0: Option<String>,
    /// Magnetic field gradient, e.g. "8G/cm".
    #[arg(long)]
    gradient: Option<String>,
    /// Cloud rms radius, e.g. "400um".
    #[arg(long, visible_alias = "r")]
    radius: Option<String>,
    /// Also append the printed values as one CSV row to this file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario config (JSON); a manifest.json replays its recorded run.
    config: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's atom count.
    #[arg(long)]
    atoms: Option<usize>,
    /// Output directory (default: $VELSEL_OUT_DIR or ./velsel-out).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep config (JSON with "scenario" and "axis"); a sweep manifest
    /// replays its recorded run.
    config: PathBuf,
    /// Which figure to produce: 3 (temperature vs depth) or 4 (efficiency
    /// vs depth).
    #[arg(long, value_parser = clap::value_parser!(u8).range(3..=4))]
    figure: u8,
    /// Output directory (default: $VELSEL_OUT_DIR or ./velsel-out).
    #[arg(long)]
    out: Option<PathBuf>,
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn config(message: impl std::fmt::Display) -> CliError {
        CliError {
            code: 2,
            message: message.to_string(),
        }
    }

    fn from_velsel(e: VelselError) -> CliError {
        let code = match e {
            VelselError::WellDoesNotExist => 3,
            _ => 2,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError {
            code: 2,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let constants = PhysicalConstants::rb85();
    let result = match cli.command {
        Command::Theory(args) => cmd_theory(args, &constants),
        Command::Simulate(args) => cmd_simulate(args, &constants),
        Command::Sweep(args) => cmd_sweep(args, &constants),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("VELSEL_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("velsel-out"))
}

fn cmd_theory(args: TheoryArgs, constants: &PhysicalConstants) -> Result<(), CliError> {
    let temperature =
        parse_to_si(&args.temperature, Unit::Kelvin).map_err(CliError::from_velsel)?;
    if temperature <= 0.0 {
        return Err(CliError::config("temperature must be > 0"));
    }
    println!("T      = {:.6e} K ({:.3} uK)", temperature, temperature * 1e6);

    let mut row: Vec<(String, f64)> = vec![("T_K".into(), temperature)];

    if let Some(u0_str) = &args.u0 {
        let u0 = parse_to_si(u0_str, Unit::Joule).map_err(CliError::from_velsel)?;
        if u0 < 0.0 {
            return Err(CliError::config("U0 must be >= 0"));
        }
        let eta = theory::efficiency_lowgrad(u0, temperature);
        let eta_approx = theory::efficiency_lowgrad_approx(u0, temperature);
        let ts_low = theory::pseudo_temperature_lowgrad(u0);
        let ts_high = theory::pseudo_temperature_highgrad(u0);
        println!("U0     = {:.6e} J ({:.4} uK k_B)", u0, u0 / K_B * 1e6);
        println!("eta (truncated Gaussian, erf)      = {eta:.6}");
        println!("eta (shallow-barrier sqrt approx)  = {eta_approx:.6}");
        println!(
            "T_s (low gradient,  k_B T_s/2 = U0/3) = {:.6e} K; eta from sqrt(6 T_s / pi T) = {:.6}",
            ts_low,
            theory::efficiency_from_ts(ts_low.min(temperature), temperature)
                .map_err(CliError::from_velsel)?
        );
        println!("T_s (high gradient, k_B T_s/2 = U0/4) = {ts_high:.6e} K");
        row.push(("U0_J".into(), u0));
        row.push(("eta_erf".into(), eta));
        row.push(("eta_sqrt_approx".into(), eta_approx));
        row.push(("ts_low_K".into(), ts_low));
        row.push(("ts_high_K".into(), ts_high));
    }

    if let (Some(gradient), Some(radius)) = (&args.gradient, &args.radius) {
        let b_grad = parse_to_si(gradient, Unit::TeslaPerMeter).map_err(CliError::from_velsel)?;
        let u_prime = constants
            .gradient_energy_per_length(b_grad)
            .map_err(CliError::from_velsel)?;
        let r = parse_to_si(radius, Unit::Meter).map_err(CliError::from_velsel)?;
        let cloud = velsel::theory::CloudSpec {
            temperature,
            rms_radius: r,
            center: 0.0,
            count: 1,
        };
        let cfg = velsel::potential::PotentialConfig {
            u_prime,
            barrier_height: 0.0,
            barrier_center: 0.0,
            barrier_waist: 6e-6,
            trap_offset: 0.0,
        };
        let beta = theory::beta(&cfg, &cloud, constants);
        println!("beta   = 2 U' r / (k_B T) = {beta:.4}");
        row.push(("beta".into(), beta));
    } else if args.gradient.is_some() || args.radius.is_some() {
        return Err(CliError::config(
            "beta needs both --gradient and --radius",
        ));
    }

    if let Some(path) = &args.csv {
        let header: Vec<&str> = row.iter().map(|(k, _)| k.as_str()).collect();
        let values: Vec<String> = row.iter().map(|(_, v)| v.to_string()).collect();
        let mut text = String::new();
        if !path.exists() {
            text.push_str(&header.join(","));
            text.push('\n');
        }
        text.push_str(&values.join(","));
        text.push('\n');
        use std::io::Write;
        std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)?
            .write_all(text.as_bytes())?;
    }
    Ok(())
}

fn write_profile(path: &Path, positions: &[f64], spec: &BinSpec) -> Result<(), CliError> {
    let profile = density_profile(positions, spec).map_err(CliError::from_velsel)?;
    let mut buf = Vec::new();
    profile.write_csv(&mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

fn cmd_simulate(args: SimulateArgs, constants: &PhysicalConstants) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::config(format!("{}: {e}", args.config.display())))?;
    let mut scenario = config::load_scenario(&text, constants).map_err(CliError::config)?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    if let Some(atoms) = args.atoms {
        scenario.cloud.count = atoms;
    }
    scenario.validate().map_err(CliError::from_velsel)?;

    let dir = out_dir(args.out);
    std::fs::create_dir_all(&dir)?;

    let (result, ensembles) =
        run_selection_detailed(&scenario, constants).map_err(CliError::from_velsel)?;

    // Summary JSON.
    let summary = serde_json::json!({
        "scenario": config::scenario_to_config_json(&scenario),
        "result": result,
        "cooling_ratio": if result.t_s_mean_ke > 0.0 {
            Some(scenario.cloud.temperature / result.t_s_mean_ke)
        } else {
            None
        },
    });
    manifest::write_json(&dir.join("summary.json"), &summary)?;

    // Potential profile over the well region (the figure-1 analog).
    {
        let geom = result.geometry;
        let (lo, hi) = capture_bounds(&geom, &scenario.potential).map_err(CliError::from_velsel)?;
        let z0 = lo - 8.0 * scenario.potential.barrier_waist;
        let z1 = hi + 0.1 * (hi - lo);
        let mut text = String::from("z_m,potential_J\n");
        for i in 0..=800 {
            let z = z0 + (z1 - z0) * i as f64 / 800.0;
            text.push_str(&format!("{z},{}\n", scenario.potential.potential_energy(z)));
        }
        std::fs::write(dir.join("potential.csv"), text)?;
    }

    // Density profiles: the initial cloud, everything after the separation
    // flight (the figure-2 analog), and the selected cloud at release.
    let cloud = &scenario.cloud;
    write_profile(
        &dir.join("profile_initial.csv"),
        &ensembles.initial.positions,
        &BinSpec::spanning(cloud.center, cloud.rms_radius),
    )?;
    {
        let p = &ensembles.separated.positions;
        let mean = p.iter().sum::<f64>() / p.len() as f64;
        let rms =
            (p.iter().map(|z| (z - mean) * (z - mean)).sum::<f64>() / p.len() as f64).sqrt();
        write_profile(
            &dir.join("profile_after_separation.csv"),
            p,
            &BinSpec::spanning(mean, rms.max(1e-9)),
        )?;
    }
    {
        let selected: Vec<f64> = ensembles
            .released
            .indices_with_tag(Tag::Trapped)
            .iter()
            .map(|&i| ensembles.released.positions[i])
            .collect();
        if !selected.is_empty() {
            let mean = selected.iter().sum::<f64>() / selected.len() as f64;
            let rms = (selected.iter().map(|z| (z - mean) * (z - mean)).sum::<f64>()
                / selected.len() as f64)
                .sqrt();
            write_profile(
                &dir.join("profile_selected.csv"),
                &selected,
                &BinSpec::spanning(mean, rms.max(1e-9)),
            )?;
        }
    }

    let outputs = [
        "summary.json",
        "potential.csv",
        "profile_initial.csv",
        "profile_after_separation.csv",
        "profile_selected.csv",
    ];
    let manifest = manifest::simulate_manifest(
        &args.config.display().to_string(),
        &scenario,
        constants,
        &outputs,
    );
    manifest::write_json(&dir.join("manifest.json"), &manifest)?;

    println!(
        "selection: eta_measured = {:.5}, eta_classified = {:.5}, T_s = {:.4e} K, T_fit = {:.4e} K",
        result.efficiency_measured,
        result.efficiency_classified,
        result.t_s_mean_ke,
        result.t_fit
    );
    println!("outputs written to {}", dir.display());
    Ok(())
}

fn cmd_sweep(args: SweepArgs, constants: &PhysicalConstants) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::config(format!("{}: {e}", args.config.display())))?;
    let (scenario, axis) = config::load_sweep(&text, constants).map_err(CliError::config)?;

    let dir = out_dir(args.out);
    std::fs::create_dir_all(&dir)?;

    let table: SweepTable = match args.figure {
        3 => sweep_fig3(&scenario, &axis, constants).map_err(CliError::from_velsel)?,
        _ => sweep_fig4(&scenario, &axis, constants).map_err(CliError::from_velsel)?,
    };

    let csv_name = format!("sweep_fig{}.csv", table.figure);
    let svg_name = format!("sweep_fig{}.svg", table.figure);
    std::fs::write(dir.join(&csv_name), table.to_csv_string())?;
    std::fs::write(dir.join(&svg_name), table.to_svg())?;

    let outputs = [csv_name.as_str(), svg_name.as_str()];
    let manifest = manifest::sweep_manifest(
        &args.config.display().to_string(),
        table.figure,
        &scenario,
        &axis,
        constants,
        &outputs,
    );
    manifest::write_json(&dir.join("manifest.json"), &manifest)?;

    if table.figure == 3 {
        if let Some(slope) = table.ts_slope_lowest(4) {
            println!("T_s vs U0 slope over the 4 lowest points: {slope:.4}");
        }
    } else if let Some(exponent) =
        table.loglog_eta_exponent_full(velsel::experiments::EtaColumn::MonteCarlo)
    {
        println!("log-log efficiency exponent over the axis: {exponent:.4}");
    }
    println!("outputs written to {}", dir.display());
    Ok(())
}
