//! Scenario orchestration: end-to-end selection runs mirroring the lab
//! protocol (capture → hold → switch off → separation flight → efficiency
//! count → time-of-flight thermometry), and barrier-height sweeps with
//! matching no-free-parameter theory columns.

use std::io::Write;

use crate::ensemble::{
    classify, free_expansion, integrate_recording, oscillation_count, sample_cloud, AtomEnsemble,
    IntegratorConfig, Tag,
};
use crate::error::{Error, Result};
use crate::observables::{
    density_profile, fit_temperature_tof, measure_efficiency, pseudo_temperature,
    pseudo_temperature_virial, BinSpec, DensityProfile,
};
use crate::physics::{PhysicalConstants, K_B};
use crate::potential::{find_well_geometry, PotentialConfig, WellGeometry};
use crate::svg::{LinePlot, Series, SeriesKind, PALETTE};
use crate::theory::{self, CloudSpec};

/// At most this many trapped atoms are recorded for oscillation counting
/// and the virialized pseudo-temperature; more adds memory, not accuracy.
const MAX_RECORDED_ATOMS: usize = 2000;

/// One end-to-end selection experiment.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Scenario {
    pub cloud: CloudSpec,
    pub potential: PotentialConfig,
    /// Time the atoms evolve in the switched-on potential (s).
    pub hold_time: f64,
    /// Free flight before the selected/unselected count (s).
    pub separation_time: f64,
    /// Flight times for the TOF temperature series (s), at least two.
    pub tof_times: Vec<f64>,
    /// Time step and snapshot stride; `t_total` is overridden by
    /// `hold_time` when the scenario runs.
    pub integrator: IntegratorConfig,
    pub seed: u64,
}

impl Scenario {
    /// Protocol defaults: 10⁵ atoms, 20 ms hold, 1 μs step, 0.5 ms
    /// separation, TOF series 5–20 ms.
    pub fn with_defaults(cloud: CloudSpec, potential: PotentialConfig, seed: u64) -> Scenario {
        Scenario {
            cloud,
            potential,
            hold_time: 20e-3,
            separation_time: 0.5e-3,
            tof_times: vec![5e-3, 10e-3, 15e-3, 20e-3],
            integrator: IntegratorConfig {
                dt: 1e-6,
                t_total: 20e-3,
                record_stride: 100,
            },
            seed,
        }
    }

    /// Weak-gradient benchmark cloud: 26 μK, 160 μm rms, 3 G/cm (β ≈ 0.25),
    /// barrier at the cloud center.
    pub fn low_beta(seed: u64) -> Scenario {
        let constants = PhysicalConstants::rb85();
        let cloud = CloudSpec {
            temperature: 26e-6,
            rms_radius: 160e-6,
            center: 0.0,
            count: 100_000,
        };
        let potential = PotentialConfig {
            u_prime: constants.gradient_energy_per_length(0.03).unwrap(),
            barrier_height: 8e-6 * K_B,
            barrier_center: 0.0,
            barrier_waist: 6e-6,
            trap_offset: 2e-3,
        };
        Scenario::with_defaults(cloud, potential, seed)
    }

    /// Strong-gradient benchmark cloud: 26 μK, 400 μm rms, 8 G/cm (β ≈ 1.65),
    /// barrier at the cloud center.
    pub fn high_beta(seed: u64) -> Scenario {
        let constants = PhysicalConstants::rb85();
        let cloud = CloudSpec {
            temperature: 26e-6,
            rms_radius: 400e-6,
            center: 0.0,
            count: 100_000,
        };
        let potential = PotentialConfig {
            u_prime: constants.gradient_energy_per_length(0.08).unwrap(),
            barrier_height: 6e-6 * K_B,
            barrier_center: 0.0,
            barrier_waist: 6e-6,
            trap_offset: 2e-3,
        };
        Scenario::with_defaults(cloud, potential, seed)
    }

    pub fn validate(&self) -> Result<()> {
        self.cloud.validate()?;
        self.potential.validate()?;
        if self.hold_time < 0.0 || self.separation_time < 0.0 {
            return Err(Error::InvalidConfig("times must be >= 0".into()));
        }
        if self.tof_times.len() < 2 {
            return Err(Error::InvalidConfig(
                "need at least two TOF times for thermometry".into(),
            ));
        }
        if self.tof_times.iter().any(|t| *t < 0.0) {
            return Err(Error::InvalidConfig("TOF times must be >= 0".into()));
        }
        if self.potential.u_prime <= 0.0 {
            return Err(Error::InvalidConfig(
                "the selection protocol needs U' > 0 so escaped atoms separate \
                 from the well"
                    .into(),
            ));
        }
        IntegratorConfig {
            t_total: self.hold_time,
            ..self.integrator
        }
        .validate()
    }
}

/// Per-run atom bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct SelectionCounts {
    pub total: usize,
    pub trapped: usize,
    pub escaped: usize,
    /// Atoms inside the measurement window at the efficiency count.
    pub in_window: usize,
}

/// Everything measured in one selection run.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SelectionResult {
    /// Window-protocol efficiency (counted 0.5 ms after switch-off).
    pub efficiency_measured: f64,
    /// Analytic trapped fraction from the classifier.
    pub efficiency_classified: f64,
    /// TOF Boltzmann-fit temperature of the selected cloud (K).
    pub t_fit: f64,
    pub t_fit_residual: f64,
    /// Pseudo-temperature 2⟨KE⟩/k_B of the selected cloud at release (K).
    pub t_s_mean_ke: f64,
    /// Standard error of t_s_mean_ke (K).
    pub t_s_std_err: f64,
    /// Hold-averaged (virialized) pseudo-temperature (K).
    pub t_s_virial: f64,
    /// Selected-atom fraction with |v| > 1.1·v_m at release.
    pub v_cutoff_fraction: f64,
    pub geometry: WellGeometry,
    pub beta: f64,
    pub mean_oscillations: f64,
    pub counts: SelectionCounts,
}

fn trapped_subset(ens: &AtomEnsemble) -> AtomEnsemble {
    let idx = ens.indices_with_tag(Tag::Trapped);
    AtomEnsemble {
        positions: idx.iter().map(|&i| ens.positions[i]).collect(),
        velocities: idx.iter().map(|&i| ens.velocities[i]).collect(),
        tags: vec![Tag::Trapped; idx.len()],
        seed: ens.seed,
        time: ens.time,
    }
}

fn mean_and_rms(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Phase-space snapshots along the protocol, for profile export.
#[derive(Debug, Clone)]
pub struct SelectionEnsembles {
    /// Classified cloud at t = 0.
    pub initial: AtomEnsemble,
    /// Full ensemble at the end of the hold, fields just switched off.
    pub released: AtomEnsemble,
    /// Full ensemble after the separation flight.
    pub separated: AtomEnsemble,
}

/// Run the full protocol: sample → classify → hold in the potential →
/// switch off → separation flight → window efficiency → TOF series →
/// temperature fits. Deterministic for a fixed seed.
pub fn run_selection(
    scenario: &Scenario,
    constants: &PhysicalConstants,
) -> Result<SelectionResult> {
    run_selection_detailed(scenario, constants).map(|(result, _)| result)
}

/// [`run_selection`] returning the intermediate ensembles as well.
pub fn run_selection_detailed(
    scenario: &Scenario,
    constants: &PhysicalConstants,
) -> Result<(SelectionResult, SelectionEnsembles)> {
    scenario.validate()?;
    let cfg = &scenario.potential;
    let geom = find_well_geometry(cfg, constants);
    if !geom.exists {
        return Err(Error::WellDoesNotExist);
    }
    let beta = theory::beta(cfg, &scenario.cloud, constants);

    let ens = sample_cloud(&scenario.cloud, scenario.seed, constants)?;
    let ens = classify(ens, cfg, &geom, constants)?;
    let trapped_idx = ens.indices_with_tag(Tag::Trapped);
    let trapped_count = trapped_idx.len();
    let total = ens.len();
    let initial = ens.clone();

    let record_subset: Vec<usize> = trapped_idx
        .iter()
        .copied()
        .take(MAX_RECORDED_ATOMS)
        .collect();
    let icfg = IntegratorConfig {
        t_total: scenario.hold_time,
        ..scenario.integrator
    };
    let (held, record) = integrate_recording(ens, cfg, &icfg, constants, &record_subset)?;

    let mean_oscillations = if record_subset.is_empty() {
        0.0
    } else {
        oscillation_count(&record, geom.z_min)?
    };
    let t_s_virial = if record_subset.is_empty() {
        0.0
    } else {
        pseudo_temperature_virial(&record, constants)?
    };

    // Fields off: separation flight and the selected/unselected count.
    let separated = free_expansion(held.clone(), scenario.separation_time)?;
    let efficiency_measured =
        measure_efficiency(&separated, cfg, &geom, scenario.separation_time, constants)?;
    let in_window = (efficiency_measured * total as f64).round() as usize;

    // Selected-cloud thermometry from the moment of release.
    let selected = trapped_subset(&held);
    let (t_s_mean_ke, t_s_std_err, v_cutoff_fraction, t_fit, t_fit_residual) =
        if selected.is_empty() {
            (0.0, 0.0, 0.0, 0.0, 0.0)
        } else {
            let t_s = pseudo_temperature(&selected, constants)?;
            let kes: Vec<f64> = selected
                .velocities
                .iter()
                .map(|v| 0.5 * constants.mass * v * v)
                .collect();
            let (_, ke_rms) = mean_and_rms(&kes);
            let std_err = 2.0 * ke_rms / (constants.k_b * (kes.len() as f64).sqrt());
            let cutoff = selected
                .velocities
                .iter()
                .filter(|v| v.abs() > 1.1 * geom.v_m)
                .count() as f64
                / selected.len() as f64;

            let (z_mean, z_rms) = mean_and_rms(&selected.positions);
            let (_, v_rms) = mean_and_rms(&selected.velocities);
            let mut profiles: Vec<(f64, DensityProfile)> = Vec::new();
            for &t in &scenario.tof_times {
                let expanded = free_expansion(selected.clone(), t)?;
                let width = (z_rms * z_rms + v_rms * v_rms * t * t).sqrt();
                let spec = BinSpec::spanning(z_mean, width.max(1e-9));
                profiles.push((t, density_profile(&expanded.positions, &spec)?));
            }
            let fit = fit_temperature_tof(&profiles, z_rms, constants)?;
            (t_s, std_err, cutoff, fit.temperature, fit.residual_rms)
        };

    let result = SelectionResult {
        efficiency_measured,
        efficiency_classified: trapped_count as f64 / total as f64,
        t_fit,
        t_fit_residual,
        t_s_mean_ke,
        t_s_std_err,
        t_s_virial,
        v_cutoff_fraction,
        geometry: geom,
        beta,
        mean_oscillations,
        counts: SelectionCounts {
            total,
            trapped: trapped_count,
            escaped: total - trapped_count,
            in_window,
        },
    };
    Ok((
        result,
        SelectionEnsembles {
            initial,
            released: held,
            separated,
        },
    ))
}

/// Barrier-height axis for a sweep, in kelvin, strictly increasing.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SweepAxis {
    pub barrier_heights_k: Vec<f64>,
}

impl SweepAxis {
    pub fn log_spaced(min_k: f64, max_k: f64, points: usize) -> Result<SweepAxis> {
        if !(min_k > 0.0 && max_k > min_k) {
            return Err(Error::InvalidAxis(format!(
                "need 0 < min < max, got [{min_k}, {max_k}]"
            )));
        }
        if points < 4 {
            return Err(Error::InvalidAxis(format!(
                "need at least 4 axis points, got {points}"
            )));
        }
        let ratio = (max_k / min_k).ln() / (points - 1) as f64;
        Ok(SweepAxis {
            barrier_heights_k: (0..points)
                .map(|i| min_k * (ratio * i as f64).exp())
                .collect(),
        })
    }

    pub fn from_values(values: Vec<f64>) -> Result<SweepAxis> {
        if values.len() < 4 {
            return Err(Error::InvalidAxis(format!(
                "need at least 4 axis points, got {}",
                values.len()
            )));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) || values[0] <= 0.0 {
            return Err(Error::InvalidAxis(
                "axis must be strictly increasing and positive".into(),
            ));
        }
        Ok(SweepAxis {
            barrier_heights_k: values,
        })
    }

    /// Default low-β axis: U₀/k_B spanning 0.5–30 μK.
    pub fn default_low_beta() -> SweepAxis {
        SweepAxis::log_spaced(0.5e-6, 30e-6, 16).unwrap()
    }

    /// Default high-β axis: U₀/k_B spanning 2–60 μK.
    pub fn default_high_beta() -> SweepAxis {
        SweepAxis::log_spaced(2e-6, 60e-6, 16).unwrap()
    }
}

/// One sweep point: simulation measurements next to the theory columns.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SweepRow {
    pub barrier_k: f64,
    pub u0_k: f64,
    pub beta: f64,
    /// Trapped-phase-space quadrature efficiency.
    pub eta_theory: f64,
    /// Classifier trapped fraction at the configured atom count.
    pub eta_mc: f64,
    /// Binomial standard deviation of eta_mc at the theory rate.
    pub eta_mc_sigma: f64,
    pub ts_theory_low_k: f64,
    pub ts_theory_high_k: f64,
    /// Measured pseudo-temperature at release (K).
    pub ts_mc_k: f64,
    pub ts_mc_err_k: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SweepTable {
    pub figure: u8,
    pub seed: u64,
    pub atoms: usize,
    pub rows: Vec<SweepRow>,
}

fn run_sweep(base: &Scenario, axis: &SweepAxis, constants: &PhysicalConstants, figure: u8) -> Result<SweepTable> {
    let mut rows = Vec::with_capacity(axis.barrier_heights_k.len());
    for &barrier_k in &axis.barrier_heights_k {
        let scenario = Scenario {
            potential: PotentialConfig {
                barrier_height: barrier_k * K_B,
                ..base.potential
            },
            ..base.clone()
        };
        let result = run_selection(&scenario, constants)?;
        let geom = result.geometry;
        let quad = theory::efficiency_quadrature(&scenario.potential, &geom, &scenario.cloud, constants)?;
        let eta_theory = quad.efficiency;
        let n = scenario.cloud.count as f64;
        rows.push(SweepRow {
            barrier_k,
            u0_k: geom.u0 / K_B,
            beta: result.beta,
            eta_theory,
            eta_mc: result.efficiency_classified,
            eta_mc_sigma: (eta_theory * (1.0 - eta_theory) / n).sqrt(),
            ts_theory_low_k: theory::pseudo_temperature_lowgrad(geom.u0),
            ts_theory_high_k: theory::pseudo_temperature_highgrad(geom.u0),
            ts_mc_k: result.t_s_mean_ke,
            ts_mc_err_k: result.t_s_std_err,
        });
    }
    Ok(SweepTable {
        figure,
        seed: base.seed,
        atoms: base.cloud.count,
        rows,
    })
}

/// Selected temperature versus barrier height (with both closed-form
/// pseudo-temperature predictions per point).
pub fn sweep_fig3(base: &Scenario, axis: &SweepAxis, constants: &PhysicalConstants) -> Result<SweepTable> {
    if axis.barrier_heights_k.len() < 4 {
        return Err(Error::InvalidAxis("need at least 4 points".into()));
    }
    run_sweep(base, axis, constants, 3)
}

/// Selection efficiency versus well depth. The axis must span at least a
/// decade so the scaling exponent is meaningful.
pub fn sweep_fig4(base: &Scenario, axis: &SweepAxis, constants: &PhysicalConstants) -> Result<SweepTable> {
    let values = &axis.barrier_heights_k;
    if values.len() < 4 {
        return Err(Error::InvalidAxis("need at least 4 points".into()));
    }
    if values[values.len() - 1] / values[0] < 10.0 {
        return Err(Error::InvalidAxis(
            "axis must span at least a decade of barrier heights".into(),
        ));
    }
    run_sweep(base, axis, constants, 4)
}

fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Which efficiency column an exponent fit reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtaColumn {
    Theory,
    MonteCarlo,
}

impl SweepTable {
    /// Slope of the measured T_s against U₀ over the `k` lowest-depth rows,
    /// constrained through the origin (no well, no energy).
    pub fn ts_slope_lowest(&self, k: usize) -> Option<f64> {
        if self.rows.len() < k || k == 0 {
            return None;
        }
        let mut rows: Vec<&SweepRow> = self.rows.iter().collect();
        rows.sort_by(|a, b| a.u0_k.total_cmp(&b.u0_k));
        let (num, den) = rows[..k].iter().fold((0.0, 0.0), |(num, den), r| {
            (num + r.u0_k * r.ts_mc_k, den + r.u0_k * r.u0_k)
        });
        Some(num / den)
    }

    /// Log-log slope of efficiency against U₀ over rows with U₀/k_B inside
    /// `[u0_lo_k, u0_hi_k]`. Needs at least two rows with positive η.
    pub fn loglog_eta_exponent(
        &self,
        u0_lo_k: f64,
        u0_hi_k: f64,
        column: EtaColumn,
    ) -> Option<f64> {
        let points: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.u0_k >= u0_lo_k && r.u0_k <= u0_hi_k)
            .filter_map(|r| {
                let eta = match column {
                    EtaColumn::Theory => r.eta_theory,
                    EtaColumn::MonteCarlo => r.eta_mc,
                };
                (eta > 0.0).then(|| (r.u0_k.ln(), eta.ln()))
            })
            .collect();
        (points.len() >= 2).then(|| fit_slope(&points))
    }

    /// Whole-axis log-log exponent of the theory efficiency.
    pub fn loglog_eta_exponent_full(&self, column: EtaColumn) -> Option<f64> {
        self.loglog_eta_exponent(0.0, f64::INFINITY, column)
    }

    /// CSV in the documented column order; one metadata comment line, then
    /// the header. Byte-stable for fixed inputs.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(
            w,
            "# velsel sweep figure={} seed={} atoms={}",
            self.figure, self.seed, self.atoms
        )?;
        writeln!(
            w,
            "barrier_K,u0_K,beta,eta_theory,eta_mc,eta_mc_sigma,ts_theory_low_K,ts_theory_high_K,ts_mc_K,ts_mc_err_K"
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                r.barrier_k,
                r.u0_k,
                r.beta,
                r.eta_theory,
                r.eta_mc,
                r.eta_mc_sigma,
                r.ts_theory_low_k,
                r.ts_theory_high_k,
                r.ts_mc_k,
                r.ts_mc_err_k
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("CSV is ASCII")
    }

    /// Figure-3 analog (temperature vs depth) or figure-4 analog
    /// (efficiency vs depth, log-log), theory curve plus MC points.
    pub fn to_svg(&self) -> String {
        let uk = 1e6;
        match self.figure {
            3 => LinePlot {
                title: format!("Selected temperature vs well depth (seed {})", self.seed),
                x_label: "U0/kB (uK)".into(),
                y_label: "T_s (uK)".into(),
                log_x: false,
                log_y: false,
                series: vec![
                    Series {
                        label: "2U0/3kB (low gradient)".into(),
                        points: self
                            .rows
                            .iter()
                            .map(|r| (r.u0_k * uk, r.ts_theory_low_k * uk))
                            .collect(),
                        y_err: None,
                        kind: SeriesKind::Line,
                        color: PALETTE[0],
                    },
                    Series {
                        label: "U0/2kB (high gradient)".into(),
                        points: self
                            .rows
                            .iter()
                            .map(|r| (r.u0_k * uk, r.ts_theory_high_k * uk))
                            .collect(),
                        y_err: None,
                        kind: SeriesKind::Line,
                        color: PALETTE[2],
                    },
                    Series {
                        label: "simulation".into(),
                        points: self
                            .rows
                            .iter()
                            .map(|r| (r.u0_k * uk, r.ts_mc_k * uk))
                            .collect(),
                        y_err: Some(self.rows.iter().map(|r| r.ts_mc_err_k * uk).collect()),
                        kind: SeriesKind::Points,
                        color: PALETTE[1],
                    },
                ],
            }
            .render(),
            _ => LinePlot {
                title: format!("Selection efficiency vs well depth (seed {})", self.seed),
                x_label: "U0/kB (uK)".into(),
                y_label: "efficiency".into(),
                log_x: true,
                log_y: true,
                series: vec![
                    Series {
                        label: "phase-space quadrature".into(),
                        points: self
                            .rows
                            .iter()
                            .map(|r| (r.u0_k * uk, r.eta_theory))
                            .collect(),
                        y_err: None,
                        kind: SeriesKind::Line,
                        color: PALETTE[0],
                    },
                    Series {
                        label: "simulation".into(),
                        points: self.rows.iter().map(|r| (r.u0_k * uk, r.eta_mc)).collect(),
                        y_err: Some(self.rows.iter().map(|r| 3.0 * r.eta_mc_sigma).collect()),
                        kind: SeriesKind::Points,
                        color: PALETTE[1],
                    },
                ],
            }
            .render(),
        }
    }
}
