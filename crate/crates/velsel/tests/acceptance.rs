//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured values (run with `--nocapture` to see them).
//!
//! The two barrier-height sweeps are computed once and shared between the
//! criteria that read them.

use std::sync::OnceLock;

use velsel::ensemble::{
    classify, integrate, sample_cloud, stayed_in_interval, AtomEnsemble,
    IntegratorConfig, Tag,
};
use velsel::experiments::{
    run_selection, sweep_fig3, sweep_fig4, EtaColumn, Scenario, SelectionResult, SweepAxis,
    SweepTable,
};
use velsel::observables::{deconvolve_velocity, density_profile, BinSpec};
use velsel::physics::{PhysicalConstants, K_B};
use velsel::potential::{capture_bounds, find_well_geometry, PotentialConfig};
use velsel::theory::{self, CloudSpec};

fn constants() -> PhysicalConstants {
    PhysicalConstants::rb85()
}

/// Atom count for the shared acceptance sweeps. Statistics at this size
/// resolve every asserted band; the CLI default of 10⁵ per point would not
/// change any verdict, only the runtime.
const SWEEP_ATOMS: usize = 40_000;
const SWEEP_SEED: u64 = 42;

fn low_beta_sweep() -> &'static SweepTable {
    static TABLE: OnceLock<SweepTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut base = Scenario::low_beta(SWEEP_SEED);
        base.cloud.count = SWEEP_ATOMS;
        sweep_fig4(&base, &SweepAxis::default_low_beta(), &constants()).unwrap()
    })
}

fn high_beta_sweep() -> &'static SweepTable {
    static TABLE: OnceLock<SweepTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut base = Scenario::high_beta(SWEEP_SEED);
        base.cloud.count = 25_000;
        sweep_fig4(&base, &SweepAxis::default_high_beta(), &constants()).unwrap()
    })
}

/// The headline cold-selection scenario: β ≈ 1.7 defaults with the barrier
/// height tuned (held fixed here) so the measured pseudo-temperature lands
/// at 750 nK from a 26 μK cloud.
fn headline() -> &'static (Scenario, SelectionResult) {
    static RESULT: OnceLock<(Scenario, SelectionResult)> = OnceLock::new();
    RESULT.get_or_init(|| {
        let mut s = Scenario::high_beta(42);
        s.cloud.count = 100_000;
        s.potential.barrier_height = 2.3271e-6 * K_B;
        let r = run_selection(&s, &constants()).unwrap();
        (s, r)
    })
}

#[test]
fn criterion_01_unit_cross_checks() {
    let c = constants();
    let u8gcm = c.gradient_energy_per_length(0.08).unwrap();
    let du_high = u8gcm * 800e-6 / K_B * 1e6;
    assert!(
        (42.0..=44.0).contains(&du_high),
        "8 G/cm across 800 um gave {du_high} uK"
    );
    let u3gcm = c.gradient_energy_per_length(0.03).unwrap();
    let du_low = u3gcm * 320e-6 / K_B * 1e6;
    assert!(
        (6.0..=6.7).contains(&du_low),
        "3 G/cm across 320 um gave {du_low} uK"
    );
    println!("criterion 01 PASS: 8 G/cm x 800 um = {du_high:.2} uK, 3 G/cm x 320 um = {du_low:.2} uK");
}

#[test]
fn criterion_02_headline_efficiency_formula() {
    let eta = theory::efficiency_from_ts(1.0 / 200.0, 1.0).unwrap();
    assert!(
        (eta - 0.0977).abs() <= 1e-4,
        "efficiency at T_s/T = 1/200 gave {eta}"
    );
    println!("criterion 02 PASS: eta(T_s/T = 1/200) = {eta:.6}, 200x cooling retains ~10%");
}

#[test]
fn criterion_03_quadrature_reduces_to_closed_form() {
    // As U' -> 0 with the cloud fully uphill of the barrier, the general
    // quadrature must reproduce the truncated-Gaussian closed form.
    let c = constants();
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        let barrier_uk = 0.5 * (20.0f64 / 0.5).powf(i as f64 / 9.0);
        let cfg = PotentialConfig {
            u_prime: c.gradient_energy_per_length(1e-8).unwrap(),
            barrier_height: barrier_uk * 1e-6 * K_B,
            barrier_center: 0.0,
            barrier_waist: 6e-6,
            trap_offset: 2e-3,
        };
        let geom = find_well_geometry(&cfg, &c);
        assert!(geom.exists);
        let cloud = CloudSpec {
            temperature: 26e-6,
            rms_radius: 50e-6,
            center: 250e-6,
            count: 1,
        };
        let q = theory::efficiency_quadrature(&cfg, &geom, &cloud, &c).unwrap();
        let closed = theory::efficiency_lowgrad(geom.u0, cloud.temperature);
        let rel = ((q.efficiency - closed) / closed).abs();
        worst = worst.max(rel);
        assert!(
            rel <= 1e-4,
            "barrier {barrier_uk} uK: quadrature {} vs erf {} (rel {rel})",
            q.efficiency,
            closed
        );
    }
    println!("criterion 03 PASS: quadrature vs erf closed form, worst relative {worst:.2e} over 10 heights");
}

#[test]
fn criterion_04_monte_carlo_matches_quadrature() {
    let c = constants();
    let temperature = 26e-6;
    let n = 100_000usize;
    let mut worst_pull: f64 = 0.0;
    for (beta, r, barriers_uk) in [
        (0.05, 160e-6, [1.0, 3.0, 8.0, 20.0]),
        (0.23, 160e-6, [1.0, 3.0, 8.0, 20.0]),
        (1.7, 400e-6, [2.0, 5.0, 12.0, 30.0]),
    ] {
        let u_prime = beta * c.k_b * temperature / (2.0 * r);
        for barrier_uk in barriers_uk {
            let cfg = PotentialConfig {
                u_prime,
                barrier_height: barrier_uk * 1e-6 * K_B,
                barrier_center: 0.0,
                barrier_waist: 6e-6,
                trap_offset: 2e-3,
            };
            let geom = find_well_geometry(&cfg, &c);
            assert!(geom.exists, "beta {beta}, barrier {barrier_uk} uK");
            let cloud = CloudSpec {
                temperature,
                rms_radius: r,
                center: 0.0,
                count: n,
            };
            let ens = classify(sample_cloud(&cloud, 7, &c).unwrap(), &cfg, &geom, &c).unwrap();
            let eta_mc = ens.count_tag(Tag::Trapped) as f64 / n as f64;
            let eta_th = theory::efficiency_quadrature(&cfg, &geom, &cloud, &c)
                .unwrap()
                .efficiency;
            let sigma = (eta_th * (1.0 - eta_th) / n as f64).sqrt();
            let pull = (eta_mc - eta_th).abs() / sigma;
            worst_pull = worst_pull.max(pull);
            assert!(
                pull <= 3.0,
                "beta {beta}, barrier {barrier_uk} uK: mc {eta_mc} vs theory {eta_th} ({pull:.2} sigma)"
            );
        }
    }
    println!(
        "criterion 04 PASS: 12 configs (beta 0.05/0.23/1.7 x 4 heights) at N=1e5, worst |mc-theory| = {worst_pull:.2} sigma"
    );
}

#[test]
fn criterion_05_temperature_slope_vs_depth() {
    let low = low_beta_sweep().ts_slope_lowest(4).unwrap();
    let high = high_beta_sweep().ts_slope_lowest(4).unwrap();
    assert!(
        (0.25..=0.45).contains(&low),
        "low-beta slope {low} outside [0.25, 0.45]"
    );
    assert!(
        (0.25..=0.45).contains(&high),
        "high-beta slope {high} outside [0.25, 0.45]"
    );
    println!(
        "criterion 05 PASS: k_B T_s/U0 slope over 4 lowest points: beta~0.25 -> {low:.3}, beta~1.65 -> {high:.3}"
    );
}

#[test]
fn criterion_06_efficiency_scaling_exponents() {
    let table = low_beta_sweep();
    let base = Scenario::low_beta(SWEEP_SEED);
    let two_u_prime_r = 2.0 * base.potential.u_prime * base.cloud.rms_radius / K_B;
    let kbt = base.cloud.temperature;

    // Gradient-energy spread << U0 << thermal energy: square-root scaling.
    let sqrt_lo = two_u_prime_r;
    let sqrt_hi = 0.77 * kbt;
    let sqrt_th = table
        .loglog_eta_exponent(sqrt_lo, sqrt_hi, EtaColumn::Theory)
        .unwrap();
    let sqrt_mc = table
        .loglog_eta_exponent(sqrt_lo, sqrt_hi, EtaColumn::MonteCarlo)
        .unwrap();
    for (name, exp) in [("theory", sqrt_th), ("mc", sqrt_mc)] {
        assert!(
            (0.4..=0.6).contains(&exp),
            "sqrt-window exponent ({name}) = {exp}"
        );
    }

    // U0 << gradient-energy spread: the steep 3/2-power side.
    let steep_th = table
        .loglog_eta_exponent(0.0, two_u_prime_r / 3.0, EtaColumn::Theory)
        .unwrap();
    let steep_mc = table
        .loglog_eta_exponent(0.0, two_u_prime_r / 3.0, EtaColumn::MonteCarlo)
        .unwrap();
    for (name, exp) in [("theory", steep_th), ("mc", steep_mc)] {
        assert!(exp >= 1.2, "steep-window exponent ({name}) = {exp}");
    }
    println!(
        "criterion 06 PASS: sqrt window [{:.1}, {:.1}] uK exponents {sqrt_th:.3}/{sqrt_mc:.3} (theory/mc); \
         steep window [0, {:.1}] uK exponents {steep_th:.3}/{steep_mc:.3}",
        sqrt_lo * 1e6,
        sqrt_hi * 1e6,
        two_u_prime_r / 3.0 * 1e6
    );
}

#[test]
fn criterion_07_sharp_velocity_cutoff() {
    let c = constants();
    let cloud = CloudSpec {
        temperature: 26e-6,
        rms_radius: 400e-6,
        center: 0.0,
        count: 1_000_000,
    };
    let cfg = PotentialConfig {
        u_prime: c.gradient_energy_per_length(0.08).unwrap(),
        barrier_height: 2.0e-6 * K_B,
        barrier_center: 0.0,
        barrier_waist: 6e-6,
        trap_offset: 2e-3,
    };
    let geom = find_well_geometry(&cfg, &c);
    let ens = classify(sample_cloud(&cloud, 5, &c).unwrap(), &cfg, &geom, &c).unwrap();

    // (a) No trapped atom carries energy at or above the saddle, by
    // classifier construction.
    let u_top = cfg.potential_energy(geom.z_top);
    let mut trapped = 0usize;
    for i in 0..ens.len() {
        if ens.tags[i] == Tag::Trapped {
            trapped += 1;
            assert!(ens.total_energy(i, &cfg, &c) < u_top);
        }
    }
    assert!(trapped > 1000);

    // (b) The velocity distribution recovered from a 20 ms synthetic TOF by
    // deconvolution keeps >= 99% of its mass inside |v| <= 1.1 v_m.
    let idx = ens.indices_with_tag(Tag::Trapped);
    let z0: Vec<f64> = idx.iter().map(|&i| ens.positions[i]).collect();
    let t = 20e-3;
    let zt: Vec<f64> = idx
        .iter()
        .map(|&i| ens.positions[i] + ens.velocities[i] * t)
        .collect();
    let mean = z0.iter().sum::<f64>() / z0.len() as f64;
    let span = 1.5 * geom.v_m * t + 2.0 * geom.z_m;
    let spec = BinSpec {
        lo: mean - span,
        hi: mean + span,
        bins: 1024,
    };
    let initial = density_profile(&z0, &spec).unwrap();
    let final_p = density_profile(&zt, &spec).unwrap();
    let out = deconvolve_velocity(&final_p, &initial, t, 1e-3).unwrap();
    let within = 1.0 - out.distribution.tail_fraction(1.1 * geom.v_m);
    assert!(within >= 0.99, "mass within 1.1 v_m = {within}");
    println!(
        "criterion 07 PASS: {trapped} trapped atoms all below the saddle energy; \
         deconvolved mass within 1.1 v_m = {:.4}",
        within
    );
}

#[test]
fn criterion_08_oscillation_budget() {
    let (_, result) = headline();
    let n = result.mean_oscillations;
    assert!(
        (2.0..=3.5).contains(&n),
        "mean oscillations {n} outside [2, 3.5]"
    );
    println!("criterion 08 PASS: mean oscillations in 20 ms = {n:.2}");
}

#[test]
fn criterion_09_integrator_energy_drift() {
    // Cold-selection well (1 uK barrier at 3 G/cm), 10^3 trapped atoms,
    // 20 ms at dt = 1 us; drift measured relative to the well depth.
    let c = constants();
    let cfg = PotentialConfig {
        u_prime: c.gradient_energy_per_length(0.03).unwrap(),
        barrier_height: 1e-6 * K_B,
        barrier_center: 0.0,
        barrier_waist: 6e-6,
        trap_offset: 2e-3,
    };
    let geom = find_well_geometry(&cfg, &c);
    let cloud = CloudSpec {
        temperature: 26e-6,
        rms_radius: 160e-6,
        center: 0.0,
        count: 70_000,
    };
    let ens = classify(sample_cloud(&cloud, 11, &c).unwrap(), &cfg, &geom, &c).unwrap();
    let idx: Vec<usize> = ens
        .indices_with_tag(Tag::Trapped)
        .into_iter()
        .take(1000)
        .collect();
    assert_eq!(idx.len(), 1000, "want 10^3 trapped atoms");
    let keep = AtomEnsemble {
        positions: idx.iter().map(|&i| ens.positions[i]).collect(),
        velocities: idx.iter().map(|&i| ens.velocities[i]).collect(),
        tags: vec![Tag::Trapped; idx.len()],
        seed: ens.seed,
        time: 0.0,
    };
    let e0: Vec<f64> = (0..keep.len())
        .map(|i| keep.total_energy(i, &cfg, &c))
        .collect();
    let icfg = IntegratorConfig {
        dt: 1e-6,
        t_total: 20e-3,
        record_stride: 1000,
    };
    let out = integrate(keep, &cfg, &icfg, &c).unwrap();
    let max_drift = (0..out.len())
        .map(|i| (out.total_energy(i, &cfg, &c) - e0[i]).abs() / geom.u0)
        .fold(0.0f64, f64::max);
    assert!(max_drift <= 1e-6, "max relative drift {max_drift}");
    println!("criterion 09 PASS: max per-atom energy drift = {max_drift:.2e} of U0 over 20 ms at dt = 1 us");
}

#[test]
fn criterion_10_classifier_vs_trajectories() {
    // 10^4 atoms, 40 ms of trajectory integration. Integrator-side verdict:
    // the atom never left the capture interval (a final-position-only check
    // misreads escaped atoms re-entering from uphill mid-transit). Atoms
    // within 1e-3 U0 of the saddle energy are excluded.
    let c = constants();
    let s = Scenario::low_beta(13);
    let cfg = s.potential;
    let geom = find_well_geometry(&cfg, &c);
    let interval = capture_bounds(&geom, &cfg).unwrap();
    let cloud = CloudSpec {
        count: 10_000,
        ..s.cloud
    };
    let ens = classify(sample_cloud(&cloud, 13, &c).unwrap(), &cfg, &geom, &c).unwrap();
    let u_top = cfg.potential_energy(geom.z_top);
    let flags: Vec<Option<bool>> = {
        use rayon::prelude::*;
        (0..ens.len())
            .into_par_iter()
            .map(|i| {
                let gap = (ens.total_energy(i, &cfg, &c) - u_top).abs();
                if gap <= 1e-3 * geom.u0 {
                    None
                } else {
                    Some(stayed_in_interval(
                        ens.positions[i],
                        ens.velocities[i],
                        &cfg,
                        interval,
                        1e-6,
                        40_000,
                        &c,
                    ))
                }
            })
            .collect()
    };
    let mut checked = 0usize;
    let mut excluded = 0usize;
    for (i, flag) in flags.iter().enumerate() {
        match flag {
            None => excluded += 1,
            Some(stayed) => {
                checked += 1;
                assert_eq!(
                    ens.tags[i] == Tag::Trapped,
                    *stayed,
                    "atom {i}: tag {:?} vs trajectory",
                    ens.tags[i]
                );
            }
        }
    }
    assert!(checked >= 9_990);
    println!(
        "criterion 10 PASS: classifier/trajectory agreement {checked}/{checked} \
         ({excluded} separatrix-band atoms excluded)"
    );
}

#[test]
fn criterion_11_deterministic_sweeps_across_parallelism() {
    let c = constants();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            let mut base = Scenario::low_beta(99);
            base.cloud.count = 10_000;
            let axis = SweepAxis::from_values(vec![1e-6, 2e-6, 4e-6, 8e-6, 16e-6]).unwrap();
            sweep_fig3(&base, &axis, &c).unwrap().to_csv_string()
        })
    };
    let single_a = run(1);
    let single_b = run(1);
    let multi = run(4);
    assert_eq!(single_a, single_b, "same pool size must be byte-identical");
    assert_eq!(single_a, multi, "thread count must not change the CSV");
    println!(
        "criterion 11 PASS: sweep CSV byte-identical across repeats and 1 vs 4 threads ({} bytes)",
        single_a.len()
    );
}

#[test]
fn criterion_12_headline_cold_selection() {
    let c = constants();
    let (s, r) = headline();
    let ratio = r.t_s_mean_ke / s.cloud.temperature;
    let target = 1.0 / 35.0;
    assert!(
        (ratio - target).abs() <= 0.15 * target,
        "cooling ratio {ratio} vs 1/35 +- 15%"
    );
    // Theory-side efficiency for this pseudo-temperature: between the
    // observed 1% and the sqrt-law bound of 25%.
    let eta_theory = theory::efficiency_from_ts(r.t_s_mean_ke, s.cloud.temperature).unwrap();
    assert!(
        (0.01..=0.25).contains(&eta_theory),
        "theory-side efficiency {eta_theory}"
    );
    // The trapped-phase-space prediction and the simulated fraction are
    // order 1%, like the experiment; flagged here, not asserted.
    let quad = theory::efficiency_quadrature(&s.potential, &r.geometry, &s.cloud, &c).unwrap();
    println!(
        "criterion 12 PASS: T_s = {:.1} nK from 26 uK (ratio 1/{:.1}); \
         sqrt-law efficiency bound {:.3}; quadrature eta {:.4} and simulated eta {:.4} \
         sit at the experiment's ~1% scale (comparison flagged, not asserted)",
        r.t_s_mean_ke * 1e9,
        1.0 / ratio,
        eta_theory,
        quad.efficiency,
        r.efficiency_classified,
    );
}

#[test]
fn selected_atoms_never_leave_capture_interval() {
    // Companion invariant to criterion 10: over the hold, no trapped atom
    // is ever recorded outside the capture interval.
    let c = constants();
    let mut s = Scenario::low_beta(17);
    s.cloud.count = 5_000;
    let geom = find_well_geometry(&s.potential, &c);
    let interval = capture_bounds(&geom, &s.potential).unwrap();
    let ens = classify(sample_cloud(&s.cloud, 17, &c).unwrap(), &s.potential, &geom, &c).unwrap();
    let subset = ens.indices_with_tag(Tag::Trapped);
    let icfg = IntegratorConfig {
        dt: 1e-6,
        t_total: 20e-3,
        record_stride: 100,
    };
    let (_, record) =
        velsel::ensemble::integrate_recording(ens, &s.potential, &icfg, &c, &subset).unwrap();
    for snapshot in &record.positions {
        for &z in snapshot {
            assert!(z > interval.0 && z < interval.1);
        }
    }
}
