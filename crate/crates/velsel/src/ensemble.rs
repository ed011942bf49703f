//! Phase-space ensembles: thermal-cloud sampling, analytic trapped/escaped
//! classification, velocity-Verlet trajectory integration, and free flight.
//!
//! Atoms are independent (no collisions, no rethermalization). Every
//! operation is deterministic for fixed inputs, regardless of how work is
//! partitioned across threads: randomness is counter-based per atom and all
//! reductions run serially in index order.

use rayon::prelude::*;
use std::io::Write;

use crate::error::{Error, Result};
use crate::physics::PhysicalConstants;
use crate::potential::{PotentialConfig, WellGeometry};
use crate::rng;
use crate::theory::CloudSpec;

/// Classification of one atom relative to the well.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Tag {
    Trapped,
    Escaped,
    Unclassified,
}

impl Tag {
    pub fn label(self) -> &'static str {
        match self {
            Tag::Trapped => "trapped",
            Tag::Escaped => "escaped",
            Tag::Unclassified => "unclassified",
        }
    }
}

/// A cloud of independent atoms in 1-D phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomEnsemble {
    pub positions: Vec<f64>,
    pub velocities: Vec<f64>,
    pub tags: Vec<Tag>,
    /// Seed the ensemble was sampled from.
    pub seed: u64,
    /// Elapsed simulation time (s).
    pub time: f64,
}

impl AtomEnsemble {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Total energy ½mv² + U(z) of atom `i` (J).
    pub fn total_energy(&self, i: usize, cfg: &PotentialConfig, constants: &PhysicalConstants) -> f64 {
        0.5 * constants.mass * self.velocities[i] * self.velocities[i]
            + cfg.potential_energy(self.positions[i])
    }

    pub fn indices_with_tag(&self, tag: Tag) -> Vec<usize> {
        self.tags
            .iter()
            .enumerate()
            .filter(|(_, t)| **t == tag)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn count_tag(&self, tag: Tag) -> usize {
        self.tags.iter().filter(|t| **t == tag).count()
    }

    /// Write the ensemble as CSV with columns `index,z_m,v_mps,tag`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "index,z_m,v_mps,tag")?;
        for i in 0..self.len() {
            writeln!(
                w,
                "{},{},{},{}",
                i,
                self.positions[i],
                self.velocities[i],
                self.tags[i].label()
            )?;
        }
        Ok(())
    }
}

/// Time-stepping parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct IntegratorConfig {
    /// Time step (s), > 0.
    pub dt: f64,
    /// Total integration time (s), ≥ 0; rounded to a whole number of steps.
    pub t_total: f64,
    /// Steps per recorded snapshot, ≥ 1.
    pub record_stride: usize,
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dt.is_nan() || self.dt <= 0.0 {
            return Err(Error::InvalidConfig(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.t_total.is_nan() || self.t_total < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "t_total must be >= 0, got {}",
                self.t_total
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidConfig("record_stride must be >= 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> u64 {
        (self.t_total / self.dt).round() as u64
    }
}

/// Recorded phase-space snapshots for a subset of atoms at a regular stride.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    /// Snapshot times (s), starting at the pre-step state.
    pub times: Vec<f64>,
    /// Ensemble indices of the recorded atoms.
    pub atom_indices: Vec<usize>,
    /// `positions[k][j]`: position of recorded atom `j` at snapshot `k`.
    pub positions: Vec<Vec<f64>>,
    /// `velocities[k][j]`: same layout as `positions`.
    pub velocities: Vec<Vec<f64>>,
}

/// Sample the initial thermal cloud: positions ~ N(center, r), velocities
/// ~ N(0, √(k_B·T/m)), each atom drawn from the counter generator keyed by
/// (seed, atom index). Bit-identical for any thread count.
pub fn sample_cloud(cloud: &CloudSpec, seed: u64, constants: &PhysicalConstants) -> Result<AtomEnsemble> {
    cloud.validate()?;
    let sigma_v = constants.thermal_sigma(cloud.temperature);
    let pairs: Vec<(f64, f64)> = (0..cloud.count as u64)
        .into_par_iter()
        .map(|i| {
            let (n_pos, n_vel) = rng::standard_normal_pair(seed, i, 0);
            (cloud.center + cloud.rms_radius * n_pos, sigma_v * n_vel)
        })
        .collect();
    let (positions, velocities): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Ok(AtomEnsemble {
        tags: vec![Tag::Unclassified; positions.len()],
        positions,
        velocities,
        seed,
        time: 0.0,
    })
}

/// Tag each atom analytically, without integration: trapped iff it starts
/// uphill of the saddle (z > z_top) with total energy strictly below the
/// saddle energy. Energy exactly at the saddle counts as escaped. Only
/// valid on unevolved ensembles.
pub fn classify(
    mut ens: AtomEnsemble,
    cfg: &PotentialConfig,
    geom: &WellGeometry,
    constants: &PhysicalConstants,
) -> Result<AtomEnsemble> {
    if ens.time != 0.0 {
        return Err(Error::EnsembleEvolved { time: ens.time });
    }
    if !geom.exists {
        return Err(Error::WellDoesNotExist);
    }
    let u_top = cfg.potential_energy(geom.z_top);
    let half_mass = 0.5 * constants.mass;
    let tags: Vec<Tag> = ens
        .positions
        .par_iter()
        .zip(ens.velocities.par_iter())
        .map(|(&z, &v)| {
            if z > geom.z_top && half_mass * v * v + cfg.potential_energy(z) < u_top {
                Tag::Trapped
            } else {
                Tag::Escaped
            }
        })
        .collect();
    ens.tags = tags;
    Ok(ens)
}

/// Small-oscillation period 2π√(m/U″(z_min)) at the well bottom, or `None`
/// when there is no finite minimum. U″ is taken from a centered difference
/// of the closed-form force.
pub fn small_oscillation_period(
    cfg: &PotentialConfig,
    geom: &WellGeometry,
    constants: &PhysicalConstants,
) -> Option<f64> {
    if !geom.exists || !geom.z_min.is_finite() {
        return None;
    }
    let h = cfg.barrier_waist * 1e-4;
    let curvature = (cfg.force(geom.z_min - h) - cfg.force(geom.z_min + h)) / (2.0 * h);
    if curvature <= 0.0 {
        return None;
    }
    Some(std::f64::consts::TAU * (constants.mass / curvature).sqrt())
}

fn warn_if_underresolved(
    cfg: &PotentialConfig,
    icfg: &IntegratorConfig,
    constants: &PhysicalConstants,
) {
    let geom = crate::potential::find_well_geometry(cfg, constants);
    if let Some(period) = small_oscillation_period(cfg, &geom, constants) {
        if icfg.dt > period / 100.0 {
            log::warn!(
                "integrator dt = {:.3e} s does not resolve the well (period {:.3e} s; \
                 want dt <= period/100); results may be inaccurate",
                icfg.dt,
                period
            );
        }
    }
}

#[inline]
fn verlet_atom(
    mut z: f64,
    mut v: f64,
    steps: u64,
    dt: f64,
    inv_mass: f64,
    cfg: &PotentialConfig,
) -> (f64, f64) {
    let mut accel = cfg.force(z) * inv_mass;
    for _ in 0..steps {
        z += v * dt + 0.5 * accel * dt * dt;
        let accel_new = cfg.force(z) * inv_mass;
        v += 0.5 * (accel + accel_new) * dt;
        accel = accel_new;
    }
    (z, v)
}

/// Evolve every atom under the potential with velocity Verlet. Atoms are
/// independent; work is split across threads with per-atom results written
/// back in index order, so the outcome is independent of parallelism.
/// Warns (does not fail) when dt is too coarse for the well.
pub fn integrate(
    mut ens: AtomEnsemble,
    cfg: &PotentialConfig,
    icfg: &IntegratorConfig,
    constants: &PhysicalConstants,
) -> Result<AtomEnsemble> {
    icfg.validate()?;
    cfg.validate()?;
    warn_if_underresolved(cfg, icfg, constants);
    let steps = icfg.steps();
    let dt = icfg.dt;
    let inv_mass = 1.0 / constants.mass;
    let updated: Vec<(f64, f64)> = ens
        .positions
        .par_iter()
        .zip(ens.velocities.par_iter())
        .map(|(&z, &v)| verlet_atom(z, v, steps, dt, inv_mass, cfg))
        .collect();
    for (i, (z, v)) in updated.into_iter().enumerate() {
        ens.positions[i] = z;
        ens.velocities[i] = v;
    }
    ens.time += steps as f64 * dt;
    Ok(ens)
}

/// Like [`integrate`], additionally recording position snapshots for the
/// atoms in `subset` every `record_stride` steps (plus the initial state).
pub fn integrate_recording(
    mut ens: AtomEnsemble,
    cfg: &PotentialConfig,
    icfg: &IntegratorConfig,
    constants: &PhysicalConstants,
    subset: &[usize],
) -> Result<(AtomEnsemble, TrajectoryRecord)> {
    icfg.validate()?;
    cfg.validate()?;
    warn_if_underresolved(cfg, icfg, constants);
    let steps = icfg.steps();
    let dt = icfg.dt;
    let stride = icfg.record_stride as u64;
    let inv_mass = 1.0 / constants.mass;

    // Trajectories of the recorded subset, one row of snapshots per atom.
    let rows: Vec<Vec<(f64, f64)>> = subset
        .par_iter()
        .map(|&idx| {
            let mut z = ens.positions[idx];
            let mut v = ens.velocities[idx];
            let mut row = Vec::with_capacity((steps / stride + 2) as usize);
            row.push((z, v));
            let mut accel = cfg.force(z) * inv_mass;
            for step in 1..=steps {
                z += v * dt + 0.5 * accel * dt * dt;
                let accel_new = cfg.force(z) * inv_mass;
                v += 0.5 * (accel + accel_new) * dt;
                accel = accel_new;
                if step % stride == 0 {
                    row.push((z, v));
                }
            }
            row
        })
        .collect();

    let snapshots = if rows.is_empty() {
        (steps / stride + 1) as usize
    } else {
        rows[0].len()
    };
    let mut positions = vec![vec![0.0; subset.len()]; snapshots];
    let mut velocities = vec![vec![0.0; subset.len()]; snapshots];
    for (j, row) in rows.iter().enumerate() {
        for (k, &(z, v)) in row.iter().enumerate() {
            positions[k][j] = z;
            velocities[k][j] = v;
        }
    }
    let mut times = Vec::with_capacity(snapshots);
    times.push(ens.time);
    for k in 1..snapshots {
        times.push(ens.time + (k as u64 * stride) as f64 * dt);
    }

    ens = integrate(ens, cfg, icfg, constants)?;
    Ok((
        ens,
        TrajectoryRecord {
            times,
            atom_indices: subset.to_vec(),
            positions,
            velocities,
        },
    ))
}

/// Ballistic flight with all potentials off: z ← z + v·t.
pub fn free_expansion(mut ens: AtomEnsemble, t: f64) -> Result<AtomEnsemble> {
    if t < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "free expansion time must be >= 0, got {t}"
        )));
    }
    ens.positions
        .par_iter_mut()
        .zip(ens.velocities.par_iter())
        .for_each(|(z, &v)| *z += v * t);
    ens.time += t;
    Ok(ens)
}

/// Trajectory verdict for the classifier cross-check: integrate one atom
/// and report whether it stayed strictly inside `interval` the whole time.
/// (Checking only the final position misreads escaped atoms that re-enter
/// the interval from uphill mid-transit; trapped orbits never leave it.)
pub fn stayed_in_interval(
    z0: f64,
    v0: f64,
    cfg: &PotentialConfig,
    interval: (f64, f64),
    dt: f64,
    steps: u64,
    constants: &PhysicalConstants,
) -> bool {
    let (lo, hi) = interval;
    let mut z = z0;
    let mut v = v0;
    if z <= lo || z >= hi {
        return false;
    }
    let inv_mass = 1.0 / constants.mass;
    let mut accel = cfg.force(z) * inv_mass;
    for _ in 0..steps {
        z += v * dt + 0.5 * accel * dt * dt;
        let accel_new = cfg.force(z) * inv_mass;
        v += 0.5 * (accel + accel_new) * dt;
        accel = accel_new;
        if z <= lo || z >= hi {
            return false;
        }
    }
    true
}

/// Mean number of oscillations in a trajectory record: sign changes of
/// (z − z_min) per atom, divided by two, averaged over the recorded atoms.
/// Zero samples carry the previous sign, so an atom parked at the minimum
/// counts zero crossings.
pub fn oscillation_count(record: &TrajectoryRecord, z_min: f64) -> Result<f64> {
    if record.atom_indices.is_empty() {
        return Err(Error::EmptyTrappedSet);
    }
    let n_atoms = record.atom_indices.len();
    let mut total = 0.0;
    for j in 0..n_atoms {
        let mut crossings = 0u64;
        let mut last_sign = 0i8;
        for snapshot in &record.positions {
            let d = snapshot[j] - z_min;
            let sign = if d > 0.0 {
                1i8
            } else if d < 0.0 {
                -1i8
            } else {
                0i8
            };
            if sign != 0 {
                if last_sign != 0 && sign != last_sign {
                    crossings += 1;
                }
                last_sign = sign;
            }
        }
        total += crossings as f64 / 2.0;
    }
    Ok(total / n_atoms as f64)
}
