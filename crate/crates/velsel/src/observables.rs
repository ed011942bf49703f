//! Measured quantities: density profiles, time-of-flight thermometry,
//! pseudo-temperatures, the spatial-window efficiency protocol, velocity
//! deconvolution, and cutoff sharpness metrics.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use std::io::Write;

use crate::ensemble::{AtomEnsemble, Tag, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::physics::PhysicalConstants;
use crate::potential::{capture_bounds, PotentialConfig, WellGeometry};

/// Uniform histogram binning.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BinSpec {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl BinSpec {
    /// The default profile grid: 200 uniform bins spanning ±6 widths around
    /// a center. Fixed so golden outputs stay stable.
    pub fn spanning(center: f64, width: f64) -> BinSpec {
        BinSpec {
            lo: center - 6.0 * width,
            hi: center + 6.0 * width,
            bins: 200,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bins < 1 {
            return Err(Error::EmptyBins(self.bins + 1));
        }
        if self.hi.is_nan() || self.lo.is_nan() || self.hi <= self.lo {
            return Err(Error::InvalidConfig(format!(
                "bin range [{}, {}] is empty",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }
}

/// A 1-D histogram of positions with overflow accounting.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DensityProfile {
    /// bins+1 strictly increasing edges (m).
    pub bin_edges: Vec<f64>,
    /// In-range counts per bin.
    pub counts: Vec<f64>,
    /// Sum of in-range counts.
    pub normalization: f64,
    /// Atoms below/above the grid, kept for count conservation.
    pub underflow: f64,
    pub overflow: f64,
}

impl DensityProfile {
    pub fn bin_width(&self) -> f64 {
        self.bin_edges[1] - self.bin_edges[0]
    }

    pub fn bin_centers(&self) -> Vec<f64> {
        self.bin_edges
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect()
    }

    /// Mean and rms width of the binned distribution (in-range mass only).
    pub fn moments(&self) -> (f64, f64) {
        if self.normalization == 0.0 {
            return (0.0, 0.0);
        }
        let centers = self.bin_centers();
        let mean = centers
            .iter()
            .zip(&self.counts)
            .map(|(c, n)| c * n)
            .sum::<f64>()
            / self.normalization;
        let var = centers
            .iter()
            .zip(&self.counts)
            .map(|(c, n)| (c - mean) * (c - mean) * n)
            .sum::<f64>()
            / self.normalization;
        (mean, var.sqrt())
    }

    /// CSV with columns `bin_center,value`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "bin_center,value")?;
        for (c, n) in self.bin_centers().iter().zip(&self.counts) {
            writeln!(w, "{c},{n}")?;
        }
        Ok(())
    }
}

/// Histogram a set of positions. Atoms outside the grid land in the
/// under/overflow diagnostics, so counts are conserved.
pub fn density_profile(positions: &[f64], spec: &BinSpec) -> Result<DensityProfile> {
    spec.validate()?;
    if positions.is_empty() {
        return Err(Error::InvalidConfig(
            "density_profile needs at least one atom".into(),
        ));
    }
    let width = spec.width();
    let mut counts = vec![0.0; spec.bins];
    let mut underflow = 0.0;
    let mut overflow = 0.0;
    for &z in positions {
        if z < spec.lo {
            underflow += 1.0;
        } else if z >= spec.hi {
            overflow += 1.0;
        } else {
            let idx = (((z - spec.lo) / width) as usize).min(spec.bins - 1);
            counts[idx] += 1.0;
        }
    }
    let normalization = counts.iter().sum();
    let bin_edges = (0..=spec.bins)
        .map(|i| spec.lo + i as f64 * width)
        .collect();
    Ok(DensityProfile {
        bin_edges,
        counts,
        normalization,
        underflow,
        overflow,
    })
}

/// Result of a time-of-flight temperature fit.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TofFit {
    /// Fitted temperature (K).
    pub temperature: f64,
    /// rms residual of σ²(t) against the fit (m²).
    pub residual_rms: f64,
}

/// Fit σ²(t) = σ₀² + (k_B·T/m)·t² to profile widths at several flight
/// times — linear least squares in t² with the intercept pinned to the
/// measured initial rms. Needs at least two distinct times.
pub fn fit_temperature_tof(
    profiles: &[(f64, DensityProfile)],
    initial_rms: f64,
    constants: &PhysicalConstants,
) -> Result<TofFit> {
    if profiles.len() < 2 {
        return Err(Error::DegenerateTofFit);
    }
    let mut distinct = profiles.iter().map(|(t, _)| *t).collect::<Vec<_>>();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::DegenerateTofFit);
    }
    let r0_sq = initial_rms * initial_rms;
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, profile) in profiles {
        let (_, rms) = profile.moments();
        let t_sq = t * t;
        num += t_sq * (rms * rms - r0_sq);
        den += t_sq * t_sq;
    }
    if den == 0.0 {
        return Err(Error::DegenerateTofFit);
    }
    let slope = (num / den).max(0.0);
    let temperature = constants.mass * slope / constants.k_b;
    let residual_sq = profiles
        .iter()
        .map(|(t, profile)| {
            let (_, rms) = profile.moments();
            let fit = r0_sq + slope * t * t;
            (rms * rms - fit) * (rms * rms - fit)
        })
        .sum::<f64>()
        / profiles.len() as f64;
    Ok(TofFit {
        temperature,
        residual_rms: residual_sq.sqrt(),
    })
}

/// Pseudo-temperature of the trapped atoms from their instantaneous
/// velocities: T_s = 2·⟨½mv²⟩/k_B.
pub fn pseudo_temperature(ens: &AtomEnsemble, constants: &PhysicalConstants) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (v, tag) in ens.velocities.iter().zip(&ens.tags) {
        if *tag == Tag::Trapped {
            sum += 0.5 * constants.mass * v * v;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::EmptyTrappedSet);
    }
    Ok(2.0 * (sum / count as f64) / constants.k_b)
}

/// Virialized pseudo-temperature: the kinetic energy averaged over every
/// recorded snapshot of every recorded atom (the record should span at
/// least two oscillation periods), times 2/k_B.
pub fn pseudo_temperature_virial(
    record: &TrajectoryRecord,
    constants: &PhysicalConstants,
) -> Result<f64> {
    if record.atom_indices.is_empty() || record.velocities.is_empty() {
        return Err(Error::EmptyTrappedSet);
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for snapshot in &record.velocities {
        for &v in snapshot {
            sum += 0.5 * constants.mass * v * v;
            count += 1;
        }
    }
    Ok(2.0 * (sum / count as f64) / constants.k_b)
}

/// The selection-efficiency protocol: after the potentials switch off and a
/// short separation flight, count atoms inside the capture interval dilated
/// by v_m·t_sep and divide by the total. Returns 0 when no well exists.
pub fn measure_efficiency(
    ens: &AtomEnsemble,
    cfg: &PotentialConfig,
    geom: &WellGeometry,
    separation_time: f64,
    _constants: &PhysicalConstants,
) -> Result<f64> {
    if !geom.exists {
        return Ok(0.0);
    }
    if ens.is_empty() {
        return Err(Error::InvalidConfig("empty ensemble".into()));
    }
    let (lo, hi) = capture_bounds(geom, cfg)?;
    let dilation = geom.v_m * separation_time;
    let window = (lo - dilation, hi + dilation);
    if !window.0.is_finite() || !window.1.is_finite() {
        return Err(Error::WindowNotFinite(format!(
            "capture interval [{lo}, {hi}] dilated by {dilation}"
        )));
    }
    let inside = ens
        .positions
        .iter()
        .filter(|&&z| z >= window.0 && z <= window.1)
        .count();
    Ok(inside as f64 / ens.len() as f64)
}

/// A velocity distribution on a uniform grid, normalized to unit area.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct VelocityDistribution {
    /// Bin-center velocities (m/s), ascending.
    pub velocities: Vec<f64>,
    /// Probability density (s/m).
    pub densities: Vec<f64>,
}

impl VelocityDistribution {
    pub fn bin_width(&self) -> f64 {
        self.velocities[1] - self.velocities[0]
    }

    /// Fraction of |mass| in |v| > threshold (uses absolute densities so
    /// deconvolution ringing cannot hide in sign cancellations).
    pub fn tail_fraction(&self, threshold: f64) -> f64 {
        let dv = self.bin_width();
        let total: f64 = self.densities.iter().map(|d| d.abs()).sum::<f64>() * dv;
        if total == 0.0 {
            return 0.0;
        }
        let tail: f64 = self
            .velocities
            .iter()
            .zip(&self.densities)
            .filter(|(v, _)| v.abs() > threshold)
            .map(|(_, d)| d.abs())
            .sum::<f64>()
            * dv;
        tail / total
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "bin_center,value")?;
        for (v, d) in self.velocities.iter().zip(&self.densities) {
            writeln!(w, "{v},{d}")?;
        }
        Ok(())
    }
}

/// Deconvolution output; the spectra are kept for debugging the
/// regularization choice.
#[derive(Debug, Clone)]
pub struct DeconvolutionResult {
    pub distribution: VelocityDistribution,
    /// |F(final)/F(initial)| without regularization.
    pub raw_spectrum: Vec<f64>,
    /// |F(final)·conj(F(initial))| / (|F(initial)|² + ε·peak).
    pub regularized_spectrum: Vec<f64>,
}

/// Recover the velocity distribution from a free-expansion position profile
/// by Wiener-regularized frequency-domain division:
///
///   final(x) = ∫ initial(x − v·t)·p(v)·dv
///
/// so F(final) = F(initial)·F(kernel) and the kernel is p rescaled from
/// displacement to velocity. `epsilon` is the Wiener noise floor as a
/// fraction of the spectral peak of the initial profile (default 1e-3);
/// `epsilon = 0` is rejected when the initial spectrum crosses zero.
///
/// The flight time should be long enough that v·t spans at least a few
/// bins at the velocities of interest, or the recovered axis cannot
/// resolve the distribution.
pub fn deconvolve_velocity(
    final_profile: &DensityProfile,
    initial_profile: &DensityProfile,
    t: f64,
    epsilon: f64,
) -> Result<DeconvolutionResult> {
    if t <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "flight time must be > 0, got {t}"
        )));
    }
    if final_profile.bin_edges.len() != initial_profile.bin_edges.len()
        || final_profile
            .bin_edges
            .iter()
            .zip(&initial_profile.bin_edges)
            .any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + a.abs()))
    {
        return Err(Error::MismatchedGrids(format!(
            "{} vs {} edges",
            final_profile.bin_edges.len(),
            initial_profile.bin_edges.len()
        )));
    }

    let n = final_profile.counts.len();
    let m = (2 * n).next_power_of_two();
    let dx = final_profile.bin_width();

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    let ifft = planner.plan_fft_inverse(m);

    let to_spectrum = |counts: &[f64]| {
        let mut buf: Vec<Complex<f64>> = counts
            .iter()
            .map(|&c| Complex::new(c, 0.0))
            .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
            .take(m)
            .collect();
        fft.process(&mut buf);
        buf
    };
    let spec_final = to_spectrum(&final_profile.counts);
    let spec_initial = to_spectrum(&initial_profile.counts);

    let peak = spec_initial
        .iter()
        .map(|c| c.norm_sqr())
        .fold(0.0f64, f64::max);
    if peak == 0.0 {
        return Err(Error::InvalidConfig("initial profile is empty".into()));
    }
    if epsilon == 0.0 {
        let min = spec_initial
            .iter()
            .map(|c| c.norm_sqr())
            .fold(f64::INFINITY, f64::min);
        if min < 1e-12 * peak {
            return Err(Error::IllConditionedDeconvolution);
        }
    }

    let floor = epsilon * peak;
    let mut kernel_spec: Vec<Complex<f64>> = Vec::with_capacity(m);
    let mut raw_spectrum = Vec::with_capacity(m);
    let mut regularized_spectrum = Vec::with_capacity(m);
    for (sf, si) in spec_final.iter().zip(&spec_initial) {
        let denom_raw = si.norm_sqr();
        let wiener = (sf * si.conj()) / (denom_raw + floor);
        raw_spectrum.push(if denom_raw > 0.0 {
            (sf.norm_sqr() / denom_raw).sqrt()
        } else {
            f64::INFINITY
        });
        regularized_spectrum.push(wiener.norm());
        kernel_spec.push(wiener);
    }

    let mut kernel = kernel_spec;
    ifft.process(&mut kernel);
    // rustfft leaves the inverse unscaled.
    let scale = 1.0 / m as f64;

    // Reassemble: indices [0, m/2) are displacements 0, dx, 2dx, …;
    // [m/2, m) wrap to negative displacements.
    let half = m / 2;
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(m);
    for (j, c) in kernel.iter().enumerate() {
        let offset = if j < half {
            j as f64 * dx
        } else {
            (j as f64 - m as f64) * dx
        };
        pairs.push((offset / t, c.re * scale));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let dv = dx / t;
    let mass: f64 = pairs.iter().map(|p| p.1).sum::<f64>() * dv;
    let norm = if mass != 0.0 { 1.0 / mass } else { 1.0 };
    let (velocities, densities): (Vec<f64>, Vec<f64>) = pairs
        .into_iter()
        .map(|(v, w)| (v, w * norm))
        .unzip();

    Ok(DeconvolutionResult {
        distribution: VelocityDistribution {
            velocities,
            densities,
        },
        raw_spectrum,
        regularized_spectrum,
    })
}

/// Sharpness metrics of a (nominally cutoff) velocity distribution.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CutoffMetrics {
    /// Fraction of mass beyond 1.1·v_m.
    pub tail_fraction: f64,
    /// Mean density on the outer half of [−v_m, v_m] over the inner half:
    /// ≈1 for a square distribution, ≈1/3 for a triangular one.
    pub shape_score: f64,
}

pub fn cutoff_metrics(dist: &VelocityDistribution, v_m: f64) -> CutoffMetrics {
    let tail_fraction = dist.tail_fraction(1.1 * v_m);
    let half = 0.5 * v_m;
    let mut inner_sum = 0.0;
    let mut inner_n = 0usize;
    let mut outer_sum = 0.0;
    let mut outer_n = 0usize;
    for (v, d) in dist.velocities.iter().zip(&dist.densities) {
        let a = v.abs();
        if a <= half {
            inner_sum += d;
            inner_n += 1;
        } else if a <= v_m {
            outer_sum += d;
            outer_n += 1;
        }
    }
    let inner_mean = if inner_n > 0 { inner_sum / inner_n as f64 } else { 0.0 };
    let outer_mean = if outer_n > 0 { outer_sum / outer_n as f64 } else { 0.0 };
    let shape_score = if inner_mean != 0.0 {
        outer_mean / inner_mean
    } else {
        0.0
    };
    CutoffMetrics {
        tail_fraction,
        shape_score,
    }
}
