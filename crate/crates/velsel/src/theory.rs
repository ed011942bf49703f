//! Analytic predictions: selection efficiency in both gradient regimes,
//! pseudo-temperatures, the β parameter, and the general trapped-phase-space
//! quadrature behind the no-free-parameter theory curves.

use crate::error::{Error, Result};
use crate::physics::PhysicalConstants;
use crate::potential::{capture_bounds, PotentialConfig, WellGeometry};
use crate::quad;

/// Initial thermal cloud parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CloudSpec {
    /// Temperature T (K), > 0.
    pub temperature: f64,
    /// rms radius r (m), > 0.
    pub rms_radius: f64,
    /// Cloud centroid position (m).
    pub center: f64,
    /// Number of atoms, ≥ 1.
    pub count: usize,
}

impl CloudSpec {
    pub fn validate(&self) -> Result<()> {
        if self.temperature.is_nan() || self.temperature <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "cloud temperature must be > 0, got {}",
                self.temperature
            )));
        }
        if self.rms_radius.is_nan() || self.rms_radius <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "cloud rms_radius must be > 0, got {}",
                self.rms_radius
            )));
        }
        if self.count < 1 {
            return Err(Error::InvalidConfig("cloud count must be >= 1".into()));
        }
        Ok(())
    }
}

/// Which analytic regime a prediction came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum RegimeTag {
    LowGradient,
    HighGradient,
    GeneralQuadrature,
}

/// A bundled prediction. `mean_ke = k_B·t_s/2` by construction.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TheoryPrediction {
    /// Selection efficiency η ∈ [0, 1].
    pub efficiency: f64,
    /// Pseudo-temperature T_s (K).
    pub t_s: f64,
    /// Mean selected kinetic energy (J), = k_B·T_s/2.
    pub mean_ke: f64,
    pub regime: RegimeTag,
}

/// β = 2U′r/(k_B·T): potential-energy spread across the cloud over its
/// thermal kinetic energy. Distinguishes the √ (low-β) and 3/2-power
/// (high-β) efficiency regimes.
pub fn beta(cfg: &PotentialConfig, cloud: &CloudSpec, constants: &PhysicalConstants) -> f64 {
    2.0 * cfg.u_prime * cloud.rms_radius / (constants.k_b * cloud.temperature)
}

/// Low-gradient selection efficiency: the Gaussian velocity integral over
/// |v| < v_m in closed form, η = erf(√(U₀/k_B·T)).
pub fn efficiency_lowgrad(u0: f64, temperature: f64) -> f64 {
    if u0 <= 0.0 {
        return 0.0;
    }
    libm::erf((u0 / (crate::physics::K_B * temperature)).sqrt())
}

/// Shallow-barrier expansion of [`efficiency_lowgrad`]:
/// η ≈ √(4U₀/(π·k_B·T)), good to ~1% for U₀ ≤ 0.03·k_B·T.
pub fn efficiency_lowgrad_approx(u0: f64, temperature: f64) -> f64 {
    (4.0 * u0 / (std::f64::consts::PI * crate::physics::K_B * temperature)).sqrt()
}

/// Efficiency from the pseudo-temperature in the low-gradient regime:
/// η = √(6·T_s/(π·T)), clamped to [0, 1]. Rejects T_s > T.
pub fn efficiency_from_ts(t_s: f64, temperature: f64) -> Result<f64> {
    if t_s < 0.0 || t_s > temperature {
        return Err(Error::InvalidConfig(format!(
            "pseudo-temperature {t_s} K must lie in [0, T = {temperature} K]"
        )));
    }
    Ok((6.0 * t_s / (std::f64::consts::PI * temperature))
        .sqrt()
        .clamp(0.0, 1.0))
}

/// Low-gradient pseudo-temperature: the selected cloud's essentially flat
/// speed distribution has mean kinetic energy U₀/3, so k_B·T_s/2 = U₀/3.
pub fn pseudo_temperature_lowgrad(u0: f64) -> f64 {
    2.0 * u0 / (3.0 * crate::physics::K_B)
}

/// High-gradient pseudo-temperature: mean kinetic energy U₀/4, so
/// k_B·T_s/2 = U₀/4.
pub fn pseudo_temperature_highgrad(u0: f64) -> f64 {
    u0 / (2.0 * crate::physics::K_B)
}

/// Bundled low-gradient prediction: truncated-Gaussian efficiency with the
/// flat-distribution mean kinetic energy U₀/3.
pub fn prediction_lowgrad(u0: f64, temperature: f64) -> TheoryPrediction {
    TheoryPrediction {
        efficiency: efficiency_lowgrad(u0, temperature),
        t_s: pseudo_temperature_lowgrad(u0),
        mean_ke: u0 / 3.0,
        regime: RegimeTag::LowGradient,
    }
}

/// Bundled high-gradient prediction: the flat-density efficiency limit with
/// mean kinetic energy U₀/4.
pub fn prediction_highgrad(
    cfg: &PotentialConfig,
    geom: &WellGeometry,
    cloud: &CloudSpec,
    constants: &PhysicalConstants,
) -> Result<TheoryPrediction> {
    Ok(TheoryPrediction {
        efficiency: efficiency_highgrad_approx(cfg, geom, cloud, constants)?.min(1.0),
        t_s: pseudo_temperature_highgrad(geom.u0),
        mean_ke: geom.u0 / 4.0,
        regime: RegimeTag::HighGradient,
    })
}

/// Flat-density limit of the trapped-phase-space integral for the
/// high-gradient regime (z_m ≪ r, v_m ≪ σ, barrier at cloud center):
/// η ≈ 2·v_m·U₀/(3π·r·σ·U′). A labeled approximation, validated against
/// [`efficiency_quadrature`]; exposes the (T_s/T)^(3/2) scaling.
pub fn efficiency_highgrad_approx(
    cfg: &PotentialConfig,
    geom: &WellGeometry,
    cloud: &CloudSpec,
    constants: &PhysicalConstants,
) -> Result<f64> {
    if !geom.exists {
        return Err(Error::WellDoesNotExist);
    }
    if cfg.u_prime == 0.0 {
        return Err(Error::InvalidConfig(
            "high-gradient approximation needs U' > 0".into(),
        ));
    }
    let sigma = constants.thermal_sigma(cloud.temperature);
    Ok(2.0 * geom.v_m * geom.u0
        / (3.0 * std::f64::consts::PI * cloud.rms_radius * sigma * cfg.u_prime))
}

/// Minimum gradient for the escaped cloud to outrun its own thermal
/// expansion: the gradient displacement ½(U′/m)t² equals `k_factor` times
/// the expansion σ·t at `t_sep`, giving U′ = 2·k·m·σ/t_sep.
pub fn min_gradient_for_separation(
    temperature: f64,
    t_sep: f64,
    k_factor: f64,
    constants: &PhysicalConstants,
) -> f64 {
    let sigma = constants.thermal_sigma(temperature);
    2.0 * k_factor * constants.mass * sigma / t_sep
}

/// Result of the general trapped-phase-space quadrature. The two kinetic
/// estimators answer "what is the selected mean KE" at the instant of
/// capture and time-averaged over the trapped orbits; the time-averaged
/// variant is unavailable without a confining gradient (U′ = 0).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct QuadraturePrediction {
    /// Trapped fraction η ∈ [0, 1].
    pub efficiency: f64,
    /// Phase-space average of ½mv² at capture (J).
    pub mean_ke_instant: f64,
    /// 2·mean_ke_instant/k_B (K).
    pub t_s_instant: f64,
    /// Orbit-time-averaged mean KE via the period integral (J).
    pub mean_ke_virial: Option<f64>,
    pub t_s_virial: Option<f64>,
}

impl QuadraturePrediction {
    /// View as a [`TheoryPrediction`] using the capture-instant estimator.
    pub fn prediction(&self) -> TheoryPrediction {
        TheoryPrediction {
            efficiency: self.efficiency,
            t_s: self.t_s_instant,
            mean_ke: self.mean_ke_instant,
            regime: RegimeTag::GeneralQuadrature,
        }
    }
}

/// Outer integration tolerance; the published contract is 1e-6 relative
/// on η, so both nesting levels run tighter.
const OUTER_TOL: f64 = 1e-8;
const INNER_TOL: f64 = 1e-9;

/// Number of energy grid points for the orbit-averaged KE table.
const VIRIAL_GRID: usize = 128;

/// General trapped-fraction quadrature:
///
/// η = ∬ f(z)·g(v) dz dv over { z_top < z < z_r, ½mv² + U(z) < U(z_top) }
///
/// with f, g the cloud's position/velocity normal densities. Also computes
/// the phase-space-averaged selected kinetic energy, both instantaneous at
/// capture and time-averaged over the trapped orbit (period integral).
/// Serial and deterministic: equal inputs give bitwise-equal outputs.
pub fn efficiency_quadrature(
    cfg: &PotentialConfig,
    geom: &WellGeometry,
    cloud: &CloudSpec,
    constants: &PhysicalConstants,
) -> Result<QuadraturePrediction> {
    if !geom.exists {
        return Err(Error::WellDoesNotExist);
    }
    cfg.validate()?;
    cloud.validate()?;

    let (z_lo, z_hi_raw) = capture_bounds(geom, cfg)?;
    let r = cloud.rms_radius;
    let sigma = constants.thermal_sigma(cloud.temperature);
    let mass = constants.mass;
    let u_top = cfg.potential_energy(geom.z_top);

    // Clip the capture interval to where the cloud has any mass.
    let z_lo = z_lo.max(cloud.center - 10.0 * r);
    let z_hi = z_hi_raw.min(cloud.center + 10.0 * r);
    if z_hi <= z_lo {
        return Ok(QuadraturePrediction {
            efficiency: 0.0,
            mean_ke_instant: 0.0,
            t_s_instant: 0.0,
            mean_ke_virial: None,
            t_s_virial: None,
        });
    }

    let norm_z = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * r);
    let norm_v = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * sigma);
    let f_pos = |z: f64| {
        let d = (z - cloud.center) / r;
        norm_z * (-0.5 * d * d).exp()
    };
    let g_vel = |v: f64| {
        let d = v / sigma;
        norm_v * (-0.5 * d * d).exp()
    };
    let headroom = |z: f64| u_top - cfg.potential_energy(z);

    // Trapped fraction.
    let eta = quad::integrate(
        |z| {
            let h = headroom(z);
            if h <= 0.0 {
                return 0.0;
            }
            let v_cap = (2.0 * h / mass).sqrt();
            f_pos(z) * 2.0 * quad::integrate(g_vel, 0.0, v_cap, INNER_TOL)
        },
        z_lo,
        z_hi,
        OUTER_TOL,
    )
    .clamp(0.0, 1.0);

    // Capture-instant mean KE: ∬ ½mv² f g / η.
    let ke_weighted = quad::integrate(
        |z| {
            let h = headroom(z);
            if h <= 0.0 {
                return 0.0;
            }
            let v_cap = (2.0 * h / mass).sqrt();
            f_pos(z)
                * 2.0
                * quad::integrate(|v| 0.5 * mass * v * v * g_vel(v), 0.0, v_cap, INNER_TOL)
        },
        z_lo,
        z_hi,
        OUTER_TOL,
    );
    let mean_ke_instant = if eta > 0.0 { ke_weighted / eta } else { 0.0 };

    // Orbit-time-averaged mean KE, well-defined only for a closed well.
    let virial = if cfg.u_prime > 0.0 && eta > 0.0 {
        let table = OrbitKeTable::build(cfg, geom, mass);
        let u_min = cfg.potential_energy(geom.z_min);
        let weighted = quad::integrate(
            |z| {
                let h = headroom(z);
                if h <= 0.0 {
                    return 0.0;
                }
                let v_cap = (2.0 * h / mass).sqrt();
                let u_rel = cfg.potential_energy(z) - u_min;
                f_pos(z)
                    * 2.0
                    * quad::integrate(
                        |v| table.mean_ke(0.5 * mass * v * v + u_rel) * g_vel(v),
                        0.0,
                        v_cap,
                        INNER_TOL,
                    )
            },
            z_lo,
            z_hi,
            OUTER_TOL,
        );
        Some(weighted / eta)
    } else {
        None
    };

    Ok(QuadraturePrediction {
        efficiency: eta,
        mean_ke_instant,
        t_s_instant: 2.0 * mean_ke_instant / constants.k_b,
        mean_ke_virial: virial,
        t_s_virial: virial.map(|ke| 2.0 * ke / constants.k_b),
    })
}

/// Tabulated orbit-time-averaged kinetic energy as a function of total
/// energy above the well bottom. For one orbit at energy E with turning
/// points z₁, z₂:
///
///   ⟨KE⟩_t = (m/2)·(∫ v dz)/(∫ dz/v)
///
/// computed with the substitution z = mid − half·cosθ, which removes the
/// inverse-square-root turning-point singularities.
struct OrbitKeTable {
    energies: Vec<f64>,
    mean_kes: Vec<f64>,
}

impl OrbitKeTable {
    fn build(cfg: &PotentialConfig, geom: &WellGeometry, mass: f64) -> Self {
        let u_min = cfg.potential_energy(geom.z_min);
        let n = VIRIAL_GRID;
        let mut energies = Vec::with_capacity(n);
        let mut mean_kes = Vec::with_capacity(n);
        for j in 0..n {
            let e = geom.u0 * (j as f64 + 0.5) / n as f64;
            let target = u_min + e;
            // Turning points bracket the minimum: one on the barrier flank,
            // one on the uphill slope.
            let z1 = bisect_energy(cfg, geom.z_top, geom.z_min, target);
            let z2 = {
                let mut hi = geom.z_min + geom.z_m;
                let mut guard = 0;
                while cfg.potential_energy(hi) < target && guard < 64 {
                    hi = geom.z_min + (hi - geom.z_min) * 2.0;
                    guard += 1;
                }
                bisect_energy(cfg, geom.z_min, hi, target)
            };
            let mid = 0.5 * (z1 + z2);
            let half = 0.5 * (z2 - z1);
            let speed = |theta: f64| {
                let z = mid - half * theta.cos();
                let ke = (target - cfg.potential_energy(z)).max(0.0);
                (2.0 * ke / mass).sqrt()
            };
            let area = quad::gauss_legendre_64(
                |theta| half * theta.sin() * speed(theta),
                0.0,
                std::f64::consts::PI,
            );
            let period_half = quad::gauss_legendre_64(
                |theta| {
                    let v = speed(theta);
                    if v > 0.0 {
                        half * theta.sin() / v
                    } else {
                        0.0
                    }
                },
                0.0,
                std::f64::consts::PI,
            );
            let ke = if period_half > 0.0 {
                0.5 * mass * area / period_half
            } else {
                0.5 * e
            };
            energies.push(e);
            mean_kes.push(ke);
        }
        OrbitKeTable { energies, mean_kes }
    }

    /// Linear interpolation; below the grid the harmonic limit KE → E/2
    /// anchors the origin, above it the last value is held.
    fn mean_ke(&self, e: f64) -> f64 {
        if e <= 0.0 {
            return 0.0;
        }
        let n = self.energies.len();
        if e <= self.energies[0] {
            return self.mean_kes[0] * e / self.energies[0];
        }
        if e >= self.energies[n - 1] {
            return self.mean_kes[n - 1];
        }
        let idx = self
            .energies
            .partition_point(|&grid_e| grid_e < e)
            .clamp(1, n - 1);
        let (e0, e1) = (self.energies[idx - 1], self.energies[idx]);
        let (k0, k1) = (self.mean_kes[idx - 1], self.mean_kes[idx]);
        k0 + (k1 - k0) * (e - e0) / (e1 - e0)
    }
}

fn bisect_energy(cfg: &PotentialConfig, lo: f64, hi: f64, target: f64) -> f64 {
    let mut lo = lo;
    let mut hi = hi;
    let f_lo = cfg.potential_energy(lo) - target;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            break;
        }
        let f_mid = cfg.potential_energy(mid) - target;
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
