//! Shared fixtures for the kernel benchmarks.

use velsel::physics::{PhysicalConstants, K_B};
use velsel::potential::PotentialConfig;
use velsel::theory::CloudSpec;

pub fn constants() -> PhysicalConstants {
    PhysicalConstants::rb85()
}

/// The weak-gradient benchmark well: 8 μK barrier at 3 G/cm.
pub fn bench_potential() -> PotentialConfig {
    let c = constants();
    PotentialConfig {
        u_prime: c.gradient_energy_per_length(0.03).unwrap(),
        barrier_height: 8e-6 * K_B,
        barrier_center: 0.0,
        barrier_waist: 6e-6,
        trap_offset: 2e-3,
    }
}

pub fn bench_cloud(count: usize) -> CloudSpec {
    CloudSpec {
        temperature: 26e-6,
        rms_radius: 160e-6,
        center: 0.0,
        count,
    }
}
