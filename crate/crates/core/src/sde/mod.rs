//! Integrators for the kinetic Langevin SDE and its overdamped limit, driven
//! by reproducible Brownian increments.

mod integrator;
pub mod noise;
mod trajectory;

pub use integrator::{
    langevin_step, overdamped_step, step_size, LangevinIntegrator, OverdampedIntegrator, Scheme,
    DEFAULT_H0, DEFAULT_STEP_FACTOR,
};
pub use noise::{BinAccumulator, NoisePath, NoiseSource, NoiseStream};
pub use trajectory::{initial_state, simulate_overdamped, simulate_trajectory, IntegratorConfig, Trajectory};
