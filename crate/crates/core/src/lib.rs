//! Simulator and controllers for an adjustable-equilibrium parallel elastic
//! actuator: a direct-drive motor in parallel with a torsion spring whose far
//! end is positioned by a small motor through a self-locking worm drive.
//!
//! - [`params`]: physical constants and algebraic relations.
//! - [`dynamics`]: two-mode equations of motion and the RK4 stepper.
//! - [`control`]: spring-nulling law, PD, saturation and the mode supervisor.
//! - [`telemetry`]: currents, powers and energy integrals per sample.
//! - [`scenario`]: scripted experiments, static oracle, config and CSV.
//! - [`batch`]: independent runs fanned out over threads.

pub mod batch;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod params;
pub mod scenario;
pub mod telemetry;

pub use error::{ConfigError, Fault};
