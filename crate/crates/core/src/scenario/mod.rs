//! Scripted experiments: configuration, scripts, the runner, the static
//! equilibrium oracle and CSV output.

mod config;
mod csv_out;
mod run;
mod script;
mod statics;

use std::f64::consts::FRAC_PI_4;

pub use config::{reference_bar, RunConfig};
pub use csv_out::{read_records, write_csv, write_records, CsvError, COLUMNS};
pub use run::{run_scenario, stored_energy, PhaseSummary, RunOutput, Simulation, Summary};
pub use script::{Phase, ScenarioScript, Stage};
pub use statics::{static_equilibrium_solve, STATIC_RESIDUAL_TOL};

use crate::dynamics::Pendulum;

/// Spring torque measured while holding the light payload at −45 deg, Nm.
pub const LIGHT_HOLD_TORQUE: f64 = 4.7;
pub const LIGHT_PAYLOAD: f64 = 2.3;
pub const HEAVY_PAYLOAD: f64 = 4.5;
/// Hold length per step of the reference script, s. Approximate.
pub const REFERENCE_HOLD: f64 = 5.0;
/// Velocity envelope tolerance for the reference settle phases, rad/s.
pub const REFERENCE_SETTLE_TOL: f64 = 1e-7;

/// Lever arm that makes the bar plus `mass` produce `torque` of gravity moment
/// at `angle`.
pub fn calibrated_payload_lever(bar: &Pendulum, mass: f64, torque: f64, angle: f64) -> f64 {
    let bar_only = Pendulum { payload: None, ..*bar };
    let needed = torque / angle.cos() - bar_only.moment();
    needed / (mass * bar.g)
}

/// The three-stage bench experiment: hold and release the light payload at
/// −45 deg, move the equilibrium to +45 deg, hold and release the heavy
/// payload there.
pub fn reference_experiment() -> (ScenarioScript, RunConfig) {
    let cfg = RunConfig::reference();
    let bar = reference_bar();
    let lever = calibrated_payload_lever(&bar, LIGHT_PAYLOAD, LIGHT_HOLD_TORQUE, -FRAC_PI_4);
    let hold = Phase::Hold(REFERENCE_HOLD);
    let settle = Phase::SettleWait(REFERENCE_SETTLE_TOL);
    let load_cycle = |mass: f64| {
        vec![hold, Phase::AttachPayload { mass, lever }, settle, hold, Phase::DetachPayload, settle, hold]
    };
    let script = ScenarioScript {
        stages: vec![
            Stage { name: "hold light payload at -45 deg".into(), phases: load_cycle(LIGHT_PAYLOAD) },
            Stage { name: "move equilibrium to +45 deg".into(), phases: vec![Phase::ChangeEquilibrium(FRAC_PI_4), hold] },
            Stage { name: "hold heavy payload at +45 deg".into(), phases: load_cycle(HEAVY_PAYLOAD) },
        ],
    };
    (script, cfg)
}
