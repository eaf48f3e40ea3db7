//! Controllers for the two operating modes and the supervisor that switches
//! between them.
//!
//! # Spring-nulling law
//!
//! With inertias `M = M_eq`, `m = m_eq`, ratio `n`, spring torques
//! `τ_sM = −k·Δl` on the load and `τ_sm = k·Δl/n` on the small motor:
//!
//! ```text
//! M·q̈_M = τ_M + τ_sM
//! m·q̈_m = τ_m + τ_sm
//! Δl̈    = q̈_M − q̈_m/n = (τ_M + τ_sM)/M − (τ_m + τ_sm)/(n·m)
//! ```
//!
//! Imposing `Δl̈ + 2α·Δl̇ + α²·Δl = 0` and solving for `τ_m`:
//!
//! ```text
//! τ_m = n·(m/M)·(τ_M + τ_sM) − τ_sm + n·m·(2α·Δl̇ + α²·Δl)
//!     = n·(m/M)·τ_M − (1 + n²·m/M)·τ_sm + n·m·(2α·Δl̇ + α²·Δl)
//! ```
//!
//! using `τ_sM = −n·τ_sm`. External load torque does not appear: with gravity
//! acting, `Δl` settles at `τ_ext/(M·α²)` instead of zero while the load moves.
//!
//! `M` must include any inertia the load model adds; [`supervisor_step`] folds
//! it in before calling [`vdd_command`].
//!
//! # Held commands
//!
//! A command held over a control period `h` acts on average at the middle of
//! the period, which costs `O(h)` accuracy in the imposed dynamics.
//! [`vdd_command_held`] evaluates the law at `(Δl, Δl̇)` predicted half a
//! period ahead along the desired dynamics:
//!
//! ```text
//! Δl_½  = Δl + (h/2)·Δl̇
//! Δl̇_½ = Δl̇ + (h/2)·(−2α·Δl̇ − α²·Δl)
//! ```
//!
//! which brings the error down to `O(h²)`. With `h = 0` it is [`vdd_command`].

use crate::dynamics::{ActuatorState, LoadModel, Mode, MotorCommand};
use crate::params::{self, ActuatorParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupervisorConfig {
    /// Desired equilibrium, rad.
    pub q_eq_target: f64,
    /// Arrival tolerance on the load and equilibrium angles, rad.
    pub pos_tol: f64,
    /// Deflection tolerance before locking, rad.
    pub defl_tol: f64,
    /// Deflection-rate tolerance before locking, rad/s.
    pub vel_tol: f64,
    /// Main motor PD gains, Nm/rad and Nm·s/rad.
    pub kp: f64,
    pub kd: f64,
    /// Velocity damping trim applied by the main motor in parallel elastic
    /// mode, Nm·s/rad. Zero disables it.
    pub pe_damping: f64,
    /// Period over which each command is held, s. Zero uses the
    /// continuous-time spring-nulling law.
    pub control_period: f64,
}

impl Default for SupervisorConfig {
    fn default() -> Self {
        Self {
            q_eq_target: 0.0,
            pos_tol: 1e-3,
            defl_tol: 1e-3,
            vel_tol: 1e-2,
            kp: 20.0,
            kd: 4.0,
            pe_damping: 0.0,
            control_period: 0.0,
        }
    }
}

impl SupervisorConfig {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [("pos_tol", self.pos_tol), ("defl_tol", self.defl_tol), ("vel_tol", self.vel_tol), ("kp", self.kp)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("supervisor.{name} must be > 0, got {v}"));
            }
        }
        for (name, v) in [("kd", self.kd), ("pe_damping", self.pe_damping), ("control_period", self.control_period)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("supervisor.{name} must be >= 0, got {v}"));
            }
        }
        if !self.q_eq_target.is_finite() {
            return Err("supervisor.q_eq_target must be finite".into());
        }
        Ok(())
    }
}

/// Small motor command in parallel elastic mode: unpowered.
pub fn pe_command() -> f64 {
    0.0
}

/// Spring-nulling small motor torque given the main motor torque applied over
/// the same interval.
pub fn vdd_command(state: &ActuatorState, tau_main: f64, params: &ActuatorParams) -> f64 {
    nulling_torque(state.deflection(params), state.deflection_rate(params), tau_main, params)
}

/// [`vdd_command`] for a command held over `period` seconds.
pub fn vdd_command_held(state: &ActuatorState, tau_main: f64, params: &ActuatorParams, period: f64) -> f64 {
    let alpha = params.alpha;
    let delta_l = state.deflection(params);
    let rate = state.deflection_rate(params);
    let half = 0.5 * period;
    let delta_l_mid = delta_l + half * rate;
    let rate_mid = rate + half * (-2.0 * alpha * rate - alpha * alpha * delta_l);
    nulling_torque(delta_l_mid, rate_mid, tau_main, params)
}

fn nulling_torque(delta_l: f64, delta_l_rate: f64, tau_main: f64, params: &ActuatorParams) -> f64 {
    let n = params.ratio;
    let m_adj = params::equivalent_inertia_adjuster(params);
    let mass_ratio = m_adj / params::equivalent_inertia_load(params);
    let alpha = params.alpha;
    let spring_on_adjuster = params::spring_torques(delta_l, params).on_adjuster;

    n * mass_ratio * tau_main - (1.0 + n * n * mass_ratio) * spring_on_adjuster
        + n * m_adj * (2.0 * alpha * delta_l_rate + alpha * alpha * delta_l)
}

pub fn pd_position_command(state: &ActuatorState, q_des: f64, cfg: &SupervisorConfig) -> f64 {
    cfg.kp * (q_des - state.q_main) - cfg.kd * state.qd_main
}

pub fn saturate(tau: f64, limit: f64) -> f64 {
    tau.clamp(-limit, limit)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupervisorOutput {
    pub mode: Mode,
    pub cmd: MotorCommand,
    /// The spring-nulling torque exceeded the small motor limit this sample.
    pub adjuster_saturated: bool,
}

/// True when the load and the equilibrium have both reached the target, the
/// load has stopped and the spring is relaxed.
pub fn arrived(state: &ActuatorState, cfg: &SupervisorConfig, params: &ActuatorParams) -> bool {
    (state.q_main - cfg.q_eq_target).abs() <= cfg.pos_tol
        && state.qd_main.abs() <= cfg.vel_tol
        && (state.equilibrium(params) - cfg.q_eq_target).abs() <= cfg.pos_tol
        && state.deflection(params).abs() <= cfg.defl_tol
        && state.deflection_rate(params).abs() <= cfg.vel_tol
}

/// One sample of the mode supervisor.
///
/// Parallel elastic mode is left as soon as the equilibrium is more than
/// `pos_tol` away from the target. In virtual direct-drive mode the main motor
/// tracks the target with PD and the small motor nulls the spring; the worm
/// drive locks again once [`arrived`] holds.
pub fn supervisor_step(
    state: &ActuatorState,
    cfg: &SupervisorConfig,
    params: &ActuatorParams,
    load: &LoadModel,
) -> SupervisorOutput {
    let plant = params.with_load_inertia(load.inertia());
    let go_direct = match state.mode {
        Mode::ParallelElastic => (cfg.q_eq_target - state.equilibrium(params)).abs() > cfg.pos_tol,
        Mode::VirtualDirectDrive => !arrived(state, cfg, params),
    };

    if !go_direct {
        let main = saturate(-cfg.pe_damping * state.qd_main, params.main_torque_limit);
        return SupervisorOutput {
            mode: Mode::ParallelElastic,
            cmd: MotorCommand { main, adjuster: pe_command() },
            adjuster_saturated: false,
        };
    }

    let main = saturate(pd_position_command(state, cfg.q_eq_target, cfg), params.main_torque_limit);
    let wanted = vdd_command_held(state, main, &plant, cfg.control_period);
    let adjuster = saturate(wanted, params.adjuster_torque_limit);
    SupervisorOutput {
        mode: Mode::VirtualDirectDrive,
        cmd: MotorCommand { main, adjuster },
        adjuster_saturated: adjuster != wanted,
    }
}
