//! Physical constants of the actuator and the memoryless relations between them.
//!
//! Every "mass" and "force" of the translational textbook model is read
//! rotationally here: inertias in kg·m², torques in Nm, angles in rad.
//!
//! Sign conventions:
//! - `delta_l = q_main - q_adjuster / n` is the spring deflection seen from the load.
//! - The spring pushes the load back toward the equilibrium with `-k·delta_l`
//!   and reacts on the adjuster shaft with `+k·delta_l / n`.

use std::f64::consts::PI;

use crate::error::Fault;

/// Force-ratio value at and above which a design is flagged.
pub const FORCE_RATIO_WARN: f64 = 0.1;

/// All physical constants of the actuator.
///
/// Inertias of the prototype are not published; the values in
/// [`ActuatorParams::reference`] other than stiffness, ratio, torque limits and
/// deflection range are placeholders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuatorParams {
    /// Main rotor inertia, kg·m².
    pub main_rotor_inertia: f64,
    /// Load inertia reflected to the main shaft that is not described by a
    /// [`LoadModel`](crate::dynamics::LoadModel), kg·m².
    pub load_inertia: f64,
    /// Small (equilibrium) motor rotor inertia, kg·m².
    pub adjuster_rotor_inertia: f64,
    /// Worm inertia, kg·m².
    pub worm_inertia: f64,
    /// Worm wheel inertia, kg·m².
    pub worm_wheel_inertia: f64,
    /// Worm drive ratio.
    pub ratio: f64,
    /// Spring stiffness, Nm/rad.
    pub stiffness: f64,
    /// Pole of the desired critically damped deflection dynamics, 1/s.
    pub alpha: f64,
    /// Main motor torque limit, Nm.
    pub main_torque_limit: f64,
    /// Small motor torque limit at its own shaft, Nm.
    pub adjuster_torque_limit: f64,
    /// Main motor torque constant, Nm/A.
    pub main_torque_constant: f64,
    /// Small motor torque constant, Nm/A.
    pub adjuster_torque_constant: f64,
    /// Supply voltage, V.
    pub supply_voltage: f64,
    /// Deflection range of the spring, rad.
    pub max_deflection: f64,
}

impl ActuatorParams {
    /// Reference configuration.
    ///
    /// Published: `k = 21 Nm/rad`, `n = 60`, 1.6 Nm main motor rating,
    /// 30.3 mNm small motor rating, 75 deg deflection range.
    /// Placeholders: every inertia, `alpha`, both torque constants and the
    /// supply voltage.
    pub fn reference() -> Self {
        Self {
            main_rotor_inertia: 1.0e-3,
            load_inertia: 0.0,
            adjuster_rotor_inertia: 1.0e-5,
            worm_inertia: 5.0e-6,
            worm_wheel_inertia: 3.6e-3,
            ratio: 60.0,
            stiffness: 21.0,
            alpha: 20.0,
            main_torque_limit: 1.6,
            adjuster_torque_limit: 0.0303,
            main_torque_constant: 0.2,
            adjuster_torque_constant: 0.0109,
            supply_voltage: 24.0,
            max_deflection: 75.0 * PI / 180.0,
        }
    }

    pub fn validate(&self) -> Result<(), Fault> {
        let inertias = [
            ("main_rotor_inertia", self.main_rotor_inertia),
            ("load_inertia", self.load_inertia),
            ("adjuster_rotor_inertia", self.adjuster_rotor_inertia),
            ("worm_inertia", self.worm_inertia),
            ("worm_wheel_inertia", self.worm_wheel_inertia),
        ];
        for (name, value) in inertias {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Fault::InvalidParams(format!("{name} must be finite and >= 0, got {value}")));
            }
        }
        let positive = [
            ("stiffness", self.stiffness),
            ("alpha", self.alpha),
            ("main_torque_limit", self.main_torque_limit),
            ("adjuster_torque_limit", self.adjuster_torque_limit),
            ("main_torque_constant", self.main_torque_constant),
            ("adjuster_torque_constant", self.adjuster_torque_constant),
            ("supply_voltage", self.supply_voltage),
            ("max_deflection", self.max_deflection),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Fault::InvalidParams(format!("{name} must be finite and > 0, got {value}")));
            }
        }
        if !(self.ratio.is_finite() && self.ratio >= 1.0) {
            return Err(Fault::InvalidParams(format!("ratio must be >= 1, got {}", self.ratio)));
        }
        if equivalent_inertia_load(self) <= 0.0 {
            return Err(Fault::InvalidParams("main-side equivalent inertia must be > 0".into()));
        }
        if equivalent_inertia_adjuster(self) <= 0.0 {
            return Err(Fault::InvalidParams("adjuster-side equivalent inertia must be > 0".into()));
        }
        Ok(())
    }

    /// Copy of `self` with `extra` added to the reflected load inertia.
    pub fn with_load_inertia(&self, extra: f64) -> Self {
        Self { load_inertia: self.load_inertia + extra, ..*self }
    }
}

/// `M_motor + M_load`.
pub fn equivalent_inertia_load(params: &ActuatorParams) -> f64 {
    params.main_rotor_inertia + params.load_inertia
}

/// Adjuster inertia seen at the small motor shaft; the worm wheel is reflected
/// through the square of the ratio.
pub fn equivalent_inertia_adjuster(params: &ActuatorParams) -> f64 {
    params.adjuster_rotor_inertia + params.worm_inertia + params.worm_wheel_inertia / (params.ratio * params.ratio)
}

pub fn spring_deflection(q_main: f64, q_adjuster: f64, ratio: f64) -> f64 {
    q_main - q_adjuster / ratio
}

/// Spring torques on the load and on the small motor shaft.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpringTorques {
    pub on_load: f64,
    pub on_adjuster: f64,
}

pub fn spring_torques(delta_l: f64, params: &ActuatorParams) -> SpringTorques {
    let on_load = -params.stiffness * delta_l;
    SpringTorques { on_load, on_adjuster: -on_load / params.ratio }
}

/// Load angle at which the spring is undeformed.
pub fn equilibrium_position(q_adjuster: f64, ratio: f64) -> f64 {
    q_adjuster / ratio
}

pub fn spring_energy(delta_l: f64, params: &ActuatorParams) -> f64 {
    0.5 * params.stiffness * delta_l * delta_l
}

/// `n·m_eq/M_eq`, the small-motor to main-motor torque ratio once the spring is nulled.
pub fn force_ratio(ratio: f64, adjuster_inertia: f64, load_inertia: f64) -> f64 {
    ratio * adjuster_inertia / load_inertia
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignReport {
    pub force_ratio: f64,
    pub flagged: bool,
}

impl DesignReport {
    pub fn from_ratio(force_ratio: f64) -> Self {
        Self { force_ratio, flagged: force_ratio >= FORCE_RATIO_WARN }
    }
}

pub fn validate_design(params: &ActuatorParams) -> DesignReport {
    DesignReport::from_ratio(force_ratio(
        params.ratio,
        equivalent_inertia_adjuster(params),
        equivalent_inertia_load(params),
    ))
}
