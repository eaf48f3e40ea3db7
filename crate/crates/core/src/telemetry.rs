//! Torque, current, power and energy bookkeeping per sample.
//!
//! Currents come from commanded torque through the torque constants and
//! electrical power is `|I|·V`, the same estimator used on the hardware.
//! Mechanical power is kept separately and signed.

use crate::dynamics::{self, ActuatorState, LoadModel, Mode, MotorCommand};
use crate::error::Fault;
use crate::params::{self, ActuatorParams};

pub fn motor_current(tau: f64, torque_constant: f64) -> f64 {
    tau / torque_constant
}

pub fn electrical_power(current: f64, voltage: f64) -> f64 {
    current.abs() * voltage
}

pub fn mechanical_power(tau: f64, omega: f64) -> f64 {
    tau * omega
}

/// Trapezoidal area over one interval of width `h`.
pub fn trapezoid(h: f64, start: f64, end: f64) -> f64 {
    0.5 * h * (start + end)
}

/// One telemetry sample. The command is the one applied from `t` onward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TelemetryRecord {
    pub t: f64,
    pub q_main: f64,
    /// Equilibrium `q_m / n`.
    pub q_eq: f64,
    pub delta_l: f64,
    pub qd_main: f64,
    pub qd_adjuster: f64,
    pub tau_main_cmd: f64,
    pub tau_adjuster_cmd: f64,
    /// `k·Δl`, the torque the spring holds against the load.
    pub tau_spring: f64,
    pub i_main: f64,
    pub i_adjuster: f64,
    pub p_main_elec: f64,
    pub p_adjuster_elec: f64,
    pub p_main_mech: f64,
    pub p_adjuster_mech: f64,
    /// Running integrals of electrical power, J.
    pub e_main: f64,
    pub e_adjuster: f64,
    /// Energy stored in the spring, J.
    pub e_spring: f64,
    pub mode: Mode,
}

impl TelemetryRecord {
    /// First record of a stream; energy integrals start at zero.
    pub fn initial(state: &ActuatorState, cmd: MotorCommand, params: &ActuatorParams) -> Result<Self, Fault> {
        Self::instantaneous(state, cmd, params, 0.0, 0.0)
    }

    /// Next record: fills the derived fields and advances the energy
    /// integrals with the trapezoidal rule over `dt`.
    ///
    /// The interval ending at `state` ran under the command stored in `self`
    /// (zero-order hold), so both trapezoid ends use that command. Electrical
    /// power depends on the current alone, which makes the rule exact here;
    /// `cmd` only takes effect for the interval after `state`.
    pub fn accumulate(
        &self,
        state: &ActuatorState,
        cmd: MotorCommand,
        params: &ActuatorParams,
        dt: f64,
    ) -> Result<Self, Fault> {
        if dt.is_nan() || dt <= 0.0 {
            return Err(Fault::InvalidParams(format!("telemetry dt must be > 0, got {dt}")));
        }
        let mut next = Self::instantaneous(state, cmd, params, 0.0, 0.0)?;
        next.e_main = self.e_main + trapezoid(dt, self.p_main_elec, self.p_main_elec);
        next.e_adjuster = self.e_adjuster + trapezoid(dt, self.p_adjuster_elec, self.p_adjuster_elec);
        Ok(next)
    }

    fn instantaneous(
        state: &ActuatorState,
        cmd: MotorCommand,
        params: &ActuatorParams,
        e_main: f64,
        e_adjuster: f64,
    ) -> Result<Self, Fault> {
        let finite = [state.q_main, state.qd_main, state.q_adjuster, state.qd_adjuster, state.t, cmd.main, cmd.adjuster];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Fault::NonFinite { t: state.t });
        }
        let delta_l = state.deflection(params);
        let i_main = motor_current(cmd.main, params.main_torque_constant);
        let i_adjuster = motor_current(cmd.adjuster, params.adjuster_torque_constant);
        Ok(Self {
            t: state.t,
            q_main: state.q_main,
            q_eq: state.equilibrium(params),
            delta_l,
            qd_main: state.qd_main,
            qd_adjuster: state.qd_adjuster,
            tau_main_cmd: cmd.main,
            tau_adjuster_cmd: cmd.adjuster,
            tau_spring: -params::spring_torques(delta_l, params).on_load,
            i_main,
            i_adjuster,
            p_main_elec: electrical_power(i_main, params.supply_voltage),
            p_adjuster_elec: electrical_power(i_adjuster, params.supply_voltage),
            p_main_mech: mechanical_power(cmd.main, state.qd_main),
            p_adjuster_mech: mechanical_power(cmd.adjuster, state.qd_adjuster),
            e_main,
            e_adjuster,
            e_spring: params::spring_energy(delta_l, params),
            mode: state.mode,
        })
    }
}

/// Electrical power a springless main motor would draw to reproduce the
/// recorded load trajectory: gravity (or scripted) torque plus inertial torque,
/// with the acceleration recovered from the recorded velocities by finite
/// differences.
pub fn direct_drive_counterfactual(
    records: &[TelemetryRecord],
    params: &ActuatorParams,
    load: &LoadModel,
) -> Result<Vec<f64>, Fault> {
    let inertia = params::equivalent_inertia_load(params) + load.inertia();
    let accel = |i: usize| -> f64 {
        let len = records.len();
        if len < 2 {
            return 0.0;
        }
        let (a, b) = if i == 0 {
            (0, 1)
        } else if i == len - 1 {
            (i - 1, i)
        } else {
            (i - 1, i + 1)
        };
        (records[b].qd_main - records[a].qd_main) / (records[b].t - records[a].t)
    };
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let tau = inertia * accel(i) - dynamics::external_torque(load, r.q_main, r.t)?;
            Ok(electrical_power(motor_current(tau, params.main_torque_constant), params.supply_voltage))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{BarMount, Pendulum, Payload};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    #[test]
    fn current_examples() {
        assert_eq!(motor_current(0.0, 0.3), 0.0);
        assert!((motor_current(1.6, 0.2) - 8.0).abs() < 1e-12);
        assert_eq!(motor_current(-0.5, 0.25), -2.0);
    }

    #[test]
    fn power_examples() {
        assert_eq!(electrical_power(0.0, 24.0), 0.0);
        assert_eq!(electrical_power(-2.0, 24.0), 48.0);
        // 80 W average drive power at the placeholder 24 V supply.
        assert!((electrical_power(3.33, 24.0) - 80.0).abs() < 0.1);
        assert_eq!(mechanical_power(1.5, 0.0), 0.0);
        assert_eq!(mechanical_power(2.0, 3.0), 6.0);
        assert_eq!(mechanical_power(2.0, -3.0), -6.0);
    }

    fn state_at(t: f64, q: f64, q_eq: f64, p: &ActuatorParams) -> ActuatorState {
        ActuatorState { t, ..ActuatorState::at_rest(q, q_eq, p) }
    }

    #[test]
    fn hold_with_zero_command_keeps_energy_constant() {
        let p = ActuatorParams::reference();
        let mut r = TelemetryRecord::initial(&state_at(0.0, -0.9, -0.785, &p), MotorCommand::default(), &p).unwrap();
        for k in 1..100 {
            let s = state_at(k as f64 * 1e-3, -0.9, -0.785, &p);
            r = r.accumulate(&s, MotorCommand::default(), &p, 1e-3).unwrap();
            assert_eq!((r.e_main, r.e_adjuster), (0.0, 0.0));
            assert_eq!((r.p_main_elec, r.p_adjuster_elec, r.i_adjuster), (0.0, 0.0, 0.0));
            assert!((r.e_spring - 0.5 * p.stiffness * r.delta_l * r.delta_l).abs() < 1e-15);
            assert_eq!(r.tau_spring, p.stiffness * r.delta_l);
        }
    }

    #[test]
    fn constant_power_integrates_exactly() {
        // |τ|/k_t·V = 10 W on the main motor.
        let p = ActuatorParams::reference();
        let cmd = MotorCommand { main: 10.0 * p.main_torque_constant / p.supply_voltage, adjuster: 0.0 };
        let mut r = TelemetryRecord::initial(&state_at(0.0, 0.0, 0.0, &p), cmd, &p).unwrap();
        for k in 1..=200 {
            r = r.accumulate(&state_at(k as f64 * 0.01, 0.0, 0.0, &p), cmd, &p, 0.01).unwrap();
        }
        assert!((r.e_main - 20.0).abs() < 1e-9);
    }

    #[test]
    fn trapezoid_on_sine_power() {
        // E = ∫₀^π sin t dt = 2 with p(t) = sin t delivered by the main motor.
        let p = ActuatorParams::reference();
        let scale = p.main_torque_constant / p.supply_voltage;
        let dt = 1e-3;
        let steps = (PI / dt).round() as usize;
        let h = PI / steps as f64;
        let cmd_at = |t: f64| MotorCommand { main: t.sin() * scale, adjuster: 0.0 };
        let mut r = TelemetryRecord::initial(&state_at(0.0, 0.0, 0.0, &p), cmd_at(0.0), &p).unwrap();
        for k in 1..=steps {
            let t = k as f64 * h;
            r = r.accumulate(&state_at(t, 0.0, 0.0, &p), cmd_at(t), &p, h).unwrap();
        }
        assert!((r.e_main - 2.0).abs() < 1e-5, "{}", r.e_main);
    }

    #[test]
    fn trapezoid_rule_on_sine() {
        // ∫₀^{π/2} sin t dt = 1; a one-sided rule would be off by ~h/2.
        let n = 1000;
        let h = PI / 2.0 / n as f64;
        let area: f64 = (0..n).map(|k| trapezoid(h, (k as f64 * h).sin(), ((k + 1) as f64 * h).sin())).sum();
        assert!((area - 1.0).abs() < 1e-5, "{area}");
        assert_eq!(trapezoid(0.5, 2.0, 4.0), 1.5);
    }

    #[test]
    fn energy_at_a_command_change_belongs_to_the_held_command() {
        let p = ActuatorParams::reference();
        let on = MotorCommand { main: 1.0, adjuster: 0.0 };
        let r0 = TelemetryRecord::initial(&state_at(0.0, 0.0, 0.0, &p), MotorCommand::default(), &p).unwrap();
        let r1 = r0.accumulate(&state_at(1e-3, 0.0, 0.0, &p), on, &p, 1e-3).unwrap();
        assert_eq!(r1.e_main, 0.0);
        let r2 = r1.accumulate(&state_at(2e-3, 0.0, 0.0, &p), MotorCommand::default(), &p, 1e-3).unwrap();
        assert!((r2.e_main - r1.p_main_elec * 1e-3).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = ActuatorParams::reference();
        let r = TelemetryRecord::initial(&state_at(0.0, 0.0, 0.0, &p), MotorCommand::default(), &p).unwrap();
        assert!(r.accumulate(&state_at(0.0, 0.0, 0.0, &p), MotorCommand::default(), &p, 0.0).is_err());
        let bad = MotorCommand { main: f64::INFINITY, adjuster: 0.0 };
        assert!(matches!(r.accumulate(&state_at(1.0, 0.0, 0.0, &p), bad, &p, 1.0), Err(Fault::NonFinite { .. })));
    }

    #[test]
    fn spring_torque_sign_matches_core_model() {
        let p = ActuatorParams::reference();
        let s = state_at(0.0, -1.0, -0.785, &p);
        let r = TelemetryRecord::initial(&s, MotorCommand::default(), &p).unwrap();
        assert_eq!(r.tau_spring, -params::spring_torques(s.deflection(&p), &p).on_load);
        assert!(r.tau_spring < 0.0);
    }

    fn static_records(q: f64, p: &ActuatorParams, n: usize) -> Vec<TelemetryRecord> {
        (0..n)
            .map(|k| TelemetryRecord::initial(&state_at(k as f64 * 0.01, q, q, p), MotorCommand::default(), p).unwrap())
            .collect()
    }

    #[test]
    fn counterfactual_examples() {
        let p = ActuatorParams::reference();
        let none = direct_drive_counterfactual(&static_records(0.3, &p, 5), &p, &LoadModel::None).unwrap();
        assert!(none.iter().all(|&w| w == 0.0));

        let pendulum = Pendulum::bar(1.9, 0.61, BarMount::Center).with_payload(Payload { mass: 2.3, lever: 0.3 });
        let load = LoadModel::Gravity(pendulum);
        let trace = direct_drive_counterfactual(&static_records(-FRAC_PI_4, &p, 5), &p, &load).unwrap();
        let expected = (pendulum.moment() * FRAC_PI_4.cos()).abs() / p.main_torque_constant * p.supply_voltage;
        for w in trace {
            assert!((w - expected).abs() < 1e-9);
            assert!(w > 0.0);
        }
    }

    proptest! {
        #[test]
        fn current_power_composition(tau in -5.0f64..5.0, kt in 0.01f64..2.0, v in 1.0f64..60.0) {
            let direct = tau.abs() * v / kt;
            let composed = electrical_power(motor_current(tau, kt), v);
            prop_assert!((direct - composed).abs() <= 1e-12 * direct.max(1.0));
        }
    }
}
