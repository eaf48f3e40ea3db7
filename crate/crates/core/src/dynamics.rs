//! Mode-aware equations of motion and the fixed-step integrator.
//!
//! In virtual direct-drive mode both shafts are free:
//!
//! ```text
//! M_eq·q̈_M = τ_M − k·Δl + τ_ext
//! m_eq·q̈_m = τ_m + k·Δl/n
//! ```
//!
//! In parallel elastic mode the worm drive is self-locking, so `(q_m, q̇_m)`
//! is frozen and only the load side is integrated. Freezing is literal: the
//! adjuster coordinates are copied, never integrated, so they stay
//! bit-identical for as long as the mode lasts.

use std::fmt;

use crate::error::Fault;
use crate::params::{self, ActuatorParams};

pub const STANDARD_GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Small motor unpowered, worm drive locked: a conventional PEA.
    ParallelElastic,
    /// Small motor keeps the spring undeformed: behaves as a springless drive.
    VirtualDirectDrive,
}

impl Mode {
    /// Short label used in telemetry files.
    pub fn label(self) -> &'static str {
        match self {
            Mode::ParallelElastic => "PE",
            Mode::VirtualDirectDrive => "VDD",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuatorState {
    pub q_main: f64,
    pub qd_main: f64,
    pub q_adjuster: f64,
    pub qd_adjuster: f64,
    pub mode: Mode,
    pub t: f64,
}

impl ActuatorState {
    /// Resting state in parallel elastic mode with the load at `q_main` and the
    /// spring equilibrium at `q_eq`.
    pub fn at_rest(q_main: f64, q_eq: f64, params: &ActuatorParams) -> Self {
        Self {
            q_main,
            qd_main: 0.0,
            q_adjuster: q_eq * params.ratio,
            qd_adjuster: 0.0,
            mode: Mode::ParallelElastic,
            t: 0.0,
        }
    }

    pub fn deflection(&self, params: &ActuatorParams) -> f64 {
        params::spring_deflection(self.q_main, self.q_adjuster, params.ratio)
    }

    pub fn deflection_rate(&self, params: &ActuatorParams) -> f64 {
        self.qd_main - self.qd_adjuster / params.ratio
    }

    pub fn equilibrium(&self, params: &ActuatorParams) -> f64 {
        params::equilibrium_position(self.q_adjuster, params.ratio)
    }

    fn is_finite(&self) -> bool {
        self.q_main.is_finite()
            && self.qd_main.is_finite()
            && self.q_adjuster.is_finite()
            && self.qd_adjuster.is_finite()
            && self.t.is_finite()
    }
}

/// Motor torques, Nm. `adjuster` is at the small motor shaft.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MotorCommand {
    pub main: f64,
    pub adjuster: f64,
}

/// How the bar is attached to the main shaft.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BarMount {
    /// Pivot at one end; centre of mass at half the bar length.
    #[default]
    End,
    /// Pivot at the middle; the bar is balanced and only adds inertia.
    Center,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Payload {
    /// kg
    pub mass: f64,
    /// Distance from the pivot, m.
    pub lever: f64,
}

/// Bar plus optional payload swinging in a vertical plane.
///
/// `q_main = 0` is the horizontal bar; positive angles raise it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pendulum {
    pub bar_mass: f64,
    pub bar_length: f64,
    pub mount: BarMount,
    pub payload: Option<Payload>,
    pub g: f64,
}

impl Pendulum {
    pub fn bar(bar_mass: f64, bar_length: f64, mount: BarMount) -> Self {
        Self { bar_mass, bar_length, mount, payload: None, g: STANDARD_GRAVITY }
    }

    pub fn with_payload(self, payload: Payload) -> Self {
        Self { payload: Some(payload), ..self }
    }

    fn bar_com(&self) -> f64 {
        match self.mount {
            BarMount::End => 0.5 * self.bar_length,
            BarMount::Center => 0.0,
        }
    }

    /// Peak gravity moment `G` so that `τ_ext = −G·cos(q)`, Nm.
    pub fn moment(&self) -> f64 {
        let payload = self.payload.map_or(0.0, |p| p.mass * p.lever);
        self.g * (self.bar_mass * self.bar_com() + payload)
    }

    /// Inertia about the pivot, kg·m².
    pub fn inertia(&self) -> f64 {
        let l2 = self.bar_length * self.bar_length;
        let bar = match self.mount {
            BarMount::End => self.bar_mass * l2 / 3.0,
            BarMount::Center => self.bar_mass * l2 / 12.0,
        };
        bar + self.payload.map_or(0.0, |p| p.mass * p.lever * p.lever)
    }

    pub fn validate(&self) -> Result<(), Fault> {
        let mut values = vec![("bar_mass", self.bar_mass), ("bar_length", self.bar_length)];
        if let Some(p) = self.payload {
            values.push(("payload mass", p.mass));
            values.push(("payload lever", p.lever));
        }
        for (name, v) in values {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Fault::InvalidParams(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(self.g.is_finite() && self.g > 0.0) {
            return Err(Fault::InvalidParams(format!("g must be > 0, got {}", self.g)));
        }
        Ok(())
    }
}

/// Time to torque lookup with linear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct TorqueTable {
    points: Vec<(f64, f64)>,
}

impl TorqueTable {
    /// `points` must be non-empty with strictly increasing times.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, Fault> {
        if points.is_empty() {
            return Err(Fault::InvalidParams("torque table is empty".into()));
        }
        if points.iter().any(|(t, tau)| !t.is_finite() || !tau.is_finite()) {
            return Err(Fault::InvalidParams("torque table has non-finite entries".into()));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Fault::InvalidParams("torque table times must be strictly increasing".into()));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn start(&self) -> f64 {
        self.points[0].0
    }

    pub fn end(&self) -> f64 {
        self.points[self.points.len() - 1].0
    }

    pub fn torque_at(&self, t: f64) -> Result<f64, Fault> {
        let (start, end) = (self.start(), self.end());
        if !(t >= start && t <= end) {
            return Err(Fault::ScriptedTorqueOutOfRange { t, start, end });
        }
        let i = self.points.partition_point(|&(ti, _)| ti <= t);
        if i == self.points.len() {
            return Ok(self.points[i - 1].1);
        }
        let (t0, y0) = self.points[i - 1];
        let (t1, y1) = self.points[i];
        Ok(y0 + (y1 - y0) * (t - t0) / (t1 - t0))
    }
}

/// External torque source on the load shaft.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum LoadModel {
    #[default]
    None,
    Gravity(Pendulum),
    Scripted(TorqueTable),
}

impl LoadModel {
    /// Inertia the load adds to the main shaft.
    pub fn inertia(&self) -> f64 {
        match self {
            LoadModel::Gravity(p) => p.inertia(),
            LoadModel::None | LoadModel::Scripted(_) => 0.0,
        }
    }

    /// Gravitational potential energy relative to the horizontal, J.
    /// Zero for non-gravity loads.
    pub fn potential_energy(&self, q_main: f64) -> f64 {
        match self {
            LoadModel::Gravity(p) => p.moment() * q_main.sin(),
            LoadModel::None | LoadModel::Scripted(_) => 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), Fault> {
        match self {
            LoadModel::Gravity(p) => p.validate(),
            LoadModel::None | LoadModel::Scripted(_) => Ok(()),
        }
    }
}

pub fn external_torque(load: &LoadModel, q_main: f64, t: f64) -> Result<f64, Fault> {
    match load {
        LoadModel::None => Ok(0.0),
        LoadModel::Gravity(p) => Ok(-p.moment() * q_main.cos()),
        LoadModel::Scripted(table) => table.torque_at(t),
    }
}

/// Shaft accelerations `(q̈_M, q̈_m)` for the state's mode.
///
/// The load-side inertia is `M_motor + M_load` plus whatever the load model
/// carries. In parallel elastic mode the small motor command is ignored and
/// `q̈_m = 0`.
pub fn accelerations(
    state: &ActuatorState,
    cmd: MotorCommand,
    params: &ActuatorParams,
    load: &LoadModel,
) -> Result<(f64, f64), Fault> {
    let delta_l = state.deflection(params);
    if delta_l.abs() > params.max_deflection {
        return Err(Fault::Overdeflection { t: state.t, delta_l, limit: params.max_deflection });
    }
    let spring = params::spring_torques(delta_l, params);
    let tau_ext = external_torque(load, state.q_main, state.t)?;
    let main_inertia = params::equivalent_inertia_load(params) + load.inertia();
    let qdd_main = (cmd.main + spring.on_load + tau_ext) / main_inertia;
    let qdd_adjuster = match state.mode {
        Mode::ParallelElastic => 0.0,
        Mode::VirtualDirectDrive => (cmd.adjuster + spring.on_adjuster) / params::equivalent_inertia_adjuster(params),
    };
    Ok((qdd_main, qdd_adjuster))
}

/// Switch operating mode. Entering parallel elastic mode locks the worm drive,
/// discarding the adjuster's velocity.
pub fn mode_transition(state: ActuatorState, new_mode: Mode) -> ActuatorState {
    match new_mode {
        Mode::ParallelElastic => ActuatorState { mode: new_mode, qd_adjuster: 0.0, ..state },
        Mode::VirtualDirectDrive => ActuatorState { mode: new_mode, ..state },
    }
}

/// One classical RK4 step with `cmd` held constant over the step.
pub fn step_held(
    state: &ActuatorState,
    cmd: MotorCommand,
    params: &ActuatorParams,
    load: &LoadModel,
    dt: f64,
) -> Result<ActuatorState, Fault> {
    debug_assert!(dt > 0.0);
    let locked = state.mode == Mode::ParallelElastic;
    let eval = |s: &ActuatorState| -> Result<[f64; 4], Fault> {
        let (a_main, a_adj) = accelerations(s, cmd, params, load)?;
        Ok([s.qd_main, a_main, s.qd_adjuster, a_adj])
    };
    let offset = |k: &[f64; 4], h: f64| {
        let mut s = *state;
        s.q_main += h * k[0];
        s.qd_main += h * k[1];
        if !locked {
            s.q_adjuster += h * k[2];
            s.qd_adjuster += h * k[3];
        }
        s.t = state.t + h;
        s
    };

    let k1 = eval(state)?;
    let k2 = eval(&offset(&k1, 0.5 * dt))?;
    let k3 = eval(&offset(&k2, 0.5 * dt))?;
    let k4 = eval(&offset(&k3, dt))?;
    let incr = |i: usize| dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

    let mut next = *state;
    next.q_main += incr(0);
    next.qd_main += incr(1);
    if !locked {
        next.q_adjuster += incr(2);
        next.qd_adjuster += incr(3);
    }
    next.t = state.t + dt;

    if !next.is_finite() {
        return Err(Fault::NonFinite { t: next.t });
    }
    let delta_l = next.deflection(params);
    if delta_l.abs() > params.max_deflection {
        return Err(Fault::Overdeflection { t: next.t, delta_l, limit: params.max_deflection });
    }
    Ok(next)
}

/// One step with the command sampled from `controller` at the start of the step.
pub fn step<F>(
    state: &ActuatorState,
    controller: F,
    params: &ActuatorParams,
    load: &LoadModel,
    dt: f64,
) -> Result<ActuatorState, Fault>
where
    F: FnOnce(&ActuatorState) -> MotorCommand,
{
    let cmd = controller(state);
    step_held(state, cmd, params, load, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn unit_params() -> ActuatorParams {
        ActuatorParams { main_rotor_inertia: 0.0, load_inertia: 1.0, ..ActuatorParams::reference() }
    }

    fn vdd_state(q_main: f64, q_adjuster: f64) -> ActuatorState {
        ActuatorState { q_main, qd_main: 0.0, q_adjuster, qd_adjuster: 0.0, mode: Mode::VirtualDirectDrive, t: 0.0 }
    }

    #[test]
    fn external_torque_examples() {
        assert_eq!(external_torque(&LoadModel::None, 1.2, 3.0).unwrap(), 0.0);

        let bar = LoadModel::Gravity(Pendulum::bar(1.9, 0.61, BarMount::End));
        for q in [FRAC_PI_2, -FRAC_PI_2] {
            assert!(external_torque(&bar, q, 0.0).unwrap().abs() < 1e-12);
        }

        let loaded = LoadModel::Gravity(
            Pendulum::bar(1.9, 0.61, BarMount::End).with_payload(Payload { mass: 2.3, lever: 0.61 }),
        );
        let expected = -(1.9 * 9.81 * 0.305 + 2.3 * 9.81 * 0.61) * FRAC_PI_4.cos();
        let tau = external_torque(&loaded, -FRAC_PI_4, 0.0).unwrap();
        assert!((tau - expected).abs() < 1e-12);
        assert!((tau + 13.75).abs() < 5e-3);
    }

    #[test]
    fn centered_bar_has_no_moment() {
        let bar = Pendulum::bar(1.9, 0.61, BarMount::Center);
        assert_eq!(bar.moment(), 0.0);
        assert!((bar.inertia() - 1.9 * 0.61 * 0.61 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn scripted_torque_interpolates_and_faults_outside() {
        let table = TorqueTable::new(vec![(0.0, 0.0), (1.0, 2.0), (3.0, -2.0)]).unwrap();
        let load = LoadModel::Scripted(table);
        assert_eq!(external_torque(&load, 0.0, 0.5).unwrap(), 1.0);
        assert_eq!(external_torque(&load, 0.0, 2.0).unwrap(), 0.0);
        assert_eq!(external_torque(&load, 0.0, 3.0).unwrap(), -2.0);
        assert!(matches!(
            external_torque(&load, 0.0, 3.5),
            Err(Fault::ScriptedTorqueOutOfRange { .. })
        ));
        assert!(TorqueTable::new(vec![(1.0, 0.0), (1.0, 1.0)]).is_err());
        assert!(TorqueTable::new(vec![]).is_err());
    }

    #[test]
    fn acceleration_examples() {
        let p = unit_params();
        let rest = vdd_state(0.0, 0.0);
        assert_eq!(accelerations(&rest, MotorCommand::default(), &p, &LoadModel::None).unwrap(), (0.0, 0.0));

        let pe = ActuatorState { mode: Mode::ParallelElastic, ..vdd_state(0.1, 0.0) };
        let cmd = MotorCommand { main: 0.0, adjuster: 0.5 };
        let (a, b) = accelerations(&pe, cmd, &p, &LoadModel::None).unwrap();
        assert!((a + 2.1).abs() < 1e-12);
        assert_eq!(b, 0.0);

        let cmd = MotorCommand { main: 0.0, adjuster: 0.01 };
        let (a, b) = accelerations(&rest, cmd, &ActuatorParams::reference(), &LoadModel::None).unwrap();
        assert_eq!(a, 0.0);
        assert!((b - 625.0).abs() < 1e-9);
    }

    #[test]
    fn overdeflection_is_a_fault() {
        let p = unit_params();
        let s = vdd_state(p.max_deflection + 0.01, 0.0);
        assert!(matches!(
            accelerations(&s, MotorCommand::default(), &p, &LoadModel::None),
            Err(Fault::Overdeflection { .. })
        ));
    }

    #[test]
    fn rest_is_a_fixed_point() {
        let p = unit_params();
        for mode in [Mode::ParallelElastic, Mode::VirtualDirectDrive] {
            let s = ActuatorState { mode, ..vdd_state(0.3, 18.0) };
            let next = step(&s, |_| MotorCommand::default(), &p, &LoadModel::None, 1e-4).unwrap();
            assert_eq!(next, ActuatorState { t: 1e-4, ..s });
        }
    }

    #[test]
    fn locked_adjuster_never_moves() {
        let p = ActuatorParams::reference();
        let load = LoadModel::Gravity(Pendulum::bar(1.9, 0.61, BarMount::End));
        let mut s = ActuatorState::at_rest(0.2, 0.2, &p);
        s.q_adjuster = 0.123_456_789 * p.ratio;
        let frozen = s.q_adjuster;
        for _ in 0..2000 {
            s = step(&s, |_| MotorCommand { main: 0.7, adjuster: 0.03 }, &p, &load, 1e-4).unwrap();
            assert_eq!(s.q_adjuster.to_bits(), frozen.to_bits());
            assert_eq!(s.qd_adjuster, 0.0);
        }
        assert!(s.q_main != 0.2);
    }

    #[test]
    fn mode_transition_examples() {
        let s = ActuatorState { qd_adjuster: 3.0, qd_main: 0.4, ..vdd_state(0.1, 5.0) };
        let locked = mode_transition(s, Mode::ParallelElastic);
        assert_eq!(locked.qd_adjuster, 0.0);
        assert_eq!((locked.q_main, locked.q_adjuster, locked.qd_main), (s.q_main, s.q_adjuster, s.qd_main));

        let pe = ActuatorState { mode: Mode::ParallelElastic, ..vdd_state(0.1, 5.0) };
        let unlocked = mode_transition(pe, Mode::VirtualDirectDrive);
        assert_eq!(unlocked, ActuatorState { mode: Mode::VirtualDirectDrive, ..pe });
        assert_eq!(mode_transition(pe, Mode::ParallelElastic), pe);
    }

    #[test]
    fn non_finite_command_faults() {
        let p = unit_params();
        let s = vdd_state(0.0, 0.0);
        let r = step(&s, |_| MotorCommand { main: f64::NAN, adjuster: 0.0 }, &p, &LoadModel::None, 1e-4);
        assert!(matches!(r, Err(Fault::NonFinite { .. })));
    }
}
