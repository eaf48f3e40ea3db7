//! Phase-by-phase scenario execution with telemetry and energy accounting.

use crate::control::{self, SupervisorConfig};
use crate::dynamics::{self, ActuatorState, LoadModel, Mode, MotorCommand, Payload};
use crate::error::Fault;
use crate::params::{self, ActuatorParams};
use crate::telemetry::{self, TelemetryRecord};

use super::config::RunConfig;
use super::script::{Phase, ScenarioScript};
use super::statics;

/// Per-phase statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSummary {
    pub index: usize,
    pub stage: usize,
    pub phase: Phase,
    pub t_start: f64,
    pub t_end: f64,
    pub max_abs_deflection: f64,
    pub max_abs_spring_torque: f64,
    pub max_abs_tau_main: f64,
    pub max_abs_tau_adjuster: f64,
    pub max_p_main_elec: f64,
    pub max_p_adjuster_elec: f64,
    /// Electrical energy drawn during the phase, J.
    pub e_main: f64,
    pub e_adjuster: f64,
    /// Time from the start of an equilibrium change until the worm drive locks.
    pub transition_duration: Option<f64>,
    pub final_q_eq: f64,
    pub final_q_main: f64,
    /// Spring torque `k·Δl` at the end of the phase.
    pub final_spring_torque: f64,
    /// External torque on the load at the end of the phase.
    pub final_external_torque: f64,
    /// Mean power a springless drive would need over the phase's records.
    pub counterfactual_power: Option<f64>,
    /// Samples whose spring-nulling torque hit the small motor limit.
    pub adjuster_saturated_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Summary {
    pub phases: Vec<PhaseSummary>,
    pub e_main: f64,
    pub e_adjuster: f64,
    /// Work done on the system by both motors and the external load,
    /// including energy changes at discrete events (locking, payload changes).
    pub work: f64,
    /// Change of kinetic plus spring energy over the run.
    pub energy_change: f64,
    /// `|work − energy_change|`.
    pub energy_residual: f64,
    pub final_state: Option<ActuatorState>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub records: Vec<TelemetryRecord>,
    pub summary: Summary,
}

/// Stepwise simulation driven by the supervisor. [`run_scenario`] uses it to
/// execute scripts; tests use it to inject disturbances between phases.
#[derive(Debug, Clone)]
pub struct Simulation {
    cfg: RunConfig,
    load: LoadModel,
    state: ActuatorState,
    cmd: MotorCommand,
    last: Option<TelemetryRecord>,
    records: Vec<TelemetryRecord>,
    steps: u64,
    work: f64,
    initial_energy: f64,
    /// Electrical energy at the first record of each started phase.
    phase_start_energy: Vec<Option<(f64, f64)>>,
    pending_starts: Vec<usize>,
}

/// Per-step statistics gathered while a phase runs.
#[derive(Debug, Default)]
struct PhaseStats {
    max_defl: f64,
    max_spring: f64,
    max_main: f64,
    max_adj: f64,
    max_p_main: f64,
    max_p_adj: f64,
    saturated: usize,
}

impl Simulation {
    /// Starts at rest in parallel elastic mode at the configured equilibrium,
    /// with the load at its static rest angle.
    pub fn new(cfg: RunConfig) -> Result<Self, Fault> {
        cfg.params.validate()?;
        cfg.load.validate()?;
        let q_eq = cfg.initial_equilibrium;
        let q_main = statics::static_equilibrium_solve(&cfg.params, &cfg.load, q_eq)?;
        let state = ActuatorState::at_rest(q_main, q_eq, &cfg.params);
        Ok(Self::from_state(cfg, state))
    }

    pub fn from_state(mut cfg: RunConfig, state: ActuatorState) -> Self {
        cfg.supervisor.control_period = cfg.dt * cfg.control_decimation as f64;
        let load = cfg.load.clone();
        let initial_energy = stored_energy(&state, &cfg.params, &load);
        Self {
            cfg,
            load,
            state,
            cmd: MotorCommand::default(),
            last: None,
            records: Vec::new(),
            steps: 0,
            work: 0.0,
            initial_energy,
            phase_start_energy: Vec::new(),
            pending_starts: Vec::new(),
        }
    }

    pub fn state(&self) -> &ActuatorState {
        &self.state
    }

    pub fn load(&self) -> &LoadModel {
        &self.load
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn records(&self) -> &[TelemetryRecord] {
        &self.records
    }

    /// Latest record at full rate, including ones dropped by decimation.
    pub fn last_record(&self) -> Option<&TelemetryRecord> {
        self.last.as_ref()
    }

    /// Work done on the system so far, event jumps included.
    pub fn work(&self) -> f64 {
        self.work
    }

    pub fn energy_change(&self) -> f64 {
        stored_energy(&self.state, &self.cfg.params, &self.load) - self.initial_energy
    }

    pub fn into_records(self) -> Vec<TelemetryRecord> {
        self.records
    }

    /// Replaces the state, charging the energy difference as event work.
    fn jump_to(&mut self, next: ActuatorState) {
        let before = stored_energy(&self.state, &self.cfg.params, &self.load);
        self.state = next;
        self.work += stored_energy(&self.state, &self.cfg.params, &self.load) - before;
    }

    fn set_load(&mut self, load: LoadModel) {
        let before = stored_energy(&self.state, &self.cfg.params, &self.load);
        self.load = load;
        self.work += stored_energy(&self.state, &self.cfg.params, &self.load) - before;
    }

    /// Angular impulse on the load shaft, Nm·s.
    pub fn apply_load_impulse(&mut self, impulse: f64) {
        let inertia = params::equivalent_inertia_load(&self.cfg.params) + self.load.inertia();
        let next = ActuatorState { qd_main: self.state.qd_main + impulse / inertia, ..self.state };
        self.jump_to(next);
    }

    pub fn attach_payload(&mut self, payload: Payload) -> Result<(), Fault> {
        match &self.load {
            LoadModel::Gravity(p) if p.payload.is_none() => {
                let load = LoadModel::Gravity(p.with_payload(payload));
                load.validate()?;
                self.set_load(load);
                Ok(())
            }
            LoadModel::Gravity(_) => Err(Fault::Script("a payload is already attached".into())),
            _ => Err(Fault::Script("payloads need a gravity load".into())),
        }
    }

    pub fn detach_payload(&mut self) -> Result<(), Fault> {
        match &self.load {
            LoadModel::Gravity(p) if p.payload.is_some() => {
                let load = LoadModel::Gravity(dynamics::Pendulum { payload: None, ..*p });
                self.set_load(load);
                Ok(())
            }
            _ => Err(Fault::Script("no payload attached".into())),
        }
    }

    /// One control sample (if due) plus one integrator step. Returns the mode
    /// the supervisor asked for on this step.
    fn advance(&mut self, sup: &SupervisorConfig, stats: &mut PhaseStats) -> Result<Mode, Fault> {
        let params = self.cfg.params;
        if self.steps.is_multiple_of(self.cfg.control_decimation as u64) {
            let out = control::supervisor_step(&self.state, sup, &params, &self.load);
            if out.mode != self.state.mode {
                self.jump_to(dynamics::mode_transition(self.state, out.mode));
            }
            self.cmd = out.cmd;
            if out.adjuster_saturated {
                stats.saturated += 1;
            }
        }
        if self.state.mode == Mode::ParallelElastic {
            self.cmd.adjuster = control::pe_command();
        }
        self.record()?;

        let r = self.last.as_ref().expect("recorded");
        stats.max_defl = stats.max_defl.max(r.delta_l.abs());
        stats.max_spring = stats.max_spring.max(r.tau_spring.abs());
        stats.max_main = stats.max_main.max(r.tau_main_cmd.abs());
        stats.max_adj = stats.max_adj.max(r.tau_adjuster_cmd.abs());
        stats.max_p_main = stats.max_p_main.max(r.p_main_elec);
        stats.max_p_adj = stats.max_p_adj.max(r.p_adjuster_elec);

        let p0 = self.power(&self.state)?;
        let next = dynamics::step_held(&self.state, self.cmd, &params, &self.load, self.cfg.dt)?;
        let p1 = self.power(&next)?;
        self.work += 0.5 * self.cfg.dt * (p0 + p1);
        self.state = next;
        self.steps += 1;
        Ok(self.state.mode)
    }

    /// Power delivered into the system by the held command and the load.
    fn power(&self, s: &ActuatorState) -> Result<f64, Fault> {
        let tau_ext = dynamics::external_torque(&self.load, s.q_main, s.t)?;
        let adj = match s.mode {
            Mode::ParallelElastic => 0.0,
            Mode::VirtualDirectDrive => self.cmd.adjuster * s.qd_adjuster,
        };
        Ok((self.cmd.main + tau_ext) * s.qd_main + adj)
    }

    fn record(&mut self) -> Result<(), Fault> {
        let params = &self.cfg.params;
        let rec = match &self.last {
            None => TelemetryRecord::initial(&self.state, self.cmd, params)?,
            Some(prev) => prev.accumulate(&self.state, self.cmd, params, self.state.t - prev.t)?,
        };
        if self.steps.is_multiple_of(self.cfg.decimation as u64) {
            self.records.push(rec);
        }
        self.mark_phase_starts(&rec);
        self.last = Some(rec);
        Ok(())
    }

    fn mark_phase_starts(&mut self, rec: &TelemetryRecord) {
        for i in self.pending_starts.drain(..) {
            self.phase_start_energy[i] = Some((rec.e_main, rec.e_adjuster));
        }
    }

    fn hold_config(&self, damping: f64) -> SupervisorConfig {
        SupervisorConfig { q_eq_target: self.state.equilibrium(&self.cfg.params), pe_damping: damping, ..self.cfg.supervisor }
    }

    fn steps_for(&self, duration: f64) -> u64 {
        (duration / self.cfg.dt).round().max(1.0) as u64
    }

    /// Parallel elastic mode, both motors off.
    pub fn hold(&mut self, duration: f64) -> Result<(), Fault> {
        self.hold_inner(duration, &mut PhaseStats::default())
    }

    fn hold_inner(&mut self, duration: f64, stats: &mut PhaseStats) -> Result<(), Fault> {
        let sup = self.hold_config(0.0);
        for _ in 0..self.steps_for(duration) {
            self.advance(&sup, stats)?;
        }
        Ok(())
    }

    /// Oscillation velocity envelope `sqrt(q̇² + (q̈/ω)²)` of the load with the
    /// motors off, where `ω = sqrt(k/M)`.
    pub fn settle_metric(&self) -> Result<f64, Fault> {
        let params = &self.cfg.params;
        let locked = ActuatorState { mode: Mode::ParallelElastic, qd_adjuster: 0.0, ..self.state };
        let (qdd, _) = dynamics::accelerations(&locked, MotorCommand::default(), params, &self.load)?;
        let inertia = params::equivalent_inertia_load(params) + self.load.inertia();
        let omega = (params.stiffness / inertia).sqrt();
        Ok(self.state.qd_main.hypot(qdd / omega))
    }

    /// Damping trim on until the settle metric drops below `tol`.
    pub fn settle(&mut self, tol: f64) -> Result<(), Fault> {
        self.settle_inner(tol, &mut PhaseStats::default())
    }

    fn settle_inner(&mut self, tol: f64, stats: &mut PhaseStats) -> Result<(), Fault> {
        let sup = self.hold_config(self.cfg.settle_damping);
        let limit = self.steps_for(self.cfg.settle_timeout);
        for _ in 0..limit {
            if self.settle_metric()? <= tol {
                return Ok(());
            }
            self.advance(&sup, stats)?;
        }
        if self.settle_metric()? <= tol {
            return Ok(());
        }
        Err(Fault::Timeout { what: "settle", limit: self.cfg.settle_timeout })
    }

    /// Moves the equilibrium to `target`; returns the time until the worm drive
    /// locked again.
    pub fn change_equilibrium(&mut self, target: f64) -> Result<f64, Fault> {
        self.change_inner(target, &mut PhaseStats::default())
    }

    fn change_inner(&mut self, target: f64, stats: &mut PhaseStats) -> Result<f64, Fault> {
        let sup = SupervisorConfig { q_eq_target: target, pe_damping: 0.0, ..self.cfg.supervisor };
        let t0 = self.state.t;
        let limit = self.steps_for(self.cfg.transition_timeout);
        let mut engaged = false;
        for _ in 0..limit {
            let out = control::supervisor_step(&self.state, &sup, &self.cfg.params, &self.load);
            if out.mode == Mode::ParallelElastic && (engaged || self.state.mode == Mode::ParallelElastic) {
                if self.state.mode != Mode::ParallelElastic {
                    self.jump_to(dynamics::mode_transition(self.state, Mode::ParallelElastic));
                }
                self.cmd = out.cmd;
                return Ok(self.state.t - t0);
            }
            engaged = true;
            self.advance(&sup, stats)?;
        }
        Err(Fault::Timeout { what: "equilibrium change", limit: self.cfg.transition_timeout })
    }

    /// Emits the closing record at the current state.
    fn finish(&mut self) -> Result<(), Fault> {
        self.cmd = MotorCommand {
            main: control::saturate(0.0, self.cfg.params.main_torque_limit),
            adjuster: control::pe_command(),
        };
        let params = &self.cfg.params;
        let rec = match &self.last {
            None => TelemetryRecord::initial(&self.state, self.cmd, params)?,
            Some(prev) if self.state.t > prev.t => prev.accumulate(&self.state, self.cmd, params, self.state.t - prev.t)?,
            Some(prev) => *prev,
        };
        if self.records.last().is_none_or(|r| r.t < rec.t) {
            self.records.push(rec);
        }
        self.mark_phase_starts(&rec);
        self.last = Some(rec);
        Ok(())
    }

    fn energies(&self) -> (f64, f64) {
        self.last.map_or((0.0, 0.0), |r| (r.e_main, r.e_adjuster))
    }

    /// Runs one script phase and returns its statistics. Energies are filled
    /// in by [`run_scenario`] once the next phase has produced its first record.
    fn run_phase(&mut self, index: usize, stage: usize, phase: Phase) -> Result<PhaseSummary, Fault> {
        let t_start = self.state.t;
        self.phase_start_energy.push(None);
        self.pending_starts.push(index);
        let first_record = self.records.len();
        let mut stats = PhaseStats::default();
        let mut transition_duration = None;

        match phase {
            Phase::Hold(d) => self.hold_inner(d * self.cfg.duration_scale, &mut stats)?,
            Phase::AttachPayload { mass, lever } => self.attach_payload(Payload { mass, lever })?,
            Phase::DetachPayload => self.detach_payload()?,
            Phase::SettleWait(tol) => self.settle_inner(tol, &mut stats)?,
            Phase::ChangeEquilibrium(target) => transition_duration = Some(self.change_inner(target, &mut stats)?),
        }

        let params = &self.cfg.params;
        let delta_l = self.state.deflection(params);
        if self.state.t > t_start {
            stats.max_defl = stats.max_defl.max(delta_l.abs());
            stats.max_spring = stats.max_spring.max((params.stiffness * delta_l).abs());
        }
        let counterfactual = match phase {
            Phase::Hold(_) if self.records.len() > first_record => {
                let trace = telemetry::direct_drive_counterfactual(&self.records[first_record..], params, &self.load)?;
                Some(trace.iter().sum::<f64>() / trace.len() as f64)
            }
            _ => None,
        };
        Ok(PhaseSummary {
            index,
            stage,
            phase,
            t_start,
            t_end: self.state.t,
            max_abs_deflection: stats.max_defl,
            max_abs_spring_torque: stats.max_spring,
            max_abs_tau_main: stats.max_main,
            max_abs_tau_adjuster: stats.max_adj,
            max_p_main_elec: stats.max_p_main,
            max_p_adjuster_elec: stats.max_p_adj,
            e_main: 0.0,
            e_adjuster: 0.0,
            transition_duration,
            final_q_eq: self.state.equilibrium(params),
            final_q_main: self.state.q_main,
            final_spring_torque: params.stiffness * delta_l,
            final_external_torque: dynamics::external_torque(&self.load, self.state.q_main, self.state.t)?,
            counterfactual_power: counterfactual,
            adjuster_saturated_samples: stats.saturated,
        })
    }
}

/// Kinetic energy of both shafts plus spring energy. Gravity is accounted for
/// as external work.
pub fn stored_energy(state: &ActuatorState, params: &ActuatorParams, load: &LoadModel) -> f64 {
    let big = params::equivalent_inertia_load(params) + load.inertia();
    let small = params::equivalent_inertia_adjuster(params);
    0.5 * big * state.qd_main * state.qd_main
        + 0.5 * small * state.qd_adjuster * state.qd_adjuster
        + params::spring_energy(state.deflection(params), params)
}

/// Executes `script` phase by phase.
pub fn run_scenario(script: &ScenarioScript, cfg: &RunConfig) -> Result<RunOutput, Fault> {
    script.validate(cfg.joint_limit)?;
    if script.is_empty() {
        return Ok(RunOutput { records: Vec::new(), summary: Summary::default() });
    }
    let mut sim = Simulation::new(cfg.clone())?;
    let mut phases = Vec::new();
    for (index, (stage, phase)) in script.phases().enumerate() {
        let summary = sim
            .run_phase(index, stage, *phase)
            .map_err(|e| Fault::Phase { index, phase: phase.to_string(), source: Box::new(e) })?;
        phases.push(summary);
    }
    sim.finish()?;

    let (e_main, e_adjuster) = sim.energies();
    let starts: Vec<(f64, f64)> = sim.phase_start_energy.iter().map(|e| e.unwrap_or((e_main, e_adjuster))).collect();
    for (i, p) in phases.iter_mut().enumerate() {
        let (m0, a0) = starts[i];
        let (m1, a1) = starts.get(i + 1).copied().unwrap_or((e_main, e_adjuster));
        p.e_main = m1 - m0;
        p.e_adjuster = a1 - a0;
    }
    let energy_change = sim.energy_change();
    let summary = Summary {
        phases,
        e_main,
        e_adjuster,
        work: sim.work,
        energy_change,
        energy_residual: (sim.work - energy_change).abs(),
        final_state: Some(sim.state),
    };
    Ok(RunOutput { records: sim.into_records(), summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::script::Stage;

    fn script(phases: Vec<Phase>) -> ScenarioScript {
        ScenarioScript { stages: vec![Stage { name: "t".into(), phases }] }
    }

    #[test]
    fn empty_script_gives_empty_stream() {
        let out = run_scenario(&ScenarioScript::default(), &RunConfig::reference()).unwrap();
        assert!(out.records.is_empty());
        assert_eq!(out.summary.e_main, 0.0);
        assert_eq!(out.summary.e_adjuster, 0.0);
        assert!(out.summary.phases.is_empty());
    }

    #[test]
    fn hold_records_at_decimated_rate() {
        let cfg = RunConfig { decimation: 10, ..RunConfig::reference() };
        let out = run_scenario(&script(vec![Phase::Hold(0.1)]), &cfg).unwrap();
        // 1000 steps, every 10th kept, plus the closing record.
        assert_eq!(out.records.len(), 101);
        assert!(out.records.iter().all(|r| r.p_main_elec == 0.0 && r.p_adjuster_elec == 0.0));
    }

    #[test]
    fn faults_carry_phase_index() {
        let cfg = RunConfig { load: LoadModel::None, ..RunConfig::reference() };
        let err = run_scenario(&script(vec![Phase::Hold(0.01), Phase::AttachPayload { mass: 1.0, lever: 0.1 }]), &cfg).unwrap_err();
        assert!(matches!(err, Fault::Phase { index: 1, .. }), "{err}");
    }

    #[test]
    fn settle_without_damping_times_out() {
        let cfg = RunConfig { settle_damping: 0.0, settle_timeout: 0.5, ..RunConfig::reference() };
        let err = run_scenario(
            &script(vec![Phase::AttachPayload { mass: 2.3, lever: 0.3 }, Phase::SettleWait(1e-6)]),
            &cfg,
        )
        .unwrap_err();
        assert!(matches!(err, Fault::Phase { source, .. } if matches!(*source, Fault::Timeout { .. })));
    }

    #[test]
    fn change_to_current_equilibrium_is_immediate() {
        let cfg = RunConfig::reference();
        let out = run_scenario(&script(vec![Phase::ChangeEquilibrium(cfg.initial_equilibrium)]), &cfg).unwrap();
        assert_eq!(out.summary.phases[0].transition_duration, Some(0.0));
    }
}
