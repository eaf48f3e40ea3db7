//! Run configuration and its file format.
//!
//! Config files are flat `section.key = value` lines with `#` comments, e.g.
//! `actuator.k = 21.0`. Any key left out keeps its reference value. Table
//! headers (`[actuator]`) are accepted too since the format is a TOML subset.

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::control::SupervisorConfig;
use crate::dynamics::{BarMount, LoadModel, Pendulum, TorqueTable, STANDARD_GRAVITY};
use crate::error::ConfigError;
use crate::params::ActuatorParams;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ActuatorParams,
    /// Load without payload; payloads come from the script.
    pub load: LoadModel,
    /// Gains and tolerances; the target is set by each phase.
    pub supervisor: SupervisorConfig,
    /// Main motor damping trim used during settle phases, Nm·s/rad.
    pub settle_damping: f64,
    pub dt: f64,
    /// Keep every n-th telemetry record.
    pub decimation: usize,
    /// Supervisor runs every n-th integrator step, holding its command between.
    pub control_decimation: usize,
    /// Equilibrium at the start of the run, rad.
    pub initial_equilibrium: f64,
    /// Largest equilibrium target magnitude a script may request, rad.
    pub joint_limit: f64,
    /// Multiplies every hold duration.
    pub duration_scale: f64,
    pub settle_timeout: f64,
    pub transition_timeout: f64,
    pub output: Option<PathBuf>,
    /// Reserved; runs are deterministic and do not draw random numbers.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: ActuatorParams::reference(),
            load: LoadModel::None,
            supervisor: SupervisorConfig::default(),
            settle_damping: 0.0,
            dt: 1e-4,
            decimation: 10,
            control_decimation: 1,
            initial_equilibrium: 0.0,
            joint_limit: FRAC_PI_2,
            duration_scale: 1.0,
            settle_timeout: 60.0,
            transition_timeout: 10.0,
            output: None,
            seed: 0,
        }
    }
}

/// Bar used on the test bench: 1.9 kg, 0.61 m, pivoted at its middle.
pub fn reference_bar() -> Pendulum {
    Pendulum { g: STANDARD_GRAVITY, ..Pendulum::bar(1.9, 0.61, BarMount::Center) }
}

impl RunConfig {
    /// Configuration mirroring the bench experiment.
    pub fn reference() -> Self {
        Self {
            load: LoadModel::Gravity(reference_bar()),
            supervisor: SupervisorConfig { kp: 6.0, kd: 1.2, ..SupervisorConfig::default() },
            settle_damping: 3.0,
            initial_equilibrium: -std::f64::consts::FRAC_PI_4,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params.validate()?;
        self.load.validate()?;
        self.supervisor.validate().map_err(ConfigError::Invalid)?;
        if !(self.dt > 0.0 && self.dt <= 1e-2) {
            return Err(ConfigError::Invalid(format!("run.dt must be in (0, 1e-2], got {}", self.dt)));
        }
        if self.decimation < 1 || self.control_decimation < 1 {
            return Err(ConfigError::Invalid("run.decimation and run.control_decimation must be >= 1".into()));
        }
        let positive = [
            ("run.joint_limit", self.joint_limit),
            ("run.duration_scale", self.duration_scale),
            ("run.settle_timeout", self.settle_timeout),
            ("run.transition_timeout", self.transition_timeout),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::Invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.settle_damping.is_finite() && self.settle_damping >= 0.0) {
            return Err(ConfigError::Invalid("supervisor.settle_damping must be >= 0".into()));
        }
        if !(self.initial_equilibrium.is_finite() && self.initial_equilibrium.abs() <= self.joint_limit) {
            return Err(ConfigError::Invalid("run.initial_equilibrium must lie within the joint range".into()));
        }
        Ok(())
    }

    /// Reads a config file on top of the reference configuration.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::parse(&text).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse { path: path.into(), message },
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let file: FileConfig = toml::from_str(text).map_err(|e| ConfigError::Parse { path: PathBuf::new(), message: e.to_string() })?;
        let cfg = file.apply(Self::reference())?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    actuator: ActuatorSection,
    #[serde(default)]
    load: LoadSection,
    #[serde(default)]
    supervisor: SupervisorSection,
    #[serde(default)]
    run: RunSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActuatorSection {
    main_rotor_inertia: Option<f64>,
    load_inertia: Option<f64>,
    adjuster_rotor_inertia: Option<f64>,
    worm_inertia: Option<f64>,
    worm_wheel_inertia: Option<f64>,
    n: Option<f64>,
    k: Option<f64>,
    alpha: Option<f64>,
    main_torque_limit: Option<f64>,
    adjuster_torque_limit: Option<f64>,
    main_torque_constant: Option<f64>,
    adjuster_torque_constant: Option<f64>,
    supply_voltage: Option<f64>,
    max_deflection: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct LoadSection {
    kind: Option<String>,
    bar_mass: Option<f64>,
    bar_length: Option<f64>,
    bar_mount: Option<String>,
    g: Option<f64>,
    table: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SupervisorSection {
    pos_tol: Option<f64>,
    defl_tol: Option<f64>,
    vel_tol: Option<f64>,
    kp: Option<f64>,
    kd: Option<f64>,
    settle_damping: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    dt: Option<f64>,
    decimation: Option<usize>,
    control_decimation: Option<usize>,
    initial_equilibrium: Option<f64>,
    joint_limit: Option<f64>,
    duration_scale: Option<f64>,
    settle_timeout: Option<f64>,
    transition_timeout: Option<f64>,
    output: Option<PathBuf>,
    seed: Option<u64>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl FileConfig {
    fn apply(self, mut cfg: RunConfig) -> Result<RunConfig, ConfigError> {
        let a = self.actuator;
        let p = &mut cfg.params;
        set(&mut p.main_rotor_inertia, a.main_rotor_inertia);
        set(&mut p.load_inertia, a.load_inertia);
        set(&mut p.adjuster_rotor_inertia, a.adjuster_rotor_inertia);
        set(&mut p.worm_inertia, a.worm_inertia);
        set(&mut p.worm_wheel_inertia, a.worm_wheel_inertia);
        set(&mut p.ratio, a.n);
        set(&mut p.stiffness, a.k);
        set(&mut p.alpha, a.alpha);
        set(&mut p.main_torque_limit, a.main_torque_limit);
        set(&mut p.adjuster_torque_limit, a.adjuster_torque_limit);
        set(&mut p.main_torque_constant, a.main_torque_constant);
        set(&mut p.adjuster_torque_constant, a.adjuster_torque_constant);
        set(&mut p.supply_voltage, a.supply_voltage);
        set(&mut p.max_deflection, a.max_deflection);

        cfg.load = self.load.build(&cfg.load)?;

        let s = self.supervisor;
        let sup = &mut cfg.supervisor;
        set(&mut sup.pos_tol, s.pos_tol);
        set(&mut sup.defl_tol, s.defl_tol);
        set(&mut sup.vel_tol, s.vel_tol);
        set(&mut sup.kp, s.kp);
        set(&mut sup.kd, s.kd);
        set(&mut cfg.settle_damping, s.settle_damping);

        let r = self.run;
        set(&mut cfg.dt, r.dt);
        set(&mut cfg.decimation, r.decimation);
        set(&mut cfg.control_decimation, r.control_decimation);
        set(&mut cfg.initial_equilibrium, r.initial_equilibrium);
        set(&mut cfg.joint_limit, r.joint_limit);
        set(&mut cfg.duration_scale, r.duration_scale);
        set(&mut cfg.settle_timeout, r.settle_timeout);
        set(&mut cfg.transition_timeout, r.transition_timeout);
        set(&mut cfg.seed, r.seed);
        if r.output.is_some() {
            cfg.output = r.output;
        }
        Ok(cfg)
    }
}

impl LoadSection {
    fn build(self, base: &LoadModel) -> Result<LoadModel, ConfigError> {
        let kind = match (&self.kind, base) {
            (Some(k), _) => k.as_str(),
            (None, LoadModel::None) => "none",
            (None, LoadModel::Gravity(_)) => "gravity",
            (None, LoadModel::Scripted(_)) => "scripted",
        };
        match kind {
            "none" => Ok(LoadModel::None),
            "gravity" => {
                let mut bar = match base {
                    LoadModel::Gravity(p) => *p,
                    _ => reference_bar(),
                };
                set(&mut bar.bar_mass, self.bar_mass);
                set(&mut bar.bar_length, self.bar_length);
                set(&mut bar.g, self.g);
                if let Some(mount) = self.bar_mount {
                    bar.mount = match mount.as_str() {
                        "end" => BarMount::End,
                        "center" => BarMount::Center,
                        other => return Err(ConfigError::Invalid(format!("load.bar_mount must be \"end\" or \"center\", got {other:?}"))),
                    };
                }
                Ok(LoadModel::Gravity(bar))
            }
            "scripted" => {
                let table = self
                    .table
                    .ok_or_else(|| ConfigError::Invalid("load.kind = \"scripted\" needs load.table".into()))?;
                Ok(LoadModel::Scripted(TorqueTable::new(table.into_iter().map(|[t, tau]| (t, tau)).collect())?))
            }
            other => Err(ConfigError::Invalid(format!("load.kind must be none, gravity or scripted, got {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_reference() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::reference());
    }

    #[test]
    fn shipped_reference_file_matches_code() {
        let text = include_str!("../../configs/reference.conf");
        assert_eq!(RunConfig::parse(text).unwrap(), RunConfig::reference());
    }

    #[test]
    fn dotted_keys_override() {
        let cfg = RunConfig::parse(
            "# stiffer spring\nactuator.k = 30\nactuator.n = 40.0\nload.bar_mount = \"end\"\nrun.decimation = 1\nsupervisor.kp = 12.5\n",
        )
        .unwrap();
        assert_eq!(cfg.params.stiffness, 30.0);
        assert_eq!(cfg.params.ratio, 40.0);
        assert_eq!(cfg.decimation, 1);
        assert_eq!(cfg.supervisor.kp, 12.5);
        assert!(matches!(cfg.load, LoadModel::Gravity(p) if p.mount == BarMount::End));
    }

    #[test]
    fn scripted_and_none_loads() {
        let cfg = RunConfig::parse("load.kind = \"scripted\"\nload.table = [[0.0, 1.0], [2.0, -1.0]]\n").unwrap();
        assert!(matches!(&cfg.load, LoadModel::Scripted(t) if t.points().len() == 2));
        let cfg = RunConfig::parse("load.kind = \"none\"").unwrap();
        assert_eq!(cfg.load, LoadModel::None);
    }

    #[test]
    fn rejects_bad_files() {
        for bad in [
            "actuator.k = -1",
            "actuator.bogus = 1",
            "run.dt = 0.5",
            "run.decimation = 0",
            "load.kind = \"spring\"",
            "load.kind = \"scripted\"",
            "load.bar_mount = \"side\"",
            "actuator.k = ",
            "supervisor.kp = 0",
        ] {
            assert!(RunConfig::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(RunConfig::load(Path::new("/nonexistent/x.conf")), Err(ConfigError::Io { .. })));
    }
}
