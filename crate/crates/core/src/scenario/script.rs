//! Scenario scripts: ordered stages of timed phases.
//!
//! Text form, one phase per line, `#` starts a comment:
//!
//! ```text
//! stage hold light payload
//! hold 5
//! attach 2.3 0.2946
//! settle 1e-7
//! detach
//! change_equilibrium_deg 45
//! change_equilibrium 0.785398
//! ```
//!
//! Phases before the first `stage` line go into a stage named `main`.

use std::fmt;
use std::path::Path;

use crate::error::{ConfigError, Fault};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Phase {
    /// Parallel elastic mode with both motors off, s.
    Hold(f64),
    AttachPayload { mass: f64, lever: f64 },
    DetachPayload,
    /// Move the equilibrium to the target angle, rad.
    ChangeEquilibrium(f64),
    /// Parallel elastic mode with the damping trim on until the load's
    /// oscillation velocity envelope falls below the tolerance, rad/s.
    SettleWait(f64),
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::Hold(d) => write!(f, "hold {d}"),
            Phase::AttachPayload { mass, lever } => write!(f, "attach {mass} {lever}"),
            Phase::DetachPayload => f.write_str("detach"),
            Phase::ChangeEquilibrium(q) => write!(f, "change_equilibrium {q}"),
            Phase::SettleWait(tol) => write!(f, "settle {tol}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub name: String,
    pub phases: Vec<Phase>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScenarioScript {
    pub stages: Vec<Stage>,
}

impl ScenarioScript {
    /// Phases in execution order with their stage index.
    pub fn phases(&self) -> impl Iterator<Item = (usize, &Phase)> {
        self.stages.iter().enumerate().flat_map(|(i, s)| s.phases.iter().map(move |p| (i, p)))
    }

    pub fn is_empty(&self) -> bool {
        self.stages.iter().all(|s| s.phases.is_empty())
    }

    /// Checks durations, payload bookkeeping and target range.
    pub fn validate(&self, joint_limit: f64) -> Result<(), Fault> {
        let mut attached = false;
        for (i, (_, phase)) in self.phases().enumerate() {
            let bad = |msg: String| Err(Fault::Script(format!("phase {i} ({phase}): {msg}")));
            match *phase {
                Phase::Hold(d) if !(d.is_finite() && d > 0.0) => return bad("duration must be > 0".into()),
                Phase::SettleWait(tol) if !(tol.is_finite() && tol > 0.0) => return bad("tolerance must be > 0".into()),
                Phase::AttachPayload { .. } if attached => return bad("a payload is already attached".into()),
                Phase::AttachPayload { mass, lever } => {
                    if !(mass.is_finite() && mass >= 0.0 && lever.is_finite() && lever >= 0.0) {
                        return bad("payload mass and lever must be >= 0".into());
                    }
                    attached = true;
                }
                Phase::DetachPayload if !attached => return bad("no payload attached".into()),
                Phase::DetachPayload => attached = false,
                Phase::ChangeEquilibrium(q) if !(q.is_finite() && q.abs() <= joint_limit) => {
                    return bad(format!("target outside joint range ±{joint_limit} rad"));
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut stages: Vec<Stage> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| format!("line {}: {msg}: {raw:?}", lineno + 1);
            let (word, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let rest = rest.trim();
            if word == "stage" {
                if rest.is_empty() {
                    return Err(err("stage needs a name"));
                }
                stages.push(Stage { name: rest.to_string(), phases: Vec::new() });
                continue;
            }
            let nums = rest
                .split_whitespace()
                .map(|s| s.parse::<f64>().map_err(|_| err("expected a number")))
                .collect::<Result<Vec<f64>, String>>()?;
            let arity = |n: usize| if nums.len() == n { Ok(()) } else { Err(err(&format!("expected {n} argument(s)"))) };
            let phase = match word {
                "hold" => arity(1).map(|_| Phase::Hold(nums[0]))?,
                "attach" => arity(2).map(|_| Phase::AttachPayload { mass: nums[0], lever: nums[1] })?,
                "detach" => arity(0).map(|_| Phase::DetachPayload)?,
                "settle" => arity(1).map(|_| Phase::SettleWait(nums[0]))?,
                "change_equilibrium" => arity(1).map(|_| Phase::ChangeEquilibrium(nums[0]))?,
                "change_equilibrium_deg" => arity(1).map(|_| Phase::ChangeEquilibrium(nums[0].to_radians()))?,
                _ => return Err(err("unknown phase")),
            };
            if stages.is_empty() {
                stages.push(Stage { name: "main".into(), phases: Vec::new() });
            }
            stages.last_mut().expect("non-empty").phases.push(phase);
        }
        Ok(Self { stages })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::parse(&text).map_err(|message| ConfigError::Parse { path: path.into(), message })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for stage in &self.stages {
            out.push_str(&format!("stage {}\n", stage.name));
            for phase in &stage.phases {
                out.push_str(&format!("{phase}\n"));
            }
        }
        out
    }
}
