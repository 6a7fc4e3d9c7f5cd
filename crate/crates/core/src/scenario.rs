//! Declarative experiment description, read from TOML.
//!
//! The shipped reference file is embedded as [`REFERENCE_SCENARIO`]; see
//! `scenarios/paper_scenario.toml` for the annotated layout.

use std::path::Path;

use nalgebra::DVector;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::modal::{ActuatorPiece, ActuatorShape, ModalSystem, SensorConfig};
use crate::observer::{uniform_grid, ErrorState};
use crate::spectral::{BeamParams, Mode};

pub const REFERENCE_SCENARIO: &str = include_str!("../scenarios/paper_scenario.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    Exponential,
    Rk4,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// `Delta_j(0) = delta_j(0) = 1 / (j omega_j)`.
    Harmonic,
    Explicit { xi: Vec<f64>, eta: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub gains: Vec<f64>,
    pub n_modes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub beam: BeamParams,
    pub sensors: SensorConfig,
    pub actuators: Vec<ActuatorShape>,
    /// Length 1 (broadcast to every output) or one per output.
    pub gains: Vec<f64>,
    pub n_modes: usize,
    pub initial: InitialCondition,
    pub t_end: f64,
    pub samples: usize,
    pub integrator: Integrator,
    pub sweep: Option<Sweep>,
    pub lambdas: Vec<f64>,
    pub check_modes: usize,
    pub tail_probe: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    beam: RawBeam,
    sensors: RawSensors,
    #[serde(default)]
    actuators: Vec<RawActuator>,
    observer: RawObserver,
    #[serde(default)]
    initial: RawInitial,
    time: RawTime,
    sweep: Option<RawSweep>,
    #[serde(default)]
    resolvent: RawResolvent,
    #[serde(default)]
    check: RawCheck,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBeam {
    rho: f64,
    ei: f64,
    mass: f64,
    spring: f64,
    length: f64,
    attach: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSensors {
    #[serde(default = "yes")]
    body_output: bool,
    #[serde(default)]
    positions: Vec<f64>,
}

fn yes() -> bool {
    true
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawActuator {
    pieces: Vec<RawPiece>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPiece {
    start: f64,
    end: f64,
    #[serde(default = "one")]
    amplitude: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObserver {
    n_modes: usize,
    gains: Vec<f64>,
}

#[derive(Deserialize, Default, PartialEq)]
#[serde(rename_all = "lowercase")]
enum RawRule {
    #[default]
    Harmonic,
    Explicit,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    #[serde(default)]
    rule: RawRule,
    xi: Option<Vec<f64>>,
    eta: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    t_end: f64,
    samples: usize,
    #[serde(default = "exponential")]
    integrator: Integrator,
}

fn exponential() -> Integrator {
    Integrator::Exponential
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    gains: Vec<f64>,
    n_modes: Vec<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawResolvent {
    lambdas: Vec<f64>,
}

impl Default for RawResolvent {
    fn default() -> Self {
        RawResolvent {
            lambdas: crate::resolvent::DEFAULT_LAMBDAS.to_vec(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCheck {
    n_modes: usize,
    tail_probe: usize,
}

impl Default for RawCheck {
    fn default() -> Self {
        RawCheck {
            n_modes: 40,
            tail_probe: 20,
        }
    }
}

fn field(name: &str, reason: impl std::fmt::Display) -> Error {
    Error::Config(format!("{name}: {reason}"))
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(field(name, format!("must be finite and > 0, got {v}")))
    }
}

fn all_positive(name: &str, vs: &[f64]) -> Result<()> {
    if vs.is_empty() {
        return Err(field(name, "must not be empty"));
    }
    vs.iter()
        .enumerate()
        .try_for_each(|(i, &v)| positive(&format!("{name}[{i}]"), v))
}

impl Scenario {
    /// The embedded reference scenario.
    pub fn reference() -> Self {
        Self::from_toml_str(REFERENCE_SCENARIO).expect("embedded scenario is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| e.context(format!("in {}", path.display())))
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let b = raw.beam;
        let beam = BeamParams {
            rho: b.rho,
            ei: b.ei,
            mass: b.mass,
            spring: b.spring,
            length: b.length,
            attach: b.attach,
        };
        let initial = match raw.initial.rule {
            RawRule::Harmonic => {
                if raw.initial.xi.is_some() || raw.initial.eta.is_some() {
                    return Err(field("initial", "xi/eta are only allowed with rule = \"explicit\""));
                }
                InitialCondition::Harmonic
            }
            RawRule::Explicit => InitialCondition::Explicit {
                xi: raw.initial.xi.ok_or_else(|| field("initial.xi", "required for rule = \"explicit\""))?,
                eta: raw
                    .initial
                    .eta
                    .ok_or_else(|| field("initial.eta", "required for rule = \"explicit\""))?,
            },
        };
        let scenario = Scenario {
            beam,
            sensors: SensorConfig {
                body_output: raw.sensors.body_output,
                positions: raw.sensors.positions,
            },
            actuators: raw
                .actuators
                .into_iter()
                .map(|a| {
                    ActuatorShape::new(
                        a.pieces
                            .into_iter()
                            .map(|p| ActuatorPiece {
                                start: p.start,
                                end: p.end,
                                amplitude: p.amplitude,
                            })
                            .collect(),
                    )
                })
                .collect(),
            gains: raw.observer.gains,
            n_modes: raw.observer.n_modes,
            initial,
            t_end: raw.time.t_end,
            samples: raw.time.samples,
            integrator: raw.time.integrator,
            sweep: raw.sweep.map(|s| Sweep {
                gains: s.gains,
                n_modes: s.n_modes,
            }),
            lambdas: raw.resolvent.lambdas,
            check_modes: raw.check.n_modes,
            tail_probe: raw.check.tail_probe,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Field-level validation; messages name the offending key.
    pub fn validate(&self) -> Result<()> {
        self.beam.validate().map_err(|e| field("beam", e))?;
        self.sensors.validate(&self.beam).map_err(|e| field("sensors", e))?;
        for (i, a) in self.actuators.iter().enumerate() {
            a.validate(&self.beam).map_err(|e| field(&format!("actuators[{i}]"), e))?;
        }
        all_positive("observer.gains", &self.gains)?;
        let r = self.sensors.output_count();
        if self.gains.len() != 1 && self.gains.len() != r {
            return Err(field(
                "observer.gains",
                format!("{} values for {r} outputs; give 1 or {r}", self.gains.len()),
            ));
        }
        if self.n_modes == 0 {
            return Err(field("observer.n_modes", "must be >= 1"));
        }
        if let InitialCondition::Explicit { xi, eta } = &self.initial {
            for (name, v) in [("initial.xi", xi), ("initial.eta", eta)] {
                if v.len() != self.n_modes {
                    return Err(field(name, format!("{} entries for n_modes = {}", v.len(), self.n_modes)));
                }
                if let Some(i) = v.iter().position(|x| !x.is_finite()) {
                    return Err(field(&format!("{name}[{i}]"), "not finite"));
                }
            }
        }
        positive("time.t_end", self.t_end)?;
        if self.samples < 2 {
            return Err(field("time.samples", format!("must be >= 2, got {}", self.samples)));
        }
        if let Some(s) = &self.sweep {
            all_positive("sweep.gains", &s.gains)?;
            if s.n_modes.is_empty() {
                return Err(field("sweep.n_modes", "must not be empty"));
            }
            if s.n_modes.contains(&0) {
                return Err(field("sweep.n_modes", "entries must be >= 1"));
            }
        }
        all_positive("resolvent.lambdas", &self.lambdas)?;
        if self.check_modes < 2 {
            return Err(field("check.n_modes", "must be >= 2"));
        }
        if self.tail_probe < 2 {
            return Err(field("check.tail_probe", "must be >= 2"));
        }
        Ok(())
    }

    /// Per-output gains, broadcasting a single value.
    pub fn resolved_gains(&self) -> Vec<f64> {
        let r = self.sensors.output_count();
        if self.gains.len() == 1 {
            vec![self.gains[0]; r]
        } else {
            self.gains.clone()
        }
    }

    /// Drops the body-displacement output row (`r = 4` on the reference layout).
    pub fn curvature_only(mut self) -> Result<Self> {
        let broadcast = self.gains.len() == 1;
        if self.sensors.body_output && !broadcast {
            self.gains.remove(0);
        }
        self.sensors.body_output = false;
        self.validate()?;
        Ok(self)
    }

    pub fn system(&self) -> Result<(Vec<Mode>, ModalSystem)> {
        self.system_with(self.n_modes, self.resolved_gains())
    }

    pub fn system_with(&self, n_modes: usize, gains: Vec<f64>) -> Result<(Vec<Mode>, ModalSystem)> {
        ModalSystem::assemble(&self.beam, n_modes, &self.sensors, &self.actuators, gains)
            .map_err(|e| e.context(format!("assembling the {n_modes}-mode system")))
    }

    pub fn initial_error(&self, omegas: &DVector<f64>) -> Result<ErrorState> {
        match &self.initial {
            InitialCondition::Harmonic => Ok(ErrorState::harmonic_initial(omegas)),
            InitialCondition::Explicit { xi, eta } => {
                if xi.len() != omegas.len() {
                    return Err(field(
                        "initial",
                        format!("explicit data has {} entries, system has {} modes", xi.len(), omegas.len()),
                    ));
                }
                ErrorState::new(DVector::from_column_slice(xi), DVector::from_column_slice(eta))
            }
        }
    }

    pub fn time_grid(&self) -> Vec<f64> {
        uniform_grid(self.t_end, self.samples)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_scenario_parses() {
        let s = Scenario::reference();
        assert_eq!(s.sensors.output_count(), 5);
        assert_eq!(s.resolved_gains(), vec![6.0; 5]);
        assert_eq!(s.sweep.as_ref().unwrap().n_modes, vec![6, 16, 40]);
        assert_eq!(s.samples, 2000);
    }

    #[test]
    fn curvature_only_has_four_outputs() {
        let s = Scenario::reference().curvature_only().unwrap();
        assert_eq!(s.sensors.output_count(), 4);
        assert_eq!(s.resolved_gains().len(), 4);
    }

    fn edited(from: &str, to: &str) -> Result<Scenario> {
        assert!(REFERENCE_SCENARIO.contains(from));
        Scenario::from_toml_str(&REFERENCE_SCENARIO.replacen(from, to, 1))
    }

    fn message(r: Result<Scenario>) -> String {
        r.expect_err("should be rejected").to_string()
    }

    #[test]
    fn errors_name_the_field() {
        assert!(message(edited("rho = 0.518", "rho = -1.0")).contains("beam"));
        assert!(message(edited("positions = [0.075", "positions = [0.0")).contains("sensors"));
        assert!(message(edited("gains = [6.0]", "gains = [6.0, 1.0]")).contains("observer.gains"));
        assert!(message(edited("samples = 2000", "samples = 1")).contains("time.samples"));
        assert!(message(edited("n_modes = [6, 16, 40]", "n_modes = []")).contains("sweep.n_modes"));
        assert!(message(edited("start = 0.2", "start = 1.3")).contains("actuators[0]"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(message(edited("[time]", "[time]\nstep = 1.0")).contains("step"));
    }

    #[test]
    fn explicit_initial_data_must_match_truncation() {
        let r = edited("rule = \"harmonic\"", "rule = \"explicit\"\nxi = [1.0]\neta = [1.0]");
        assert!(message(r).contains("initial.xi"));
        let s = edited(
            "rule = \"harmonic\"",
            "rule = \"explicit\"\nxi = [1.0, 0, 0, 0, 0, 0]\neta = [0.0, 0, 0, 0, 0, 2]",
        )
        .unwrap();
        let e = s.initial_error(&DVector::from_element(6, 1.0)).unwrap();
        assert_eq!(e.eta[5], 2.0);
    }
}
