use crate::control::Setpoint;
use crate::error::{ensure_positive, Error, Result};

use super::mscc_math::stage_currents;

/// Slack used when comparing elapsed time against pulse-window edges, so a
/// step landing a rounding error short of an edge is not assigned to the
/// previous window.
const WINDOW_EPS: f64 = 1e-9;

pub const DEFAULT_DEBOUNCE_STEPS: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcCvConfig {
    pub i_cc: f64,
    pub v_max: f64,
    pub i_cutoff: f64,
    pub debounce_steps: u32,
}

impl CcCvConfig {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("strategies.cccv.i_cutoff", self.i_cutoff)?;
        ensure_positive("strategies.cccv.v_max", self.v_max)?;
        if !(self.i_cc > self.i_cutoff) {
            return Err(Error::invalid(
                "strategies.cccv.i_cc",
                format!("must exceed i_cutoff ({} <= {})", self.i_cc, self.i_cutoff),
            ));
        }
        check_debounce("strategies.cccv.debounce_steps", self.debounce_steps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsccConfig {
    pub i_first: f64,
    pub i_last: f64,
    pub n_stages: usize,
    pub v_threshold: f64,
    pub debounce_steps: u32,
}

impl MsccConfig {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("strategies.mscc.i_last", self.i_last)?;
        ensure_positive("strategies.mscc.v_threshold", self.v_threshold)?;
        if !(self.i_first > self.i_last) {
            return Err(Error::invalid(
                "strategies.mscc.i_first",
                format!("must exceed i_last ({} <= {})", self.i_first, self.i_last),
            ));
        }
        if self.n_stages < 2 {
            return Err(Error::invalid("strategies.mscc.n_stages", "must be >= 2"));
        }
        check_debounce("strategies.mscc.debounce_steps", self.debounce_steps)
    }

    pub fn currents(&self) -> Vec<f64> {
        stage_currents(self.i_first, self.i_last, self.n_stages)
            .expect("validated MSCC config yields a valid ladder")
    }

    /// Current of 1-based stage `k`.
    pub fn stage_current(&self, k: usize) -> f64 {
        let r = (self.i_last / self.i_first).powf(1.0 / (self.n_stages - 1) as f64);
        match k {
            1 => self.i_first,
            k if k == self.n_stages => self.i_last,
            k => self.i_first * r.powi(k as i32 - 1),
        }
    }
}

/// One pulse-train cycle of reflex charging and the length of the reflex
/// period appended to each stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflexConfig {
    pub t_charge: f64,
    pub t_rest1: f64,
    pub t_discharge: f64,
    pub t_rest2: f64,
    pub reflex_duration: f64,
}

impl Default for ReflexConfig {
    fn default() -> Self {
        Self {
            t_charge: 0.85,
            t_rest1: 0.05,
            t_discharge: 0.05,
            t_rest2: 0.05,
            reflex_duration: 60.0,
        }
    }
}

impl ReflexConfig {
    pub fn cycle(&self) -> f64 {
        self.t_charge + self.t_rest1 + self.t_discharge + self.t_rest2
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("t_rest1", self.t_rest1),
            ("t_discharge", self.t_discharge),
            ("t_rest2", self.t_rest2),
            ("reflex_duration", self.reflex_duration),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(
                    format!("strategies.reflex.{name}"),
                    format!("must be >= 0, got {v}"),
                ));
            }
        }
        ensure_positive("strategies.reflex.t_charge", self.t_charge)
    }

    /// Setpoint at `offset` seconds into a cycle, for a stage current `i`.
    pub fn pulse_at(&self, offset: f64, i: f64) -> Setpoint {
        let x = offset.rem_euclid(self.cycle());
        let charge_end = self.t_charge;
        let rest1_end = charge_end + self.t_rest1;
        let discharge_end = rest1_end + self.t_discharge;
        if x + WINDOW_EPS < charge_end {
            Setpoint::cc(i)
        } else if x + WINDOW_EPS < rest1_end {
            Setpoint::rest()
        } else if x + WINDOW_EPS < discharge_end {
            Setpoint::discharge(i)
        } else {
            Setpoint::rest()
        }
    }
}

fn check_debounce(field: &str, n: u32) -> Result<()> {
    if n == 0 {
        Err(Error::invalid(field, "must be >= 1"))
    } else {
        Ok(())
    }
}

/// Position of a strategy in its flowchart. Stage indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Cc,
    Cv,
    Stage(usize),
    /// Reflex pulse train at the end of a stage.
    Reflex(usize),
    /// Fixed setpoint with no exit.
    Hold,
    Done,
}

impl Phase {
    /// Ordering key; never decreases over a run.
    pub fn ordinal(self) -> usize {
        match self {
            Phase::Cc | Phase::Hold => 0,
            Phase::Cv => 1,
            Phase::Stage(k) => 2 * k,
            Phase::Reflex(k) => 2 * k + 1,
            Phase::Done => usize::MAX,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyState {
    pub phase: Phase,
    pub debounce_counter: u32,
    pub stage_start_time: f64,
}

impl StrategyState {
    fn at(phase: Phase, t: f64) -> Self {
        Self {
            phase,
            debounce_counter: 0,
            stage_start_time: t,
        }
    }

    pub fn is_done(&self) -> bool {
        self.phase == Phase::Done
    }

    /// Stage index for MSCC phases.
    pub fn stage(&self) -> Option<usize> {
        match self.phase {
            Phase::Stage(k) | Phase::Reflex(k) => Some(k),
            _ => None,
        }
    }
}

/// Bump the counter while `hit` holds, reset it otherwise. Returns the new
/// counter and whether it reached `needed`.
fn debounce(counter: u32, hit: bool, needed: u32) -> (u32, bool) {
    if hit {
        let c = counter + 1;
        (c, c >= needed)
    } else {
        (0, false)
    }
}

pub fn next_setpoint_cccv(
    cfg: &CcCvConfig,
    st: &StrategyState,
    measured_v: f64,
    measured_i: f64,
    t: f64,
) -> (Setpoint, StrategyState) {
    match st.phase {
        Phase::Cc => {
            let (c, fire) = debounce(
                st.debounce_counter,
                measured_v >= cfg.v_max,
                cfg.debounce_steps,
            );
            if fire {
                (Setpoint::cv(cfg.v_max), StrategyState::at(Phase::Cv, t))
            } else {
                (
                    Setpoint::cc(cfg.i_cc),
                    StrategyState {
                        debounce_counter: c,
                        ..*st
                    },
                )
            }
        }
        Phase::Cv => {
            let (c, fire) = debounce(
                st.debounce_counter,
                measured_i <= cfg.i_cutoff,
                cfg.debounce_steps,
            );
            if fire {
                (Setpoint::rest(), StrategyState::at(Phase::Done, t))
            } else {
                (
                    Setpoint::cv(cfg.v_max),
                    StrategyState {
                        debounce_counter: c,
                        ..*st
                    },
                )
            }
        }
        _ => (Setpoint::rest(), StrategyState::at(Phase::Done, t)),
    }
}

pub fn next_setpoint_mscc(
    cfg: &MsccConfig,
    st: &StrategyState,
    measured_v: f64,
    t: f64,
) -> (Setpoint, StrategyState) {
    let Phase::Stage(k) = st.phase else {
        return (Setpoint::rest(), StrategyState::at(Phase::Done, t));
    };
    let (c, fire) = debounce(
        st.debounce_counter,
        measured_v >= cfg.v_threshold,
        cfg.debounce_steps,
    );
    if !fire {
        return (
            Setpoint::cc(cfg.stage_current(k)),
            StrategyState {
                debounce_counter: c,
                ..*st
            },
        );
    }
    advance_stage(cfg, k, t)
}

fn advance_stage(cfg: &MsccConfig, k: usize, t: f64) -> (Setpoint, StrategyState) {
    if k >= cfg.n_stages {
        (Setpoint::rest(), StrategyState::at(Phase::Done, t))
    } else {
        (
            Setpoint::cc(cfg.stage_current(k + 1)),
            StrategyState::at(Phase::Stage(k + 1), t),
        )
    }
}

pub fn next_setpoint_mscc_reflex(
    cfg: &MsccConfig,
    rcfg: &ReflexConfig,
    st: &StrategyState,
    measured_v: f64,
    t: f64,
) -> (Setpoint, StrategyState) {
    match st.phase {
        Phase::Stage(k) => {
            let (c, fire) = debounce(
                st.debounce_counter,
                measured_v >= cfg.v_threshold,
                cfg.debounce_steps,
            );
            if !fire {
                return (
                    Setpoint::cc(cfg.stage_current(k)),
                    StrategyState {
                        debounce_counter: c,
                        ..*st
                    },
                );
            }
            if rcfg.reflex_duration <= 0.0 {
                return advance_stage(cfg, k, t);
            }
            (
                rcfg.pulse_at(0.0, cfg.stage_current(k)),
                StrategyState::at(Phase::Reflex(k), t),
            )
        }
        Phase::Reflex(k) => {
            let elapsed = t - st.stage_start_time;
            if elapsed + WINDOW_EPS >= rcfg.reflex_duration {
                return advance_stage(cfg, k, t);
            }
            (rcfg.pulse_at(elapsed, cfg.stage_current(k)), *st)
        }
        _ => (Setpoint::rest(), StrategyState::at(Phase::Done, t)),
    }
}

/// A charging strategy with its configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    CcCv(CcCvConfig),
    Mscc(MsccConfig),
    MsccReflex(MsccConfig, ReflexConfig),
    /// Fixed setpoint until another stop condition ends the run.
    Constant(Setpoint),
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::CcCv(_) => "cccv",
            Strategy::Mscc(_) => "mscc",
            Strategy::MsccReflex(..) => "mscc-reflex",
            Strategy::Constant(_) => "constant",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Strategy::CcCv(c) => c.validate(),
            Strategy::Mscc(m) => m.validate(),
            Strategy::MsccReflex(m, r) => m.validate().and(r.validate()),
            Strategy::Constant(sp) => {
                if sp.ref_value.is_finite() && sp.ref_value >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::invalid(
                        "setpoint",
                        "reference must be finite and >= 0",
                    ))
                }
            }
        }
    }

    pub fn initial_state(&self, t: f64) -> StrategyState {
        let phase = match self {
            Strategy::CcCv(_) => Phase::Cc,
            Strategy::Mscc(_) | Strategy::MsccReflex(..) => Phase::Stage(1),
            Strategy::Constant(_) => Phase::Hold,
        };
        StrategyState::at(phase, t)
    }

    pub fn next(
        &self,
        st: &StrategyState,
        measured_v: f64,
        measured_i: f64,
        t: f64,
    ) -> (Setpoint, StrategyState) {
        if st.is_done() {
            return (Setpoint::rest(), *st);
        }
        match self {
            Strategy::CcCv(c) => next_setpoint_cccv(c, st, measured_v, measured_i, t),
            Strategy::Mscc(m) => next_setpoint_mscc(m, st, measured_v, t),
            Strategy::MsccReflex(m, r) => next_setpoint_mscc_reflex(m, r, st, measured_v, t),
            Strategy::Constant(sp) => (*sp, *st),
        }
    }
}
