//! Fixed-step charging simulation.
//!
//! Each step the strategy sees the previous step's terminal voltage and
//! current, emits a setpoint, the coupling turns it into a phase shift, the
//! averaged converter yields the battery current, and the pack advances with
//! that current held over the step.

use std::fmt;

use crate::battery::{self, interp_params, BatteryState, PackParams};
use crate::control::{control_error, pid_step, Mode, PidGains, PidState, Setpoint};
use crate::dab::{self, DabParams, LossBreakdown, LossParams};
use crate::error::{ensure_positive, Error, Result};
use crate::strategy::{Phase, Strategy};

/// How setpoints become phase commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    /// Invert the averaged converter model exactly.
    IdealSource,
    /// Discrete PID on the measured current or voltage.
    ClosedLoopPid,
}

impl Coupling {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ideal" | "ideal-source" => Some(Coupling::IdealSource),
            "pid" | "closed-loop-pid" => Some(Coupling::ClosedLoopPid),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    /// Safety cap on simulated time.
    pub t_max: f64,
    pub coupling: Coupling,
    pub initial_soc: f64,
    pub soc_target: Option<f64>,
    /// Keep every n-th step in the telemetry.
    pub record_every: usize,
    /// Allowed relative terminal-voltage excursion above the pack maximum in
    /// ideal-source mode before the run faults.
    pub overvoltage_tolerance: f64,
    /// Relative change in phase or output voltage that triggers a fresh
    /// converter-loss evaluation.
    pub loss_refresh_tolerance: f64,
    /// Waveform resolution used for the converter RMS current.
    pub waveform_samples: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t_max: 6.0 * 3600.0,
            coupling: Coupling::IdealSource,
            initial_soc: 0.2,
            soc_target: None,
            record_every: 100,
            overvoltage_tolerance: 0.01,
            loss_refresh_tolerance: 0.01,
            waveform_samples: 512,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("sim.dt", self.dt)?;
        ensure_positive("sim.t_max", self.t_max)?;
        if self.t_max < self.dt {
            return Err(Error::invalid("sim.t_max", "must be at least one step"));
        }
        if !(0.0..1.0).contains(&self.initial_soc) {
            return Err(Error::invalid(
                "sim.initial_soc",
                format!("must lie in [0, 1), got {}", self.initial_soc),
            ));
        }
        if let Some(target) = self.soc_target {
            if !(target > self.initial_soc && target <= 1.0) {
                return Err(Error::invalid(
                    "sim.soc_target",
                    format!("must lie in (initial_soc, 1], got {target}"),
                ));
            }
        }
        if self.record_every == 0 {
            return Err(Error::invalid("sim.record_every", "must be >= 1"));
        }
        if !(self.overvoltage_tolerance >= 0.0) {
            return Err(Error::invalid("sim.overvoltage_tolerance", "must be >= 0"));
        }
        if !(self.loss_refresh_tolerance >= 0.0) {
            return Err(Error::invalid("sim.loss_refresh_tolerance", "must be >= 0"));
        }
        if self.waveform_samples < 8 {
            return Err(Error::invalid("sim.waveform_samples", "must be >= 8"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Converter {
    pub dab: DabParams,
    pub losses: LossParams,
}

impl Converter {
    pub fn validate(&self) -> Result<()> {
        self.dab.validate()?;
        self.losses.validate()
    }
}

/// PID gain sets for the current and voltage loops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlGains {
    pub cc: PidGains,
    pub cv: PidGains,
}

impl Default for ControlGains {
    fn default() -> Self {
        Self {
            cc: PidGains::current_loop(),
            cv: PidGains::voltage_loop(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fault {
    Overcharge { soc: f64, ceiling: f64 },
    Overvoltage { v_term: f64, limit: f64 },
    Capability { requested: f64, max_current: f64 },
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fault::Overcharge { soc, ceiling } => {
                write!(f, "overcharge: SoC reached {soc:.6} (ceiling {ceiling})")
            }
            Fault::Overvoltage { v_term, limit } => {
                write!(f, "overvoltage: terminal voltage {v_term:.3} V above limit {limit:.3} V")
            }
            Fault::Capability {
                requested,
                max_current,
            } => write!(
                f,
                "demand of {requested:.3} A exceeds converter capability (max_current = {max_current:.3} A)"
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    StrategyDone,
    SocTarget,
    TMax,
    Fault { fault: Fault, t: f64 },
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::StrategyDone => "strategy-done",
            Termination::SocTarget => "soc-target",
            Termination::TMax => "t_max",
            Termination::Fault { .. } => "fault",
        }
    }

    pub fn is_fault(&self) -> bool {
        matches!(self, Termination::Fault { .. })
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::Fault { fault, t } => write!(f, "fault at t = {t:.2} s: {fault}"),
            other => f.write_str(other.as_str()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub charge_time_h: f64,
    pub e_batt_loss_kwh: f64,
    pub e_conv_loss_kwh: f64,
    pub e_total_loss_kwh: f64,
    pub e_delivered_kwh: f64,
    pub final_soc: f64,
    pub terminated_by: Termination,
}

/// One telemetry sample: the state at the start of a step together with the
/// current applied over that step. The final row holds the end state at zero
/// current.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TelemetryRow {
    pub t: f64,
    pub i_batt: f64,
    pub v_term: f64,
    pub soc: f64,
    pub phi: f64,
    pub p_batt_loss: f64,
    pub p_conv_loss: f64,
    pub mode: Mode,
}

/// Strategy phase entered at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseChange {
    pub t: f64,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub metrics: Metrics,
    pub telemetry: Vec<TelemetryRow>,
    pub phases: Vec<PhaseChange>,
}

const J_PER_KWH: f64 = 3.6e6;

/// Loss at a recent operating point, reused while phase and output voltage
/// stay close to it.
struct LossCache {
    phi: f64,
    v_out: f64,
    loss: LossBreakdown,
}

impl LossCache {
    fn fresh(&self, phi: f64, v_out: f64, tol: f64) -> bool {
        phi.signum() == self.phi.signum()
            && (phi - self.phi).abs() <= tol * self.phi.abs()
            && (v_out - self.v_out).abs() <= tol * self.v_out.abs()
    }
}

struct Loop {
    mode_is_voltage: bool,
    state: PidState,
}

pub fn run(
    strategy: &Strategy,
    pack: &PackParams,
    converter: &Converter,
    control: &ControlGains,
    cfg: &SimConfig,
) -> Result<SimOutput> {
    cfg.validate()?;
    converter.validate()?;
    strategy.validate()?;
    if cfg.coupling == Coupling::ClosedLoopPid {
        control.cc.validate("control.cc")?;
        control.cv.validate("control.cv")?;
    }
    let dab_p = &converter.dab;
    let dt = cfg.dt;
    let v_limit = pack.v_max * (1.0 + cfg.overvoltage_tolerance);

    let mut state = BatteryState::new(cfg.initial_soc);
    let mut i_meas = 0.0;
    let mut v_meas = battery::terminal_voltage(pack, &state, 0.0);
    let mut st = strategy.initial_state(0.0);
    let mut phases = vec![PhaseChange {
        t: 0.0,
        phase: st.phase,
    }];
    let mut telemetry = Vec::new();
    let mut pid: Option<Loop> = None;
    let mut phi_prev = 0.0;
    let mut cache: Option<LossCache> = None;

    let (mut e_batt, mut e_conv, mut e_del) = (0.0, 0.0, 0.0);
    let mut steps: u64 = 0;
    let termination = loop {
        let t = steps as f64 * dt;
        let (sp, next) = strategy.next(&st, v_meas, i_meas, t);
        if next.phase != st.phase {
            phases.push(PhaseChange {
                t,
                phase: next.phase,
            });
        }
        st = next;
        if st.is_done() {
            break Termination::StrategyDone;
        }

        let phi = match cfg.coupling {
            Coupling::IdealSource => match ideal_phase(pack, dab_p, &state, &sp, v_meas) {
                Ok(phi) => phi,
                Err(fault) => break Termination::Fault { fault, t },
            },
            Coupling::ClosedLoopPid => {
                let voltage = sp.mode == Mode::ConstantVoltage;
                let gains = if voltage { &control.cv } else { &control.cc };
                let error = control_error(&sp, i_meas, v_meas);
                let lp = match pid.take() {
                    Some(l) if l.mode_is_voltage == voltage => l,
                    Some(_) => Loop {
                        mode_is_voltage: voltage,
                        state: PidState::bumpless(gains, phi_prev, error),
                    },
                    None => Loop {
                        mode_is_voltage: voltage,
                        state: PidState::default(),
                    },
                };
                let (phi, s) = pid_step(gains, &lp.state, error, dt);
                pid = Some(Loop {
                    mode_is_voltage: voltage,
                    state: s,
                });
                phi.clamp(-dab_p.phi_limit, dab_p.phi_limit)
            }
        };
        let i = dab::avg_output_current(dab_p, v_meas, phi)?;

        let v_start = battery::terminal_voltage(pack, &state, i);
        let p_loss_start = battery::loss_power(pack, &state, i);
        let p_conv = if phi == 0.0 {
            0.0
        } else {
            match &cache {
                Some(c) if c.fresh(phi, v_start, cfg.loss_refresh_tolerance) => c.loss.total(),
                _ => {
                    let loss = dab::operating_point_loss(
                        dab_p,
                        &converter.losses,
                        v_start,
                        phi,
                        cfg.waveform_samples,
                    )?;
                    cache = Some(LossCache {
                        phi,
                        v_out: v_start,
                        loss,
                    });
                    loss.total()
                }
            }
        };
        if steps.is_multiple_of(cfg.record_every as u64) {
            telemetry.push(TelemetryRow {
                t,
                i_batt: i,
                v_term: v_start,
                soc: state.soc,
                phi,
                p_batt_loss: p_loss_start,
                p_conv_loss: p_conv,
                mode: sp.mode,
            });
        }

        let new_state = match battery::step(pack, &state, i, dt) {
            Ok(s) => s,
            Err(oc) => {
                break Termination::Fault {
                    fault: Fault::Overcharge {
                        soc: oc.soc,
                        ceiling: oc.ceiling,
                    },
                    t: t + dt,
                }
            }
        };
        let v_end = battery::terminal_voltage(pack, &new_state, i);
        e_batt += 0.5 * (p_loss_start + battery::loss_power(pack, &new_state, i)) * dt;
        e_conv += p_conv * dt;
        e_del += 0.5 * (v_start + v_end) * i * dt;

        state = new_state;
        // Pin time to the step grid rather than accumulating rounding.
        state.t = (steps + 1) as f64 * dt;
        steps += 1;
        i_meas = i;
        v_meas = v_end;
        phi_prev = phi;

        if cfg.coupling == Coupling::IdealSource && v_end > v_limit {
            break Termination::Fault {
                fault: Fault::Overvoltage {
                    v_term: v_end,
                    limit: v_limit,
                },
                t: state.t,
            };
        }
        if matches!(cfg.soc_target, Some(target) if state.soc >= target) {
            break Termination::SocTarget;
        }
        if state.t >= cfg.t_max * (1.0 - 1e-12) {
            break Termination::TMax;
        }
    };

    let t_end = steps as f64 * dt;
    telemetry.push(TelemetryRow {
        t: t_end,
        i_batt: 0.0,
        v_term: battery::terminal_voltage(pack, &state, 0.0),
        soc: state.soc,
        phi: 0.0,
        p_batt_loss: battery::loss_power(pack, &state, 0.0),
        p_conv_loss: 0.0,
        mode: Mode::Rest,
    });
    if telemetry.len() >= 2 && telemetry[telemetry.len() - 2].t == t_end {
        // Nothing was stepped after the last recorded row.
        telemetry.remove(telemetry.len() - 2);
    }

    let e_batt_loss_kwh = e_batt / J_PER_KWH;
    let e_conv_loss_kwh = e_conv / J_PER_KWH;
    Ok(SimOutput {
        metrics: Metrics {
            charge_time_h: t_end / 3600.0,
            e_batt_loss_kwh,
            e_conv_loss_kwh,
            e_total_loss_kwh: e_batt_loss_kwh + e_conv_loss_kwh,
            e_delivered_kwh: e_del / J_PER_KWH,
            final_soc: state.soc,
            terminated_by: termination,
        },
        telemetry,
        phases,
    })
}

/// Phase that realizes a setpoint exactly under the averaged model.
fn ideal_phase(
    pack: &PackParams,
    dab_p: &DabParams,
    state: &BatteryState,
    sp: &Setpoint,
    v_out: f64,
) -> std::result::Result<f64, Fault> {
    let i_max = dab::max_current(dab_p, v_out);
    let target = match sp.target_current() {
        Some(i) => i,
        None => {
            // Current that puts the terminal voltage on the reference.
            let p = interp_params(pack, state.soc);
            ((sp.ref_value - p.uoc - state.u_th) / p.ro).clamp(0.0, i_max)
        }
    };
    dab::phase_for_current(dab_p, v_out, target).map_err(|_| Fault::Capability {
        requested: target.abs(),
        max_current: i_max,
    })
}

/// Relative gap in the terminal energy balance over a run.
///
/// Terminal energy must equal the energy stored in the open-circuit source,
/// the change in energy on the polarization capacitor, and the resistive
/// loss. The polarization voltage is reconstructed from each row as
/// `v_term - U_oc - i R_o`. Needs every step recorded (`record_every = 1`).
pub fn energy_balance_residual(telemetry: &[TelemetryRow], pack: &PackParams) -> f64 {
    let mut terminal = 0.0;
    let mut stored = 0.0;
    let mut cap = 0.0;
    let mut loss = 0.0;
    let u_th = |row: &TelemetryRow| {
        let p = interp_params(pack, row.soc);
        row.v_term - p.uoc - row.i_batt * p.ro
    };
    for w in telemetry.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let h = b.t - a.t;
        let i = a.i_batt;
        let pa = interp_params(pack, a.soc);
        let pb = interp_params(pack, b.soc);
        let (ua, ub) = (u_th(a), u_th(b));
        let va = pa.uoc + i * pa.ro + ua;
        let vb = pb.uoc + i * pb.ro + ub;
        terminal += 0.5 * (va + vb) * i * h;
        stored += 0.5 * (pa.uoc + pb.uoc) * i * h;
        cap += 0.5 * pa.cth * (ub * ub - ua * ua);
        let la = i * i * pa.ro + ua * ua / pa.rth;
        let lb = i * i * pb.ro + ub * ub / pb.rth;
        loss += 0.5 * (la + lb) * h;
    }
    if terminal == 0.0 {
        return 0.0;
    }
    ((terminal - (stored + cap + loss)) / terminal).abs()
}

/// Metrics for several strategies run from identical conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<(String, Metrics)>,
}

/// Column label and accessor for one compared quantity.
pub type MetricColumn = (&'static str, fn(&Metrics) -> f64);

/// Quantities reported in a comparison, in table order.
pub const COMPARE_METRICS: [MetricColumn; 4] = [
    ("charging_time_h", |m| m.charge_time_h),
    ("battery_loss_kwh", |m| m.e_batt_loss_kwh),
    ("converter_loss_kwh", |m| m.e_conv_loss_kwh),
    ("total_loss_kwh", |m| m.e_total_loss_kwh),
];

impl Comparison {
    /// Percentage change of `value` relative to the first row.
    pub fn delta_pct(&self, value: fn(&Metrics) -> f64, row: usize) -> f64 {
        let base = value(&self.rows[0].1);
        100.0 * (value(&self.rows[row].1) - base) / base
    }
}

/// Run each strategy on its own thread with the same inputs.
pub fn compare(
    strategies: &[(String, Strategy)],
    pack: &PackParams,
    converter: &Converter,
    control: &ControlGains,
    cfg: &SimConfig,
) -> Result<Vec<(String, SimOutput)>> {
    if strategies.is_empty() {
        return Err(Error::Domain("nothing to compare".into()));
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = strategies
            .iter()
            .map(|(name, s)| {
                scope
                    .spawn(move || run(s, pack, converter, control, cfg).map(|o| (name.clone(), o)))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::battery::{CellParams, PackConfig, SocTable};
    use crate::strategy::{CcCvConfig, MsccConfig};

    fn pack() -> PackParams {
        CellParams::default_18650().into_pack(PackConfig::default())
    }

    fn converter() -> Converter {
        Converter {
            dab: DabParams::reference(),
            losses: LossParams {
                rds_on_primary: 0.01,
                rds_on_secondary: 0.01,
                k_reflect: 0.75,
                t_r: 50e-9,
            },
        }
    }

    fn short(t_max: f64) -> SimConfig {
        SimConfig {
            t_max,
            record_every: 1,
            ..SimConfig::default()
        }
    }

    #[test]
    fn single_rest_step() {
        let cfg = short(0.01);
        let out = run(
            &Strategy::Constant(Setpoint::rest()),
            &pack(),
            &converter(),
            &ControlGains::default(),
            &cfg,
        )
        .unwrap();
        let m = out.metrics;
        assert_eq!(m.terminated_by, Termination::TMax);
        assert_eq!(m.e_batt_loss_kwh, 0.0);
        assert_eq!(m.e_conv_loss_kwh, 0.0);
        assert_eq!(m.e_delivered_kwh, 0.0);
        assert_eq!(m.final_soc, 0.2);
        assert_eq!(out.telemetry.len(), 2);
    }

    #[test]
    fn capability_fault_names_max_current() {
        let out = run(
            &Strategy::Constant(Setpoint::cc(70.0)),
            &pack(),
            &converter(),
            &ControlGains::default(),
            &short(1.0),
        )
        .unwrap();
        match out.metrics.terminated_by {
            Termination::Fault {
                fault: Fault::Capability { max_current, .. },
                t,
            } => {
                assert!((max_current - 62.5).abs() < 1e-9);
                assert_eq!(t, 0.0);
            }
            other => panic!("{other:?}"),
        }
        assert!(out
            .metrics
            .terminated_by
            .to_string()
            .contains("max_current"));
    }

    #[test]
    fn overcharge_fault() {
        let p = pack().with_soc_ceiling(0.2001);
        let out = run(
            &Strategy::Constant(Setpoint::cc(50.0)),
            &p,
            &converter(),
            &ControlGains::default(),
            &short(60.0),
        )
        .unwrap();
        assert!(matches!(
            out.metrics.terminated_by,
            Termination::Fault {
                fault: Fault::Overcharge { .. },
                ..
            }
        ));
    }

    #[test]
    fn overvoltage_fault_in_ideal_mode() {
        // Constant current never backs off, so the pack runs past its limit.
        let out = run(
            &Strategy::Constant(Setpoint::cc(54.6)),
            &pack(),
            &converter(),
            &ControlGains::default(),
            &SimConfig::default(),
        )
        .unwrap();
        match out.metrics.terminated_by {
            Termination::Fault {
                fault: Fault::Overvoltage { v_term, limit },
                ..
            } => {
                assert!(v_term > limit);
                assert!((limit - 147.0 * 1.01).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn loss_identity_and_non_negative() {
        let cfg = SimConfig {
            t_max: 600.0,
            ..SimConfig::default()
        };
        let out = run(
            &Strategy::Constant(Setpoint::cc(40.0)),
            &pack(),
            &converter(),
            &ControlGains::default(),
            &cfg,
        )
        .unwrap();
        let m = out.metrics;
        assert_eq!(m.e_total_loss_kwh, m.e_batt_loss_kwh + m.e_conv_loss_kwh);
        assert!(m.e_batt_loss_kwh > 0.0 && m.e_conv_loss_kwh > 0.0 && m.e_delivered_kwh > 0.0);
        assert_eq!(out.telemetry.len(), 60_001 / 100 + 1);
        assert!(out.telemetry.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn energy_balance_on_constant_current() {
        let cfg = SimConfig {
            t_max: 1200.0,
            record_every: 1,
            ..SimConfig::default()
        };
        let p = pack();
        let out = run(
            &Strategy::Constant(Setpoint::cc(45.0)),
            &p,
            &converter(),
            &ControlGains::default(),
            &cfg,
        )
        .unwrap();
        assert!(energy_balance_residual(&out.telemetry, &p) <= 0.005);
    }

    #[test]
    fn zero_current_residual_is_zero() {
        let p = pack();
        let out = run(
            &Strategy::Constant(Setpoint::rest()),
            &p,
            &converter(),
            &ControlGains::default(),
            &short(1.0),
        )
        .unwrap();
        assert_eq!(energy_balance_residual(&out.telemetry, &p), 0.0);
    }

    #[test]
    fn cv_holds_terminal_voltage_in_ideal_mode() {
        let cell = CellParams {
            uoc: SocTable::new(vec![(0.0, 3.6), (1.0, 4.1)]).unwrap(),
            ..CellParams::default_18650()
        };
        let p = cell.into_pack(PackConfig::default());
        let cfg = SimConfig {
            t_max: 120.0,
            initial_soc: 0.9,
            record_every: 1,
            ..SimConfig::default()
        };
        let out = run(
            &Strategy::Constant(Setpoint::cv(147.0)),
            &p,
            &converter(),
            &ControlGains::default(),
            &cfg,
        )
        .unwrap();
        let rows = &out.telemetry[..out.telemetry.len() - 1];
        for r in rows.iter().filter(|r| r.i_batt < 62.5) {
            assert!((r.v_term - 147.0).abs() < 1e-9, "{r:?}");
        }
    }

    #[test]
    fn strategies_reach_done() {
        let p = pack();
        let cccv = Strategy::CcCv(CcCvConfig {
            i_cc: 54.6,
            v_max: 147.0,
            i_cutoff: 20.0,
            debounce_steps: 5,
        });
        let cfg = SimConfig {
            initial_soc: 0.7,
            ..SimConfig::default()
        };
        let out = run(&cccv, &p, &converter(), &ControlGains::default(), &cfg).unwrap();
        assert_eq!(out.metrics.terminated_by, Termination::StrategyDone);
        assert_eq!(out.phases.len(), 3);

        let mscc = Strategy::Mscc(MsccConfig {
            i_first: 56.0,
            i_last: 13.65,
            n_stages: 5,
            v_threshold: 147.0,
            debounce_steps: 5,
        });
        let out = run(&mscc, &p, &converter(), &ControlGains::default(), &cfg).unwrap();
        assert_eq!(out.metrics.terminated_by, Termination::StrategyDone);
    }

    #[test]
    fn compare_runs_in_order() {
        let cfg = SimConfig {
            t_max: 30.0,
            ..SimConfig::default()
        };
        let list = vec![
            ("a".to_string(), Strategy::Constant(Setpoint::cc(20.0))),
            ("b".to_string(), Strategy::Constant(Setpoint::cc(40.0))),
        ];
        let out = compare(&list, &pack(), &converter(), &ControlGains::default(), &cfg).unwrap();
        assert_eq!(out[0].0, "a");
        assert_eq!(out[1].0, "b");
        assert!(out[1].1.metrics.final_soc > out[0].1.metrics.final_soc);
        assert!(compare(&[], &pack(), &converter(), &ControlGains::default(), &cfg).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::default().validate().is_ok());
        for bad in [
            SimConfig {
                dt: 0.0,
                ..SimConfig::default()
            },
            SimConfig {
                t_max: 0.001,
                ..SimConfig::default()
            },
            SimConfig {
                initial_soc: 1.0,
                ..SimConfig::default()
            },
            SimConfig {
                soc_target: Some(0.1),
                ..SimConfig::default()
            },
            SimConfig {
                record_every: 0,
                ..SimConfig::default()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }
}
