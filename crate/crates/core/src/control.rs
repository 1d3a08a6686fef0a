//! Discrete PID regulation of the converter phase shift.

use std::fmt;

use crate::error::{ensure_finite, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub out_min: f64,
    pub out_max: f64,
}

impl PidGains {
    /// Current-loop gains tuned on the reference converter and pack.
    pub fn current_loop() -> Self {
        Self {
            kp: 2e-4,
            ki: 0.05,
            kd: 0.0,
            out_min: -0.25,
            out_max: 0.25,
        }
    }

    /// Voltage-loop gains tuned on the reference converter and pack.
    pub fn voltage_loop() -> Self {
        Self {
            kp: 5e-4,
            ki: 0.1,
            kd: 0.0,
            out_min: -0.25,
            out_max: 0.25,
        }
    }

    pub fn validate(&self, section: &str) -> Result<()> {
        ensure_finite(&format!("{section}.kp"), self.kp)?;
        ensure_finite(&format!("{section}.ki"), self.ki)?;
        ensure_finite(&format!("{section}.kd"), self.kd)?;
        if self.ki < 0.0 {
            return Err(Error::invalid(format!("{section}.ki"), "must be >= 0"));
        }
        if !(self.out_min < self.out_max) {
            return Err(Error::invalid(
                format!("{section}.out_min"),
                format!(
                    "must be below out_max ({} >= {})",
                    self.out_min, self.out_max
                ),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PidState {
    pub integral: f64,
    pub prev_error: f64,
    pub initialized: bool,
}

impl PidState {
    /// State that makes the next output equal `output` if the error stays at
    /// `error`, so switching loops does not jolt the phase command.
    pub fn bumpless(g: &PidGains, output: f64, error: f64) -> Self {
        let integral = if g.ki > 0.0 {
            (output - g.kp * error) / g.ki
        } else {
            0.0
        };
        Self {
            integral,
            prev_error: 0.0,
            initialized: false,
        }
    }
}

/// One controller update. Returns the clamped command and the next state.
///
/// Anti-windup by conditional integration: the integral is held whenever the
/// unclamped output is already past a bound and the error pushes further in
/// that direction.
pub fn pid_step(g: &PidGains, s: &PidState, error: f64, dt: f64) -> (f64, PidState) {
    let derivative = if s.initialized {
        g.kd * (error - s.prev_error) / dt
    } else {
        0.0
    };
    let candidate = s.integral + error * dt;
    let unclamped = g.kp * error + g.ki * candidate + derivative;
    let winding_up =
        (unclamped > g.out_max && error > 0.0) || (unclamped < g.out_min && error < 0.0);
    let integral = if winding_up { s.integral } else { candidate };
    let u = g.kp * error + g.ki * integral + derivative;
    (
        u.clamp(g.out_min, g.out_max),
        PidState {
            integral,
            prev_error: error,
            initialized: true,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    ConstantCurrent,
    ConstantVoltage,
    Rest,
    DischargePulse,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::ConstantCurrent => "cc",
            Mode::ConstantVoltage => "cv",
            Mode::Rest => "rest",
            Mode::DischargePulse => "discharge",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "cc" => Mode::ConstantCurrent,
            "cv" => Mode::ConstantVoltage,
            "rest" => Mode::Rest,
            "discharge" => Mode::DischargePulse,
            _ => return None,
        })
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Reference handed from a strategy to the regulator. Discharge pulses carry
/// the magnitude of the negative current.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setpoint {
    pub mode: Mode,
    pub ref_value: f64,
}

impl Setpoint {
    pub fn cc(i: f64) -> Self {
        Self {
            mode: Mode::ConstantCurrent,
            ref_value: i,
        }
    }

    pub fn cv(v: f64) -> Self {
        Self {
            mode: Mode::ConstantVoltage,
            ref_value: v,
        }
    }

    pub fn rest() -> Self {
        Self {
            mode: Mode::Rest,
            ref_value: 0.0,
        }
    }

    pub fn discharge(i: f64) -> Self {
        Self {
            mode: Mode::DischargePulse,
            ref_value: i,
        }
    }

    /// Signed battery current this setpoint asks for, if it is a current mode.
    pub fn target_current(&self) -> Option<f64> {
        match self.mode {
            Mode::ConstantCurrent => Some(self.ref_value),
            Mode::Rest => Some(0.0),
            Mode::DischargePulse => Some(-self.ref_value),
            Mode::ConstantVoltage => None,
        }
    }
}

pub fn control_error(sp: &Setpoint, measured_i: f64, measured_v: f64) -> f64 {
    match sp.mode {
        Mode::ConstantVoltage => sp.ref_value - measured_v,
        _ => sp.target_current().unwrap_or(0.0) - measured_i,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p_only(kp: f64) -> PidGains {
        PidGains {
            kp,
            ki: 0.0,
            kd: 0.0,
            out_min: -0.25,
            out_max: 0.25,
        }
    }

    #[test]
    fn zero_error_gives_zero_output() {
        let g = PidGains::current_loop();
        let mut s = PidState::default();
        for _ in 0..10 {
            let (u, next) = pid_step(&g, &s, 0.0, 0.01);
            assert_eq!(u, 0.0);
            s = next;
        }
        assert_eq!(s.integral, 0.0);
    }

    #[test]
    fn proportional_only() {
        let (u, _) = pid_step(&p_only(0.01), &PidState::default(), 1.0, 0.01);
        assert!((u - 0.01).abs() < 1e-15);
    }

    #[test]
    fn saturation_freezes_integral() {
        let g = PidGains {
            ki: 1.0,
            ..p_only(1.0)
        };
        let (u, s) = pid_step(&g, &PidState::default(), 10.0, 0.01);
        assert_eq!(u, 0.25);
        assert_eq!(s.integral, 0.0);
        let (u, s2) = pid_step(&g, &s, 10.0, 0.01);
        assert_eq!(u, 0.25);
        assert_eq!(s2.integral, 0.0);
        // Error reversing sign unfreezes it.
        let (_, s3) = pid_step(&g, &s2, -0.1, 0.01);
        assert!(s3.integral < 0.0);
    }

    #[test]
    fn derivative_is_zero_on_first_call() {
        let g = PidGains {
            kd: 1.0,
            ..p_only(0.0)
        };
        let (u, s) = pid_step(&g, &PidState::default(), 0.1, 0.01);
        assert_eq!(u, 0.0);
        let (u, _) = pid_step(&g, &s, 0.101, 0.01);
        assert!((u - 0.1).abs() < 1e-12);
    }

    #[test]
    fn bumpless_transfer_reproduces_output() {
        let g = PidGains::voltage_loop();
        let s = PidState::bumpless(&g, 0.12, 0.3);
        let (u, _) = pid_step(&g, &s, 0.3, 1e-12);
        assert!((u - 0.12).abs() < 1e-9);
        assert!(!s.initialized);
    }

    #[test]
    fn gains_validation() {
        assert!(PidGains::current_loop().validate("control.cc").is_ok());
        let bad = PidGains {
            ki: -1.0,
            ..PidGains::current_loop()
        };
        assert!(bad.validate("control.cc").is_err());
        let bad = PidGains {
            out_min: 0.3,
            ..PidGains::current_loop()
        };
        assert!(bad.validate("control.cc").is_err());
    }

    #[test]
    fn control_error_examples() {
        assert_eq!(control_error(&Setpoint::cc(50.0), 50.0, 140.0), 0.0);
        assert_eq!(control_error(&Setpoint::cv(147.0), 10.0, 145.0), 2.0);
        assert_eq!(control_error(&Setpoint::discharge(20.0), -20.0, 140.0), 0.0);
        assert_eq!(control_error(&Setpoint::rest(), 3.0, 140.0), -3.0);
    }

    #[test]
    fn mode_names_round_trip() {
        for m in [
            Mode::ConstantCurrent,
            Mode::ConstantVoltage,
            Mode::Rest,
            Mode::DischargePulse,
        ] {
            assert_eq!(Mode::parse(m.as_str()), Some(m));
        }
        assert_eq!(Mode::parse("boost"), None);
    }

    /// Static plant with a fixed gain, the shape of the averaged converter
    /// linearized around an operating point.
    fn settle(g: &PidGains, plant_gain: f64, reference: f64, steps: usize) -> Vec<f64> {
        let mut s = PidState::default();
        let mut y = 0.0;
        let mut out = Vec::with_capacity(steps);
        for _ in 0..steps {
            let (u, next) = pid_step(g, &s, reference - y, 0.01);
            s = next;
            y = plant_gain * u;
            out.push(y);
        }
        out
    }

    #[test]
    fn anti_windup_limits_overshoot_after_saturation() {
        let g = PidGains {
            kp: 0.0,
            ki: 0.05,
            kd: 0.0,
            out_min: -0.25,
            out_max: 0.25,
        };
        // Reference beyond reach for a while, then an in-range reference.
        let mut s = PidState::default();
        let mut y = 0.0;
        for _ in 0..2000 {
            let (u, next) = pid_step(&g, &s, 200.0 - y, 0.01);
            s = next;
            y = 360.0 * u;
        }
        let mut peak = f64::NEG_INFINITY;
        let mut min_after = f64::INFINITY;
        for _ in 0..2000 {
            let (u, next) = pid_step(&g, &s, 30.0 - y, 0.01);
            s = next;
            y = 360.0 * u;
            peak = peak.max(y);
            min_after = min_after.min(y);
        }
        // Without anti-windup the integral would hold hundreds of A·s of
        // excess and the output would stay pinned far longer; here it
        // descends to the reference without undershooting it.
        assert!(min_after >= 30.0 * (1.0 - 1e-6), "{min_after}");
        assert!((y - 30.0).abs() < 0.01 * 30.0);
        assert!(peak <= 90.0 + 1e-9);
    }

    proptest! {
        #[test]
        fn output_always_within_bounds(
            errors in proptest::collection::vec(-1e4f64..1e4, 1..200),
            kp in 0.0f64..1.0, ki in 0.0f64..10.0, kd in 0.0f64..0.1,
        ) {
            let g = PidGains { kp, ki, kd, out_min: -0.25, out_max: 0.25 };
            let mut s = PidState::default();
            for e in errors {
                let (u, next) = pid_step(&g, &s, e, 0.01);
                prop_assert!((-0.25..=0.25).contains(&u));
                prop_assert!(next.integral.is_finite());
                s = next;
            }
        }

        #[test]
        fn pure_integral_loop_has_no_steady_state_error(
            gain in 100.0f64..600.0, reference in 1.0f64..20.0,
        ) {
            let g = PidGains { kp: 0.0, ki: 0.05, kd: 0.0, out_min: -0.25, out_max: 0.25 };
            let y = settle(&g, gain, reference, 3000);
            let tail = &y[2500..];
            prop_assert!(tail.iter().all(|v| (v - reference).abs() <= 0.01 * reference));
        }
    }
}
