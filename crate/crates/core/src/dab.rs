//! Dual-active-bridge converter under single-phase-shift modulation.
//!
//! Two fidelities are provided. The averaged model maps a phase shift to the
//! mean output current and is what the charging loop uses. The waveform model
//! synthesizes one steady-state switching period and is used for validation,
//! export, and to find the RMS and switching-instant currents for the MOSFET
//! loss model.
//!
//! The phase shift `phi` is a fraction of the switching period, legal on
//! `[-phi_limit, phi_limit]` with `phi_limit <= 0.25`. Internally the power
//! formula uses `d = 2|phi|`.

use crate::error::{ensure_positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DabParams {
    /// Supply-side DC voltage.
    pub v_in: f64,
    /// Turns ratio; the secondary bridge voltage reflects to the primary as
    /// `v_out / n`.
    pub n: f64,
    pub leakage_l: f64,
    pub f_s: f64,
    pub dead_time: f64,
    pub phi_limit: f64,
}

impl DabParams {
    /// 200 V input, 15 µH leakage inductance, 20 kHz, step-down ratio 0.75.
    pub fn reference() -> Self {
        Self {
            v_in: 200.0,
            n: 0.75,
            leakage_l: 15e-6,
            f_s: 20_000.0,
            dead_time: 0.0,
            phi_limit: 0.25,
        }
    }

    pub fn period(&self) -> f64 {
        1.0 / self.f_s
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("converter.v_in", self.v_in)?;
        ensure_positive("converter.n", self.n)?;
        ensure_positive("converter.leakage_l", self.leakage_l)?;
        ensure_positive("converter.f_s", self.f_s)?;
        if !(self.dead_time >= 0.0 && self.dead_time < 0.5 / self.f_s) {
            return Err(Error::invalid(
                "converter.dead_time",
                format!("must lie in [0, 1/(2 f_s)), got {}", self.dead_time),
            ));
        }
        if !(self.phi_limit > 0.0 && self.phi_limit <= 0.25) {
            return Err(Error::invalid(
                "converter.phi_limit",
                format!("must lie in (0, 0.25], got {}", self.phi_limit),
            ));
        }
        Ok(())
    }

    fn check_phi(&self, phi: f64) -> Result<()> {
        if phi.is_finite() && phi.abs() <= self.phi_limit {
            Ok(())
        } else {
            Err(Error::PhaseOutOfRange {
                phi,
                limit: self.phi_limit,
            })
        }
    }

    /// Current per unit of `d(1 - d)`.
    fn current_scale(&self) -> f64 {
        self.n * self.v_in / (2.0 * self.f_s * self.leakage_l)
    }
}

impl Default for DabParams {
    fn default() -> Self {
        Self::reference()
    }
}

/// MOSFET loss constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParams {
    pub rds_on_primary: f64,
    pub rds_on_secondary: f64,
    /// Factor that refers secondary-side current to the primary. Usually the
    /// turns ratio.
    pub k_reflect: f64,
    /// Switching transition time.
    pub t_r: f64,
}

impl LossParams {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("converter.losses.rds_on_primary", self.rds_on_primary)?;
        ensure_positive("converter.losses.rds_on_secondary", self.rds_on_secondary)?;
        ensure_positive("converter.losses.k_reflect", self.k_reflect)?;
        ensure_positive("converter.losses.t_r", self.t_r)
    }
}

/// Signed mean output current for a phase shift.
pub fn avg_output_current(p: &DabParams, v_out: f64, phi: f64) -> Result<f64> {
    p.check_phi(phi)?;
    if !(v_out > 0.0) {
        return Err(Error::Domain(format!(
            "output voltage must be > 0, got {v_out}"
        )));
    }
    let d = 2.0 * phi.abs();
    Ok(phi.signum() * p.current_scale() * d * (1.0 - d))
}

/// Signed mean power delivered to the output.
pub fn avg_power(p: &DabParams, v_out: f64, phi: f64) -> Result<f64> {
    Ok(avg_output_current(p, v_out, phi)? * v_out)
}

/// Largest current the converter can deliver within its phase limit.
pub fn max_current(p: &DabParams, v_out: f64) -> f64 {
    let _ = v_out; // the averaged model is independent of v_out
    let d = 2.0 * p.phi_limit;
    p.current_scale() * d * (1.0 - d)
}

/// Phase shift that produces `i_target` on average.
pub fn phase_for_current(p: &DabParams, v_out: f64, i_target: f64) -> Result<f64> {
    let i_max = max_current(p, v_out);
    if !i_target.is_finite() || i_target.abs() > i_max * (1.0 + 1e-12) {
        return Err(Error::ExceedsCapability {
            requested: i_target,
            max_current: i_max,
        });
    }
    if i_target == 0.0 {
        return Ok(0.0);
    }
    let c = (i_target.abs() / p.current_scale()).min(0.25);
    // Smaller root of d^2 - d + c = 0, written to avoid cancellation at small c.
    let d = 2.0 * c / (1.0 + (1.0 - 4.0 * c).sqrt());
    Ok((i_target.signum() * d / 2.0).clamp(-p.phi_limit, p.phi_limit))
}

/// Conduction loss of both bridges; two devices conduct in each at a time.
pub fn conduction_loss(lp: &LossParams, i_rms: f64) -> f64 {
    2.0 * (lp.rds_on_primary + lp.k_reflect * lp.k_reflect * lp.rds_on_secondary) * i_rms * i_rms
}

/// Loss of one switching transition (turn-on or turn-off) under a linear
/// voltage/current crossover.
pub fn transition_loss(lp: &LossParams, f_s: f64, v_ds: f64, i_d: f64) -> f64 {
    v_ds * i_d * lp.t_r * f_s / 6.0
}

/// Turn-on plus turn-off loss of one device per period.
pub fn switching_loss(lp: &LossParams, f_s: f64, v_ds: f64, i_d: f64) -> f64 {
    2.0 * transition_loss(lp, f_s, v_ds, i_d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveformSample {
    pub t: f64,
    pub v_ab_primary: f64,
    pub v_ab_secondary_reflected: f64,
    pub v_lk: f64,
    pub i_lk: f64,
}

/// Closed-form steady-state SPS waveform at one operating point.
#[derive(Debug, Clone, Copy)]
struct Sps {
    v1: f64,
    v2: f64,
    l: f64,
    period: f64,
    /// Secondary delay in seconds, in `[0, T)`.
    delay: f64,
    i0: f64,
}

impl Sps {
    fn new(p: &DabParams, v_out: f64, phi: f64) -> Self {
        let period = p.period();
        let delay = (phi * period).rem_euclid(period);
        let v1 = p.v_in;
        let v2 = v_out / p.n;
        let l = p.leakage_l;
        // Integration constant from zero mean current; the primitive of a
        // unit square wave averages T/4 over a period.
        let i0 = -(v1 * period / 4.0 - v2 * (period / 4.0 - tri(-delay, period))) / l;
        Self {
            v1,
            v2,
            l,
            period,
            delay,
            i0,
        }
    }

    fn v_p(&self, t: f64) -> f64 {
        self.v1 * square(t, self.period)
    }

    fn v_s(&self, t: f64) -> f64 {
        self.v2 * square(t - self.delay, self.period)
    }

    fn current(&self, t: f64) -> f64 {
        let t_p = self.period;
        self.i0
            + (self.v1 * tri(t, t_p) - self.v2 * (tri(t - self.delay, t_p) - tri(-self.delay, t_p)))
                / self.l
    }
}

/// Unit square wave: +1 on the first half period, -1 on the second.
fn square(t: f64, period: f64) -> f64 {
    if t.rem_euclid(period) < period / 2.0 {
        1.0
    } else {
        -1.0
    }
}

/// Periodic primitive of `square`, zero at t = 0.
fn tri(t: f64, period: f64) -> f64 {
    let x = t.rem_euclid(period);
    if x <= period / 2.0 {
        x
    } else {
        period - x
    }
}

/// One period of the steady-state waveform sampled uniformly at
/// `t = k T / samples_per_period`.
///
/// Dead time only blanks the gate drive (see [`gate_drive`]); the bridge
/// voltages hold their previous level through it, so the waveform is the
/// same as with zero dead time.
pub fn synth_waveform(
    p: &DabParams,
    v_out: f64,
    phi: f64,
    samples_per_period: usize,
) -> Result<Vec<WaveformSample>> {
    p.check_phi(phi)?;
    if samples_per_period < 8 {
        return Err(Error::Domain(format!(
            "need at least 8 samples per period, got {samples_per_period}"
        )));
    }
    let sps = Sps::new(p, v_out, phi);
    let h = sps.period / samples_per_period as f64;
    Ok((0..samples_per_period)
        .map(|k| {
            let t = k as f64 * h;
            let v_p = sps.v_p(t);
            let v_s = sps.v_s(t);
            WaveformSample {
                t,
                v_ab_primary: v_p,
                v_ab_secondary_reflected: v_s,
                v_lk: v_p - v_s,
                i_lk: sps.current(t),
            }
        })
        .collect())
}

/// Leakage-inductor current at the switching instants: the primary bridge
/// commutates at `t = 0`, the secondary at `t = phi T`.
pub fn switching_currents(p: &DabParams, v_out: f64, phi: f64) -> Result<(f64, f64)> {
    p.check_phi(phi)?;
    let sps = Sps::new(p, v_out, phi);
    Ok((sps.current(0.0), sps.current(sps.delay)))
}

/// Drive state of one bridge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Drive {
    Positive,
    Negative,
    /// Both legs off between commutations.
    Blanked,
}

/// Gate drive of the primary and secondary bridges at time `t`.
pub fn gate_drive(p: &DabParams, phi: f64, t: f64) -> (Drive, Drive) {
    let period = p.period();
    let bridge = |tau: f64| {
        let x = tau.rem_euclid(period);
        let half = period / 2.0;
        if x < p.dead_time || (x >= half && x < half + p.dead_time) {
            Drive::Blanked
        } else if x < half {
            Drive::Positive
        } else {
            Drive::Negative
        }
    };
    (bridge(t), bridge(t - phi * period))
}

/// RMS of the inductor current, trapezoidal over the period with the first
/// sample reused as the periodic endpoint.
pub fn rms_of_waveform(w: &[WaveformSample]) -> f64 {
    periodic_mean(w, |s| s.i_lk * s.i_lk).max(0.0).sqrt()
}

/// Mean output current implied by a sampled waveform: the inductor current
/// rectified by the secondary bridge polarity, referred to the output side by
/// the turns ratio.
pub fn secondary_referred_current(p: &DabParams, w: &[WaveformSample]) -> f64 {
    p.n * periodic_mean(w, |s| s.i_lk * s.v_ab_secondary_reflected.signum())
}

fn periodic_mean(w: &[WaveformSample], f: impl Fn(&WaveformSample) -> f64) -> f64 {
    if w.is_empty() {
        return 0.0;
    }
    let n = w.len();
    let total: f64 = (0..n).map(|k| 0.5 * (f(&w[k]) + f(&w[(k + 1) % n]))).sum();
    total / n as f64
}

/// MOSFET losses at one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub conduction: f64,
    pub switching: f64,
}

impl LossBreakdown {
    pub fn total(&self) -> f64 {
        self.conduction + self.switching
    }
}

/// Conduction and switching loss of all eight devices at a phase shift.
///
/// Primary devices switch `v_in` at the primary commutation current;
/// secondary devices switch `v_out` at the secondary commutation current
/// referred through `k_reflect`.
pub fn operating_point_loss(
    p: &DabParams,
    lp: &LossParams,
    v_out: f64,
    phi: f64,
    samples_per_period: usize,
) -> Result<LossBreakdown> {
    if phi == 0.0 {
        return Ok(LossBreakdown::default());
    }
    let w = synth_waveform(p, v_out, phi, samples_per_period)?;
    let i_rms = rms_of_waveform(&w);
    let (i_pri, i_sec) = switching_currents(p, v_out, phi)?;
    let switching = 4.0 * switching_loss(lp, p.f_s, p.v_in, i_pri.abs())
        + 4.0 * switching_loss(lp, p.f_s, v_out, lp.k_reflect * i_sec.abs());
    Ok(LossBreakdown {
        conduction: conduction_loss(lp, i_rms),
        switching,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lp() -> LossParams {
        LossParams {
            rds_on_primary: 0.01,
            rds_on_secondary: 0.01,
            k_reflect: 0.75,
            t_r: 50e-9,
        }
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn averaged_current_examples() {
        let p = DabParams::reference();
        assert_eq!(avg_output_current(&p, 150.0, 0.0).unwrap(), 0.0);
        assert!(close(
            avg_output_current(&p, 150.0, 0.25).unwrap(),
            62.5,
            1e-12
        ));
        assert!(close(
            avg_output_current(&p, 150.0, -0.25).unwrap(),
            -62.5,
            1e-12
        ));
        assert!(matches!(
            avg_output_current(&p, 150.0, 0.3),
            Err(Error::PhaseOutOfRange { .. })
        ));
        assert!(avg_output_current(&p, 0.0, 0.1).is_err());
    }

    #[test]
    fn averaged_power_examples() {
        let p = DabParams::reference();
        assert_eq!(avg_power(&p, 150.0, 0.0).unwrap(), 0.0);
        assert!(close(avg_power(&p, 150.0, 0.25).unwrap(), 9375.0, 1e-12));
        let mut prev = 0.0;
        for k in 1..=250 {
            let pw = avg_power(&p, 150.0, k as f64 * 1e-3).unwrap();
            assert!(pw > prev);
            prev = pw;
        }
    }

    #[test]
    fn phase_inversion_examples() {
        let p = DabParams::reference();
        assert_eq!(phase_for_current(&p, 150.0, 0.0).unwrap(), 0.0);
        let phi = phase_for_current(&p, 150.0, 30.0).unwrap();
        // c = 0.12, d = (1 - sqrt(0.52)) / 2
        let d = (1.0 - 0.52f64.sqrt()) / 2.0;
        assert!(close(phi, d / 2.0, 1e-12));
        assert!((phi - 0.06973).abs() < 1e-5);
        assert!(close(
            avg_output_current(&p, 150.0, phi).unwrap(),
            30.0,
            1e-12
        ));
        match phase_for_current(&p, 150.0, 70.0) {
            Err(Error::ExceedsCapability { max_current, .. }) => {
                assert!(close(max_current, 62.5, 1e-12))
            }
            other => panic!("expected capability error, got {other:?}"),
        }
    }

    #[test]
    fn max_current_examples() {
        let p = DabParams::reference();
        assert!(close(max_current(&p, 150.0), 62.5, 1e-12));
        let limited = DabParams {
            phi_limit: 0.125,
            ..p
        };
        assert!(close(max_current(&limited, 150.0), 46.875, 1e-12));
        assert!(limited.validate().is_ok());
    }

    #[test]
    fn params_validation() {
        assert!(DabParams::reference().validate().is_ok());
        let bad = DabParams {
            phi_limit: 0.3,
            ..DabParams::reference()
        };
        assert!(bad.validate().is_err());
        let bad = DabParams {
            dead_time: 25e-6,
            ..DabParams::reference()
        };
        assert!(bad.validate().is_err());
        let bad = DabParams {
            leakage_l: 0.0,
            ..DabParams::reference()
        };
        assert!(
            matches!(bad.validate(), Err(Error::InvalidParameter { field, .. }) if field == "converter.leakage_l")
        );
    }

    #[test]
    fn conduction_loss_examples() {
        assert_eq!(conduction_loss(&lp(), 0.0), 0.0);
        assert!(close(conduction_loss(&lp(), 20.0), 12.5, 1e-12));
        assert!(close(conduction_loss(&lp(), 40.0), 4.0 * 12.5, 1e-12));
    }

    #[test]
    fn switching_loss_examples() {
        assert_eq!(transition_loss(&lp(), 20e3, 200.0, 0.0), 0.0);
        assert!(close(
            transition_loss(&lp(), 20e3, 200.0, 20.0),
            2.0 / 3.0,
            1e-12
        ));
        assert!(close(
            switching_loss(&lp(), 20e3, 200.0, 20.0),
            4.0 / 3.0,
            1e-12
        ));
        assert!(close(
            switching_loss(&lp(), 40e3, 200.0, 20.0),
            2.0 * switching_loss(&lp(), 20e3, 200.0, 20.0),
            1e-12
        ));
    }

    #[test]
    fn matched_voltages_at_zero_phase_carry_no_current() {
        let p = DabParams::reference();
        let w = synth_waveform(&p, 150.0, 0.0, 64).unwrap();
        for s in &w {
            assert_eq!(s.v_lk, 0.0);
            assert_eq!(s.i_lk, 0.0);
        }
    }

    #[test]
    fn waveform_corner_currents_match_closed_form() {
        let p = DabParams::reference();
        let (v_out, phi) = (130.0, 0.1);
        let t = p.period();
        let delta = phi * t;
        let v1 = p.v_in;
        let v2 = v_out / p.n;
        let l = p.leakage_l;
        let i0 = -((v1 + v2) * delta + (v1 - v2) * (t / 2.0 - delta)) / (2.0 * l);
        let i_delta = i0 + (v1 + v2) * delta / l;
        let (a, b) = switching_currents(&p, v_out, phi).unwrap();
        assert!(close(a, i0, 1e-9));
        assert!(close(b, i_delta, 1e-9));
        // Half-wave antisymmetry.
        let sps = Sps::new(&p, v_out, phi);
        for k in 0..20 {
            let tk = k as f64 * t / 40.0;
            assert!((sps.current(tk + t / 2.0) + sps.current(tk)).abs() < 1e-9);
        }
    }

    #[test]
    fn waveform_has_zero_mean_and_consistent_voltages() {
        let p = DabParams::reference();
        let w = synth_waveform(&p, 120.0, -0.17, 400).unwrap();
        let mean = periodic_mean(&w, |s| s.i_lk);
        assert!(mean.abs() < 1e-9);
        for s in &w {
            assert_eq!(s.v_lk, s.v_ab_primary - s.v_ab_secondary_reflected);
        }
    }

    #[test]
    fn waveform_current_matches_averaged_model_at_full_phase() {
        let p = DabParams::reference();
        let w = synth_waveform(&p, 150.0, 0.25, 2000).unwrap();
        let i = secondary_referred_current(&p, &w);
        assert!(close(i, 62.5, 0.01), "{i}");
    }

    #[test]
    fn waveform_rejects_bad_inputs() {
        let p = DabParams::reference();
        assert!(synth_waveform(&p, 150.0, 0.3, 100).is_err());
        assert!(synth_waveform(&p, 150.0, 0.1, 4).is_err());
    }

    #[test]
    fn rms_examples() {
        let zero = vec![
            WaveformSample {
                t: 0.0,
                v_ab_primary: 0.0,
                v_ab_secondary_reflected: 0.0,
                v_lk: 0.0,
                i_lk: 0.0
            };
            10
        ];
        assert_eq!(rms_of_waveform(&zero), 0.0);
        let mut flat = zero.clone();
        for (k, s) in flat.iter_mut().enumerate() {
            s.i_lk = if k % 2 == 0 { 3.0 } else { -3.0 };
        }
        assert!(close(rms_of_waveform(&flat), 3.0, 1e-12));
        // Triangle between -1 and +1.
        let n = 4000;
        let tri_wave: Vec<_> = (0..n)
            .map(|k| {
                let x = k as f64 / n as f64;
                let v = if x < 0.5 {
                    -1.0 + 4.0 * x
                } else {
                    3.0 - 4.0 * x
                };
                WaveformSample { i_lk: v, ..zero[0] }
            })
            .collect();
        assert!(close(rms_of_waveform(&tri_wave), 1.0 / 3f64.sqrt(), 1e-6));
    }

    #[test]
    fn dead_time_blanks_gates_only() {
        let p = DabParams {
            dead_time: 1e-6,
            ..DabParams::reference()
        };
        let t = p.period();
        assert_eq!(gate_drive(&p, 0.1, 0.5e-6).0, Drive::Blanked);
        assert_eq!(gate_drive(&p, 0.1, 2e-6).0, Drive::Positive);
        assert_eq!(gate_drive(&p, 0.1, t / 2.0 + 0.5e-6).0, Drive::Blanked);
        assert_eq!(gate_drive(&p, 0.1, 0.1 * t + 0.5e-6).1, Drive::Blanked);
        assert_eq!(gate_drive(&p, 0.1, 0.1 * t - 0.5e-6).1, Drive::Negative);
        let a = synth_waveform(&p, 140.0, 0.1, 128).unwrap();
        let b = synth_waveform(&DabParams::reference(), 140.0, 0.1, 128).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn operating_point_loss_is_zero_at_rest() {
        let p = DabParams::reference();
        assert_eq!(
            operating_point_loss(&p, &lp(), 140.0, 0.0, 256)
                .unwrap()
                .total(),
            0.0
        );
        let l = operating_point_loss(&p, &lp(), 140.0, 0.1, 256).unwrap();
        assert!(l.conduction > 0.0 && l.switching > 0.0);
    }

    proptest! {
        #[test]
        fn averaged_model_is_odd(phi in 0.0f64..=0.25, v_out in 50.0f64..250.0) {
            let p = DabParams::reference();
            let a = avg_output_current(&p, v_out, phi).unwrap();
            let b = avg_output_current(&p, v_out, -phi).unwrap();
            prop_assert_eq!(a, -b);
            let pa = avg_power(&p, v_out, phi).unwrap();
            prop_assert_eq!(pa, -avg_power(&p, v_out, -phi).unwrap());
            prop_assert_eq!(pa, a * v_out);
        }

        #[test]
        fn phase_inversion_round_trips(phi in 1e-6f64..=0.25, v_out in 50.0f64..250.0) {
            let p = DabParams::reference();
            let i = avg_output_current(&p, v_out, phi).unwrap();
            let back = phase_for_current(&p, v_out, i).unwrap();
            let i2 = avg_output_current(&p, v_out, back).unwrap();
            prop_assert!((i2 - i).abs() <= 1e-9 * i.abs());
            prop_assert!(i <= max_current(&p, v_out) * (1.0 + 1e-15));
        }

        #[test]
        fn losses_non_negative(i in 0.0f64..200.0, v in 0.0f64..400.0) {
            prop_assert!(conduction_loss(&lp(), i) >= 0.0);
            prop_assert!(switching_loss(&lp(), 20e3, v, i) >= 0.0);
        }

        #[test]
        fn waveform_integral_tracks_averaged_model(
            phi in 0.02f64..=0.25, v_out in 100.0f64..160.0,
        ) {
            let p = DabParams::reference();
            let w = synth_waveform(&p, v_out, phi, 2048).unwrap();
            let i = secondary_referred_current(&p, &w);
            let avg = avg_output_current(&p, v_out, phi).unwrap();
            prop_assert!((i - avg).abs() <= 0.01 * avg);
        }
    }
}
