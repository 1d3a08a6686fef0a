//! Scenario files: one TOML document describing the pack, converter,
//! controller gains, strategy settings and simulation options.
//!
//! Only a handful of fields are required (cell capacity, pack arrangement,
//! converter input voltage, switching frequency and leakage inductance);
//! everything else falls back to the defaults documented on each field.
//! Unknown keys are rejected so typos do not silently fall back to defaults.
//!
//! ```
//! let s = evcharge::scenario::Scenario::from_toml_str(r#"
//!     [battery]
//!     capacity_ah = 2.6
//!     [battery.pack]
//!     n_series = 35
//!     n_parallel = 35
//!     [converter]
//!     v_in = 200.0
//!     f_s = 20000.0
//!     leakage_l = 15e-6
//! "#).unwrap();
//! assert!((s.pack.capacity_ah - 91.0).abs() < 1e-12);
//! ```

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::battery::{CellParams, PackConfig, PackParams, SocTable};
use crate::control::PidGains;
use crate::dab::{DabParams, LossParams};
use crate::sim::{ControlGains, Converter, Coupling, SimConfig};
use crate::strategy::{
    CcCvConfig, EquivBatteryParams, MsccConfig, ReflexConfig, Strategy, DEFAULT_DEBOUNCE_STEPS,
};

/// Default CC-CV constant current, in C.
pub const CCCV_I_CC_C: f64 = 0.6;
/// Default CC-CV termination current, in C.
pub const CCCV_CUTOFF_C: f64 = 0.05;
/// Default first MSCC stage current, in C (56 A on a 91 Ah pack). Slightly
/// above the CC-CV current so the ladder finishes sooner without exceeding
/// the converter's 62.5 A capability.
pub const MSCC_FIRST_C: f64 = 56.0 / 91.0;
/// Default last MSCC stage current, in C.
pub const MSCC_LAST_C: f64 = 0.15;

pub const STRATEGY_NAMES: [&str; 3] = ["cccv", "mscc", "mscc-reflex"];

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Invalid(#[from] crate::Error),
    #[error("unknown strategy `{0}` (expected one of: cccv, mscc, mscc-reflex)")]
    UnknownStrategy(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct File {
    battery: BatterySection,
    converter: ConverterSection,
    #[serde(default)]
    control: ControlSection,
    #[serde(default)]
    strategies: StrategiesSection,
    #[serde(default)]
    sim: SimSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BatterySection {
    capacity_ah: f64,
    pack: PackConfig,
    v_max_cell: Option<f64>,
    v_nominal: Option<f64>,
    uoc: Option<SocTable>,
    ro: Option<SocTable>,
    rth: Option<SocTable>,
    cth: Option<SocTable>,
    soc_ceiling: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConverterSection {
    v_in: f64,
    f_s: f64,
    leakage_l: f64,
    n: Option<f64>,
    dead_time: Option<f64>,
    phi_limit: Option<f64>,
    #[serde(default)]
    losses: LossSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct LossSection {
    rds_on_primary: Option<f64>,
    rds_on_secondary: Option<f64>,
    k_reflect: Option<f64>,
    t_r: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ControlSection {
    cc: Option<GainsSection>,
    cv: Option<GainsSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GainsSection {
    kp: Option<f64>,
    ki: Option<f64>,
    kd: Option<f64>,
    out_min: Option<f64>,
    out_max: Option<f64>,
}

impl GainsSection {
    fn over(&self, base: PidGains) -> PidGains {
        PidGains {
            kp: self.kp.unwrap_or(base.kp),
            ki: self.ki.unwrap_or(base.ki),
            kd: self.kd.unwrap_or(base.kd),
            out_min: self.out_min.unwrap_or(base.out_min),
            out_max: self.out_max.unwrap_or(base.out_max),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct StrategiesSection {
    #[serde(default)]
    cccv: CcCvSection,
    #[serde(default)]
    mscc: MsccSection,
    #[serde(default)]
    reflex: ReflexSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CcCvSection {
    i_cc: Option<f64>,
    v_max: Option<f64>,
    i_cutoff: Option<f64>,
    debounce_steps: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MsccSection {
    i_first: Option<f64>,
    i_last: Option<f64>,
    n_stages: Option<usize>,
    v_threshold: Option<f64>,
    debounce_steps: Option<u32>,
    grid_points: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReflexSection {
    t_charge: Option<f64>,
    t_rest1: Option<f64>,
    t_discharge: Option<f64>,
    t_rest2: Option<f64>,
    reflex_duration: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimSection {
    dt: Option<f64>,
    t_max: Option<f64>,
    coupling: Option<String>,
    initial_soc: Option<f64>,
    soc_target: Option<f64>,
    record_every: Option<usize>,
    overvoltage_tolerance: Option<f64>,
    loss_refresh_tolerance: Option<f64>,
    waveform_samples: Option<usize>,
}

/// A fully validated simulation setup.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub cell: CellParams,
    pub pack: PackParams,
    pub converter: Converter,
    pub control: ControlGains,
    pub cccv: CcCvConfig,
    pub mscc: MsccConfig,
    pub reflex: ReflexConfig,
    /// Grid size for the brute-force stage-current search.
    pub grid_points: usize,
    pub sim: SimConfig,
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let file: File = toml::from_str(text)?;
        Ok(Self::build(file)?)
    }

    /// The 35s35p 18650 pack on the 200 V / 20 kHz / 15 µH converter with
    /// every optional field at its default.
    pub fn reference() -> Self {
        Self::from_toml_str(
            r#"
            [battery]
            capacity_ah = 2.6
            [battery.pack]
            n_series = 35
            n_parallel = 35
            [converter]
            v_in = 200.0
            f_s = 20000.0
            leakage_l = 15e-6
            "#,
        )
        .expect("reference scenario is valid")
    }

    fn build(f: File) -> crate::Result<Self> {
        let stand_in = CellParams::default_18650();
        let b = f.battery;
        let cell = CellParams {
            uoc: b.uoc.unwrap_or(stand_in.uoc),
            ro: b.ro.unwrap_or(stand_in.ro),
            rth: b.rth.unwrap_or(stand_in.rth),
            cth: b.cth.unwrap_or(stand_in.cth),
            capacity_ah: b.capacity_ah,
            v_max_cell: b.v_max_cell.unwrap_or(stand_in.v_max_cell),
            v_nominal: b.v_nominal.unwrap_or(stand_in.v_nominal),
        };
        cell.validate()?;
        b.pack.validate()?;
        let soc_ceiling = b.soc_ceiling.unwrap_or(1.0);
        if !(soc_ceiling > 0.0 && soc_ceiling <= 1.0) {
            return Err(crate::Error::invalid(
                "battery.soc_ceiling",
                format!("must lie in (0, 1], got {soc_ceiling}"),
            ));
        }
        let pack = cell.clone().into_pack(b.pack).with_soc_ceiling(soc_ceiling);

        let c = f.converter;
        let dab = DabParams {
            v_in: c.v_in,
            n: c.n.unwrap_or(0.75),
            leakage_l: c.leakage_l,
            f_s: c.f_s,
            dead_time: c.dead_time.unwrap_or(0.0),
            phi_limit: c.phi_limit.unwrap_or(0.25),
        };
        let losses = LossParams {
            rds_on_primary: c.losses.rds_on_primary.unwrap_or(0.01),
            rds_on_secondary: c.losses.rds_on_secondary.unwrap_or(0.01),
            k_reflect: c.losses.k_reflect.unwrap_or(dab.n),
            t_r: c.losses.t_r.unwrap_or(50e-9),
        };
        let converter = Converter { dab, losses };
        converter.validate()?;

        let control = ControlGains {
            cc: f.control.cc.as_ref().map_or(PidGains::current_loop(), |g| {
                g.over(PidGains::current_loop())
            }),
            cv: f.control.cv.as_ref().map_or(PidGains::voltage_loop(), |g| {
                g.over(PidGains::voltage_loop())
            }),
        };
        control.cc.validate("control.cc")?;
        control.cv.validate("control.cv")?;

        let ah = pack.capacity_ah;
        let s = f.strategies;
        let cccv = CcCvConfig {
            i_cc: s.cccv.i_cc.unwrap_or(CCCV_I_CC_C * ah),
            v_max: s.cccv.v_max.unwrap_or(pack.v_max),
            i_cutoff: s.cccv.i_cutoff.unwrap_or(CCCV_CUTOFF_C * ah),
            debounce_steps: s.cccv.debounce_steps.unwrap_or(DEFAULT_DEBOUNCE_STEPS),
        };
        cccv.validate()?;
        let mscc = MsccConfig {
            i_first: s.mscc.i_first.unwrap_or(MSCC_FIRST_C * ah),
            i_last: s.mscc.i_last.unwrap_or(MSCC_LAST_C * ah),
            n_stages: s.mscc.n_stages.unwrap_or(5),
            v_threshold: s.mscc.v_threshold.unwrap_or(pack.v_max),
            debounce_steps: s.mscc.debounce_steps.unwrap_or(DEFAULT_DEBOUNCE_STEPS),
        };
        mscc.validate()?;
        let grid_points = s.mscc.grid_points.unwrap_or(500);
        if grid_points < 100 {
            return Err(crate::Error::invalid(
                "strategies.mscc.grid_points",
                "must be >= 100",
            ));
        }
        let rd = ReflexConfig::default();
        let reflex = ReflexConfig {
            t_charge: s.reflex.t_charge.unwrap_or(rd.t_charge),
            t_rest1: s.reflex.t_rest1.unwrap_or(rd.t_rest1),
            t_discharge: s.reflex.t_discharge.unwrap_or(rd.t_discharge),
            t_rest2: s.reflex.t_rest2.unwrap_or(rd.t_rest2),
            reflex_duration: s.reflex.reflex_duration.unwrap_or(rd.reflex_duration),
        };
        reflex.validate()?;

        let sd = SimConfig::default();
        let coupling = match f.sim.coupling.as_deref() {
            None => sd.coupling,
            Some(name) => Coupling::parse(name).ok_or_else(|| {
                crate::Error::invalid(
                    "sim.coupling",
                    format!("expected `ideal` or `pid`, got `{name}`"),
                )
            })?,
        };
        let sim = SimConfig {
            dt: f.sim.dt.unwrap_or(sd.dt),
            t_max: f.sim.t_max.unwrap_or(sd.t_max),
            coupling,
            initial_soc: f.sim.initial_soc.unwrap_or(sd.initial_soc),
            soc_target: f.sim.soc_target,
            record_every: f.sim.record_every.unwrap_or(sd.record_every),
            overvoltage_tolerance: f
                .sim
                .overvoltage_tolerance
                .unwrap_or(sd.overvoltage_tolerance),
            loss_refresh_tolerance: f
                .sim
                .loss_refresh_tolerance
                .unwrap_or(sd.loss_refresh_tolerance),
            waveform_samples: f.sim.waveform_samples.unwrap_or(sd.waveform_samples),
        };
        sim.validate()?;

        Ok(Self {
            cell,
            pack,
            converter,
            control,
            cccv,
            mscc,
            reflex,
            grid_points,
            sim,
        })
    }

    pub fn strategy(&self, name: &str) -> Result<Strategy, ScenarioError> {
        match name {
            "cccv" => Ok(Strategy::CcCv(self.cccv)),
            "mscc" => Ok(Strategy::Mscc(self.mscc)),
            "mscc-reflex" => Ok(Strategy::MsccReflex(self.mscc, self.reflex)),
            other => Err(ScenarioError::UnknownStrategy(other.to_string())),
        }
    }

    /// Series-RC reduction of the pack for stage-time prediction: the
    /// capacitance follows the mean open-circuit slope from the initial SoC to
    /// full, the resistance is ohmic plus polarization at the initial SoC.
    pub fn equivalent_battery(&self) -> EquivBatteryParams {
        let s0 = self.sim.initial_soc;
        let p = crate::battery::interp_params(&self.pack, s0);
        let slope = (self.pack.uoc.eval(1.0) - p.uoc) / (1.0 - s0);
        EquivBatteryParams {
            c1: self.pack.capacity_coulombs() / slope,
            r1: p.ro + p.rth,
            v0: p.uoc,
            v_t: self.mscc.v_threshold,
        }
    }
}
