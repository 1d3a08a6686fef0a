//! First-order Thevenin equivalent circuit of a lithium-ion cell, scaled to a
//! series/parallel pack.
//!
//! The circuit is an open-circuit source `U_oc`, a series ohmic resistance
//! `R_o`, and one polarization RC pair (`R_Th`, `C_Th`). All four vary with
//! state of charge through piecewise-linear breakpoint tables.
//!
//! Sign convention: positive current charges the pack, so the terminal
//! voltage sits above `U_oc` while charging.
//!
//! ```
//! use evcharge::battery::{step, terminal_voltage, BatteryState, CellParams, PackConfig};
//!
//! let pack = CellParams::default_18650().into_pack(PackConfig::new(35, 35).unwrap());
//! let mut state = BatteryState::new(0.2);
//! for _ in 0..100 {
//!     state = step(&pack, &state, 45.5, 0.01).unwrap();
//! }
//! assert!(terminal_voltage(&pack, &state, 45.5) > pack.uoc.eval(state.soc));
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{ensure_positive, Error, Result};

/// Piecewise-linear table mapping state of charge (fraction) to a parameter.
///
/// Breakpoints are strictly increasing and lie in `[0, 1]`. Lookups outside
/// the covered range clamp to the nearest end breakpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct SocTable {
    points: Vec<(f64, f64)>,
}

impl SocTable {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("table", "breakpoint table is empty"));
        }
        for (i, &(soc, value)) in points.iter().enumerate() {
            if !(0.0..=1.0).contains(&soc) {
                return Err(Error::invalid(
                    "table",
                    format!("breakpoint {i}: SoC {soc} outside [0, 1]"),
                ));
            }
            if !value.is_finite() {
                return Err(Error::invalid(
                    "table",
                    format!("breakpoint {i}: value {value} is not finite"),
                ));
            }
            if i > 0 && soc <= points[i - 1].0 {
                return Err(Error::invalid(
                    "table",
                    format!("breakpoint {i}: SoC values must be strictly increasing"),
                ));
            }
        }
        Ok(Self { points })
    }

    /// Single-entry table: the same value at every SoC.
    pub fn constant(value: f64) -> Self {
        Self {
            points: vec![(0.0, value)],
        }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn eval(&self, soc: f64) -> f64 {
        let pts = &self.points;
        let (first, last) = (pts[0], pts[pts.len() - 1]);
        if soc <= first.0 {
            return first.1;
        }
        if soc >= last.0 {
            return last.1;
        }
        // First breakpoint strictly greater than soc; always in 1..len here.
        let hi = pts.partition_point(|&(s, _)| s <= soc);
        let (s0, v0) = pts[hi - 1];
        let (s1, v1) = pts[hi];
        if soc == s0 {
            return v0;
        }
        v0 + (v1 - v0) * (soc - s0) / (s1 - s0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            points: self.points.iter().map(|&(s, v)| (s, v * factor)).collect(),
        }
    }

    pub fn min_value(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.1)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_non_decreasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].1 >= w[0].1)
    }
}

impl TryFrom<Vec<(f64, f64)>> for SocTable {
    type Error = Error;

    fn try_from(points: Vec<(f64, f64)>) -> Result<Self> {
        SocTable::new(points)
    }
}

impl From<SocTable> for Vec<(f64, f64)> {
    fn from(t: SocTable) -> Self {
        t.points
    }
}

/// Parameters of a single cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellParams {
    pub uoc: SocTable,
    pub ro: SocTable,
    pub rth: SocTable,
    pub cth: SocTable,
    pub capacity_ah: f64,
    pub v_max_cell: f64,
    pub v_nominal: f64,
}

impl CellParams {
    /// Stand-in dataset for a Panasonic 18650B-class cell.
    ///
    /// Capacity, nominal and maximum voltage are the datasheet values. The
    /// SoC-dependent curves are not published in usable numeric form, so the
    /// circuit elements are flat and `U_oc` is linear from 3.7 V at 20 % SoC
    /// to 4.2 V at 100 % SoC. Override them from the scenario file.
    pub fn default_18650() -> Self {
        Self {
            uoc: SocTable::new(vec![(0.0, 3.575), (1.0, 4.2)]).expect("valid default table"),
            ro: SocTable::constant(0.05),
            rth: SocTable::constant(0.02),
            cth: SocTable::constant(1500.0),
            capacity_ah: 2.6,
            v_max_cell: 4.2,
            v_nominal: 3.6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, table) in [("ro", &self.ro), ("rth", &self.rth), ("cth", &self.cth)] {
            if table.min_value() <= 0.0 {
                return Err(Error::invalid(
                    format!("battery.{name}"),
                    "all table values must be > 0",
                ));
            }
        }
        if !self.uoc.is_non_decreasing() {
            return Err(Error::invalid(
                "battery.uoc",
                "open-circuit voltage must be non-decreasing in SoC",
            ));
        }
        ensure_positive("battery.capacity_ah", self.capacity_ah)?;
        ensure_positive("battery.v_nominal", self.v_nominal)?;
        ensure_positive("battery.v_max_cell", self.v_max_cell)?;
        if self.v_max_cell < self.uoc.eval(1.0) {
            return Err(Error::invalid(
                "battery.v_max_cell",
                format!(
                    "{} V is below the open-circuit voltage at full charge ({} V)",
                    self.v_max_cell,
                    self.uoc.eval(1.0)
                ),
            ));
        }
        Ok(())
    }

    pub fn into_pack(self, cfg: PackConfig) -> PackParams {
        pack_from_cell(&self, cfg)
    }
}

/// Series/parallel arrangement of identical cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PackConfig {
    pub n_series: u32,
    pub n_parallel: u32,
}

impl PackConfig {
    pub fn new(n_series: u32, n_parallel: u32) -> Result<Self> {
        let cfg = Self {
            n_series,
            n_parallel,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_series == 0 {
            return Err(Error::invalid("battery.pack.n_series", "must be >= 1"));
        }
        if self.n_parallel == 0 {
            return Err(Error::invalid("battery.pack.n_parallel", "must be >= 1"));
        }
        Ok(())
    }
}

impl Default for PackConfig {
    fn default() -> Self {
        Self {
            n_series: 35,
            n_parallel: 35,
        }
    }
}

/// Pack-level equivalent circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct PackParams {
    pub uoc: SocTable,
    pub ro: SocTable,
    pub rth: SocTable,
    pub cth: SocTable,
    pub capacity_ah: f64,
    /// Maximum charging voltage of the pack.
    pub v_max: f64,
    pub v_nominal: f64,
    /// Stepping past this SoC is an overcharge fault.
    pub soc_ceiling: f64,
    pub config: PackConfig,
}

impl PackParams {
    pub fn with_soc_ceiling(mut self, ceiling: f64) -> Self {
        self.soc_ceiling = ceiling;
        self
    }

    /// Charge held between SoC 0 and 1, in coulombs.
    pub fn capacity_coulombs(&self) -> f64 {
        3600.0 * self.capacity_ah
    }
}

/// Circuit element values at one state of charge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitValues {
    pub uoc: f64,
    pub ro: f64,
    pub rth: f64,
    pub cth: f64,
}

impl CircuitValues {
    pub fn tau(&self) -> f64 {
        self.rth * self.cth
    }
}

/// Dynamic state of the pack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryState {
    pub soc: f64,
    /// Voltage across the polarization RC pair.
    pub u_th: f64,
    /// Elapsed time in seconds.
    pub t: f64,
}

impl BatteryState {
    /// Rested pack at the given SoC.
    pub fn new(soc: f64) -> Self {
        Self {
            soc,
            u_th: 0.0,
            t: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("overcharge: SoC would reach {soc:.6} (ceiling {ceiling}) at t = {t:.3} s")]
pub struct Overcharge {
    pub soc: f64,
    pub ceiling: f64,
    pub t: f64,
}

pub fn interp_params(pack: &PackParams, soc: f64) -> CircuitValues {
    CircuitValues {
        uoc: pack.uoc.eval(soc),
        ro: pack.ro.eval(soc),
        rth: pack.rth.eval(soc),
        cth: pack.cth.eval(soc),
    }
}

/// Scale a cell to a pack. Voltages multiply by the series count, resistances
/// by `n_series / n_parallel`, capacitances by `n_parallel / n_series`, and
/// capacity by the parallel count.
pub fn pack_from_cell(cell: &CellParams, cfg: PackConfig) -> PackParams {
    let ns = f64::from(cfg.n_series);
    let np = f64::from(cfg.n_parallel);
    PackParams {
        uoc: cell.uoc.scaled(ns),
        ro: cell.ro.scaled(ns / np),
        rth: cell.rth.scaled(ns / np),
        cth: cell.cth.scaled(np / ns),
        capacity_ah: cell.capacity_ah * np,
        v_max: cell.v_max_cell * ns,
        v_nominal: cell.v_nominal * ns,
        soc_ceiling: 1.0,
        config: cfg,
    }
}

/// Advance the pack by `dt` seconds with the current held constant.
///
/// The RC pair is integrated with its exact exponential solution, so the
/// update is stable for any `dt`. Parameters are evaluated at the starting
/// SoC.
pub fn step(
    pack: &PackParams,
    state: &BatteryState,
    i_load: f64,
    dt: f64,
) -> Result<BatteryState, Overcharge> {
    debug_assert!(dt > 0.0);
    let p = interp_params(pack, state.soc);
    let decay = (-dt / p.tau()).exp();
    let u_th = state.u_th * decay + p.rth * i_load * (1.0 - decay);
    let soc = state.soc + i_load * dt / pack.capacity_coulombs();
    let t = state.t + dt;
    if soc > pack.soc_ceiling {
        return Err(Overcharge {
            soc,
            ceiling: pack.soc_ceiling,
            t,
        });
    }
    Ok(BatteryState { soc, u_th, t })
}

pub fn terminal_voltage(pack: &PackParams, state: &BatteryState, i_load: f64) -> f64 {
    let p = interp_params(pack, state.soc);
    p.uoc + i_load * p.ro + state.u_th
}

/// Instantaneous dissipation in the ohmic and polarization resistances.
pub fn loss_power(pack: &PackParams, state: &BatteryState, i_load: f64) -> f64 {
    let p = interp_params(pack, state.soc);
    i_load * i_load * p.ro + state.u_th * state.u_th / p.rth
}
