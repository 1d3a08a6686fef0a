//! Charging strategies: CC-CV, multistage constant current, and multistage
//! constant current with reflex pulses, each as an explicit state machine.

mod machines;
pub mod mscc_math;

pub use machines::*;
pub use mscc_math::{
    brute_force_optimal_mid, grid_spacing, predict_stage_times, stage_currents, total_time,
    EquivBatteryParams, StagePrediction,
};
