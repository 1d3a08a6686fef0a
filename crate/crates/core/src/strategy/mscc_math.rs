//! Stage-current design for multistage constant-current charging.
//!
//! The pack is reduced to a capacitor `c1` in series with a resistor `r1`. A
//! stage at current `I` ends when `v_C + I r1` reaches the threshold `v_t`.
//! With that model the stage durations have closed forms, and the total time
//! for fixed first and last currents is minimized when every middle current is
//! the geometric mean of its neighbours.

use crate::error::{ensure_positive, Error, Result};

/// Series-RC reduction of the pack used for stage-time prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivBatteryParams {
    /// Equivalent capacitance (F).
    pub c1: f64,
    /// Equivalent series resistance (Ω).
    pub r1: f64,
    /// Terminal voltage at the start of the charge.
    pub v0: f64,
    /// Terminal voltage that ends each stage.
    pub v_t: f64,
}

impl EquivBatteryParams {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("c1", self.c1)?;
        ensure_positive("r1", self.r1)?;
        ensure_positive("v0", self.v0)?;
        ensure_positive("v_t", self.v_t)?;
        if self.v_t <= self.v0 {
            return Err(Error::invalid(
                "v_t",
                format!("must exceed v0 ({} <= {})", self.v_t, self.v0),
            ));
        }
        Ok(())
    }
}

/// Geometric ladder from `i_first` down to `i_last`.
pub fn stage_currents(i_first: f64, i_last: f64, n_stages: usize) -> Result<Vec<f64>> {
    if !(i_last > 0.0 && i_first.is_finite()) {
        return Err(Error::Domain(format!(
            "stage currents must be positive and finite, got first {i_first} A, last {i_last} A"
        )));
    }
    if i_first <= i_last {
        return Err(Error::Domain(format!(
            "first-stage current ({i_first} A) must exceed last-stage current ({i_last} A)"
        )));
    }
    if n_stages < 2 {
        return Err(Error::Domain(format!(
            "need at least 2 stages, got {n_stages}"
        )));
    }
    let ratio = (i_last / i_first).powf(1.0 / (n_stages - 1) as f64);
    let mut out: Vec<f64> = (0..n_stages)
        .map(|k| i_first * ratio.powi(k as i32))
        .collect();
    // Pin the end points exactly.
    out[0] = i_first;
    out[n_stages - 1] = i_last;
    Ok(out)
}

/// Predicted stage durations.
#[derive(Debug, Clone, PartialEq)]
pub struct StagePrediction {
    pub times: Vec<f64>,
    pub total: f64,
    /// Stages whose raw duration came out negative (clamped to zero): the
    /// threshold is already exceeded when they start.
    pub unreachable: Vec<usize>,
}

fn stage_time_raw(currents: &[f64], x: usize, eq: &EquivBatteryParams) -> f64 {
    let i = currents[x];
    if x == 0 {
        (eq.v_t - eq.v0 - i * eq.r1) * eq.c1 / i
    } else {
        // The previous stage ended at v_t with I_{x-1} flowing; stepping down
        // to I_x drops the resistive part and leaves this much headroom.
        let v_start = eq.v_t - currents[x - 1] * eq.r1;
        (eq.v_t - v_start - i * eq.r1) * eq.c1 / i
    }
}

pub fn predict_stage_times(currents: &[f64], eq: &EquivBatteryParams) -> Result<StagePrediction> {
    eq.validate()?;
    if currents.is_empty() {
        return Err(Error::Domain("no stage currents given".into()));
    }
    if currents.iter().any(|&i| !(i > 0.0 && i.is_finite())) {
        return Err(Error::Domain("stage currents must be positive".into()));
    }
    if currents.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain(
            "stage currents must be strictly decreasing".into(),
        ));
    }
    let mut times = Vec::with_capacity(currents.len());
    let mut unreachable = Vec::new();
    for x in 0..currents.len() {
        let raw = stage_time_raw(currents, x, eq);
        if raw < 0.0 {
            unreachable.push(x);
        }
        times.push(raw.max(0.0));
    }
    let total = times.iter().sum();
    Ok(StagePrediction {
        times,
        total,
        unreachable,
    })
}

/// Total predicted time without validation or allocation. Negative stage
/// durations count as zero.
pub fn total_time(currents: &[f64], eq: &EquivBatteryParams) -> f64 {
    (0..currents.len())
        .map(|x| stage_time_raw(currents, x, eq).max(0.0))
        .sum()
}

/// Exhaustive search over middle-stage currents on a uniform grid of
/// `grid_points` values strictly inside `(i_last, i_first)`.
///
/// Every strictly decreasing assignment is evaluated, so the cost is
/// `C(grid_points, n_stages - 2)` evaluations of [`total_time`]. Ties keep the
/// first assignment found.
pub fn brute_force_optimal_mid(
    i_first: f64,
    i_last: f64,
    n_stages: usize,
    eq: &EquivBatteryParams,
    grid_points: usize,
) -> Result<Vec<f64>> {
    // Reuse the argument checks of the closed form.
    stage_currents(i_first, i_last, n_stages)?;
    eq.validate()?;
    if grid_points < 100 {
        return Err(Error::Domain(format!(
            "grid needs at least 100 points, got {grid_points}"
        )));
    }
    let grid = search_grid(i_first, i_last, grid_points);
    let mut currents = vec![0.0; n_stages];
    currents[0] = i_first;
    currents[n_stages - 1] = i_last;
    let mut best = (f64::INFINITY, Vec::new());
    // Grid is ascending; slot k picks an index below the one in slot k-1.
    search(&grid, &mut currents, 1, grid.len(), eq, &mut best);
    Ok(best.1)
}

/// Grid used by [`brute_force_optimal_mid`], ascending.
pub fn search_grid(i_first: f64, i_last: f64, grid_points: usize) -> Vec<f64> {
    let h = grid_spacing(i_first, i_last, grid_points);
    (1..=grid_points).map(|j| i_last + h * j as f64).collect()
}

pub fn grid_spacing(i_first: f64, i_last: f64, grid_points: usize) -> f64 {
    (i_first - i_last) / (grid_points + 1) as f64
}

fn search(
    grid: &[f64],
    currents: &mut [f64],
    slot: usize,
    upper: usize,
    eq: &EquivBatteryParams,
    best: &mut (f64, Vec<f64>),
) {
    let n = currents.len();
    if slot == n - 1 {
        let t = total_time(currents, eq);
        if t < best.0 {
            best.0 = t;
            best.1.clear();
            best.1.extend_from_slice(&currents[1..n - 1]);
        }
        return;
    }
    // Leave room below for the remaining middle slots.
    let remaining = n - 2 - slot;
    for j in (remaining..upper).rev() {
        currents[slot] = grid[j];
        search(grid, currents, slot + 1, j, eq, best);
    }
}
