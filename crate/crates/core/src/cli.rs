//! Command-line front end and CSV output.
//!
//! Exit codes: 0 on success, 2 for usage or configuration problems, 3 when a
//! simulation ends in a fault.

use std::collections::HashSet;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::control::Mode;
use crate::dab::{self, WaveformSample};
use crate::scenario::{Scenario, ScenarioError};
use crate::sim::{self, Comparison, Coupling, Metrics, SimOutput, TelemetryRow, COMPARE_METRICS};
use crate::strategy::{brute_force_optimal_mid, grid_spacing, predict_stage_times, stage_currents};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_FAULT: i32 = 3;

pub const TELEMETRY_HEADER: [&str; 8] = [
    "t_s",
    "i_batt_A",
    "v_term_V",
    "soc",
    "phi",
    "p_batt_loss_W",
    "p_conv_loss_W",
    "mode",
];

pub const WAVEFORM_HEADER: [&str; 5] = ["t_s", "v_p", "v_s_reflected", "v_lk", "i_lk"];

#[derive(Debug, Parser)]
#[command(
    name = "evcharge",
    version,
    about = "Simulate and compare EV charging strategies"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one strategy and write its telemetry and metrics.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// cccv, mscc or mscc-reflex
        #[arg(long)]
        strategy: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Simulate several strategies from identical conditions and tabulate.
    Compare {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated; the first is the baseline for deltas.
        #[arg(long, value_delimiter = ',', required = true)]
        strategies: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Closed-form and brute-force stage currents with predicted stage times.
    Optimize {
        #[arg(long)]
        config: PathBuf,
    },
    /// Export one switching period of the converter waveform.
    Waveform {
        #[arg(long)]
        config: PathBuf,
        /// Phase shift as a fraction of the switching period.
        #[arg(long, allow_hyphen_values = true)]
        phi: f64,
        #[arg(long)]
        out: PathBuf,
        /// Output voltage; defaults to the value matched to the input (n v_in).
        #[arg(long)]
        v_out: Option<f64>,
        #[arg(long, default_value_t = 1024)]
        samples: usize,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Simulation step in seconds.
    #[arg(long)]
    pub dt: Option<f64>,
    /// ideal or pid
    #[arg(long, value_parser = parse_coupling)]
    pub coupling: Option<Coupling>,
}

fn parse_coupling(s: &str) -> Result<Coupling, String> {
    Coupling::parse(s).ok_or_else(|| format!("expected `ideal` or `pid`, got `{s}`"))
}

impl Overrides {
    pub fn apply(&self, scenario: &mut Scenario) -> crate::Result<()> {
        if let Some(dt) = self.dt {
            scenario.sim.dt = dt;
        }
        if let Some(c) = self.coupling {
            scenario.sim.coupling = c;
        }
        scenario.sim.validate()
    }
}

/// Parse arguments and run a verb. Returns the process exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Model(#[from] crate::Error),
    #[error("{0}")]
    Usage(String),
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("writing {path}: {source}")]
    Csv { path: String, source: csv::Error },
}

fn load(config: &Path, overrides: Option<&Overrides>) -> Result<Scenario, CliError> {
    let mut s = Scenario::load(config)?;
    if let Some(o) = overrides {
        o.apply(&mut s)?;
    }
    Ok(s)
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32, CliError> {
    match cmd {
        Command::Run {
            config,
            strategy,
            out: dir,
            overrides,
        } => {
            let s = load(&config, Some(&overrides))?;
            cmd_run(&s, &strategy, &dir, out)
        }
        Command::Compare {
            config,
            strategies,
            out: dir,
            overrides,
        } => {
            let s = load(&config, Some(&overrides))?;
            cmd_compare(&s, &strategies, &dir, out)
        }
        Command::Optimize { config } => cmd_optimize(&load(&config, None)?, out),
        Command::Waveform {
            config,
            phi,
            out: dir,
            v_out,
            samples,
        } => cmd_waveform(&load(&config, None)?, phi, v_out, samples, &dir, out),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |source| CliError::Csv {
        path: path.display().to_string(),
        source,
    }
}

/// Simulate one named strategy and write `<name>_telemetry.csv` and
/// `<name>_metrics.csv` into `dir`.
pub fn cmd_run(
    scenario: &Scenario,
    name: &str,
    dir: &Path,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let strategy = scenario.strategy(name)?;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let result = sim::run(
        &strategy,
        &scenario.pack,
        &scenario.converter,
        &scenario.control,
        &scenario.sim,
    )?;
    write_run_files(dir, name, &result)?;
    let m = &result.metrics;
    let _ = writeln!(out, "{name}: {}", describe(m));
    if m.terminated_by.is_fault() {
        let _ = writeln!(out, "{name}: {}", m.terminated_by);
        Ok(EXIT_FAULT)
    } else {
        Ok(EXIT_OK)
    }
}

fn describe(m: &Metrics) -> String {
    format!(
        "charging time {:.3} h, battery loss {:.3} kWh, converter loss {:.3} kWh, total loss {:.3} kWh, final SoC {:.4}, ended by {}",
        m.charge_time_h,
        m.e_batt_loss_kwh,
        m.e_conv_loss_kwh,
        m.e_total_loss_kwh,
        m.final_soc,
        m.terminated_by.as_str()
    )
}

fn write_run_files(dir: &Path, name: &str, result: &SimOutput) -> Result<(), CliError> {
    write_telemetry_csv(
        &dir.join(format!("{name}_telemetry.csv")),
        &result.telemetry,
    )?;
    write_metrics_csv(&dir.join(format!("{name}_metrics.csv")), &result.metrics)
}

/// Run every named strategy from identical conditions, write per-run files
/// plus `summary.csv`, and print the table.
pub fn cmd_compare(
    scenario: &Scenario,
    names: &[String],
    dir: &Path,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    if names.is_empty() {
        return Err(CliError::Usage("no strategies given".into()));
    }
    let mut seen = HashSet::new();
    for n in names {
        if !seen.insert(n.as_str()) {
            return Err(CliError::Usage(format!("strategy `{n}` listed twice")));
        }
    }
    let list = names
        .iter()
        .map(|n| Ok((n.clone(), scenario.strategy(n)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let results = sim::compare(
        &list,
        &scenario.pack,
        &scenario.converter,
        &scenario.control,
        &scenario.sim,
    )?;
    for (name, r) in &results {
        write_run_files(dir, name, r)?;
    }
    let cmp = Comparison {
        rows: results
            .iter()
            .map(|(n, r)| (n.clone(), r.metrics))
            .collect(),
    };
    write_summary_csv(&dir.join("summary.csv"), &cmp)?;
    let _ = write!(out, "{}", summary_table(&cmp));
    let mut code = EXIT_OK;
    for (name, m) in &cmp.rows {
        if m.terminated_by.is_fault() {
            let _ = writeln!(out, "{name}: {}", m.terminated_by);
            code = EXIT_FAULT;
        }
    }
    Ok(code)
}

/// Aligned text rendering of a comparison: one row per strategy, then the
/// percentage change of each metric relative to the first strategy.
pub fn summary_table(cmp: &Comparison) -> String {
    let width = cmp.rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(8);
    let mut s = format!("{:<width$}", "strategy");
    for (label, _) in COMPARE_METRICS {
        s += &format!(" {label:>18}");
    }
    s.push('\n');
    for (name, m) in &cmp.rows {
        s += &format!("{name:<width$}");
        for (_, f) in COMPARE_METRICS {
            s += &format!(" {:>18.3}", f(m));
        }
        s.push('\n');
    }
    if cmp.rows.len() > 1 {
        s += &format!("\nchange vs {} (%)\n", cmp.rows[0].0);
        for (k, (name, _)) in cmp.rows.iter().enumerate().skip(1) {
            s += &format!("{name:<width$}");
            for (_, f) in COMPARE_METRICS {
                s += &format!(" {:>+18.2}", cmp.delta_pct(f, k));
            }
            s.push('\n');
        }
    }
    s
}

/// Closed-form ladder, predicted stage times, and the brute-force optimum.
pub fn cmd_optimize(scenario: &Scenario, out: &mut dyn Write) -> Result<i32, CliError> {
    let m = &scenario.mscc;
    let eq = scenario.equivalent_battery();
    let currents = stage_currents(m.i_first, m.i_last, m.n_stages)?;
    let pred = predict_stage_times(&currents, &eq)?;
    let mut text = format!(
        "equivalent battery: c1 = {:.1} F, r1 = {:.4} ohm, v0 = {:.2} V, v_t = {:.2} V\n\n",
        eq.c1, eq.r1, eq.v0, eq.v_t
    );
    text += &format!("{:>5} {:>12} {:>14}\n", "stage", "current_A", "predicted_s");
    for (k, (i, t)) in currents.iter().zip(&pred.times).enumerate() {
        text += &format!("{:>5} {:>12.4} {:>14.1}\n", k + 1, i, t);
    }
    text += &format!(
        "total predicted time: {:.1} s ({:.3} h)\n",
        pred.total,
        pred.total / 3600.0
    );
    for x in &pred.unreachable {
        text += &format!(
            "note: stage {} starts above the threshold; its time is reported as 0\n",
            x + 1
        );
    }
    if m.n_stages > 2 {
        let grid = scenario.grid_points;
        let brute = brute_force_optimal_mid(m.i_first, m.i_last, m.n_stages, &eq, grid)?;
        let h = grid_spacing(m.i_first, m.i_last, grid);
        text += &format!("\nbrute-force search ({grid} grid points, cell {h:.4} A)\n");
        text += &format!(
            "{:>5} {:>12} {:>12} {:>12}\n",
            "stage", "closed_A", "grid_A", "diff_cells"
        );
        for (k, b) in brute.iter().enumerate() {
            let c = currents[k + 1];
            text += &format!(
                "{:>5} {:>12.4} {:>12.4} {:>12.2}\n",
                k + 2,
                c,
                b,
                (b - c) / h
            );
        }
        let mut full = currents.clone();
        full[1..m.n_stages - 1].copy_from_slice(&brute);
        let t_brute = predict_stage_times(&full, &eq)?.total;
        text += &format!(
            "brute-force total: {:.1} s (closed form {:.1} s)\n",
            t_brute, pred.total
        );
    } else {
        text += "no middle stages to optimize\n";
    }
    let _ = write!(out, "{text}");
    Ok(EXIT_OK)
}

/// Write `waveform.csv` for one period at `phi` and print the averaged and
/// waveform-integrated output currents.
pub fn cmd_waveform(
    scenario: &Scenario,
    phi: f64,
    v_out: Option<f64>,
    samples: usize,
    dir: &Path,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let p = &scenario.converter.dab;
    let v_out = v_out.unwrap_or(p.n * p.v_in);
    let w = dab::synth_waveform(p, v_out, phi, samples)?;
    let averaged = dab::avg_output_current(p, v_out, phi)?;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join("waveform.csv");
    write_waveform_csv(&path, &w)?;
    let integrated = dab::secondary_referred_current(p, &w);
    let rel = if averaged == 0.0 {
        integrated.abs()
    } else {
        (integrated - averaged).abs() / averaged.abs()
    };
    let _ = writeln!(
        out,
        "phi {phi}: averaged output current {averaged:.4} A, waveform-integrated {integrated:.4} A (difference {:.3} %), i_rms {:.3} A",
        100.0 * rel,
        dab::rms_of_waveform(&w)
    );
    let _ = writeln!(out, "wrote {}", path.display());
    Ok(EXIT_OK)
}

/// `Display` for f64 is the shortest string that parses back to the same
/// value, so every CSV below round-trips exactly.
fn num(x: f64) -> String {
    x.to_string()
}

pub fn write_telemetry_csv(path: &Path, rows: &[TelemetryRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(TELEMETRY_HEADER).map_err(csv_err(path))?;
    for r in rows {
        w.write_record([
            num(r.t),
            num(r.i_batt),
            num(r.v_term),
            num(r.soc),
            num(r.phi),
            num(r.p_batt_loss),
            num(r.p_conv_loss),
            r.mode.as_str().to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn parse_f64(field: Option<&str>, line: usize) -> Result<f64, CliError> {
    field
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| CliError::Usage(format!("line {line}: expected a number")))
}

pub fn read_telemetry_csv(path: &Path) -> Result<Vec<TelemetryRow>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut rows = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let line = k + 2;
        let mode = rec
            .get(7)
            .and_then(Mode::parse)
            .ok_or_else(|| CliError::Usage(format!("line {line}: bad mode")))?;
        rows.push(TelemetryRow {
            t: parse_f64(rec.get(0), line)?,
            i_batt: parse_f64(rec.get(1), line)?,
            v_term: parse_f64(rec.get(2), line)?,
            soc: parse_f64(rec.get(3), line)?,
            phi: parse_f64(rec.get(4), line)?,
            p_batt_loss: parse_f64(rec.get(5), line)?,
            p_conv_loss: parse_f64(rec.get(6), line)?,
            mode,
        });
    }
    Ok(rows)
}

pub fn write_waveform_csv(path: &Path, samples: &[WaveformSample]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(WAVEFORM_HEADER).map_err(csv_err(path))?;
    for s in samples {
        w.write_record([
            num(s.t),
            num(s.v_ab_primary),
            num(s.v_ab_secondary_reflected),
            num(s.v_lk),
            num(s.i_lk),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_waveform_csv(path: &Path) -> Result<Vec<WaveformSample>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut out = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let line = k + 2;
        out.push(WaveformSample {
            t: parse_f64(rec.get(0), line)?,
            v_ab_primary: parse_f64(rec.get(1), line)?,
            v_ab_secondary_reflected: parse_f64(rec.get(2), line)?,
            v_lk: parse_f64(rec.get(3), line)?,
            i_lk: parse_f64(rec.get(4), line)?,
        });
    }
    Ok(out)
}

pub fn write_metrics_csv(path: &Path, m: &Metrics) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let rows = [
        ("charging_time_h", num(m.charge_time_h)),
        ("battery_loss_kwh", num(m.e_batt_loss_kwh)),
        ("converter_loss_kwh", num(m.e_conv_loss_kwh)),
        ("total_loss_kwh", num(m.e_total_loss_kwh)),
        ("delivered_kwh", num(m.e_delivered_kwh)),
        ("final_soc", num(m.final_soc)),
        ("terminated_by", m.terminated_by.as_str().to_string()),
    ];
    w.write_record(["metric", "value"]).map_err(csv_err(path))?;
    for (k, v) in rows {
        w.write_record([k, v.as_str()]).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Summary in the layout of a results table: one row per metric, one column
/// per strategy, then `<metric>_delta_pct` rows relative to the first
/// strategy when there is more than one.
pub fn write_summary_csv(path: &Path, cmp: &Comparison) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let mut header = vec!["metric".to_string()];
    header.extend(cmp.rows.iter().map(|r| r.0.clone()));
    w.write_record(&header).map_err(csv_err(path))?;
    for (label, f) in COMPARE_METRICS {
        let mut rec = vec![label.to_string()];
        rec.extend(cmp.rows.iter().map(|r| num(f(&r.1))));
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    if cmp.rows.len() > 1 {
        for (label, f) in COMPARE_METRICS {
            let mut rec = vec![format!("{label}_delta_pct")];
            rec.extend((0..cmp.rows.len()).map(|k| num(cmp.delta_pct(f, k))));
            w.write_record(&rec).map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(io_err(path))
}
