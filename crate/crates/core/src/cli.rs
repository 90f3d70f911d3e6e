//! Command-line front end. [`run`] returns the process exit code:
//! 0 success, 1 usage or I/O error, 2 invalid input, 3 numerical failure
//! (including a failed `verify`).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::actuation::GaitMode;
use crate::dynamics::simulate;
use crate::error::{ConfigError, SimError};
use crate::experiments::{compare_gaits, displacement_per_cycle, CycleMetrics};
use crate::io::{parse_config, render_trajectory_svg, write_trajectory_csv, DocumentError, RunConfig};
use crate::optimize::{optimize_gait, sweep_grid, GaitParams, GridSpec, ParamBounds, ParamName};
use crate::verify::verify_suite;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "flexswim", version, about = "Flagellated swimmer simulator with stiffness-modulated gaits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ConfigArg {
    /// Run document (JSON). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one gait; writes trajectory.csv, metrics.json and trajectory.svg.
    Simulate {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        cycles: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run several presets on the same robot and tabulate displacement per cycle.
    Compare {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        cycles: Option<usize>,
        /// Comma-separated presets.
        #[arg(long, value_delimiter = ',', default_value = "controlled_flexible,fully_flexible,fully_rigid")]
        presets: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scallop check and invariant suite; exits 0 only if everything passes.
    Verify {
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Evaluate the objective over an evenly spaced range of one parameter.
    Sweep {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        param: String,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Search gait parameters for the largest displacement per cycle.
    Optimize {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value_t = 50)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Parameters to free (comma-separated); the rest stay at the configured values.
        #[arg(long, value_delimiter = ',', default_value = "k_min,k_max,beta,duty,phase_offset")]
        params: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Failure carrying its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        Failure {
            code: if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_INVALID },
            message: e.to_string(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure {
            code: EXIT_INVALID,
            message: e.to_string(),
        }
    }
}

impl From<DocumentError> for Failure {
    fn from(e: DocumentError) -> Self {
        Failure {
            code: EXIT_INVALID,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: format!("{}: {e}", path.display()),
    }
}

fn load(arg: &ConfigArg) -> Result<RunConfig, Failure> {
    match &arg.config {
        None => Ok(RunConfig::default()),
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
            parse_config(&text).map_err(|e| Failure {
                code: EXIT_INVALID,
                message: format!("{}: {e}", path.display()),
            })
        }
    }
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| io_failure(path, e))
}

fn out_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))
}

fn to_json(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json");
    s.push('\n');
    s
}

/// Metrics with units spelled out in the keys.
pub fn metrics_json(m: &CycleMetrics, body_length: f64) -> serde_json::Value {
    json!({
        "per_cycle_displacement_m": m.per_cycle_displacement,
        "mean_displacement_m_per_cycle": m.mean,
        "std_displacement_m_per_cycle": m.std,
        "mean_displacement_body_lengths_per_cycle": m.mean / body_length,
        "coefficient_of_variation": m.cv(),
        "forward_consistent": m.forward_consistent(),
        "net_displacement_m": m.net_displacement,
        "n_cycles": m.n_cycles,
        "cycle_period_s": m.cycle_period,
    })
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Simulate { config, cycles, out } => {
            let run = load(&config)?;
            let n = cycles.unwrap_or(run.n_cycles);
            out_dir(&out)?;
            let start = Instant::now();
            let traj = simulate(&run.robot, &run.gait, n, &run.settings)?;
            let elapsed = start.elapsed();
            let metrics = displacement_per_cycle(&traj)?;
            let csv = out.join("trajectory.csv");
            write_trajectory_csv(&traj, &csv).map_err(|e| io_failure(&csv, e))?;
            write(&out.join("metrics.json"), &to_json(&metrics_json(&metrics, run.robot.body.length)))?;
            write(&out.join("trajectory.svg"), &render_trajectory_svg(&traj, &run.robot))?;
            println!(
                "{}: {} cycles in {:.2} s, mean {:.6e} m/cycle ({:.4e} body lengths), net {:.6e} m",
                run.gait.mode,
                n,
                elapsed.as_secs_f64(),
                metrics.mean,
                metrics.mean / run.robot.body.length,
                metrics.net_displacement
            );
        }
        Command::Compare {
            config,
            cycles,
            presets,
            out,
        } => {
            let run = load(&config)?;
            let modes = presets
                .iter()
                .map(|p| p.parse::<GaitMode>())
                .collect::<Result<Vec<_>, _>>()?;
            let n = cycles.unwrap_or(run.n_cycles);
            let report = compare_gaits(&run.robot, &run.gait, &modes, n, &run.settings)?;
            let body = run.robot.body.length;
            let mut table = format!(
                "{:<24} {:>22} {:>14} {:>10}\n",
                "preset", "mean_m_per_cycle", "body_lengths", "cv"
            );
            for row in &report.rows {
                let m = &row.metrics;
                let _ = writeln!(
                    table,
                    "{:<24} {:>22.6e} {:>14.4e} {:>10.3}",
                    row.preset.name(),
                    m.mean,
                    m.mean / body,
                    m.cv()
                );
            }
            if let Some(r) = report.controlled_over_flexible {
                let _ = writeln!(table, "controlled_flexible / fully_flexible = {r:.3}");
            }
            if let Some(r) = report.controlled_over_rigid {
                let _ = writeln!(table, "controlled_flexible / fully_rigid = {r:.3e}");
            }
            print!("{table}");
            if let Some(out) = out {
                out_dir(&out)?;
                let rows: Vec<_> = report
                    .rows
                    .iter()
                    .map(|r| json!({"preset": r.preset.name(), "metrics": metrics_json(&r.metrics, body)}))
                    .collect();
                let doc = json!({
                    "rows": rows,
                    "ordering": report.ordering.iter().map(|m| m.name()).collect::<Vec<_>>(),
                    "controlled_over_flexible": report.controlled_over_flexible,
                    "controlled_over_rigid": report.controlled_over_rigid,
                    "n_cycles": report.n_cycles,
                    "config": run.to_value(),
                });
                write(&out.join("comparison.json"), &to_json(&doc))?;
            }
        }
        Command::Verify { config } => {
            let run = load(&config)?;
            let start = Instant::now();
            let report = verify_suite(&run.robot, &run.mechanism, &run.gait, &run.settings, run.n_cycles);
            for c in &report.checks {
                println!("{} {:<20} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            println!("{:.2} s", start.elapsed().as_secs_f64());
            if !report.passed() {
                return Err(Failure {
                    code: EXIT_NUMERICAL,
                    message: "verification failed".into(),
                });
            }
        }
        Command::Sweep {
            config,
            param,
            from,
            to,
            steps,
            out,
        } => {
            let run = load(&config)?;
            let name: ParamName = param.parse()?;
            if steps == 0 {
                return Err(ConfigError::new("steps", "must be >= 1").into());
            }
            let grid = GridSpec::linspace(name, from, to, steps);
            let table = sweep_grid(&grid, &run.gait, &run.robot, &run.settings)?;
            out_dir(&out)?;
            let mut csv = format!("{name},objective_m_per_cycle,error\n");
            for row in &table.rows {
                let obj = row.objective.map(|v| format!("{v:.16e}")).unwrap_or_default();
                let err = row.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
                let _ = writeln!(csv, "{:.16e},{obj},{err}", row.params.get(name));
                println!(
                    "{name} = {:<12.6} {}",
                    row.params.get(name),
                    row.objective
                        .map(|v| format!("{v:.6e} m/cycle"))
                        .unwrap_or_else(|| format!("failed: {}", row.error.as_deref().unwrap_or(""))),
                );
            }
            write(&out.join("sweep.csv"), &csv)?;
            let rows: Vec<_> = table
                .rows
                .iter()
                .map(|r| json!({"params": r.params, "objective_m_per_cycle": r.objective, "error": r.error}))
                .collect();
            write(&out.join("sweep.json"), &to_json(&json!({"param": name.name(), "rows": rows})))?;
        }
        Command::Optimize {
            config,
            budget,
            seed,
            params,
            out,
        } => {
            let run = load(&config)?;
            let free = params
                .iter()
                .map(|p| p.parse::<ParamName>())
                .collect::<Result<Vec<_>, _>>()?;
            let mut bounds = ParamBounds::point(GaitParams::from_gait(&run.gait));
            for name in free {
                let (lo, hi) = default_range(name);
                bounds = bounds.with(name, lo, hi);
            }
            let result = optimize_gait(&bounds, budget, seed, &run.gait, &run.robot, &run.settings)?;
            out_dir(&out)?;
            let history: Vec<_> = result
                .history
                .iter()
                .map(|e| {
                    json!({
                        "index": e.index,
                        "params": e.params,
                        "objective_m_per_cycle": e.objective,
                        "best_so_far_m_per_cycle": e.best_so_far,
                        "error": e.error,
                    })
                })
                .collect();
            let doc = json!({
                "best_params": result.best_params,
                "best_objective_m_per_cycle": result.best_objective,
                "seed": result.seed,
                "budget": result.budget,
                "evaluations": result.evaluations,
                "restarts": result.restarts,
                "bounds": result.bounds,
                "history": history,
            });
            write(&out.join("optimize.json"), &to_json(&doc))?;
            let b = result.best_params;
            println!(
                "best {:.6e} m/cycle after {} evaluations: k_min {:.4e}, k_max {:.4e}, beta {:.4}, duty {:.4}, phase_offset {:.4}",
                result.best_objective, result.evaluations, b.k_min, b.k_max, b.beta, b.duty, b.phase_offset
            );
        }
    }
    Ok(())
}

/// Search range used by `optimize` for a freed parameter. The stiffness
/// ranges keep k_max / k_min within the validated ratio.
pub fn default_range(name: ParamName) -> (f64, f64) {
    match name {
        ParamName::KMin => (5e-5, 1e-3),
        ParamName::KMax => (10.0, 50.0),
        ParamName::Beta => (0.2, 1.2),
        ParamName::Duty => (0.2, 0.8),
        ParamName::PhaseOffset => (0.0, 0.5),
    }
}
