use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use wayfinder::cognitive_map::Path;
use wayfinder::engine::{run_with_trace, Knowledge, RunResult};
use wayfinder::experiment::{
    experiment_scenario, reference_means, Procedure, GATES, GATE_A, GATE_B, GATE_C,
};
use wayfinder::harness::{
    run_batch, sweep, BatchReport, Calibration, DEFAULT_RUNS, SWEEP_PROCEDURES,
};
use wayfinder::scenario::{parse_scenario, DestinationId, Scenario, SimulationConfig, Target};

#[derive(Parser)]
#[command(
    name = "wayfinder",
    version,
    about = "Pedestrian route choice simulator"
)]
struct Cli {
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario document; the bundled gate experiment when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Override a header parameter, e.g. `--set gamma=12`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one run and print its result row.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Experiment procedure (1-4); closes the matching gates.
        #[arg(long)]
        procedure: Option<u8>,
        #[arg(long, env = "WAYFINDER_SEED", default_value_t = 0)]
        seed: u64,
        /// Per-step agent positions (CSV).
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Per-step route evaluations (CSV).
        #[arg(long)]
        choices: Option<PathBuf>,
    },
    /// Repeat runs over consecutive seeds and aggregate gate counts.
    Batch {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = DEFAULT_RUNS)]
        runs: usize,
        /// C1, C2, C3 or `custom` (weights from the scenario and `--set`).
        #[arg(long, default_value = "C3")]
        calibration: String,
        /// Procedures to run; all four when omitted.
        #[arg(long, value_delimiter = ',')]
        procedure: Vec<u8>,
        /// First seed of the batch.
        #[arg(long, env = "WAYFINDER_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Rank parameter sets read from a CSV grid by distance to the observed counts.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// CSV with a header of parameter keys and an optional `label` column.
        #[arg(long)]
        grid: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RUNS)]
        runs: usize,
        #[arg(long, env = "WAYFINDER_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Compare a batch report CSV with the observed gate counts.
    Compare {
        #[arg(long)]
        report: PathBuf,
    },
    /// Dump a floor field as a CSV grid; unreachable cells are left empty.
    Fields {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// `path:ID` for the field of an opening or destination, or `obstacle`.
        #[arg(long)]
        dump: String,
    },
    /// Print the paths tree of a destination as JSON.
    Tree {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        procedure: Option<u8>,
        /// Destination id; the first destination when omitted.
        #[arg(long)]
        destination: Option<char>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: some runs hit the step cap");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn output(path: Option<&FsPath>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn load(args: &ScenarioArgs) -> Result<Scenario> {
    let scenario = match &args.scenario {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            parse_scenario(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => experiment_scenario(),
    };
    let mut config = scenario.config;
    apply_overrides(&mut config, &args.overrides)?;
    Ok(scenario.with_config(config)?)
}

fn apply_overrides(config: &mut SimulationConfig, overrides: &[String]) -> Result<()> {
    for kv in overrides {
        let Some((k, v)) = kv.split_once('=') else {
            bail!("expected KEY=VALUE, got `{kv}`");
        };
        config
            .set(k.trim(), v.trim())
            .map_err(|e| anyhow::anyhow!("{}: {e}", k.trim()))?;
    }
    Ok(())
}

fn procedure(n: u8) -> Result<Procedure> {
    Procedure::from_number(n).with_context(|| format!("unknown procedure {n}, expected 1-4"))
}

fn with_procedure(scenario: Scenario, n: Option<u8>) -> Result<Scenario> {
    match n {
        Some(n) => Ok(procedure(n)?.scenario(&scenario)?),
        None => Ok(scenario),
    }
}

fn execute(cli: Cli) -> Result<bool> {
    let out = cli.out.as_deref();
    match cli.command {
        Command::Run {
            scenario,
            procedure,
            seed,
            trace,
            choices,
        } => {
            let label = scenario
                .scenario
                .as_ref()
                .map_or("experiment".to_string(), |p| p.display().to_string());
            let s = with_procedure(load(&scenario)?, procedure)?;
            let k = Knowledge::build(&s)?;
            let (result, run_trace) = run_with_trace(&s, &k, seed);
            if let Some(path) = trace {
                let mut w = csv::Writer::from_path(&path)?;
                for r in &run_trace.positions {
                    w.serialize(r)?;
                }
                w.flush()?;
            }
            if let Some(path) = choices {
                let mut w = csv::Writer::from_path(&path)?;
                for r in &run_trace.choices {
                    w.serialize(r)?;
                }
                w.flush()?;
            }
            let mut w = csv::Writer::from_writer(output(out)?);
            w.write_record(RUN_HEADER)?;
            w.write_record(run_row(&label, procedure, &result))?;
            w.flush()?;
            Ok(result.complete)
        }
        Command::Batch {
            scenario,
            runs,
            calibration,
            procedure: numbers,
            seed,
        } => {
            let base = load(&scenario)?;
            let mut config = base.config;
            let label = if calibration.eq_ignore_ascii_case("custom") {
                "custom".to_string()
            } else {
                let c = Calibration::preset(&calibration)?;
                config = c.apply(&config);
                // explicit overrides still win over the preset
                apply_overrides(&mut config, &scenario.overrides)?;
                c.label
            };
            let procedures = if numbers.is_empty() {
                Procedure::ALL.to_vec()
            } else {
                numbers.into_iter().map(procedure).collect::<Result<_>>()?
            };
            let mut w = csv::Writer::from_writer(output(out)?);
            w.write_record(batch_header())?;
            let mut complete = true;
            for p in procedures {
                let report = run_batch(&base, p, &config, runs, seed, &label)?;
                complete &= report.incomplete == 0;
                w.write_record(batch_row(&report))?;
            }
            w.flush()?;
            Ok(complete)
        }
        Command::Sweep {
            scenario,
            grid,
            runs,
            seed,
        } => {
            let base = load(&scenario)?;
            let configs = read_grid(&grid, &base.config)?;
            let ranked = sweep(&base, &configs, runs, seed)?;
            let mut w = csv::Writer::from_writer(output(out)?);
            let mut header = vec!["rank", "label", "total_score"];
            let score_cols: Vec<String> = SWEEP_PROCEDURES
                .iter()
                .map(|p| format!("score_p{p}"))
                .collect();
            header.extend(score_cols.iter().map(String::as_str));
            header.extend(SWEEP_KEYS);
            header.push("incomplete");
            w.write_record(&header)?;
            let mut complete = true;
            for (rank, e) in ranked.iter().enumerate() {
                let incomplete: usize = e.reports.iter().map(|r| r.incomplete).sum();
                complete &= incomplete == 0;
                let c = &e.config;
                let mut row = vec![
                    (rank + 1).to_string(),
                    e.label.clone(),
                    format!("{:.4}", e.total_score),
                ];
                row.extend(e.reports.iter().map(|r| format!("{:.4}", r.score)));
                row.extend([
                    c.kappa_tt.to_string(),
                    c.kappa_q.to_string(),
                    c.kappa_f.to_string(),
                    c.gamma.to_string(),
                    c.rho_c.to_string(),
                    c.tau_c.to_string(),
                    c.tau_a.to_string(),
                    incomplete.to_string(),
                ]);
                w.write_record(&row)?;
            }
            w.flush()?;
            Ok(complete)
        }
        Command::Compare { report } => {
            let rows = read_report(&report)?;
            let mut w = csv::Writer::from_writer(output(out)?);
            w.write_record([
                "label",
                "procedure",
                "gate",
                "simulated_mean",
                "simulated_std",
                "observed_mean",
                "difference",
            ])?;
            for row in &rows {
                let reference = reference_means(row.procedure);
                for g in 0..GATES.len() {
                    w.write_record([
                        row.label.clone(),
                        row.procedure.to_string(),
                        gate_name(g).to_string(),
                        format!("{:.4}", row.means[g]),
                        format!("{:.4}", row.stds[g]),
                        format!("{:.4}", reference.0[g]),
                        format!("{:.4}", row.means[g] - reference.0[g]),
                    ])?;
                }
            }
            w.flush()?;
            Ok(true)
        }
        Command::Fields { scenario, dump } => {
            let s = load(&scenario)?;
            let k = Knowledge::build(&s)?;
            let values = if dump == "obstacle" {
                k.obstacle.values().clone()
            } else if let Some(id) = dump.strip_prefix("path:") {
                let mut chars = id.chars();
                let (Some(c), None) = (chars.next(), chars.next()) else {
                    bail!("expected a single-character id in `{dump}`");
                };
                let target = Target::from_char(c)
                    .filter(|t| k.fields.contains_key(t))
                    .with_context(|| format!("no opening or destination `{c}`"))?;
                k.fields[&target].values().clone()
            } else {
                bail!("expected `path:ID` or `obstacle`, got `{dump}`");
            };
            let mut w = csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(output(out)?);
            for row in values.rows() {
                w.write_record(row.iter().map(|v| {
                    if v.is_finite() {
                        format!("{v:.6}")
                    } else {
                        String::new()
                    }
                }))?;
            }
            w.flush()?;
            Ok(true)
        }
        Command::Tree {
            scenario,
            procedure,
            destination,
        } => {
            let s = with_procedure(load(&scenario)?, procedure)?;
            let k = Knowledge::build(&s)?;
            let dest = match destination {
                Some(c) => DestinationId(c),
                None => s
                    .destinations()
                    .first()
                    .map(|d| d.id)
                    .context("scenario has no destination")?,
            };
            let tree = k
                .trees
                .get(&dest)
                .with_context(|| format!("no destination `{dest}`"))?;
            let entries: Vec<_> = tree
                .entries()
                .iter()
                .map(|((region, first), e)| {
                    json!({
                        "region": region.0,
                        "first": first.as_char().to_string(),
                        "best": path_json(&e.best),
                        "alternates": e.alternates.iter().map(path_json).collect::<Vec<_>>(),
                    })
                })
                .collect();
            let doc = json!({ "destination": dest.0.to_string(), "entries": entries });
            let mut o = output(out)?;
            serde_json::to_writer_pretty(&mut o, &doc)?;
            writeln!(o)?;
            Ok(true)
        }
    }
}

const RUN_HEADER: [&str; 8] = [
    "scenario",
    "procedure",
    "seed",
    "steps",
    "count_a",
    "count_b",
    "count_c",
    "mean_travel_time_s",
];

fn run_row(label: &str, procedure: Option<u8>, r: &RunResult) -> Vec<String> {
    vec![
        label.to_string(),
        procedure.map_or(String::new(), |p| p.to_string()),
        r.seed.to_string(),
        r.steps.to_string(),
        r.count(GATE_A).to_string(),
        r.count(GATE_B).to_string(),
        r.count(GATE_C).to_string(),
        format!("{:.4}", r.mean_travel_time()),
    ]
}

const SWEEP_KEYS: [&str; 7] = [
    "kappa_tt", "kappa_q", "kappa_f", "gamma", "rho_c", "tau_c", "tau_a",
];

fn gate_name(g: usize) -> &'static str {
    ["a", "b", "c"][g]
}

fn batch_header() -> Vec<String> {
    let mut h: Vec<String> = ["label", "procedure", "runs", "incomplete"]
        .map(String::from)
        .to_vec();
    for g in 0..3 {
        for stat in ["mean", "std", "min", "max"] {
            h.push(format!("{stat}_{}", gate_name(g)));
        }
    }
    h.push("mean_travel_time_s".into());
    h.push("score".into());
    h
}

fn batch_row(r: &BatchReport) -> Vec<String> {
    let mut row = vec![
        r.label.clone(),
        r.procedure.to_string(),
        r.runs.to_string(),
        r.incomplete.to_string(),
    ];
    for g in &r.gates {
        row.extend([
            format!("{:.4}", g.mean),
            format!("{:.4}", g.std),
            g.min.to_string(),
            g.max.to_string(),
        ]);
    }
    row.push(format!("{:.4}", r.mean_travel_time));
    row.push(format!("{:.4}", r.score));
    row
}

struct ReportRow {
    label: String,
    procedure: Procedure,
    means: [f64; 3],
    stds: [f64; 3],
}

fn read_report(path: &FsPath) -> Result<Vec<ReportRow>> {
    let mut r =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("report lacks a `{name}` column"))
    };
    let label = col("label")?;
    let proc_col = col("procedure")?;
    let mean_cols = [col("mean_a")?, col("mean_b")?, col("mean_c")?];
    let std_cols = [col("std_a")?, col("std_b")?, col("std_c")?];
    let mut rows = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        let number = |i: usize| -> Result<f64> {
            record[i]
                .parse()
                .with_context(|| format!("row {}: bad number `{}`", line + 1, &record[i]))
        };
        let p: u8 = record[proc_col]
            .parse()
            .with_context(|| format!("row {}: bad procedure", line + 1))?;
        rows.push(ReportRow {
            label: record[label].to_string(),
            procedure: procedure(p)?,
            means: [
                number(mean_cols[0])?,
                number(mean_cols[1])?,
                number(mean_cols[2])?,
            ],
            stds: [
                number(std_cols[0])?,
                number(std_cols[1])?,
                number(std_cols[2])?,
            ],
        });
    }
    Ok(rows)
}

fn read_grid(
    path: &FsPath,
    defaults: &SimulationConfig,
) -> Result<Vec<(String, SimulationConfig)>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let headers = r.headers()?.clone();
    let mut grid = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        let mut config = *defaults;
        let mut label = format!("row{}", line + 1);
        for (key, value) in headers.iter().zip(record.iter()) {
            if key == "label" {
                label = value.to_string();
            } else if !value.is_empty() {
                config
                    .set(key, value)
                    .map_err(|e| anyhow::anyhow!("row {}, {key}: {e}", line + 1))?;
            }
        }
        config.validate()?;
        grid.push((label, config));
    }
    if grid.is_empty() {
        bail!("{} has no parameter rows", path.display());
    }
    Ok(grid)
}

fn path_json(p: &Path) -> serde_json::Value {
    json!({
        "targets": p.targets.iter().map(|t| t.as_char().to_string()).collect::<Vec<_>>(),
        "length_m": p.length,
        "free_flow_time_s": p.free_flow_time,
    })
}
