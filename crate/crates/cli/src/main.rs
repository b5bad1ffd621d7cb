//! `rlcap`: capacity, generating functions, exact counts and maxentropic
//! sampling for general run-length constrained systems.

use std::fmt::Write as _;
use std::io::{BufReader, Write as _};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use rlcap::capacity::{solve_capacity, DEFAULT_TOL};
use rlcap::enumeration::{
    count_delta_window, count_strings, estimate_capacity_from_counts, write_csv, WeightGrid,
};
use rlcap::genfun::{eval_gw, eval_support_gf, eval_system_gf, DEFAULT_TOL as SERIES_TOL};
use rlcap::maxent::{
    build_maxent_with_capacity, entropy_rate_iid, iid_truncation, markov_maxent_rate,
    validate_support, DEFAULT_TUPLE_CAP,
};
use rlcap::system_file::SystemSpec;
use rlcap::text::read_blocks;
use rlcap::weight::{format_real, parse_rational, Constants};
use rlcap::{ConstrainedSystem, Weight};

/// Seed used by `sample` and `rate` when `--seed` is not given.
const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Parser)]
#[command(
    name = "rlcap",
    version,
    about = "Capacity and maxentropic processes of run-length constrained systems"
)]
struct Cli {
    /// Emit a JSON envelope {command, inputs, result, tolerances, seed} per system.
    #[arg(long, global = true)]
    json: bool,

    /// Worker threads when several spec files are given.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve (m-1) G_W(C) = 1 for the capacity C in nats.
    Capacity {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Also report the capacity in bits.
        #[arg(long)]
        bits: bool,
    },
    /// Evaluate a generating function with a certified truncation bound.
    Genfun {
        #[command(flatten)]
        system: SystemArgs,
        /// Evaluation point; `C` (or `capacity`) means the solved capacity.
        #[arg(long, allow_negative_numbers = true)]
        at: String,
        #[arg(long, value_enum, default_value_t = Which::W)]
        which: Which,
        #[arg(long, default_value_t = SERIES_TOL)]
        tol: f64,
    },
    /// Count strings of each weight exactly and print CSV.
    Enumerate {
        #[command(flatten)]
        system: SystemArgs,
        /// Largest weight, as an exact rational such as `60` or `45/2`.
        #[arg(long)]
        max_weight: String,
        /// Write the CSV to this file instead of standard output.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Also report windowed counts with this window width.
        #[arg(long)]
        delta: Option<String>,
    },
    /// Draw IID blocks of the maxentropic process, one `label:length ...` line per block.
    Sample {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, default_value_t = 10)]
        blocks: usize,
        /// 64-bit seed of the ChaCha8 stream [default: 20240601].
        #[arg(long)]
        seed: Option<u64>,
        /// Label of the first run of every block [default: first label].
        #[arg(long)]
        anchor: Option<String>,
    },
    /// Capacity against the entropy rates of the maxentropic processes.
    Rate {
        #[command(flatten)]
        system: SystemArgs,
        /// Monte Carlo blocks; 0 skips the simulation.
        #[arg(long, default_value_t = 0)]
        blocks: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        anchor: Option<String>,
    },
    /// Check that a candidate support yields an input process.
    Validate {
        #[command(flatten)]
        system: SystemArgs,
        /// File with one candidate block per line.
        #[arg(long)]
        support: PathBuf,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        /// Largest number of tuples to concatenate.
        #[arg(long, default_value_t = DEFAULT_TUPLE_CAP)]
        cap: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    #[value(name = "W")]
    W,
    System,
    Support,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// W = {1..kmax} over two labels.
    Rll,
    /// W = {xi^k : k >= 1} over `--labels` labels.
    Async,
}

#[derive(Args, Clone)]
struct SystemArgs {
    /// System spec files (JSON).
    specs: Vec<PathBuf>,
    #[arg(long, value_enum, conflicts_with = "specs")]
    preset: Option<Preset>,
    #[arg(long, requires = "preset")]
    kmax: Option<u64>,
    #[arg(long, requires = "preset")]
    xi: Option<String>,
    #[arg(long, requires = "preset")]
    labels: Option<usize>,
}

/// One system to run a command on.
struct Input {
    description: Value,
    source: Result<SystemSpec, String>,
}

impl SystemArgs {
    fn inputs(&self) -> Result<Vec<Input>, String> {
        match self.preset {
            Some(Preset::Rll) => {
                let kmax = self.kmax.ok_or("preset rll needs --kmax")?;
                Ok(vec![Input {
                    description: json!({"preset": "rll", "kmax": kmax}),
                    source: ConstrainedSystem::rll(kmax)
                        .map(SystemSpec::new)
                        .map_err(|e| e.to_string()),
                }])
            }
            Some(Preset::Async) => {
                let xi = self.xi.as_deref().ok_or("preset async needs --xi")?;
                let m = self.labels.unwrap_or(2);
                let source = Weight::parse(xi, &Constants::default())
                    .and_then(|xi| ConstrainedSystem::asynchronous(xi, m))
                    .map(SystemSpec::new)
                    .map_err(|e| e.to_string());
                Ok(vec![Input {
                    description: json!({"preset": "async", "xi": xi, "labels": m}),
                    source,
                }])
            }
            None if self.specs.is_empty() => Err("give spec files or --preset".into()),
            None => Ok(self
                .specs
                .iter()
                .map(|p| Input {
                    description: json!({"spec": p.display().to_string()}),
                    source: SystemSpec::load(p).map_err(|e| format!("{}: {e}", p.display())),
                })
                .collect()),
        }
    }
}

/// Result of one command on one system.
struct Report {
    text: String,
    result: Value,
    tolerances: Value,
    seed: Option<u64>,
    /// Degenerate or violating, but not an error.
    flagged: bool,
}

impl Report {
    fn new(text: String, result: Value, tolerances: Value) -> Self {
        Self {
            text,
            result,
            tolerances,
            seed: None,
            flagged: false,
        }
    }
}

type Outcome = Result<Report, String>;

fn main() -> ExitCode {
    // usage errors exit with 1; 2 is reserved for degenerate or violating results
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let (name, system) = match &cli.command {
        Command::Capacity { system, .. } => ("capacity", system),
        Command::Genfun { system, .. } => ("genfun", system),
        Command::Enumerate { system, .. } => ("enumerate", system),
        Command::Sample { system, .. } => ("sample", system),
        Command::Rate { system, .. } => ("rate", system),
        Command::Validate { system, .. } => ("validate", system),
    };
    let inputs = match system.inputs() {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };

    let outcomes = run_all(&cli, &inputs);
    let many = inputs.len() > 1;
    let mut code = 0u8;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for (input, outcome) in inputs.iter().zip(outcomes) {
        match outcome {
            Ok(report) => {
                if report.flagged && code == 0 {
                    code = 2;
                }
                let written = if cli.json {
                    let envelope = json!({
                        "command": name,
                        "inputs": input.description,
                        "result": report.result,
                        "tolerances": report.tolerances,
                        "seed": report.seed,
                    });
                    writeln!(
                        out,
                        "{}",
                        serde_json::to_string_pretty(&envelope).expect("json")
                    )
                } else {
                    if many {
                        let _ = writeln!(
                            out,
                            "== {} ==",
                            input.description["spec"].as_str().unwrap_or("")
                        );
                    }
                    out.write_all(report.text.as_bytes())
                };
                if written.is_err() {
                    return ExitCode::from(1);
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                code = 1;
            }
        }
    }
    ExitCode::from(code)
}

/// Runs the command over every input, in parallel when `--jobs` allows; keeps input order.
fn run_all(cli: &Cli, inputs: &[Input]) -> Vec<Outcome> {
    let slots: Vec<Mutex<Option<Outcome>>> = inputs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = cli.jobs.clamp(1, inputs.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(input) = inputs.get(i) else { break };
                let outcome = match &input.source {
                    Ok(spec) => run(&cli.command, spec),
                    Err(e) => Err(e.clone()),
                };
                *slots[i].lock().expect("unpoisoned") = Some(outcome);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| {
            s.into_inner()
                .expect("unpoisoned")
                .expect("every input ran")
        })
        .collect()
}

fn run(command: &Command, spec: &SystemSpec) -> Outcome {
    let sys = &spec.system;
    match command {
        Command::Capacity { tol, bits, .. } => capacity(sys, *tol, *bits),
        Command::Genfun { at, which, tol, .. } => genfun(sys, at, *which, *tol),
        Command::Enumerate {
            max_weight,
            csv,
            delta,
            ..
        } => enumerate(sys, max_weight, csv.as_ref(), delta.as_deref()),
        Command::Sample {
            blocks,
            seed,
            anchor,
            ..
        } => sample(
            sys,
            *blocks,
            seed.unwrap_or(DEFAULT_SEED),
            anchor.as_deref(),
        ),
        Command::Rate {
            blocks,
            seed,
            anchor,
            ..
        } => rate(
            sys,
            *blocks,
            seed.unwrap_or(DEFAULT_SEED),
            anchor.as_deref(),
        ),
        Command::Validate {
            support,
            depth,
            cap,
            ..
        } => validate(sys, support, *depth, *cap),
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn capacity(sys: &ConstrainedSystem, tol: f64, bits: bool) -> Outcome {
    let c = solve_capacity(sys, tol).map_err(err)?;
    let mut text = format!("capacity: {:.10} nats", c.capacity);
    if c.degenerate {
        text.push_str(" (degenerate: only alternating strings)");
    }
    text.push('\n');
    if bits {
        let _ = writeln!(text, "capacity: {:.10} bits", c.bits());
    }
    let _ = writeln!(
        text,
        "bracket: [{}, {}]",
        format_real(c.bracket[0]),
        format_real(c.bracket[1])
    );
    let _ = writeln!(
        text,
        "residual: {:e} (bound {:e})",
        c.residual, c.residual_tolerance
    );
    let mut result = serde_json::to_value(c).map_err(err)?;
    if bits {
        result["capacity_bits"] = json!(c.bits());
    }
    let mut report = Report::new(
        text,
        result,
        json!({"tol": tol, "residual_tolerance": c.residual_tolerance}),
    );
    report.flagged = c.degenerate;
    Ok(report)
}

fn genfun(sys: &ConstrainedSystem, at: &str, which: Which, tol: f64) -> Outcome {
    let s = match at {
        "C" | "capacity" => solve_capacity(sys, DEFAULT_TOL).map_err(err)?.capacity,
        _ => at
            .parse::<f64>()
            .map_err(|_| format!("bad evaluation point {at:?}"))?,
    };
    let (label, v) = match which {
        Which::W => ("G_W", eval_gw(sys.runs(), s, tol)),
        Which::System => ("G_system", eval_system_gf(sys, s, tol)),
        Which::Support => ("G_support", eval_support_gf(sys, s, tol)),
    };
    let v = v.map_err(err)?;
    let text = format!(
        "{label}({}) = {} (tail bound {:e}, {} terms)\n",
        format_real(s),
        format_real(v.value),
        v.tail_bound,
        v.terms_used
    );
    let mut result = serde_json::to_value(v).map_err(err)?;
    result["s"] = json!(s);
    Ok(Report::new(
        text,
        result,
        json!({"tol": tol, "tail_bound": v.tail_bound}),
    ))
}

fn enumerate(
    sys: &ConstrainedSystem,
    max_weight: &str,
    csv: Option<&PathBuf>,
    delta: Option<&str>,
) -> Outcome {
    let max_weight = parse_rational(max_weight).map_err(err)?;
    let grid = WeightGrid::for_system(sys, &max_weight).map_err(err)?;
    let table = count_strings(sys, &grid).map_err(err)?;
    let mut buf = Vec::new();
    write_csv(&table, &grid, &mut buf).map_err(err)?;
    let mut text = String::new();
    match csv {
        Some(path) => std::fs::write(path, &buf).map_err(|e| format!("{}: {e}", path.display()))?,
        None => text.push_str(&String::from_utf8(buf).expect("utf-8 csv")),
    }
    let estimates = estimate_capacity_from_counts(&table, &grid);
    let mut result = json!({
        "unit": grid.unit().to_string(),
        "max_index": grid.max_index(),
        "counts": table.counts().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        "estimates": estimates,
    });
    if let Some(delta) = delta {
        let delta = parse_rational(delta).map_err(err)?;
        let rows = count_delta_window(sys, &grid, &delta).map_err(err)?;
        let _ = writeln!(text, "# window {delta}");
        let _ = writeln!(text, "weight,window_count,window_estimate");
        for r in &rows {
            let est = r.estimate.map(format_real).unwrap_or_default();
            let _ = writeln!(text, "{},{},{}", format_real(r.weight), r.count, est);
        }
        result["window"] = json!({
            "delta": delta.to_string(),
            "counts": rows.iter().map(|r| r.count.to_string()).collect::<Vec<_>>(),
            "estimates": rows.iter().map(|r| r.estimate).collect::<Vec<_>>(),
        });
    }
    Ok(Report::new(text, result, json!({"exact": true})))
}

fn process(
    sys: &ConstrainedSystem,
    anchor: Option<&str>,
) -> Result<rlcap::maxent::MaxentProcess, String> {
    let anchor = anchor.unwrap_or_else(|| sys.labels().labels()[0].as_str());
    let cap = solve_capacity(sys, DEFAULT_TOL).map_err(err)?;
    build_maxent_with_capacity(sys, anchor, cap).map_err(err)
}

fn sample(sys: &ConstrainedSystem, blocks: usize, seed: u64, anchor: Option<&str>) -> Outcome {
    let proc = process(sys, anchor)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = String::new();
    let mut lines = Vec::with_capacity(blocks);
    for _ in 0..blocks {
        let b = proc.sample_block(&mut rng).to_string();
        text.push_str(&b);
        text.push('\n');
        lines.push(b);
    }
    let result = json!({
        "anchor": proc.anchor().as_str(),
        "capacity": proc.capacity(),
        "continue_prob": proc.continue_prob(),
        "blocks": lines,
    });
    let mut report = Report::new(
        text,
        result,
        json!({"normalization": rlcap::maxent::NORMALIZATION_TOL}),
    );
    report.seed = Some(seed);
    Ok(report)
}

fn rate(sys: &ConstrainedSystem, blocks: usize, seed: u64, anchor: Option<&str>) -> Outcome {
    let proc = process(sys, anchor)?;
    let required = 1.0 - 1e-9;
    let truncation = iid_truncation(&proc, required).map_err(err)?;
    let iid = entropy_rate_iid(&proc, truncation).map_err(err)?;
    let markov = markov_maxent_rate(sys).map_err(err)?;
    let mut text = format!("capacity: {:.12} nats\n", proc.capacity());
    let _ = writeln!(
        text,
        "iid-block rate: {:.12} in [{:.12}, {:.12}]",
        iid.rate, iid.lower, iid.upper
    );
    let _ = writeln!(
        text,
        "markov rate: {:.12} in [{:.12}, {:.12}]",
        markov.rate, markov.lower, markov.upper
    );
    let mut result = json!({
        "capacity": proc.capacity(),
        "iid": iid,
        "iid_truncation": truncation,
        "markov": markov,
    });
    let mut report_seed = None;
    if blocks > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mc = proc.sample_rate(blocks, &mut rng).summary();
        let _ = writeln!(
            text,
            "monte carlo rate: {:.12} +- {:e} ({} blocks)",
            mc.rate,
            mc.sigma(),
            mc.blocks
        );
        result["monte_carlo"] = serde_json::to_value(mc).map_err(err)?;
        report_seed = Some(seed);
    }
    let mut report = Report::new(
        text,
        result,
        json!({"capacity": proc.capacity_result().residual_tolerance, "covered_mass": required}),
    );
    report.seed = report_seed;
    Ok(report)
}

fn validate(sys: &ConstrainedSystem, support: &PathBuf, depth: usize, cap: usize) -> Outcome {
    let file = std::fs::File::open(support).map_err(|e| format!("{}: {e}", support.display()))?;
    let candidate = read_blocks(BufReader::new(file), &Constants::default())
        .map_err(|e| format!("{}: {e}", support.display()))?;
    let report = validate_support(&candidate, sys, depth, cap).map_err(err)?;
    let mut text = String::new();
    if report.is_valid() {
        let _ = writeln!(
            text,
            "valid ({} tuples up to length {depth})",
            report.tuples_checked
        );
    } else {
        let _ = writeln!(
            text,
            "invalid: {} closure violations, {} ambiguities ({} tuples up to length {depth})",
            report.closure_violations, report.ambiguities, report.tuples_checked
        );
        for w in &report.closure_witnesses {
            let _ = writeln!(
                text,
                "closure {:?} -> {} (run {} not allowed)",
                w.tuple, w.string, w.offending_run
            );
        }
        for a in &report.ambiguity_witnesses {
            let _ = writeln!(
                text,
                "ambiguous {:?} and {:?} -> {}",
                a.first, a.second, a.string
            );
        }
    }
    let flagged = !report.is_valid();
    let mut out = Report::new(
        text,
        serde_json::to_value(&report).map_err(err)?,
        json!({"depth": depth, "cap": cap}),
    );
    out.flagged = flagged;
    Ok(out)
}
