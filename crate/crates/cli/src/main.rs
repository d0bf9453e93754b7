//! `chanshare`: experiment harness for the channel-assignment library.
//!
//! Subcommands:
//! - `experiment <config>`: throughput-vs-channel-count study over a grid of
//!   instance realizations, CSV + table output.
//! - `collision-scan <config>`: first-collision probability over a contention
//!   window sweep for the overlapped greedy assignments.
//! - `generate`: draw an instance file.
//! - `solve <instance> --alg ...`: run one algorithm on one instance file.
//! - `simulate <instance> <assignment>`: Monte Carlo run on stored inputs.
//! - `oracle ...`: brute-force references for debugging.

mod config;
mod experiment;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use chanshare::analytic::{throughput_nonoverlapped, total_throughput_overlapped_estimate};
use chanshare::assign::{assign_nonoverlapped, assign_overlapped, assign_round_robin};
use chanshare::instance::generate_instance;
use chanshare::io::{self, AssignmentDocument};
use chanshare::mac::{self, CollisionEvent};
use chanshare::oracle;
use chanshare::simulate::{simulate, SimConfig, SimReport};

use config::{Algorithm, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "chanshare",
    version,
    about = "Greedy channel assignment and MAC calculus for cognitive-radio secondary users"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Override the config's master seed (experiment, collision-scan) or the
    /// simulation seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the primary output (CSV or JSON) to this path
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Stdout rendering
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Suppress stdout entirely
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run the throughput study described by a config file
    Experiment { config: PathBuf },
    /// Sweep collision probability over contention windows
    CollisionScan { config: PathBuf },
    /// Draw a random instance and write it as JSON
    Generate {
        #[arg(long)]
        users: usize,
        #[arg(long)]
        channels: usize,
        #[arg(long, default_value_t = 0.7)]
        low: f64,
        #[arg(long, default_value_t = 0.9)]
        high: f64,
    },
    /// Run one assignment algorithm on an instance file
    Solve {
        instance: PathBuf,
        /// alg1, alg2, or rr<k>
        #[arg(long)]
        alg: String,
        /// Optional config file supplying [mac] and [alg2] sections
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Monte Carlo simulation of a stored assignment
    Simulate {
        instance: PathBuf,
        assignment: PathBuf,
        /// Optional config file supplying [mac] and [sim] sections
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        cycles: Option<u64>,
        #[arg(long)]
        window: Option<u32>,
        #[arg(long, default_value = "sim")]
        label: String,
    },
    /// Brute-force reference computations
    Oracle {
        #[command(subcommand)]
        which: OracleCommand,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Exact optimum over all M^N non-overlapped assignments
    Exhaustive { instance: PathBuf },
    /// First-collision probability by backoff-tuple enumeration
    Collision {
        #[arg(long)]
        contenders: usize,
        #[arg(long)]
        window: u32,
        #[arg(long, value_enum, default_value_t = EventArg::PaperEq8)]
        event: EventArg,
    },
    /// Contender-count distribution by subset enumeration
    Contenders {
        /// Comma-separated per-user contention probabilities
        #[arg(long)]
        probs: String,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EventArg {
    PaperEq8,
    Full,
}

impl From<EventArg> for CollisionEvent {
    fn from(e: EventArg) -> Self {
        match e {
            EventArg::PaperEq8 => CollisionEvent::PaperEq8,
            EventArg::Full => CollisionEvent::Full,
        }
    }
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn load_config(path: &Path, seed_override: Option<u64>) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let mut cfg = ExperimentConfig::from_toml(&text)
        .with_context(|| format!("invalid config {}", path.display()))?;
    if let Some(seed) = seed_override {
        cfg.instance.master_seed = seed;
    }
    Ok(cfg)
}

/// A config for subcommands that only need [mac]/[alg2]/[sim]; falls back to
/// defaults when no file is given.
fn load_partial_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => load_config(p, None),
        None => Ok(
            ExperimentConfig::from_toml("[instance]\nnum_users = 1\nn_values = [1]\n")
                .expect("built-in default config is valid"),
        ),
    }
}

fn emit(cli_out: Option<&Path>, cfg_out: Option<&Path>, content: &str) -> Result<Option<PathBuf>> {
    let target = cli_out.or(cfg_out);
    if let Some(path) = target {
        fs::write(path, content)
            .with_context(|| format!("cannot write output {}", path.display()))?;
        return Ok(Some(path.to_path_buf()));
    }
    Ok(None)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Experiment { config } => {
            let cfg = load_config(&config, cli.seed)?;
            let rows = experiment::run_experiment(&cfg)?;
            let csv = experiment::experiment_csv(&rows);
            let written = emit(cli.out.as_deref(), cfg.run.output.as_deref(), &csv)?;
            if !cli.quiet {
                match cli.format {
                    Format::Csv => print!("{csv}"),
                    Format::Table => {
                        print!("{}", experiment::experiment_table(&rows));
                        if let Some(path) = written {
                            println!("csv written to {}", path.display());
                        }
                    }
                }
            }
        }
        Command::CollisionScan { config } => {
            let cfg = load_config(&config, cli.seed)?;
            let rows = experiment::run_collision_scan(&cfg)?;
            let csv = experiment::scan_csv(&rows);
            let written = emit(cli.out.as_deref(), cfg.run.output.as_deref(), &csv)?;
            if !cli.quiet {
                match cli.format {
                    Format::Csv => print!("{csv}"),
                    Format::Table => {
                        print!("{}", experiment::scan_table(&rows));
                        if let Some(path) = written {
                            println!("csv written to {}", path.display());
                        }
                    }
                }
            }
        }
        Command::Generate {
            users,
            channels,
            low,
            high,
        } => {
            let inst = generate_instance(users, channels, low, high, cli.seed.unwrap_or(0))?;
            let json = serde_json::to_string_pretty(&inst)?;
            let written = emit(cli.out.as_deref(), None, &json)?;
            if !cli.quiet {
                match written {
                    Some(path) => println!("instance written to {}", path.display()),
                    None => println!("{json}"),
                }
            }
        }
        Command::Solve {
            instance,
            alg,
            config,
        } => {
            let inst = io::read_instance(&instance)?;
            let alg = Algorithm::parse(&alg)?;
            let cfg = load_partial_config(config.as_deref())?;
            let (doc, summary) = match alg {
                Algorithm::Alg1 => {
                    let (asg, trace) = assign_nonoverlapped(&inst);
                    let mut total = 0.0;
                    for i in 0..inst.num_users {
                        total += throughput_nonoverlapped(&inst, &asg.private_sets[i], i)?;
                    }
                    let summary = format!("alg1: total throughput {total:.4}");
                    (AssignmentDocument::new(asg, Some(trace)), summary)
                }
                Algorithm::Alg2 => {
                    let (asg, derived, trace) = assign_overlapped(&inst, &cfg.alg2, &cfg.mac)?;
                    let est = total_throughput_overlapped_estimate(
                        &inst,
                        &asg,
                        &trace,
                        derived.overhead,
                    )?;
                    let summary = format!(
                        "alg2: estimated total {:.4}, W = {}, delta = {:.4}, P_c = {:.4}",
                        est.total, derived.window, derived.overhead, derived.first_collision_prob
                    );
                    (AssignmentDocument::new(asg, Some(trace)), summary)
                }
                Algorithm::RoundRobin(k) => {
                    let asg = assign_round_robin(&inst, k)?;
                    let summary = if k == 1 {
                        let mut total = 0.0;
                        for i in 0..inst.num_users {
                            total += throughput_nonoverlapped(&inst, &asg.private_sets[i], i)?;
                        }
                        format!("rr1: total throughput {total:.4}")
                    } else {
                        format!("rr{k}: P-blind {k}-user sharing (simulate for throughput)")
                    };
                    (AssignmentDocument::new(asg, None), summary)
                }
            };
            let json = serde_json::to_string_pretty(&doc)?;
            let written = emit(cli.out.as_deref(), None, &json)?;
            if !cli.quiet {
                println!("{summary}");
                match written {
                    Some(path) => println!("assignment written to {}", path.display()),
                    None => println!("{json}"),
                }
            }
        }
        Command::Simulate {
            instance,
            assignment,
            config,
            cycles,
            window,
            label,
        } => {
            let inst = io::read_instance(&instance)?;
            let doc = io::read_assignment(&assignment)?;
            let asg = doc.assignment();
            asg.validate(inst.num_users, inst.num_channels)?;
            let cfg = load_partial_config(config.as_deref())?;
            let solved = match window.or(cfg.sim.window) {
                Some(w) => w,
                None => mac::solve_window(&inst, &asg, &cfg.mac)?,
            };
            let sim_cfg = SimConfig {
                num_cycles: cycles.unwrap_or(cfg.sim.cycles),
                seed: cli.seed.unwrap_or(0),
                window: solved,
                overhead_model: cfg.sim.overhead_model,
                collision_event: cfg.sim.collision_event,
            };
            let report = simulate(&inst, &asg, &cfg.mac, &sim_cfg)?;
            let delta = mac::overhead(&cfg.mac, solved)?;
            let json = serde_json::to_string_pretty(&report)?;
            let written = emit(cli.out.as_deref(), None, &json)?;
            if !cli.quiet {
                match cli.format {
                    Format::Csv => {
                        println!("{}", SimReport::csv_header());
                        println!(
                            "{}",
                            report.csv_row(&label, inst.num_users, inst.num_channels, solved, delta)
                        );
                    }
                    Format::Table => {
                        println!(
                            "simulated {} cycles at W = {solved} (delta {delta:.4})",
                            report.cycles_run
                        );
                        println!(
                            "total throughput {:.4} +- {:.4}, first-collision rate {:.4}",
                            report.total_throughput,
                            report.total_stderr,
                            report.empirical_first_collision_rate
                        );
                        for (i, (t, se)) in report
                            .per_user_throughput
                            .iter()
                            .zip(&report.per_user_stderr)
                            .enumerate()
                        {
                            println!("  user {i}: {t:.4} +- {se:.4}");
                        }
                    }
                }
                if let Some(path) = written {
                    println!("report written to {}", path.display());
                }
            }
        }
        Command::Oracle { which } => match which {
            OracleCommand::Exhaustive { instance } => {
                let inst = io::read_instance(&instance)?;
                let (asg, total) = oracle::exhaustive_nonoverlapped(&inst)?;
                let doc = AssignmentDocument::new(asg, None);
                let json = serde_json::to_string_pretty(&doc)?;
                let written = emit(cli.out.as_deref(), None, &json)?;
                if !cli.quiet {
                    println!("exhaustive optimum: total throughput {total:.6}");
                    match written {
                        Some(path) => println!("assignment written to {}", path.display()),
                        None => println!("{json}"),
                    }
                }
            }
            OracleCommand::Collision {
                contenders,
                window,
                event,
            } => {
                let enumerated = oracle::enumerate_collision(contenders, window, event.into())?;
                if !cli.quiet {
                    println!(
                        "enumerated P_c({contenders} contenders, W = {window}) = {enumerated:.12}"
                    );
                    if event == EventArg::PaperEq8 {
                        let formula = mac::first_collision_prob_conditional(contenders, window)?;
                        println!("closed form                          = {formula:.12}");
                        println!(
                            "difference                           = {:.3e}",
                            formula - enumerated
                        );
                    }
                }
            }
            OracleCommand::Contenders { probs } => {
                let p: Vec<f64> = probs
                    .split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<f64>()
                            .map_err(|e| anyhow!("bad probability '{s}': {e}"))
                    })
                    .collect::<Result<_>>()?;
                if p.is_empty() {
                    bail!("--probs must list at least one probability");
                }
                let enumerated = oracle::enumerate_contenders(&p)?;
                let recurrence = mac::poisson_binomial(&p);
                if !cli.quiet {
                    println!("m     enumeration       recurrence");
                    for (m, (e, r)) in enumerated.iter().zip(&recurrence).enumerate() {
                        println!("{m:<5} {e:<17.12} {r:<17.12}");
                    }
                }
            }
        },
    }
    Ok(())
}
