//! `ris-connect`: sweep campaigns, placement, and split solving from the
//! command line.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use ris_connect::deploy::{sa_optimize, trial_contexts, ObjectiveKind, SaParams};
use ris_connect::error::Error;
use ris_connect::experiments::{
    emit, init_parallelism, plan_campaign, run_connectivity_vs_k, run_connectivity_vs_n,
    run_rate_comparison, run_rate_vs_gamma0, run_rate_vs_zeta, run_scheme_on_ctx, EmitTable,
    OutputFormat, Scheme, DEPLOY_BATCH,
};
use ris_connect::scenario::{
    default_scenario, load_scenario, stream_rng, ScenarioConfig, StreamPurpose,
};
use ris_connect::{channel, graph, partition, Position};

#[derive(Parser)]
#[command(
    name = "ris-connect",
    about = "Connectivity simulator and optimizer for surface-assisted UAV networks",
    version
)]
struct Cli {
    /// Scenario configuration document (flat key/value TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the Monte-Carlo trial count.
    #[arg(long, global = true)]
    trials: Option<usize>,

    /// Output path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format: csv | json.
    #[arg(long, global = true, default_value = "csv")]
    format: String,

    /// Placement fitness: lambda2 | snr-sum.
    #[arg(long, global = true, default_value = "lambda2")]
    objective: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SchemeArg {
    /// Schemes to evaluate (comma separated tags).
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "proposed-optimal,proposed,one-link-optimal,one-link,proposed-random-ris,ris-free,ris-free-no-direct"
    )]
    schemes: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Exact-versus-approximated rate table over a share grid and an
    /// element-count grid.
    Fig2 {
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0")]
        rho_grid: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "20,40,60,80,100,120,140,160")]
        n_grid: Vec<usize>,
    },
    /// Mean connectivity per scheme versus the fleet size.
    VsK {
        #[arg(long, value_delimiter = ',', default_value = "2,4,6,8,10,12,14")]
        k_values: Vec<usize>,
        #[command(flatten)]
        schemes: SchemeArg,
    },
    /// Mean connectivity per scheme versus the element count.
    VsN {
        #[arg(long, value_delimiter = ',', default_value = "40,80,120,160,200")]
        n_values: Vec<usize>,
        #[command(flatten)]
        schemes: SchemeArg,
    },
    /// Rates and shares versus the cap fraction.
    VsZeta {
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")]
        zeta_values: Vec<f64>,
    },
    /// Rates and shares versus the reflected-link threshold in dB.
    VsGamma0 {
        #[arg(long, value_delimiter = ',', default_value = "55,60,65,70,75")]
        gamma_values: Vec<f64>,
    },
    /// Optimize the surface position and report the resulting split.
    Deploy {
        /// Write the annealing trace CSV here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the extended connectivity graph (edge list) here.
        #[arg(long)]
        dump_graph: Option<PathBuf>,
    },
    /// Solve the closed-form split at a fixed surface position.
    Partition {
        /// Surface position x,y,z; the configured position when omitted.
        #[arg(long, value_delimiter = ',', num_args = 3)]
        alpha: Option<Vec<f64>>,
        /// Write the connectivity graph (edge list) here.
        #[arg(long)]
        dump_graph: Option<PathBuf>,
        /// Write the per-element channel trace CSV here.
        #[arg(long)]
        dump_realization: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct DeployReport {
    alpha: Position,
    partition: partition::PartitionSolution,
    objective: f64,
    snr_sum: f64,
    config: ScenarioConfig,
}

#[derive(Serialize)]
struct PartitionReport {
    alpha: Position,
    partition: partition::PartitionSolution,
    lambda2_without_surface: f64,
    lambda2_with_surface: Option<f64>,
    config: ScenarioConfig,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config { .. } | Error::Validation { .. } => 2,
        Error::InfeasibleEverywhere => 3,
        _ => 1,
    }
}

fn load_config(cli: &Cli) -> Result<ScenarioConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            load_scenario(&text)?
        }
        None => default_scenario(),
    };
    if let Some(seed) = cli.seed {
        cfg.rng_seed = seed;
        // A seed override re-derives any seed-defaulted fleet layout.
        if cli.config.is_none() {
            cfg.uav_positions =
                ris_connect::scenario::synth_uav_positions(cfg.n_uavs, seed);
        }
    }
    if let Some(trials) = cli.trials {
        cfg.mc_trials = trials;
        cfg.validate()?;
    }
    Ok(cfg)
}

fn write_or_print(out: &Option<PathBuf>, body: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, body).map_err(|e| Error::io(path, e)),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn emit_table<T: EmitTable>(
    table: &T,
    format: OutputFormat,
    out: &Option<PathBuf>,
) -> Result<(), Error> {
    match out {
        Some(path) => emit(table, format, path),
        None => {
            let body = match format {
                OutputFormat::Csv => table.csv(),
                OutputFormat::Json => {
                    serde_json::to_string_pretty(table).expect("table serializes") + "\n"
                }
            };
            print!("{body}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    init_parallelism();
    let cfg = load_config(cli)?;
    let format = OutputFormat::parse(&cli.format)?;
    let kind = ObjectiveKind::parse(&cli.objective)?;
    let trials = cfg.mc_trials;

    let parse_schemes = |arg: &SchemeArg| -> Result<Vec<Scheme>, Error> {
        arg.schemes.iter().map(|s| Scheme::parse(s)).collect()
    };

    match &cli.command {
        Command::Fig2 { rho_grid, n_grid } => {
            let table = run_rate_comparison(&cfg, rho_grid, n_grid, trials)?;
            emit_table(&table, format, &cli.out)
        }
        Command::VsK { k_values, schemes } => {
            let schemes = parse_schemes(schemes)?;
            let result = run_connectivity_vs_k(&cfg, k_values, &schemes, trials, kind)?;
            emit_table(&result, format, &cli.out)
        }
        Command::VsN { n_values, schemes } => {
            let schemes = parse_schemes(schemes)?;
            let result = run_connectivity_vs_n(&cfg, n_values, &schemes, trials, kind)?;
            emit_table(&result, format, &cli.out)
        }
        Command::VsZeta { zeta_values } => {
            let table = run_rate_vs_zeta(&cfg, zeta_values, trials)?;
            emit_table(&table, format, &cli.out)
        }
        Command::VsGamma0 { gamma_values } => {
            let table = run_rate_vs_gamma0(&cfg, gamma_values, trials)?;
            emit_table(&table, format, &cli.out)
        }
        Command::Deploy { trace, dump_graph } => {
            let params = SaParams::for_scenario(&cfg);
            let mut batch_rng = stream_rng(cfg.rng_seed, StreamPurpose::Batch, 0);
            let batch = trial_contexts(&cfg, DEPLOY_BATCH, &mut batch_rng)?;
            let mut sa_rng = stream_rng(cfg.rng_seed, StreamPurpose::Anneal, 0);
            let result = sa_optimize(&cfg, &batch, &params, kind, &mut sa_rng)?;
            if let Some(path) = trace {
                std::fs::write(path, result.trace_csv()).map_err(|e| Error::io(path, e))?;
            }
            if let Some(path) = dump_graph {
                let extended = graph::add_ris_edges(
                    &batch[0].base_graph,
                    &result.partition.uavs,
                    &result.partition.snrs,
                )?;
                std::fs::write(path, extended.to_edge_list()).map_err(|e| Error::io(path, e))?;
            }
            let report = DeployReport {
                alpha: result.alpha,
                partition: result.partition,
                objective: result.objective,
                snr_sum: result.snr_sum,
                config: cfg,
            };
            let body = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
            write_or_print(&cli.out, &body)
        }
        Command::Partition {
            alpha,
            dump_graph,
            dump_realization,
        } => {
            let alpha = match alpha {
                Some(v) => Position::new(v[0], v[1], v[2]),
                None => cfg.ris_position,
            };
            let mut rng = stream_rng(cfg.rng_seed, StreamPurpose::Trial, 0);
            let realization = channel::sample_realization(&cfg, alpha, &mut rng)?;
            let solution = partition::solve_partition(&cfg, alpha, &realization)?;

            let base = {
                let plan = plan_campaign(&cfg, &[Scheme::RisFree], kind, None)?;
                let draw = channel::FadingDraw {
                    ue_ris_amp: realization.ue_ris_amp.clone(),
                    ue_ris_phase: realization.ue_ris_phase.clone(),
                    ris_uav_amp: realization.ris_uav_amp.clone(),
                    ris_uav_phase: realization.ris_uav_phase.clone(),
                    direct_amp: realization.direct_amp.clone(),
                };
                let ctx = ris_connect::deploy::TrialContext::from_draw(&cfg, &draw)?;
                let lambda2_base = run_scheme_on_ctx(&cfg, &plan, Scheme::RisFree, &ctx)?;
                (ctx, lambda2_base)
            };
            let (ctx, lambda2_base) = base;

            let lambda2_with = if solution.feasibility.is_feasible() {
                let extended =
                    graph::add_ris_edges(&ctx.base_graph, &solution.uavs, &solution.snrs)?;
                let l2 = graph::algebraic_connectivity(&extended.laplacian())?;
                if let Some(path) = dump_graph {
                    std::fs::write(path, extended.to_edge_list())
                        .map_err(|e| Error::io(path, e))?;
                }
                Some(l2)
            } else {
                if let Some(path) = dump_graph {
                    std::fs::write(path, ctx.base_graph.to_edge_list())
                        .map_err(|e| Error::io(path, e))?;
                }
                None
            };
            if let Some(path) = dump_realization {
                let mut buf = Vec::new();
                realization.write_trace(&mut buf).map_err(|e| Error::io(path, e))?;
                std::fs::write(path, buf).map_err(|e| Error::io(path, e))?;
            }

            let report = PartitionReport {
                alpha,
                partition: solution,
                lambda2_without_surface: lambda2_base,
                lambda2_with_surface: lambda2_with,
                config: cfg,
            };
            let body = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
            write_or_print(&cli.out, &body)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
