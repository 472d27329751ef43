use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mlota::experiments::{
    fig4_rows, parse_range, run_sweep, write_csv, write_plot_data, Evaluation, NoiseMode,
    QuantizerMode, ResultRow,
};
use mlota::{build_mst_kruskal, build_mst_prim, ChannelGraph, ExperimentConfig, IvaDistribution, Scheme};

#[derive(Parser)]
#[command(name = "mlota", version, about = "Multi-level over-the-air aggregation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Monte Carlo sweep over received SNR (or device count with --k-sweep).
    Simulate(SimulateArgs),
    /// Common vs unbiased MSE over a P_min/sigma^2 grid.
    Fig4(Fig4Args),
    /// Builds Prim and Kruskal trees for a graph file and compares them.
    MstCheck(MstCheckArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML config; flags given on the command line override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    radius: Option<f64>,
    /// `a,b,c` or `start:stop:step`, in dB.
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<String>,
    /// Device counts to sweep at the first SNR point, e.g. `10,20,30`.
    #[arg(long)]
    k_sweep: Option<String>,
    /// `uniform:lo:hi` or `cgauss:mean:var`.
    #[arg(long)]
    iva: Option<IvaDistribution>,
    /// Comma-separated: dinkelbach,rayleigh,common,unbiased,qam4,qam16.
    #[arg(long)]
    schemes: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write gnuplot-ready per-scheme blocks to this path.
    #[arg(long)]
    plot: Option<PathBuf>,
    #[arg(long)]
    dinkelbach_eps: Option<f64>,
    #[arg(long)]
    dinkelbach_max_iter: Option<usize>,
    #[arg(long)]
    randomization_rounds: Option<usize>,
    #[arg(long, value_parser = ["deterministic", "randomized"])]
    quantizer: Option<String>,
    #[arg(long, value_parser = ["calibrated", "fixed"])]
    noise_mode: Option<String>,
    #[arg(long, value_parser = ["analytic", "simulated"])]
    evaluation: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct Fig4Args {
    #[arg(long, allow_hyphen_values = true, default_value = "-10:30:1")]
    pmin_snr_db: String,
    #[arg(long, default_value_t = 20)]
    k: usize,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MstCheckArgs {
    /// Header `k k`, then `i j re im` per edge (1-based).
    #[arg(long)]
    graph: PathBuf,
}

type CliResult<T> = std::result::Result<T, Box<dyn std::error::Error>>;

fn build_config(args: &SimulateArgs) -> CliResult<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(k) = args.k {
        cfg.k = k;
    }
    if let Some(r) = args.radius {
        cfg.radius = r;
    }
    if let Some(s) = &args.snr_db {
        cfg.snr_db = parse_range(s)?;
    }
    if let Some(s) = &args.k_sweep {
        cfg.k_sweep = parse_range(s)?
            .into_iter()
            .map(|v| {
                if v >= 0.0 && v.fract() == 0.0 {
                    Ok(v as usize)
                } else {
                    Err(format!("device count {v} is not a whole number"))
                }
            })
            .collect::<Result<_, _>>()?;
    }
    if let Some(d) = &args.iva {
        cfg.iva = *d;
    }
    if let Some(s) = &args.schemes {
        cfg.schemes = Scheme::parse_list(s)?;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(v) = args.dinkelbach_eps {
        cfg.dinkelbach_eps = v;
    }
    if let Some(v) = args.dinkelbach_max_iter {
        cfg.dinkelbach_max_iter = v;
    }
    if let Some(v) = args.randomization_rounds {
        cfg.randomization_rounds = v;
    }
    if let Some(q) = &args.quantizer {
        cfg.quantizer = q.parse::<QuantizerMode>()?;
    }
    if let Some(m) = &args.noise_mode {
        cfg.noise_mode = match m.as_str() {
            "fixed" => NoiseMode::Fixed,
            _ => NoiseMode::Calibrated,
        };
    }
    if let Some(e) = &args.evaluation {
        cfg.evaluation = match e.as_str() {
            "simulated" => Evaluation::Simulated,
            _ => Evaluation::Analytic,
        };
    }
    if args.threads.is_some() {
        cfg.threads = args.threads;
    }
    if args.out.is_some() {
        cfg.out = args.out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit_rows(rows: &[ResultRow], out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            write_csv(rows, &mut w)?;
            w.flush()?;
        }
        None => write_csv(rows, io::stdout().lock())?,
    }
    Ok(())
}

fn simulate(args: &SimulateArgs) -> CliResult<ExitCode> {
    let cfg = build_config(args)?;
    log::info!(
        "sweep: {} points x {} trials, schemes {:?}",
        cfg.sweep_points().len(),
        cfg.trials,
        cfg.schemes
    );
    let rows = run_sweep(&cfg)?;
    emit_rows(&rows, cfg.out.as_deref())?;
    if let Some(path) = &args.plot {
        let mut w = BufWriter::new(File::create(path)?);
        write_plot_data(&rows, &mut w)?;
        w.flush()?;
    }
    if rows.iter().all(|r| r.infeasible_rate >= 1.0) {
        eprintln!("every trial was infeasible; no MSE was computed");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn fig4(args: &Fig4Args) -> CliResult<ExitCode> {
    let grid = parse_range(&args.pmin_snr_db)?;
    let rows = fig4_rows(&grid, args.k, args.trials, args.seed)?;
    emit_rows(&rows, args.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn mst_check(args: &MstCheckArgs) -> CliResult<ExitCode> {
    let text = std::fs::read_to_string(&args.graph)?;
    let graph = ChannelGraph::parse_text(&text)?;
    let prim = build_mst_prim(&graph)?;
    let kruskal = build_mst_kruskal(&graph)?;
    let mut out = io::stdout().lock();
    writeln!(out, "devices {} edges {}", graph.k(), graph.edge_count())?;
    writeln!(out, "prim weight {:.12e}", prim.total_weight())?;
    writeln!(out, "kruskal weight {:.12e}", kruskal.total_weight())?;
    writeln!(out, "depth {}", prim.depth())?;
    for i in 0..prim.sources() {
        let parent = prim.parent(i).expect("sources have parents");
        writeln!(
            out,
            "device {} parent {} level {} slot {}",
            i + 1,
            parent + 1,
            prim.level(i),
            prim.transmit_slot(i).expect("sources transmit")
        )?;
    }
    let diff = (prim.total_weight() - kruskal.total_weight()).abs();
    if diff > 1e-12 * kruskal.total_weight() {
        eprintln!("prim and kruskal weights differ by {diff:e}");
        return Ok(ExitCode::FAILURE);
    }
    writeln!(out, "match")?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Fig4(a) => fig4(a),
        Command::MstCheck(a) => mst_check(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
