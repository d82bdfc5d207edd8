use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use qst::config::{parse_f64_list, RunConfig};
use qst::experiments::{
    run_cell, write_detail_csv, write_summary_csv, RunManifest, RunSummary, SampleSpec,
};
use qst::{
    check_injectivity, estimate, fidelity, simulate_counts, simulate_counts_noisy, CountRecord,
    EstimatorConfig, Frame, Ket, NoiseConfig,
};

#[derive(Parser)]
#[command(
    name = "qst",
    version,
    about = "Qubit state tomography simulations: noisy photon counting against SIC/MUB frames, least-squares reconstruction, fidelity/purity sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect, verify and export measurement frames
    Frames {
        #[command(subcommand)]
        action: FramesCmd,
    },
    /// Simulate one noisy count record for a single input state
    Simulate(SimulateArgs),
    /// Reconstruct a state from a stored count record
    Estimate(EstimateArgs),
    /// Fidelity/purity vs photon budget (Poisson noise only)
    Table1(RunArgs),
    /// Few-photon fidelity vs dark-count parameter
    Table2(RunArgs),
    /// Fidelity/purity vs dark-count parameter at a fixed photon budget
    SweepEps(SweepEpsArgs),
}

#[derive(Subcommand)]
enum FramesCmd {
    /// List the built-in frames
    List,
    /// Run the injectivity check and print the verdict
    Check {
        /// Built-in frame id (sic, mub) or a frame file path
        #[arg(long)]
        frame: String,
    },
    /// Write a frame to a file
    Export {
        #[arg(long)]
        frame: String,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Args)]
struct SimulateArgs {
    /// Built-in frame id (sic, mub) or a frame file path
    #[arg(long, default_value = "mub")]
    frame: String,
    /// Polar Bloch angle in [0, pi]
    #[arg(long)]
    theta: f64,
    /// Azimuthal Bloch angle in [0, 2 pi)
    #[arg(long)]
    phi: f64,
    /// Expected photons per frame element
    #[arg(long, default_value_t = 1000.0)]
    photons: f64,
    /// Dark-count parameter in [0, 1]
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(short, long, default_value = "out")]
    output_dir: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    frame: String,
    /// Counts CSV written by `qst simulate`
    #[arg(long)]
    counts: PathBuf,
    /// JSON sidecar with the noise settings
    #[arg(long)]
    noise: PathBuf,
    /// True-state angles; when given, fidelity against them is reported
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    phi: Option<f64>,
    #[arg(long, default_value_t = 5)]
    n_starts: usize,
    #[arg(long, default_value_t = 2000)]
    max_iterations: usize,
    #[arg(long, default_value_t = 1e-9)]
    objective_tolerance: f64,
    #[arg(long, default_value_t = 1e-8)]
    param_tolerance: f64,
    #[arg(long, default_value_t = 1)]
    start_seed: u64,
    /// Write the reconstruction as JSON
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Default)]
struct RunArgs {
    /// Key/value config file; explicit flags override file values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated frames: built-in ids or frame file paths
    #[arg(long)]
    frames: Option<String>,
    /// Photon budgets: comma list or start:end:step
    #[arg(long)]
    photons: Option<String>,
    /// Dark-count parameters: comma list or start:end:step
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    n_theta: Option<usize>,
    #[arg(long)]
    n_phi: Option<usize>,
    /// Master seed for the per-state count streams
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_starts: Option<usize>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    objective_tolerance: Option<f64>,
    #[arg(long)]
    param_tolerance: Option<f64>,
    /// Worker threads; 0 uses all cores
    #[arg(long)]
    threads: Option<usize>,
    /// Also write per-state detail CSVs
    #[arg(long)]
    detail: bool,
    #[arg(short, long)]
    output_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SweepEpsArgs {
    /// Single frame to sweep (overrides --frames)
    #[arg(long)]
    frame: Option<String>,
    #[command(flatten)]
    run: RunArgs,
}

impl RunArgs {
    fn to_config(&self) -> Result<RunConfig> {
        Ok(RunConfig {
            frames: self
                .frames
                .as_ref()
                .map(|s| s.split(',').map(|x| x.trim().to_string()).collect()),
            photons: self.photons.as_deref().map(parse_f64_list).transpose()?,
            epsilons: self.eps.as_deref().map(parse_f64_list).transpose()?,
            n_theta: self.n_theta,
            n_phi: self.n_phi,
            seed: self.seed,
            n_starts: self.n_starts,
            max_iterations: self.max_iterations,
            objective_tolerance: self.objective_tolerance,
            param_tolerance: self.param_tolerance,
            output_dir: self.output_dir.clone(),
            threads: self.threads,
            detail: self.detail.then_some(true),
        })
    }
}

fn common_defaults() -> RunConfig {
    RunConfig {
        frames: Some(vec!["sic".into(), "mub".into()]),
        photons: None,
        epsilons: None,
        n_theta: Some(20),
        n_phi: Some(20),
        seed: Some(42),
        n_starts: Some(5),
        max_iterations: Some(2000),
        objective_tolerance: Some(1e-9),
        param_tolerance: Some(1e-8),
        output_dir: Some(PathBuf::from("out")),
        threads: Some(0),
        detail: Some(false),
    }
}

fn table1_defaults() -> RunConfig {
    RunConfig {
        photons: Some(vec![1.0, 5.0, 10.0, 25.0, 50.0, 100.0, 1000.0, 10000.0]),
        epsilons: Some(vec![0.0]),
        ..common_defaults()
    }
}

fn table2_defaults() -> RunConfig {
    RunConfig {
        photons: Some(vec![10.0]),
        epsilons: Some(vec![0.1, 0.2, 0.3, 0.4, 0.5]),
        ..common_defaults()
    }
}

fn sweep_eps_defaults() -> RunConfig {
    RunConfig {
        frames: Some(vec!["mub".into()]),
        photons: Some(vec![1000.0]),
        epsilons: Some(parse_f64_list("0:1:0.05").expect("static range")),
        ..common_defaults()
    }
}

struct Resolved {
    frames: Vec<String>,
    photons: Vec<f64>,
    epsilons: Vec<f64>,
    spec: SampleSpec,
    seed: u64,
    est: EstimatorConfig,
    threads: usize,
    detail: bool,
    output_dir: PathBuf,
}

fn resolve(args: &RunArgs, frame_override: Option<&str>, defaults: RunConfig) -> Result<Resolved> {
    let mut cfg = args.to_config()?;
    if let Some(path) = &args.config {
        let file = RunConfig::from_file(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        cfg = cfg.or(file);
    }
    let cfg = cfg.or(defaults);
    let mut frames = cfg.frames.expect("defaults provide frames");
    if let Some(f) = frame_override {
        frames = vec![f.to_string()];
    }
    Ok(Resolved {
        frames,
        photons: cfg.photons.expect("defaults provide photons"),
        epsilons: cfg.epsilons.expect("defaults provide epsilons"),
        spec: SampleSpec::new(cfg.n_theta.unwrap(), cfg.n_phi.unwrap())?,
        seed: cfg.seed.unwrap(),
        est: EstimatorConfig {
            n_starts: cfg.n_starts.unwrap(),
            max_iterations: cfg.max_iterations.unwrap(),
            objective_tolerance: cfg.objective_tolerance.unwrap(),
            param_tolerance: cfg.param_tolerance.unwrap(),
            start_seed: 1,
        },
        threads: cfg.threads.unwrap(),
        detail: cfg.detail.unwrap(),
        output_dir: cfg.output_dir.unwrap(),
    })
}

/// Built-in frame id or frame file path.
fn resolve_frame(spec: &str) -> Result<Frame> {
    if let Some(frame) = Frame::by_name(spec) {
        return Ok(frame);
    }
    if Path::new(spec).exists() {
        return Ok(qst::load_frame(spec)?);
    }
    bail!("unknown frame `{spec}` (expected `sic`, `mub` or a frame file path)");
}

fn run_sweep(command: &str, r: &Resolved) -> Result<()> {
    fs::create_dir_all(&r.output_dir)
        .with_context(|| format!("creating {}", r.output_dir.display()))?;
    let frames: Vec<Frame> = r.frames.iter().map(|s| resolve_frame(s)).collect::<Result<_>>()?;

    let work = || -> Result<Vec<RunSummary>> {
        let mut summaries = Vec::new();
        for frame in &frames {
            for &n in &r.photons {
                for &eps in &r.epsilons {
                    let cell = run_cell(frame, n, eps, &r.spec, r.seed, &r.est)?;
                    if cell.summary.n_converged < cell.summary.n_states {
                        eprintln!(
                            "warning: {}/{} states hit the iteration cap (frame {}, N = {}, eps = {})",
                            cell.summary.n_states - cell.summary.n_converged,
                            cell.summary.n_states,
                            frame.id(),
                            n,
                            eps
                        );
                    }
                    if r.detail {
                        let name = format!("detail_{}_N{}_eps{}.csv", frame.id(), n, eps);
                        write_detail_csv(r.output_dir.join(name), &cell.states)?;
                    }
                    summaries.push(cell.summary);
                }
            }
        }
        Ok(summaries)
    };
    let summaries = if r.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(r.threads)
            .build()
            .context("building worker pool")?
            .install(work)?
    } else {
        work()?
    };

    let csv_path = r.output_dir.join("summary.csv");
    write_summary_csv(&csv_path, &summaries)?;
    RunManifest {
        tool: "qst".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        frames: r.frames.clone(),
        photons: r.photons.clone(),
        epsilons: r.epsilons.clone(),
        n_theta: r.spec.n_theta,
        n_phi: r.spec.n_phi,
        seed: r.seed,
        estimator: r.est,
        threads: r.threads,
        detail: r.detail,
        output_dir: r.output_dir.display().to_string(),
    }
    .write(r.output_dir.join("manifest.json"))?;

    println!("{:<6} {:>12} {:>6} {:>9} {:>9} {:>9} {:>9}", "frame", "photons", "eps", "f_avg", "f_std", "g_avg", "g_std");
    for s in &summaries {
        println!(
            "{:<6} {:>12} {:>6} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
            s.frame_id, s.mean_photons, s.epsilon, s.f_avg, s.f_std, s.gamma_avg, s.gamma_std
        );
    }
    println!("wrote {}", csv_path.display());
    Ok(())
}

fn cmd_frames(action: FramesCmd) -> Result<()> {
    match action {
        FramesCmd::List => {
            for frame in [Frame::sic(), Frame::mub()] {
                println!(
                    "{:<4}  {} elements in C^{}",
                    frame.id(),
                    frame.len(),
                    frame.dim()
                );
            }
        }
        FramesCmd::Check { frame } => {
            let frame = resolve_frame(&frame)?;
            let report = check_injectivity(&frame);
            println!("frame:            {}", report.frame_id);
            println!("verdict:          {}", report.verdict);
            println!("kernel dimension: {}", report.kernel_dimension);
            let sv: Vec<String> = report.singular_values.iter().map(|s| format!("{s:.6}")).collect();
            println!("singular values:  {}", sv.join(" "));
        }
        FramesCmd::Export { frame, output } => {
            let frame = resolve_frame(&frame)?;
            qst::save_frame(&frame, &output)?;
            println!("wrote {}", output.display());
        }
    }
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let frame = resolve_frame(&args.frame)?;
    let psi = Ket::from_angles(args.theta, args.phi)?;
    let config = NoiseConfig::new(args.photons, args.eps, args.seed)?;
    let record = if args.eps == 0.0 {
        simulate_counts(&frame, &psi, &config)?
    } else {
        simulate_counts_noisy(&frame, &psi, &config)?
    };
    fs::create_dir_all(&args.output_dir)
        .with_context(|| format!("creating {}", args.output_dir.display()))?;
    let csv = args.output_dir.join("counts.csv");
    let json = args.output_dir.join("noise.json");
    record.write_files(&csv, &json)?;
    print!("{}", record.to_csv());
    println!("wrote {} and {}", csv.display(), json.display());
    Ok(())
}

#[derive(Serialize)]
struct EstimateJson {
    frame_id: String,
    /// Row-major [re, im] pairs.
    rho: Vec<Vec<[f64; 2]>>,
    params: [f64; 4],
    objective_value: f64,
    iterations_used: usize,
    starts_tried: usize,
    converged: bool,
    warning: Option<String>,
    fidelity: Option<f64>,
    purity: f64,
}

fn cmd_estimate(args: EstimateArgs) -> Result<()> {
    let frame = resolve_frame(&args.frame)?;
    let record = CountRecord::read_files(&args.counts, &args.noise)?;
    let cfg = EstimatorConfig {
        n_starts: args.n_starts,
        max_iterations: args.max_iterations,
        objective_tolerance: args.objective_tolerance,
        param_tolerance: args.param_tolerance,
        start_seed: args.start_seed,
    };
    let result = estimate(&frame, &record, &cfg)?;
    if let Some(w) = &result.warning {
        eprintln!("warning: {w}");
    }

    let target = match (args.theta, args.phi) {
        (Some(t), Some(p)) => Some(Ket::from_angles(t, p)?),
        (None, None) => None,
        _ => bail!("--theta and --phi must be given together"),
    };
    let fid = target
        .as_ref()
        .map(|psi| fidelity(psi, &result.rho))
        .transpose()?;

    println!("frame:     {}", frame.id());
    for i in 0..2 {
        let row: Vec<String> = (0..2)
            .map(|j| {
                let z = result.rho.entry(i, j);
                format!("{:+.6}{:+.6}i", z.re, z.im)
            })
            .collect();
        println!("rho[{i}]:    {}", row.join("  "));
    }
    println!("objective: {:.6e}", result.objective_value);
    println!("converged: {} ({} iterations, {} starts)", result.converged, result.iterations_used, result.starts_tried);
    println!("purity:    {:.6}", result.rho.purity());
    if let Some(f) = fid {
        println!("fidelity:  {f:.6}");
    }

    if let Some(path) = args.output {
        let json = EstimateJson {
            frame_id: frame.id().to_string(),
            rho: (0..2)
                .map(|i| {
                    (0..2)
                        .map(|j| {
                            let z = result.rho.entry(i, j);
                            [z.re, z.im]
                        })
                        .collect()
                })
                .collect(),
            params: result.params.values(),
            objective_value: result.objective_value,
            iterations_used: result.iterations_used,
            starts_tried: result.starts_tried,
            converged: result.converged,
            warning: result.warning.clone(),
            fidelity: fid,
            purity: result.rho.purity(),
        };
        fs::write(&path, serde_json::to_string_pretty(&json)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Frames { action } => cmd_frames(action),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Table1(args) => {
            let r = resolve(&args, None, table1_defaults())?;
            run_sweep("table1", &r)
        }
        Command::Table2(args) => {
            let r = resolve(&args, None, table2_defaults())?;
            run_sweep("table2", &r)
        }
        Command::SweepEps(args) => {
            let r = resolve(&args.run, args.frame.as_deref(), sweep_eps_defaults())?;
            run_sweep("sweep-eps", &r)
        }
    }
}
