use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use whitham_cusp::continuation::{refine_point, run_branch, solve_at_amplitude, solve_at_speed};
use whitham_cusp::diagnostics::{cusp_fit, default_window};
use whitham_cusp::io::{
    emit_svg, read_config, read_profile_json, resolve_output_dir, select_by_waveheight, write_profile_json,
    BranchRecord, PlotData, ProfileDocument,
};
use whitham_cusp::kernel::{certify_complete_monotonicity, kernel_l1_norm, periodized_l1_norm, KernelSpec};
use whitham_cusp::profile::NewtonOptions;
use whitham_cusp::spectral::DEFAULT_MODES;
use whitham_cusp::{CollocationGrid, Error, Result};

#[derive(Parser)]
#[command(
    name = "whitham",
    version,
    about = "Periodic traveling waves of the bidirectional Whitham equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Follow the bifurcation branch to the highest wave.
    Branch(BranchArgs),
    /// Solve for a single profile near the bifurcation point.
    Solve(SolveArgs),
    /// Check the kernel's L¹ norm and complete monotonicity.
    KernelCheck {
        #[arg(long, default_value_t = 4)]
        max_order: usize,
    },
    /// Fit the crest singularity of a stored profile.
    CuspFit {
        #[arg(long)]
        profile: PathBuf,
        /// Fit window as `LO,HI`.
        #[arg(long, value_parser = parse_window)]
        window: Option<(f64, f64)>,
    },
}

#[derive(Args)]
struct BranchArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n_modes: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    epsilon0: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(
        long,
        conflicts_with = "epsilon",
        required_unless_present = "epsilon",
        allow_hyphen_values = true
    )]
    c: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = DEFAULT_MODES)]
    n_modes: usize,
    /// Write the profile here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_window(s: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or("expected LO,HI")?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad number {lo:?}"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad number {hi:?}"))?;
    Ok((lo, hi))
}

fn branch(args: BranchArgs) -> Result<()> {
    let mut overrides = Vec::new();
    if let Some(n) = args.n_modes {
        overrides.push(("n_modes", n.to_string()));
    }
    if let Some(k) = args.k {
        overrides.push(("k", k.to_string()));
    }
    if let Some(e) = args.epsilon0 {
        overrides.push(("epsilon0", format!("{e:?}")));
    }
    let mut config = match &args.config {
        Some(path) => read_config(path, &overrides)?,
        None => whitham_cusp::io::parse_config("", &overrides)?,
    };
    config.output_dir = match args.out {
        Some(dir) => dir,
        None => resolve_output_dir(&config),
    };
    let out = config.output_dir.clone();
    fs::create_dir_all(&out).map_err(|e| Error::Io {
        path: out.clone(),
        source: e,
    })?;

    let grid = CollocationGrid::new(config.n_modes)?;
    let branch = run_branch(&config.continuation(), &grid)?;
    let record = BranchRecord::new(&branch, &config);
    let (csv, _) = record.write(&out, "branch")?;

    let terminal = branch.terminal();
    let mut doc = ProfileDocument::new(&terminal.profile, &grid, "branch-terminal")?;
    doc.metadata.gap_threshold = Some(branch.gap_threshold);
    doc.metadata.arclength = Some(terminal.arclength);
    write_profile_json(&doc, &out.join("terminal.json"))?;

    if config.refine_terminal {
        let fine = CollocationGrid::new(2 * config.n_modes)?;
        let refined = refine_point(terminal, &grid, &fine, &config.newton())?;
        let mut doc = ProfileDocument::new(&refined.profile, &fine, "branch-terminal-refined")?;
        doc.metadata.gap_threshold = Some(branch.gap_threshold);
        doc.metadata.arclength = Some(refined.arclength);
        write_profile_json(&doc, &out.join("terminal_refined.json"))?;
    }
    if config.emit_svg {
        let pts: Vec<(f64, f64)> = branch.points.iter().map(|p| (p.c(), p.waveheight)).collect();
        emit_svg(PlotData::Branch(&pts), &out.join("branch.svg"))?;
        let profiles: Vec<_> = select_by_waveheight(&branch, 4)
            .into_iter()
            .map(|i| branch.points[i].profile.clone())
            .collect();
        emit_svg(
            PlotData::Profiles {
                grid: &grid,
                profiles: &profiles,
            },
            &out.join("profiles.svg"),
        )?;
    }
    println!(
        "{} points, termination {}, terminal c = {:.10}, gap = {:.3e}; wrote {}",
        branch.points.len(),
        branch.termination,
        terminal.c(),
        terminal.gap,
        csv.display()
    );
    Ok(())
}

fn solve(args: SolveArgs) -> Result<()> {
    let grid = CollocationGrid::new(args.n_modes)?;
    let opts = NewtonOptions::default();
    let (sol, source) = match (args.c, args.epsilon) {
        (Some(c), _) => (solve_at_speed(c, args.k, &grid, &opts)?, "solve-speed"),
        (None, Some(eps)) => (solve_at_amplitude(eps, args.k, &grid, &opts)?, "solve-amplitude"),
        (None, None) => return Err(Error::InvalidArgument("need --c or --epsilon".into())),
    };
    let mut doc = ProfileDocument::new(&sol.profile, &grid, source)?;
    doc.metadata.residual_norm = Some(sol.residual_norm());
    match args.out {
        Some(path) => {
            write_profile_json(&doc, &path)?;
            println!(
                "c = {:.12}, {} newton iterations; wrote {}",
                doc.c,
                sol.iterations,
                path.display()
            );
        }
        None => println!("{}", to_json(&doc, Path::new("<stdout>"))?),
    }
    Ok(())
}

fn kernel_check(max_order: usize) -> Result<()> {
    let spec = KernelSpec::default();
    let report = certify_complete_monotonicity(&spec, max_order, 400)?;
    let line = kernel_l1_norm(spec.quadrature_cutoff);
    let periodic = periodized_l1_norm(&spec);
    println!("{report}");
    println!(
        "L1 norm of K   over R (cutoff {}): {line:.12}",
        spec.quadrature_cutoff
    );
    println!("L1 norm of K_p over one period:      {periodic:.12}");
    let norms_ok = (line - 1.0).abs() < 1e-6 && (periodic - 1.0).abs() < 1e-6;
    if report.all_pass() && norms_ok {
        Ok(())
    } else {
        Err(Error::InvalidState("kernel check failed".into()))
    }
}

fn cusp(profile: &Path, window: Option<(f64, f64)>) -> Result<()> {
    let doc = read_profile_json(profile)?;
    let grid = doc.grid()?;
    let window = window.unwrap_or_else(|| default_window(&grid));
    let fit = cusp_fit(&doc.profile(), &grid, window)?;
    eprintln!(
        "cusp fit on [{:.4e}, {:.4e}] ({} nodes): slope {:.4}, r^2 {:.6}, min lower-bound ratio {:.4}",
        fit.window.0, fit.window.1, fit.nodes_used, fit.slope, fit.r_squared, fit.lower_bound_min
    );
    println!("{}", to_json(&fit, Path::new("<stdout>"))?);
    Ok(())
}

fn to_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error: usage: {first}");
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Branch(args) => branch(args),
        Command::Solve(args) => solve(args),
        Command::KernelCheck { max_order } => kernel_check(max_order),
        Command::CuspFit { profile, window } => cusp(&profile, window),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {}: {msg}", e.kind());
            ExitCode::FAILURE
        }
    }
}
