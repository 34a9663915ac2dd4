use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use silva_cli::config::{parse_config_with, SimConfig};
use silva_cli::{check, run_from_config};

/// Lagrangian Voronoi solver for 2-D incompressible flow.
#[derive(Parser, Debug)]
#[command(name = "silva", version, about)]
struct Cli {
    /// Path to the flat key = value run configuration.
    #[arg(long)]
    config: PathBuf,

    /// Output directory (overrides the config).
    #[arg(long)]
    output_dir: Option<PathBuf>,

    /// Worker thread count (overrides config and SILVA_THREADS; 0 = auto).
    #[arg(long)]
    threads: Option<usize>,

    /// Case id (overrides the config).
    #[arg(long)]
    case: Option<String>,

    /// Seeds per side (overrides the config).
    #[arg(long = "N")]
    n: Option<usize>,

    /// Reynolds number, a float or `inf` (overrides the config).
    #[arg(long)]
    re: Option<String>,

    /// Final simulation time (overrides the config).
    #[arg(long)]
    tend: Option<f64>,

    /// Suppress warnings and progress output (the summary line stays).
    #[arg(long)]
    quiet: bool,

    /// Accept unknown config keys with a warning instead of an error.
    #[arg(long)]
    lenient: bool,

    /// Run the invariant suite on the configured case for a few steps
    /// instead of a full simulation.
    #[arg(long)]
    check: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read config {}: {e}", cli.config.display());
            return Ok(ExitCode::from(2));
        }
    };
    let (mut cfg, warnings) = match parse_config_with(&text, cli.lenient) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {}: {e}", cli.config.display());
            return Ok(ExitCode::from(2));
        }
    };
    if !cli.quiet {
        for w in &warnings {
            eprintln!("warning: {w}");
        }
    }
    if let Err(e) = apply_overrides(&mut cfg, &cli) {
        eprintln!("error: {e}");
        return Ok(ExitCode::from(2));
    }

    let threads = cli
        .threads
        .or_else(|| {
            std::env::var("SILVA_THREADS")
                .ok()
                .and_then(|v| v.parse::<usize>().ok())
        })
        .unwrap_or(cfg.threads);
    if threads > 0 {
        // ignore the error if a global pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }

    if cli.check {
        let report = check::run_check(&cfg, 12)?;
        for line in &report.lines {
            println!("{line}");
        }
        return Ok(if report.failures == 0 {
            println!("check passed: {} invariants", report.lines.len());
            ExitCode::SUCCESS
        } else {
            println!("check failed: {} of {} invariants", report.failures, report.lines.len());
            ExitCode::from(1)
        });
    }

    let out_dir = cli
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
    let outcome = run_from_config(&cfg, &out_dir)?;
    println!(
        "case={} N={} steps={} t={:.6} E={:.9e} div_l2={:.6e}",
        cfg.case.id(),
        cfg.n,
        outcome.summary.steps,
        outcome.summary.final_time,
        outcome.summary.final_energy,
        outcome.summary.final_div_l2,
    );
    Ok(ExitCode::SUCCESS)
}

fn apply_overrides(cfg: &mut SimConfig, cli: &Cli) -> anyhow::Result<()> {
    if let Some(case) = &cli.case {
        let kind = silva_core::bench::CaseKind::from_id(case)?;
        // keep case-dependent defaults coherent when only the case changes
        if cfg.case != kind {
            cfg.reynolds = kind.default_reynolds();
            cfg.t_end = kind.default_t_end();
            cfg.case = kind;
        }
    }
    if let Some(n) = cli.n {
        anyhow::ensure!(n >= 4, "N must be at least 4, got {n}");
        cfg.n = n;
    }
    if let Some(re) = &cli.re {
        let lower = re.to_ascii_lowercase();
        cfg.reynolds = if lower == "inf" || lower == "infinity" {
            f64::INFINITY
        } else {
            re.parse::<f64>()
                .map_err(|_| anyhow::anyhow!("cannot parse --re value `{re}`"))?
        };
        anyhow::ensure!(cfg.reynolds > 0.0, "--re must be positive or inf");
    }
    if let Some(t) = cli.tend {
        anyhow::ensure!(t >= 0.0 && t.is_finite(), "--tend must be finite and >= 0");
        cfg.t_end = t;
    }
    Ok(())
}
