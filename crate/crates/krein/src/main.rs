use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

/// Spectra of self-adjoint extensions: preservation verdicts, gap
/// eigenvalues, resolvent probes and boundary-condition rendering, driven by
/// a TOML configuration.
#[derive(Parser)]
#[command(name = "krein", version)]
struct Args {
    /// Path to the run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for report files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Override both the rank and root tolerances.
    #[arg(long)]
    tol: Option<f64>,
    /// Override the series truncation level count.
    #[arg(long)]
    trunc: Option<usize>,
    /// Worker threads (affects wall time only, never results).
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {:?}: {e}", args.config);
            return ExitCode::from(1);
        }
    };
    let mut cfg = match krein::cli::parse_config(&text) {
        Ok(cfg) => cfg,
        Err(errors) => {
            eprintln!("error: invalid configuration {:?}:", args.config);
            for e in errors {
                eprintln!("  {e}");
            }
            return ExitCode::from(1);
        }
    };
    if let Some(tol) = args.tol {
        cfg.tolerances.rank = tol;
        cfg.tolerances.root = tol;
    }
    if let Some(trunc) = args.trunc {
        cfg.tolerances.trunc = trunc;
    }

    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads.max(1))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot build thread pool: {e}");
            return ExitCode::from(1);
        }
    };

    match pool.install(|| krein::cli::run(&cfg, &args.out)) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if outcome.tolerance_sensitive {
                eprintln!("note: at least one verdict is tolerance-sensitive (exit code 2)");
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
