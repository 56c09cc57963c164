//! Command-line front end. Every command reads one configuration file and
//! writes CSV to stdout and, with `--out`, to a file in that directory.

mod commands;
mod config;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use commands::{
    cmd_bands, cmd_bind, cmd_kernel_table, cmd_map, cmd_threshold, cmd_verify, convexity_suite,
    mollifier_suite, shift_suite, Method, Output, SuiteResult, MAP_HEADER,
};
pub use config::{Axis, BsConfig, BsGridKind, KernelConfig, MapConfig, RunConfig, Shift, VerifyConfig, SUITES};
pub use output::{fmt_g, Cell, Table};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "wellspec", version, about = "Bound states of displaced-well arrays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (dotted key = value lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for output files; `map` defaults to the current directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "both")]
    method: MethodArg,
    /// Worker threads; the WELLSPEC_JOBS environment variable takes precedence.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Bs,
    Direct,
    Both,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Essential-spectrum threshold from the Floquet fiber and the truncated chain.
    Threshold,
    /// Lowest bands on an equispaced quasimomentum grid.
    Bands,
    /// Bound state of the configured displaced array.
    Bind,
    /// Binding energy over a grid of displacements of one well.
    Map,
    /// Numerical checks of the analytic lemmas.
    Verify {
        /// Run only these suites (repeatable).
        #[arg(long = "suite")]
        suites: Vec<String>,
    },
    /// Resolvent kernel, its derivative and the log-convexity ratio.
    KernelTable,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Profile(_) | Error::Spacing { .. } | Error::Disjointness(_) => EXIT_CONFIG,
        _ => EXIT_SOLVER,
    }
}

fn jobs(flag: Option<usize>) -> Result<Option<usize>, Error> {
    match std::env::var("WELLSPEC_JOBS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| Error::Config(format!("WELLSPEC_JOBS must be a positive integer, got '{v}'"))),
        Err(_) => Ok(flag.filter(|&n| n > 0)),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let threads = match jobs(cli.jobs) {
        Ok(j) => j,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p),
        None => RunConfig::parse(""),
    };
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let method = match cli.method {
        MethodArg::Bs => Method::Bs,
        MethodArg::Direct => Method::Direct,
        MethodArg::Both => Method::Both,
    };
    let out_dir = cli.out.clone().or_else(|| cfg.output_dir.clone());

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return EXIT_SOLVER;
        }
    };
    let result = pool.install(|| match &cli.command {
        Command::Threshold => cmd_threshold(&cfg),
        Command::Bands => cmd_bands(&cfg),
        Command::Bind => cmd_bind(&cfg, method),
        Command::Map => {
            // the map is resumable and always lands on disk
            let m = if matches!(cli.method, MethodArg::Both) {
                Method::Direct
            } else {
                method
            };
            cmd_map(&cfg, m, out_dir.as_deref().unwrap_or(std::path::Path::new(".")))
        }
        Command::Verify { suites } => cmd_verify(&cfg, suites),
        Command::KernelTable => cmd_kernel_table(&cfg),
    });
    let out = match result {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    print!("{}", out.text);
    if let (Some(dir), false) = (&out_dir, matches!(cli.command, Command::Map)) {
        let written = std::fs::create_dir_all(dir).and_then(|_| std::fs::write(dir.join(out.file_name), &out.text));
        if let Err(e) = written {
            eprintln!("error: cannot write {}: {e}", dir.join(out.file_name).display());
            return EXIT_SOLVER;
        }
    }
    if out.verification_failed {
        EXIT_VERIFY
    } else {
        EXIT_OK
    }
}
