use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use stifflab::io::{run, Command, LoadedConfig, RunOptions, SolveKind};

#[derive(Parser)]
#[command(name = "stifflab", version, about = "Dirichlet forms of one-dimensional diffusions with thin barriers")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve a resolvent or heat problem for one scenario.
    Solve {
        #[arg(value_enum)]
        kind: Kind,
        #[command(flatten)]
        common: Common,
    },
    /// Sweep thin barriers towards their limit phase.
    Sweep(Common),
    /// Simulate snapping-out Brownian motion or the chain of a form.
    Mc(Common),
    /// Run the identity and invariant battery.
    Check(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Resolvent,
    Heat,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Directory for CSV, SVG and manifest output.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long, env = "STIFFLAB_THREADS")]
    threads: Option<usize>,
    /// Also write SVG plots.
    #[arg(long)]
    svg: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Cmd::Solve { kind, common } => {
            let k = match kind {
                Kind::Resolvent => SolveKind::Resolvent,
                Kind::Heat => SolveKind::Heat,
            };
            (Command::Solve(k), common)
        }
        Cmd::Sweep(c) => (Command::Sweep, c),
        Cmd::Mc(c) => (Command::Mc, c),
        Cmd::Check(c) => (Command::Check, c),
    };
    if let Some(n) = common.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: could not start the thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let opts = RunOptions {
        out_dir: common.out_dir,
        seed: common.seed,
        svg: common.svg,
    };
    let result = LoadedConfig::load(&common.config).and_then(|cfg| run(command, &cfg, &opts));
    match result {
        Ok(outcome) => {
            for line in &outcome.lines {
                println!("{line}");
            }
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
