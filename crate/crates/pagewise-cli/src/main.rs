use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use pagewise::ElementType;
use pagewise_cli::{run_benchmark, BenchOptions, CliError};

#[derive(Parser)]
#[command(
    name = "pagewise",
    about = "Batched linear-algebra / FEM benchmark harness",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum EtypeArg {
    P1,
    P2,
}

impl From<EtypeArg> for ElementType {
    fn from(e: EtypeArg) -> Self {
        match e {
            EtypeArg::P1 => ElementType::P1,
            EtypeArg::P2 => ElementType::P2,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run benchmark <ID> (1..=7) and print its table(s).
    ///
    /// 1 sphere volumes, 2 sphere normals/face counts, 3 torus inertia by
    /// volume integration, 4 the same by surface integration, 5 2D K/M
    /// assembly, 6 3D K/M assembly, 7 L-shape boundary value problem.
    Bench {
        id: usize,
        /// Finest refinement level (each benchmark has a hard cap).
        #[arg(long)]
        max_level: Option<u32>,
        /// Element type for benchmarks 5-7 (default: both for 5/6, P2 for 7).
        #[arg(long)]
        etype: Option<EtypeArg>,
        /// Quadrature exactness degree override (1..=4).
        #[arg(long)]
        gqo: Option<usize>,
        /// Worker threads for the page-parallel kernels (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Write the table(s) as CSV to this path.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Dump generated meshes to PATH.l<level>[.ext].
        #[arg(long)]
        mesh_out: Option<PathBuf>,
        /// Export K/M/b in MatrixMarket format to PATH.l<level>.{K,M,b}[.ext].
        #[arg(long)]
        mm_out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Bench {
            id,
            max_level,
            etype,
            gqo,
            threads,
            csv,
            mesh_out,
            mm_out,
        } => {
            if let Some(n) = threads {
                if n == 0 {
                    eprintln!("usage error: --threads must be positive");
                    return ExitCode::from(2);
                }
                if let Err(e) = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                {
                    eprintln!("failed to configure thread pool: {e}");
                    return ExitCode::from(1);
                }
            }
            if let Some(g) = gqo {
                if !(1..=4).contains(&g) {
                    eprintln!("usage error: --gqo must be in 1..=4");
                    return ExitCode::from(2);
                }
            }
            let opts = BenchOptions {
                max_level,
                etype: etype.map(Into::into),
                gqo,
                mesh_out,
                mm_out,
            };
            match run_benchmark(id, &opts) {
                Ok(reports) => {
                    for report in &reports {
                        print!("{}", report.to_text());
                        println!();
                    }
                    if let Some(path) = csv {
                        let joined: String =
                            reports.iter().map(|r| r.to_csv()).collect::<Vec<_>>().join("\n");
                        if let Err(e) = std::fs::write(&path, joined) {
                            eprintln!("failed to write {}: {e}", path.display());
                            return ExitCode::from(1);
                        }
                    }
                    ExitCode::SUCCESS
                }
                Err(e @ CliError::Usage(_)) => {
                    eprintln!("{e}");
                    ExitCode::from(2)
                }
                Err(e @ CliError::Numerical(_)) => {
                    eprintln!("{e}");
                    ExitCode::from(1)
                }
            }
        }
    }
}
