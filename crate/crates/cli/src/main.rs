use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hausdorff_cli::{
    exit, parse_scalar, run_area, run_coarea, run_limit_study, run_net, CliError, CoareaArgs,
    CommandOutput, CurveFamily, NetArgs, Scene,
};

#[derive(Parser)]
#[command(
    name = "gmt",
    version,
    about = "Hausdorff integrals, coarea checks and Riemann nets"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Also write the JSON report to this file.
    #[arg(long, global = true, value_name = "PATH")]
    json_out: Option<PathBuf>,
    /// Also write the CSV table to this file.
    #[arg(long, global = true, value_name = "PATH")]
    csv_out: Option<PathBuf>,
    /// Worker threads; 0 picks one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a field over the charts of a scene file.
    Area {
        scene: PathBuf,
        /// Integrand in x1..xn; defaults to the scene's field, then 1.
        #[arg(long)]
        field: Option<String>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Compare both sides of the coarea formula on a grid.
    Coarea {
        /// Level-set function H(x1..xn).
        #[arg(long)]
        h: String,
        #[arg(long, default_value = "1")]
        f: String,
        #[arg(long, value_parser = parse_scalar, allow_hyphen_values = true)]
        a: f64,
        #[arg(long, value_parser = parse_scalar, allow_hyphen_values = true)]
        b: f64,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Grid cells per axis.
        #[arg(long, default_value_t = 256)]
        res: usize,
        /// Panels of the outer t integral (two levels each).
        #[arg(long, default_value_t = 64)]
        slices: usize,
        /// Lower corner of the grid cube.
        #[arg(long, default_value = "-3", value_parser = parse_scalar, allow_hyphen_values = true)]
        lo: f64,
        /// Upper corner of the grid cube.
        #[arg(long, default_value = "3", value_parser = parse_scalar, allow_hyphen_values = true)]
        hi: f64,
        #[arg(long, default_value_t = 0.02)]
        max_rel_err: f64,
    },
    /// Integrals over a curve family against its limit curve.
    LimitStudy {
        family: PathBuf,
        #[arg(long, default_value = "1")]
        field: String,
        #[arg(long, default_value_t = 50)]
        k_max: u64,
        /// Convergence tolerance for the final gap.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Quadrature tolerance per curve; defaults to --tol.
        #[arg(long)]
        quad_tol: Option<f64>,
    },
    /// Riemann sums of f(x1) over [a, b] under bisection refinement.
    Net {
        #[arg(long)]
        f: String,
        #[arg(long, value_parser = parse_scalar, allow_hyphen_values = true)]
        a: f64,
        #[arg(long, value_parser = parse_scalar, allow_hyphen_values = true)]
        b: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 40)]
        max_steps: usize,
    },
}

fn seed() -> Result<u64, CliError> {
    match std::env::var("GMT_SEED") {
        Ok(s) => s.trim().parse().map_err(|_| {
            CliError::validation(format!("GMT_SEED must be an unsigned integer, got `{s}`"))
        }),
        Err(_) => Ok(0),
    }
}

fn dispatch(command: Command) -> Result<CommandOutput, CliError> {
    match command {
        Command::Area { scene, field, tol } => {
            let scene = Scene::from_path(&scene)?;
            run_area(&scene, field.as_deref(), tol, seed()?)
        }
        Command::Coarea {
            h,
            f,
            a,
            b,
            dim,
            res,
            slices,
            lo,
            hi,
            max_rel_err,
        } => run_coarea(&CoareaArgs {
            h,
            f,
            a,
            b,
            dim,
            res,
            slices,
            lo,
            hi,
            max_rel_err,
        }),
        Command::LimitStudy {
            family,
            field,
            k_max,
            tol,
            quad_tol,
        } => {
            let family = CurveFamily::from_path(&family)?;
            run_limit_study(&family, &field, k_max, tol, quad_tol.unwrap_or(tol))
        }
        Command::Net {
            f,
            a,
            b,
            tol,
            max_steps,
        } => run_net(&NetArgs {
            f,
            a,
            b,
            tol,
            max_steps,
        }),
    }
}

fn emit(out: &CommandOutput, common: &Common) -> Result<(), CliError> {
    let write = |path: &PathBuf, text: &str| {
        fs::write(path, text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
    };
    if let Some(p) = &common.json_out {
        write(p, &out.json)?;
    }
    if let Some(p) = &common.csv_out {
        write(p, &out.csv)?;
    }
    let mut stdout = std::io::stdout().lock();
    stdout
        .write_all(out.stdout().as_bytes())
        .and_then(|_| stdout.flush())
        .map_err(|e| CliError::validation(format!("stdout: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(exit::VALIDATION as u8);
        }
    };
    if cli.common.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.common.threads)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(exit::VALIDATION as u8);
        }
    }
    let result = dispatch(cli.command).and_then(|out| {
        emit(&out, &cli.common)?;
        Ok(out)
    });
    match result {
        Ok(out) => {
            for w in &out.warnings {
                eprintln!("{w}");
            }
            ExitCode::from(out.code as u8)
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            if let Some(out) = &e.output {
                if let Err(e2) = emit(out, &cli.common) {
                    eprintln!("error: {}", e2.message);
                }
            }
            ExitCode::from(e.code as u8)
        }
    }
}
