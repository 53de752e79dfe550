use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use tricomi_dg::harness::{
    cmd_solve, h_sweep, mesh_info, p_sweep, parse_multiplier, penalty_sweep, Overrides, RunConfig, CSV_HEADER,
};
use tricomi_dg::problem::Manufactured;

#[derive(Parser)]
#[command(name = "tricomi", version, about = "DG solver for the Tricomi problem with Morawetz multipliers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the manufactured problem once and report all errors.
    Solve(Flags),
    /// Refine through `--levels` and fit convergence rates.
    HSweep(Flags),
    /// Run degrees `--p-min..=--p-max` on one mesh.
    PSweep(Flags),
    /// L² errors over the 30 x 30 (gamma1, gamma2 = gamma3) grid.
    PenaltySweep(Flags),
    /// Print mesh statistics and stability constants.
    MeshInfo(Flags),
}

#[derive(Args, Clone, Debug, Default)]
struct Flags {
    /// Flat TOML file with the same keys as the flags (underscores).
    #[arg(long)]
    config: Option<PathBuf>,
    /// standard | qt | et
    #[arg(long)]
    space: Option<String>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long, conflicts_with = "mesh")]
    level: Option<usize>,
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    gamma1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    gamma2: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    gamma3: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    gamma4: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    d: Option<f64>,
    /// b0,b1,c0,c1 for b = b0 + b1 x, c = c0 + c1 y.
    #[arg(long, allow_hyphen_values = true)]
    multiplier: Option<String>,
    #[arg(long)]
    quad_order: Option<usize>,
    #[arg(long)]
    orthonormalize: Option<bool>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// SVG log-log chart (sweeps only).
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Comma-separated refinement levels.
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<usize>>,
    #[arg(long)]
    p_min: Option<usize>,
    #[arg(long)]
    p_max: Option<usize>,
    /// Side of the u_h sample grid written by `solve`.
    #[arg(long)]
    samples: Option<usize>,
}

impl Flags {
    fn config(&self) -> Result<RunConfig> {
        let mut c = RunConfig::default();
        if let Some(path) = &self.config {
            c.apply(&Overrides::from_file(path)?)?;
        }
        let multiplier = self.multiplier.as_deref().map(parse_multiplier).transpose()?;
        c.apply(&Overrides {
            space: self.space.clone(),
            p: self.p,
            gamma1: self.gamma1,
            gamma2: self.gamma2,
            gamma3: self.gamma3,
            gamma4: self.gamma4,
            multiplier,
            d: self.d,
            level: self.level,
            mesh: self.mesh.clone(),
            quad_order: self.quad_order,
            orthonormalize: self.orthonormalize,
            out: self.out.clone(),
            svg: self.svg.clone(),
            levels: self.levels.clone(),
            p_min: self.p_min,
            p_max: self.p_max,
            samples: self.samples,
        })?;
        c.validate()?;
        Ok(c)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve(f) => {
            let r = cmd_solve(&f.config()?)?;
            println!("{CSV_HEADER}\n{}", r.csv_row());
        }
        Command::HSweep(f) => {
            let s = h_sweep(&f.config()?, &Manufactured)?;
            print!("{}", s.csv());
            println!("fitted rates: energy {:.3}, l2 {:.3}, residual {:.3}", s.energy_rate, s.l2_rate, s.residual_rate);
        }
        Command::PSweep(f) => {
            println!("{CSV_HEADER}");
            for row in p_sweep(&f.config()?, &Manufactured)? {
                match row.result {
                    Ok(r) => println!("{}", r.csv_row()),
                    Err(e) => println!("# p = {} failed: {e}", row.p),
                }
            }
        }
        Command::PenaltySweep(f) => {
            let g = penalty_sweep(&f.config()?, &Manufactured)?;
            println!("h_max {:.4}, configured-penalty L2 error {:.4e}", g.h_max, g.reference);
            print!("{}", g.csv());
        }
        Command::MeshInfo(f) => print!("{}", mesh_info(&f.config()?)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
