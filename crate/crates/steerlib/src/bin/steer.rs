//! Thin command-line front end over `steerlib`. All computation lives in
//! the library; this binary only parses arguments, dispatches, and maps
//! errors onto the exit-code taxonomy (0 ok/feasible, 1 bad input,
//! 2 infeasible/failures, 3 inconclusive).

use clap::{Parser, Subcommand};
use steerlib::cli;

#[derive(Parser)]
#[command(name = "steer", version, about = "Steering quantifiers for quantum assemblages")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test whether an assemblage document admits a local-hidden-state model.
    CheckLhs {
        path: String,
        /// Trace-norm residual below which the assemblage counts as LHS.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Bracket the restricted relative entropy of steering.
    Rres {
        path: String,
        /// Frank–Wolfe duality-gap target in bits.
        #[arg(long)]
        inner_tol: Option<f64>,
        /// Multiplicative-weights ascent iterations.
        #[arg(long)]
        outer_iters: Option<usize>,
    },
    /// Trace distances between two assemblage documents.
    Distance {
        path1: String,
        path2: String,
        /// Report only the restricted closed form.
        #[arg(long)]
        restricted: bool,
        /// Also report a seesaw lower bound from N sampled strategies.
        #[arg(long)]
        seesaw: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Entropic upper-bound chain for an assemblage document.
    Bounds { path: String },
    /// Run the theorem-by-theorem property suite.
    Suite {
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Also write the JSON report to this path.
        #[arg(long)]
        out: Option<String>,
    },
    /// Generate an assemblage document.
    Gen {
        /// Generator kind: werner | random.
        #[arg(long)]
        kind: String,
        /// Generator parameters (werner: visibility; random: |X| |A| dim_B).
        #[arg(long, num_args = 0.., value_delimiter = ',')]
        params: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<String>,
    },
}

fn main() {
    let args = Args::parse();
    let result = match &args.command {
        Command::CheckLhs { path, tol } => cli::cmd_check_lhs(path, *tol),
        Command::Rres { path, inner_tol, outer_iters } => {
            cli::cmd_rres(path, *inner_tol, *outer_iters)
        }
        Command::Distance { path1, path2, restricted, seesaw, seed } => {
            let seesaw = if *restricted { None } else { *seesaw };
            cli::cmd_distance(path1, path2, seesaw, *seed)
        }
        Command::Bounds { path } => cli::cmd_bounds(path),
        Command::Suite { trials, seed, out } => cli::cmd_suite(*trials, *seed, out.as_deref()),
        Command::Gen { kind, params, seed, out } => {
            cli::cmd_gen(kind, params, *seed, out.as_deref())
        }
    };
    match result {
        Ok(output) => {
            if !output.stdout.is_empty() {
                println!("{}", output.stdout);
            }
            if !output.stderr.is_empty() {
                eprint!("{}", output.stderr);
            }
            std::process::exit(output.exit_code);
        }
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(1);
        }
    }
}
