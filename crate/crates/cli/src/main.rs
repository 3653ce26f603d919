mod commands;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mixsing", version, about = "Singularity structure and MLE rates of finite mixtures")]
struct Cli {
    /// Worker threads; MIXSING_JOBS takes precedence when set
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Classify a mixing measure and print its singularity report
    Classify {
        measure: PathBuf,
        /// e (exact-fitted) or o (over-fitted)
        #[arg(long, default_value = "e")]
        setting: String,
        /// number of fitted components for the o setting
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 0.02)]
        c0: f64,
        #[arg(long, default_value_t = 500)]
        starts: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Decide solvability of a limiting polynomial system, or walk its ladder
    Polysys {
        /// skew, skew-free, gaussian or sbar
        #[arg(long)]
        system: String,
        #[arg(long, default_value_t = 1)]
        l: usize,
        /// order r (or s for sbar); omit with --ladder
        #[arg(long)]
        r: Option<u32>,
        #[arg(long, default_value_t = 1.0)]
        v: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        m: f64,
        /// comma-separated a_i for sbar
        #[arg(long, allow_hyphen_values = true)]
        a: Option<String>,
        /// comma-separated b_i for sbar
        #[arg(long, allow_hyphen_values = true)]
        b: Option<String>,
        #[arg(long)]
        ladder: bool,
        #[arg(long, default_value_t = 500)]
        starts: usize,
        #[arg(long, default_value_t = 1e-12)]
        solve_tol: f64,
        #[arg(long, default_value_t = 1e-4)]
        unsolve_tol: f64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Build a witness path and check its coefficient and density-ratio limits
    Witness {
        /// s0, s1, s2 or s33
        #[arg(long)]
        kind: String,
        measure: PathBuf,
        /// comma-separated exponents s; defaults to r and r+1
        #[arg(long)]
        s: Option<String>,
        #[arg(long, default_value_t = 0.2)]
        t_max: f64,
        #[arg(long, default_value_t = 7)]
        steps: usize,
        /// CSV of (t, s, W_s, sup_ratio)
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run a convergence-rate study
    RateStudy {
        /// s0-gauss, o-gauss-loc or s1-skew
        #[arg(long)]
        preset: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        reps: Option<usize>,
        /// comma-separated sample sizes
        #[arg(long)]
        n_grid: Option<String>,
        /// report slopes even for exponents below 1/6 in magnitude
        #[arg(long)]
        force_slope: bool,
        /// long-format CSV of (n, rep, distance_name, value)
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Transportation distance between two measures
    Distance {
        a: PathBuf,
        b: PathBuf,
        /// W_r order
        #[arg(long)]
        order: Option<f64>,
        /// comma-separated index κ
        #[arg(long)]
        kappa: Option<String>,
        /// rows of K separated by ';', entries by ','
        #[arg(long)]
        block: Option<String>,
    },
    /// Print the reduced skew-normal derivatives of a given order
    Reduce {
        #[arg(long, default_value_t = 3)]
        order: u32,
        #[arg(long)]
        json: bool,
    },
    /// Draw an i.i.d. sample, one value per line
    Sample {
        measure: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Maximum-likelihood fit of a k-component mixture
    Fit {
        data: PathBuf,
        /// skew_normal, gaussian or gamma
        #[arg(long)]
        family: String,
        #[arg(long)]
        k: usize,
        /// JSON with optional "box", "starts", "max_iter", "tol"
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn jobs(flag: Option<usize>) -> Option<usize> {
    std::env::var("MIXSING_JOBS").ok().and_then(|v| v.parse().ok()).or(flag)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = jobs(cli.jobs) {
        // a second initialization only fails if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match commands::run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let msg = e.to_string();
            let kind = msg.split(':').next().unwrap_or("Error").to_string();
            eprintln!("{}", serde_json::json!({ "error": kind, "message": msg }));
            ExitCode::from(1)
        }
    }
}
