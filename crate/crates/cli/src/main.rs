//! `thirring-lab`: run the experiments and write report.json plus CSV tables.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use thirring_core::experiments::{self, ExperimentConfig, ExperimentId, ExperimentReport};

#[derive(Parser, Debug)]
#[command(name = "thirring-lab", version, about = "Numerical experiments for the 1+1D Thirring model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Data-family convergence in L^p and H^s.
    DataConvergence(Overrides),
    /// Limits along TwoLog(alpha) sequences.
    Bifurcation(Overrides),
    /// Sign dichotomy of u*v along the two FourLog sequences.
    ProductDichotomy(Overrides),
    /// Cone-phase slopes for general constants.
    SelfSimilar(Overrides),
    /// Boundary residual of the principal-value pairing.
    PvResidual(Overrides),
    /// Lattice integrator accuracy, conservation and a priori bound.
    SolverValidation(Overrides),
    /// Every experiment, in a fixed order.
    All(Overrides),
}

#[derive(Args, Debug, Clone, Default)]
struct Overrides {
    /// TOML file with one optional section per experiment.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: output_dir from the config, else ./results).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Lattice step for solver-validation.
    #[arg(long)]
    mesh_delta: Option<f64>,
    /// Length of the epsilon sequences.
    #[arg(long)]
    eps_count: Option<usize>,
    /// Phase targets for bifurcation and pv-residual.
    #[arg(long)]
    alpha: Vec<f64>,
    /// Mass for product-dichotomy.
    #[arg(long)]
    mass: Option<f64>,
    /// Lebesgue exponents for data-convergence.
    #[arg(long)]
    p: Vec<f64>,
    /// Sobolev orders for data-convergence.
    #[arg(long, allow_hyphen_values = true)]
    s: Vec<f64>,
    /// Accepted for interface compatibility; every computation is deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(d) = self.mesh_delta {
            cfg.solver_validation.mesh_delta = d;
        }
        if let Some(n) = self.eps_count {
            cfg.data_convergence.eps_count = n;
            cfg.bifurcation.count = n;
            cfg.product_dichotomy.count = n;
            cfg.pv_residual.count = n;
        }
        if !self.alpha.is_empty() {
            cfg.bifurcation.alpha = self.alpha.clone();
            cfg.pv_residual.alpha = self.alpha.clone();
        }
        if let Some(m) = self.mass {
            cfg.product_dichotomy.mass = m;
        }
        if !self.p.is_empty() {
            cfg.data_convergence.p = self.p.clone();
        }
        if !self.s.is_empty() {
            cfg.data_convergence.s = self.s.clone();
        }
    }
}

fn print_report(r: &ExperimentReport) {
    println!("{} ({:.2} s)", r.experiment, r.runtime.elapsed_seconds);
    for v in &r.verdicts {
        println!("  {} {}: {}", if v.passed { "PASS" } else { "FAIL" }, v.criterion, v.detail);
    }
}

fn execute(cli: Cli) -> Result<bool> {
    let (id, ov) = match cli.command {
        Command::DataConvergence(o) => (Some(ExperimentId::DataConvergence), o),
        Command::Bifurcation(o) => (Some(ExperimentId::Bifurcation), o),
        Command::ProductDichotomy(o) => (Some(ExperimentId::ProductDichotomy), o),
        Command::SelfSimilar(o) => (Some(ExperimentId::SelfSimilar), o),
        Command::PvResidual(o) => (Some(ExperimentId::PvResidual), o),
        Command::SolverValidation(o) => (Some(ExperimentId::SolverValidation), o),
        Command::All(o) => (None, o),
    };
    let mut cfg = match &ov.config {
        Some(path) => ExperimentConfig::load(path).with_context(|| format!("reading {}", path.display()))?,
        None => ExperimentConfig::default(),
    };
    ov.apply(&mut cfg);
    cfg.validate()?;
    let out = ov.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("results"));

    let passed = match id {
        Some(id) => {
            let report = experiments::run(id, &cfg)?;
            report.save(&out)?;
            print_report(&report);
            report.passed()
        }
        None => {
            let suite = experiments::run_all(&cfg)?;
            suite.save(&out)?;
            suite.reports.iter().for_each(print_report);
            suite.passed()
        }
    };
    println!("reports written to {}", out.display());
    Ok(passed)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
