//! Command-line front end. Exit codes: 0 on success, 2 for invalid input,
//! 3 when the solver cannot certify a result.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::{fig1_run, fig2_run_with, fig3_run_with};
use crate::feasibility::FeasibilityOptions;
use crate::io::{
    load_mechanism, load_scenario, write_curve_csv, write_fig1_csv, write_json, write_sweep_csv, CurveRow,
    MechanismFile, RunMetadata,
};
use crate::leakage::{leakage_report, LeakageReport};
use crate::model::{worst_case_order, worst_case_value};
use crate::optimizer::{max_h_for_budget_with, min_epsilon_with, tradeoff_curve, Mode, SearchOptions};

#[derive(Debug, Parser)]
#[command(
    name = "pmlkit",
    version,
    about = "Worst-case utility mechanisms under pointwise maximal leakage"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Design a mechanism for a budget (--eps) or a utility threshold (--h).
    Design(DesignArgs),
    /// Report the leakage of an existing mechanism.
    Analyze(AnalyzeArgs),
    /// Minimal budget for every utility threshold.
    Tradeoff(TradeoffArgs),
    /// Regenerate the data behind one of the reference experiments.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LogBase {
    #[value(name = "e")]
    E,
    #[value(name = "2")]
    Two,
}

impl LogBase {
    fn show(self, nats: f64) -> String {
        match self {
            LogBase::E => format!("{nats:.6} nats"),
            LogBase::Two => format!("{:.6} bits", nats / std::f64::consts::LN_2),
        }
    }
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Bisection tolerance, in nats.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Keep every output column as a program variable.
    #[arg(long)]
    pub no_prune: bool,
}

impl SolverArgs {
    fn options(&self) -> Result<SearchOptions> {
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidParameter(format!("--tol must be > 0, got {}", self.tol)));
        }
        Ok(SearchOptions {
            tol: self.tol,
            feasibility: FeasibilityOptions {
                prune: !self.no_prune,
                ..Default::default()
            },
        })
    }
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("target").required(true).args(["eps", "h"])))]
pub struct DesignArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Privacy budget in nats.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Worst-case utility order to guarantee.
    #[arg(long)]
    pub h: Option<usize>,
    #[arg(long, value_enum, default_value_t = Mode::Safe)]
    pub mode: Mode,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = LogBase::E)]
    pub log_base: LogBase,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub mechanism: PathBuf,
    /// Also write the report to this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = LogBase::E)]
    pub log_base: LogBase,
}

#[derive(Debug, Args)]
pub struct TradeoffArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Safe)]
    pub mode: Mode,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Directory for curve.csv and the witness mechanisms.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
}

impl Figure {
    fn name(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
        }
    }
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub which: Figure,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Leakage and utility summary written by `analyze`.
#[derive(Debug, Serialize)]
pub struct AnalysisReport {
    pub leakage: LeakageReport,
    pub worst_case_order: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_case_value: Option<f64>,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NumericalFailure(_) => 3,
        _ => 2,
    }
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Design(args) => cmd_design(&args, stdout),
        Command::Analyze(args) => cmd_analyze(&args, stdout),
        Command::Tradeoff(args) => cmd_tradeoff(&args, stdout),
        Command::Reproduce(args) => cmd_reproduce(&args, stdout),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

pub fn cmd_design(args: &DesignArgs, stdout: &mut dyn Write) -> Result<()> {
    let opts = args.solver.options()?;
    let scenario = load_scenario(&args.scenario)?;
    let (prior, order) = (scenario.prior(), scenario.order());
    let point = match (args.eps, args.h) {
        (Some(eps), None) => {
            if !eps.is_finite() || eps < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "--eps must be finite and >= 0, got {eps}"
                )));
            }
            max_h_for_budget_with(prior, order, eps, args.mode, &opts)?
        }
        (None, Some(h)) => min_epsilon_with(prior, order, h, args.mode, &opts)?,
        _ => return Err(Error::InvalidParameter("pass exactly one of --eps and --h".into())),
    };
    let report = leakage_report(prior, &point.witness)?;

    ensure_dir(&args.out)?;
    let builder = match args.mode {
        Mode::Safe => "utility_safe",
        Mode::Optimal => "lp_optimal",
    };
    let mut file = MechanismFile::new(builder, &point.witness)
        .with_parameter("h", point.h)
        .with_parameter("min_eps_nats", point.min_eps)
        .with_parameter("mode", point.mode.to_string());
    if let Some(eps) = args.eps {
        file = file.with_parameter("eps_nats", eps);
    }
    write_json(&args.out.join("mechanism.json"), &file)?;
    write_json(&args.out.join("leakage.json"), &report)?;

    writeln!(
        stdout,
        "h={} min_eps={} worst_case_pml={} mode={}",
        point.h,
        args.log_base.show(point.min_eps),
        args.log_base.show(report.worst_case),
        point.mode
    )?;
    Ok(())
}

pub fn cmd_analyze(args: &AnalyzeArgs, stdout: &mut dyn Write) -> Result<()> {
    let scenario = load_scenario(&args.scenario)?;
    let mech = load_mechanism(&args.mechanism)?.mechanism()?;
    scenario.check_mechanism(&mech)?;
    let analysis = AnalysisReport {
        leakage: leakage_report(scenario.prior(), &mech)?,
        worst_case_order: worst_case_order(&mech, scenario.order()),
        worst_case_value: scenario.values().map(|v| worst_case_value(&mech, v)),
    };
    if let Some(out) = &args.out {
        ensure_dir(out)?;
        write_json(&out.join("analysis.json"), &analysis)?;
    }
    writeln!(stdout, "{}", serde_json::to_string_pretty(&analysis)?)?;
    eprintln!(
        "worst-case PML {} at output {}",
        args.log_base.show(analysis.leakage.worst_case),
        analysis.leakage.argmax_output
    );
    Ok(())
}

pub fn cmd_tradeoff(args: &TradeoffArgs, stdout: &mut dyn Write) -> Result<()> {
    let opts = args.solver.options()?;
    let scenario = load_scenario(&args.scenario)?;
    if let Some(out) = &args.out {
        ensure_dir(out)?;
    }
    let curve = tradeoff_curve(scenario.prior(), scenario.order(), args.mode, &opts);
    let mut rows = Vec::with_capacity(curve.len());
    let mut last_err = None;
    for (h, point) in curve {
        match point {
            Ok(p) => {
                let witness_file = match &args.out {
                    Some(out) => {
                        let name = format!("witness_h{h}.json");
                        let file = MechanismFile::new("tradeoff", &p.witness)
                            .with_parameter("h", h)
                            .with_parameter("min_eps_nats", p.min_eps)
                            .with_parameter("mode", p.mode.to_string());
                        write_json(&out.join(&name), &file)?;
                        name
                    }
                    None => String::new(),
                };
                rows.push(CurveRow {
                    h,
                    min_eps_nats: Some(p.min_eps),
                    mode: args.mode,
                    witness_file,
                    status: "ok".into(),
                });
            }
            Err(e) => {
                rows.push(CurveRow {
                    h,
                    min_eps_nats: None,
                    mode: args.mode,
                    witness_file: String::new(),
                    status: format!("failed: {e}"),
                });
                last_err = Some(e);
            }
        }
    }
    let mut csv_text = Vec::new();
    write_curve_csv(&mut csv_text, &rows)?;
    if let Some(out) = &args.out {
        fs::write(out.join("curve.csv"), &csv_text)?;
    }
    stdout.write_all(&csv_text)?;
    match last_err {
        Some(e) if rows.iter().all(|r| r.min_eps_nats.is_none()) => Err(e),
        _ => Ok(()),
    }
}

pub fn cmd_reproduce(args: &ReproduceArgs, stdout: &mut dyn Write) -> Result<()> {
    let opts = args.solver.options()?;
    if args.trials == 0 {
        return Err(Error::InvalidParameter("--trials must be >= 1".into()));
    }
    ensure_dir(&args.out)?;
    let name = args.which.name();
    let csv_path = args.out.join(format!("{name}.csv"));
    match args.which {
        Figure::Fig1 => {
            let records = fig1_run(args.trials, args.seed)?;
            write_fig1_csv(fs::File::create(&csv_path)?, &records)?;
        }
        Figure::Fig2 | Figure::Fig3 => {
            let records = if args.which == Figure::Fig2 {
                fig2_run_with(&opts)?
            } else {
                fig3_run_with(&opts)?
            };
            write_sweep_csv(fs::File::create(&csv_path)?, &records)?;
        }
    }
    write_json(
        &args.out.join(format!("{name}.meta.json")),
        &RunMetadata::new(name, args.seed, args.trials, opts.tol),
    )?;
    writeln!(stdout, "wrote {}", csv_path.display())?;
    Ok(())
}
