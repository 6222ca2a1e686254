use std::path::PathBuf;

use clap::{Args, ValueEnum};
use cparity::kci::{StratumDistance, WorstPair};
use cparity::sem::{parity_audit, AuditMode};
use serde::Serialize;

use super::print_json;
use crate::dataset::Dataset;
use crate::failure::Outcome;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Dp,
    Eo,
    Eopp,
    Cp,
}

/// Empirical parity audit of a categorical prediction column.
#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    x: String,
    #[arg(long)]
    a: String,
    #[arg(long)]
    y: Option<String>,
    #[arg(long)]
    z: Option<String>,
    #[arg(long, value_enum, default_value = "dp")]
    mode: ModeArg,
    /// Level of y treated as the advantaged outcome.
    #[arg(long, default_value = "1")]
    advantaged: String,
}

#[derive(Serialize)]
struct Report {
    mode: AuditMode,
    epsilon_hat: f64,
    worst_pair: Option<WorstPair>,
    per_stratum: Vec<StratumDistance>,
    skipped: Vec<String>,
    n: usize,
}

pub fn run(args: &AuditArgs) -> Outcome<()> {
    let data = Dataset::read(&args.input, &[])?;
    let x = data.categorical_column(&args.x)?;
    let a = data.categorical_column(&args.a)?;
    let y = args.y.as_deref().map(|c| data.categorical_column(c)).transpose()?;
    let z = args.z.as_deref().map(|c| data.categorical_column(c)).transpose()?;
    let mode = match args.mode {
        ModeArg::Dp => AuditMode::Dp,
        ModeArg::Eo => AuditMode::Eo,
        ModeArg::Eopp => AuditMode::Eopp,
        ModeArg::Cp => AuditMode::Cp,
    };
    let r = parity_audit(&x, &a, mode, y.as_ref(), z.as_ref(), &args.advantaged)?;
    print_json(&Report {
        mode,
        epsilon_hat: r.epsilon_hat,
        worst_pair: r.worst_pair,
        per_stratum: r.per_stratum,
        skipped: r.skipped,
        n: data.len(),
    })
}
