use std::path::PathBuf;

use clap::{Args, ValueEnum};
use cparity::kci::{kci_test, KciConfig, NullMethod, NullWeights};
use cparity::DataColumn;
use serde::Serialize;

use super::print_json;
use crate::dataset::Dataset;
use crate::failure::{Failure, Outcome};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NullArg {
    Gamma,
    Mc,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WeightsArg {
    Covariance,
    Product,
}

/// Kernel conditional-independence test of x and a given z.
#[derive(Debug, Args)]
pub struct TestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    x: String,
    #[arg(long)]
    a: String,
    #[arg(long)]
    z: Option<String>,
    #[arg(long, default_value_t = 1e-3)]
    lambda: f64,
    #[arg(long, value_enum, default_value = "gamma")]
    null: NullArg,
    #[arg(long, default_value_t = 5000)]
    mc_reps: usize,
    #[arg(long, value_enum, default_value = "covariance")]
    weights: WeightsArg,
    /// Replace the a column by 1{a >= Q}.
    #[arg(long, value_name = "Q")]
    binarize_at: Option<f64>,
    /// Treat this column as categorical (repeatable).
    #[arg(long = "categorical", value_name = "COL")]
    categorical: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Serialize)]
struct ConfigEcho<'a> {
    x: &'a str,
    a: &'a str,
    z: Option<&'a str>,
    lambda: f64,
    null: &'static str,
    mc_reps: usize,
    weights: NullWeights,
    binarize_at: Option<f64>,
    seed: u64,
}

#[derive(Serialize)]
struct Report<'a> {
    statistic: f64,
    hs_norm_sq: f64,
    p_value: f64,
    n: usize,
    method: &'static str,
    mixture_terms: usize,
    config: ConfigEcho<'a>,
}

pub fn run(args: &TestArgs) -> Outcome<()> {
    let data = Dataset::read(&args.input, &args.categorical)?;
    let x = data.column(&args.x)?;
    let a = match args.binarize_at {
        None => data.column(&args.a)?,
        Some(q) => {
            let values = data
                .numeric(&args.a)?
                .ok_or_else(|| Failure::usage(format!("--binarize-at needs a numeric column, {} is not", args.a)))?;
            let codes = values.iter().map(|&v| usize::from(v >= q)).collect();
            DataColumn::from_codes(codes, vec!["0".into(), "1".into()])?
        }
    };
    let z = match &args.z {
        Some(name) => Some(data.column(name)?),
        None => None,
    };
    let cfg = KciConfig {
        lambda: args.lambda,
        null_method: match args.null {
            NullArg::Gamma => NullMethod::Gamma,
            NullArg::Mc => NullMethod::MonteCarlo,
        },
        mc_reps: args.mc_reps,
        weights: match args.weights {
            WeightsArg::Covariance => NullWeights::Covariance,
            WeightsArg::Product => NullWeights::Product,
        },
        seed: args.seed,
        ..KciConfig::default()
    };
    let r = kci_test(&x, &a, z.as_ref(), &cfg)?;
    print_json(&Report {
        statistic: r.statistic,
        hs_norm_sq: r.hs_norm_sq,
        p_value: r.p_value,
        n: r.n,
        method: r.method.as_str(),
        mixture_terms: r.mixture_weights.len(),
        config: ConfigEcho {
            x: &args.x,
            a: &args.a,
            z: args.z.as_deref(),
            lambda: cfg.lambda,
            null: cfg.null_method.as_str(),
            mc_reps: cfg.mc_reps,
            weights: cfg.weights,
            binarize_at: args.binarize_at,
            seed: cfg.seed,
        },
    })
}
