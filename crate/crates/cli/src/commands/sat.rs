use std::path::PathBuf;

use clap::Args;
use cparity::randomization::{evaluate_sat, CostSpec, GroupBrier, SatModelParams};
use serde::Serialize;

use super::randomize::{curves_tsv, KernelArtifact};
use super::{csv_writer, print_json, to_json, write_file};
use crate::failure::{write_error, Failure, Outcome};

/// Simulates the latent-ability test-score model and compares the Bayes,
/// binned Bayes and randomized decisions by Brier score.
#[derive(Debug, Args)]
pub struct SatArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    k: usize,
    #[arg(long, default_value_t = 20)]
    k1: usize,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    mu_z: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    tau_z: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    mu_s: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    sigma_s: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pz_location: f64,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pz_slope: f64,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct Report<'a> {
    n: usize,
    seed: u64,
    k: usize,
    k1: usize,
    params: &'a SatModelParams,
    parity_residual: f64,
    brier: &'a [GroupBrier],
}

pub fn run(args: &SatArgs) -> Outcome<()> {
    if args.n == 0 {
        return Err(Failure::usage("--n must be positive"));
    }
    if args.k == 0 || args.k1 == 0 {
        return Err(Failure::usage("--k and --k1 must be positive"));
    }
    let params = SatModelParams {
        mu_z: args.mu_z,
        tau_z: args.tau_z,
        mu_s: args.mu_s,
        sigma_s: args.sigma_s,
        pz_location: args.pz_location,
        pz_slope: args.pz_slope,
    };
    params.validate()?;
    let cost = CostSpec {
        alpha: args.alpha,
        ..CostSpec::default()
    };
    let ev = evaluate_sat(&params, args.n, args.seed, args.k, args.k1, &cost)?;

    std::fs::create_dir_all(&args.out).map_err(|e| write_error(&args.out, e))?;
    let samples = args.out.join("samples.csv");
    let mut w = csv_writer(&samples)?;
    let werr = |e: csv::Error| write_error(&samples, e);
    w.write_record(["a", "z", "s", "y", "bayes", "binned_bayes", "bin", "decision"]).map_err(werr)?;
    let sample = &ev.sample;
    for t in 0..sample.len() {
        w.write_record([
            sample.a[t].to_string(),
            sample.z[t].to_string(),
            sample.s[t].to_string(),
            sample.y[t].to_string(),
            ev.bayes[t].to_string(),
            ev.binned_bayes[t].to_string(),
            ev.bins[t].to_string(),
            (ev.decision[t] + 1).to_string(),
        ])
        .map_err(werr)?;
    }
    w.flush().map_err(|e| write_error(&samples, e))?;

    let mut table = String::from("group\tdecision\tbrier\n");
    for g in &ev.brier {
        for (name, value) in [
            ("bayes", g.bayes),
            ("binned_bayes", g.binned_bayes),
            ("randomized", g.randomized),
        ] {
            table.push_str(&format!("{}\t{name}\t{value}\n", g.group));
        }
    }
    write_file(&args.out.join("brier.tsv"), &table)?;

    let groups = vec!["0".to_string(), "1".to_string()];
    let artifact = KernelArtifact::new(&ev.kernels, &ev.pmfs.bin_edges, groups.clone(), args.alpha, args.seed);
    write_file(&args.out.join("kernels.json"), &to_json(&artifact)?)?;
    write_file(&args.out.join("curves.tsv"), &curves_tsv(&ev.kernels, &ev.pmfs.bin_edges, &groups))?;

    print_json(&Report {
        n: args.n,
        seed: args.seed,
        k: args.k,
        k1: args.k1,
        params: &params,
        parity_residual: ev.kernels.parity_residual,
        brier: &ev.brier,
    })
}
