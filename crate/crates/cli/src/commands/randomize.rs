use std::path::{Path, PathBuf};

use clap::Args;
use cparity::randomization::kernels::{randomize, row_means};
use cparity::randomization::{assign_bin, estimate_conditional_pmfs, solve_eo_kernels, CostSpec, MarkovKernelPair};
use nalgebra::DMatrix;
use serde::Serialize;

use super::{csv_writer, print_json, sibling, to_json, write_file};
use crate::dataset::Dataset;
use crate::failure::{write_error, Failure, Outcome};

/// Fits the equalized-odds Markov kernel pair for a score column.
#[derive(Debug, Args)]
pub struct RandomizeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    s: String,
    #[arg(long)]
    a: String,
    #[arg(long)]
    y: String,
    /// Number of quantile bins of the score.
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Number of output columns; defaults to k.
    #[arg(long)]
    k1: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Kernel artifact (JSON); the curves go to <out>.curves.tsv.
    #[arg(long)]
    out: PathBuf,
    /// Copy of the input with a `randomized` output column appended.
    #[arg(long)]
    scored: Option<PathBuf>,
}

#[derive(Serialize)]
pub struct KernelArtifact {
    pub k: usize,
    pub k1: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Levels of a mapped to groups 0 and 1.
    pub groups: Vec<String>,
    pub bin_edges: Vec<f64>,
    /// Row-major `k x k1` kernels for groups 0 and 1.
    pub kernels: [Vec<Vec<f64>>; 2],
    pub parity_residual: f64,
    pub objective: f64,
}

pub fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl KernelArtifact {
    pub fn new(pair: &MarkovKernelPair, edges: &[f64], groups: Vec<String>, alpha: f64, seed: u64) -> Self {
        KernelArtifact {
            k: pair.k0.nrows(),
            k1: pair.k0.ncols(),
            alpha,
            seed,
            groups,
            bin_edges: edges.to_vec(),
            kernels: [rows(&pair.k0), rows(&pair.k1)],
            parity_residual: pair.parity_residual,
            objective: pair.objective,
        }
    }
}

/// TSV of the expected (1-based) output column per input bin and group;
/// `edges` are the `k + 1` bin edges.
pub fn curves_tsv(pair: &MarkovKernelPair, edges: &[f64], groups: &[String]) -> String {
    let mut out = String::from("bin\ts_lower\ts_upper\tgroup\texpected_output\n");
    for (g, label) in groups.iter().enumerate().take(2) {
        let means = row_means(pair.kernel(g));
        for (i, m) in means.iter().enumerate() {
            let (lo, hi) = (edges[i], edges[i + 1]);
            out.push_str(&format!("{i}\t{lo}\t{hi}\t{label}\t{m}\n"));
        }
    }
    out
}

#[derive(Serialize)]
struct Summary<'a> {
    out: &'a Path,
    curves: PathBuf,
    scored: Option<&'a Path>,
    n: usize,
    parity_residual: f64,
    objective: f64,
}

pub fn run(args: &RandomizeArgs) -> Outcome<()> {
    let k1 = args.k1.unwrap_or(args.k);
    if args.k < 1 || k1 < 1 {
        return Err(Failure::usage("--k and --k1 must be positive"));
    }
    let data = Dataset::read(&args.input, &[])?;
    let s = data
        .numeric(&args.s)?
        .ok_or_else(|| Failure::usage(format!("score column {} must be numeric", args.s)))?;
    let (a, groups) = data.binary(&args.a)?;
    let (y, _) = data.binary(&args.y)?;
    let pmfs = estimate_conditional_pmfs(&s, &a, &y, args.k)?;
    let cost = CostSpec {
        alpha: args.alpha,
        ..CostSpec::default()
    };
    let pair = solve_eo_kernels(&pmfs, k1, &cost)?;

    let artifact = KernelArtifact::new(&pair, &pmfs.bin_edges, groups.clone(), args.alpha, args.seed);
    write_file(&args.out, &to_json(&artifact)?)?;
    let curves = sibling(&args.out, ".curves.tsv");
    write_file(&curves, &curves_tsv(&pair, &pmfs.bin_edges, &groups))?;

    if let Some(path) = &args.scored {
        let bins: Vec<usize> = s.iter().map(|&v| assign_bin(&pmfs.bin_edges, v)).collect();
        let decision = randomize(&pair, &bins, &a, args.seed)?;
        let mut w = csv_writer(path)?;
        let mut header = data.headers.clone();
        header.push("randomized".into());
        w.write_record(&header).map_err(|e| write_error(path, e))?;
        for (row, d) in data.rows.iter().zip(&decision) {
            let mut record = row.clone();
            record.push((d + 1).to_string());
            w.write_record(&record).map_err(|e| write_error(path, e))?;
        }
        w.flush().map_err(|e| write_error(path, e))?;
    }

    print_json(&Summary {
        out: &args.out,
        curves,
        scored: args.scored.as_deref(),
        n: data.len(),
        parity_residual: pair.parity_residual,
        objective: pair.objective,
    })
}
