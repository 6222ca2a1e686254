use std::path::PathBuf;

use clap::Args;
use cparity::debias::{estimate_bias_subspace, project_out};
use serde::Serialize;

use super::{csv_writer, print_json};
use crate::dataset::Dataset;
use crate::failure::{write_error, Failure, Outcome};

/// Removes the bias subspace estimated from matched pairs from every row.
#[derive(Debug, Args)]
pub struct DebiasArgs {
    /// Feature vectors, one per row; every column numeric.
    #[arg(long)]
    input: PathBuf,
    /// Matched pairs: 2d numeric columns, the first d for v and the last d for w.
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long, default_value_t = 1)]
    rank: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct Report<'a> {
    out: &'a std::path::Path,
    rows: usize,
    dim: usize,
    rank: usize,
    /// Basis vectors of the removed subspace.
    basis: Vec<Vec<f64>>,
    /// Largest `|<x', b>| / ||x||` over output rows and basis vectors.
    max_relative_inner: f64,
}

pub fn run(args: &DebiasArgs) -> Outcome<()> {
    let data = Dataset::read(&args.input, &[])?;
    let x = data.matrix()?;
    let d = data.headers.len();
    let pairs_data = Dataset::read(&args.pairs, &[])?;
    let raw = pairs_data.matrix()?;
    if pairs_data.headers.len() != 2 * d {
        return Err(Failure::parse(format!(
            "{}: expected {} columns (two vectors of dimension {d}), found {}",
            args.pairs.display(),
            2 * d,
            pairs_data.headers.len()
        )));
    }
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = raw.iter().map(|r| (r[..d].to_vec(), r[d..].to_vec())).collect();
    let subspace = estimate_bias_subspace(&pairs, args.rank)?;

    let mut w = csv_writer(&args.out)?;
    let werr = |e: csv::Error| write_error(&args.out, e);
    w.write_record(&data.headers).map_err(werr)?;
    let mut worst = 0.0f64;
    for row in &x {
        let p = project_out(row, &subspace)?;
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        for b in subspace.basis.column_iter() {
            let dot: f64 = b.iter().zip(&p).map(|(u, v)| u * v).sum();
            if norm > 0.0 {
                worst = worst.max(dot.abs() / norm);
            }
        }
        w.write_record(p.iter().map(|v| v.to_string())).map_err(werr)?;
    }
    w.flush().map_err(|e| write_error(&args.out, e))?;

    print_json(&Report {
        out: &args.out,
        rows: x.len(),
        dim: d,
        rank: subspace.rank(),
        basis: subspace.basis.column_iter().map(|c| c.iter().copied().collect()).collect(),
        max_relative_inner: worst,
    })
}
