//! CSV and gnuplot output.
//!
//! Per run (`<name>_runs.csv`):
//! `figure,strategy,axis_name,axis_value,seed,throughput_bps,n_phases,probes_mean,contentions_mean`
//!
//! Per cell (`<name>_summary.csv`):
//! `figure,strategy,axis_name,axis_value,n_seeds,mean_bps,sd_bps,ci95_low,ci95_high`
//!
//! `<name>.dat` has one row per sweep value with a mean and CI half-width
//! column per strategy, ready for `plot ... with yerrorlines`.
//!
//! Files are built in memory and moved into place only after all of them
//! rendered, so a failed run never leaves partial output behind.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rpca::engine::CellResult;
use rpca::strategies::StrategyKind;

use crate::report::{aggregate, CellAggregate};

pub const RUNS_HEADER: [&str; 9] = [
    "figure",
    "strategy",
    "axis_name",
    "axis_value",
    "seed",
    "throughput_bps",
    "n_phases",
    "probes_mean",
    "contentions_mean",
];

fn csv_err(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

fn finish(w: csv::Writer<Vec<u8>>) -> io::Result<String> {
    let bytes = w.into_inner().map_err(|e| io::Error::other(e.to_string()))?;
    String::from_utf8(bytes).map_err(io::Error::other)
}

pub fn runs_csv(figure: &str, results: &[CellResult]) -> io::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RUNS_HEADER).map_err(csv_err)?;
    for r in results {
        let s = &r.summary;
        w.write_record([
            figure.to_string(),
            s.strategy.to_string(),
            r.axis.name().to_string(),
            r.axis_value.to_string(),
            s.seed.to_string(),
            s.throughput.to_string(),
            s.n_phases.to_string(),
            s.probes_mean.to_string(),
            s.contentions_mean.to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

pub fn summary_csv(figure: &str, axis_name: &str, cells: &[CellAggregate]) -> io::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "figure",
        "strategy",
        "axis_name",
        "axis_value",
        "n_seeds",
        "mean_bps",
        "sd_bps",
        "ci95_low",
        "ci95_high",
    ])
    .map_err(csv_err)?;
    for c in cells {
        w.write_record([
            figure.to_string(),
            c.strategy.to_string(),
            axis_name.to_string(),
            c.axis_value.to_string(),
            c.n.to_string(),
            c.mean.to_string(),
            c.sd.to_string(),
            (c.mean - c.ci_half_width).to_string(),
            (c.mean + c.ci_half_width).to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

pub fn gnuplot_data(axis_name: &str, cells: &[CellAggregate]) -> String {
    let mut values: Vec<f64> = Vec::new();
    let mut strategies: Vec<StrategyKind> = Vec::new();
    for c in cells {
        if !values.contains(&c.axis_value) {
            values.push(c.axis_value);
        }
        if !strategies.contains(&c.strategy) {
            strategies.push(c.strategy);
        }
    }
    let mut out = format!("# {axis_name}");
    for s in &strategies {
        out.push_str(&format!(" {s}_mean {s}_ci95"));
    }
    out.push('\n');
    for v in values {
        out.push_str(&v.to_string());
        for &s in &strategies {
            match cells.iter().find(|c| c.axis_value == v && c.strategy == s) {
                Some(c) => out.push_str(&format!(" {} {}", c.mean, c.ci_half_width)),
                None => out.push_str(" NaN NaN"),
            }
        }
        out.push('\n');
    }
    out
}

/// Writes the three output files for `name` into `dir`; returns their paths.
pub fn write_outputs(dir: &Path, name: &str, figure: &str, results: &[CellResult]) -> io::Result<Vec<PathBuf>> {
    let axis_name = results.first().map_or("none", |r| r.axis.name());
    let cells = aggregate(results);
    let files = [
        (format!("{name}_runs.csv"), runs_csv(figure, results)?),
        (format!("{name}_summary.csv"), summary_csv(figure, axis_name, &cells)?),
        (format!("{name}.dat"), gnuplot_data(axis_name, &cells)),
    ];
    fs::create_dir_all(dir)?;
    let mut staged = Vec::new();
    for (file, body) in &files {
        let tmp = dir.join(format!(".{file}.tmp"));
        fs::write(&tmp, body)?;
        staged.push((tmp, dir.join(file)));
    }
    let mut paths = Vec::new();
    for (tmp, path) in staged {
        fs::rename(&tmp, &path)?;
        paths.push(path);
    }
    Ok(paths)
}
