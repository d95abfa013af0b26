//! Per-cell aggregates and the relative-gain table.

use std::fmt;

use rpca::engine::CellResult;
use rpca::strategies::StrategyKind;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959963984540054;

#[derive(Debug, Clone, PartialEq)]
pub struct CellAggregate {
    pub strategy: StrategyKind,
    pub axis_value: f64,
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single seed.
    pub sd: f64,
    pub ci_half_width: f64,
}

/// Groups results by (axis value, strategy), keeping first-seen order.
pub fn aggregate(results: &[CellResult]) -> Vec<CellAggregate> {
    let mut groups: Vec<((f64, StrategyKind), Vec<f64>)> = Vec::new();
    for r in results {
        let key = (r.axis_value, r.summary.strategy);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r.summary.throughput),
            None => groups.push((key, vec![r.summary.throughput])),
        }
    }
    groups
        .into_iter()
        .map(|((axis_value, strategy), xs)| {
            let n = xs.len();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let sd = if n > 1 {
                (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            CellAggregate {
                strategy,
                axis_value,
                n,
                mean,
                sd,
                ci_half_width: Z95 * sd / (n as f64).sqrt(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gain {
    Percent(f64),
    /// The baseline delivered nothing.
    Unbounded,
}

impl Gain {
    pub fn percent(self) -> Option<f64> {
        match self {
            Gain::Percent(p) => Some(p),
            Gain::Unbounded => None,
        }
    }
}

impl fmt::Display for Gain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gain::Percent(p) => write!(f, "{p:+.1}%"),
            Gain::Unbounded => f.write_str("unbounded"),
        }
    }
}

/// `100 (rpca − baseline) / baseline`.
pub fn relative_gain(rpca: f64, baseline: f64) -> Gain {
    if baseline == 0.0 {
        Gain::Unbounded
    } else {
        Gain::Percent(100.0 * (rpca - baseline) / baseline)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainRow {
    pub axis_value: f64,
    pub rpca: f64,
    pub gains: Vec<(StrategyKind, Gain)>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReportError {
    #[error("no RPCA results to compare against")]
    NoRpca,
    #[error("no baseline results")]
    NoBaseline,
    #[error("cell {axis_value} is missing {strategy}")]
    MissingCell { axis_value: f64, strategy: StrategyKind },
}

/// RPCA gain over every baseline at every sweep value, from seed means.
pub fn gain_table(cells: &[CellAggregate]) -> Result<Vec<GainRow>, ReportError> {
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
    if !strategies.contains(&StrategyKind::Rpca) {
        return Err(ReportError::NoRpca);
    }
    let baselines: Vec<_> = strategies.into_iter().filter(|&s| s != StrategyKind::Rpca).collect();
    if baselines.is_empty() {
        return Err(ReportError::NoBaseline);
    }
    let mean = |v: f64, s: StrategyKind| {
        cells
            .iter()
            .find(|c| c.axis_value == v && c.strategy == s)
            .map(|c| c.mean)
            .ok_or(ReportError::MissingCell { axis_value: v, strategy: s })
    };
    values
        .iter()
        .map(|&v| {
            let rpca = mean(v, StrategyKind::Rpca)?;
            let gains = baselines
                .iter()
                .map(|&b| Ok((b, relative_gain(rpca, mean(v, b)?))))
                .collect::<Result<_, ReportError>>()?;
            Ok(GainRow {
                axis_value: v,
                rpca,
                gains,
            })
        })
        .collect()
}

pub fn render_gain_table(axis_name: &str, rows: &[GainRow]) -> String {
    let mut out = format!("{axis_name:>14} {:>12}", "rpca[bps]");
    if let Some(first) = rows.first() {
        for (b, _) in &first.gains {
            out.push_str(&format!(" {:>20}", format!("vs {b}")));
        }
    }
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{:>14} {:>12.4}", r.axis_value, r.rpca));
        for (_, g) in &r.gains {
            out.push_str(&format!(" {:>20}", g.to_string()));
        }
        out.push('\n');
    }
    out
}
