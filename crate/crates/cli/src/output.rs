//! CSV and JSON renderings. JSON documents carry `"format": 1`, and big
//! integers are written as decimal strings.

use std::fmt::Write as _;

use num_bigint::BigUint;
use serde_json::{json, Value};

use ctgen_core::driver::DriverStats;
use ctgen_core::params::{log2_ratio, ParameterSet};

use crate::sampling::{Outcome, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub const FORMAT_VERSION: u32 = 1;

fn cutoff_line(out: &mut String, i: usize) {
    let _ = writeln!(out, "# sample {i}: cutoff");
}

/// Dense tables are blocks of comma-separated rows divided by blank
/// lines; cell lists are long-form `sample,row,col,value` records.
pub fn tables_csv(samples: &[Outcome<Table>]) -> String {
    let mut out = String::new();
    let long = samples.iter().flatten().any(|t| matches!(t, Table::Cells(_)));
    if long {
        out.push_str("sample,row,col,value\n");
    }
    for (i, s) in samples.iter().enumerate() {
        match s {
            None => cutoff_line(&mut out, i),
            Some(Table::Dense(rows)) => {
                if i > 0 {
                    out.push('\n');
                }
                for r in rows {
                    let line: Vec<String> = r.iter().map(u32::to_string).collect();
                    out.push_str(&line.join(","));
                    out.push('\n');
                }
            }
            Some(Table::Cells(cells)) => {
                for (r, c, v) in cells {
                    let _ = writeln!(out, "{i},{r},{c},{v}");
                }
            }
        }
    }
    out
}

pub fn tables_json(rows: &[u32], cols: &[u32], seed: u64, samples: &[Outcome<Table>]) -> Value {
    let samples: Vec<Value> = samples
        .iter()
        .map(|s| match s {
            None => Value::Null,
            Some(Table::Dense(t)) => json!(t),
            Some(Table::Cells(c)) => json!(c.iter().map(|&(r, c, v)| [r, c, v]).collect::<Vec<_>>()),
        })
        .collect();
    json!({
        "format": FORMAT_VERSION,
        "kind": "tables",
        "seed": seed,
        "rows": rows,
        "cols": cols,
        "samples": samples,
    })
}

/// Long-form `sample,u,v,multiplicity` records.
pub fn multigraphs_csv(samples: &[Outcome<Vec<(u32, u32, u32)>>]) -> String {
    let mut out = String::from("sample,u,v,multiplicity\n");
    for (i, s) in samples.iter().enumerate() {
        match s {
            None => cutoff_line(&mut out, i),
            Some(edges) => {
                for (a, b, k) in edges {
                    let _ = writeln!(out, "{i},{a},{b},{k}");
                }
            }
        }
    }
    out
}

pub fn multigraphs_json(degrees: &[u32], seed: u64, samples: &[Outcome<Vec<(u32, u32, u32)>>]) -> Value {
    let samples: Vec<Value> = samples
        .iter()
        .map(|s| match s {
            None => Value::Null,
            Some(e) => json!(e.iter().map(|&(a, b, k)| [a, b, k]).collect::<Vec<_>>()),
        })
        .collect();
    json!({
        "format": FORMAT_VERSION,
        "kind": "multigraphs",
        "seed": seed,
        "degrees": degrees,
        "samples": samples,
    })
}

pub fn counts_json(rows: &[u32], cols: &[u32], counts: &[(u64, BigUint)]) -> Value {
    let counts: Vec<Value> = counts
        .iter()
        .map(|(t, n)| json!({"t": t, "count": n.to_string()}))
        .collect();
    json!({
        "format": FORMAT_VERSION,
        "kind": "counts",
        "rows": rows,
        "cols": cols,
        "counts": counts,
    })
}

/// Parameters and counters of a sampling run.
pub fn stats_json(params: &ParameterSet, stats: &DriverStats) -> Value {
    let g = &stats.gen;
    json!({
        "format": FORMAT_VERSION,
        "kind": "stats",
        "params": {
            "t0": params.t0(),
            "eps": params.eps().to_string(),
            "tabulated": params.is_tabulated(),
            "log2_rho_hat": if params.t0() == 0 { 0.0 } else { log2_ratio(params.rho_hat()) },
            "log2_b_hat": params.b_hat().map(log2_ratio),
        },
        "outputs": stats.outputs,
        "restarts": stats.restarts,
        "seed_attempts": stats.seed_attempts,
        "matchings": stats.matchings,
        "brute": {
            "calls": stats.brute_calls,
            "rejects": stats.brute_rejects,
            "skipped": stats.brute_skipped,
        },
        "gen": {
            "runs": g.runs,
            "iterations": g.iterations,
            "outputs": g.outputs,
            "f_rejects": g.f_rejects,
            "b_rejects": g.b_rejects,
            "beta_rejects": g.beta_rejects,
            "work": g.work,
            "max_doubles": g.max_doubles,
            "double_reach": g.double_reach,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_csv_blocks() {
        let s = vec![
            Some(Table::Dense(vec![vec![1, 1], vec![1, 1]])),
            None,
            Some(Table::Dense(vec![vec![2, 0], vec![0, 2]])),
        ];
        assert_eq!(tables_csv(&s), "1,1\n1,1\n# sample 1: cutoff\n\n2,0\n0,2\n");
    }

    #[test]
    fn json_has_version_and_string_counts() {
        let v = counts_json(&[2, 2], &[2, 2], &[(4, BigUint::from(2u32))]);
        assert_eq!(v["format"], 1);
        assert_eq!(v["counts"][0]["count"], "2");
    }
}
