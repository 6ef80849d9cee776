//! Reading marginals and degree sequences from flags or files.
//!
//! Accepted file forms: a JSON object (`{"rows": [...], "cols": [...]}` or
//! `{"degrees": [...]}`), or plain text with one sequence per line, entries
//! separated by commas or whitespace.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;

/// Parses `"2,2,1"` or `"2 2 1"`.
pub fn parse_list(s: &str) -> Result<Vec<u32>> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<u32>().with_context(|| format!("not a nonnegative integer: {t:?}")))
        .collect()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MarginalFile {
    rows: Vec<u32>,
    cols: Vec<u32>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DegreeFile {
    degrees: Vec<u32>,
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

fn is_json(text: &str) -> bool {
    text.trim_start().starts_with('{')
}

/// Marginals from a file's contents.
pub fn marginals_from_text(text: &str) -> Result<(Vec<u32>, Vec<u32>)> {
    if is_json(text) {
        let f: MarginalFile = serde_json::from_str(text).context("malformed marginals JSON")?;
        return Ok((f.rows, f.cols));
    }
    match data_lines(text).as_slice() {
        [rows, cols] => Ok((parse_list(rows)?, parse_list(cols)?)),
        lines => bail!("expected two lines (rows, then columns), found {}", lines.len()),
    }
}

/// Degree sequence from a file's contents.
pub fn degrees_from_text(text: &str) -> Result<Vec<u32>> {
    if is_json(text) {
        let f: DegreeFile = serde_json::from_str(text).context("malformed degrees JSON")?;
        return Ok(f.degrees);
    }
    match data_lines(text).as_slice() {
        [line] => parse_list(line),
        lines => bail!("expected one line of degrees, found {}", lines.len()),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// Marginals from `--rows`/`--cols` or `--input`, exactly one of the two.
pub fn load_marginals(rows: Option<&str>, cols: Option<&str>, input: Option<&Path>) -> Result<(Vec<u32>, Vec<u32>)> {
    match (rows, cols, input) {
        (Some(r), Some(c), None) => Ok((parse_list(r)?, parse_list(c)?)),
        (None, None, Some(p)) => marginals_from_text(&read(p)?),
        (None, None, None) => Err(anyhow!("give --rows and --cols, or --input")),
        _ => Err(anyhow!("use either --rows with --cols, or --input alone")),
    }
}

/// Degrees from `--degrees` or `--input`.
pub fn load_degrees(degrees: Option<&str>, input: Option<&Path>) -> Result<Vec<u32>> {
    match (degrees, input) {
        (Some(d), None) => parse_list(d),
        (None, Some(p)) => degrees_from_text(&read(p)?),
        (None, None) => Err(anyhow!("give --degrees or --input")),
        _ => Err(anyhow!("use either --degrees or --input")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists() {
        assert_eq!(parse_list("2,2, 1").unwrap(), vec![2, 2, 1]);
        assert_eq!(parse_list("3 0\t4").unwrap(), vec![3, 0, 4]);
        assert!(parse_list("2,-1").is_err());
    }

    #[test]
    fn file_forms() {
        assert_eq!(
            marginals_from_text("{\"rows\": [2, 1], \"cols\": [3]}").unwrap(),
            (vec![2, 1], vec![3])
        );
        assert_eq!(marginals_from_text("2 2\n\n2,2\n").unwrap(), (vec![2, 2], vec![2, 2]));
        assert!(marginals_from_text("2 2\n").is_err());
        assert_eq!(degrees_from_text("{\"degrees\": [1,1]}").unwrap(), vec![1, 1]);
        assert_eq!(degrees_from_text("# comment\n2 2 2\n").unwrap(), vec![2, 2, 2]);
    }
}
