//! CSV formats for networks, covariates and support points.
//!
//! - Network matrix: `n` lines of `n` comma-separated `0`/`1`, no header.
//! - Edge list: one `i,j` line per link with 1-based agents; an optional
//!   `i,j` header line is skipped.
//! - Covariates: `n` lines of `n` comma-separated 1-based support indices.
//! - Support: header `index,x_1,...,x_d`, then one line per point.
//!
//! Parse errors report the 1-based line number.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{CovariateSupport, Network, PairCovariates};

use super::config::NetworkFormat;

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Non-blank lines with their 1-based line numbers, split on commas.
fn read_rows(path: &Path) -> Result<Vec<(usize, Vec<String>)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| (k + 1, l.split(',').map(|f| f.trim().to_string()).collect()))
        .collect())
}

fn write_rows<I, R>(path: &Path, header: Option<Vec<String>>, rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .flexible(false)
        .from_writer(std::io::BufWriter::new(file));
    let to_err = |e: csv::Error| Error::InvalidInput(format!("writing {}: {e}", path.display()));
    if let Some(h) = header {
        w.write_record(h).map_err(to_err)?;
    }
    for row in rows {
        w.write_record(row).map_err(to_err)?;
    }
    w.into_inner()
        .map_err(|e| Error::InvalidInput(e.to_string()))?
        .flush()
        .map_err(|e| Error::io(path, e))
}

/// Reads an `n x n` matrix of non-negative integers.
fn read_square(path: &Path) -> Result<(usize, Vec<usize>)> {
    let rows = read_rows(path)?;
    let n = rows.len();
    if n == 0 {
        return Err(parse_err(path, 1, "file is empty"));
    }
    let mut values = Vec::with_capacity(n * n);
    for (line, fields) in &rows {
        if fields.len() != n {
            return Err(parse_err(
                path,
                *line,
                format!("expected {n} entries, found {}", fields.len()),
            ));
        }
        for (col, f) in fields.iter().enumerate() {
            let v = f.parse::<usize>().map_err(|_| {
                parse_err(
                    path,
                    *line,
                    format!("column {}: {f:?} is not a non-negative integer", col + 1),
                )
            })?;
            values.push(v);
        }
    }
    Ok((n, values))
}

pub fn read_network(path: &Path, format: NetworkFormat, n: usize) -> Result<Network> {
    match format {
        NetworkFormat::Matrix => {
            let (m, values) = read_square(path)?;
            if m != n {
                return Err(parse_err(
                    path,
                    1,
                    format!("matrix has {m} rows, expected n = {n}"),
                ));
            }
            let mut adj = Vec::with_capacity(n * n);
            for (k, v) in values.into_iter().enumerate() {
                let (i, j) = (k / n, k % n);
                match (v, i == j) {
                    (0, _) => adj.push(0),
                    (1, false) => adj.push(1),
                    (1, true) => {
                        return Err(parse_err(
                            path,
                            i + 1,
                            format!("self-link of agent {}", i + 1),
                        ))
                    }
                    _ => {
                        return Err(parse_err(
                            path,
                            i + 1,
                            format!("column {}: entries must be 0 or 1", j + 1),
                        ))
                    }
                }
            }
            Network::new(n, adj)
        }
        NetworkFormat::Edges => {
            let mut g = Network::empty(n);
            for (idx, (line, fields)) in read_rows(path)?.into_iter().enumerate() {
                if fields.len() != 2 {
                    return Err(parse_err(
                        path,
                        line,
                        format!("expected 2 entries, found {}", fields.len()),
                    ));
                }
                let parsed: Option<Vec<usize>> = fields.iter().map(|f| f.parse().ok()).collect();
                let ends = match parsed {
                    Some(v) => v,
                    None if idx == 0 => continue,
                    None => return Err(parse_err(path, line, "agents must be positive integers")),
                };
                let (i, j) = (ends[0], ends[1]);
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(parse_err(path, line, format!("agents must lie in 1..={n}")));
                }
                if i == j {
                    return Err(parse_err(path, line, format!("self-link of agent {i}")));
                }
                g.set(i - 1, j - 1, true);
            }
            Ok(g)
        }
    }
}

pub fn write_network(path: &Path, g: &Network) -> Result<()> {
    write_rows(
        path,
        None,
        g.as_slice()
            .chunks(g.n())
            .map(|r| r.iter().map(|v| v.to_string()).collect::<Vec<_>>()),
    )
}

pub fn write_edges(path: &Path, g: &Network) -> Result<()> {
    let n = g.n();
    let edges = (0..n * n)
        .filter(|&k| g.as_slice()[k] == 1)
        .map(|k| vec![(k / n + 1).to_string(), (k % n + 1).to_string()]);
    write_rows(path, Some(vec!["i".into(), "j".into()]), edges)
}

pub fn read_covariates(path: &Path, num_points: usize) -> Result<PairCovariates> {
    let (n, values) = read_square(path)?;
    let mut cells = Vec::with_capacity(n * n);
    for (k, v) in values.into_iter().enumerate() {
        if v == 0 || v > num_points {
            return Err(parse_err(
                path,
                k / n + 1,
                format!(
                    "column {}: support index {v} outside 1..={num_points}",
                    k % n + 1
                ),
            ));
        }
        cells.push(v - 1);
    }
    PairCovariates::new(n, num_points, cells)
}

pub fn write_covariates(path: &Path, x: &PairCovariates) -> Result<()> {
    write_rows(
        path,
        None,
        x.cells()
            .chunks(x.n())
            .map(|r| r.iter().map(|c| (c + 1).to_string()).collect::<Vec<_>>()),
    )
}

pub fn read_support(path: &Path) -> Result<CovariateSupport> {
    let rows = read_rows(path)?;
    let ((hline, header), body) = rows
        .split_first()
        .ok_or_else(|| parse_err(path, 1, "file is empty"))?;
    let d = header.len().saturating_sub(1);
    if d == 0 || header[0] != "index" {
        return Err(parse_err(path, *hline, "header must be index,x_1,...,x_d"));
    }
    let mut points = Vec::with_capacity(body.len());
    for (k, (line, fields)) in body.iter().enumerate() {
        if fields.len() != d + 1 {
            return Err(parse_err(
                path,
                *line,
                format!("expected {} entries, found {}", d + 1, fields.len()),
            ));
        }
        if fields[0].parse::<usize>().ok() != Some(k + 1) {
            return Err(parse_err(path, *line, format!("index must be {}", k + 1)));
        }
        let point = fields[1..]
            .iter()
            .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| parse_err(path, *line, "coordinates must be finite numbers"))?;
        points.push(point);
    }
    CovariateSupport::new(points).map_err(|e| parse_err(path, *hline, e.to_string()))
}

pub fn write_support(path: &Path, support: &CovariateSupport) -> Result<()> {
    let mut header = vec!["index".to_string()];
    header.extend((1..=support.dim()).map(|k| format!("x_{k}")));
    write_rows(
        path,
        Some(header),
        support.points().iter().enumerate().map(|(k, p)| {
            std::iter::once((k + 1).to_string())
                .chain(p.iter().map(|v| v.to_string()))
                .collect::<Vec<_>>()
        }),
    )
}
