use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{AreaGraph, EdgeGraph, EdgeSet};
use crate::model::Dataset;

use super::{read_text, write_atomic, Provenance};

pub(crate) fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes())
}

pub(crate) fn csv_error(source: &Path, e: csv::Error) -> Error {
    Error::schema(source.display().to_string(), e.to_string())
}

pub(crate) fn headers(source: &Path, r: &mut csv::Reader<&[u8]>) -> Result<Vec<String>> {
    Ok(r.headers().map_err(|e| csv_error(source, e))?.iter().map(str::to_string).collect())
}

pub(crate) fn column(source: &Path, headers: &[String], name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::schema(source.display().to_string(), format!("missing column '{name}'")))
}

pub(crate) fn parse_field<T: std::str::FromStr>(source: &Path, line: u64, name: &str, v: &str) -> Result<T> {
    v.parse::<T>()
        .map_err(|_| Error::schema(source.display().to_string(), format!("line {line}: column '{name}': cannot parse '{v}'")))
}

/// Reads an area adjacency list with columns `area_i,area_k`. The number of
/// areas is one more than the largest index unless `n_areas` is given.
pub fn read_adjacency(path: &Path, n_areas: Option<usize>) -> Result<AreaGraph> {
    let text = read_text(path)?;
    let mut r = csv_reader(&text);
    let h = headers(path, &mut r)?;
    let (ci, ck) = (column(path, &h, "area_i")?, column(path, &h, "area_k")?);
    let mut pairs = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let i: usize = parse_field(path, line, "area_i", &rec[ci])?;
        let k: usize = parse_field(path, line, "area_k", &rec[ck])?;
        pairs.push((i, k));
    }
    if pairs.is_empty() {
        return Err(Error::schema(path.display().to_string(), "no adjacencies listed"));
    }
    let n = n_areas.unwrap_or_else(|| pairs.iter().map(|&(i, k)| i.max(k)).max().unwrap_or(0) + 1);
    AreaGraph::from_pairs(n, &pairs)
}

pub fn write_adjacency(path: &Path, g: &AreaGraph, prov: &Provenance) -> Result<()> {
    let mut out = prov.comment_line();
    out.push_str("area_i,area_k\n");
    for &(i, k) in EdgeSet::from_graph(g).edges() {
        writeln!(out, "{i},{k}").unwrap();
    }
    write_atomic(path, out.as_bytes())
}

/// Reads border adjacency given by endpoints, columns `a_i,a_k,b_i,b_k`:
/// border `(a_i, a_k)` is adjacent to border `(b_i, b_k)`.
pub fn read_edge_adjacency(path: &Path, es: &EdgeSet) -> Result<EdgeGraph> {
    let text = read_text(path)?;
    let mut r = csv_reader(&text);
    let h = headers(path, &mut r)?;
    let cols = [column(path, &h, "a_i")?, column(path, &h, "a_k")?, column(path, &h, "b_i")?, column(path, &h, "b_k")?];
    let names = ["a_i", "a_k", "b_i", "b_k"];
    let mut pairs = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let mut v = [0usize; 4];
        for (x, (&c, name)) in v.iter_mut().zip(cols.iter().zip(names)) {
            *x = parse_field(path, line, name, &rec[c])?;
        }
        let find = |i: usize, k: usize| {
            es.index_of(i, k)
                .ok_or_else(|| Error::domain("edge adjacency", format!("line {line}: ({i}, {k}) is not a border")))
        };
        pairs.push((find(v[0], v[1])?, find(v[2], v[3])?));
    }
    EdgeGraph::from_pairs(es.len(), &pairs)
}

/// Reads a list of borders, columns `edge_i,edge_k`, as per-edge flags in
/// canonical order (e.g. a true-boundary file).
pub fn read_edge_flags(path: &Path, es: &EdgeSet) -> Result<Vec<bool>> {
    let text = read_text(path)?;
    let mut r = csv_reader(&text);
    let h = headers(path, &mut r)?;
    let (ci, ck) = (column(path, &h, "edge_i")?, column(path, &h, "edge_k")?);
    let mut flags = vec![false; es.len()];
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let i: usize = parse_field(path, line, "edge_i", &rec[ci])?;
        let k: usize = parse_field(path, line, "edge_k", &rec[ck])?;
        let e = es
            .index_of(i, k)
            .ok_or_else(|| Error::domain("edge", format!("line {line}: ({i}, {k}) is not a border")))?;
        flags[e] = true;
    }
    Ok(flags)
}

/// Reads a panel with columns `area,time,observed,expected` followed by any
/// covariate columns (in file order). Every `(area, time)` cell must appear
/// exactly once.
pub fn read_dataset(path: &Path, graph: AreaGraph) -> Result<Dataset> {
    let src = path.display().to_string();
    let text = read_text(path)?;
    let mut r = csv_reader(&text);
    let h = headers(path, &mut r)?;
    let required = ["area", "time", "observed", "expected"];
    let idx: Vec<usize> = required.iter().map(|n| column(path, &h, n)).collect::<Result<_>>()?;
    let cov_cols: Vec<usize> = (0..h.len()).filter(|c| !idx.contains(c)).collect();
    let cov_names: Vec<String> = cov_cols.iter().map(|&c| h[c].clone()).collect();
    let p = cov_cols.len();
    if p == 0 {
        return Err(Error::schema(src, "no covariate columns (add an intercept column of ones)"));
    }

    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let area: usize = parse_field(path, line, "area", &rec[idx[0]])?;
        let time: usize = parse_field(path, line, "time", &rec[idx[1]])?;
        let y: f64 = parse_field(path, line, "observed", &rec[idx[2]])?;
        if !(y >= 0.0 && y.fract() == 0.0 && y < 2f64.powi(53)) {
            return Err(Error::domain("observed", format!("line {line}: {y} is not a non-negative integer count")));
        }
        let e: f64 = parse_field(path, line, "expected", &rec[idx[3]])?;
        let x: Vec<f64> = cov_cols.iter().zip(&cov_names).map(|(&c, n)| parse_field(path, line, n, &rec[c])).collect::<Result<_>>()?;
        rows.push((line, area, time, y as u64, e, x));
    }
    let n = graph.n_areas();
    if let Some(&(line, area, ..)) = rows.iter().find(|r| r.1 >= n) {
        return Err(Error::domain("area", format!("line {line}: area {area} not in the {n}-area adjacency")));
    }
    let t = rows.iter().map(|r| r.2 + 1).max().unwrap_or(0);
    if rows.len() != n * t {
        return Err(Error::schema(src, format!("{} rows for {n} areas × {t} periods", rows.len())));
    }
    let mut observed = vec![0u64; n * t];
    let mut expected = vec![0.0; n * t];
    let mut design = vec![0.0; n * t * p];
    let mut seen = vec![false; n * t];
    for (line, area, time, y, e, x) in rows {
        let c = time * n + area;
        if seen[c] {
            return Err(Error::schema(src, format!("line {line}: duplicate cell (area {area}, time {time})")));
        }
        seen[c] = true;
        observed[c] = y;
        expected[c] = e;
        design[c * p..(c + 1) * p].copy_from_slice(&x);
    }
    Dataset::new(graph, t, observed, expected, design, p)?.with_covariate_names(cov_names)
}

pub fn write_dataset(path: &Path, d: &Dataset, prov: &Provenance) -> Result<()> {
    let mut out = prov.comment_line();
    out.push_str("area,time,observed,expected");
    for name in d.covariate_names() {
        write!(out, ",{name}").unwrap();
    }
    out.push('\n');
    let n = d.n_areas();
    for c in 0..d.n_cells() {
        write!(out, "{},{},{},{}", c % n, c / n, d.observed()[c], d.expected()[c]).unwrap();
        for x in d.covariates(c) {
            write!(out, ",{x}").unwrap();
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}
