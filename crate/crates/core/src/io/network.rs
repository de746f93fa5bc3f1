//! Edge-list CSV for exposure networks: `from,to,amount`, where `from` is
//! the exposed (lending) bank and `to` the counterparty. Lines starting with
//! `#` are metadata.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{BankNode, ExposureNetwork};

/// Renders the nonzero exposures, one per line, bank names as identifiers.
pub fn write_edge_list(net: &ExposureNetwork, banks: &[BankNode], metadata: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in metadata {
        let _ = writeln!(out, "# {k}: {v}");
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["from", "to", "amount"]).expect("in-memory write");
    for (i, j, v) in net.edges() {
        w.write_record([banks[i].name.as_str(), banks[j].name.as_str(), &v.to_string()])
            .expect("in-memory write");
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8"));
    out
}

/// Reads an edge list. Endpoints may be bank names or zero-based indices.
pub fn read_edge_list(path: &Path, banks: &[BankNode]) -> Result<ExposureNetwork> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text, path, banks)
}

pub fn parse_edge_list(text: &str, path: &Path, banks: &[BankNode]) -> Result<ExposureNetwork> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let err = |row: u64, column: &str, message: String| Error::Load {
        path: path.to_path_buf(),
        row: row as usize,
        column: column.into(),
        message,
    };
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| err(1, name, "missing column".into()))
    };
    let (cf, ct, ca) = (col("from")?, col("to")?, col("amount")?);
    let node = |raw: &str| {
        banks
            .iter()
            .position(|b| b.name == raw)
            .or_else(|| raw.parse::<usize>().ok().filter(|&i| i < banks.len()))
    };
    let mut edges = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let i = node(&rec[cf]).ok_or_else(|| err(line, "from", format!("unknown bank `{}`", &rec[cf])))?;
        let j = node(&rec[ct]).ok_or_else(|| err(line, "to", format!("unknown bank `{}`", &rec[ct])))?;
        let v: f64 = rec[ca]
            .parse()
            .map_err(|_| err(line, "amount", format!("`{}` is not a number", &rec[ca])))?;
        if !(v >= 0.0 && v.is_finite()) {
            return Err(err(line, "amount", format!("{v} is negative or not finite")));
        }
        if i == j {
            return Err(err(line, "to", "self-exposure".into()));
        }
        edges.push((i, j, v));
    }
    ExposureNetwork::from_edges(banks.len(), edges)
}
