//! Bank table and rating map readers.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::AggregateMarginals;
use crate::model::BankNode;

/// Loss given default assigned when the table has no `lgd` column.
pub const DEFAULT_LGD: f64 = 0.6;

/// Rating label to default probability per period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingMap(pub BTreeMap<String, f64>);

impl RatingMap {
    pub fn get(&self, rating: &str) -> Option<f64> {
        self.0.get(&rating.trim().to_ascii_uppercase()).copied()
    }

    /// The table shipped in `data/rating_map.csv`.
    pub fn builtin() -> Self {
        parse_rating_map(include_str!("../../data/rating_map.csv"), Path::new("<builtin>"))
            .expect("bundled rating map parses")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse_rating_map(&text, path)
    }
}

fn load_error(path: &Path, row: u64, column: &str, message: impl Into<String>) -> Error {
    Error::Load {
        path: path.to_path_buf(),
        row: row as usize,
        column: column.to_string(),
        message: message.into(),
    }
}

fn parse_rating_map(text: &str, path: &Path) -> Result<RatingMap> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| load_error(path, 1, name, "missing column"))
    };
    let (ci, cp) = (col("rating")?, col("pd")?);
    let mut map = BTreeMap::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let pd: f64 = rec[cp]
            .parse()
            .map_err(|_| load_error(path, line, "pd", format!("`{}` is not a number", &rec[cp])))?;
        if !(pd > 0.0 && pd < 1.0) {
            return Err(load_error(path, line, "pd", format!("{pd} is not in (0, 1)")));
        }
        map.insert(rec[ci].to_ascii_uppercase(), pd);
    }
    Ok(RatingMap(map))
}

/// Banks together with their interbank aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankTable {
    pub banks: Vec<BankNode>,
    pub marginals: AggregateMarginals,
}

impl BankTable {
    /// Multiplies every capital by `factor`.
    pub fn scale_capital(&self, factor: f64) -> Result<Self> {
        let banks = self
            .banks
            .iter()
            .map(|b| BankNode::new(b.id, b.name.clone(), b.total_asset, b.capital * factor, b.pd0, b.lgd))
            .collect::<Result<_>>()?;
        Ok(Self {
            banks,
            marginals: self.marginals.clone(),
        })
    }

    pub fn total_asset(&self) -> f64 {
        self.banks.iter().map(|b| b.total_asset).sum()
    }
}

const REQUIRED: [&str; 5] = [
    "name",
    "total_exposures",
    "capital",
    "intra_financial_assets",
    "intra_financial_liabilities",
];

/// Reads a bank table. Columns: `name`, `total_exposures` (total asset),
/// `capital`, `intra_financial_assets`, `intra_financial_liabilities`, and at
/// least one of `rating` and `pd0`; `lgd` is optional. A nonempty `pd0`
/// takes precedence over the rating.
pub fn load_banks(path: &Path, ratings: &RatingMap) -> Result<BankTable> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_banks(&text, path, ratings)
}

pub fn parse_banks(text: &str, path: &Path, ratings: &RatingMap) -> Result<BankTable> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let mut idx = BTreeMap::new();
    for name in REQUIRED {
        idx.insert(name, find(name).ok_or_else(|| load_error(path, 1, name, "missing column"))?);
    }
    let (rating_col, pd_col, lgd_col) = (find("rating"), find("pd0"), find("lgd"));
    if rating_col.is_none() && pd_col.is_none() {
        return Err(load_error(path, 1, "rating", "need a `rating` or a `pd0` column"));
    }

    let mut banks = Vec::new();
    let mut assets = Vec::new();
    let mut liabilities = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let number = |column: &str, c: usize| -> Result<f64> {
            let raw = rec.get(c).unwrap_or("");
            let v: f64 = raw
                .parse()
                .map_err(|_| load_error(path, line, column, format!("`{raw}` is not a number")))?;
            if !(v >= 0.0 && v.is_finite()) {
                return Err(load_error(path, line, column, format!("{v} is negative or not finite")));
            }
            Ok(v)
        };
        let name = rec.get(idx["name"]).unwrap_or("").to_string();
        if name.is_empty() {
            return Err(load_error(path, line, "name", "empty name"));
        }
        let asset = number("total_exposures", idx["total_exposures"])?;
        let capital = number("capital", idx["capital"])?;
        if asset <= 0.0 {
            return Err(load_error(path, line, "total_exposures", "must be positive"));
        }
        if capital <= 0.0 || capital >= asset {
            return Err(load_error(
                path,
                line,
                "capital",
                format!("capital {capital} must be positive and below total exposures {asset}"),
            ));
        }
        let explicit_pd = pd_col.and_then(|c| rec.get(c)).filter(|s| !s.is_empty());
        let pd0 = match (explicit_pd, rating_col.and_then(|c| rec.get(c))) {
            (Some(_), _) => number("pd0", pd_col.unwrap())?,
            (None, Some(r)) if !r.is_empty() => ratings
                .get(r)
                .ok_or_else(|| load_error(path, line, "rating", format!("rating `{r}` is not in the map")))?,
            _ => return Err(load_error(path, line, "pd0", "neither pd0 nor rating given")),
        };
        if pd0 >= 1.0 {
            return Err(load_error(path, line, "pd0", format!("{pd0} is not below 1")));
        }
        let lgd = match lgd_col.and_then(|c| rec.get(c)).filter(|s| !s.is_empty()) {
            Some(_) => number("lgd", lgd_col.unwrap())?,
            None => DEFAULT_LGD,
        };
        if lgd > 1.0 {
            return Err(load_error(path, line, "lgd", format!("{lgd} exceeds 1")));
        }
        assets.push(number("intra_financial_assets", idx["intra_financial_assets"])?);
        liabilities.push(number("intra_financial_liabilities", idx["intra_financial_liabilities"])?);
        banks.push(BankNode::new(banks.len(), name, asset, capital, pd0, lgd)?);
    }
    if banks.is_empty() {
        return Err(load_error(path, 2, "name", "no banks in file"));
    }
    Ok(BankTable {
        banks,
        marginals: AggregateMarginals::new(assets, liabilities)?,
    })
}

/// The 35-bank sample bundled with the crate.
pub fn bundled_sample() -> BankTable {
    parse_banks(
        include_str!("../../data/gsib_sample.csv"),
        Path::new("data/gsib_sample.csv"),
        &RatingMap::builtin(),
    )
    .expect("bundled sample parses")
}
