//! The commands behind the `pdmodel` binary. Each returns the files it
//! produces as in-memory text so callers decide where they go.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};

use crate::baselines::{furfine_cascade, gen_debtrank, spectral_radius, DebtRankSettings};
use crate::engine::run_simulation;
use crate::error::{Error, Result};
use crate::inference::{generate_ensemble, infer_network, marginal_deviation, member_rng};
use crate::io::config::{BaselineModel, RunConfig};
use crate::io::network::{read_edge_list, write_edge_list};
use crate::io::{bundled_sample, load_banks, BankTable, RatingMap};
use crate::model::{BankNode, ExposureNetwork};
use crate::oracle::{strong_contagion_scan, TwoNodeParams};
use crate::risk::{fit_line, pd_beta, pd_impact_series, pd_rank_all, summarize, LossSummary};

pub const SCHEMA_VERSION: u32 = 1;

const CRN_NOTE: &str = "scenario comparisons reuse the simulation seed, so every scenario sees the same random numbers path by path";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Rank,
    Impact,
    Beta,
    Oracle,
    Infer,
    Baseline,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Rank => "rank",
            Command::Impact => "impact",
            Command::Beta => "beta",
            Command::Oracle => "oracle",
            Command::Infer => "infer",
            Command::Baseline => "baseline",
        }
    }
}

/// One output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct NetworkInfo {
    /// `file` or `inferred`.
    pub source: String,
    pub member: Option<usize>,
    /// Factor applied to the liabilities so both marginal totals agree.
    pub normalization_factor: Option<f64>,
    pub edges: usize,
    pub total_exposure: f64,
    pub max_marginal_deviation: Option<f64>,
}

struct Header<'a> {
    command: Command,
    config: &'a RunConfig,
    hash: String,
}

impl<'a> Header<'a> {
    fn new(command: Command, config: &'a RunConfig) -> Self {
        Self {
            command,
            config,
            hash: config.hash(),
        }
    }

    fn metadata(&self) -> Vec<(String, String)> {
        vec![
            ("schema_version".into(), SCHEMA_VERSION.to_string()),
            ("command".into(), self.command.name().into()),
            ("config_hash".into(), self.hash.clone()),
            ("seed".into(), self.config.simulation.seed.to_string()),
        ]
    }

    fn csv(&self, name: &str, header: &[String], rows: &[Vec<String>]) -> Artifact {
        let mut out = String::new();
        for (k, v) in self.metadata() {
            let _ = writeln!(out, "# {k}: {v}");
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).expect("in-memory write");
        for r in rows {
            w.write_record(r).expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8"));
        Artifact {
            name: name.into(),
            contents: out,
        }
    }

    fn report(&self, network: Option<&NetworkInfo>, result: Value) -> Artifact {
        let mut doc = json!({
            "schema_version": SCHEMA_VERSION,
            "command": self.command.name(),
            "config_hash": self.hash,
            "seed": self.config.simulation.seed,
            "config": self.config,
            "result": result,
        });
        if let Some(n) = network {
            doc["network"] = json!(n);
        }
        if matches!(self.command, Command::Rank | Command::Impact | Command::Beta) {
            doc["common_random_numbers"] = json!(CRN_NOTE);
        }
        Artifact {
            name: "report.json".into(),
            contents: serde_json::to_string_pretty(&doc).expect("report serialises") + "\n",
        }
    }
}

/// Runs `command` and returns `report.json`, `config.toml` (the echoed
/// configuration) and the command's CSV files.
pub fn run(command: Command, config: &RunConfig) -> Result<Vec<Artifact>> {
    let h = Header::new(command, config);
    let mut out = match command {
        Command::Simulate => simulate(&h)?,
        Command::Rank => rank(&h)?,
        Command::Impact => impact(&h, false)?,
        Command::Beta => impact(&h, true)?,
        Command::Oracle => oracle(&h)?,
        Command::Infer => infer(&h)?,
        Command::Baseline => baseline(&h)?,
    };
    out.push(Artifact {
        name: "config.toml".into(),
        contents: config.to_toml(),
    });
    Ok(out)
}

/// Report written in place of the results when a command fails.
pub fn error_report(command: Command, config: &RunConfig, err: &Error) -> Artifact {
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "command": command.name(),
        "config_hash": config.hash(),
        "seed": config.simulation.seed,
        "config": config,
        "error": {
            "kind": error_kind(err),
            "message": err.to_string(),
            "exit_code": err.exit_code(),
        },
    });
    Artifact {
        name: "report.json".into(),
        contents: serde_json::to_string_pretty(&doc).expect("report serialises") + "\n",
    }
}

fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::Domain(_) => "domain",
        Error::NotPositiveSemiDefinite { .. } => "not-positive-semidefinite",
        Error::Calibration(_) => "calibration",
        Error::Inference(_) => "inference",
        Error::Load { .. } => "load",
        Error::Config(_) => "config",
        Error::Io { .. } => "io",
        Error::Csv(_) => "csv",
    }
}

/// Bank table after the rating map, LGD override and capital scaling.
pub fn load_table(config: &RunConfig) -> Result<BankTable> {
    let d = &config.data;
    let table = match &d.banks {
        Some(p) => {
            let ratings = match &d.rating_map {
                Some(r) => RatingMap::load(r)?,
                None => RatingMap::builtin(),
            };
            load_banks(p, &ratings)?
        }
        None => bundled_sample(),
    };
    let mut table = if d.capital_scale != 1.0 {
        table.scale_capital(d.capital_scale)?
    } else {
        table
    };
    if let Some(lgd) = d.lgd {
        table.banks = table
            .banks
            .iter()
            .map(|b| BankNode::new(b.id, b.name.clone(), b.total_asset, b.capital, b.pd0, lgd))
            .collect::<Result<_>>()?;
    }
    Ok(table)
}

fn total_exposure(net: &ExposureNetwork) -> f64 {
    net.as_slice().iter().sum()
}

/// The network used by single-network commands: the edge list if one is
/// configured, otherwise the selected member of the inferred ensemble.
pub fn load_network(config: &RunConfig, table: &BankTable) -> Result<(ExposureNetwork, NetworkInfo)> {
    if let Some(p) = &config.data.network {
        let net = read_edge_list(p, &table.banks)?;
        let info = NetworkInfo {
            source: "file".into(),
            member: None,
            normalization_factor: None,
            edges: net.edges().count(),
            total_exposure: total_exposure(&net),
            max_marginal_deviation: None,
        };
        return Ok((net, info));
    }
    let inf = config.inference.to_config();
    inf.validate()?;
    let k = config.inference.member;
    let (marginals, factor) = table.marginals.normalized()?;
    let net = infer_network(&marginals, &inf, &mut member_rng(inf.seed, k))?;
    let info = NetworkInfo {
        source: "inferred".into(),
        member: Some(k),
        normalization_factor: Some(factor),
        edges: net.edges().count(),
        total_exposure: total_exposure(&net),
        max_marginal_deviation: Some(marginal_deviation(&net, &marginals)),
    };
    Ok((net, info))
}

fn num(v: f64) -> String {
    v.to_string()
}

fn summary_json(member: Option<usize>, s: &LossSummary, a_glob: f64) -> Value {
    json!({
        "member": member,
        "n_paths": s.n_paths,
        "mean": s.mean,
        "mean_over_total_asset": s.mean / a_glob,
        "std_error": s.std_error,
        "max_loss": s.max_loss,
        "quantiles": s.quantiles.iter().map(|(q, v)| json!({"level": q, "loss": v})).collect::<Vec<_>>(),
        "histogram": s.histogram,
    })
}

fn simulate(h: &Header) -> Result<Vec<Artifact>> {
    let cfg = h.config;
    let table = load_table(cfg)?;
    let sim = cfg.simulation_config()?;
    let spec = cfg.report.histogram_spec();
    let a_glob = table.total_asset();
    let ensemble = cfg.simulation.ensemble && cfg.data.network.is_none();

    let (nets, info) = if ensemble {
        let inf = cfg.inference.to_config();
        let (marginals, factor) = table.marginals.normalized()?;
        let nets = generate_ensemble(&marginals, &inf)?;
        let dev = nets.iter().map(|n| marginal_deviation(n, &marginals)).fold(0.0, f64::max);
        let info = NetworkInfo {
            source: "inferred".into(),
            member: None,
            normalization_factor: Some(factor),
            edges: nets.iter().map(|n| n.edges().count()).sum(),
            total_exposure: nets.first().map_or(0.0, total_exposure),
            max_marginal_deviation: Some(dev),
        };
        (nets.into_iter().enumerate().map(|(k, n)| (Some(k), n)).collect::<Vec<_>>(), info)
    } else {
        let (net, info) = load_network(cfg, &table)?;
        (vec![(info.member, net)], info)
    };

    let mut summaries = Vec::with_capacity(nets.len());
    for (_, net) in &nets {
        let dist = run_simulation(&table.banks, net, &sim)?;
        summaries.push(summarize(&dist, &cfg.report.quantiles, &spec)?);
    }

    let first = &summaries[0].histogram;
    let mut header: Vec<String> = ["lower", "upper", "excluded"].map(String::from).to_vec();
    if ensemble {
        header.extend((0..nets.len()).map(|k| format!("member_{k}")));
        header.extend(["min".into(), "max".into()]);
    } else {
        header.push("count".into());
    }
    let row = |lower: f64, upper: f64, excluded: bool, counts: Vec<u64>| {
        let mut r = vec![num(lower), num(upper), excluded.to_string()];
        r.extend(counts.iter().map(u64::to_string));
        if ensemble {
            r.push(counts.iter().min().unwrap().to_string());
            r.push(counts.iter().max().unwrap().to_string());
        }
        r
    };
    let mut rows = vec![row(0.0, 0.0, true, summaries.iter().map(|s| s.histogram.zero_count).collect())];
    for b in 0..first.counts.len() {
        rows.push(row(
            first.edges[b],
            first.edges[b + 1],
            false,
            summaries.iter().map(|s| s.histogram.counts[b]).collect(),
        ));
    }

    let members: Vec<Value> = nets
        .iter()
        .zip(&summaries)
        .map(|((k, _), s)| summary_json(*k, s, a_glob))
        .collect();
    let means: Vec<f64> = summaries.iter().map(|s| s.mean).collect();
    let mut result = json!({
        "banks": table.banks.len(),
        "total_asset": a_glob,
        "rule": cfg.simulation.rule,
        "runs": members,
    });
    if ensemble {
        let lo = means.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let avg = means.iter().sum::<f64>() / means.len() as f64;
        result["ensemble"] = json!({
            "mean_min": lo,
            "mean_max": hi,
            "relative_spread": if avg > 0.0 { (hi - lo) / avg } else { 0.0 },
        });
    }
    Ok(vec![
        h.report(Some(&info), result),
        h.csv("histogram.csv", &header, &rows),
    ])
}

fn rank(h: &Header) -> Result<Vec<Artifact>> {
    let cfg = h.config;
    let table = load_table(cfg)?;
    let (net, info) = load_network(cfg, &table)?;
    let sim = cfg.simulation_config()?;
    let terms = pd_rank_all(&table.banks, &net, &sim)?;
    let mut order: Vec<usize> = (0..terms.len()).collect();
    order.sort_by(|&a, &b| terms[b].pd_rank().total_cmp(&terms[a].pd_rank()).then(a.cmp(&b)));

    let header = [
        "pd",
        "capital",
        "total_asset",
        "bank",
        "pd_rank",
        "forced_default_loss",
        "immune_loss",
        "pd_times_asset",
    ]
    .map(String::from);
    let rows: Vec<Vec<String>> = order
        .iter()
        .map(|&i| {
            let b = &table.banks[i];
            vec![
                num(b.pd0),
                num(b.capital),
                num(b.total_asset),
                b.name.clone(),
                num(terms[i].pd_rank()),
                num(terms[i].forced_default),
                num(terms[i].immune),
                num(b.pd0 * b.total_asset),
            ]
        })
        .collect();
    let x: Vec<f64> = table.banks.iter().map(|b| b.pd0 * b.total_asset).collect();
    let y: Vec<f64> = terms.iter().map(|t| t.pd_rank()).collect();
    let fit = fit_line(&x, &y);
    let result = json!({
        "rule": cfg.simulation.rule,
        "ranking": order.iter().map(|&i| json!({
            "bank": table.banks[i].name,
            "pd_rank": terms[i].pd_rank(),
        })).collect::<Vec<_>>(),
        "pd_rank_vs_pd_times_asset": fit,
    });
    Ok(vec![h.report(Some(&info), result), h.csv("rank.csv", &header, &rows)])
}

fn impact(h: &Header, fit: bool) -> Result<Vec<Artifact>> {
    let cfg = h.config;
    let table = load_table(cfg)?;
    let (net, info) = load_network(cfg, &table)?;
    let sim = cfg.simulation_config()?;
    let a_glob = table.total_asset();
    let x = &cfg.impact.x;
    let (series, result, name) = if fit {
        let b = pd_beta(&table.banks, &net, &sim, x)?;
        let result = json!({
            "rule": cfg.simulation.rule,
            "slope": b.slope,
            "slope_over_total_asset": b.slope / a_glob,
            "residual": b.residual,
            "r_squared": b.r_squared,
        });
        (b.impact, result, "beta.csv")
    } else {
        let s = pd_impact_series(&table.banks, &net, &sim, x)?;
        (s, json!({ "rule": cfg.simulation.rule }), "impact.csv")
    };
    let mut result = result;
    result["x"] = json!(x);
    result["impact"] = json!(series);
    let header = ["x", "impact", "impact_over_total_asset"].map(String::from);
    let rows: Vec<Vec<String>> = x
        .iter()
        .zip(&series)
        .map(|(&xi, &c)| vec![num(xi), num(c), num(c / a_glob)])
        .collect();
    Ok(vec![h.report(Some(&info), result), h.csv(name, &header, &rows)])
}

fn oracle(h: &Header) -> Result<Vec<Artifact>> {
    let o = &h.config.oracle;
    let (&e0, &r0) = o
        .capital
        .first()
        .zip(o.rho.first())
        .ok_or_else(|| Error::config("oracle needs capital and rho grids"))?;
    let base = TwoNodeParams::new(o.asset, e0, o.pd, o.lgd, o.a_hat, r0)?;
    let scan = strong_contagion_scan(&base, &o.capital, &o.rho, o.periods)?;
    let single = strong_contagion_scan(&base, &o.capital, &o.rho, 1)?;

    let mut header = vec!["rho".to_string()];
    header.extend(scan.rows.iter().map(|r| format!("pi12_E{}", r.capital)));
    let rows: Vec<Vec<String>> = o
        .rho
        .iter()
        .enumerate()
        .map(|(k, &r)| {
            let mut row = vec![num(r)];
            row.extend(scan.rows.iter().map(|s| num(s.pi12[k])));
            row
        })
        .collect();
    let result = json!({
        "scan": scan,
        "single_period": single.rows.iter().map(|r| json!({"capital": r.capital, "class": r.class})).collect::<Vec<_>>(),
    });
    Ok(vec![h.report(None, result), h.csv("oracle.csv", &header, &rows)])
}

fn infer(h: &Header) -> Result<Vec<Artifact>> {
    let cfg = h.config;
    let table = load_table(cfg)?;
    let inf = cfg.inference.to_config();
    let (marginals, factor) = table.marginals.normalized()?;
    let nets = generate_ensemble(&marginals, &inf)?;
    let mut out = Vec::with_capacity(nets.len() + 1);
    let members: Vec<Value> = nets
        .iter()
        .enumerate()
        .map(|(k, n)| {
            json!({
                "member": k,
                "file": format!("network_{k}.csv"),
                "edges": n.edges().count(),
                "max_marginal_deviation": marginal_deviation(n, &marginals),
            })
        })
        .collect();
    out.push(h.report(
        None,
        json!({
            "banks": table.banks.len(),
            "normalization_factor": factor,
            "total_exposure": marginals.assets.iter().sum::<f64>(),
            "members": members,
        }),
    ));
    for (k, n) in nets.iter().enumerate() {
        let mut meta = h.metadata();
        meta.push(("member".into(), k.to_string()));
        meta.push(("inference_seed".into(), inf.seed.to_string()));
        meta.push(("normalization_factor".into(), num(factor)));
        out.push(Artifact {
            name: format!("network_{k}.csv"),
            contents: write_edge_list(n, &table.banks, &meta),
        });
    }
    Ok(out)
}

fn baseline(h: &Header) -> Result<Vec<Artifact>> {
    let cfg = h.config;
    let b = &cfg.baseline;
    let table = load_table(cfg)?;
    let (net, info) = load_network(cfg, &table)?;
    let banks = &table.banks;
    let mut shocks = vec![0.0; banks.len()];
    for s in &b.shocks {
        let i = banks
            .iter()
            .position(|x| x.name == s.bank)
            .ok_or_else(|| Error::config(format!("shock names unknown bank `{}`", s.bank)))?;
        shocks[i] += s.amount;
    }
    let run_furfine = b.model != BaselineModel::Debtrank;
    let run_debtrank = b.model != BaselineModel::Furfine;

    let mut header = vec!["bank".to_string(), "shock".to_string()];
    let mut result = json!({ "model": b.model });
    let furfine = if run_furfine {
        let f = furfine_cascade(banks, &net, &shocks)?;
        header.extend(["furfine_defaulted".into(), "furfine_round".into()]);
        result["furfine"] = json!({
            "loss": f.loss,
            "rounds": f.rounds,
            "defaults": f.defaulted.iter().filter(|d| **d).count(),
        });
        Some(f)
    } else {
        None
    };
    let debtrank = if run_debtrank {
        let stress: Vec<f64> = shocks.iter().zip(banks).map(|(s, x)| (s / x.capital).min(1.0)).collect();
        let settings = DebtRankSettings {
            tol: b.tol,
            max_iter: b.max_iter,
        };
        let d = gen_debtrank(banks, &net, &stress, settings)?;
        header.push("debtrank_h".into());
        result["debtrank"] = json!({
            "loss": d.loss,
            "iterations": d.iterations,
            "converged": d.converged,
            "spectral_radius": spectral_radius(banks, &net),
        });
        Some(d)
    } else {
        None
    };
    let rows: Vec<Vec<String>> = (0..banks.len())
        .map(|i| {
            let mut r = vec![banks[i].name.clone(), num(shocks[i])];
            if let Some(f) = &furfine {
                r.push(f.defaulted[i].to_string());
                r.push(f.round[i].to_string());
            }
            if let Some(d) = &debtrank {
                r.push(num(d.h[i]));
            }
            r
        })
        .collect();
    Ok(vec![h.report(Some(&info), result), h.csv("baseline.csv", &header, &rows)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_columns_follow_capital_grid() {
        let cfg = RunConfig::default();
        let out = run(Command::Oracle, &cfg).unwrap();
        let csv = &out.iter().find(|a| a.name == "oracle.csv").unwrap().contents;
        let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
        assert_eq!(header.split(',').count(), 1 + cfg.oracle.capital.len());
        assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + cfg.oracle.rho.len());
    }

    #[test]
    fn error_report_is_structured() {
        let cfg = RunConfig::default();
        let a = error_report(Command::Infer, &cfg, &Error::Inference("stuck".into()));
        let v: Value = serde_json::from_str(&a.contents).unwrap();
        assert_eq!(v["error"]["kind"], "inference");
        assert_eq!(v["error"]["exit_code"], 3);
    }
}
