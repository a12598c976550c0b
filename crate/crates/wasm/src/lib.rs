//! Browser bindings for the liability-network toolkit.

use liabnet::debtrank::{debtrank_trace, DistressState};
use liabnet::netstats::{Histogram, HistogramSpec};
use liabnet::pipeline::{analyze, emit_top_table, InputSource, RunManifest};
use liabnet::reconstruction::partition_firm_liabilities;
use liabnet::synthgen::SynthConfig;
use liabnet::{
    build_network, debtrank_single, economic_value, impact_matrix, NodeId, NodeKind, NodeRecord,
    ValueDirection,
};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

/// Splits a firm's bank liabilities over its banks in proportion to assets.
#[wasm_bindgen]
pub fn partition(liabilities: f64, bank_assets: Vec<f64>) -> Result<Vec<f64>, String> {
    let banks: Vec<(NodeId, f64)> = bank_assets
        .iter()
        .enumerate()
        .map(|(k, &a)| (NodeId(k), a))
        .collect();
    let p = partition_firm_liabilities(liabilities, &banks).map_err(|e| e.to_string())?;
    Ok(p.amounts.into_iter().map(|(_, x)| x).collect())
}

#[derive(Serialize)]
struct TopRow {
    label: String,
    kind: &'static str,
    sector: Option<String>,
    total_assets: f64,
    debtrank: f64,
}

#[derive(Serialize)]
struct EconomySummary {
    banks: usize,
    firms: usize,
    entries: usize,
    q1: Option<f64>,
    q2: Option<f64>,
    clustering_f: f64,
    clustering_b: f64,
    baseline_b: f64,
    hist_edges: Vec<f64>,
    hist_banks: Vec<usize>,
    hist_firms: Vec<usize>,
    top: Vec<TopRow>,
}

/// Generates a synthetic economy, runs the full analysis and returns a JSON
/// summary: ratios, clustering, DebtRank histograms and the top table.
#[wasm_bindgen]
pub fn synthetic_economy(
    n_banks: usize,
    n_firms: usize,
    top_firms: usize,
    seed: u64,
) -> Result<String, String> {
    let cfg = SynthConfig {
        n_banks,
        n_firms,
        seed,
        ..SynthConfig::default()
    };
    let mut m = RunManifest::new(InputSource::Synthetic(cfg), "");
    m.top_firms = top_firms;
    let a = analyze(&m).map_err(|e| e.to_string())?;
    let spec = HistogramSpec::new(0.0, 0.7, 70);
    let of = |k: NodeKind| {
        Histogram::build(a.nodes.iter().filter(|n| n.kind == k).map(|n| n.r_f), spec).counts
    };
    let summary = EconomySummary {
        banks: a.entire.bank_count(),
        firms: a.entire.firm_count(),
        entries: a.entire.entry_count(),
        q1: a.q1.value(),
        q2: a.q2.value(),
        clustering_f: a.clustering_f.mean_local_clustering,
        clustering_b: a.clustering_b.mean_local_clustering,
        baseline_b: a.clustering_b.random_baseline,
        hist_edges: spec.edges(),
        hist_banks: of(NodeKind::Bank),
        hist_firms: of(NodeKind::Firm),
        top: emit_top_table(&a.nodes, 15)
            .into_iter()
            .map(|r| TopRow {
                label: r.label,
                kind: r.kind.as_str(),
                sector: r.sector_code,
                total_assets: r.total_assets,
                debtrank: r.r_f,
            })
            .collect(),
    };
    serde_json::to_string(&summary).map_err(|e| e.to_string())
}

#[derive(Deserialize)]
struct SmallNetwork {
    banks: usize,
    capital: Vec<f64>,
    /// `[debtor, creditor, amount]` triples.
    liabilities: Vec<(usize, usize, f64)>,
}

#[derive(Serialize)]
struct Step {
    h: Vec<f64>,
    state: Vec<&'static str>,
}

#[derive(Serialize)]
struct Trace {
    value: f64,
    economic_value: Vec<f64>,
    steps: Vec<Step>,
}

/// Round-by-round distress of a small network after `seed` defaults.
///
/// Input JSON: `{"banks": 2, "capital": [..], "liabilities": [[0, 1, 100.0], ..]}`.
#[wasm_bindgen]
pub fn cascade_trace(network_json: &str, seed: usize) -> Result<String, String> {
    let spec: SmallNetwork = serde_json::from_str(network_json).map_err(|e| e.to_string())?;
    let records: Vec<NodeRecord> = spec
        .capital
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            if k < spec.banks {
                NodeRecord::bank(format!("B{k}"), 0.0, c)
            } else {
                NodeRecord::firm(format!("F{k}"), 0.0, c, 0.0, None)
            }
        })
        .collect();
    let net = build_network(records, spec.liabilities).map_err(|e| e.to_string())?;
    let w = impact_matrix(&net, &net.capital()).map_err(|e| e.to_string())?;
    let v = economic_value(&net, ValueDirection::AsWritten).map_err(|e| e.to_string())?;
    let value = debtrank_single(&w, &v, NodeId(seed))
        .map_err(|e| e.to_string())?
        .value;
    let steps = debtrank_trace(&w, &[NodeId(seed)])
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|(h, s)| Step {
            h,
            state: s
                .into_iter()
                .map(|x| match x {
                    DistressState::Undistressed => "U",
                    DistressState::Distressed => "D",
                    DistressState::Inactive => "I",
                })
                .collect(),
        })
        .collect();
    let trace = Trace {
        value,
        economic_value: v.into_inner(),
        steps,
    };
    serde_json::to_string(&trace).map_err(|e| e.to_string())
}
