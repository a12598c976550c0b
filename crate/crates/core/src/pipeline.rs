//! End-to-end run: ingest, reconstruct, select the analysis subgraph, rank
//! every node by DebtRank, compute statistics and write the report bundle.
//!
//! Everything is computed in memory first and written only once the whole
//! run has succeeded, so a failing run leaves no partial bundle behind.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::debtrank::{
    debtrank_all, impact_matrix, ratio_q1, ratio_q2, DebtRankError, DebtRankResult,
};
use crate::ingestion::{
    self, apply_relations, estimate_bank_liabilities, exact_coverage_share, match_banks_by_rank,
    BankStatement, FirmStatement, IngestError, InterbankMatrix, RankMatching, RatioMethod, RowNote,
    RowReject,
};
use crate::netstats::{
    degree_histograms, degree_stats, global_clustering, ClusteringConvention, ClusteringReport,
    Histogram, HistogramSpec,
};
use crate::network::{
    economic_value, subnetwork, LiabilityNetwork, NetworkError, NodeId, NodeKind, ValueDirection,
};
use crate::reconstruction::{
    assemble_liability_matrix, DepositWeighting, ReconstructionError, ReconstructionReport,
    RelationshipGraph,
};
use crate::synthgen::{generate, SynthConfig, SynthError};

pub const DEFAULT_TOP_FIRMS: usize = 5_000;
pub const DEFAULT_TOP_N: usize = 45;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ErrorKind {
    Validation,
    Data,
    Internal,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Validation => 2,
            ErrorKind::Data => 3,
            ErrorKind::Internal => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Validation => "validation",
            ErrorKind::Data => "data",
            ErrorKind::Internal => "internal",
        }
    }
}

#[derive(Debug, Error)]
#[error("{stage}: {message}")]
pub struct PipelineError {
    pub kind: ErrorKind,
    pub stage: &'static str,
    pub message: String,
}

impl PipelineError {
    fn new(kind: ErrorKind, stage: &'static str, message: impl ToString) -> Self {
        PipelineError {
            kind,
            stage,
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }

    /// One `key=value` line for machine consumption.
    pub fn report_line(&self) -> String {
        format!(
            "error kind={} stage={} exit={} message={:?}",
            self.kind.as_str(),
            self.stage,
            self.exit_code(),
            self.message
        )
    }
}

fn data_err<E: ToString>(stage: &'static str) -> impl Fn(E) -> PipelineError {
    move |e| PipelineError::new(ErrorKind::Data, stage, e)
}

fn internal_err<E: ToString>(stage: &'static str) -> impl Fn(E) -> PipelineError {
    move |e| PipelineError::new(ErrorKind::Internal, stage, e)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputFiles {
    pub banks: PathBuf,
    pub firms: PathBuf,
    pub interbank: PathBuf,
    /// Defaults to the interbank path with `.assets` appended.
    pub interbank_assets: Option<PathBuf>,
    pub relations: Option<PathBuf>,
}

impl InputFiles {
    pub fn interbank_assets_path(&self) -> PathBuf {
        self.interbank_assets.clone().unwrap_or_else(|| {
            let mut p = self.interbank.clone().into_os_string();
            p.push(".assets");
            PathBuf::from(p)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    Files(InputFiles),
    /// TOML generator config on disk.
    SyntheticFile(PathBuf),
    Synthetic(SynthConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub input: InputSource,
    pub top_firms: usize,
    pub top_n: usize,
    pub out_dir: PathBuf,
    pub v_direction: ValueDirection,
    pub deposits: DepositWeighting,
    pub clustering: ClusteringConvention,
    pub ratio_method: RatioMethod,
}

impl RunManifest {
    pub fn new(input: InputSource, out_dir: impl Into<PathBuf>) -> Self {
        RunManifest {
            input,
            top_firms: DEFAULT_TOP_FIRMS,
            top_n: DEFAULT_TOP_N,
            out_dir: out_dir.into(),
            v_direction: ValueDirection::AsWritten,
            deposits: DepositWeighting::Off,
            clustering: ClusteringConvention::MeanLocal,
            ratio_method: RatioMethod::MeanOfRatios,
        }
    }

    /// Checks that every referenced input exists and that the output path
    /// is not an existing file.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let must_exist = |p: &Path, what: &str| {
            if p.is_file() {
                Ok(())
            } else {
                Err(PipelineError::new(
                    ErrorKind::Validation,
                    "manifest",
                    format!("{what} not found: {}", p.display()),
                ))
            }
        };
        match &self.input {
            InputSource::Files(f) => {
                must_exist(&f.banks, "bank table")?;
                must_exist(&f.firms, "firm table")?;
                must_exist(&f.interbank, "interbank matrix")?;
                must_exist(&f.interbank_assets_path(), "interbank assets")?;
                if let Some(r) = &f.relations {
                    must_exist(r, "relations")?;
                }
            }
            InputSource::SyntheticFile(p) => must_exist(p, "synthetic config")?,
            InputSource::Synthetic(cfg) => cfg
                .validate()
                .map_err(|e| PipelineError::new(ErrorKind::Validation, "manifest", e))?,
        }
        if self.out_dir.exists() && !self.out_dir.is_dir() {
            return Err(PipelineError::new(
                ErrorKind::Validation,
                "manifest",
                format!("output path is not a directory: {}", self.out_dir.display()),
            ));
        }
        if self.top_n == 0 {
            return Err(PipelineError::new(
                ErrorKind::Validation,
                "manifest",
                "top-n must be positive",
            ));
        }
        Ok(())
    }
}

/// Raw inputs after parsing.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub banks: Vec<BankStatement>,
    pub firms: Vec<FirmStatement>,
    pub interbank: InterbankMatrix,
    pub rejects: Vec<(&'static str, RowReject)>,
    pub flags: Vec<(&'static str, RowNote)>,
    pub unknown_relations: Vec<(String, String)>,
}

fn synth_err(e: SynthError) -> PipelineError {
    match e {
        SynthError::InvalidConfig(_) | SynthError::Parse(_) => {
            PipelineError::new(ErrorKind::Validation, "synthetic", e)
        }
        _ => PipelineError::new(ErrorKind::Data, "synthetic", e),
    }
}

fn ingest_err(e: IngestError) -> PipelineError {
    PipelineError::new(ErrorKind::Data, "ingestion", e)
}

pub fn load_inputs(source: &InputSource) -> Result<Inputs, PipelineError> {
    let synthetic = |cfg: &SynthConfig| -> Result<Inputs, PipelineError> {
        let econ = generate(cfg).map_err(synth_err)?;
        Ok(Inputs {
            banks: econ.banks,
            firms: econ.firms,
            interbank: econ.interbank,
            rejects: Vec::new(),
            flags: Vec::new(),
            unknown_relations: Vec::new(),
        })
    };
    match source {
        InputSource::Synthetic(cfg) => synthetic(cfg),
        InputSource::SyntheticFile(p) => synthetic(&SynthConfig::from_file(p).map_err(synth_err)?),
        InputSource::Files(f) => {
            let banks = ingestion::parse_bank_file(&f.banks).map_err(ingest_err)?;
            let firms = ingestion::parse_firm_file(&f.firms).map_err(ingest_err)?;
            let interbank =
                ingestion::parse_interbank_files(&f.interbank, &f.interbank_assets_path())
                    .map_err(ingest_err)?;
            let mut rejects: Vec<_> = banks.rejects.into_iter().map(|r| ("banks", r)).collect();
            rejects.extend(firms.rejects.into_iter().map(|r| ("firms", r)));
            let mut flags: Vec<_> = banks.flags.into_iter().map(|r| ("banks", r)).collect();
            let mut firm_rows = firms.rows;
            let mut unknown_relations = Vec::new();
            if let Some(path) = &f.relations {
                let rel = ingestion::parse_relations_file(path).map_err(ingest_err)?;
                rejects.extend(rel.rejects.into_iter().map(|r| ("relations", r)));
                unknown_relations = apply_relations(&mut firm_rows, &rel.rows);
                // Connectivity flags follow the relations file.
                flags.extend(
                    firms
                        .flags
                        .into_iter()
                        .filter(|n| n.flag != ingestion::RowFlag::Unconnected)
                        .map(|r| ("firms", r)),
                );
                for f in firm_rows.iter().filter(|f| !f.is_connected()) {
                    flags.push((
                        "relations",
                        RowNote {
                            line: 0,
                            label: f.firm_label.clone(),
                            flag: ingestion::RowFlag::Unconnected,
                        },
                    ));
                }
            } else {
                flags.extend(firms.flags.into_iter().map(|r| ("firms", r)));
            }
            Ok(Inputs {
                banks: banks.rows,
                firms: firm_rows,
                interbank,
                rejects,
                flags,
                unknown_relations,
            })
        }
    }
}

/// All banks plus the `k` firms with the largest bank liabilities (ties go
/// to the lower node index).
pub fn top_firm_selection(net: &LiabilityNetwork, k: usize) -> BTreeSet<NodeId> {
    let mut firms: Vec<NodeId> = net.firms().collect();
    firms.sort_by(|a, b| {
        let la = net.record(*a).bank_liabilities.unwrap_or(0.0);
        let lb = net.record(*b).bank_liabilities.unwrap_or(0.0);
        lb.total_cmp(&la).then(a.cmp(b))
    });
    net.banks().chain(firms.into_iter().take(k)).collect()
}

/// Per-node DebtRank on a network; an empty network ranks every node at 0.
fn rank_network(
    net: &LiabilityNetwork,
    direction: ValueDirection,
) -> Result<Vec<DebtRankResult>, PipelineError> {
    let impact = impact_matrix(net, &net.capital()).map_err(internal_err("debtrank"))?;
    match economic_value(net, direction) {
        Ok(v) => debtrank_all(&impact, &v).map_err(internal_err("debtrank")),
        Err(NetworkError::EmptyNetwork) => Ok((0..net.node_count())
            .map(|d| DebtRankResult {
                seeds: vec![NodeId(d)],
                value: 0.0,
                final_h: None,
                steps: 2,
            })
            .collect()),
        Err(e) => Err(internal_err("debtrank")(e)),
    }
}

/// A node's row in the ranking tables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedNode {
    pub label: String,
    pub kind: NodeKind,
    pub sector_code: Option<String>,
    pub total_assets: f64,
    pub r_f: f64,
    pub r_b: Option<f64>,
}

/// Top `n` nodes by `R^F`; ties go to larger total assets, then label.
pub fn emit_top_table(results: &[RankedNode], n: usize) -> Vec<RankedNode> {
    let mut sorted: Vec<RankedNode> = results.to_vec();
    sorted.sort_by(|a, b| {
        b.r_f
            .total_cmp(&a.r_f)
            .then(b.total_assets.total_cmp(&a.total_assets))
            .then_with(|| a.label.cmp(&b.label))
    });
    sorted.truncate(n);
    sorted
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Ratio {
    Value(f64),
    /// The denominator vanished.
    Undefined,
}

impl Ratio {
    fn from_result(r: Result<f64, DebtRankError>) -> Result<Self, PipelineError> {
        match r {
            Ok(x) => Ok(Ratio::Value(x)),
            Err(DebtRankError::ZeroTotalRisk) => Ok(Ratio::Undefined),
            Err(e) => Err(internal_err("ratios")(e)),
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Ratio::Value(x) => Some(*x),
            Ratio::Undefined => None,
        }
    }
}

impl std::fmt::Display for Ratio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Ratio::Value(x) => write!(f, "{x}"),
            Ratio::Undefined => f.write_str("undefined"),
        }
    }
}

/// Everything a run computes, before it is written out.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub inputs: Inputs,
    pub matching: RankMatching,
    pub exact_coverage_share: f64,
    pub full: LiabilityNetwork,
    pub reconstruction: ReconstructionReport,
    pub entire: LiabilityNetwork,
    pub interbank: LiabilityNetwork,
    pub ranks_f: Vec<DebtRankResult>,
    pub ranks_b: Vec<DebtRankResult>,
    pub volume_f: f64,
    pub volume_b: f64,
    pub q1: Ratio,
    pub q2: Ratio,
    pub nodes: Vec<RankedNode>,
    pub clustering_f: ClusteringReport,
    pub clustering_b: ClusteringReport,
}

pub fn analyze(manifest: &RunManifest) -> Result<Analysis, PipelineError> {
    manifest.validate()?;
    let inputs = load_inputs(&manifest.input)?;

    let firms = estimate_bank_liabilities(&inputs.firms, manifest.ratio_method);
    let coverage = exact_coverage_share(&firms);
    let matching = match_banks_by_rank(&inputs.banks, &inputs.interbank).map_err(ingest_err)?;
    let relations =
        RelationshipGraph::from_firms(&firms, &matching)
            .map_err(data_err::<ReconstructionError>("reconstruction"))?;
    let (full, reconstruction) = assemble_liability_matrix(
        &inputs.interbank,
        &relations,
        &firms,
        &inputs.banks,
        &matching,
        manifest.deposits,
    )
    .map_err(data_err("reconstruction"))?;

    let keep = top_firm_selection(&full, manifest.top_firms);
    let entire = subnetwork(&full, &keep).map_err(data_err("subgraph"))?;
    let banks: BTreeSet<NodeId> = entire.banks().collect();
    let interbank = if banks.is_empty() {
        return Err(PipelineError::new(
            ErrorKind::Data,
            "subgraph",
            "no banks in the network",
        ));
    } else {
        subnetwork(&entire, &banks).map_err(data_err("subgraph"))?
    };

    let ranks_f = rank_network(&entire, manifest.v_direction)?;
    let ranks_b = rank_network(&interbank, manifest.v_direction)?;
    let volume_f = entire.total_volume();
    let volume_b = interbank.total_volume();
    let q1 = Ratio::from_result(ratio_q1(&ranks_f, &entire.kinds()))?;
    let q2 = if volume_f > 0.0 {
        Ratio::from_result(ratio_q2(&ranks_b, &ranks_f, volume_b, volume_f))?
    } else {
        Ratio::Undefined
    };

    let nodes = entire
        .records()
        .iter()
        .map(|r| RankedNode {
            label: r.name.clone(),
            kind: r.kind,
            sector_code: r.sector_code.clone(),
            total_assets: r.total_assets,
            r_f: ranks_f[r.id.0].value,
            // Banks keep their index in the interbank subnetwork.
            r_b: (r.kind == NodeKind::Bank).then(|| ranks_b[r.id.0].value),
        })
        .collect();

    Ok(Analysis {
        clustering_f: global_clustering(&entire),
        clustering_b: global_clustering(&interbank),
        inputs,
        matching,
        exact_coverage_share: coverage,
        full,
        reconstruction,
        entire,
        interbank,
        ranks_f,
        ranks_b,
        volume_f,
        volume_b,
        q1,
        q2,
        nodes,
    })
}

/// Bundle file names and contents, in write order.
pub fn render_bundle(a: &Analysis, manifest: &RunManifest) -> Vec<(&'static str, String)> {
    let mut files = Vec::new();

    let mut s = String::new();
    let net = &a.entire;
    let _ = writeln!(s, "n {}", net.node_count());
    for e in net.entries() {
        let _ = writeln!(s, "{} {} {}", e.debtor, e.creditor, e.amount);
    }
    files.push(("network.txt", s));

    let mut s =
        String::from("index,label,kind,total_assets,capital,bank_liabilities,sector_code\n");
    for r in net.records() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.id,
            r.name,
            r.kind,
            r.total_assets,
            r.capital,
            r.bank_liabilities
                .map(|x| x.to_string())
                .unwrap_or_default(),
            r.sector_code.as_deref().unwrap_or("")
        );
    }
    files.push(("nodes.csv", s));

    let mut buf = Vec::new();
    a.reconstruction
        .write_key_value(&mut buf)
        .expect("writing to memory");
    let mut s = String::from_utf8(buf).expect("utf-8 report");
    let _ = writeln!(s, "exact_coverage_share = {}", a.exact_coverage_share);
    let _ = writeln!(s, "full_network_nodes = {}", a.full.node_count());
    let _ = writeln!(s, "full_network_entries = {}", a.full.entry_count());
    let _ = writeln!(
        s,
        "nonpositive_capital_nodes = {}",
        a.full.nonpositive_capital_nodes().len()
    );
    let _ = writeln!(s, "rank_ties = {}", a.matching.ties.len());
    files.push(("reconstruction_report.txt", s));

    let mut s = String::from("firm_label,stated,assigned,residual\n");
    for r in &a.reconstruction.residuals {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            r.firm_label, r.stated, r.assigned, r.residual
        );
    }
    files.push(("residuals.csv", s));

    let mut s = String::from(
        "rank,bank_label,public_index,anon_index,public_assets,anon_assets,neighbour_gap\n",
    );
    for p in a.matching.pairs() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            p.rank,
            p.bank_label,
            p.public_index,
            p.anon_index,
            p.public_assets,
            p.anon_assets,
            p.neighbour_gap
        );
    }
    files.push(("matching.csv", s));

    let mut s = String::from("file,line,code,detail\n");
    for (file, r) in &a.inputs.rejects {
        let _ = writeln!(s, "{file},{},{},{:?}", r.line, r.reason.code(), r.detail);
    }
    for (file, n) in &a.inputs.flags {
        let _ = writeln!(s, "{file},{},{},{:?}", n.line, n.flag.code(), n.label);
    }
    for (firm, bank) in &a.inputs.unknown_relations {
        let _ = writeln!(
            s,
            "relations,0,unknown_firm,{:?}",
            format!("{firm}->{bank}")
        );
    }
    files.push(("ingestion_issues.csv", s));

    let ranking = emit_top_table(&a.nodes, a.nodes.len());
    let mut s = String::from("node_label,kind,total_assets,R_F,R_B,rank\n");
    for (k, r) in ranking.iter().enumerate() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.label,
            r.kind,
            r.total_assets,
            r.r_f,
            r.r_b.map(|x| x.to_string()).unwrap_or_default(),
            k + 1
        );
    }
    files.push(("debtrank.csv", s));

    let mut s = String::from("rank,node_label,kind,sector_code,total_assets,R_F\n");
    for (k, r) in emit_top_table(&a.nodes, manifest.top_n).iter().enumerate() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            k + 1,
            r.label,
            r.kind,
            r.sector_code.as_deref().unwrap_or(""),
            r.total_assets,
            r.r_f
        );
    }
    files.push(("top_table.csv", s));

    let dr_spec = HistogramSpec::new(0.0, 0.7, 70);
    let of_kind = |k: NodeKind| a.nodes.iter().filter(move |n| n.kind == k).map(|n| n.r_f);
    let hb = Histogram::build(of_kind(NodeKind::Bank), dr_spec);
    let hf = Histogram::build(of_kind(NodeKind::Firm), dr_spec);
    files.push((
        "debtrank_hist.csv",
        two_histograms("banks", &hb, "firms", &hf),
    ));

    let wide = HistogramSpec::new(0.0, 3000.0, 60);
    let narrow = HistogramSpec::new(0.0, 360.0, 60);
    let firm_spec = HistogramSpec::new(0.0, 20.0, 20);
    let dist_f = degree_stats(&a.entire, wide);
    let dist_b = degree_stats(&a.interbank, narrow);
    let (i, o) = degree_histograms(&dist_f, a.entire.banks(), wide);
    files.push((
        "degree_hist_banks_f.csv",
        two_histograms("in", &i, "out", &o),
    ));
    let (i, o) = degree_histograms(&dist_b, a.interbank.banks(), narrow);
    files.push((
        "degree_hist_banks_b.csv",
        two_histograms("in", &i, "out", &o),
    ));
    let (i, o) = degree_histograms(&dist_f, a.entire.firms(), firm_spec);
    files.push((
        "degree_hist_firms_f.csv",
        two_histograms("in", &i, "out", &o),
    ));

    let mut s = String::from("node_label,kind,in_degree_f,out_degree_f,in_degree_b,out_degree_b\n");
    for r in a.entire.records() {
        let k = r.id.0;
        let (ib, ob) = if r.kind == NodeKind::Bank {
            (
                dist_b.in_degree[k].to_string(),
                dist_b.out_degree[k].to_string(),
            )
        } else {
            (String::new(), String::new())
        };
        let _ = writeln!(
            s,
            "{},{},{},{},{ib},{ob}",
            r.name, r.kind, dist_f.in_degree[k], dist_f.out_degree[k]
        );
    }
    files.push(("degrees.csv", s));

    let mut s = String::new();
    let conv = match manifest.clustering {
        ClusteringConvention::MeanLocal => "mean-local",
        ClusteringConvention::Transitivity => "transitivity",
    };
    let _ = writeln!(s, "convention = {conv}");
    let _ = writeln!(s, "low_degree_policy = nodes with degree < 2 contribute 0");
    for (tag, c) in [("F", &a.clustering_f), ("B", &a.clustering_b)] {
        let _ = writeln!(s, "{tag}.nodes = {}", c.node_count);
        let _ = writeln!(s, "{tag}.undirected_links = {}", c.undirected_edge_count);
        let _ = writeln!(s, "{tag}.directed_links = {}", c.directed_edge_count);
        let _ = writeln!(
            s,
            "{tag}.clustering = {}",
            c.coefficient(manifest.clustering)
        );
        let _ = writeln!(
            s,
            "{tag}.mean_local_clustering = {}",
            c.mean_local_clustering
        );
        let _ = writeln!(s, "{tag}.transitivity = {}", c.transitivity);
        let _ = writeln!(s, "{tag}.random_baseline = {}", c.random_baseline);
        let _ = writeln!(
            s,
            "{tag}.random_baseline_directed = {}",
            c.random_baseline_directed
        );
    }
    files.push(("clustering.txt", s));

    let mut s = String::new();
    let _ = writeln!(s, "banks = {}", a.entire.bank_count());
    let _ = writeln!(s, "firms = {}", a.entire.firm_count());
    let _ = writeln!(s, "top_firms = {}", manifest.top_firms);
    let _ = writeln!(s, "entries_F = {}", a.entire.entry_count());
    let _ = writeln!(s, "entries_B = {}", a.interbank.entry_count());
    let _ = writeln!(s, "V_F = {}", a.volume_f);
    let _ = writeln!(s, "V_B = {}", a.volume_b);
    let _ = writeln!(
        s,
        "sum_R_F = {}",
        a.ranks_f.iter().map(|r| r.value).sum::<f64>()
    );
    let _ = writeln!(
        s,
        "sum_R_B = {}",
        a.ranks_b.iter().map(|r| r.value).sum::<f64>()
    );
    let _ = writeln!(s, "Q1 = {}", a.q1);
    let _ = writeln!(s, "Q2 = {}", a.q2);
    let max_firm = a
        .nodes
        .iter()
        .filter(|n| n.kind == NodeKind::Firm)
        .map(|n| n.r_f)
        .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))));
    let _ = writeln!(
        s,
        "max_R_F_firm = {}",
        max_firm.map(|x| x.to_string()).unwrap_or_default()
    );
    let _ = writeln!(s, "debtrank_mode = exclude-initial");
    let vd = match manifest.v_direction {
        ValueDirection::AsWritten => "as-written",
        ValueDirection::Transposed => "transposed",
    };
    let _ = writeln!(s, "v_direction = {vd}");
    let dw = match manifest.deposits {
        DepositWeighting::Off => "off",
        DepositWeighting::Proportional => "proportional",
    };
    let _ = writeln!(s, "deposits = {dw}");
    let _ = writeln!(s, "clustering = {conv}");
    let rm = match manifest.ratio_method {
        RatioMethod::MeanOfRatios => "mean-of-ratios",
        RatioMethod::RatioOfSums => "ratio-of-sums",
    };
    let _ = writeln!(s, "sector_ratio = {rm}");
    files.push(("summary.txt", s));

    files
}

fn two_histograms(a_name: &str, a: &Histogram, b_name: &str, b: &Histogram) -> String {
    let mut s = format!("bin_lo,bin_hi,{a_name},{b_name}\n");
    let edges = a.spec.edges();
    for k in 0..a.counts.len() {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            edges[k],
            edges[k + 1],
            a.counts[k],
            b.counts[k]
        );
    }
    let _ = writeln!(s, "overflow,,{},{}", a.overflow, b.overflow);
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub files: Vec<String>,
    pub q1: Option<f64>,
    pub q2: Option<f64>,
    pub nodes: usize,
}

pub fn run_pipeline(manifest: &RunManifest) -> Result<RunSummary, PipelineError> {
    let analysis = analyze(manifest)?;
    let files = render_bundle(&analysis, manifest);
    fs::create_dir_all(&manifest.out_dir).map_err(internal_err("output"))?;
    for (name, content) in &files {
        fs::write(manifest.out_dir.join(name), content).map_err(internal_err("output"))?;
    }
    Ok(RunSummary {
        out_dir: manifest.out_dir.clone(),
        files: files.iter().map(|(n, _)| n.to_string()).collect(),
        q1: analysis.q1.value(),
        q2: analysis.q2.value(),
        nodes: analysis.entire.node_count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_network, NodeRecord};

    fn node(label: &str, kind: NodeKind, assets: f64, r: f64) -> RankedNode {
        RankedNode {
            label: label.into(),
            kind,
            sector_code: (kind == NodeKind::Firm).then(|| "C".into()),
            total_assets: assets,
            r_f: r,
            r_b: None,
        }
    }

    #[test]
    fn top_table_clamps_and_breaks_ties() {
        let nodes = vec![
            node("a", NodeKind::Bank, 10.0, 0.2),
            node("b", NodeKind::Firm, 50.0, 0.2),
            node("c", NodeKind::Firm, 50.0, 0.2),
            node("d", NodeKind::Firm, 1.0, 0.9),
        ];
        let t = emit_top_table(&nodes, 100);
        let labels: Vec<_> = t.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, vec!["d", "b", "c", "a"]);
        assert_eq!(emit_top_table(&nodes, 2).len(), 2);
        assert_eq!(t[0].sector_code.as_deref(), Some("C"));
    }

    #[test]
    fn selection_keeps_banks_and_largest_firms() {
        let recs = vec![
            NodeRecord::bank("b0", 1.0, 1.0),
            NodeRecord::firm("f0", 1.0, 1.0, 5.0, None),
            NodeRecord::firm("f1", 1.0, 1.0, 50.0, None),
            NodeRecord::firm("f2", 1.0, 1.0, 5.0, None),
        ];
        let net = build_network(recs, [(1, 0, 5.0), (2, 0, 50.0), (3, 0, 5.0)]).unwrap();
        let keep = top_firm_selection(&net, 2);
        assert_eq!(keep, [0, 1, 2].into_iter().map(NodeId).collect());
        assert_eq!(
            top_firm_selection(&net, 0),
            [NodeId(0)].into_iter().collect()
        );
        assert_eq!(top_firm_selection(&net, 10).len(), 4);
    }

    #[test]
    fn missing_input_is_a_validation_error() {
        let m = RunManifest::new(
            InputSource::SyntheticFile("/nonexistent/cfg.toml".into()),
            "/tmp/x",
        );
        let e = m.validate().unwrap_err();
        assert_eq!(e.kind, ErrorKind::Validation);
        assert_eq!(e.exit_code(), 2);
        assert!(e.report_line().starts_with("error kind=validation"));
    }
}
