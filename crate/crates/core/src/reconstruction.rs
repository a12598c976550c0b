//! Weights for the bank–firm links and assembly of the full liability
//! matrix.
//!
//! Each firm's aggregated bank liabilities `L_c` are split over its banks in
//! proportion to their total assets: `ℓ_b = A_b` for connected banks, the
//! vector is L1-normalized and `L_cb = L_c · ℓ̂_b`. The interbank block is
//! copied from the anonymized matrix, with bank node `i` being interbank
//! index `i`.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingestion::{
    BankStatement, FirmStatement, InterbankMatrix, LiabilityProvenance, RankMatching,
};
use crate::network::{build_network, LiabilityNetwork, NetworkError, NodeId, NodeKind, NodeRecord};

#[derive(Debug, Error, PartialEq)]
pub enum ReconstructionError {
    #[error("firm {0} has no connected bank")]
    NoConnectedBanks(String),
    #[error("firm {firm} references unknown bank {bank}")]
    UnknownBank { firm: String, bank: String },
    #[error("invalid partition input: {0}")]
    InvalidInput(String),
    #[error("inconsistent dimensions: {0}")]
    InconsistentDimensions(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// Deposit (bank owes firm) links.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DepositWeighting {
    /// No deposit block.
    #[default]
    Off,
    /// Split each firm's deposit aggregate over its banks with the same
    /// asset-proportional rule as its loans.
    Proportional,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub amounts: Vec<(NodeId, f64)>,
    /// Every connected bank had zero assets; split uniformly instead.
    pub uniform_fallback: bool,
}

/// Splits `total` over `banks` (node, total assets) proportionally to assets.
pub fn partition_firm_liabilities(
    total: f64,
    banks: &[(NodeId, f64)],
) -> Result<Partition, ReconstructionError> {
    if banks.is_empty() {
        return Err(ReconstructionError::NoConnectedBanks(String::new()));
    }
    if !(total >= 0.0) || !total.is_finite() {
        return Err(ReconstructionError::InvalidInput(format!(
            "liabilities {total}"
        )));
    }
    if let Some((b, a)) = banks.iter().find(|(_, a)| !(*a >= 0.0) || !a.is_finite()) {
        return Err(ReconstructionError::InvalidInput(format!(
            "bank {b} assets {a}"
        )));
    }
    let norm: f64 = banks.iter().map(|(_, a)| a.abs()).sum();
    if norm == 0.0 {
        let share = total / banks.len() as f64;
        return Ok(Partition {
            amounts: banks.iter().map(|&(b, _)| (b, share)).collect(),
            uniform_fallback: true,
        });
    }
    Ok(Partition {
        amounts: banks
            .iter()
            .map(|&(b, a)| (b, total * (a / norm)))
            .collect(),
        uniform_fallback: false,
    })
}

/// Unweighted firm → banks adjacency. Only connected firms appear, in input
/// order, each tagged with its index in the statement list.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RelationshipGraph {
    pub links: Vec<(usize, Vec<NodeId>)>,
}

impl RelationshipGraph {
    /// Resolves firm bank labels to bank nodes (interbank indices) through
    /// the rank matching.
    pub fn from_firms(
        firms: &[FirmStatement],
        matching: &RankMatching,
    ) -> Result<Self, ReconstructionError> {
        let index = matching.label_to_anon();
        let mut links = Vec::new();
        for (k, f) in firms.iter().enumerate() {
            if !f.is_connected() {
                continue;
            }
            let mut banks = Vec::with_capacity(f.bank_labels.len());
            for label in &f.bank_labels {
                let node =
                    index
                        .get(label.as_str())
                        .ok_or_else(|| ReconstructionError::UnknownBank {
                            firm: f.firm_label.clone(),
                            bank: label.clone(),
                        })?;
                let node = NodeId(*node);
                if !banks.contains(&node) {
                    banks.push(node);
                }
            }
            links.push((k, banks));
        }
        Ok(RelationshipGraph { links })
    }

    pub fn firm_count(&self) -> usize {
        self.links.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirmResidual {
    pub firm_label: String,
    pub stated: f64,
    pub assigned: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructionReport {
    pub firms_total: usize,
    pub firms_included: usize,
    pub firms_unconnected: usize,
    pub bank_liabilities_total: f64,
    pub bank_liabilities_included: f64,
    /// Included firm bank liabilities over all firm bank liabilities.
    pub coverage_share: f64,
    /// Share of included liabilities whose per-bank split is known exactly
    /// (firms with a single bank and a reported figure).
    pub exact_share: f64,
    /// Share of included liabilities that came from sector estimation.
    pub estimated_share: f64,
    pub single_bank_firms: usize,
    pub uniform_fallback_firms: Vec<String>,
    /// Relationship links that received a zero amount and were left out.
    pub zero_links: usize,
    pub interbank_entries: usize,
    pub loan_entries: usize,
    pub deposit_entries: usize,
    pub deposit_weighting: DepositWeighting,
    pub max_relative_residual: f64,
    pub residuals: Vec<FirmResidual>,
}

impl ReconstructionReport {
    /// `key = value` lines; per-firm residuals are summarized, not listed.
    pub fn write_key_value<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "firms_total = {}", self.firms_total)?;
        writeln!(out, "firms_included = {}", self.firms_included)?;
        writeln!(out, "firms_unconnected = {}", self.firms_unconnected)?;
        writeln!(
            out,
            "bank_liabilities_total = {}",
            self.bank_liabilities_total
        )?;
        writeln!(
            out,
            "bank_liabilities_included = {}",
            self.bank_liabilities_included
        )?;
        writeln!(out, "coverage_share = {}", self.coverage_share)?;
        writeln!(out, "exact_share = {}", self.exact_share)?;
        writeln!(out, "estimated_share = {}", self.estimated_share)?;
        writeln!(out, "single_bank_firms = {}", self.single_bank_firms)?;
        writeln!(
            out,
            "uniform_fallback_firms = {}",
            self.uniform_fallback_firms.join(";")
        )?;
        writeln!(out, "zero_links = {}", self.zero_links)?;
        writeln!(out, "interbank_entries = {}", self.interbank_entries)?;
        writeln!(out, "loan_entries = {}", self.loan_entries)?;
        writeln!(out, "deposit_entries = {}", self.deposit_entries)?;
        let dw = match self.deposit_weighting {
            DepositWeighting::Off => "off",
            DepositWeighting::Proportional => "proportional",
        };
        writeln!(out, "deposit_weighting = {dw}")?;
        writeln!(
            out,
            "max_relative_residual = {}",
            self.max_relative_residual
        )?;
        Ok(())
    }
}

fn share(part: f64, whole: f64) -> f64 {
    if whole > 0.0 {
        part / whole
    } else {
        0.0
    }
}

/// Builds the block liability matrix: interbank entries verbatim, firm loans
/// from the asset-proportional split, deposits when enabled.
///
/// Bank node `i` is interbank index `i`; its record takes the label and
/// balance sheet of the public bank matched to it. Firm nodes follow in the
/// order of `relations`.
pub fn assemble_liability_matrix(
    interbank: &InterbankMatrix,
    relations: &RelationshipGraph,
    firms: &[FirmStatement],
    banks: &[BankStatement],
    matching: &RankMatching,
    deposits: DepositWeighting,
) -> Result<(LiabilityNetwork, ReconstructionReport), ReconstructionError> {
    let b = interbank.size;
    if banks.len() != b || matching.len() != b || interbank.total_assets.len() != b {
        return Err(ReconstructionError::InconsistentDimensions(format!(
            "{} bank statements, {} matched, interbank size {b}",
            banks.len(),
            matching.len()
        )));
    }
    if let Some((k, _)) = relations.links.iter().find(|(k, _)| *k >= firms.len()) {
        return Err(ReconstructionError::InconsistentDimensions(format!(
            "relationship references firm {k}, only {} statements",
            firms.len()
        )));
    }

    let mut records: Vec<NodeRecord> = (0..b)
        .map(|i| {
            let s = &banks[matching.public_index(i)];
            NodeRecord::bank(s.bank_label.clone(), s.total_assets, s.equity)
        })
        .collect();
    let bank_assets: Vec<f64> = records.iter().map(|r| r.total_assets).collect();

    let mut entries: Vec<(usize, usize, f64)> = interbank.entries.clone();
    let interbank_entries = entries.len();
    let mut loan_entries = 0;
    let mut deposit_entries = 0;
    let mut zero_links = 0;
    let mut residuals = Vec::with_capacity(relations.links.len());
    let mut uniform_fallback_firms = Vec::new();
    let mut included = 0.0;
    let mut exact = 0.0;
    let mut estimated = 0.0;
    let mut single_bank_firms = 0;

    for (pos, (k, bank_nodes)) in relations.links.iter().enumerate() {
        let f = &firms[*k];
        let node = b + pos;
        if bank_nodes.is_empty() {
            return Err(ReconstructionError::NoConnectedBanks(f.firm_label.clone()));
        }
        if let Some(bad) = bank_nodes.iter().find(|n| n.0 >= b) {
            return Err(ReconstructionError::InconsistentDimensions(format!(
                "firm {} linked to bank node {bad}",
                f.firm_label
            )));
        }
        let stated = f.bank_liabilities.unwrap_or(0.0);
        let weights: Vec<(NodeId, f64)> =
            bank_nodes.iter().map(|&n| (n, bank_assets[n.0])).collect();
        let split = partition_firm_liabilities(stated, &weights).map_err(|e| match e {
            ReconstructionError::NoConnectedBanks(_) => {
                ReconstructionError::NoConnectedBanks(f.firm_label.clone())
            }
            ReconstructionError::InvalidInput(m) => {
                ReconstructionError::InvalidInput(format!("firm {}: {m}", f.firm_label))
            }
            other => other,
        })?;
        if split.uniform_fallback {
            uniform_fallback_firms.push(f.firm_label.clone());
        }
        let mut assigned = 0.0;
        for &(bank, amount) in &split.amounts {
            assigned += amount;
            if amount > 0.0 {
                entries.push((node, bank.0, amount));
                loan_entries += 1;
            } else {
                zero_links += 1;
            }
        }
        let residual = (assigned - stated).abs();
        residuals.push(FirmResidual {
            firm_label: f.firm_label.clone(),
            stated,
            assigned,
            residual,
        });

        if deposits == DepositWeighting::Proportional {
            if let Some(d) = f.bank_deposits.filter(|d| *d > 0.0) {
                let split = partition_firm_liabilities(d, &weights)?;
                for &(bank, amount) in &split.amounts {
                    if amount > 0.0 {
                        entries.push((bank.0, node, amount));
                        deposit_entries += 1;
                    }
                }
            }
        }

        included += stated;
        if f.provenance.is_estimated() {
            estimated += stated;
        }
        if bank_nodes.len() == 1 {
            single_bank_firms += 1;
            if f.provenance == LiabilityProvenance::Exact {
                exact += stated;
            }
        }
        records.push(NodeRecord {
            id: NodeId(node),
            kind: NodeKind::Firm,
            name: f.firm_label.clone(),
            total_assets: f.total_assets,
            capital: f.equity,
            bank_liabilities: Some(stated),
            sector_code: (!f.sector_code.is_empty()).then(|| f.sector_code.clone()),
        });
    }

    let total: f64 = firms
        .iter()
        .map(|f| f.bank_liabilities.unwrap_or(0.0))
        .sum();
    let max_relative_residual = residuals
        .iter()
        .map(|r| {
            if r.stated > 0.0 {
                r.residual / r.stated
            } else {
                r.residual
            }
        })
        .fold(0.0, f64::max);

    let net = build_network(records, entries)?;
    let report = ReconstructionReport {
        firms_total: firms.len(),
        firms_included: relations.links.len(),
        firms_unconnected: firms.iter().filter(|f| !f.is_connected()).count(),
        bank_liabilities_total: total,
        bank_liabilities_included: included,
        coverage_share: share(included, total),
        exact_share: share(exact, included),
        estimated_share: share(estimated, included),
        single_bank_firms,
        uniform_fallback_firms,
        zero_links,
        interbank_entries,
        loan_entries,
        deposit_entries,
        deposit_weighting: deposits,
        max_relative_residual,
        residuals,
    };
    Ok((net, report))
}
