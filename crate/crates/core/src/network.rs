//! Typed nodes and the block-partitioned liability matrix.
//!
//! Nodes are laid out banks first, then firms: a network with `b` banks and
//! `c` firms uses indices `[0, b)` for banks and `[b, b + c)` for firms. An
//! entry `(i, j, amount)` means node `i` owes `amount` EUR to node `j`.
//! Firm-to-firm entries are never stored.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Bank,
    Firm,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Bank => "bank",
            NodeKind::Firm => "firm",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Block of the liability matrix an entry falls into, named debtor-creditor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Block {
    /// Interbank liabilities.
    BB,
    /// Bank owes firm (deposits).
    BC,
    /// Firm owes bank (loans).
    CB,
    /// Firm owes firm. Never stored.
    CC,
}

/// Balance-sheet facts for one node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: NodeId,
    pub kind: NodeKind,
    pub name: String,
    pub total_assets: f64,
    /// Equity buffer used as the node's loss-absorbing capital.
    pub capital: f64,
    /// Aggregated liabilities toward banks. Firms only.
    pub bank_liabilities: Option<f64>,
    pub sector_code: Option<String>,
}

impl NodeRecord {
    /// A bank record. The id is assigned by [`build_network`] from its position.
    pub fn bank(name: impl Into<String>, total_assets: f64, capital: f64) -> Self {
        NodeRecord {
            id: NodeId(0),
            kind: NodeKind::Bank,
            name: name.into(),
            total_assets,
            capital,
            bank_liabilities: None,
            sector_code: None,
        }
    }

    pub fn firm(
        name: impl Into<String>,
        total_assets: f64,
        capital: f64,
        bank_liabilities: f64,
        sector_code: Option<String>,
    ) -> Self {
        NodeRecord {
            id: NodeId(0),
            kind: NodeKind::Firm,
            name: name.into(),
            total_assets,
            capital,
            bank_liabilities: Some(bank_liabilities),
            sector_code,
        }
    }

    /// Capital at or below zero: the node starts insolvent.
    pub fn has_nonpositive_capital(&self) -> bool {
        self.capital <= 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Liability {
    pub debtor: NodeId,
    pub creditor: NodeId,
    pub amount: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("entry ({debtor}, {creditor}) references a node outside 0..{n}")]
    IndexOutOfRange {
        debtor: usize,
        creditor: usize,
        n: usize,
    },
    #[error("entry ({debtor}, {creditor}) lies in the firm-firm block")]
    ForbiddenBlockEntry { debtor: usize, creditor: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("entry ({debtor}, {creditor}) has non-positive or non-finite amount {amount}")]
    NonPositiveAmount {
        debtor: usize,
        creditor: usize,
        amount: f64,
    },
    #[error("duplicate entry ({debtor}, {creditor})")]
    DuplicateEntry { debtor: usize, creditor: usize },
    #[error("record {0} is a bank listed after the first firm")]
    BankAfterFirm(usize),
    #[error("record {index} has invalid total assets {value}")]
    InvalidAssets { index: usize, value: f64 },
    #[error("network has no liabilities")]
    EmptyNetwork,
    #[error("node selection is empty")]
    EmptySelection,
}

/// Which way the per-node liability volume is summed for the relative
/// economic value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueDirection {
    /// `L_i = Σ_j L_ji`: amounts owed to `i` (claims held by `i`).
    #[default]
    AsWritten,
    /// `L_i = Σ_j L_ij`: amounts `i` owes.
    Transposed,
}

/// Sparse weighted directed graph over banks and firms.
///
/// Entries are stored in compressed row form sorted by (debtor, creditor).
/// The network is immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct LiabilityNetwork {
    banks: usize,
    records: Vec<NodeRecord>,
    row_offsets: Vec<usize>,
    creditors: Vec<usize>,
    amounts: Vec<f64>,
}

pub fn build_network(
    records: Vec<NodeRecord>,
    entries: impl IntoIterator<Item = (usize, usize, f64)>,
) -> Result<LiabilityNetwork, NetworkError> {
    let mut records = records;
    let mut banks = 0;
    let mut seen_firm = false;
    for (idx, rec) in records.iter_mut().enumerate() {
        rec.id = NodeId(idx);
        match rec.kind {
            NodeKind::Bank if seen_firm => return Err(NetworkError::BankAfterFirm(idx)),
            NodeKind::Bank => banks += 1,
            NodeKind::Firm => seen_firm = true,
        }
        if !(rec.total_assets >= 0.0) {
            return Err(NetworkError::InvalidAssets {
                index: idx,
                value: rec.total_assets,
            });
        }
    }
    let n = records.len();

    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    for (i, j, amount) in entries {
        if i >= n || j >= n {
            return Err(NetworkError::IndexOutOfRange {
                debtor: i,
                creditor: j,
                n,
            });
        }
        if i >= banks && j >= banks {
            return Err(NetworkError::ForbiddenBlockEntry {
                debtor: i,
                creditor: j,
            });
        }
        if i == j {
            return Err(NetworkError::SelfLoop(i));
        }
        if !(amount > 0.0) || !amount.is_finite() {
            return Err(NetworkError::NonPositiveAmount {
                debtor: i,
                creditor: j,
                amount,
            });
        }
        triplets.push((i, j, amount));
    }
    triplets.sort_by_key(|t| (t.0, t.1));
    if let Some(w) = triplets
        .windows(2)
        .find(|w| w[0].0 == w[1].0 && w[0].1 == w[1].1)
    {
        return Err(NetworkError::DuplicateEntry {
            debtor: w[0].0,
            creditor: w[0].1,
        });
    }

    let mut row_offsets = vec![0usize; n + 1];
    for &(i, _, _) in &triplets {
        row_offsets[i + 1] += 1;
    }
    for k in 0..n {
        row_offsets[k + 1] += row_offsets[k];
    }
    let creditors = triplets.iter().map(|t| t.1).collect();
    let amounts = triplets.iter().map(|t| t.2).collect();

    Ok(LiabilityNetwork {
        banks,
        records,
        row_offsets,
        creditors,
        amounts,
    })
}

impl LiabilityNetwork {
    pub fn node_count(&self) -> usize {
        self.records.len()
    }

    pub fn bank_count(&self) -> usize {
        self.banks
    }

    pub fn firm_count(&self) -> usize {
        self.records.len() - self.banks
    }

    pub fn entry_count(&self) -> usize {
        self.amounts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amounts.is_empty()
    }

    pub fn records(&self) -> &[NodeRecord] {
        &self.records
    }

    pub fn record(&self, id: NodeId) -> &NodeRecord {
        &self.records[id.0]
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        if id.0 < self.banks {
            NodeKind::Bank
        } else {
            NodeKind::Firm
        }
    }

    pub fn kinds(&self) -> Vec<NodeKind> {
        (0..self.node_count())
            .map(|i| self.kind(NodeId(i)))
            .collect()
    }

    pub fn block(&self, debtor: NodeId, creditor: NodeId) -> Block {
        match (self.kind(debtor), self.kind(creditor)) {
            (NodeKind::Bank, NodeKind::Bank) => Block::BB,
            (NodeKind::Bank, NodeKind::Firm) => Block::BC,
            (NodeKind::Firm, NodeKind::Bank) => Block::CB,
            (NodeKind::Firm, NodeKind::Firm) => Block::CC,
        }
    }

    /// Creditors of `debtor` with the amounts owed, sorted by creditor.
    pub fn row(&self, debtor: NodeId) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        let range = self.row_offsets[debtor.0]..self.row_offsets[debtor.0 + 1];
        self.creditors[range.clone()]
            .iter()
            .zip(&self.amounts[range])
            .map(|(&j, &a)| (NodeId(j), a))
    }

    pub fn out_degree(&self, node: NodeId) -> usize {
        self.row_offsets[node.0 + 1] - self.row_offsets[node.0]
    }

    /// All entries in (debtor, creditor) order.
    pub fn entries(&self) -> impl Iterator<Item = Liability> + '_ {
        (0..self.node_count()).flat_map(move |i| {
            self.row(NodeId(i)).map(move |(j, amount)| Liability {
                debtor: NodeId(i),
                creditor: j,
                amount,
            })
        })
    }

    pub fn amount(&self, debtor: NodeId, creditor: NodeId) -> Option<f64> {
        let range = self.row_offsets[debtor.0]..self.row_offsets[debtor.0 + 1];
        let row = &self.creditors[range.clone()];
        row.binary_search(&creditor.0)
            .ok()
            .map(|k| self.amounts[range.start + k])
    }

    /// Total liability volume `Σ_ij L_ij`.
    pub fn total_volume(&self) -> f64 {
        self.amounts.iter().sum()
    }

    pub fn capital(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.capital).collect()
    }

    /// Nodes whose capital is zero or negative.
    pub fn nonpositive_capital_nodes(&self) -> Vec<NodeId> {
        self.records
            .iter()
            .filter(|r| r.has_nonpositive_capital())
            .map(|r| r.id)
            .collect()
    }

    pub fn banks(&self) -> impl Iterator<Item = NodeId> + Clone {
        (0..self.banks).map(NodeId)
    }

    pub fn firms(&self) -> impl Iterator<Item = NodeId> + Clone {
        (self.banks..self.records.len()).map(NodeId)
    }
}

/// Per-node share of the total liability volume.
#[derive(Debug, Clone, PartialEq)]
pub struct EconomicValueVector(Vec<f64>);

impl EconomicValueVector {
    pub fn from_values(values: Vec<f64>) -> Self {
        EconomicValueVector(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, id: NodeId) -> f64 {
        self.0[id.0]
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Relative economic value `v_i = L_i / Σ_k L_k`.
pub fn economic_value(
    net: &LiabilityNetwork,
    direction: ValueDirection,
) -> Result<EconomicValueVector, NetworkError> {
    let mut volume = vec![0.0; net.node_count()];
    for e in net.entries() {
        let holder = match direction {
            ValueDirection::AsWritten => e.creditor,
            ValueDirection::Transposed => e.debtor,
        };
        volume[holder.0] += e.amount;
    }
    let total: f64 = volume.iter().sum();
    if !(total > 0.0) {
        return Err(NetworkError::EmptyNetwork);
    }
    Ok(EconomicValueVector(
        volume.into_iter().map(|x| x / total).collect(),
    ))
}

/// Induced subgraph on `keep`, reindexed densely in the original order so
/// banks stay ahead of firms.
pub fn subnetwork(
    net: &LiabilityNetwork,
    keep: &BTreeSet<NodeId>,
) -> Result<LiabilityNetwork, NetworkError> {
    if keep.is_empty() {
        return Err(NetworkError::EmptySelection);
    }
    let n = net.node_count();
    if let Some(bad) = keep.iter().find(|id| id.0 >= n) {
        return Err(NetworkError::IndexOutOfRange {
            debtor: bad.0,
            creditor: bad.0,
            n,
        });
    }
    let mut new_index = vec![usize::MAX; n];
    for (k, id) in keep.iter().enumerate() {
        new_index[id.0] = k;
    }
    let records = keep.iter().map(|id| net.records[id.0].clone()).collect();
    let entries: Vec<_> = net
        .entries()
        .filter(|e| new_index[e.debtor.0] != usize::MAX && new_index[e.creditor.0] != usize::MAX)
        .map(|e| (new_index[e.debtor.0], new_index[e.creditor.0], e.amount))
        .collect();
    build_network(records, entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_banks_one_firm() -> Vec<NodeRecord> {
        vec![
            NodeRecord::bank("b0", 1000.0, 100.0),
            NodeRecord::bank("b1", 500.0, 50.0),
            NodeRecord::firm("f0", 200.0, 20.0, 80.0, Some("C".into())),
        ]
    }

    #[test]
    fn minimal_valid_network() {
        let net = build_network(two_banks_one_firm(), [(0, 1, 100.0)]).unwrap();
        assert_eq!(net.bank_count(), 2);
        assert_eq!(net.firm_count(), 1);
        assert_eq!(net.entry_count(), 1);
        assert_eq!(net.block(NodeId(0), NodeId(1)), Block::BB);
        assert_eq!(net.amount(NodeId(0), NodeId(1)), Some(100.0));
        assert_eq!(net.amount(NodeId(1), NodeId(0)), None);
    }

    #[test]
    fn rejects_firm_firm_entry() {
        let mut recs = two_banks_one_firm();
        recs.push(NodeRecord::firm("f1", 1.0, 1.0, 0.0, None));
        assert_eq!(
            build_network(recs, [(2, 3, 50.0)]),
            Err(NetworkError::ForbiddenBlockEntry {
                debtor: 2,
                creditor: 3
            })
        );
        assert_eq!(
            build_network(two_banks_one_firm(), [(2, 2, 50.0)]),
            Err(NetworkError::ForbiddenBlockEntry {
                debtor: 2,
                creditor: 2
            })
        );
    }

    #[test]
    fn rejects_self_loop() {
        assert_eq!(
            build_network(two_banks_one_firm(), [(0, 0, 10.0)]),
            Err(NetworkError::SelfLoop(0))
        );
    }

    #[test]
    fn rejects_bad_amounts_duplicates_and_ranges() {
        assert!(matches!(
            build_network(two_banks_one_firm(), [(0, 1, 0.0)]),
            Err(NetworkError::NonPositiveAmount { .. })
        ));
        assert!(matches!(
            build_network(two_banks_one_firm(), [(0, 1, f64::NAN)]),
            Err(NetworkError::NonPositiveAmount { .. })
        ));
        assert!(matches!(
            build_network(two_banks_one_firm(), [(0, 1, -3.0)]),
            Err(NetworkError::NonPositiveAmount { .. })
        ));
        assert_eq!(
            build_network(two_banks_one_firm(), [(0, 1, 1.0), (0, 1, 2.0)]),
            Err(NetworkError::DuplicateEntry {
                debtor: 0,
                creditor: 1
            })
        );
        assert!(matches!(
            build_network(two_banks_one_firm(), [(0, 3, 1.0)]),
            Err(NetworkError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn rejects_bank_after_firm() {
        let recs = vec![
            NodeRecord::firm("f", 1.0, 1.0, 0.0, None),
            NodeRecord::bank("b", 1.0, 1.0),
        ];
        assert_eq!(build_network(recs, []), Err(NetworkError::BankAfterFirm(1)));
    }

    #[test]
    fn economic_value_single_entry() {
        let recs = vec![
            NodeRecord::bank("A", 1.0, 1.0),
            NodeRecord::bank("B", 1.0, 1.0),
        ];
        let net = build_network(recs, [(0, 1, 100.0)]).unwrap();
        let v = economic_value(&net, ValueDirection::AsWritten).unwrap();
        assert_eq!(v.as_slice(), &[0.0, 1.0]);
        let t = economic_value(&net, ValueDirection::Transposed).unwrap();
        assert_eq!(t.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn economic_value_symmetric_pair() {
        let recs = vec![
            NodeRecord::bank("A", 1.0, 1.0),
            NodeRecord::bank("B", 1.0, 1.0),
        ];
        let net = build_network(recs, [(0, 1, 50.0), (1, 0, 50.0)]).unwrap();
        let v = economic_value(&net, ValueDirection::AsWritten).unwrap();
        assert_eq!(v.as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn economic_value_three_nodes() {
        let recs = (0..3)
            .map(|k| NodeRecord::bank(format!("n{k}"), 1.0, 1.0))
            .collect();
        let net = build_network(recs, [(0, 1, 100.0), (0, 2, 100.0), (1, 2, 200.0)]).unwrap();
        let v = economic_value(&net, ValueDirection::AsWritten).unwrap();
        assert_eq!(v.as_slice(), &[0.0, 0.25, 0.75]);
    }

    #[test]
    fn economic_value_of_empty_network_fails() {
        let net = build_network(two_banks_one_firm(), []).unwrap();
        assert_eq!(
            economic_value(&net, ValueDirection::AsWritten),
            Err(NetworkError::EmptyNetwork)
        );
    }

    #[test]
    fn subnetwork_identity_and_banks_only() {
        let net = build_network(
            two_banks_one_firm(),
            [(0, 1, 10.0), (2, 0, 5.0), (2, 1, 6.0), (1, 2, 3.0)],
        )
        .unwrap();
        let all: BTreeSet<_> = (0..3).map(NodeId).collect();
        assert_eq!(subnetwork(&net, &all).unwrap(), net);

        let banks: BTreeSet<_> = net.banks().collect();
        let b = subnetwork(&net, &banks).unwrap();
        assert_eq!(b.node_count(), 2);
        assert_eq!(b.firm_count(), 0);
        let e: Vec<_> = b.entries().collect();
        assert_eq!(e.len(), 1);
        assert_eq!(b.block(e[0].debtor, e[0].creditor), Block::BB);

        assert_eq!(
            subnetwork(&net, &BTreeSet::new()),
            Err(NetworkError::EmptySelection)
        );
    }

    #[test]
    fn subnetwork_drops_smallest_firm() {
        let recs = vec![
            NodeRecord::bank("b0", 10.0, 1.0),
            NodeRecord::bank("b1", 10.0, 1.0),
            NodeRecord::firm("f_big", 5.0, 1.0, 300.0, None),
            NodeRecord::firm("f_small", 5.0, 1.0, 10.0, None),
            NodeRecord::firm("f_mid", 5.0, 1.0, 100.0, None),
        ];
        let entries = vec![
            (0, 1, 1.0),
            (2, 0, 200.0),
            (2, 1, 100.0),
            (3, 1, 10.0),
            (4, 0, 100.0),
            (1, 3, 2.0),
        ];
        let net = build_network(recs, entries.clone()).unwrap();
        let mut firms: Vec<_> = net.firms().collect();
        firms.sort_by(|a, b| {
            let la = net.record(*a).bank_liabilities.unwrap();
            let lb = net.record(*b).bank_liabilities.unwrap();
            lb.partial_cmp(&la).unwrap()
        });
        let keep: BTreeSet<_> = net.banks().chain(firms.into_iter().take(2)).collect();
        let sub = subnetwork(&net, &keep).unwrap();

        // Brute force: entries with both endpoints kept, mapped by label.
        let expected: BTreeSet<(String, String, u64)> = entries
            .iter()
            .filter(|(i, j, _)| keep.contains(&NodeId(*i)) && keep.contains(&NodeId(*j)))
            .map(|&(i, j, a)| {
                (
                    net.record(NodeId(i)).name.clone(),
                    net.record(NodeId(j)).name.clone(),
                    a.to_bits(),
                )
            })
            .collect();
        let got: BTreeSet<_> = sub
            .entries()
            .map(|e| {
                (
                    sub.record(e.debtor).name.clone(),
                    sub.record(e.creditor).name.clone(),
                    e.amount.to_bits(),
                )
            })
            .collect();
        assert_eq!(got, expected);
        assert!(sub.records().iter().all(|r| r.name != "f_small"));
        assert_eq!(sub.bank_count(), 2);
    }
}
