//! Reconstruction and systemic-risk analysis of bank–firm liability networks.
//!
//! The crate covers the whole chain from aggregate balance-sheet tables to
//! per-node systemic importance:
//!
//! * [`ingestion`] parses firm, bank and interbank tables, fills in missing
//!   firm bank-liability breakdowns from sector averages and joins the
//!   anonymized interbank data to the public bank list by asset rank.
//! * [`reconstruction`] spreads every firm's aggregated bank liabilities over
//!   its banks in proportion to bank size and assembles the block liability
//!   matrix (interbank, deposits, loans).
//! * [`debtrank`] runs the distress cascade and reports single-node and set
//!   DebtRank together with the firm-share and interbank-share ratios.
//! * [`netstats`] gives degree distributions and clustering coefficients.
//! * [`synthgen`] produces synthetic economies in the same file formats.
//! * [`pipeline`] strings everything together and writes a report bundle.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod debtrank;
pub mod ingestion;
pub mod netstats;
pub mod network;
pub mod pipeline;
pub mod reconstruction;
pub mod synthgen;

pub use debtrank::{
    debtrank_all, debtrank_set, debtrank_single, impact_matrix, ratio_q1, ratio_q2, DebtRankError,
    DebtRankResult, ImpactMatrix, SetMode,
};
pub use network::{
    build_network, economic_value, subnetwork, Block, EconomicValueVector, Liability,
    LiabilityNetwork, NetworkError, NodeId, NodeKind, NodeRecord, ValueDirection,
};
