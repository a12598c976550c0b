//! DebtRank: impact matrix, three-state distress cascade and the
//! firm-share / interbank-share ratios built on top of it.
//!
//! # Dynamics
//!
//! Every node carries a distress level `h ∈ [0, 1]` and a state in
//! {Undistressed, Distressed, Inactive}. At `t = 1` the seeds have `h = 1`
//! and are Distressed, everything else is at zero. Each later round is
//! synchronous:
//!
//! ```text
//! h_i(t) = min(1, h_i(t-1) + Σ_{j : s_j(t-1) = D} W_ji · h_j(t-1))
//! s_i(t) = I            if s_i(t-1) = D
//!          D            if h_i(t) > 0 and s_i(t-1) = U
//!          s_i(t-1)     otherwise
//! ```
//!
//! so a node is Distressed for exactly one round, transmits once and then
//! goes Inactive. The cascade stops at the first round `T` with no
//! Distressed node, which bounds `T ≤ n + 1`.
//!
//! The DebtRank of a seed set `S` is `Σ_i h_i(T) v_i`, optionally reduced by
//! the initial shock `Σ_{d ∈ S} h_d(1) v_d`.

use serde::Serialize;
use thiserror::Error;

use crate::network::{EconomicValueVector, LiabilityNetwork, NodeId, NodeKind};

#[derive(Debug, Error, PartialEq)]
pub enum DebtRankError {
    #[error("capital vector has {got} entries, network has {expected} nodes")]
    MissingCapital { expected: usize, got: usize },
    #[error("capital of node {0} is not a number")]
    InvalidCapital(usize),
    #[error("seed {seed} outside 0..{n}")]
    InvalidSeed { seed: usize, n: usize },
    #[error("seed set is empty")]
    EmptySeedSet,
    #[error("economic value vector has {got} entries, impact matrix has {expected} nodes")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("results cover {got} nodes, expected {expected}")]
    IncompleteResults { expected: usize, got: usize },
    #[error("total economic volume must be positive, got {0}")]
    InvalidVolume(f64),
    #[error("total systemic risk is zero")]
    ZeroTotalRisk,
}

/// Capped loss fractions `W_ij = min(L_ij / C_j, 1)` in compressed row form:
/// row `i` lists the creditors hit when `i` defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpactMatrix {
    row_offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
}

impl ImpactMatrix {
    pub fn node_count(&self) -> usize {
        self.row_offsets.len() - 1
    }

    pub fn entry_count(&self) -> usize {
        self.weights.len()
    }

    pub fn row(&self, i: NodeId) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        let range = self.row_offsets[i.0]..self.row_offsets[i.0 + 1];
        self.targets[range.clone()]
            .iter()
            .zip(&self.weights[range])
            .map(|(&j, &w)| (NodeId(j), w))
    }

    pub fn get(&self, i: NodeId, j: NodeId) -> Option<f64> {
        self.row(i).find(|(t, _)| *t == j).map(|(_, w)| w)
    }
}

pub fn impact_matrix(
    net: &LiabilityNetwork,
    capital: &[f64],
) -> Result<ImpactMatrix, DebtRankError> {
    let n = net.node_count();
    if capital.len() != n {
        return Err(DebtRankError::MissingCapital {
            expected: n,
            got: capital.len(),
        });
    }
    if let Some(k) = capital.iter().position(|c| c.is_nan()) {
        return Err(DebtRankError::InvalidCapital(k));
    }
    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut targets = Vec::with_capacity(net.entry_count());
    let mut weights = Vec::with_capacity(net.entry_count());
    row_offsets.push(0);
    for i in 0..n {
        for (j, amount) in net.row(NodeId(i)) {
            let c = capital[j.0];
            // Non-positive capital: any positive exposure wipes the creditor out.
            let w = if c <= 0.0 { 1.0 } else { (amount / c).min(1.0) };
            if w > 0.0 {
                targets.push(j.0);
                weights.push(w);
            }
        }
        row_offsets.push(targets.len());
    }
    Ok(ImpactMatrix {
        row_offsets,
        targets,
        weights,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum DistressState {
    Undistressed,
    Distressed,
    Inactive,
}

/// Whether a set DebtRank subtracts the initial shock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum SetMode {
    #[default]
    ExcludeInitial,
    IncludeInitial,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DebtRankResult {
    pub seeds: Vec<NodeId>,
    pub value: f64,
    /// `h(T)` for every node. Left out by [`debtrank_all`] to keep memory
    /// linear in the node count.
    pub final_h: Option<Vec<f64>>,
    pub steps: usize,
}

impl DebtRankResult {
    /// The seed of a single-node run.
    pub fn seed(&self) -> NodeId {
        self.seeds[0]
    }
}

/// Reusable buffers for one cascade. Each worker owns one.
pub struct Cascade<'a> {
    impact: &'a ImpactMatrix,
    h: Vec<f64>,
    delta: Vec<f64>,
    state: Vec<DistressState>,
    frontier: Vec<usize>,
    next: Vec<usize>,
    touched: Vec<usize>,
}

impl<'a> Cascade<'a> {
    pub fn new(impact: &'a ImpactMatrix) -> Self {
        let n = impact.node_count();
        Cascade {
            impact,
            h: vec![0.0; n],
            delta: vec![0.0; n],
            state: vec![DistressState::Undistressed; n],
            frontier: Vec::new(),
            next: Vec::new(),
            touched: Vec::new(),
        }
    }

    fn reset(&mut self) {
        for &k in &self.touched {
            self.h[k] = 0.0;
            self.state[k] = DistressState::Undistressed;
        }
        self.touched.clear();
        self.frontier.clear();
    }

    /// Runs the cascade from `seeds` (sorted, deduplicated, in range) and
    /// returns the step count `T`. Distress levels are left in `self.h`.
    fn run(&mut self, seeds: &[usize], mut on_step: impl FnMut(&[f64], &[DistressState])) -> usize {
        self.reset();
        for &d in seeds {
            self.h[d] = 1.0;
            self.state[d] = DistressState::Distressed;
            self.touched.push(d);
            self.frontier.push(d);
        }
        let mut t = 1;
        on_step(&self.h, &self.state);
        while !self.frontier.is_empty() {
            t += 1;
            // Increments use h(t-1) of the transmitting nodes only.
            let mut receivers = Vec::new();
            for &j in &self.frontier {
                let hj = self.h[j];
                for (i, w) in self.impact.row(NodeId(j)) {
                    if self.delta[i.0] == 0.0 {
                        receivers.push(i.0);
                    }
                    self.delta[i.0] += w * hj;
                }
            }
            for &j in &self.frontier {
                self.state[j] = DistressState::Inactive;
            }
            receivers.sort_unstable();
            receivers.dedup();
            self.next.clear();
            for &i in &receivers {
                let inc = std::mem::take(&mut self.delta[i]);
                let after = (self.h[i] + inc).min(1.0);
                self.h[i] = after;
                if self.state[i] == DistressState::Undistressed && after > 0.0 {
                    self.touched.push(i);
                    self.state[i] = DistressState::Distressed;
                    self.next.push(i);
                }
            }
            std::mem::swap(&mut self.frontier, &mut self.next);
            on_step(&self.h, &self.state);
        }
        let n = self.impact.node_count();
        assert!(t <= n + 1, "cascade ran {t} steps on {n} nodes");
        t
    }

    /// `Σ h_i v_i` over touched nodes outside `seeds` (sorted).
    fn weighted_distress(&self, v: &[f64], seeds: &[usize]) -> f64 {
        // Summing in index order keeps the value independent of visit order.
        let mut idx = self.touched.clone();
        idx.sort_unstable();
        idx.iter()
            .filter(|k| seeds.binary_search(k).is_err())
            .map(|&k| self.h[k] * v[k])
            .sum()
    }
}

fn check_dims(impact: &ImpactMatrix, v: &EconomicValueVector) -> Result<(), DebtRankError> {
    if v.len() != impact.node_count() {
        return Err(DebtRankError::DimensionMismatch {
            expected: impact.node_count(),
            got: v.len(),
        });
    }
    Ok(())
}

fn normalize_seeds(seeds: &[NodeId], n: usize) -> Result<Vec<usize>, DebtRankError> {
    if seeds.is_empty() {
        return Err(DebtRankError::EmptySeedSet);
    }
    let mut s: Vec<usize> = seeds.iter().map(|d| d.0).collect();
    if let Some(&bad) = s.iter().find(|&&d| d >= n) {
        return Err(DebtRankError::InvalidSeed { seed: bad, n });
    }
    s.sort_unstable();
    s.dedup();
    Ok(s)
}

fn run_set(
    cascade: &mut Cascade<'_>,
    v: &[f64],
    seeds: Vec<usize>,
    mode: SetMode,
    keep_h: bool,
) -> DebtRankResult {
    let steps = cascade.run(&seeds, |_, _| {});
    // Seeds stay at h = 1, so only the other nodes add to the excluded form.
    let others = cascade.weighted_distress(v, &seeds);
    let initial: f64 = seeds.iter().map(|&d| v[d]).sum();
    let value = match mode {
        SetMode::ExcludeInitial => others.min(1.0 - initial).max(0.0),
        SetMode::IncludeInitial => (others + initial).min(1.0),
    };
    DebtRankResult {
        seeds: seeds.into_iter().map(NodeId).collect(),
        value,
        final_h: keep_h.then(|| cascade.h.clone()),
        steps,
    }
}

/// DebtRank of a single defaulting node, net of its own initial distress.
pub fn debtrank_single(
    impact: &ImpactMatrix,
    v: &EconomicValueVector,
    seed: NodeId,
) -> Result<DebtRankResult, DebtRankError> {
    debtrank_set(impact, v, &[seed], SetMode::ExcludeInitial)
}

/// Combined DebtRank of nodes defaulting together.
pub fn debtrank_set(
    impact: &ImpactMatrix,
    v: &EconomicValueVector,
    seeds: &[NodeId],
    mode: SetMode,
) -> Result<DebtRankResult, DebtRankError> {
    check_dims(impact, v)?;
    let seeds = normalize_seeds(seeds, impact.node_count())?;
    let mut cascade = Cascade::new(impact);
    Ok(run_set(&mut cascade, v.as_slice(), seeds, mode, true))
}

/// Distress levels and states after one round.
pub type TraceStep = (Vec<f64>, Vec<DistressState>);

/// Distress vector after every round, starting with `h(1)`.
pub fn debtrank_trace(
    impact: &ImpactMatrix,
    seeds: &[NodeId],
) -> Result<Vec<TraceStep>, DebtRankError> {
    let seeds = normalize_seeds(seeds, impact.node_count())?;
    let mut cascade = Cascade::new(impact);
    let mut trace = Vec::new();
    cascade.run(&seeds, |h, s| trace.push((h.to_vec(), s.to_vec())));
    Ok(trace)
}

/// Single-node DebtRank for every node, in node order.
pub fn debtrank_all(
    impact: &ImpactMatrix,
    v: &EconomicValueVector,
) -> Result<Vec<DebtRankResult>, DebtRankError> {
    check_dims(impact, v)?;
    let n = impact.node_count();
    let v = v.as_slice();

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        Ok((0..n)
            .into_par_iter()
            .map_init(
                || Cascade::new(impact),
                |cascade, d| run_set(cascade, v, vec![d], SetMode::ExcludeInitial, false),
            )
            .collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        let mut cascade = Cascade::new(impact);
        Ok((0..n)
            .map(|d| run_set(&mut cascade, v, vec![d], SetMode::ExcludeInitial, false))
            .collect())
    }
}

fn values_by_node(results: &[DebtRankResult], n: usize) -> Result<Vec<f64>, DebtRankError> {
    let mut values = vec![None; n];
    for r in results {
        let d = r.seed().0;
        if d >= n {
            return Err(DebtRankError::InvalidSeed { seed: d, n });
        }
        values[d] = Some(r.value);
    }
    let got = values.iter().filter(|x| x.is_some()).count();
    if got != n {
        return Err(DebtRankError::IncompleteResults { expected: n, got });
    }
    Ok(values.into_iter().map(Option::unwrap).collect())
}

/// Share of total single-node DebtRank carried by firms.
///
/// A network without firms has an empty numerator and yields 0 even when no
/// node carries any risk.
pub fn ratio_q1(results: &[DebtRankResult], kinds: &[NodeKind]) -> Result<f64, DebtRankError> {
    let values = values_by_node(results, kinds.len())?;
    let mut firms = 0.0;
    let mut total = 0.0;
    for (r, kind) in values.iter().zip(kinds) {
        if *kind == NodeKind::Firm {
            firms += r;
        }
        total += r;
    }
    if !kinds.contains(&NodeKind::Firm) {
        return Ok(0.0);
    }
    if total <= 0.0 {
        return Err(DebtRankError::ZeroTotalRisk);
    }
    Ok(firms / total)
}

/// Volume-weighted total risk of the interbank network relative to the
/// entire network: `V_B Σ R^B / (V_F Σ R^F)`.
pub fn ratio_q2(
    results_b: &[DebtRankResult],
    results_f: &[DebtRankResult],
    volume_b: f64,
    volume_f: f64,
) -> Result<f64, DebtRankError> {
    if !(volume_b >= 0.0) || !volume_b.is_finite() {
        return Err(DebtRankError::InvalidVolume(volume_b));
    }
    if !(volume_f > 0.0) || !volume_f.is_finite() {
        return Err(DebtRankError::InvalidVolume(volume_f));
    }
    let sum_b: f64 = results_b.iter().map(|r| r.value).sum();
    let sum_f: f64 = results_f.iter().map(|r| r.value).sum();
    if sum_f <= 0.0 {
        return Err(DebtRankError::ZeroTotalRisk);
    }
    Ok(volume_b * sum_b / (volume_f * sum_f))
}
