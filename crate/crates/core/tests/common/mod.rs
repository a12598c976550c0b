#![allow(dead_code, clippy::needless_range_loop)]

use liabnet::{build_network, LiabilityNetwork, NodeRecord};
use proptest::prelude::*;

/// Dense test network: `l[i][j]` is what node `i` owes node `j`.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub banks: usize,
    pub l: Vec<Vec<f64>>,
    pub capital: Vec<f64>,
}

impl Fixture {
    pub fn n(&self) -> usize {
        self.l.len()
    }

    pub fn network(&self) -> LiabilityNetwork {
        let n = self.n();
        let records = (0..n)
            .map(|i| {
                if i < self.banks {
                    NodeRecord::bank(format!("b{i}"), 100.0, self.capital[i])
                } else {
                    let owed: f64 = self.l[i].iter().sum();
                    NodeRecord::firm(format!("f{i}"), 100.0, self.capital[i], owed, None)
                }
            })
            .collect();
        let mut entries = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if self.l[i][j] > 0.0 {
                    entries.push((i, j, self.l[i][j]));
                }
            }
        }
        build_network(records, entries).expect("valid fixture")
    }

    pub fn scaled(&self, k: f64) -> Fixture {
        Fixture {
            banks: self.banks,
            l: self
                .l
                .iter()
                .map(|r| r.iter().map(|x| x * k).collect())
                .collect(),
            capital: self.capital.iter().map(|x| x * k).collect(),
        }
    }
}

/// Straightforward dense simulation of the distress cascade.
pub struct NaiveOutcome {
    pub value_excluding: f64,
    pub value_including: f64,
    pub h: Vec<f64>,
    pub steps: usize,
}

pub fn naive_cascade(fx: &Fixture, seeds: &[usize]) -> NaiveOutcome {
    let n = fx.n();
    let mut w = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if fx.l[i][j] > 0.0 {
                w[i][j] = if fx.capital[j] <= 0.0 {
                    1.0
                } else {
                    (fx.l[i][j] / fx.capital[j]).min(1.0)
                };
            }
        }
    }
    let total: f64 = fx.l.iter().flatten().sum();
    let v: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| fx.l[j][i]).sum::<f64>() / total)
        .collect();

    // 0 = undistressed, 1 = distressed, 2 = inactive
    let mut h = vec![0.0; n];
    let mut s = vec![0u8; n];
    for &d in seeds {
        h[d] = 1.0;
        s[d] = 1;
    }
    let mut steps = 1;
    while s.contains(&1) {
        let mut nh = h.clone();
        for i in 0..n {
            let mut add = 0.0;
            for j in 0..n {
                if s[j] == 1 {
                    add += w[j][i] * h[j];
                }
            }
            nh[i] = (h[i] + add).min(1.0);
        }
        let ns: Vec<u8> = (0..n)
            .map(|i| match s[i] {
                1 | 2 => 2,
                _ if nh[i] > 0.0 => 1,
                _ => 0,
            })
            .collect();
        h = nh;
        s = ns;
        steps += 1;
    }
    let covered: f64 = (0..n).map(|i| h[i] * v[i]).sum();
    let initial: f64 = seeds.iter().map(|&d| v[d]).sum();
    NaiveOutcome {
        value_excluding: covered - initial,
        value_including: covered,
        h,
        steps,
    }
}

/// Random block-structured network with at least one liability.
pub fn arb_fixture(max_nodes: usize) -> impl Strategy<Value = Fixture> {
    (2..=max_nodes)
        .prop_flat_map(|n| (Just(n), 1..=n))
        .prop_flat_map(|(n, b)| {
            let cells =
                prop::collection::vec(prop_oneof![3 => Just(0.0), 2 => 0.5f64..50.0], n * n);
            let capital =
                prop::collection::vec(prop_oneof![1 => -5.0f64..0.0, 6 => 0.5f64..80.0], n);
            (Just(n), Just(b), cells, capital)
        })
        .prop_map(|(n, b, cells, capital)| {
            let mut l = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in 0..n {
                    let cc = i >= b && j >= b;
                    if i != j && !cc {
                        l[i][j] = cells[i * n + j];
                    }
                }
            }
            if l.iter().flatten().all(|&x| x == 0.0) {
                // b >= 1 and n >= 2: a bank-to-node link is always allowed.
                l[1][0] = 1.0;
            }
            Fixture {
                banks: b,
                l,
                capital,
            }
        })
}

/// Same distribution as [`arb_fixture`], drawn from a seeded generator.
pub fn random_fixture<R: rand::Rng>(rng: &mut R, max_nodes: usize) -> Fixture {
    let n = rng.random_range(2..=max_nodes);
    let b = rng.random_range(1..=n);
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && !(i >= b && j >= b) && rng.random_bool(0.4) {
                l[i][j] = rng.random_range(0.5..50.0);
            }
        }
    }
    if l.iter().flatten().all(|&x| x == 0.0) {
        l[1][0] = 1.0;
    }
    let capital = (0..n)
        .map(|_| {
            if rng.random_bool(1.0 / 7.0) {
                rng.random_range(-5.0..0.0)
            } else {
                rng.random_range(0.5..80.0)
            }
        })
        .collect();
    Fixture {
        banks: b,
        l,
        capital,
    }
}
