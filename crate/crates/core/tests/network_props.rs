mod common;

use std::collections::BTreeSet;

use common::arb_fixture;
use liabnet::{economic_value, subnetwork, Block, NodeId, NodeKind, ValueDirection};
use proptest::prelude::*;

proptest! {
    #[test]
    fn economic_value_sums_to_one(fx in arb_fixture(12)) {
        let net = fx.network();
        for dir in [ValueDirection::AsWritten, ValueDirection::Transposed] {
            let v = economic_value(&net, dir).unwrap();
            prop_assert!((v.as_slice().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(v.as_slice().iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn no_firm_to_firm_entries(fx in arb_fixture(12)) {
        let net = fx.network();
        for e in net.entries() {
            prop_assert_ne!(net.block(e.debtor, e.creditor), Block::CC);
            prop_assert!(e.amount > 0.0);
        }
    }

    #[test]
    fn full_subnetwork_is_identity(fx in arb_fixture(10)) {
        let net = fx.network();
        let all: BTreeSet<NodeId> = (0..net.node_count()).map(NodeId).collect();
        let sub = subnetwork(&net, &all).unwrap();
        prop_assert_eq!(sub.entries().collect::<Vec<_>>(), net.entries().collect::<Vec<_>>());
        prop_assert_eq!(sub.records(), net.records());
    }

    #[test]
    fn subnetwork_keeps_induced_entries(fx in arb_fixture(10), mask in prop::collection::vec(any::<bool>(), 10)) {
        let net = fx.network();
        let keep: BTreeSet<NodeId> = (0..net.node_count()).filter(|&i| mask[i]).map(NodeId).collect();
        prop_assume!(!keep.is_empty());
        let sub = subnetwork(&net, &keep).unwrap();
        prop_assert_eq!(sub.node_count(), keep.len());
        let old: Vec<NodeId> = keep.iter().copied().collect();
        let induced = net.entries().filter(|e| keep.contains(&e.debtor) && keep.contains(&e.creditor)).count();
        prop_assert_eq!(sub.entry_count(), induced);
        for e in sub.entries() {
            prop_assert_eq!(net.amount(old[e.debtor.0], old[e.creditor.0]), Some(e.amount));
        }
        let banks = keep.iter().filter(|&&i| net.kind(i) == NodeKind::Bank).count();
        prop_assert_eq!(sub.bank_count(), banks);
    }
}
