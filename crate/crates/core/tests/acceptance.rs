//! One line per acceptance criterion; exits non-zero if any fails.

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::time::{Duration, Instant};

use common::{naive_cascade, random_fixture, Fixture};
use liabnet::debtrank::debtrank_trace;
use liabnet::ingestion::{estimate_bank_liabilities, match_banks_by_rank, RatioMethod};
use liabnet::netstats::{edge_density, UndirectedGraph};
use liabnet::pipeline::{run_pipeline, InputSource, RunManifest};
use liabnet::reconstruction::{
    assemble_liability_matrix, partition_firm_liabilities, DepositWeighting, RelationshipGraph,
};
use liabnet::synthgen::{generate, SynthConfig};
use liabnet::{
    build_network, debtrank_all, debtrank_set, debtrank_single, economic_value, impact_matrix,
    ratio_q1, ratio_q2, subnetwork, LiabilityNetwork, NodeId, NodeRecord, SetMode, ValueDirection,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, name: &str, ok: bool, detail: String) {
        if !ok {
            self.failed += 1;
        }
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

fn oracle_fixtures() -> Vec<Fixture> {
    let mut rng = ChaCha8Rng::seed_from_u64(20_080);
    (0..200).map(|_| random_fixture(&mut rng, 8)).collect()
}

fn oracle_equivalence(fixtures: &[Fixture]) -> (bool, String) {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut checks = 0usize;
    for fx in fixtures {
        let net = fx.network();
        let w = impact_matrix(&net, &net.capital()).unwrap();
        let v = economic_value(&net, ValueDirection::AsWritten).unwrap();
        let n = fx.n();
        for d in 0..n {
            let got = debtrank_single(&w, &v, NodeId(d)).unwrap().value;
            worst = worst.max((got - naive_cascade(fx, &[d]).value_excluding).abs());
            checks += 1;
            for e in d + 1..n {
                let want = naive_cascade(fx, &[d, e]);
                let seeds = [NodeId(d), NodeId(e)];
                let ex = debtrank_set(&w, &v, &seeds, SetMode::ExcludeInitial)
                    .unwrap()
                    .value;
                let inc = debtrank_set(&w, &v, &seeds, SetMode::IncludeInitial)
                    .unwrap()
                    .value;
                worst = worst.max((ex - want.value_excluding).abs());
                worst = worst.max((inc - want.value_including).abs());
                checks += 2;
            }
        }
    }
    let elapsed = start.elapsed();
    (
        worst <= 1e-12 && elapsed < Duration::from_secs(10),
        format!(
            "{} networks, {checks} comparisons, max |diff| {worst:.2e}, {:.2?}",
            fixtures.len(),
            elapsed
        ),
    )
}

fn conservation(fixtures: &[Fixture]) -> (bool, String) {
    let mut worst_v: f64 = 0.0;
    for fx in fixtures {
        for dir in [ValueDirection::AsWritten, ValueDirection::Transposed] {
            let v = economic_value(&fx.network(), dir).unwrap();
            worst_v = worst_v.max((v.as_slice().iter().sum::<f64>() - 1.0).abs());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_r: f64 = 0.0;
    for case in 0..1000 {
        let k = rng.random_range(1..=25);
        let lc = 10f64.powf(rng.random_range(-2.0..12.0));
        let banks: Vec<(NodeId, f64)> = (0..k)
            .map(|b| {
                let a = if case % 50 == 0 {
                    0.0
                } else {
                    10f64.powf(rng.random_range(6.0..11.5))
                };
                (NodeId(b), a)
            })
            .collect();
        let p = partition_firm_liabilities(lc, &banks).unwrap();
        let sum: f64 = p.amounts.iter().map(|x| x.1).sum();
        worst_r = worst_r.max((sum - lc).abs() / lc);
    }
    // Firm-level residuals on an assembled synthetic economy.
    let e = generate(&SynthConfig {
        n_banks: 60,
        n_firms: 2000,
        seed: 3,
        ..SynthConfig::default()
    })
    .unwrap();
    let firms = estimate_bank_liabilities(&e.firms, RatioMethod::MeanOfRatios);
    let m = match_banks_by_rank(&e.banks, &e.interbank).unwrap();
    let rel = RelationshipGraph::from_firms(&firms, &m).unwrap();
    let (_, rep) = assemble_liability_matrix(
        &e.interbank,
        &rel,
        &firms,
        &e.banks,
        &m,
        DepositWeighting::Off,
    )
    .unwrap();
    (
        worst_v <= 1e-12 && worst_r <= 1e-9 && rep.max_relative_residual <= 1e-9,
        format!(
            "max |sum v - 1| {worst_v:.2e}; 1000 partitions max relative residual {worst_r:.2e}; assembled economy {:.2e}",
            rep.max_relative_residual
        ),
    )
}

fn bounds_on(net: &LiabilityNetwork, seeds: impl Iterator<Item = usize>) -> Result<(), String> {
    let n = net.node_count();
    let w = impact_matrix(net, &net.capital()).unwrap();
    let v = economic_value(net, ValueDirection::AsWritten).unwrap();
    for r in debtrank_all(&w, &v).unwrap() {
        let vs = v.get(r.seed());
        if r.steps > n + 1 || r.value < 0.0 || r.value > 1.0 - vs {
            return Err(format!(
                "seed {} R={} T={} v={vs}",
                r.seed().0,
                r.value,
                r.steps
            ));
        }
    }
    for d in seeds {
        for (h, _) in debtrank_trace(&w, &[NodeId(d)]).unwrap() {
            if h.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(format!("h out of range for seed {d}"));
            }
        }
    }
    Ok(())
}

fn termination_and_bounds(fixtures: &[Fixture], large: &LiabilityNetwork) -> (bool, String) {
    for fx in fixtures {
        if let Err(e) = bounds_on(&fx.network(), 0..fx.n()) {
            return (false, e);
        }
    }
    match bounds_on(large, (0..large.node_count()).step_by(97)) {
        Ok(()) => (
            true,
            format!(
                "{} small networks and one {}-node network",
                fixtures.len(),
                large.node_count()
            ),
        ),
        Err(e) => (false, e),
    }
}

fn homogeneity() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let fx = random_fixture(&mut rng, 12);
        let run = |fx: &Fixture| {
            let net = fx.network();
            let w = impact_matrix(&net, &net.capital()).unwrap();
            let v = economic_value(&net, ValueDirection::AsWritten).unwrap();
            debtrank_all(&w, &v).unwrap()
        };
        for (a, b) in run(&fx).iter().zip(run(&fx.scaled(1e3)).iter()) {
            worst = worst.max((a.value - b.value).abs());
        }
    }
    (
        worst <= 1e-12,
        format!("10 fixtures scaled by 1e3, max |diff| {worst:.2e}"),
    )
}

fn hand_examples() -> (bool, String) {
    let bank = |k: usize, c: f64| NodeRecord::bank(format!("n{k}"), 1.0, c);
    let two = build_network(vec![bank(0, 1.0), bank(1, 200.0)], [(0, 1, 100.0)]).unwrap();
    let w = impact_matrix(&two, &two.capital()).unwrap();
    let v = economic_value(&two, ValueDirection::AsWritten).unwrap();
    let r2 = debtrank_single(&w, &v, NodeId(0)).unwrap().value;

    let chain = build_network(
        vec![bank(0, 1.0), bank(1, 1.0), bank(2, 1.0)],
        [(0, 1, 5.0), (1, 2, 5.0)],
    )
    .unwrap();
    let w = impact_matrix(&chain, &chain.capital()).unwrap();
    let v = economic_value(&chain, ValueDirection::AsWritten).unwrap();
    let rc = debtrank_single(&w, &v, NodeId(0)).unwrap().value;

    let p = partition_firm_liabilities(100.0, &[(NodeId(0), 300.0), (NodeId(1), 100.0)]).unwrap();
    let split: Vec<f64> = p.amounts.iter().map(|x| x.1).collect();
    (
        r2 == 0.5 && rc == 1.0 && split == [75.0, 25.0],
        format!("two-node R={r2}, chain R={rc}, partition {split:?}"),
    )
}

fn clustering() -> (bool, String) {
    let tri = UndirectedGraph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).mean_local_clustering();
    let path = UndirectedGraph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).mean_local_clustering();

    // Spread of the mean-local coefficient across independent G(n, p) draws.
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let mut er_ok = true;
    let mut er_detail = Vec::new();
    for p in [0.02, 0.05, 0.1] {
        let calib: Vec<f64> = (0..200)
            .map(|_| UndirectedGraph::gnp(500, p, &mut rng).mean_local_clustering())
            .collect();
        let mean = calib.iter().sum::<f64>() / calib.len() as f64;
        let sd = (calib.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (calib.len() - 1) as f64)
            .sqrt();
        let mut worst_z: f64 = 0.0;
        for _ in 0..20 {
            let g = UndirectedGraph::gnp(500, p, &mut rng);
            let z = (g.mean_local_clustering() - g.density()).abs() / sd;
            worst_z = worst_z.max(z);
        }
        er_ok &= worst_z <= 3.0;
        er_detail.push(format!("p={p} max z {worst_z:.2}"));
    }

    let baseline = edge_density(796, 12_783);
    let paper_gap = (baseline - 0.043).abs() / 0.043;
    (
        tri == 1.0 && path == 0.0 && er_ok && (baseline - 0.0404).abs() <= 1e-4 && paper_gap <= 0.15,
        format!(
            "triangle {tri}, path {path}, ER 500 nodes [{}], 796/12783 baseline {baseline:.5} ({:.1}% from 0.043)",
            er_detail.join(", "),
            paper_gap * 100.0
        ),
    )
}

fn performance() -> (bool, String, LiabilityNetwork) {
    let cfg = SynthConfig {
        n_banks: 796,
        n_firms: 52_000,
        seed: 2008,
        ..SynthConfig::default()
    };
    let econ = generate(&cfg).unwrap();
    let start = Instant::now();
    let firms = estimate_bank_liabilities(&econ.firms, RatioMethod::MeanOfRatios);
    let m = match_banks_by_rank(&econ.banks, &econ.interbank).unwrap();
    let rel = RelationshipGraph::from_firms(&firms, &m).unwrap();
    let (full, _) = assemble_liability_matrix(
        &econ.interbank,
        &rel,
        &firms,
        &econ.banks,
        &m,
        DepositWeighting::Off,
    )
    .unwrap();
    let recon = start.elapsed();
    let keep = liabnet::pipeline::top_firm_selection(&full, 5000);
    let f = subnetwork(&full, &keep).unwrap();
    let t = Instant::now();
    let w = impact_matrix(&f, &f.capital()).unwrap();
    let v = economic_value(&f, ValueDirection::AsWritten).unwrap();
    let all = debtrank_all(&w, &v).unwrap();
    let dr = t.elapsed();
    let total = start.elapsed();
    let threads = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    (
        all.len() == 5796 && total < Duration::from_secs(300),
        format!(
            "{} nodes, {} entries; reconstruction {recon:.2?}, debtrank_all {dr:.2?}, total {total:.2?} on {threads} thread(s)",
            f.node_count(),
            f.entry_count()
        ),
        f,
    )
}

fn determinism() -> (bool, String) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SynthConfig {
        n_banks: 80,
        n_firms: 1500,
        seed: 99,
        ..SynthConfig::default()
    };
    let mut bundles = Vec::new();
    for tag in ["a", "b"] {
        let mut m = RunManifest::new(InputSource::Synthetic(cfg.clone()), dir.path().join(tag));
        m.top_firms = 600;
        let s = run_pipeline(&m).unwrap();
        let files: Vec<(String, Vec<u8>)> = s
            .files
            .iter()
            .map(|f| (f.clone(), fs::read(s.out_dir.join(f)).unwrap()))
            .collect();
        bundles.push(files);
    }
    (
        bundles[0] == bundles[1],
        format!("{} files compared byte for byte", bundles[0].len()),
    )
}

fn ratios(large: &LiabilityNetwork) -> (bool, String) {
    let banks: BTreeSet<NodeId> = large.banks().collect();
    let b = subnetwork(large, &banks).unwrap();
    let w = impact_matrix(&b, &b.capital()).unwrap();
    let v = economic_value(&b, ValueDirection::AsWritten).unwrap();
    let rb = debtrank_all(&w, &v).unwrap();
    let q1 = ratio_q1(&rb, &b.kinds()).unwrap();
    let vol = b.total_volume();
    let q2 = ratio_q2(&rb, &rb, vol, vol).unwrap();
    (
        q1 == 0.0 && (q2 - 1.0).abs() <= 1e-12,
        format!("bank-only Q1 = {q1}, B = F gives Q2 = {q2}"),
    )
}

fn main() {
    let mut report = Report { failed: 0 };
    let fixtures = oracle_fixtures();

    let (ok, d) = oracle_equivalence(&fixtures);
    report.line("oracle equivalence", ok, d);
    let (ok, d) = conservation(&fixtures);
    report.line("conservation", ok, d);
    let (perf_ok, perf_detail, large) = performance();
    let (ok, d) = termination_and_bounds(&fixtures, &large);
    report.line("termination and bounds", ok, d);
    let (ok, d) = homogeneity();
    report.line("homogeneity", ok, d);
    let (ok, d) = hand_examples();
    report.line("hand-derived examples", ok, d);
    let (ok, d) = clustering();
    report.line("clustering correctness", ok, d);
    report.line("paper-scale performance", perf_ok, perf_detail);
    let (ok, d) = determinism();
    report.line("pipeline determinism", ok, d);
    let (ok, d) = ratios(&large);
    report.line("definitional ratios", ok, d);

    if report.failed > 0 {
        println!("{} criteria failed", report.failed);
        std::process::exit(1);
    }
}
