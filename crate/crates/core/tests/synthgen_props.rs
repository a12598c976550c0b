use liabnet::ingestion::{parse_bank_file, parse_firm_file, parse_interbank_files};
use liabnet::synthgen::{generate, SynthConfig};

#[test]
fn bank_degree_follows_config() {
    let cfg = SynthConfig {
        n_banks: 200,
        n_firms: 5000,
        seed: 31,
        ..SynthConfig::default()
    };
    let e = generate(&cfg).unwrap();
    let weights = &cfg.firm_bank_degree;
    let norm: f64 = weights.iter().sum();
    let mut observed = vec![0usize; weights.len()];
    for f in &e.firms {
        observed[f.bank_labels.len() - 1] += 1;
    }
    let chi2: f64 = observed
        .iter()
        .zip(weights)
        .map(|(&o, &w)| {
            let exp = cfg.n_firms as f64 * w / norm;
            (o as f64 - exp).powi(2) / exp
        })
        .sum();
    // 5 degrees of freedom, 0.1% critical value.
    assert!(chi2 < 20.52, "chi2 = {chi2}, observed {observed:?}");
}

#[test]
fn written_files_parse_back() {
    let cfg = SynthConfig {
        n_banks: 15,
        n_firms: 80,
        seed: 4,
        ..SynthConfig::default()
    };
    let e = generate(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    e.write_files(dir.path()).unwrap();
    let banks = parse_bank_file(&dir.path().join("banks.csv")).unwrap();
    let firms = parse_firm_file(&dir.path().join("firms.csv")).unwrap();
    let ib = parse_interbank_files(
        &dir.path().join("interbank.txt"),
        &dir.path().join("interbank.txt.assets"),
    )
    .unwrap();
    assert!(banks.rejects.is_empty() && firms.rejects.is_empty());
    assert_eq!(banks.rows, e.banks);
    assert_eq!(firms.rows, e.firms);
    assert_eq!(ib.size, e.interbank.size);
    assert_eq!(ib.entries.len(), e.interbank.entries.len());
    for (a, b) in ib.entries.iter().zip(&e.interbank.entries) {
        assert_eq!((a.0, a.1), (b.0, b.1));
        assert!((a.2 - b.2).abs() <= 1e-9 * b.2);
    }
}
