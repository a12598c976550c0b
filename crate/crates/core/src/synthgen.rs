//! Synthetic bank–firm economies.
//!
//! Balance sheets are heavy tailed (Pareto total assets), firms attach to a
//! small number of banks drawn preferentially by bank size, and the
//! interbank block follows a size-weighted random graph. The interbank data
//! is handed out the way real supervisory data arrives: indices shuffled and
//! asset figures linearly rescaled, so only the rank join recovers the
//! correspondence with the public bank table.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{LogNormal, Pareto};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingestion::{
    write_bank_table, write_firm_table, write_interbank_assets, write_triplets, BankStatement,
    FirmStatement, IngestError, InterbankMatrix, LiabilityProvenance,
};

/// First-level activity sections used as sector codes.
pub const SECTORS: [&str; 19] = [
    "A", "B", "C", "D", "E", "F", "G", "H", "I", "J", "K", "L", "M", "N", "O", "P", "Q", "R", "S",
];

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("config: {0}")]
    Parse(#[from] toml::de::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_banks: usize,
    pub n_firms: usize,
    pub seed: u64,
    /// Pareto shape of total assets (banks and firms).
    pub asset_tail_exponent: f64,
    pub min_bank_assets: f64,
    pub min_firm_assets: f64,
    /// Expected fraction of ordered bank pairs with an interbank liability.
    pub interbank_density: f64,
    /// Interbank borrowing as a fraction of a bank's total assets.
    pub interbank_liability_share: (f64, f64),
    /// Relative frequency of firms with 1, 2, 3, … banks.
    pub firm_bank_degree: Vec<f64>,
    pub bank_equity_ratio: (f64, f64),
    pub firm_equity_ratio: (f64, f64),
    /// Share of total liabilities owed to banks, drawn per sector.
    pub bank_liability_ratio: (f64, f64),
    /// Fraction of firms filed without a bank-liability breakdown.
    pub missing_breakdown_fraction: f64,
    /// Deposits as a fraction of total assets. `None` leaves the column out.
    pub deposit_ratio: Option<(f64, f64)>,
    /// Multiplier applied to the anonymized interbank asset side data.
    pub anonymization_scale: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_banks: 796,
            n_firms: 5_000,
            seed: 2008,
            asset_tail_exponent: 1.2,
            min_bank_assets: 5.0e7,
            min_firm_assets: 1.0e6,
            interbank_density: 0.02,
            interbank_liability_share: (0.05, 0.2),
            firm_bank_degree: vec![0.50, 0.25, 0.12, 0.06, 0.04, 0.03],
            bank_equity_ratio: (0.05, 0.12),
            firm_equity_ratio: (0.15, 0.45),
            bank_liability_ratio: (0.2, 0.6),
            missing_breakdown_fraction: 0.3,
            deposit_ratio: Some((0.01, 0.08)),
            anonymization_scale: 0.731,
        }
    }
}

fn check_range(name: &str, (lo, hi): (f64, f64), max: f64) -> Result<(), SynthError> {
    if !(lo >= 0.0 && lo <= hi && hi <= max) {
        return Err(SynthError::InvalidConfig(format!(
            "{name} range ({lo}, {hi})"
        )));
    }
    Ok(())
}

impl SynthConfig {
    pub fn from_toml(text: &str) -> Result<Self, SynthError> {
        let cfg: SynthConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, SynthError> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidConfig(m));
        if self.n_banks == 0 {
            return bad("n_banks must be positive".into());
        }
        if self.n_firms == 0 {
            return bad("n_firms must be positive".into());
        }
        if !(self.asset_tail_exponent > 1.0) {
            return bad(format!(
                "asset_tail_exponent {} must exceed 1",
                self.asset_tail_exponent
            ));
        }
        if !(self.interbank_density > 0.0 && self.interbank_density <= 1.0) {
            return bad(format!(
                "interbank_density {} outside (0, 1]",
                self.interbank_density
            ));
        }
        if !(self.min_bank_assets > 0.0 && self.min_firm_assets > 0.0) {
            return bad("minimum assets must be positive".into());
        }
        if self.firm_bank_degree.is_empty()
            || self.firm_bank_degree.iter().any(|w| !(*w >= 0.0))
            || !(self.firm_bank_degree.iter().sum::<f64>() > 0.0)
        {
            return bad("firm_bank_degree needs non-negative weights with positive sum".into());
        }
        check_range("bank_equity_ratio", self.bank_equity_ratio, 1.0)?;
        check_range("firm_equity_ratio", self.firm_equity_ratio, 1.0)?;
        check_range("bank_liability_ratio", self.bank_liability_ratio, 1.0)?;
        check_range(
            "interbank_liability_share",
            self.interbank_liability_share,
            1.0,
        )?;
        if let Some(r) = self.deposit_ratio {
            check_range("deposit_ratio", r, 1.0)?;
        }
        if !(0.0..=1.0).contains(&self.missing_breakdown_fraction) {
            return bad("missing_breakdown_fraction outside [0, 1]".into());
        }
        if !(self.anonymization_scale > 0.0) {
            return bad("anonymization_scale must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticEconomy {
    pub banks: Vec<BankStatement>,
    pub firms: Vec<FirmStatement>,
    pub interbank: InterbankMatrix,
    /// Public bank index behind each anonymized interbank index.
    pub anon_to_public: Vec<usize>,
}

impl SyntheticEconomy {
    /// (firm label, bank label) pairs.
    pub fn relations(&self) -> Vec<(String, String)> {
        self.firms
            .iter()
            .flat_map(|f| {
                f.bank_labels
                    .iter()
                    .map(move |b| (f.firm_label.clone(), b.clone()))
            })
            .collect()
    }

    pub fn has_deposits(&self) -> bool {
        self.firms.iter().any(|f| f.bank_deposits.is_some())
    }

    /// Writes `banks.csv`, `firms.csv`, `interbank.txt` and
    /// `interbank.txt.assets` into `dir`.
    pub fn write_files(&self, dir: &Path) -> Result<(), SynthError> {
        fs::create_dir_all(dir)?;
        write_bank_table(
            BufWriter::new(fs::File::create(dir.join("banks.csv"))?),
            &self.banks,
        )?;
        write_firm_table(
            BufWriter::new(fs::File::create(dir.join("firms.csv"))?),
            &self.firms,
            self.has_deposits(),
        )?;
        write_triplets(
            BufWriter::new(fs::File::create(dir.join("interbank.txt"))?),
            self.interbank.size,
            self.interbank.entries.iter().copied(),
        )?;
        write_interbank_assets(
            BufWriter::new(fs::File::create(dir.join("interbank.txt.assets"))?),
            &self.interbank.total_assets,
        )?;
        Ok(())
    }
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Round to whole cents so written files reparse to identical values.
fn cents(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

pub fn generate(config: &SynthConfig) -> Result<SyntheticEconomy, SynthError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let nb = config.n_banks;

    let bank_pareto = Pareto::new(config.min_bank_assets, config.asset_tail_exponent)
        .map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
    let firm_pareto = Pareto::new(config.min_firm_assets, config.asset_tail_exponent)
        .map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
    let noise = LogNormal::new(0.0, 0.5).expect("valid lognormal");

    // Banks, public side.
    let mut banks: Vec<BankStatement> = (0..nb)
        .map(|k| {
            let assets = cents(bank_pareto.sample(&mut rng));
            BankStatement {
                bank_label: format!("BANK{k:04}"),
                total_assets: assets,
                equity: cents(assets * uniform(&mut rng, config.bank_equity_ratio)),
                liabilities_to_banks: 0.0,
                assets_due_from_banks: 0.0,
            }
        })
        .collect();

    // Interbank links on public indices: Chung–Lu style with weights ∝ √assets.
    let weight: Vec<f64> = banks.iter().map(|b| b.total_assets.sqrt()).collect();
    let mean_w = weight.iter().sum::<f64>() / nb as f64;
    let mut public_entries = Vec::new();
    for i in 0..nb {
        let row_start = public_entries.len();
        for j in 0..nb {
            if i == j {
                continue;
            }
            let p = (config.interbank_density * weight[i] * weight[j] / (mean_w * mean_w)).min(1.0);
            if rng.random::<f64>() < p {
                public_entries.push((i, j, weight[j] * noise.sample(&mut rng)));
            }
        }
        let row = &mut public_entries[row_start..];
        let budget = banks[i].total_assets * uniform(&mut rng, config.interbank_liability_share);
        let mass: f64 = row.iter().map(|e| e.2).sum();
        for e in row {
            e.2 = cents(budget * e.2 / mass).max(0.01);
        }
    }
    for &(i, j, a) in &public_entries {
        banks[i].liabilities_to_banks += a;
        banks[j].assets_due_from_banks += a;
    }
    for b in &mut banks {
        b.liabilities_to_banks = cents(b.liabilities_to_banks);
        b.assets_due_from_banks = cents(b.assets_due_from_banks);
    }

    // Anonymize: shuffle indices, rescale assets.
    let mut anon_to_public: Vec<usize> = (0..nb).collect();
    anon_to_public.shuffle(&mut rng);
    let mut public_to_anon = vec![0; nb];
    for (a, &p) in anon_to_public.iter().enumerate() {
        public_to_anon[p] = a;
    }
    let mut entries: Vec<(usize, usize, f64)> = public_entries
        .iter()
        .map(|&(i, j, a)| {
            (
                public_to_anon[i],
                public_to_anon[j],
                a * config.anonymization_scale,
            )
        })
        .collect();
    entries.sort_by_key(|e| (e.0, e.1));
    let total_assets: Vec<f64> = anon_to_public
        .iter()
        .map(|&p| banks[p].total_assets * config.anonymization_scale)
        .collect();

    // Firms.
    let sector_ratio: Vec<f64> = SECTORS
        .iter()
        .map(|_| uniform(&mut rng, config.bank_liability_ratio))
        .collect();
    let degree_dist = WeightedIndex::new(&config.firm_bank_degree)
        .map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
    let bank_pick = WeightedIndex::new(banks.iter().map(|b| b.total_assets))
        .map_err(|e| SynthError::InvalidConfig(e.to_string()))?;

    let mut firms = Vec::with_capacity(config.n_firms);
    for k in 0..config.n_firms {
        let assets = cents(firm_pareto.sample(&mut rng));
        let equity = cents(assets * uniform(&mut rng, config.firm_equity_ratio));
        let total_liabilities = cents(assets - equity);
        let s = rng.random_range(0..SECTORS.len());
        let ratio = (sector_ratio[s] * rng.random_range(0.8..1.2)).min(1.0);
        let bank_liabilities = cents(total_liabilities * ratio);
        let degree = (degree_dist.sample(&mut rng) + 1).min(nb);
        let mut chosen: Vec<usize> = Vec::with_capacity(degree);
        while chosen.len() < degree {
            let b = bank_pick.sample(&mut rng);
            if !chosen.contains(&b) {
                chosen.push(b);
            }
        }
        let missing = rng.random::<f64>() < config.missing_breakdown_fraction;
        let deposits = config
            .deposit_ratio
            .map(|r| cents(assets * uniform(&mut rng, r)));
        firms.push(FirmStatement {
            firm_label: format!("FIRM{k:06}"),
            total_assets: assets,
            equity,
            total_liabilities: Some(total_liabilities),
            bank_liabilities: (!missing).then_some(bank_liabilities),
            bank_deposits: deposits,
            sector_code: SECTORS[s].to_string(),
            bank_labels: chosen
                .iter()
                .map(|&b| banks[b].bank_label.clone())
                .collect(),
            provenance: if missing {
                LiabilityProvenance::Missing
            } else {
                LiabilityProvenance::Exact
            },
        });
    }

    Ok(SyntheticEconomy {
        banks,
        firms,
        interbank: InterbankMatrix {
            size: nb,
            entries,
            total_assets,
        },
        anon_to_public,
    })
}
