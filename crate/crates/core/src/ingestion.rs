//! Balance-sheet tables, interbank triplets and the rank join between them.
//!
//! File formats:
//!
//! * firm table, comma separated with header
//!   `firm_label,total_assets,equity,total_liabilities,bank_liabilities,sector_code,bank_labels`
//!   and an optional trailing `bank_deposits` column. `bank_labels` is
//!   semicolon separated.
//! * bank table with header
//!   `bank_label,total_assets,equity,liabilities_to_banks,assets_due_from_banks`.
//! * interbank matrix: a first line `n <count>` then one `i j amount` line per
//!   entry; the side file has the same `n <count>` header followed by
//!   `i total_assets` lines.
//! * relations list with header `firm_label,bank_label`.
//!
//! An empty field or `-` reads as absent. Rows that fail validation are
//! collected as [`RowReject`]s with a reason code, never dropped silently.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FIRM_HEADER: [&str; 7] = [
    "firm_label",
    "total_assets",
    "equity",
    "total_liabilities",
    "bank_liabilities",
    "sector_code",
    "bank_labels",
];
pub const FIRM_DEPOSITS_COLUMN: &str = "bank_deposits";
pub const BANK_HEADER: [&str; 5] = [
    "bank_label",
    "total_assets",
    "equity",
    "liabilities_to_banks",
    "assets_due_from_banks",
];
pub const RELATIONS_HEADER: [&str; 2] = ["firm_label", "bank_label"];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{file}: expected header {expected:?}, found {found:?}")]
    SchemaMismatch {
        file: String,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("{file}:{line}: {message}")]
    Malformed {
        file: String,
        line: usize,
        message: String,
    },
    #[error("bank counts differ: {public} public, {anonymized} anonymized")]
    CountMismatch { public: usize, anonymized: usize },
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Where a firm's bank-liability figure came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LiabilityProvenance {
    /// Reported in the statement.
    Exact,
    /// Sector mean ratio applied to total liabilities.
    SectorEstimate,
    /// No exact firm in the sector; global mean ratio used.
    GlobalFallback,
    /// Missing or zero total liabilities; set to zero.
    NoLiabilities,
    /// Not yet filled in.
    Missing,
}

impl LiabilityProvenance {
    pub fn code(self) -> &'static str {
        match self {
            LiabilityProvenance::Exact => "exact",
            LiabilityProvenance::SectorEstimate => "sector_estimate",
            LiabilityProvenance::GlobalFallback => "global_fallback",
            LiabilityProvenance::NoLiabilities => "no_liabilities",
            LiabilityProvenance::Missing => "missing",
        }
    }

    pub fn is_estimated(self) -> bool {
        !matches!(
            self,
            LiabilityProvenance::Exact | LiabilityProvenance::Missing
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirmStatement {
    pub firm_label: String,
    pub total_assets: f64,
    pub equity: f64,
    pub total_liabilities: Option<f64>,
    pub bank_liabilities: Option<f64>,
    pub bank_deposits: Option<f64>,
    pub sector_code: String,
    pub bank_labels: Vec<String>,
    pub provenance: LiabilityProvenance,
}

impl FirmStatement {
    pub fn is_connected(&self) -> bool {
        !self.bank_labels.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankStatement {
    pub bank_label: String,
    pub total_assets: f64,
    pub equity: f64,
    pub liabilities_to_banks: f64,
    pub assets_due_from_banks: f64,
}

/// Anonymized interbank liabilities with per-index total assets on the same
/// (linearly transformed) scale.
#[derive(Debug, Clone, PartialEq)]
pub struct InterbankMatrix {
    pub size: usize,
    pub entries: Vec<(usize, usize, f64)>,
    pub total_assets: Vec<f64>,
}

/// Machine-readable reason a row was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RejectReason {
    FieldCount,
    EmptyLabel,
    BadNumber,
    NegativeAmount,
    BankLiabilitiesExceedTotal,
    DuplicateLabel,
}

impl RejectReason {
    pub fn code(self) -> &'static str {
        match self {
            RejectReason::FieldCount => "field_count",
            RejectReason::EmptyLabel => "empty_label",
            RejectReason::BadNumber => "bad_number",
            RejectReason::NegativeAmount => "negative_amount",
            RejectReason::BankLiabilitiesExceedTotal => "bank_liabilities_exceed_total",
            RejectReason::DuplicateLabel => "duplicate_label",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Accepted but noteworthy rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RowFlag {
    /// Firm lists no bank; excluded from the network downstream.
    Unconnected,
    NegativeEquity,
}

impl RowFlag {
    pub fn code(self) -> &'static str {
        match self {
            RowFlag::Unconnected => "unconnected",
            RowFlag::NegativeEquity => "negative_equity",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowReject {
    /// 1-based line number, header is line 1.
    pub line: usize,
    pub reason: RejectReason,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowNote {
    pub line: usize,
    pub label: String,
    pub flag: RowFlag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub rows: Vec<T>,
    pub rejects: Vec<RowReject>,
    pub flags: Vec<RowNote>,
}

fn open(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|e| IngestError::Io(path.display().to_string(), e))
}

fn is_absent(field: &str) -> bool {
    let f = field.trim();
    f.is_empty() || f == "-"
}

fn opt_amount(field: &str, name: &str) -> Result<Option<f64>, (RejectReason, String)> {
    if is_absent(field) {
        return Ok(None);
    }
    let x: f64 = field
        .trim()
        .parse()
        .map_err(|_| (RejectReason::BadNumber, format!("{name}: {field:?}")))?;
    if !x.is_finite() {
        return Err((RejectReason::BadNumber, format!("{name}: {field:?}")));
    }
    Ok(Some(x))
}

fn amount(field: &str, name: &str) -> Result<f64, (RejectReason, String)> {
    opt_amount(field, name)?.ok_or((RejectReason::BadNumber, format!("{name} is required")))
}

fn non_negative(x: f64, name: &str) -> Result<f64, (RejectReason, String)> {
    if x < 0.0 {
        Err((RejectReason::NegativeAmount, format!("{name} = {x}")))
    } else {
        Ok(x)
    }
}

fn check_header(
    file: &str,
    found: &csv::StringRecord,
    expected: &[&str],
) -> Result<(), IngestError> {
    let found_v: Vec<String> = found.iter().map(|s| s.trim().to_string()).collect();
    if found_v.len() != expected.len() || found_v.iter().zip(expected).any(|(a, b)| a != b) {
        return Err(IngestError::SchemaMismatch {
            file: file.to_string(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: found_v,
        });
    }
    Ok(())
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader)
}

pub fn parse_firm_table<R: Read>(reader: R) -> Result<Parsed<FirmStatement>, IngestError> {
    let mut rdr = csv_reader(reader);
    let header = rdr.headers()?.clone();
    let with_deposits = header.len() == FIRM_HEADER.len() + 1;
    if with_deposits {
        let mut expected = FIRM_HEADER.to_vec();
        expected.push(FIRM_DEPOSITS_COLUMN);
        check_header("firm table", &header, &expected)?;
    } else {
        check_header("firm table", &header, &FIRM_HEADER)?;
    }
    let width = header.len();

    let mut out = Parsed {
        rows: Vec::new(),
        rejects: Vec::new(),
        flags: Vec::new(),
    };
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec?;
        match firm_row(&rec, width, with_deposits) {
            Ok(firm) => {
                if let Some(prev) = seen.get(&firm.firm_label) {
                    out.rejects.push(RowReject {
                        line,
                        reason: RejectReason::DuplicateLabel,
                        detail: format!("{} first seen on line {prev}", firm.firm_label),
                    });
                    continue;
                }
                seen.insert(firm.firm_label.clone(), line);
                if !firm.is_connected() {
                    out.flags.push(RowNote {
                        line,
                        label: firm.firm_label.clone(),
                        flag: RowFlag::Unconnected,
                    });
                }
                if firm.equity < 0.0 {
                    out.flags.push(RowNote {
                        line,
                        label: firm.firm_label.clone(),
                        flag: RowFlag::NegativeEquity,
                    });
                }
                out.rows.push(firm);
            }
            Err((reason, detail)) => out.rejects.push(RowReject {
                line,
                reason,
                detail,
            }),
        }
    }
    Ok(out)
}

fn firm_row(
    rec: &csv::StringRecord,
    width: usize,
    with_deposits: bool,
) -> Result<FirmStatement, (RejectReason, String)> {
    if rec.len() != width {
        return Err((
            RejectReason::FieldCount,
            format!("{} fields, expected {width}", rec.len()),
        ));
    }
    let label = rec[0].trim();
    if is_absent(label) {
        return Err((RejectReason::EmptyLabel, String::new()));
    }
    let total_assets = non_negative(amount(&rec[1], "total_assets")?, "total_assets")?;
    let equity = amount(&rec[2], "equity")?;
    let total_liabilities = opt_amount(&rec[3], "total_liabilities")?
        .map(|x| non_negative(x, "total_liabilities"))
        .transpose()?;
    let bank_liabilities = opt_amount(&rec[4], "bank_liabilities")?
        .map(|x| non_negative(x, "bank_liabilities"))
        .transpose()?;
    if let (Some(total), Some(bank)) = (total_liabilities, bank_liabilities) {
        if bank > total {
            return Err((
                RejectReason::BankLiabilitiesExceedTotal,
                format!("bank_liabilities {bank} > total_liabilities {total}"),
            ));
        }
    }
    let sector_code = if is_absent(&rec[5]) {
        String::new()
    } else {
        rec[5].trim().to_string()
    };
    let mut bank_labels: Vec<String> = if is_absent(&rec[6]) {
        Vec::new()
    } else {
        rec[6]
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect()
    };
    bank_labels.dedup();
    let bank_deposits = if with_deposits {
        opt_amount(&rec[7], "bank_deposits")?
            .map(|x| non_negative(x, "bank_deposits"))
            .transpose()?
    } else {
        None
    };
    let provenance = if bank_liabilities.is_some() {
        LiabilityProvenance::Exact
    } else {
        LiabilityProvenance::Missing
    };
    Ok(FirmStatement {
        firm_label: label.to_string(),
        total_assets,
        equity,
        total_liabilities,
        bank_liabilities,
        bank_deposits,
        sector_code,
        bank_labels,
        provenance,
    })
}

pub fn parse_bank_table<R: Read>(reader: R) -> Result<Parsed<BankStatement>, IngestError> {
    let mut rdr = csv_reader(reader);
    let header = rdr.headers()?.clone();
    check_header("bank table", &header, &BANK_HEADER)?;
    let mut out = Parsed {
        rows: Vec::new(),
        rejects: Vec::new(),
        flags: Vec::new(),
    };
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec?;
        let row = (|| {
            if rec.len() != BANK_HEADER.len() {
                return Err((
                    RejectReason::FieldCount,
                    format!("{} fields, expected {}", rec.len(), BANK_HEADER.len()),
                ));
            }
            let label = rec[0].trim();
            if is_absent(label) {
                return Err((RejectReason::EmptyLabel, String::new()));
            }
            Ok(BankStatement {
                bank_label: label.to_string(),
                total_assets: non_negative(amount(&rec[1], "total_assets")?, "total_assets")?,
                equity: amount(&rec[2], "equity")?,
                liabilities_to_banks: non_negative(
                    opt_amount(&rec[3], "liabilities_to_banks")?.unwrap_or(0.0),
                    "liabilities_to_banks",
                )?,
                assets_due_from_banks: non_negative(
                    opt_amount(&rec[4], "assets_due_from_banks")?.unwrap_or(0.0),
                    "assets_due_from_banks",
                )?,
            })
        })();
        match row {
            Ok(bank) => {
                if let Some(prev) = seen.get(&bank.bank_label) {
                    out.rejects.push(RowReject {
                        line,
                        reason: RejectReason::DuplicateLabel,
                        detail: format!("{} first seen on line {prev}", bank.bank_label),
                    });
                    continue;
                }
                seen.insert(bank.bank_label.clone(), line);
                if bank.equity < 0.0 {
                    out.flags.push(RowNote {
                        line,
                        label: bank.bank_label.clone(),
                        flag: RowFlag::NegativeEquity,
                    });
                }
                out.rows.push(bank);
            }
            Err((reason, detail)) => out.rejects.push(RowReject {
                line,
                reason,
                detail,
            }),
        }
    }
    Ok(out)
}

/// Reads `firm_label,bank_label` pairs.
pub fn parse_relations<R: Read>(reader: R) -> Result<Parsed<(String, String)>, IngestError> {
    let mut rdr = csv_reader(reader);
    let header = rdr.headers()?.clone();
    check_header("relations", &header, &RELATIONS_HEADER)?;
    let mut out = Parsed {
        rows: Vec::new(),
        rejects: Vec::new(),
        flags: Vec::new(),
    };
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        if rec.len() != 2 {
            out.rejects.push(RowReject {
                line,
                reason: RejectReason::FieldCount,
                detail: format!("{} fields, expected 2", rec.len()),
            });
        } else if is_absent(&rec[0]) || is_absent(&rec[1]) {
            out.rejects.push(RowReject {
                line,
                reason: RejectReason::EmptyLabel,
                detail: String::new(),
            });
        } else {
            out.rows
                .push((rec[0].trim().to_string(), rec[1].trim().to_string()));
        }
    }
    Ok(out)
}

/// Replaces every firm's bank list by the pairs in `relations`. Pairs naming
/// an unknown firm are returned.
pub fn apply_relations(
    firms: &mut [FirmStatement],
    relations: &[(String, String)],
) -> Vec<(String, String)> {
    let index: HashMap<&str, usize> = firms
        .iter()
        .enumerate()
        .map(|(k, f)| (f.firm_label.as_str(), k))
        .collect();
    let mut lists: Vec<Vec<String>> = vec![Vec::new(); firms.len()];
    let mut unknown = Vec::new();
    for (firm, bank) in relations {
        match index.get(firm.as_str()) {
            Some(&k) => {
                if !lists[k].contains(bank) {
                    lists[k].push(bank.clone());
                }
            }
            None => unknown.push((firm.clone(), bank.clone())),
        }
    }
    for (f, list) in firms.iter_mut().zip(lists) {
        f.bank_labels = list;
    }
    unknown
}

fn size_header<B: BufRead>(
    lines: &mut std::iter::Enumerate<std::io::Lines<B>>,
    file: &str,
) -> Result<usize, IngestError> {
    for (k, line) in lines.by_ref() {
        let line = line.map_err(|e| IngestError::Io(file.to_string(), e))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut parts = t.split_whitespace();
        return match (
            parts.next(),
            parts.next().map(str::parse::<usize>),
            parts.next(),
        ) {
            (Some("n"), Some(Ok(n)), None) => Ok(n),
            _ => Err(IngestError::SchemaMismatch {
                file: file.to_string(),
                expected: vec!["n <count>".into()],
                found: vec![format!("line {}: {t}", k + 1)],
            }),
        };
    }
    Err(IngestError::SchemaMismatch {
        file: file.to_string(),
        expected: vec!["n <count>".into()],
        found: vec![],
    })
}

fn malformed(file: &str, line: usize, message: impl Into<String>) -> IngestError {
    IngestError::Malformed {
        file: file.to_string(),
        line,
        message: message.into(),
    }
}

/// Parses interbank triplets plus the side file of per-index total assets.
///
/// Zero amounts are accepted and dropped, self-loops and negative amounts are
/// errors.
pub fn parse_interbank<R: Read, S: Read>(
    triplets: R,
    side: S,
) -> Result<InterbankMatrix, IngestError> {
    const FILE: &str = "interbank matrix";
    const SIDE: &str = "interbank assets";
    let mut lines = BufReader::new(triplets).lines().enumerate();
    let size = size_header(&mut lines, FILE)?;
    let mut seen = BTreeMap::new();
    for (k, line) in lines {
        let line = line.map_err(|e| IngestError::Io(FILE.into(), e))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = t.split_whitespace().collect();
        if f.len() != 3 {
            return Err(malformed(FILE, k + 1, "expected `i j amount`"));
        }
        let i: usize = f[0]
            .parse()
            .map_err(|_| malformed(FILE, k + 1, "bad index"))?;
        let j: usize = f[1]
            .parse()
            .map_err(|_| malformed(FILE, k + 1, "bad index"))?;
        let a: f64 = f[2]
            .parse()
            .map_err(|_| malformed(FILE, k + 1, "bad amount"))?;
        if i >= size || j >= size {
            return Err(malformed(FILE, k + 1, format!("index outside 0..{size}")));
        }
        if i == j {
            return Err(malformed(FILE, k + 1, "self-loop"));
        }
        if !(a >= 0.0) || !a.is_finite() {
            return Err(malformed(
                FILE,
                k + 1,
                "amount must be finite and non-negative",
            ));
        }
        if seen.insert((i, j), a).is_some() {
            return Err(malformed(FILE, k + 1, "duplicate entry"));
        }
    }
    let entries = seen
        .into_iter()
        .filter(|&(_, a)| a > 0.0)
        .map(|((i, j), a)| (i, j, a))
        .collect();

    let mut lines = BufReader::new(side).lines().enumerate();
    let side_size = size_header(&mut lines, SIDE)?;
    if side_size != size {
        return Err(malformed(
            SIDE,
            1,
            format!("size {side_size} differs from matrix size {size}"),
        ));
    }
    let mut assets = vec![None; size];
    for (k, line) in lines {
        let line = line.map_err(|e| IngestError::Io(SIDE.into(), e))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = t.split_whitespace().collect();
        if f.len() != 2 {
            return Err(malformed(SIDE, k + 1, "expected `i total_assets`"));
        }
        let i: usize = f[0]
            .parse()
            .map_err(|_| malformed(SIDE, k + 1, "bad index"))?;
        let a: f64 = f[1]
            .parse()
            .map_err(|_| malformed(SIDE, k + 1, "bad amount"))?;
        if i >= size {
            return Err(malformed(SIDE, k + 1, format!("index outside 0..{size}")));
        }
        if !a.is_finite() {
            return Err(malformed(SIDE, k + 1, "bad amount"));
        }
        if assets[i].replace(a).is_some() {
            return Err(malformed(SIDE, k + 1, "duplicate index"));
        }
    }
    let total_assets = assets
        .into_iter()
        .enumerate()
        .map(|(i, a)| a.ok_or_else(|| malformed(SIDE, 0, format!("no total assets for index {i}"))))
        .collect::<Result<_, _>>()?;
    Ok(InterbankMatrix {
        size,
        entries,
        total_assets,
    })
}

pub fn parse_firm_file(path: &Path) -> Result<Parsed<FirmStatement>, IngestError> {
    parse_firm_table(open(path)?)
}

pub fn parse_bank_file(path: &Path) -> Result<Parsed<BankStatement>, IngestError> {
    parse_bank_table(open(path)?)
}

pub fn parse_relations_file(path: &Path) -> Result<Parsed<(String, String)>, IngestError> {
    parse_relations(open(path)?)
}

pub fn parse_interbank_files(matrix: &Path, side: &Path) -> Result<InterbankMatrix, IngestError> {
    parse_interbank(open(matrix)?, open(side)?)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_firm_table<W: Write>(
    out: W,
    firms: &[FirmStatement],
    with_deposits: bool,
) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = FIRM_HEADER.to_vec();
    if with_deposits {
        header.push(FIRM_DEPOSITS_COLUMN);
    }
    w.write_record(&header)?;
    for f in firms {
        let mut row = vec![
            f.firm_label.clone(),
            f.total_assets.to_string(),
            f.equity.to_string(),
            fmt_opt(f.total_liabilities),
            fmt_opt(f.bank_liabilities),
            f.sector_code.clone(),
            f.bank_labels.join(";"),
        ];
        if with_deposits {
            row.push(fmt_opt(f.bank_deposits));
        }
        w.write_record(&row)?;
    }
    w.flush()
        .map_err(|e| IngestError::Io("firm table".into(), e))?;
    Ok(())
}

pub fn write_bank_table<W: Write>(out: W, banks: &[BankStatement]) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BANK_HEADER)?;
    for b in banks {
        w.write_record([
            b.bank_label.clone(),
            b.total_assets.to_string(),
            b.equity.to_string(),
            b.liabilities_to_banks.to_string(),
            b.assets_due_from_banks.to_string(),
        ])?;
    }
    w.flush()
        .map_err(|e| IngestError::Io("bank table".into(), e))?;
    Ok(())
}

/// Writes `n <size>` followed by `i j amount` lines.
pub fn write_triplets<W: Write>(
    mut out: W,
    size: usize,
    entries: impl IntoIterator<Item = (usize, usize, f64)>,
) -> std::io::Result<()> {
    writeln!(out, "n {size}")?;
    for (i, j, a) in entries {
        writeln!(out, "{i} {j} {a}")?;
    }
    Ok(())
}

pub fn write_interbank_assets<W: Write>(mut out: W, assets: &[f64]) -> std::io::Result<()> {
    writeln!(out, "n {}", assets.len())?;
    for (i, a) in assets.iter().enumerate() {
        writeln!(out, "{i} {a}")?;
    }
    Ok(())
}

/// How the per-sector average ratio of bank liabilities to total liabilities
/// is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatioMethod {
    /// Arithmetic mean of per-firm ratios.
    #[default]
    MeanOfRatios,
    /// Σ bank liabilities / Σ total liabilities.
    RatioOfSums,
}

#[derive(Default)]
struct RatioAcc {
    ratio_sum: f64,
    bank_sum: f64,
    total_sum: f64,
    count: usize,
}

impl RatioAcc {
    fn add(&mut self, bank: f64, total: f64) {
        self.ratio_sum += bank / total;
        self.bank_sum += bank;
        self.total_sum += total;
        self.count += 1;
    }

    fn ratio(&self, method: RatioMethod) -> Option<f64> {
        if self.count == 0 {
            return None;
        }
        Some(match method {
            RatioMethod::MeanOfRatios => self.ratio_sum / self.count as f64,
            RatioMethod::RatioOfSums => self.bank_sum / self.total_sum,
        })
    }
}

/// Fills in missing bank liabilities from same-sector firms with an exact
/// breakdown. Firms with exact figures are returned unchanged; only
/// [`LiabilityProvenance::Exact`] firms feed the averages, so a second pass
/// changes nothing.
pub fn estimate_bank_liabilities(
    firms: &[FirmStatement],
    method: RatioMethod,
) -> Vec<FirmStatement> {
    let mut by_sector: BTreeMap<&str, RatioAcc> = BTreeMap::new();
    let mut global = RatioAcc::default();
    for f in firms {
        if f.provenance != LiabilityProvenance::Exact {
            continue;
        }
        if let (Some(bank), Some(total)) = (f.bank_liabilities, f.total_liabilities) {
            if total > 0.0 {
                by_sector
                    .entry(f.sector_code.as_str())
                    .or_default()
                    .add(bank, total);
                global.add(bank, total);
            }
        }
    }
    let global_ratio = global.ratio(method);

    firms
        .iter()
        .map(|f| {
            if f.provenance != LiabilityProvenance::Missing {
                return f.clone();
            }
            let mut est = f.clone();
            match f.total_liabilities {
                Some(total) if total > 0.0 => {
                    let sector = by_sector
                        .get(f.sector_code.as_str())
                        .and_then(|a| a.ratio(method));
                    let (ratio, provenance) = match (sector, global_ratio) {
                        (Some(r), _) => (r, LiabilityProvenance::SectorEstimate),
                        (None, Some(r)) => (r, LiabilityProvenance::GlobalFallback),
                        (None, None) => (0.0, LiabilityProvenance::NoLiabilities),
                    };
                    est.bank_liabilities = Some(total * ratio);
                    est.provenance = provenance;
                }
                _ => {
                    est.bank_liabilities = Some(0.0);
                    est.provenance = LiabilityProvenance::NoLiabilities;
                }
            }
            est
        })
        .collect()
}

/// Share of total bank liabilities that was reported exactly.
pub fn exact_coverage_share(firms: &[FirmStatement]) -> f64 {
    let mut exact = 0.0;
    let mut total = 0.0;
    for f in firms {
        let b = f.bank_liabilities.unwrap_or(0.0);
        total += b;
        if f.provenance == LiabilityProvenance::Exact {
            exact += b;
        }
    }
    if total > 0.0 {
        exact / total
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TieWarning {
    pub rank: usize,
    /// Which dataset the tie is in: "public" or "anonymized".
    pub side: &'static str,
    pub total_assets: f64,
}

/// One row of the rank join.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankPair {
    pub rank: usize,
    pub bank_label: String,
    pub public_index: usize,
    pub anon_index: usize,
    pub public_assets: f64,
    pub anon_assets: f64,
    /// Smallest relative asset gap to a rank neighbour on either side. Small
    /// values mark matches that a slight data error could swap.
    pub neighbour_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankMatching {
    pairs: Vec<RankPair>,
    public_to_anon: Vec<usize>,
    anon_to_public: Vec<usize>,
    pub ties: Vec<TieWarning>,
}

impl RankMatching {
    pub fn pairs(&self) -> &[RankPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn anon_index(&self, public_index: usize) -> usize {
        self.public_to_anon[public_index]
    }

    pub fn public_index(&self, anon_index: usize) -> usize {
        self.anon_to_public[anon_index]
    }

    pub fn label_to_anon(&self) -> HashMap<&str, usize> {
        self.pairs
            .iter()
            .map(|p| (p.bank_label.as_str(), p.anon_index))
            .collect()
    }
}

/// Descending by assets; equal assets keep input order.
fn rank_order(assets: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..assets.len()).collect();
    idx.sort_by(|&a, &b| assets[b].total_cmp(&assets[a]));
    idx
}

fn relative_gaps(sorted: &[f64]) -> Vec<f64> {
    let n = sorted.len();
    (0..n)
        .map(|r| {
            let x = sorted[r];
            let scale = x.abs().max(f64::MIN_POSITIVE);
            let mut g = f64::INFINITY;
            if r > 0 {
                g = g.min((sorted[r - 1] - x).abs() / scale);
            }
            if r + 1 < n {
                g = g.min((x - sorted[r + 1]).abs() / scale);
            }
            g
        })
        .collect()
}

/// Joins public bank statements to anonymized interbank indices by total
/// asset rank.
pub fn match_banks_by_rank(
    public: &[BankStatement],
    anon: &InterbankMatrix,
) -> Result<RankMatching, IngestError> {
    if public.len() != anon.size || anon.total_assets.len() != anon.size {
        return Err(IngestError::CountMismatch {
            public: public.len(),
            anonymized: anon.size,
        });
    }
    let pub_assets: Vec<f64> = public.iter().map(|b| b.total_assets).collect();
    let pub_order = rank_order(&pub_assets);
    let anon_order = rank_order(&anon.total_assets);
    let pub_sorted: Vec<f64> = pub_order.iter().map(|&k| pub_assets[k]).collect();
    let anon_sorted: Vec<f64> = anon_order.iter().map(|&k| anon.total_assets[k]).collect();

    let mut ties = Vec::new();
    for (side, sorted) in [("public", &pub_sorted), ("anonymized", &anon_sorted)] {
        for r in 1..sorted.len() {
            if sorted[r] == sorted[r - 1] {
                ties.push(TieWarning {
                    rank: r,
                    side,
                    total_assets: sorted[r],
                });
            }
        }
    }

    let pub_gaps = relative_gaps(&pub_sorted);
    let anon_gaps = relative_gaps(&anon_sorted);
    let n = public.len();
    let mut public_to_anon = vec![0; n];
    let mut anon_to_public = vec![0; n];
    let pairs = (0..n)
        .map(|r| {
            let p = pub_order[r];
            let a = anon_order[r];
            public_to_anon[p] = a;
            anon_to_public[a] = p;
            RankPair {
                rank: r + 1,
                bank_label: public[p].bank_label.clone(),
                public_index: p,
                anon_index: a,
                public_assets: pub_sorted[r],
                anon_assets: anon_sorted[r],
                neighbour_gap: pub_gaps[r].min(anon_gaps[r]),
            }
        })
        .collect();
    Ok(RankMatching {
        pairs,
        public_to_anon,
        anon_to_public,
        ties,
    })
}
