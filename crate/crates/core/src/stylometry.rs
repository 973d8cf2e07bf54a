//! Word-category counts and the two-class χ² deviation test.
//!
//! For text `i` with `N` counted words of which `M` belong to category `j`,
//! and a pooled category probability `p`, the statistic compares the two
//! classes "in category j" and "not in category j" against expected counts
//! `E1 = N·p`, `E2 = N·(1 − p)`:
//!
//! ```text
//! χ² = (M − N·p)² / (N·p) + ((N − M) − N·(1 − p))² / (N·(1 − p))
//! ```
//!
//! A text's deviation count α is the number of categories whose χ² reaches
//! the threshold. Over a group of texts, ρ = (α − μ) / σ with μ and σ the
//! maximum-likelihood mean and standard deviation of α (population
//! denominator); a text is flagged when ρ ≥ 2.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::tagset::{Tag, PUNCT};
use crate::text::Token;

/// χ² for one degree of freedom at p = 0.05.
pub const DEFAULT_THRESHOLD: f64 = 3.841;
/// ρ at or above this flags a text.
pub const FLAG_RHO: f64 = 2.0;
/// Fewest texts a group test accepts.
pub const MIN_TEXTS: usize = 3;

/// Categories left out of counts unless configured otherwise.
pub fn default_excluded() -> BTreeSet<String> {
    BTreeSet::from([PUNCT.to_string()])
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryCounts {
    pub text_id: String,
    pub counts: BTreeMap<String, u64>,
    /// Sum of `counts`.
    pub total: u64,
}

impl CategoryCounts {
    pub fn new(text_id: impl Into<String>, counts: BTreeMap<String, u64>) -> Self {
        let total = counts.values().sum();
        Self {
            text_id: text_id.into(),
            counts,
            total,
        }
    }

    pub fn get(&self, category: &str) -> u64 {
        self.counts.get(category).copied().unwrap_or(0)
    }
}

/// Histogram of tag categories, skipping `excluded` ones.
pub fn count_categories(
    tagged: &[(Token, Tag)],
    text_id: &str,
    excluded: &BTreeSet<String>,
) -> CategoryCounts {
    let mut counts = BTreeMap::new();
    for (_, tag) in tagged {
        if !excluded.contains(&tag.category) {
            *counts.entry(tag.category.clone()).or_insert(0) += 1;
        }
    }
    CategoryCounts::new(text_id, counts)
}

/// Two-class χ² of `m` hits among `n` words against probability `p`.
pub fn chi_square_cell(m: u64, n: u64, p: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::ZeroTotal);
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidProbability(p));
    }
    if m > n {
        return Err(Error::Format(format!("count {m} exceeds total {n}")));
    }
    let (n, m) = (n as f64, m as f64);
    let e1 = n * p;
    let e2 = n * (1.0 - p);
    let d1 = m - e1;
    let d2 = (n - m) - e2;
    Ok(d1 * d1 / e1 + d2 * d2 / e2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestConfig {
    /// χ² at or above this counts as a significant deviation.
    pub threshold: f64,
    /// Pool the reference distribution over the other texts only.
    pub exclude_self: bool,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            exclude_self: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationReport {
    pub texts: Vec<String>,
    /// Categories tested, sorted.
    pub categories: Vec<String>,
    /// Categories left out because their pooled probability is 0 or 1.
    pub dropped: Vec<String>,
    /// `chi2[text][category]`; `None` where the reference probability for
    /// that text is 0 or 1 (only possible with `exclude_self`).
    pub chi2: Vec<Vec<Option<f64>>>,
    /// Pooled probability of each tested category over all texts.
    pub pooled_probs: BTreeMap<String, f64>,
    pub alpha: Vec<usize>,
    pub mu: f64,
    pub sigma: f64,
    /// `None` when σ = 0.
    pub rho: Option<Vec<f64>>,
    pub chi2_threshold: f64,
    pub flagged: Vec<String>,
}

impl DeviationReport {
    /// All α equal, so ρ is undefined and nothing is flagged.
    pub fn is_degenerate(&self) -> bool {
        self.rho.is_none()
    }
}

/// ρ_i = (α_i − μ)/σ with maximum-likelihood μ and σ; `None` when σ = 0.
pub fn rho(alpha: &[usize]) -> (f64, f64, Option<Vec<f64>>) {
    let n = alpha.len() as f64;
    let mu = alpha.iter().sum::<usize>() as f64 / n;
    let var = alpha
        .iter()
        .map(|&a| (a as f64 - mu).powi(2))
        .sum::<f64>()
        / n;
    let sigma = var.sqrt();
    if sigma == 0.0 {
        return (mu, sigma, None);
    }
    let rho = alpha.iter().map(|&a| (a as f64 - mu) / sigma).collect();
    (mu, sigma, Some(rho))
}

fn pooled(group: &[&CategoryCounts], categories: &[String]) -> BTreeMap<String, f64> {
    let total: u64 = group.iter().map(|c| c.total).sum();
    categories
        .iter()
        .map(|cat| {
            let hits: u64 = group.iter().map(|c| c.get(cat)).sum();
            let p = if total == 0 { 0.0 } else { hits as f64 / total as f64 };
            (cat.clone(), p)
        })
        .collect()
}

/// Runs the χ² deviation test over a group of texts.
pub fn run_test(group: &[CategoryCounts], config: &TestConfig) -> Result<DeviationReport> {
    if group.len() < MIN_TEXTS {
        return Err(Error::TooFewTexts {
            required: MIN_TEXTS,
            got: group.len(),
        });
    }
    if !(config.threshold > 0.0 && config.threshold.is_finite()) {
        return Err(Error::Format(format!(
            "threshold must be positive, got {}",
            config.threshold
        )));
    }
    let mut ids = BTreeSet::new();
    for c in group {
        if !ids.insert(c.text_id.as_str()) {
            return Err(Error::DuplicateTextId(c.text_id.clone()));
        }
        if c.total == 0 {
            return Err(Error::EmptyText(c.text_id.clone()));
        }
        if c.total != c.counts.values().sum::<u64>() {
            return Err(Error::Format(format!("inconsistent total for `{}`", c.text_id)));
        }
    }

    let all: Vec<&CategoryCounts> = group.iter().collect();
    let union: BTreeSet<String> = group.iter().flat_map(|c| c.counts.keys().cloned()).collect();
    let union: Vec<String> = union.into_iter().collect();
    let pool = pooled(&all, &union);
    let (categories, dropped): (Vec<String>, Vec<String>) = union
        .into_iter()
        .partition(|c| pool[c] > 0.0 && pool[c] < 1.0);
    let pooled_probs: BTreeMap<String, f64> = categories
        .iter()
        .map(|c| (c.clone(), pool[c]))
        .collect();

    let mut chi2 = Vec::with_capacity(group.len());
    let mut alpha = Vec::with_capacity(group.len());
    for (i, text) in group.iter().enumerate() {
        let reference = if config.exclude_self {
            let others: Vec<&CategoryCounts> = all
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != i)
                .map(|(_, c)| *c)
                .collect();
            pooled(&others, &categories)
        } else {
            pooled_probs.clone()
        };
        let row: Vec<Option<f64>> = categories
            .iter()
            .map(|cat| chi_square_cell(text.get(cat), text.total, reference[cat]).ok())
            .collect();
        alpha.push(
            row.iter()
                .filter(|x| x.is_some_and(|v| v >= config.threshold))
                .count(),
        );
        chi2.push(row);
    }

    let (mu, sigma, rho) = rho(&alpha);
    let flagged = match &rho {
        Some(r) => group
            .iter()
            .zip(r)
            .filter(|(_, &r)| r >= FLAG_RHO)
            .map(|(c, _)| c.text_id.clone())
            .collect(),
        None => Vec::new(),
    };
    Ok(DeviationReport {
        texts: group.iter().map(|c| c.text_id.clone()).collect(),
        categories,
        dropped,
        chi2,
        pooled_probs,
        alpha,
        mu,
        sigma,
        rho,
        chi2_threshold: config.threshold,
        flagged,
    })
}

/// Formats with three significant digits, as in `0.0909`, `21.7`, `0.000453`.
pub fn format_sig3(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if exp >= 3 {
        // no fractional digits left; round to an integer
        return format!("{}", x.round());
    }
    let decimals = (2 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // rounding may have produced one more digit (e.g. 9.996 → 10.00)
    let reparsed: f64 = s.parse().expect("number");
    if reparsed != 0.0 && (reparsed.abs().log10().floor() as i32) > exp && decimals > 0 {
        let decimals = decimals - 1;
        return format!("{x:.decimals$}");
    }
    s
}

fn rho_cell(r: f64) -> String {
    // avoid printing "-0.000"
    let s = format!("{r:.3}");
    if s == "-0.000" {
        "0.000".to_string()
    } else {
        s
    }
}

/// Aligned plain-text table: categories as rows, texts as columns, χ²
/// cells, and a final ρ row.
pub fn render_table(report: &DeviationReport) -> String {
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut header = vec![String::new()];
    header.extend(report.texts.iter().cloned());
    rows.push(header);
    for (j, cat) in report.categories.iter().enumerate() {
        let mut row = vec![cat.clone()];
        row.extend(
            report
                .chi2
                .iter()
                .map(|r| r[j].map_or_else(|| "-".to_string(), format_sig3)),
        );
        rows.push(row);
    }
    let mut alpha = vec!["alpha".to_string()];
    alpha.extend(report.alpha.iter().map(usize::to_string));
    rows.push(alpha);
    let mut rho = vec!["rho".to_string()];
    match &report.rho {
        Some(r) => rho.extend(r.iter().map(|&x| rho_cell(x))),
        None => rho.extend(report.texts.iter().map(|_| "undef".to_string())),
    }
    rows.push(rho);

    let columns = rows[0].len();
    let widths: Vec<usize> = (0..columns)
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (k, row) in rows.iter().enumerate() {
        if k == rows.len() - 2 {
            let rule: usize = widths.iter().sum::<usize>() + 2 * (columns - 1);
            out.push_str(&"-".repeat(rule));
            out.push('\n');
        }
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            let pad = widths[c] - cell.chars().count();
            if c == 0 {
                line.push_str(cell);
                line.push_str(&" ".repeat(pad));
            } else {
                line.push_str("  ");
                line.push_str(&" ".repeat(pad));
                line.push_str(cell);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

/// Machine-readable report: one row per category with full-precision χ²
/// (empty cell where untested), then `alpha` and `rho` rows.
pub fn render_csv(report: &DeviationReport) -> String {
    let mut out = String::from("category");
    for t in &report.texts {
        out.push(',');
        out.push_str(t);
    }
    out.push('\n');
    for (j, cat) in report.categories.iter().enumerate() {
        out.push_str(cat);
        for row in &report.chi2 {
            out.push(',');
            if let Some(v) = row[j] {
                let _ = write!(out, "{v}");
            }
        }
        out.push('\n');
    }
    out.push_str("alpha");
    for a in &report.alpha {
        let _ = write!(out, ",{a}");
    }
    out.push('\n');
    out.push_str("rho");
    for i in 0..report.texts.len() {
        match &report.rho {
            Some(r) => {
                let _ = write!(out, ",{}", r[i]);
            }
            None => out.push_str(",undef"),
        }
    }
    out.push('\n');
    out
}

/// Table plus CSV for a report.
pub fn render_report(report: &DeviationReport) -> (String, String) {
    (render_table(report), render_csv(report))
}

/// Parsed form of [`render_csv`] output.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportCsv {
    pub texts: Vec<String>,
    pub categories: Vec<String>,
    pub chi2: Vec<Vec<Option<f64>>>,
    pub alpha: Vec<usize>,
    pub rho: Option<Vec<f64>>,
}

fn split_csv_line(line: &str) -> Vec<&str> {
    line.split(',').collect()
}

pub fn parse_report_csv(text: &str) -> Result<ReportCsv> {
    let lines: Vec<&str> = text.lines().collect();
    let err = |line: usize, message: String| Error::Parse { line, message };
    let header = split_csv_line(lines.first().ok_or_else(|| err(1, "empty report".into()))?);
    if header[0] != "category" {
        return Err(err(1, "expected `category` header".into()));
    }
    let texts: Vec<String> = header[1..].iter().map(|s| s.to_string()).collect();
    let n = texts.len();
    if lines.len() < 3 {
        return Err(err(lines.len(), "missing alpha/rho rows".into()));
    }
    let mut categories = Vec::new();
    let mut chi2 = vec![Vec::new(); n];
    let body = &lines[1..lines.len() - 2];
    for (k, line) in body.iter().enumerate() {
        let fields = split_csv_line(line);
        if fields.len() != n + 1 {
            return Err(err(k + 2, format!("expected {} fields", n + 1)));
        }
        categories.push(fields[0].to_string());
        for (i, f) in fields[1..].iter().enumerate() {
            let v = if f.is_empty() {
                None
            } else {
                Some(f.parse().map_err(|_| err(k + 2, format!("invalid number `{f}`")))?)
            };
            chi2[i].push(v);
        }
    }
    let alpha_line = lines.len() - 1;
    let alpha_fields = split_csv_line(lines[alpha_line - 1]);
    if alpha_fields.len() != n + 1 || alpha_fields[0] != "alpha" {
        return Err(err(alpha_line, "expected alpha row".into()));
    }
    let alpha = alpha_fields[1..]
        .iter()
        .map(|f| f.parse().map_err(|_| err(alpha_line, format!("invalid count `{f}`"))))
        .collect::<Result<Vec<usize>>>()?;
    let rho_fields = split_csv_line(lines[alpha_line]);
    if rho_fields.len() != n + 1 || rho_fields[0] != "rho" {
        return Err(err(alpha_line + 1, "expected rho row".into()));
    }
    let rho = if rho_fields[1..].iter().all(|f| *f == "undef") {
        None
    } else {
        Some(
            rho_fields[1..]
                .iter()
                .map(|f| f.parse().map_err(|_| err(alpha_line + 1, format!("invalid number `{f}`"))))
                .collect::<Result<Vec<f64>>>()?,
        )
    };
    Ok(ReportCsv {
        texts,
        categories,
        chi2,
        alpha,
        rho,
    })
}

/// Counts CSV: header `category,<text_id>,...`, one row per category (the
/// union over all texts, sorted), integer cells.
pub fn write_counts_csv(group: &[CategoryCounts]) -> String {
    let categories: BTreeSet<&String> = group.iter().flat_map(|c| c.counts.keys()).collect();
    let mut out = String::from("category");
    for c in group {
        out.push(',');
        out.push_str(&c.text_id);
    }
    out.push('\n');
    for cat in categories {
        out.push_str(cat);
        for c in group {
            let _ = write!(out, ",{}", c.get(cat));
        }
        out.push('\n');
    }
    out
}

/// Reads a counts CSV. Zero cells are kept, so writing back reproduces the
/// input.
pub fn read_counts_csv(text: &str) -> Result<Vec<CategoryCounts>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        message: "empty counts file".into(),
    })?;
    let header = split_csv_line(header);
    if header.first() != Some(&"category") {
        return Err(Error::Parse {
            line: 1,
            message: "expected `category` as first header field".into(),
        });
    }
    let ids: Vec<&str> = header[1..].to_vec();
    let mut seen = BTreeSet::new();
    for id in &ids {
        if id.is_empty() {
            return Err(Error::Parse {
                line: 1,
                message: "empty text id".into(),
            });
        }
        if !seen.insert(*id) {
            return Err(Error::DuplicateTextId(id.to_string()));
        }
    }
    let mut counts: Vec<BTreeMap<String, u64>> = vec![BTreeMap::new(); ids.len()];
    let mut cats = BTreeSet::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { line: i + 1, message };
        let fields = split_csv_line(line);
        if fields.len() != ids.len() + 1 {
            return Err(err(format!(
                "expected {} fields, found {}",
                ids.len() + 1,
                fields.len()
            )));
        }
        let cat = fields[0].to_string();
        if cat.is_empty() || !cats.insert(cat.clone()) {
            return Err(err(format!("empty or duplicate category `{cat}`")));
        }
        for (k, f) in fields[1..].iter().enumerate() {
            let n: u64 = f
                .parse()
                .map_err(|_| err(format!("invalid count `{f}`")))?;
            counts[k].insert(cat.clone(), n);
        }
    }
    Ok(ids
        .into_iter()
        .zip(counts)
        .map(|(id, c)| CategoryCounts::new(id, c))
        .collect())
}

#[cfg(test)]
mod tests;
