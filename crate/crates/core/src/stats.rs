//! Contingency and two-sample tests, and grouped summaries over records.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};
use crate::record::AnalysisRecord;
use crate::scales::PaletteSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub df: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_sizes: Option<(usize, usize)>,
}

/// Human-readable p-value. Values under 1e-12 collapse to `<1e-12`.
pub fn format_p(p: f64) -> String {
    if p < 1e-12 {
        "<1e-12".into()
    } else if p >= 1e-3 {
        format!("{p:.4}")
    } else {
        format!("{p:.2e}")
    }
}

/// `count / n` as a percentage. Display with `{:.1}`.
pub fn percent(count: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        count as f64 / n as f64 * 100.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ContingencyTable {
    pub fn new(row_labels: Vec<String>, col_labels: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        if counts.len() != row_labels.len() || counts.iter().any(|r| r.len() != col_labels.len()) {
            return Err(Error::Config(format!(
                "contingency table shape does not match {}x{} labels",
                row_labels.len(),
                col_labels.len()
            )));
        }
        Ok(Self { row_labels, col_labels, counts })
    }

    /// Unlabelled table; rows and columns are numbered from 1.
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let rows = (1..=counts.len()).map(|i| i.to_string()).collect();
        let cols = (1..=counts.first().map_or(0, |r| r.len())).map(|i| i.to_string()).collect();
        Self::new(rows, cols, counts)
    }

    /// Cross-tabulates two categorical fields. Records missing either value
    /// are left out. Rows and columns are ordered by total count, largest
    /// first, then by label.
    pub fn from_records(records: &[AnalysisRecord], rows: Field, cols: Field) -> Self {
        let mut cells: BTreeMap<(String, String), u64> = BTreeMap::new();
        for r in records {
            if let (Some(a), Some(b)) = (rows.category(r), cols.category(r)) {
                *cells.entry((a, b)).or_default() += 1;
            }
        }
        let order = |pick: fn(&(String, String)) -> &String| {
            let mut totals: BTreeMap<String, u64> = BTreeMap::new();
            for (k, v) in &cells {
                *totals.entry(pick(k).clone()).or_default() += v;
            }
            let mut labels: Vec<(String, u64)> = totals.into_iter().collect();
            labels.sort_by(|x, y| y.1.cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
            labels.into_iter().map(|(l, _)| l).collect::<Vec<_>>()
        };
        let row_labels = order(|k| &k.0);
        let col_labels = order(|k| &k.1);
        let counts = row_labels
            .iter()
            .map(|r| col_labels.iter().map(|c| cells.get(&(r.clone(), c.clone())).copied().unwrap_or(0)).collect())
            .collect();
        Self { row_labels, col_labels, counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_totals(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_totals(&self) -> Vec<u64> {
        (0..self.col_labels.len()).map(|j| self.counts.iter().map(|r| r[j]).sum()).collect()
    }

    pub fn transpose(&self) -> Self {
        let counts = (0..self.col_labels.len()).map(|j| self.counts.iter().map(|r| r[j]).collect()).collect();
        Self { row_labels: self.col_labels.clone(), col_labels: self.row_labels.clone(), counts }
    }
}

/// Pearson chi-square test of independence. With `yates` on a 2x2 table each
/// cell contributes `(|O - E| - 0.5)^2 / E`; larger tables ignore the flag.
pub fn chi_square(t: &ContingencyTable, yates: bool) -> Result<TestResult> {
    let rows = t.row_totals();
    let cols = t.col_totals();
    if let Some(i) = rows.iter().position(|&v| v == 0) {
        return Err(Error::ZeroMarginal { axis: "row", index: i });
    }
    if let Some(j) = cols.iter().position(|&v| v == 0) {
        return Err(Error::ZeroMarginal { axis: "column", index: j });
    }
    let n = t.total() as f64;
    let corrected = yates && rows.len() == 2 && cols.len() == 2;
    let mut stat = 0.0;
    for (i, row) in t.counts.iter().enumerate() {
        for (j, &o) in row.iter().enumerate() {
            let e = rows[i] as f64 * cols[j] as f64 / n;
            let mut d = (o as f64 - e).abs();
            if corrected {
                d = (d - 0.5).max(0.0);
            }
            stat += d * d / e;
        }
    }
    let df = ((rows.len() - 1) * (cols.len() - 1)) as f64;
    let p_value = if df == 0.0 { 1.0 } else { chi_square_sf(stat, df) };
    Ok(TestResult {
        statistic: stat,
        p_value,
        method: if corrected { "chi-square (Yates)" } else { "chi-square (Pearson)" }.into(),
        df: Some(df),
        sample_sizes: None,
    })
}

pub fn chi_square_sf(x: f64, df: f64) -> f64 {
    ChiSquared::new(df).expect("df > 0").sf(x)
}

fn normal_sf(z: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").sf(z)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    pub u_a: f64,
    pub u_b: f64,
    pub result: TestResult,
}

/// Samples whose `n1 * n2` is at most this use the exact null distribution.
pub const EXACT_LIMIT: usize = 10_000;

/// Midranks of the pooled sample plus the sizes of its tie blocks in
/// ascending value order.
fn midranks(a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut pooled: Vec<(f64, usize)> = a.iter().chain(b).copied().zip(0..).collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i + 1;
        while j < pooled.len() && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        let r = (i + j + 1) as f64 / 2.0;
        for p in &pooled[i..j] {
            ranks[p.1] = r;
        }
        ties.push(j - i);
        i = j;
    }
    (ranks, ties)
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Null distribution of `2 * U_a` given the tie structure: entry `v` counts
/// the assignments of `n1` of the pooled items to sample a with `2U_a = v`.
///
/// Within a tie block of size `t`, putting `k` items in a (with `before_b`
/// b-items below the block) adds `2 k before_b + k (t - k)` half-units.
pub fn exact_u_distribution(ties: &[usize], n1: usize, n2: usize) -> Vec<f64> {
    let max_v = 2 * n1 * n2;
    let mut dp = vec![vec![0.0f64; max_v + 1]; n1 + 1];
    dp[0][0] = 1.0;
    let mut pos = 0;
    for &t in ties {
        let mut next = vec![vec![0.0f64; max_v + 1]; n1 + 1];
        for used in 0..=n1.min(pos) {
            let before_b = pos - used;
            if before_b > n2 {
                continue;
            }
            for k in 0..=t.min(n1 - used) {
                if t - k > n2 - before_b {
                    continue;
                }
                let add = 2 * k * before_b + k * (t - k);
                let w = binomial(t, k);
                let (src, dst) = (&dp[used], &mut next[used + k]);
                for v in 0..=max_v - add {
                    if src[v] != 0.0 {
                        dst[v + add] += src[v] * w;
                    }
                }
            }
        }
        dp = next;
        pos += t;
    }
    dp.swap_remove(n1)
}

/// Mann-Whitney U with midranks. Exact two-sided p when `n1 * n2 <=`
/// [`EXACT_LIMIT`], otherwise the normal approximation with tie and
/// continuity corrections.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let (n1, n2) = (a.len(), b.len());
    let (ranks, ties) = midranks(a, b);
    let r1: f64 = ranks[..n1].iter().sum();
    let u_a = r1 - (n1 * (n1 + 1)) as f64 / 2.0;
    let nn = (n1 * n2) as f64;
    let u_b = nn - u_a;

    let (p_value, method) = if n1 * n2 <= EXACT_LIMIT {
        let dist = exact_u_distribution(&ties, n1, n2);
        let total: f64 = dist.iter().sum();
        let obs = ((2.0 * u_a).round() as i64 - (n1 * n2) as i64).abs();
        let tail: f64 =
            dist.iter().enumerate().filter(|(v, _)| (*v as i64 - (n1 * n2) as i64).abs() >= obs).map(|(_, c)| c).sum();
        ((tail / total).min(1.0), "Mann-Whitney U (exact)")
    } else {
        let n = (n1 + n2) as f64;
        let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (n * (n - 1.0));
        let var = nn / 12.0 * ((n + 1.0) - tie_term);
        let p = if var <= 0.0 {
            1.0
        } else {
            let z = ((u_a - nn / 2.0).abs() - 0.5).max(0.0) / var.sqrt();
            (2.0 * normal_sf(z)).min(1.0)
        };
        (p, "Mann-Whitney U (normal approximation)")
    };
    Ok(MannWhitney {
        u_a,
        u_b,
        result: TestResult { statistic: u_a, p_value, method: method.into(), df: None, sample_sizes: Some((n1, n2)) },
    })
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    (m, v)
}

/// Two-sample t-test, Welch by default. Returns `t = (mean_a - mean_b) / se`.
pub fn t_test(a: &[f64], b: &[f64], welch: bool) -> Result<TestResult> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(Error::SampleTooSmall(s.len()));
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (se, df) = if welch {
        let (qa, qb) = (va / na, vb / nb);
        let se = (qa + qb).sqrt();
        let df = (qa + qb).powi(2) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
        (se, df)
    } else {
        let df = na + nb - 2.0;
        let sp2 = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
        ((sp2 * (1.0 / na + 1.0 / nb)).sqrt(), df)
    };
    let method = if welch { "Welch t-test" } else { "Student t-test (pooled)" }.to_string();
    let sizes = Some((a.len(), b.len()));
    if se == 0.0 {
        if ma == mb {
            return Ok(TestResult { statistic: 0.0, p_value: 1.0, method, df: None, sample_sizes: sizes });
        }
        return Err(Error::DegenerateVariance);
    }
    let t = (ma - mb) / se;
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(TestResult { statistic: t, p_value: p, method, df: Some(df), sample_sizes: sizes })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Model,
    Prompt,
    Gender,
    Race,
    Age,
    Expression,
    Mst,
    Perla,
    Fst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Categorical,
    Continuous,
    /// Ordered scale positions; mean and sd are reported alongside the
    /// distribution.
    QuasiContinuous,
    /// Ordered scale positions summarized by median and distribution only.
    Ordinal,
}

impl Field {
    pub const ALL: [Field; 9] = [
        Self::Model,
        Self::Prompt,
        Self::Gender,
        Self::Race,
        Self::Age,
        Self::Expression,
        Self::Mst,
        Self::Perla,
        Self::Fst,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Model => "model",
            Self::Prompt => "prompt",
            Self::Gender => "gender",
            Self::Race => "race",
            Self::Age => "age",
            Self::Expression => "expression",
            Self::Mst => "mst",
            Self::Perla => "perla",
            Self::Fst => "fst",
        }
    }

    pub fn kind(self) -> FieldKind {
        match self {
            Self::Model | Self::Prompt | Self::Gender | Self::Race | Self::Expression => FieldKind::Categorical,
            Self::Age => FieldKind::Continuous,
            Self::Mst | Self::Perla => FieldKind::QuasiContinuous,
            Self::Fst => FieldKind::Ordinal,
        }
    }

    /// Palette backing a scale field.
    pub fn scale_name(self) -> Option<&'static str> {
        match self {
            Self::Mst => Some("MST"),
            Self::Perla => Some("PERLA"),
            Self::Fst => Some("FST"),
            _ => None,
        }
    }

    pub fn category(self, r: &AnalysisRecord) -> Option<String> {
        match self {
            Self::Model => Some(r.model.clone()),
            Self::Prompt => Some(r.prompt.clone()),
            Self::Gender => r.gender.as_ref().map(|g| g.label.clone()),
            Self::Race => r.race.as_ref().map(|g| g.label.clone()),
            Self::Expression => r.expression.clone(),
            Self::Age => r.age.map(|a| a.to_string()),
            Self::Mst => Some(r.mst.label.clone()),
            Self::Perla => Some(r.perla.label.clone()),
            Self::Fst => Some(r.fst.label.clone()),
        }
    }

    /// Numeric value: the age, or the 1-based scale position.
    pub fn number(self, r: &AnalysisRecord) -> Option<f64> {
        match self {
            Self::Age => r.age,
            Self::Mst => Some(r.mst.index as f64),
            Self::Perla => Some(r.perla.index as f64),
            Self::Fst => Some(r.fst.index as f64),
            _ => None,
        }
    }

    pub fn parse_list(s: &str) -> Result<Vec<Field>> {
        s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(str::parse).collect()
    }
}

impl FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownField(s.to_string()))
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryCount {
    pub label: String,
    pub count: usize,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub field: Field,
    /// Records carrying a value for this field.
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    /// Sample standard deviation (n - 1 denominator); 0 for a single value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sd: Option<f64>,
    /// Numeric median. Ordinal fields use the lower middle value for even n.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub median: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub median_label: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub distribution: Vec<CategoryCount>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    /// `(field, value)` pairs identifying the group, in `group_by` order.
    pub key: Vec<(Field, String)>,
    pub n: usize,
    pub metrics: Vec<MetricSummary>,
}

impl GroupSummary {
    pub fn metric(&self, field: Field) -> Option<&MetricSummary> {
        self.metrics.iter().find(|m| m.field == field)
    }

    pub fn key_value(&self, field: Field) -> Option<&str> {
        self.key.iter().find(|(f, _)| *f == field).map(|(_, v)| v.as_str())
    }
}

pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let m = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (m, 0.0);
    }
    let v = values.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
    (m, v.sqrt())
}

fn categorical(field: Field, recs: &[&AnalysisRecord]) -> MetricSummary {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for r in recs {
        if let Some(v) = field.category(r) {
            *counts.entry(v).or_default() += 1;
        }
    }
    let n = counts.values().sum();
    let mut distribution: Vec<CategoryCount> =
        counts.into_iter().map(|(label, count)| CategoryCount { percent: percent(count, n), label, count }).collect();
    distribution.sort_by(|x, y| y.count.cmp(&x.count).then_with(|| x.label.cmp(&y.label)));
    MetricSummary { field, n, mean: None, sd: None, median: None, median_label: None, distribution }
}

fn continuous(field: Field, recs: &[&AnalysisRecord]) -> MetricSummary {
    let mut vals: Vec<f64> = recs.iter().filter_map(|r| field.number(r)).collect();
    let n = vals.len();
    if n == 0 {
        return MetricSummary {
            field,
            n,
            mean: None,
            sd: None,
            median: None,
            median_label: None,
            distribution: vec![],
        };
    }
    let (mean, sd) = mean_sd(&vals);
    vals.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 { vals[n / 2] } else { (vals[n / 2 - 1] + vals[n / 2]) / 2.0 };
    MetricSummary {
        field,
        n,
        mean: Some(mean),
        sd: Some(sd),
        median: Some(median),
        median_label: None,
        distribution: vec![],
    }
}

fn ordinal(field: Field, recs: &[&AnalysisRecord], palettes: &PaletteSet) -> MetricSummary {
    let palette = palettes.get(field.scale_name().expect("scale field"));
    let size = palette.map_or(0, |p| p.entries.len());
    let mut by_index: BTreeMap<usize, (String, usize)> = BTreeMap::new();
    if let Some(p) = palette {
        for (i, e) in p.entries.iter().enumerate() {
            by_index.insert(i + 1, (e.label.clone(), 0));
        }
    }
    let mut idx: Vec<usize> = Vec::with_capacity(recs.len());
    for r in recs {
        let v = field.number(r).expect("scale fields always present") as usize;
        let label = field.category(r).unwrap_or_default();
        by_index.entry(v).or_insert((label, 0)).1 += 1;
        idx.push(v);
    }
    let n = idx.len();
    idx.sort_unstable();
    let med = (n > 0).then(|| idx[(n - 1) / 2]);
    let distribution = by_index
        .into_values()
        .map(|(label, count)| CategoryCount { percent: percent(count, n), label, count })
        .collect();
    let (mean, sd) = if field.kind() == FieldKind::QuasiContinuous && n > 0 {
        let v: Vec<f64> = idx.iter().map(|&i| i as f64).collect();
        let (m, s) = mean_sd(&v);
        (Some(m), Some(s))
    } else {
        (None, None)
    };
    let median_label = med.map(|m| {
        palette.filter(|_| m <= size).map(|p| p.entries[m - 1].label.clone()).unwrap_or_else(|| m.to_string())
    });
    MetricSummary { field, n, mean, sd, median: med.map(|m| m as f64), median_label, distribution }
}

/// Groups records by the `group_by` fields (sorted by key) and summarizes
/// each requested field within every group.
pub fn summarize(
    records: &[AnalysisRecord],
    group_by: &[Field],
    fields: &[Field],
    palettes: &PaletteSet,
) -> Result<Vec<GroupSummary>> {
    let mut groups: BTreeMap<Vec<String>, Vec<&AnalysisRecord>> = BTreeMap::new();
    for r in records {
        let key: Option<Vec<String>> = group_by.iter().map(|f| f.category(r)).collect();
        if let Some(key) = key {
            groups.entry(key).or_default().push(r);
        }
    }
    Ok(groups
        .into_iter()
        .map(|(key, recs)| GroupSummary {
            key: group_by.iter().copied().zip(key).collect(),
            n: recs.len(),
            metrics: fields
                .iter()
                .map(|&f| match f.kind() {
                    FieldKind::Categorical => categorical(f, &recs),
                    FieldKind::Continuous => continuous(f, &recs),
                    FieldKind::QuasiContinuous | FieldKind::Ordinal => ordinal(f, &recs, palettes),
                })
                .collect(),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTest {
    pub name: String,
    pub result: TestResult,
}

/// The corpus-level comparisons reported for a two-model audit: gender and
/// race against model (chi-square), age (t-test), MST and PERLA
/// (Mann-Whitney). Tests whose inputs are degenerate are omitted.
pub fn model_comparisons(records: &[AnalysisRecord]) -> Vec<NamedTest> {
    let mut out = Vec::new();
    for (name, field) in [("gender_by_model", Field::Gender), ("race_by_model", Field::Race)] {
        let t = ContingencyTable::from_records(records, Field::Model, field);
        if t.row_labels.len() >= 2 && t.col_labels.len() >= 2 {
            if let Ok(result) = chi_square(&t, true) {
                out.push(NamedTest { name: name.into(), result });
            }
        }
    }
    let mut models: Vec<&str> = records.iter().map(|r| r.model.as_str()).collect();
    models.sort_unstable();
    models.dedup();
    if let [ma, mb] = models[..] {
        let split = |f: Field, m: &str| -> Vec<f64> {
            records.iter().filter(|r| r.model == m).filter_map(|r| f.number(r)).collect()
        };
        if let Ok(result) = t_test(&split(Field::Age, ma), &split(Field::Age, mb), true) {
            out.push(NamedTest { name: "age_by_model".into(), result });
        }
        for (name, f) in [("mst_by_model", Field::Mst), ("perla_by_model", Field::Perla)] {
            if let Ok(mw) = mann_whitney_u(&split(f, ma), &split(f, mb)) {
                out.push(NamedTest { name: name.into(), result: mw.result });
            }
        }
    }
    out
}
