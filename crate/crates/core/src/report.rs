//! Table and plot rendering from grouped summaries.
//!
//! Tables go to `tables/T<k>_<name>.{csv,md}` and plots to
//! `plots/F<k>_<name>.svg`. Markdown cells use comma thousands separators;
//! CSV cells never do. Percentages print with one decimal.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::record::AnalysisRecord;
use crate::scales::PaletteSet;
use crate::stats::{percent, summarize, Field, GroupSummary, MetricSummary};

/// Summaries for several groupings of the same records.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SummarySet {
    pub groups: BTreeMap<Vec<Field>, Vec<GroupSummary>>,
}

/// Fields summarized for every standard grouping.
pub const REPORT_FIELDS: [Field; 6] = [Field::Gender, Field::Race, Field::Age, Field::Mst, Field::Perla, Field::Fst];

impl SummarySet {
    pub fn insert(&mut self, grouping: Vec<Field>, summaries: Vec<GroupSummary>) {
        self.groups.insert(grouping, summaries);
    }

    /// Overall, per-model and per-(model, prompt) summaries.
    pub fn standard(records: &[AnalysisRecord], palettes: &PaletteSet) -> Result<Self> {
        let mut set = Self::default();
        for g in [vec![], vec![Field::Model], vec![Field::Model, Field::Prompt]] {
            let s = summarize(records, &g, &REPORT_FIELDS, palettes)?;
            set.insert(g, s);
        }
        Ok(set)
    }

    fn get(&self, table: &str, grouping: &[Field]) -> Result<&[GroupSummary]> {
        self.groups.get(grouping).map(Vec::as_slice).ok_or_else(|| Error::MissingGrouping {
            table: table.to_string(),
            grouping: if grouping.is_empty() {
                "(overall)".to_string()
            } else {
                grouping.iter().map(|f| f.name()).collect::<Vec<_>>().join(",")
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    /// Rows are models; cells "count (pct%)" per category, plus a combined row.
    CountsByModel,
    /// Rows are categories; columns are models plus combined.
    CategoriesByModel,
    /// Rows are prompts; for each model, the percentage of every category.
    PercentByPromptModel,
    /// Rows are prompts; one mean per model, plus an overall-mean row.
    MeanByPromptModel,
    /// Rows are prompts; "mean ± sd" per model.
    MeanSdByPromptModel,
    /// Rows are (prompt, model) pairs; one percentage per scale category.
    DistributionByPromptModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableSpec {
    pub id: &'static str,
    pub name: &'static str,
    pub title: &'static str,
    pub field: Field,
    pub kind: TableKind,
}

impl TableSpec {
    pub fn file_stem(&self) -> String {
        format!("{}_{}", self.id, self.name)
    }

    pub fn groupings(&self) -> Vec<Vec<Field>> {
        match self.kind {
            TableKind::CountsByModel | TableKind::CategoriesByModel => vec![vec![Field::Model], vec![]],
            TableKind::MeanByPromptModel => vec![vec![Field::Model, Field::Prompt], vec![Field::Model]],
            _ => vec![vec![Field::Model, Field::Prompt]],
        }
    }
}

pub const STANDARD_TABLES: [TableSpec; 7] = [
    TableSpec {
        id: "T1",
        name: "gender_by_model",
        title: "Predicted gender distribution by model",
        field: Field::Gender,
        kind: TableKind::CountsByModel,
    },
    TableSpec {
        id: "T2",
        name: "gender_by_prompt_model",
        title: "Predicted gender distribution by prompt and model (%)",
        field: Field::Gender,
        kind: TableKind::PercentByPromptModel,
    },
    TableSpec {
        id: "T3",
        name: "race_by_model",
        title: "Predicted race distribution across models",
        field: Field::Race,
        kind: TableKind::CategoriesByModel,
    },
    TableSpec {
        id: "T4",
        name: "age_by_prompt_model",
        title: "Mean predicted age by prompt and model",
        field: Field::Age,
        kind: TableKind::MeanByPromptModel,
    },
    TableSpec {
        id: "T5",
        name: "mst_by_prompt_model",
        title: "Mean Monk Skin Tone by prompt and model",
        field: Field::Mst,
        kind: TableKind::MeanSdByPromptModel,
    },
    TableSpec {
        id: "T6",
        name: "perla_by_prompt_model",
        title: "Mean PERLA by prompt and model",
        field: Field::Perla,
        kind: TableKind::MeanSdByPromptModel,
    },
    TableSpec {
        id: "T7",
        name: "fst_by_prompt_model",
        title: "Fitzpatrick skin type distribution by prompt and model (%)",
        field: Field::Fst,
        kind: TableKind::DistributionByPromptModel,
    },
];

/// A rendered table: Markdown and CSV views of the same numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub spec: TableSpec,
    pub md_header: Vec<String>,
    pub md_rows: Vec<Vec<String>>,
    pub csv_header: Vec<String>,
    pub csv_rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_markdown(&self) -> String {
        let mut s = format!("# {}: {}\n\n", self.spec.id, self.spec.title);
        let line = |cells: &[String]| format!("| {} |\n", cells.join(" | "));
        s.push_str(&line(&self.md_header));
        s.push_str(&line(&vec!["---".to_string(); self.md_header.len()]));
        for r in &self.md_rows {
            s.push_str(&line(r));
        }
        s
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::parse("table csv", e);
        w.write_record(&self.csv_header).map_err(err)?;
        for r in &self.csv_rows {
            w.write_record(r).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::parse("table csv", e))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Markdown cell at `(row, column)`.
    pub fn cell(&self, row: usize, col: usize) -> &str {
        &self.md_rows[row][col]
    }
}

/// Integer with comma thousands separators.
pub fn thousands(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

pub fn pct1(count: usize, n: usize) -> String {
    format!("{:.1}", percent(count, n))
}

fn count_pct_md(count: usize, n: usize) -> String {
    format!("{} ({}%)", thousands(count), pct1(count, n))
}

fn key_of(g: &GroupSummary, f: Field) -> &str {
    g.key_value(f).unwrap_or("")
}

fn metric(g: &GroupSummary, f: Field) -> Option<&MetricSummary> {
    g.metric(f)
}

fn count_of(m: Option<&MetricSummary>, label: &str) -> usize {
    m.and_then(|m| m.distribution.iter().find(|c| c.label == label)).map_or(0, |c| c.count)
}

/// Category labels for a field: scale order for ordinal fields, otherwise by
/// total count (largest first), then by label.
fn category_order(field: Field, groups: &[GroupSummary]) -> Vec<String> {
    let mut totals: Vec<(String, usize)> = Vec::new();
    for g in groups {
        if let Some(m) = g.metric(field) {
            for c in &m.distribution {
                match totals.iter_mut().find(|(l, _)| *l == c.label) {
                    Some(t) => t.1 += c.count,
                    None => totals.push((c.label.clone(), c.count)),
                }
            }
        }
    }
    if field.scale_name().is_none() {
        totals.sort_by(|x, y| y.1.cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
    }
    totals.into_iter().map(|(l, _)| l).collect()
}

fn sorted_values(groups: &[GroupSummary], f: Field) -> Vec<String> {
    let mut v: Vec<String> = groups.iter().map(|g| key_of(g, f).to_string()).collect();
    v.sort();
    v.dedup();
    v
}

fn find<'a>(groups: &'a [GroupSummary], model: &str, prompt: Option<&str>) -> Option<&'a GroupSummary> {
    groups.iter().find(|g| key_of(g, Field::Model) == model && prompt.is_none_or(|p| key_of(g, Field::Prompt) == p))
}

fn fmt2(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v:.2}"))
}

fn fmt1(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v:.1}"))
}

pub fn render_table(spec: &TableSpec, set: &SummarySet) -> Result<Table> {
    let f = spec.field;
    let mut t = Table { spec: *spec, md_header: vec![], md_rows: vec![], csv_header: vec![], csv_rows: vec![] };
    match spec.kind {
        TableKind::CountsByModel => {
            let by_model = set.get(spec.id, &[Field::Model])?;
            let overall = set.get(spec.id, &[])?;
            let cats = category_order(f, by_model);
            t.md_header =
                ["Model".to_string(), "Total Images".to_string()].into_iter().chain(cats.iter().cloned()).collect();
            t.csv_header = vec!["model".into(), "total".into()];
            for c in &cats {
                t.csv_header.push(format!("{c}_count"));
                t.csv_header.push(format!("{c}_percent"));
            }
            let rows = by_model
                .iter()
                .map(|g| (key_of(g, Field::Model).to_string(), g))
                .chain(overall.iter().map(|g| ("Combined".to_string(), g)));
            for (name, g) in rows {
                let m = metric(g, f);
                let n = m.map_or(0, |m| m.n);
                let mut md = vec![name.clone(), thousands(n)];
                let mut csv = vec![name, n.to_string()];
                for c in &cats {
                    let k = count_of(m, c);
                    md.push(count_pct_md(k, n));
                    csv.push(k.to_string());
                    csv.push(pct1(k, n));
                }
                t.md_rows.push(md);
                t.csv_rows.push(csv);
            }
        }
        TableKind::CategoriesByModel => {
            let by_model = set.get(spec.id, &[Field::Model])?;
            let overall = set.get(spec.id, &[])?;
            let cats = category_order(f, overall);
            let cols: Vec<(String, &GroupSummary)> = by_model
                .iter()
                .map(|g| (key_of(g, Field::Model).to_string(), g))
                .chain(overall.iter().map(|g| ("Combined".to_string(), g)))
                .collect();
            t.md_header = vec!["Category".to_string()];
            t.csv_header = vec!["category".to_string()];
            for (name, g) in &cols {
                let n = metric(g, f).map_or(0, |m| m.n);
                t.md_header.push(format!("{name} (n={})", thousands(n)));
                t.csv_header.push(format!("{name}_count"));
                t.csv_header.push(format!("{name}_percent"));
            }
            for c in &cats {
                let mut md = vec![c.clone()];
                let mut csv = vec![c.clone()];
                for (_, g) in &cols {
                    let m = metric(g, f);
                    let n = m.map_or(0, |m| m.n);
                    let k = count_of(m, c);
                    md.push(count_pct_md(k, n));
                    csv.push(k.to_string());
                    csv.push(pct1(k, n));
                }
                t.md_rows.push(md);
                t.csv_rows.push(csv);
            }
        }
        TableKind::PercentByPromptModel => {
            let groups = set.get(spec.id, &[Field::Model, Field::Prompt])?;
            let cats = category_order(f, groups);
            let models = sorted_values(groups, Field::Model);
            t.md_header = vec!["Prompt".to_string()];
            t.csv_header = vec!["prompt".to_string()];
            for m in &models {
                for c in &cats {
                    t.md_header.push(format!("{m} {c} (%)"));
                    t.csv_header.push(format!("{m}_{c}_percent"));
                }
            }
            for p in sorted_values(groups, Field::Prompt) {
                let mut row = vec![p.clone()];
                for m in &models {
                    let ms = find(groups, m, Some(&p)).and_then(|g| metric(g, f));
                    let n = ms.map_or(0, |x| x.n);
                    for c in &cats {
                        row.push(if n == 0 { String::new() } else { pct1(count_of(ms, c), n) });
                    }
                }
                t.md_rows.push(row.clone());
                t.csv_rows.push(row);
            }
        }
        TableKind::MeanByPromptModel | TableKind::MeanSdByPromptModel => {
            let groups = set.get(spec.id, &[Field::Model, Field::Prompt])?;
            let models = sorted_values(groups, Field::Model);
            let with_sd = spec.kind == TableKind::MeanSdByPromptModel;
            t.md_header = vec!["Prompt".to_string()];
            t.csv_header = vec!["prompt".to_string()];
            for m in &models {
                t.md_header.push(if with_sd { format!("{m} (Mean ± SD)") } else { format!("{m} Mean") });
                t.csv_header.push(format!("{m}_mean"));
                if with_sd {
                    t.csv_header.push(format!("{m}_sd"));
                }
                t.csv_header.push(format!("{m}_n"));
            }
            let mut push_row = |label: String, cells: Vec<Option<&MetricSummary>>| {
                let mut md = vec![label.clone()];
                let mut csv = vec![label];
                for ms in cells {
                    let (mean, sd) = (ms.and_then(|x| x.mean), ms.and_then(|x| x.sd));
                    if with_sd {
                        md.push(match (mean, sd) {
                            (Some(a), Some(b)) => format!("{a:.2} ± {b:.2}"),
                            _ => String::new(),
                        });
                        csv.push(fmt2(mean));
                        csv.push(fmt2(sd));
                    } else {
                        md.push(fmt1(mean));
                        csv.push(fmt1(mean));
                    }
                    csv.push(ms.map_or(0, |x| x.n).to_string());
                }
                t.md_rows.push(md);
                t.csv_rows.push(csv);
            };
            for p in sorted_values(groups, Field::Prompt) {
                let cells = models.iter().map(|m| find(groups, m, Some(&p)).and_then(|g| metric(g, f))).collect();
                push_row(p, cells);
            }
            if spec.kind == TableKind::MeanByPromptModel {
                let by_model = set.get(spec.id, &[Field::Model])?;
                if !by_model.is_empty() {
                    let cells = models.iter().map(|m| find(by_model, m, None).and_then(|g| metric(g, f))).collect();
                    push_row("Overall Mean".to_string(), cells);
                }
            }
        }
        TableKind::DistributionByPromptModel => {
            let groups = set.get(spec.id, &[Field::Model, Field::Prompt])?;
            let cats = category_order(f, groups);
            t.md_header = ["Prompt".to_string(), "Model".to_string()].into_iter().chain(cats.iter().cloned()).collect();
            t.csv_header = ["prompt".to_string(), "model".to_string()]
                .into_iter()
                .chain(cats.iter().map(|c| format!("{c}_percent")))
                .chain(std::iter::once("n".to_string()))
                .collect();
            let mut ordered: Vec<&GroupSummary> = groups.iter().collect();
            ordered.sort_by(|a, b| {
                (key_of(a, Field::Prompt), key_of(a, Field::Model))
                    .cmp(&(key_of(b, Field::Prompt), key_of(b, Field::Model)))
            });
            for g in ordered {
                let ms = metric(g, f);
                let n = ms.map_or(0, |x| x.n);
                let mut row = vec![key_of(g, Field::Prompt).to_string(), key_of(g, Field::Model).to_string()];
                row.extend(cats.iter().map(|c| pct1(count_of(ms, c), n)));
                t.md_rows.push(row.clone());
                row.push(n.to_string());
                t.csv_rows.push(row);
            }
        }
    }
    Ok(t)
}

/// Writes one CSV and one Markdown file per table under `out/tables`.
pub fn emit_tables(set: &SummarySet, specs: &[TableSpec], out: &Path) -> Result<Vec<PathBuf>> {
    let dir = out.join("tables");
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut written = Vec::new();
    for spec in specs {
        let t = render_table(spec, set)?;
        let md = dir.join(format!("{}.md", spec.file_stem()));
        let csv = dir.join(format!("{}.csv", spec.file_stem()));
        std::fs::write(&md, t.to_markdown()).map_err(|e| Error::io(&md, e))?;
        std::fs::write(&csv, t.to_csv()?).map_err(|e| Error::io(&csv, e))?;
        written.push(csv);
        written.push(md);
    }
    Ok(written)
}

const PLOT_W: f64 = 720.0;
const PLOT_H: f64 = 360.0;
const MARGIN: f64 = 48.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// SVG canvas whose plotting group maps data units to pixels, so a bar's
/// `height` attribute is its value.
struct Svg {
    body: String,
    y_max: f64,
    slots: usize,
}

impl Svg {
    fn new(title: &str, y_label: &str, y_max: f64, slots: usize) -> Self {
        let mut body = String::new();
        let _ = writeln!(
            body,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{PLOT_W}" height="{PLOT_H}" viewBox="0 0 {PLOT_W} {PLOT_H}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(body, r#"<title>{}</title>"#, escape(title));
        let _ = writeln!(
            body,
            r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
            PLOT_W / 2.0,
            escape(title)
        );
        let _ = writeln!(
            body,
            r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">{}</text>"#,
            PLOT_H / 2.0,
            PLOT_H / 2.0,
            escape(y_label)
        );
        let sx = (PLOT_W - 2.0 * MARGIN) / slots.max(1) as f64;
        let sy = (PLOT_H - 2.0 * MARGIN) / y_max;
        let _ = writeln!(
            body,
            r#"<g class="data" transform="translate({MARGIN} {}) scale({sx} {})">"#,
            PLOT_H - MARGIN,
            -sy
        );
        Self { body, y_max, slots }
    }

    fn bar(&mut self, x: f64, width: f64, y0: f64, value: f64, fill: &str, attrs: &[(&str, String)]) {
        let extra: String = attrs.iter().map(|(k, v)| format!(r#" data-{k}="{}""#, escape(v))).collect();
        let _ = writeln!(
            self.body,
            r#"<rect x="{x}" y="{y0}" width="{width}" height="{value}" fill="{fill}" data-value="{value}"{extra}/>"#
        );
    }

    fn whisker(&mut self, x: f64, mean: f64, sd: f64, attrs: &[(&str, String)]) {
        let extra: String = attrs.iter().map(|(k, v)| format!(r#" data-{k}="{}""#, escape(v))).collect();
        let _ = writeln!(
            self.body,
            r#"<line class="whisker" x1="{x}" x2="{x}" y1="{}" y2="{}" stroke="black" stroke-width="0.02" vector-effect="non-scaling-stroke" data-mean="{mean}" data-sd="{sd}"{extra}/>"#,
            mean - sd,
            mean + sd
        );
    }

    fn finish(mut self, x_labels: &[String], legend: &[(String, String)]) -> String {
        self.body.push_str("</g>\n");
        let sx = (PLOT_W - 2.0 * MARGIN) / self.slots.max(1) as f64;
        let _ = writeln!(
            self.body,
            r#"<line x1="{MARGIN}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/>"#,
            PLOT_H - MARGIN,
            PLOT_W - MARGIN
        );
        let _ = writeln!(
            self.body,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            MARGIN - 4.0,
            MARGIN + 4.0,
            self.y_max
        );
        for (i, l) in x_labels.iter().enumerate() {
            let _ = writeln!(
                self.body,
                r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
                MARGIN + (i as f64 + 0.5) * sx,
                PLOT_H - MARGIN + 16.0,
                escape(l)
            );
        }
        for (i, (name, color)) in legend.iter().enumerate() {
            let y = 32.0 + 14.0 * i as f64;
            let _ = writeln!(
                self.body,
                r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/>"#,
                PLOT_W - 150.0,
                y - 9.0
            );
            let _ = writeln!(self.body, r#"<text x="{}" y="{y}">{}</text>"#, PLOT_W - 136.0, escape(name));
        }
        self.body.push_str("</svg>\n");
        self.body
    }
}

const SERIES_COLORS: [&str; 6] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"];

fn is_man(label: &str) -> bool {
    matches!(label.to_ascii_lowercase().as_str(), "man" | "men" | "male")
}

struct GroupedBars {
    prompts: Vec<String>,
    models: Vec<String>,
}

impl GroupedBars {
    fn new(groups: &[GroupSummary]) -> Self {
        Self { prompts: sorted_values(groups, Field::Prompt), models: sorted_values(groups, Field::Model) }
    }

    fn slot(&self, pi: usize, mi: usize) -> (f64, f64) {
        let w = 0.8 / self.models.len().max(1) as f64;
        (pi as f64 + 0.1 + mi as f64 * w, w)
    }

    fn legend(&self) -> Vec<(String, String)> {
        self.models
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), SERIES_COLORS[i % SERIES_COLORS.len()].to_string()))
            .collect()
    }
}

/// Percentage of subjects perceived as men, per prompt and model.
pub fn gender_plot(set: &SummarySet) -> Result<String> {
    let groups = set.get("F4", &[Field::Model, Field::Prompt])?;
    let gb = GroupedBars::new(groups);
    let mut svg = Svg::new("Subjects classified as men", "% men", 100.0, gb.prompts.len());
    for (pi, p) in gb.prompts.iter().enumerate() {
        for (mi, m) in gb.models.iter().enumerate() {
            let Some(ms) = find(groups, m, Some(p)).and_then(|g| g.metric(Field::Gender)) else { continue };
            let men: usize = ms.distribution.iter().filter(|c| is_man(&c.label)).map(|c| c.count).sum();
            let (x, w) = gb.slot(pi, mi);
            let value = percent(men, ms.n);
            svg.bar(
                x,
                w,
                0.0,
                value,
                SERIES_COLORS[mi % SERIES_COLORS.len()],
                &[("model", m.clone()), ("prompt", p.clone())],
            );
        }
    }
    Ok(svg.finish(&gb.prompts, &gb.legend()))
}

/// Mean scale position per prompt and model with ±1 sd whiskers.
pub fn mean_plot(set: &SummarySet, field: Field, palettes: &PaletteSet) -> Result<String> {
    let groups = set.get("F5", &[Field::Model, Field::Prompt])?;
    let gb = GroupedBars::new(groups);
    let scale = field.scale_name().unwrap_or("");
    let y_max = palettes.get(scale).map_or(10.0, |p| p.entries.len() as f64);
    let mut svg = Svg::new(
        &format!("Mean {scale} by prompt and model"),
        &format!("{scale} (mean ± sd)"),
        y_max,
        gb.prompts.len(),
    );
    for (pi, p) in gb.prompts.iter().enumerate() {
        for (mi, m) in gb.models.iter().enumerate() {
            let Some(ms) = find(groups, m, Some(p)).and_then(|g| g.metric(field)) else { continue };
            let (Some(mean), Some(sd)) = (ms.mean, ms.sd) else { continue };
            let (x, w) = gb.slot(pi, mi);
            let attrs = [("model", m.clone()), ("prompt", p.clone())];
            svg.bar(x, w, 0.0, mean, SERIES_COLORS[mi % SERIES_COLORS.len()], &attrs);
            svg.whisker(x + w / 2.0, mean, sd, &attrs);
        }
    }
    Ok(svg.finish(&gb.prompts, &gb.legend()))
}

/// Stacked category percentages per (prompt, model).
pub fn distribution_plot(set: &SummarySet, field: Field, palettes: &PaletteSet) -> Result<String> {
    let groups = set.get("F6", &[Field::Model, Field::Prompt])?;
    let cats = category_order(field, groups);
    let mut ordered: Vec<&GroupSummary> = groups.iter().collect();
    ordered.sort_by(|a, b| {
        (key_of(a, Field::Prompt), key_of(a, Field::Model)).cmp(&(key_of(b, Field::Prompt), key_of(b, Field::Model)))
    });
    let scale = field.scale_name().unwrap_or("");
    let palette = palettes.get(scale);
    let color_of = |label: &str, i: usize| {
        palette
            .and_then(|p| p.entries.iter().find(|e| e.label == label))
            .map_or_else(|| SERIES_COLORS[i % SERIES_COLORS.len()].to_string(), |e| format!("#{}", e.srgb.to_hex()))
    };
    let mut svg = Svg::new(&format!("{scale} distribution by prompt and model"), "%", 100.0, ordered.len());
    let mut labels = Vec::new();
    for (gi, g) in ordered.iter().enumerate() {
        let ms = g.metric(field);
        let n = ms.map_or(0, |m| m.n);
        let mut y0 = 0.0;
        for (ci, c) in cats.iter().enumerate() {
            let v = percent(count_of(ms, c), n);
            if v > 0.0 {
                let attrs = [
                    ("model", key_of(g, Field::Model).to_string()),
                    ("prompt", key_of(g, Field::Prompt).to_string()),
                    ("category", c.clone()),
                ];
                svg.bar(gi as f64 + 0.15, 0.7, y0, v, &color_of(c, ci), &attrs);
            }
            y0 += v;
        }
        labels.push(format!("{} / {}", key_of(g, Field::Prompt), key_of(g, Field::Model)));
    }
    let legend: Vec<(String, String)> = cats.iter().enumerate().map(|(i, c)| (c.clone(), color_of(c, i))).collect();
    Ok(svg.finish(&labels, &legend))
}

/// Reference swatches of every palette.
pub fn palette_plot(palettes: &PaletteSet) -> String {
    let rows = palettes.palettes.len();
    let mut s = String::new();
    let h = 40.0 + 60.0 * rows as f64;
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{PLOT_W}" height="{h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, "<title>Reference palettes</title>");
    for (ri, p) in palettes.palettes.iter().enumerate() {
        let y = 30.0 + 60.0 * ri as f64;
        let _ = writeln!(s, r#"<text x="8" y="{}">{}</text>"#, y + 24.0, escape(&p.name));
        let w = (PLOT_W - 80.0) / p.entries.len() as f64;
        for (i, e) in p.entries.iter().enumerate() {
            let x = 70.0 + i as f64 * w;
            let _ = writeln!(
                s,
                "<rect x=\"{x}\" y=\"{y}\" width=\"{}\" height=\"36\" fill=\"#{}\" data-scale=\"{}\" data-label=\"{}\" data-l=\"{}\" data-a=\"{}\" data-b=\"{}\"/>",
                w - 2.0,
                e.srgb.to_hex(),
                escape(&p.name),
                escape(&e.label),
                e.lab.l,
                e.lab.a,
                e.lab.b
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
                x + w / 2.0,
                y + 50.0,
                escape(&e.label)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Writes the palette, gender, MST/PERLA mean and FST distribution plots
/// under `out/plots`.
pub fn emit_plots(set: &SummarySet, palettes: &PaletteSet, out: &Path) -> Result<Vec<PathBuf>> {
    let dir = out.join("plots");
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let files = [
        ("F3_palettes.svg", palette_plot(palettes)),
        ("F4_gender_men.svg", gender_plot(set)?),
        ("F5_mst_means.svg", mean_plot(set, Field::Mst, palettes)?),
        ("F5_perla_means.svg", mean_plot(set, Field::Perla, palettes)?),
        ("F6_fst_distribution.svg", distribution_plot(set, Field::Fst, palettes)?),
    ];
    let mut written = Vec::new();
    for (name, body) in files {
        let p = dir.join(name);
        std::fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
        written.push(p);
    }
    Ok(written)
}

/// Tables and plots for a record set.
pub fn emit_report(records: &[AnalysisRecord], palettes: &PaletteSet, out: &Path) -> Result<Vec<PathBuf>> {
    let set = SummarySet::standard(records, palettes)?;
    let mut files = emit_tables(&set, &STANDARD_TABLES, out)?;
    files.extend(emit_plots(&set, palettes, out)?);
    Ok(files)
}
