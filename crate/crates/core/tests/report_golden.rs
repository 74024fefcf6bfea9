mod common;

use std::collections::BTreeMap;
use std::fs;

use skinaudit_core::report::{emit_report, render_table, SummarySet, Table, STANDARD_TABLES};
use skinaudit_core::scales::PaletteSet;

fn tables() -> BTreeMap<&'static str, Table> {
    let pal = PaletteSet::builtin();
    let set = SummarySet::standard(&common::golden_records(&pal), &pal).unwrap();
    STANDARD_TABLES.iter().map(|s| (s.id, render_table(s, &set).unwrap())).collect()
}

fn row(t: &Table, r: usize, cols: usize) -> Vec<&str> {
    (0..cols).map(|c| t.cell(r, c)).collect()
}

#[test]
fn race_table_matches_published_counts() {
    let t = &tables()["T3"];
    let by_label: BTreeMap<&str, Vec<&str>> = (0..5).map(|r| (t.cell(r, 0), row(t, r, 4)[1..].to_vec())).collect();
    assert_eq!(by_label["white"], ["1,550 (96.9%)", "1,535 (95.9%)", "3,085 (96.4%)"]);
    assert_eq!(by_label["latino hispanic"], ["6 (0.4%)", "42 (2.6%)", "48 (1.5%)"]);
    assert_eq!(by_label["middle eastern"], ["0 (0.0%)", "23 (1.4%)", "23 (0.7%)"]);
    assert_eq!(by_label["black"], ["38 (2.4%)", "0 (0.0%)", "38 (1.2%)"]);
    assert_eq!(by_label["asian"], ["6 (0.4%)", "0 (0.0%)", "6 (0.2%)"]);
}

#[test]
fn age_table_matches_published_means() {
    let t = &tables()["T4"];
    let want = [["33.7", "24.1"], ["31.2", "28.1"], ["32.9", "25.3"], ["29.0", "28.5"], ["31.7", "26.5"]];
    for (r, w) in want.iter().enumerate() {
        assert_eq!(row(t, r, 3)[1..], w[..], "row {r}");
    }
    assert_eq!(t.cell(4, 0), "Overall Mean");
}

#[test]
fn markdown_and_csv_agree() {
    for (id, t) in tables() {
        let md = t.to_markdown();
        let csv = t.to_csv().unwrap();
        let mut reader = csv::Reader::from_reader(csv.as_bytes());
        let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), t.md_rows.len(), "{id}");
        assert_eq!(md.lines().filter(|l| l.starts_with("| ")).count(), t.md_rows.len() + 2, "{id}");
    }
}

fn attr(tag: &str, name: &str) -> Option<String> {
    let key = format!(" {name}=\"");
    let start = tag.find(&key)? + key.len();
    Some(tag[start..].split('"').next()?.to_string())
}

#[test]
fn emitted_plots_carry_table_values() {
    let pal = PaletteSet::builtin();
    let dir = tempfile::tempdir().unwrap();
    let files = emit_report(&common::golden_records(&pal), &pal, dir.path()).unwrap();
    assert_eq!(files.len(), 19);

    let gender = fs::read_to_string(dir.path().join("plots/F4_gender_men.svg")).unwrap();
    let mut men = BTreeMap::new();
    for tag in gender.lines().filter(|l| l.contains("data-value")) {
        let key = (attr(tag, "data-model").unwrap(), attr(tag, "data-prompt").unwrap());
        men.insert(key, attr(tag, "data-value").unwrap().parse::<f64>().unwrap());
    }
    assert_eq!(men.len(), 8);
    for (mi, model) in common::MODELS.iter().enumerate() {
        for (pi, prompt) in common::PROMPTS.iter().enumerate() {
            let want = common::MEN[mi][pi] as f64 / 4.0;
            let got = men[&(model.to_string(), prompt.to_string())];
            assert!((got - want).abs() < 1e-9, "{model} / {prompt}: {got}");
        }
    }

    let mst = fs::read_to_string(dir.path().join("plots/F5_mst_means.svg")).unwrap();
    let means: Vec<String> =
        mst.lines().filter_map(|l| attr(l, "data-mean").map(|m| format!("{:.2}", m.parse::<f64>().unwrap()))).collect();
    assert_eq!(means.len(), 8);
    assert!(means.contains(&"3.50".to_string()));
    assert!(means.contains(&"5.14".to_string()));

    let fst = fs::read_to_string(dir.path().join("plots/F6_fst_distribution.svg")).unwrap();
    let stacked: f64 = fst
        .lines()
        .filter(|l| {
            attr(l, "data-model").as_deref() == Some("GPT")
                && attr(l, "data-prompt").as_deref() == Some("a person, photorealistic")
        })
        .filter_map(|l| attr(l, "data-value")?.parse::<f64>().ok())
        .sum();
    assert!((stacked - 100.0).abs() < 1e-9, "{stacked}");

    let palettes = fs::read_to_string(dir.path().join("plots/F3_palettes.svg")).unwrap();
    assert_eq!(palettes.matches("data-scale=").count(), 10 + 11 + 6);
}
