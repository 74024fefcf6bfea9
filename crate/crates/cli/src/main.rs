use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use skinaudit_core::fixtures::write_fixture_corpus;
use skinaudit_core::mask::LandmarkTopology;
use skinaudit_core::pipeline::{run_corpus, write_run, Analyzer, CorpusManifest, Execution, PipelineConfig};
use skinaudit_core::record::read_records;
use skinaudit_core::report::{emit_report, REPORT_FIELDS};
use skinaudit_core::scales::PaletteSet;
use skinaudit_core::stats::{model_comparisons, summarize, Field};

/// Skin-tone and demographic audit of generated portrait corpora.
#[derive(Parser)]
#[command(name = "skinaudit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Measure every manifest entry and write JSON Lines records.
    Analyze {
        #[arg(long)]
        manifest: PathBuf,
        /// Record file; the CSV projection and run summary are written next to it.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        palettes: Option<PathBuf>,
        #[arg(long)]
        topology: Option<PathBuf>,
        /// Worker threads; 1 runs sequentially. Defaults to the available cores.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Grouped summaries and model comparison tests.
    Stats {
        #[arg(long)]
        records: PathBuf,
        /// Comma-separated grouping fields, e.g. `model,prompt`.
        #[arg(long, default_value = "model,prompt")]
        group_by: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        palettes: Option<PathBuf>,
    },
    /// Tables T1-T7 as Markdown and CSV, plus SVG plots.
    Report {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        palettes: Option<PathBuf>,
    },
    /// Write the synthetic 10-image test corpus.
    Fixtures {
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_palettes(path: Option<&Path>) -> Result<PaletteSet> {
    match path {
        Some(p) => PaletteSet::load(p).with_context(|| format!("loading palettes from {}", p.display())),
        None => Ok(PaletteSet::builtin()),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}

fn analyze(
    manifest: &Path,
    out: &Path,
    config: Option<&Path>,
    palettes: Option<&Path>,
    topology: Option<&Path>,
    jobs: Option<usize>,
) -> Result<()> {
    let config = match config {
        Some(p) => PipelineConfig::load(p).with_context(|| format!("loading config from {}", p.display()))?,
        None => PipelineConfig::default(),
    };
    let topology = match topology {
        Some(p) => LandmarkTopology::load(p).with_context(|| format!("loading topology from {}", p.display()))?,
        None => LandmarkTopology::builtin(),
    };
    let analyzer = Analyzer::new(config, load_palettes(palettes)?, topology)?;
    let manifest =
        CorpusManifest::load(manifest).with_context(|| format!("reading manifest {}", manifest.display()))?;

    let jobs = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        bail!("--jobs must be at least 1");
    }
    let run = run_corpus(&manifest, &analyzer, Execution::from_jobs(jobs));
    write_run(&run, out)?;
    let s = &run.summary;
    eprintln!("{} images: {} analyzed, {} skipped -> {}", s.total, s.ok, s.skipped, out.display());
    for (reason, n) in s.skipped_by_reason.iter().filter(|(_, n)| **n > 0) {
        eprintln!("  skipped {reason}: {n}");
    }
    Ok(())
}

fn stats(records: &Path, group_by: &str, out: &Path, palettes: Option<&Path>) -> Result<()> {
    let palettes = load_palettes(palettes)?;
    let records = read_records(records).with_context(|| format!("reading {}", records.display()))?;
    let group_by = Field::parse_list(group_by)?;
    let summary = summarize(&records, &group_by, &REPORT_FIELDS, &palettes)?;
    create_dir(out)?;
    write_json(&out.join("summary.json"), &summary)?;
    write_json(&out.join("tests.json"), &model_comparisons(&records))?;
    eprintln!("{} records in {} groups -> {}", records.len(), summary.len(), out.display());
    Ok(())
}

fn report(records: &Path, out: &Path, palettes: Option<&Path>) -> Result<()> {
    let palettes = load_palettes(palettes)?;
    let records = read_records(records).with_context(|| format!("reading {}", records.display()))?;
    create_dir(out)?;
    let files = emit_report(&records, &palettes, out)?;
    eprintln!("{} files -> {}", files.len(), out.display());
    Ok(())
}

fn fixtures(out: &Path) -> Result<()> {
    create_dir(out)?;
    let ids = write_fixture_corpus(out, &PaletteSet::builtin(), &LandmarkTopology::builtin())?;
    eprintln!("{} fixtures -> {}", ids.len(), out.join("manifest.csv").display());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Analyze { manifest, out, config, palettes, topology, jobs } => {
            analyze(&manifest, &out, config.as_deref(), palettes.as_deref(), topology.as_deref(), jobs)
        }
        Command::Stats { records, group_by, out, palettes } => stats(&records, &group_by, &out, palettes.as_deref()),
        Command::Report { records, out, palettes } => report(&records, &out, palettes.as_deref()),
        Command::Fixtures { out } => fixtures(&out),
    }
}
