//! Command-line front door. Every subcommand reads and writes file artifacts
//! (JSON/CSV/SVG) so stages can be rerun and inspected independently; outputs
//! are byte-deterministic for identical inputs regardless of thread count.

use crate::dedupe::{cluster_refs, clusters_to_csv, MatchConfig, RefCluster};
use crate::ingest::{parse_export_file, union, Corpus, FormatHint, IngestError};
use crate::matrix::{build_matrix, MultiRpysMatrix, SegmentSpec};
use crate::render::{render_heatmap, render_spectrogram, Palette, PlotStyle};
use crate::spectrum::{build_spectrum, build_spectrum_from_refs, detect_peaks, spectrum_to_csv, top_references, Spectrum};
use crate::stats::StatsReport;
use crate::validate::{evaluate_articles, evaluate_years, load_milestones_file, SearchData, ValidationReport};
use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::path::{Path, PathBuf};

/// Citation spectroscopy over Web of Science exports.
#[derive(Parser)]
#[command(name = "rpys-kit", version, about)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct DedupeOpts {
    /// Similarity threshold for clustering cited references.
    #[arg(long, default_value_t = 0.75)]
    threshold: f64,
    /// Ignore DOIs when matching references.
    #[arg(long)]
    no_doi_override: bool,
    /// Let unknown-year references cluster among themselves instead of
    /// staying singletons.
    #[arg(long)]
    merge_unknown_years: bool,
}

impl DedupeOpts {
    fn config(&self) -> MatchConfig {
        MatchConfig {
            string_sim_threshold: self.threshold,
            require_year_block: !self.merge_unknown_years,
            doi_overrides: !self.no_doi_override,
        }
    }
}

#[derive(Args, Clone)]
struct SegmentOpts {
    /// Minimum records a citing-year segment needs to enter the matrix.
    #[arg(long, default_value_t = 1)]
    min_segment_records: usize,
    /// Inclusive citing-year bounds, as LO:HI.
    #[arg(long, value_parser = parse_span)]
    citing_years: Option<(i32, i32)>,
}

impl SegmentOpts {
    fn spec(&self) -> SegmentSpec {
        SegmentSpec { min_segment_records: self.min_segment_records.max(1), citing_year_range: self.citing_years }
    }
}

#[derive(Args, Clone)]
struct PlotOpts {
    #[arg(long, default_value_t = 960)]
    width: u32,
    #[arg(long, default_value_t = 600)]
    height: u32,
    /// Sequential palette for heatmap cells (viridis|greys).
    #[arg(long, default_value = "viridis")]
    palette: String,
    /// Years between axis ticks.
    #[arg(long, default_value_t = 10)]
    tick_step: i32,
}

impl PlotOpts {
    fn style(&self) -> Result<PlotStyle> {
        Ok(PlotStyle {
            width: self.width,
            height: self.height,
            color_map: self.palette.parse::<Palette>()?,
            axis_label_step: self.tick_step,
            missing_cell_color: "#dddddd".to_string(),
        })
    }
}

fn parse_span(s: &str) -> std::result::Result<(i32, i32), String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected LO:HI, got {s:?}"))?;
    let lo: i32 = lo.trim().parse().map_err(|_| format!("bad year {lo:?}"))?;
    let hi: i32 = hi.trim().parse().map_err(|_| format!("bad year {hi:?}"))?;
    if lo > hi {
        return Err(format!("span {lo}:{hi} is not ordered"));
    }
    Ok((lo, hi))
}

fn parse_labeled_path(s: &str) -> std::result::Result<(String, PathBuf), String> {
    let (label, path) = s.split_once('=').ok_or_else(|| format!("expected LABEL=PATH, got {s:?}"))?;
    if label.trim().is_empty() {
        return Err("empty search label".to_string());
    }
    Ok((label.trim().to_string(), PathBuf::from(path)))
}

#[derive(Subcommand)]
enum Command {
    /// Parse one or more export files and write their union as corpus JSON.
    Ingest {
        /// Export files (field-tagged or tab-delimited).
        files: Vec<PathBuf>,
        #[arg(long, default_value = "auto")]
        format: String,
        /// Output corpus JSON path.
        #[arg(short, long)]
        out: PathBuf,
        /// Optional JSON ingest summary path.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Cluster cited references and write the cluster table CSV.
    Dedupe {
        corpus: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        dedupe: DedupeOpts,
    },
    /// Write the standard RPYS spectrum CSV.
    Spectrum {
        corpus: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Count raw references without disambiguation.
        #[arg(long)]
        no_dedupe: bool,
        #[command(flatten)]
        dedupe: DedupeOpts,
    },
    /// Write detected peak years (with top referenced works) as JSON.
    Peaks {
        corpus: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Works listed per peak year.
        #[arg(short = 'n', long, default_value_t = 10)]
        top_n: usize,
        #[command(flatten)]
        dedupe: DedupeOpts,
    },
    /// Write the most referenced works of one year as JSON.
    Toprefs {
        corpus: PathBuf,
        #[arg(long)]
        year: i32,
        #[arg(short = 'n', long, default_value_t = 10)]
        top_n: usize,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        dedupe: DedupeOpts,
    },
    /// Write the multi-RPYS matrix as long-format CSV (and optional JSON).
    Multi {
        corpus: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Optional dense JSON matrix path.
        #[arg(long)]
        json: Option<PathBuf>,
        #[command(flatten)]
        dedupe: DedupeOpts,
        #[command(flatten)]
        segments: SegmentOpts,
    },
    /// ANOVA and Tukey-HSD year effects over the multi-RPYS matrix.
    Stats {
        corpus: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Candidate milestone years selected.
        #[arg(long, default_value_t = 10)]
        top_k: usize,
        #[command(flatten)]
        dedupe: DedupeOpts,
        #[command(flatten)]
        segments: SegmentOpts,
    },
    /// Validate candidate years and milestone articles against an expert list.
    Validate {
        corpus: PathBuf,
        #[arg(long)]
        milestones: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Per-search corpus JSON files as LABEL=PATH; defaults to the main
        /// corpus as a single search.
        #[arg(long = "search", value_parser = parse_labeled_path)]
        searches: Vec<(String, PathBuf)>,
        /// Inclusive span for the chance baseline, as LO:HI; defaults to the
        /// milestone year range.
        #[arg(long, value_parser = parse_span)]
        span: Option<(i32, i32)>,
        #[arg(long, default_value_t = 10)]
        top_k: usize,
        /// Also print the milestone-by-search rank grid.
        #[arg(long)]
        text: bool,
        #[command(flatten)]
        dedupe: DedupeOpts,
        #[command(flatten)]
        segments: SegmentOpts,
    },
    /// Render the spectrogram and heatmap SVGs.
    Plot {
        corpus: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        dedupe: DedupeOpts,
        #[command(flatten)]
        segments: SegmentOpts,
        #[command(flatten)]
        plot: PlotOpts,
    },
    /// Run every stage and write all artifacts into a directory.
    Pipeline {
        corpus: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Expert milestone list; enables the validation report.
        #[arg(long)]
        milestones: Option<PathBuf>,
        /// Per-search corpus JSON files as LABEL=PATH for article validation.
        #[arg(long = "search", value_parser = parse_labeled_path)]
        searches: Vec<(String, PathBuf)>,
        #[arg(long, value_parser = parse_span)]
        span: Option<(i32, i32)>,
        #[arg(long, default_value_t = 10)]
        top_k: usize,
        #[arg(short = 'n', long, default_value_t = 10)]
        top_n: usize,
        #[command(flatten)]
        dedupe: DedupeOpts,
        #[command(flatten)]
        segments: SegmentOpts,
        #[command(flatten)]
        plot: PlotOpts,
    },
}

/// Error carrying a process exit code: 2 for missing/unreadable inputs,
/// 1 for everything else.
pub struct CliFailure {
    pub code: i32,
    pub error: anyhow::Error,
}

fn classify(error: anyhow::Error) -> CliFailure {
    let mut code = 1;
    for cause in error.chain() {
        if let Some(io) = cause.downcast_ref::<std::io::Error>() {
            if io.kind() == std::io::ErrorKind::NotFound {
                code = 2;
            }
        }
        if let Some(IngestError::Io { source, .. }) = cause.downcast_ref::<IngestError>() {
            if source.kind() == std::io::ErrorKind::NotFound {
                code = 2;
            }
        }
    }
    CliFailure { code, error }
}

/// Entry point used by the binary.
pub fn main() -> i32 {
    if let Ok(threads) = std::env::var("RPYS_KIT_THREADS") {
        if let Ok(n) = threads.trim().parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => 0,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error);
            failure.code
        }
    }
}

fn run(cli: Cli) -> std::result::Result<(), CliFailure> {
    dispatch(cli).map_err(classify)
}

#[derive(Serialize)]
struct IngestSummary {
    files: Vec<IngestFileSummary>,
    union_records: usize,
    total_refs: usize,
    warnings: usize,
}

#[derive(Serialize)]
struct IngestFileSummary {
    path: String,
    format: String,
    records: usize,
    refs: usize,
    warnings: usize,
}

fn load_corpus(path: &Path) -> Result<Corpus> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading corpus {}", path.display()))?;
    Corpus::from_json(&text).with_context(|| format!("parsing corpus JSON {}", path.display()))
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable artifact");
    s.push('\n');
    s
}

fn clusters_for(corpus: &Corpus, cfg: &MatchConfig) -> Vec<RefCluster> {
    cluster_refs(&corpus.all_refs(), cfg)
}

#[derive(Serialize)]
struct PeakEntry {
    year: i32,
    deviation: f64,
    top_references: Vec<TopRefEntry>,
}

#[derive(Serialize)]
struct TopRefEntry {
    rank: usize,
    count: usize,
    cluster_id: u64,
    first_author: Option<String>,
    source: Option<String>,
    original: String,
}

fn peak_entries(spectrum: &Spectrum, clusters: &[RefCluster], top_n: usize) -> Vec<PeakEntry> {
    detect_peaks(spectrum)
        .into_iter()
        .map(|year| PeakEntry {
            year,
            deviation: spectrum.deviation_at(year).unwrap_or(0.0),
            top_references: top_references(clusters, year, top_n)
                .entries
                .into_iter()
                .map(|e| TopRefEntry {
                    rank: e.rank,
                    count: e.count,
                    cluster_id: e.cluster.cluster_id,
                    first_author: e.cluster.representative.first_author.clone(),
                    source: e.cluster.representative.source.clone(),
                    original: e.cluster.representative.original.clone(),
                })
                .collect(),
        })
        .collect()
}

fn ingest_files(files: &[PathBuf], format: &str) -> Result<(Corpus, IngestSummary)> {
    if files.is_empty() {
        return Err(anyhow!("no input files given"));
    }
    let hint: FormatHint = format.parse().map_err(|e: String| anyhow!(e))?;
    let outcomes = files
        .iter()
        .map(|path| parse_export_file(path, hint).with_context(|| format!("parsing {}", path.display())))
        .collect::<Result<Vec<_>>>()?;
    let corpora: Vec<Corpus> = outcomes.iter().map(|o| o.corpus.clone()).collect();
    let merged = union(&corpora);
    let summary = IngestSummary {
        files: outcomes
            .iter()
            .map(|o| {
                let p = &o.corpus.provenance[0];
                IngestFileSummary {
                    path: p.path.clone(),
                    format: p.format.to_string(),
                    records: p.record_count,
                    refs: o.ref_count,
                    warnings: o.warnings.len(),
                }
            })
            .collect(),
        union_records: merged.records.len(),
        total_refs: merged.records.iter().map(|r| r.cited_refs.len()).sum(),
        warnings: outcomes.iter().map(|o| o.warnings.len()).sum(),
    };
    for outcome in &outcomes {
        for w in &outcome.warnings {
            eprintln!("warning: {} line {}: {}", outcome.corpus.provenance[0].path, w.line, w.message);
        }
    }
    Ok((merged, summary))
}

fn search_data(label: &str, corpus: &Corpus, cfg: &MatchConfig) -> SearchData {
    let clusters = clusters_for(corpus, cfg);
    SearchData { label: label.to_string(), spectrum: build_spectrum(&clusters), clusters }
}

fn build_validation(
    corpus: &Corpus,
    milestones_path: &Path,
    searches: &[(String, PathBuf)],
    span: Option<(i32, i32)>,
    top_k: usize,
    cfg: &MatchConfig,
    spec: &SegmentSpec,
) -> Result<ValidationReport> {
    let milestones = load_milestones_file(milestones_path)?;
    if milestones.is_empty() {
        return Err(anyhow!("milestone list {} is empty", milestones_path.display()));
    }
    let clusters = clusters_for(corpus, cfg);
    let matrix = build_matrix(corpus, &clusters, spec)?;
    let candidates = crate::stats::top_milestone_years(&matrix, top_k)?;
    let span = span.unwrap_or_else(|| {
        let lo = milestones.iter().map(|m| m.year).min().unwrap();
        let hi = milestones.iter().map(|m| m.year).max().unwrap();
        (lo, hi)
    });
    let years = evaluate_years(&candidates, &milestones, span)?;

    let search_sets: Vec<SearchData> = if searches.is_empty() {
        vec![SearchData { label: "all".to_string(), spectrum: build_spectrum(&clusters), clusters }]
    } else {
        searches
            .iter()
            .map(|(label, path)| Ok(search_data(label, &load_corpus(path)?, cfg)))
            .collect::<Result<Vec<_>>>()?
    };
    let articles = evaluate_articles(&search_sets, &milestones);
    Ok(ValidationReport { years, articles })
}

// Tracks written artifacts so a failed stage removes its partial outputs.
struct StagedOutputs {
    written: Vec<PathBuf>,
}

impl StagedOutputs {
    fn new() -> Self {
        StagedOutputs { written: Vec::new() }
    }
    fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        write_output(path, bytes)?;
        self.written.push(path.to_path_buf());
        Ok(())
    }
    fn discard_all(&self) {
        for path in &self.written {
            let _ = std::fs::remove_file(path);
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { files, format, out, summary } => {
            let (corpus, summary_data) = ingest_files(&files, &format)?;
            write_output(&out, corpus.to_json().as_bytes())?;
            for f in &summary_data.files {
                println!("{}: {} records, {} refs ({}) [{} warnings]", f.path, f.records, f.refs, f.format, f.warnings);
            }
            println!("union: {} unique records -> {}", summary_data.union_records, out.display());
            if let Some(path) = summary {
                write_output(&path, to_pretty_json(&summary_data).as_bytes())?;
            }
            Ok(())
        }
        Command::Dedupe { corpus, out, dedupe } => {
            let corpus = load_corpus(&corpus)?;
            let clusters = clusters_for(&corpus, &dedupe.config());
            write_output(&out, clusters_to_csv(&clusters).as_bytes())?;
            println!("{} references -> {} clusters -> {}", corpus.all_refs().len(), clusters.len(), out.display());
            Ok(())
        }
        Command::Spectrum { corpus, out, no_dedupe, dedupe } => {
            let corpus = load_corpus(&corpus)?;
            let spectrum = if no_dedupe {
                build_spectrum_from_refs(&corpus.all_refs())
            } else {
                build_spectrum(&clusters_for(&corpus, &dedupe.config()))
            };
            write_output(&out, spectrum_to_csv(&spectrum).as_bytes())?;
            println!("spectrum over {} years -> {}", spectrum.years.len(), out.display());
            Ok(())
        }
        Command::Peaks { corpus, out, top_n, dedupe } => {
            let corpus = load_corpus(&corpus)?;
            let clusters = clusters_for(&corpus, &dedupe.config());
            let spectrum = build_spectrum(&clusters);
            let entries = peak_entries(&spectrum, &clusters, top_n);
            write_output(&out, to_pretty_json(&entries).as_bytes())?;
            println!("{} peak years -> {}", entries.len(), out.display());
            Ok(())
        }
        Command::Toprefs { corpus, year, top_n, out, dedupe } => {
            let corpus = load_corpus(&corpus)?;
            let clusters = clusters_for(&corpus, &dedupe.config());
            let ranked = top_references(&clusters, year, top_n);
            let entries: Vec<TopRefEntry> = ranked
                .entries
                .into_iter()
                .map(|e| TopRefEntry {
                    rank: e.rank,
                    count: e.count,
                    cluster_id: e.cluster.cluster_id,
                    first_author: e.cluster.representative.first_author.clone(),
                    source: e.cluster.representative.source.clone(),
                    original: e.cluster.representative.original.clone(),
                })
                .collect();
            write_output(&out, to_pretty_json(&entries).as_bytes())?;
            println!("{} works of {year} -> {}", entries.len(), out.display());
            Ok(())
        }
        Command::Multi { corpus, out, json, dedupe, segments } => {
            let corpus = load_corpus(&corpus)?;
            let clusters = clusters_for(&corpus, &dedupe.config());
            let matrix = build_matrix(&corpus, &clusters, &segments.spec())?;
            write_output(&out, matrix.to_csv().as_bytes())?;
            if let Some(path) = json {
                write_output(&path, to_pretty_json(&matrix).as_bytes())?;
            }
            println!("{} segments x {} cited years -> {}", matrix.citing_years.len(), matrix.cited_years.len(), out.display());
            Ok(())
        }
        Command::Stats { corpus, out, top_k, dedupe, segments } => {
            let corpus = load_corpus(&corpus)?;
            let clusters = clusters_for(&corpus, &dedupe.config());
            let matrix = build_matrix(&corpus, &clusters, &segments.spec())?;
            let report = StatsReport::build(&matrix, top_k)?;
            write_output(&out, to_pretty_json(&report).as_bytes())?;
            print!("{}", report.to_text());
            Ok(())
        }
        Command::Validate { corpus, milestones, out, searches, span, top_k, text, dedupe, segments } => {
            let corpus = load_corpus(&corpus)?;
            let report =
                build_validation(&corpus, &milestones, &searches, span, top_k, &dedupe.config(), &segments.spec())?;
            write_output(&out, report.to_json().as_bytes())?;
            if text {
                print!("{}", report.to_text());
            } else {
                println!(
                    "year hit rate {}, captured {}/{} articles -> {}",
                    report.years.year_hit_rate.map_or("n/a".into(), |r| format!("{r:.2}")),
                    report.articles.captured,
                    report.articles.total_articles,
                    out.display()
                );
            }
            Ok(())
        }
        Command::Plot { corpus, out_dir, dedupe, segments, plot } => {
            let corpus = load_corpus(&corpus)?;
            let style = plot.style()?;
            let clusters = clusters_for(&corpus, &dedupe.config());
            let spectrum = build_spectrum(&clusters);
            let peaks = detect_peaks(&spectrum);
            write_output(&out_dir.join("spectrum.svg"), render_spectrogram(&spectrum, &peaks, &style)?.as_bytes())?;
            let matrix = build_matrix(&corpus, &clusters, &segments.spec())?;
            write_output(&out_dir.join("heatmap.svg"), render_heatmap(&matrix, &style)?.as_bytes())?;
            println!("wrote {}", out_dir.join("spectrum.svg").display());
            println!("wrote {}", out_dir.join("heatmap.svg").display());
            Ok(())
        }
        Command::Pipeline { corpus, out_dir, milestones, searches, span, top_k, top_n, dedupe, segments, plot } => {
            let corpus = load_corpus(&corpus)?;
            let style = plot.style()?;
            let mut staged = StagedOutputs::new();
            let result = run_pipeline(
                &corpus, &out_dir, milestones.as_deref(), &searches, span, top_k, top_n,
                &dedupe.config(), &segments.spec(), &style, &mut staged,
            );
            if let Err(e) = result {
                staged.discard_all();
                return Err(e);
            }
            Ok(())
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_pipeline(
    corpus: &Corpus,
    out_dir: &Path,
    milestones: Option<&Path>,
    searches: &[(String, PathBuf)],
    span: Option<(i32, i32)>,
    top_k: usize,
    top_n: usize,
    cfg: &MatchConfig,
    spec: &SegmentSpec,
    style: &PlotStyle,
    staged: &mut StagedOutputs,
) -> Result<()> {
    let stage = |name: &'static str| move |e: anyhow::Error| anyhow!("stage {name} failed: {e:#}");

    let clusters = clusters_for(corpus, cfg);
    staged.write(&out_dir.join("clusters.csv"), clusters_to_csv(&clusters).as_bytes()).map_err(stage("dedupe"))?;

    let spectrum = build_spectrum(&clusters);
    staged.write(&out_dir.join("spectrum.csv"), spectrum_to_csv(&spectrum).as_bytes()).map_err(stage("spectrum"))?;

    let peaks = peak_entries(&spectrum, &clusters, top_n);
    staged.write(&out_dir.join("peaks.json"), to_pretty_json(&peaks).as_bytes()).map_err(stage("peaks"))?;

    let matrix: MultiRpysMatrix =
        build_matrix(corpus, &clusters, spec).map_err(|e| anyhow!("stage matrix failed: {e}"))?;
    staged.write(&out_dir.join("matrix.csv"), matrix.to_csv().as_bytes()).map_err(stage("matrix"))?;

    let stats = StatsReport::build(&matrix, top_k).map_err(|e| anyhow!("stage stats failed: {e}"))?;
    staged.write(&out_dir.join("stats.json"), to_pretty_json(&stats).as_bytes()).map_err(stage("stats"))?;

    if let Some(milestones_path) = milestones {
        let report = build_validation(corpus, milestones_path, searches, span, top_k, cfg, spec)
            .map_err(|e| anyhow!("stage validate failed: {e:#}"))?;
        staged.write(&out_dir.join("report.json"), report.to_json().as_bytes()).map_err(stage("validate"))?;
    }

    let spectrum_svg = render_spectrogram(&spectrum, &detect_peaks(&spectrum), style)
        .map_err(|e| anyhow!("stage plot failed: {e}"))?;
    staged.write(&out_dir.join("spectrum.svg"), spectrum_svg.as_bytes()).map_err(stage("plot"))?;
    let heatmap_svg = render_heatmap(&matrix, style).map_err(|e| anyhow!("stage plot failed: {e}"))?;
    staged.write(&out_dir.join("heatmap.svg"), heatmap_svg.as_bytes()).map_err(stage("plot"))?;

    println!("pipeline complete: {} artifacts in {}", staged.written.len(), out_dir.display());
    Ok(())
}
