//! Validation of detected milestones against an expert milestone list.
//!
//! Two success criteria per milestone article, judged per search corpus: the
//! spectrogram must show a peak at the milestone year, and the article must
//! sit among the ten most referenced works of that year. An article counts as
//! captured when both criteria hold in at least one search.

use crate::dedupe::{similarity, RefCluster};
use crate::ingest::{normalize_author, normalize_source, RawCitedRef};
use crate::spectrum::{detect_peaks, rank_year_clusters, Spectrum};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

/// Similarity needed to match an article key to a cluster; stricter than the
/// clustering threshold so validation under-claims rather than over-claims.
pub const ARTICLE_MATCH_THRESHOLD: f64 = 0.8;

#[derive(Debug, Error)]
pub enum ValidateError {
    #[error("milestone file row {row}: {message}")]
    Schema { row: usize, message: String },
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("span {0}..={1} does not cover milestone year {2}")]
    SpanTooNarrow(i32, i32, i32),
}

/// Key identifying a milestone article: first author, year, venue, optional
/// DOI, matched fuzzily against cluster representatives.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleKey {
    pub author: String,
    pub year: i32,
    pub source: String,
    pub doi: Option<String>,
}

impl ArticleKey {
    fn parse(text: &str, row: usize) -> Result<ArticleKey, ValidateError> {
        let parts: Vec<&str> = text.split('|').map(str::trim).collect();
        if parts.len() < 3 || parts.len() > 4 {
            return Err(ValidateError::Schema {
                row,
                message: format!("article key {text:?} must be author|year|source[|doi]"),
            });
        }
        let year: i32 = parts[1]
            .parse()
            .map_err(|_| ValidateError::Schema { row, message: format!("bad year in article key {text:?}") })?;
        Ok(ArticleKey {
            author: parts[0].to_string(),
            year,
            source: parts[2].to_string(),
            doi: parts.get(3).map(|d| d.to_lowercase()),
        })
    }

    pub fn label(&self) -> String {
        format!("{} ({}) {}", self.author, self.year, self.source)
    }

    fn as_ref_fields(&self) -> RawCitedRef {
        RawCitedRef {
            original: self.label(),
            first_author: Some(normalize_author(&self.author)),
            ref_year: Some(self.year),
            source: Some(normalize_source(&self.source)),
            volume: None,
            first_page: None,
            doi: self.doi.clone(),
            parent_record_id: String::new(),
        }
    }
}

/// One expert milestone: a year, a description, and the articles credited
/// for it (possibly none).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilestoneEntry {
    pub year: i32,
    pub description: String,
    pub articles: Vec<ArticleKey>,
}

/// Parse a milestone list from CSV (columns year, description, article_keys
/// with semicolon-separated pipe-delimited keys) or from the equivalent JSON
/// array. Duplicate years are allowed.
pub fn load_milestones(text: &str) -> Result<Vec<MilestoneEntry>, ValidateError> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        return serde_json::from_str(trimmed).map_err(|e| ValidateError::Schema { row: 0, message: e.to_string() });
    }
    let mut entries = Vec::new();
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(text.as_bytes());
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2; // header is row 1
        let record = record.map_err(|e| ValidateError::Schema { row, message: e.to_string() })?;
        let year_field = record.get(0).unwrap_or("").trim();
        if year_field.is_empty() {
            continue;
        }
        let year: i32 = year_field
            .parse()
            .map_err(|_| ValidateError::Schema { row, message: format!("bad year {year_field:?}") })?;
        let description = record.get(1).unwrap_or("").trim().to_string();
        let keys_field = record.get(2).unwrap_or("").trim();
        let articles = keys_field
            .split(';')
            .map(str::trim)
            .filter(|k| !k.is_empty())
            .map(|k| ArticleKey::parse(k, row))
            .collect::<Result<Vec<_>, _>>()?;
        entries.push(MilestoneEntry { year, description, articles });
    }
    Ok(entries)
}

pub fn load_milestones_file(path: &std::path::Path) -> Result<Vec<MilestoneEntry>, ValidateError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ValidateError::Io { path: path.display().to_string(), source })?;
    load_milestones(&text)
}

/// Year-level result for one candidate year.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YearHit {
    pub year: i32,
    pub hit: bool,
}

/// Year-level evaluation: candidate years against the milestone year set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YearEvaluation {
    pub candidates: Vec<YearHit>,
    /// hits / candidates; absent when there are no candidates.
    pub year_hit_rate: Option<f64>,
    /// Distinct milestone years over the inclusive span length.
    pub chance_baseline: f64,
    pub span: (i32, i32),
    pub distinct_milestone_years: usize,
}

/// Evaluate candidate years: a candidate hits when it is a milestone year.
/// The chance baseline is distinct milestone years divided by the inclusive
/// span length.
pub fn evaluate_years(
    candidates: &[i32],
    milestones: &[MilestoneEntry],
    span: (i32, i32),
) -> Result<YearEvaluation, ValidateError> {
    let years: BTreeSet<i32> = milestones.iter().map(|m| m.year).collect();
    for &y in &years {
        if y < span.0 || y > span.1 {
            return Err(ValidateError::SpanTooNarrow(span.0, span.1, y));
        }
    }
    let hits: Vec<YearHit> = candidates.iter().map(|&year| YearHit { year, hit: years.contains(&year) }).collect();
    let rate = if hits.is_empty() {
        None
    } else {
        Some(hits.iter().filter(|h| h.hit).count() as f64 / hits.len() as f64)
    };
    let span_len = (span.1 - span.0 + 1) as f64;
    Ok(YearEvaluation {
        candidates: hits,
        year_hit_rate: rate,
        chance_baseline: years.len() as f64 / span_len,
        span,
        distinct_milestone_years: years.len(),
    })
}

/// Precomputed artifacts of one search corpus.
pub struct SearchData {
    pub label: String,
    pub spectrum: Spectrum,
    pub clusters: Vec<RefCluster>,
}

/// Per-search outcome for one milestone article.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchOutcome {
    pub search: String,
    pub peak_present: bool,
    /// Competition rank within the top ten of the milestone year, when the
    /// article matched a cluster ranked there.
    pub rank: Option<usize>,
    /// More than one cluster of that year matched the key.
    pub ambiguous: bool,
    /// No cluster of that year matched the key at all.
    pub absent: bool,
}

/// Article-level result across all searches.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArticleResult {
    pub milestone_year: i32,
    pub description: String,
    pub article: ArticleKey,
    pub per_search: Vec<SearchOutcome>,
    pub captured: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArticleEvaluation {
    pub articles: Vec<ArticleResult>,
    /// Captured articles over all listed milestone articles. Milestones
    /// without article keys do not enter the denominator.
    pub article_capture_rate: Option<f64>,
    pub captured: usize,
    pub total_articles: usize,
}

/// Evaluate every milestone article against every search.
///
/// Within a search, the article matches the clusters of its milestone year
/// whose representative scores at least [`ARTICLE_MATCH_THRESHOLD`] under the
/// disambiguation similarity. A match with several clusters is ambiguous and
/// counts as in-top-ten only when every matching cluster sits there. Capture
/// requires peak and rank in the same search.
pub fn evaluate_articles(per_search: &[SearchData], milestones: &[MilestoneEntry]) -> ArticleEvaluation {
    let mut articles = Vec::new();
    for milestone in milestones {
        for key in &milestone.articles {
            let key_ref = key.as_ref_fields();
            let mut per_search_outcomes = Vec::new();
            let mut captured = false;
            for search in per_search {
                let peak_present = detect_peaks(&search.spectrum).contains(&milestone.year);
                let ranking = rank_year_clusters(&search.clusters, milestone.year);
                let matched: Vec<&crate::spectrum::RankedEntry> = ranking
                    .iter()
                    .filter(|e| similarity(&key_ref, &e.cluster.representative) >= ARTICLE_MATCH_THRESHOLD)
                    .collect();
                let ambiguous = matched.len() > 1;
                let absent = matched.is_empty();
                let all_in_top10 = !absent && matched.iter().all(|e| e.rank <= 10);
                let rank = if all_in_top10 { matched.iter().map(|e| e.rank).min() } else { None };
                if peak_present && rank.is_some() {
                    captured = true;
                }
                per_search_outcomes.push(SearchOutcome {
                    search: search.label.clone(),
                    peak_present,
                    rank,
                    ambiguous,
                    absent,
                });
            }
            articles.push(ArticleResult {
                milestone_year: milestone.year,
                description: milestone.description.clone(),
                article: key.clone(),
                per_search: per_search_outcomes,
                captured,
            });
        }
    }
    let total = articles.len();
    let captured = articles.iter().filter(|a| a.captured).count();
    ArticleEvaluation {
        articles,
        article_capture_rate: (total > 0).then(|| captured as f64 / total as f64),
        captured,
        total_articles: total,
    }
}

/// Combined year-level and article-level report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub years: YearEvaluation,
    pub articles: ArticleEvaluation,
}

impl ValidationReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Milestone-by-search rank grid as readable text.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "candidate years: {} hits / {} candidates (rate {}), chance baseline {:.4} over {}..={}\n",
            self.years.candidates.iter().filter(|h| h.hit).count(),
            self.years.candidates.len(),
            self.years.year_hit_rate.map_or("n/a".to_string(), |r| format!("{r:.2}")),
            self.years.chance_baseline,
            self.years.span.0,
            self.years.span.1,
        ));
        let labels: Vec<&str> = self
            .articles
            .articles
            .first()
            .map(|a| a.per_search.iter().map(|s| s.search.as_str()).collect())
            .unwrap_or_default();
        out.push_str(&format!("{:<6}{:<44}{:<6}", "year", "article", "peak"));
        for l in &labels {
            out.push_str(&format!("{l:<5}"));
        }
        out.push_str("captured\n");
        for a in &self.articles.articles {
            let peak_any = a.per_search.iter().any(|s| s.peak_present);
            out.push_str(&format!(
                "{:<6}{:<44}{:<6}",
                a.milestone_year,
                truncate(&a.article.label(), 42),
                if peak_any { "yes" } else { "no" }
            ));
            for s in &a.per_search {
                let cell = match s.rank {
                    Some(r) => r.to_string(),
                    None => "-".to_string(),
                };
                out.push_str(&format!("{cell:<5}"));
            }
            out.push_str(if a.captured { "yes\n" } else { "no\n" });
        }
        out.push_str(&format!(
            "captured {} of {} milestone articles ({})\n",
            self.articles.captured,
            self.articles.total_articles,
            self.articles.article_capture_rate.map_or("n/a".to_string(), |r| format!("{:.0}%", r * 100.0)),
        ));
        out
    }
}

fn truncate(s: &str, n: usize) -> String {
    if s.chars().count() <= n {
        s.to_string()
    } else {
        let cut: String = s.chars().take(n - 1).collect();
        format!("{cut}~")
    }
}
