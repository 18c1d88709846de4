//! Citation spectroscopy toolkit for Web of Science exports.
//!
//! The crate ingests WoS citation exports (field-tagged or tab-delimited),
//! disambiguates cited references by year-blocked fuzzy clustering, computes
//! standard and citing-year-segmented (multi) RPYS spectra, runs a one-way
//! ANOVA with Tukey-HSD post-hoc analysis over the rank-transformed matrix to
//! propose candidate milestone years, and validates detections against an
//! expert milestone list. Plots are emitted as standalone SVG.
//!
//! Everything is deterministic: identical inputs produce byte-identical
//! outputs regardless of thread count.

pub mod cli;
pub mod dedupe;
pub mod fixtures;
pub mod ingest;
pub mod matrix;
pub mod render;
pub mod spectrum;
pub mod stats;
pub mod validate;

pub use dedupe::{cluster_refs, similarity, MatchConfig, RefCluster};
pub use ingest::{parse_cited_ref, parse_export, union, CitingRecord, Corpus, RawCitedRef};
pub use matrix::{build_matrix, rank_transform, segment_by_citing_year, MultiRpysMatrix, SegmentSpec};
pub use spectrum::{build_spectrum, detect_peaks, top_references, RankedRefList, Spectrum};
pub use stats::{anova_by_cited_year, top_milestone_years, year_effects, AnovaResult, YearEffect};
pub use validate::{evaluate_articles, evaluate_years, load_milestones, MilestoneEntry, ValidationReport};
