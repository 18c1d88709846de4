//! Parsing of Web of Science export files into citing records.
//!
//! Two export shapes are supported: the field-tagged plaintext format
//! (`FN`/`VR` header, two-character tags, three-space continuation lines,
//! `ER` record terminators, `EF` end-of-file) and the tab-delimited format
//! with a header row. Fields consumed: PT, AU, TI, SO, PY, UT, CR.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use thiserror::Error;

/// Year bounds accepted for publication years; anything outside is treated
/// as unknown rather than rejected.
pub const MIN_YEAR: i32 = 1500;

fn max_year() -> i32 {
    use chrono::Datelike;
    chrono::Utc::now().year() + 1
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: cannot decode as UTF-8 or BOM-prefixed UTF-16")]
    Encoding { path: String },
    #[error("{path}: unknown export format (no FN header, no tab-delimited header row)")]
    UnknownFormat { path: String },
    #[error("{path}: malformed tagged framing: record starting at byte {offset} has no ER terminator")]
    Framing { path: String, offset: usize },
}

/// Export format of an input file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Tagged,
    Tabular,
}

impl fmt::Display for ExportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExportFormat::Tagged => write!(f, "tagged"),
            ExportFormat::Tabular => write!(f, "tabular"),
        }
    }
}

/// Format selection for [`parse_export`]: sniff, or force a shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FormatHint {
    #[default]
    Auto,
    Tagged,
    Tabular,
}

impl std::str::FromStr for FormatHint {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(FormatHint::Auto),
            "tagged" => Ok(FormatHint::Tagged),
            "tabular" => Ok(FormatHint::Tabular),
            other => Err(format!("unknown format {other:?} (expected auto|tagged|tabular)")),
        }
    }
}

/// One source publication together with the raw cited-reference strings it
/// carries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitingRecord {
    /// WoS accession value (`UT`) or a synthesized stable hash.
    pub record_id: String,
    /// Publication year; `None` marks an unknown year. Unknown-year records
    /// stay in the corpus (their references still count for standard RPYS)
    /// but are excluded from citing-year segmentation.
    pub pub_year: Option<i32>,
    pub title: String,
    pub source: String,
    /// Raw CR strings, order preserved.
    pub cited_refs: Vec<String>,
}

/// A parsed cited-reference string. `original` is kept byte-exact; the
/// remaining fields are best-effort and stay unset when unparseable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawCitedRef {
    pub original: String,
    pub first_author: Option<String>,
    pub ref_year: Option<i32>,
    pub source: Option<String>,
    pub volume: Option<String>,
    pub first_page: Option<String>,
    pub doi: Option<String>,
    pub parent_record_id: String,
}

/// Descriptor of one parsed input file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceEntry {
    pub path: String,
    pub format: ExportFormat,
    pub record_count: usize,
}

/// A set of citing records plus the provenance of the files they came from.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Corpus {
    pub records: Vec<CitingRecord>,
    pub provenance: Vec<ProvenanceEntry>,
}

/// Non-fatal problem found while parsing; collected, never raised.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseWarning {
    /// 1-based line number in the decoded text.
    pub line: usize,
    pub message: String,
}

/// Result of parsing one export file.
#[derive(Debug, Clone)]
pub struct ParseOutcome {
    pub corpus: Corpus,
    pub warnings: Vec<ParseWarning>,
    /// Total cited references attached to records, for conservation checks.
    pub ref_count: usize,
}

impl Corpus {
    /// Parse every CR string of every record.
    pub fn all_refs(&self) -> Vec<RawCitedRef> {
        self.records
            .iter()
            .flat_map(|r| r.cited_refs.iter().map(|cr| parse_cited_ref(cr, &r.record_id)))
            .collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&CorpusDoc::from(self)).expect("corpus serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Corpus, serde_json::Error> {
        let doc: CorpusDoc = serde_json::from_str(text)?;
        Ok(doc.into())
    }
}

// Canonical corpus JSON stores each reference in parsed form alongside the
// verbatim string, so readers get structured fields without re-parsing.
#[derive(Serialize, Deserialize)]
struct CorpusDoc {
    records: Vec<RecordDoc>,
    provenance: Vec<ProvenanceEntry>,
}

#[derive(Serialize, Deserialize)]
struct RecordDoc {
    record_id: String,
    pub_year: Option<i32>,
    title: String,
    source: String,
    cited_refs: Vec<CitedRefDoc>,
}

#[derive(Serialize, Deserialize)]
struct CitedRefDoc {
    original: String,
    first_author: Option<String>,
    ref_year: Option<i32>,
    source: Option<String>,
    volume: Option<String>,
    first_page: Option<String>,
    doi: Option<String>,
}

impl From<&Corpus> for CorpusDoc {
    fn from(c: &Corpus) -> Self {
        CorpusDoc {
            records: c
                .records
                .iter()
                .map(|r| RecordDoc {
                    record_id: r.record_id.clone(),
                    pub_year: r.pub_year,
                    title: r.title.clone(),
                    source: r.source.clone(),
                    cited_refs: r
                        .cited_refs
                        .iter()
                        .map(|cr| {
                            let p = parse_cited_ref(cr, &r.record_id);
                            CitedRefDoc {
                                original: p.original,
                                first_author: p.first_author,
                                ref_year: p.ref_year,
                                source: p.source,
                                volume: p.volume,
                                first_page: p.first_page,
                                doi: p.doi,
                            }
                        })
                        .collect(),
                })
                .collect(),
            provenance: c.provenance.clone(),
        }
    }
}

impl From<CorpusDoc> for Corpus {
    fn from(doc: CorpusDoc) -> Self {
        Corpus {
            records: doc
                .records
                .into_iter()
                .map(|r| CitingRecord {
                    record_id: r.record_id,
                    pub_year: r.pub_year,
                    title: r.title,
                    source: r.source,
                    cited_refs: r.cited_refs.into_iter().map(|cr| cr.original).collect(),
                })
                .collect(),
            provenance: doc.provenance,
        }
    }
}

/// Decode raw export bytes: UTF-8 (optionally BOM-prefixed) or UTF-16 with BOM.
fn decode(bytes: &[u8], path: &str) -> Result<String, IngestError> {
    if bytes.starts_with(&[0xEF, 0xBB, 0xBF]) {
        return std::str::from_utf8(&bytes[3..])
            .map(str::to_owned)
            .map_err(|_| IngestError::Encoding { path: path.to_string() });
    }
    let utf16 = |le: bool, body: &[u8]| -> Result<String, IngestError> {
        if !body.len().is_multiple_of(2) {
            return Err(IngestError::Encoding { path: path.to_string() });
        }
        let units: Vec<u16> = body
            .chunks_exact(2)
            .map(|c| if le { u16::from_le_bytes([c[0], c[1]]) } else { u16::from_be_bytes([c[0], c[1]]) })
            .collect();
        String::from_utf16(&units).map_err(|_| IngestError::Encoding { path: path.to_string() })
    };
    if bytes.starts_with(&[0xFF, 0xFE]) {
        return utf16(true, &bytes[2..]);
    }
    if bytes.starts_with(&[0xFE, 0xFF]) {
        return utf16(false, &bytes[2..]);
    }
    std::str::from_utf8(bytes)
        .map(str::to_owned)
        .map_err(|_| IngestError::Encoding { path: path.to_string() })
}

/// Parse one export file already loaded into memory.
///
/// `format_hint` = auto sniffs the shape: a leading `FN ` means tagged, a tab
/// in the first non-empty line means tabular. Individual bad rows become
/// warnings; only framing and format problems are fatal. An empty file yields
/// an empty corpus with a single zero-count provenance entry.
pub fn parse_export(bytes: &[u8], format_hint: FormatHint, path: &str) -> Result<ParseOutcome, IngestError> {
    let text = decode(bytes, path)?;
    let first_line = text.lines().find(|l| !l.trim().is_empty());
    let format = match format_hint {
        FormatHint::Tagged => ExportFormat::Tagged,
        FormatHint::Tabular => ExportFormat::Tabular,
        FormatHint::Auto => match first_line {
            None => {
                // Empty input: identity case, format recorded as tagged.
                return Ok(empty_outcome(path, ExportFormat::Tagged));
            }
            Some(l) if l.starts_with("FN ") => ExportFormat::Tagged,
            Some(l) if l.contains('\t') => ExportFormat::Tabular,
            Some(_) => return Err(IngestError::UnknownFormat { path: path.to_string() }),
        },
    };
    if first_line.is_none() {
        return Ok(empty_outcome(path, format));
    }
    match format {
        ExportFormat::Tagged => parse_tagged(&text, path),
        ExportFormat::Tabular => parse_tabular(&text, path),
    }
}

/// Read and parse an export file from disk.
pub fn parse_export_file(path: &Path, format_hint: FormatHint) -> Result<ParseOutcome, IngestError> {
    let label = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|source| IngestError::Io { path: label.clone(), source })?;
    parse_export(&bytes, format_hint, &label)
}

fn empty_outcome(path: &str, format: ExportFormat) -> ParseOutcome {
    ParseOutcome {
        corpus: Corpus {
            records: Vec::new(),
            provenance: vec![ProvenanceEntry { path: path.to_string(), format, record_count: 0 }],
        },
        warnings: Vec::new(),
        ref_count: 0,
    }
}

#[derive(Default)]
struct PendingRecord {
    start_offset: usize,
    authors: Vec<String>,
    title: String,
    source: String,
    py_raw: Option<String>,
    ut: Option<String>,
    cited_refs: Vec<String>,
    saw_field: bool,
}

fn parse_tagged(text: &str, path: &str) -> Result<ParseOutcome, IngestError> {
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    let mut seen_ids: HashSet<String> = HashSet::new();
    let mut pending: Option<PendingRecord> = None;
    let mut current_tag = String::new();
    let mut offset = 0usize;

    for (lineno, raw_line) in text.lines().enumerate() {
        let line_start = offset;
        offset += raw_line.len() + 1;
        let line = raw_line.trim_end();
        let lineno = lineno + 1;

        if line.trim().is_empty() {
            continue;
        }
        // Continuation lines are indented with three spaces and belong to the
        // most recent tag.
        if let Some(rest) = line.strip_prefix("   ") {
            if let Some(rec) = pending.as_mut() {
                apply_continuation(rec, &current_tag, rest.trim());
            }
            continue;
        }
        let (tag, value) = split_tag(line);
        match tag {
            "FN" | "VR" => {
                current_tag.clear();
            }
            "EF" => break,
            "ER" => {
                if let Some(rec) = pending.take() {
                    finish_record(rec, &mut records, &mut seen_ids, &mut warnings, lineno);
                }
                current_tag.clear();
            }
            "" => {
                // Not a tag line and not indented; tolerate as stray content.
                warnings.push(ParseWarning { line: lineno, message: format!("ignored unrecognized line: {line:?}") });
            }
            _ => {
                let rec = pending.get_or_insert_with(|| PendingRecord { start_offset: line_start, ..Default::default() });
                rec.saw_field = true;
                current_tag = tag.to_string();
                apply_tag(rec, tag, value, lineno, &mut warnings);
            }
        }
    }

    if let Some(rec) = pending {
        if rec.saw_field {
            return Err(IngestError::Framing { path: path.to_string(), offset: rec.start_offset });
        }
    }

    let ref_count = records.iter().map(|r: &CitingRecord| r.cited_refs.len()).sum();
    let count = records.len();
    Ok(ParseOutcome {
        corpus: Corpus {
            records,
            provenance: vec![ProvenanceEntry { path: path.to_string(), format: ExportFormat::Tagged, record_count: count }],
        },
        warnings,
        ref_count,
    })
}

fn split_tag(line: &str) -> (&str, &str) {
    if line.len() == 2 && line.chars().all(|c| c.is_ascii_uppercase()) {
        return (line, "");
    }
    if line.len() > 3 && line.as_bytes()[2] == b' ' {
        let tag = &line[..2];
        if tag.chars().all(|c| c.is_ascii_alphanumeric() && !c.is_ascii_lowercase()) {
            return (tag, line[3..].trim());
        }
    }
    ("", line)
}

fn apply_tag(rec: &mut PendingRecord, tag: &str, value: &str, lineno: usize, warnings: &mut Vec<ParseWarning>) {
    match tag {
        "AU" => rec.authors.push(value.to_string()),
        "TI" => rec.title = value.to_string(),
        "SO" => rec.source = value.to_string(),
        "PY" => {
            rec.py_raw = Some(value.to_string());
            if parse_year(value).is_none() {
                warnings.push(ParseWarning { line: lineno, message: format!("unparseable PY {value:?}; record kept with unknown year") });
            }
        }
        "UT" => rec.ut = Some(value.to_string()),
        "CR" if !value.is_empty() => rec.cited_refs.push(value.to_string()),
        _ => {} // PT and all other tags are accepted but unused.
    }
}

fn apply_continuation(rec: &mut PendingRecord, tag: &str, value: &str) {
    match tag {
        "AU" => rec.authors.push(value.to_string()),
        "CR" if !value.is_empty() => rec.cited_refs.push(value.to_string()),
        "TI" => {
            if !rec.title.is_empty() {
                rec.title.push(' ');
            }
            rec.title.push_str(value);
        }
        "SO" => {
            if !rec.source.is_empty() {
                rec.source.push(' ');
            }
            rec.source.push_str(value);
        }
        _ => {}
    }
}

fn finish_record(
    rec: PendingRecord,
    records: &mut Vec<CitingRecord>,
    seen_ids: &mut HashSet<String>,
    warnings: &mut Vec<ParseWarning>,
    lineno: usize,
) {
    let pub_year = rec.py_raw.as_deref().and_then(parse_year);
    let authors = rec.authors.join("; ");
    let record_id = match rec.ut.filter(|u| !u.is_empty()) {
        Some(ut) => ut,
        None => synthesize_id(&authors, &rec.title, rec.py_raw.as_deref().unwrap_or(""), &rec.source),
    };
    if !seen_ids.insert(record_id.clone()) {
        warnings.push(ParseWarning { line: lineno, message: format!("duplicate record id {record_id}; first occurrence kept") });
        return;
    }
    records.push(CitingRecord { record_id, pub_year, title: rec.title, source: rec.source, cited_refs: rec.cited_refs });
}

fn parse_tabular(text: &str, path: &str) -> Result<ParseOutcome, IngestError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = match lines.find(|(_, l)| !l.trim().is_empty()) {
        Some(h) => h,
        None => return Ok(empty_outcome(path, ExportFormat::Tabular)),
    };
    let cols: Vec<&str> = header.trim_end_matches('\r').split('\t').map(str::trim).collect();
    let idx = |name: &str| cols.iter().position(|c| *c == name);
    let (i_au, i_ti, i_so, i_py, i_ut, i_cr) = (idx("AU"), idx("TI"), idx("SO"), idx("PY"), idx("UT"), idx("CR"));

    let mut records = Vec::new();
    let mut warnings = Vec::new();
    let mut seen_ids: HashSet<String> = HashSet::new();
    for (lineno, raw) in lines {
        let lineno = lineno + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() > cols.len() {
            warnings.push(ParseWarning { line: lineno, message: format!("row has {} fields, header has {}; row skipped", fields.len(), cols.len()) });
            continue;
        }
        let get = |i: Option<usize>| i.and_then(|i| fields.get(i)).map(|s| s.trim()).unwrap_or("");
        let py_raw = get(i_py);
        let pub_year = parse_year(py_raw);
        if !py_raw.is_empty() && pub_year.is_none() {
            warnings.push(ParseWarning { line: lineno, message: format!("unparseable PY {py_raw:?}; record kept with unknown year") });
        }
        let (au, ti, so, ut) = (get(i_au), get(i_ti), get(i_so), get(i_ut));
        let record_id = if ut.is_empty() { synthesize_id(au, ti, py_raw, so) } else { ut.to_string() };
        if !seen_ids.insert(record_id.clone()) {
            warnings.push(ParseWarning { line: lineno, message: format!("duplicate record id {record_id}; first occurrence kept") });
            continue;
        }
        let cited_refs: Vec<String> = get(i_cr)
            .split("; ")
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        records.push(CitingRecord { record_id, pub_year, title: ti.to_string(), source: so.to_string(), cited_refs });
    }

    let ref_count = records.iter().map(|r| r.cited_refs.len()).sum();
    let count = records.len();
    Ok(ParseOutcome {
        corpus: Corpus {
            records,
            provenance: vec![ProvenanceEntry { path: path.to_string(), format: ExportFormat::Tabular, record_count: count }],
        },
        warnings,
        ref_count,
    })
}

fn parse_year(s: &str) -> Option<i32> {
    let y: i32 = s.trim().parse().ok()?;
    (MIN_YEAR..=max_year()).contains(&y).then_some(y)
}

fn synthesize_id(au: &str, ti: &str, py: &str, so: &str) -> String {
    let mut hasher = Sha256::new();
    for part in [au, ti, py, so] {
        hasher.update(part.as_bytes());
        hasher.update([0u8]);
    }
    let digest = hasher.finalize();
    let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
    format!("SYN:{hex}")
}

/// Lowercase, strip periods and hyphens, collapse whitespace. Used for author
/// names; initials are never expanded.
pub fn normalize_author(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '.' | '-' => {}
            c if c.is_whitespace() => out.push(' '),
            c => out.extend(c.to_lowercase()),
        }
    }
    collapse_ws(&out)
}

/// Lowercase, strip punctuation, collapse whitespace. Used for venue text.
pub fn normalize_source(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        if ch.is_alphanumeric() {
            out.extend(ch.to_lowercase());
        } else if ch.is_whitespace() || ch.is_ascii_punctuation() {
            out.push(' ');
        }
    }
    collapse_ws(&out)
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Parse one WoS CR string ("Author, Year, Source, Vvol, Ppage, DOI doi").
///
/// Fields are mapped positionally: the first field is the author, a 4-digit
/// token in [1500, 2100] in the second field is the year, and the first later
/// field that is not a volume/page/DOI token is the venue. Never fails;
/// unparseable fields stay unset and `original` is preserved byte-exactly.
pub fn parse_cited_ref(cr_string: &str, parent: &str) -> RawCitedRef {
    let mut out = RawCitedRef {
        original: cr_string.to_string(),
        first_author: None,
        ref_year: None,
        source: None,
        volume: None,
        first_page: None,
        doi: None,
        parent_record_id: parent.to_string(),
    };
    let fields: Vec<&str> = cr_string.split(',').map(str::trim).collect();
    if let Some(author) = fields.first() {
        let norm = normalize_author(author);
        if !norm.is_empty() {
            out.first_author = Some(norm);
        }
    }
    if let Some(year_field) = fields.get(1) {
        if year_field.len() == 4 && year_field.chars().all(|c| c.is_ascii_digit()) {
            let y: i32 = year_field.parse().unwrap();
            if (MIN_YEAR..=2100).contains(&y) {
                out.ref_year = Some(y);
            }
        }
    }
    for field in fields.iter().skip(2) {
        if field.is_empty() {
            continue;
        }
        if let Some(rest) = field.strip_prefix("DOI ") {
            let doi = rest.trim().to_lowercase();
            if out.doi.is_none() && doi.starts_with("10.") {
                out.doi = Some(doi);
            }
            continue;
        }
        let bytes = field.as_bytes();
        if bytes.len() > 1 && (bytes[0] == b'V' || bytes[0] == b'P') && bytes[1].is_ascii_digit() {
            let value = field[1..].to_string();
            if bytes[0] == b'V' {
                if out.volume.is_none() {
                    out.volume = Some(value);
                }
            } else if out.first_page.is_none() {
                out.first_page = Some(value);
            }
            continue;
        }
        if out.source.is_none() {
            let norm = normalize_source(field);
            if !norm.is_empty() {
                out.source = Some(norm);
            }
        }
    }
    out
}

/// Merge corpora: records deduplicated by `record_id` (first occurrence
/// wins), provenance concatenated in input order.
pub fn union(corpora: &[Corpus]) -> Corpus {
    let mut seen: HashSet<&str> = HashSet::new();
    let mut records = Vec::new();
    let mut provenance = Vec::new();
    for corpus in corpora {
        for record in &corpus.records {
            if seen.insert(record.record_id.as_str()) {
                records.push(record.clone());
            }
        }
        provenance.extend(corpus.provenance.iter().cloned());
    }
    Corpus { records, provenance }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const ONE_RECORD: &str = "FN Synthetic Citation Export\nVR 1.0\nPT J\nAU BLOGGS J\nTI A record\nSO J TESTING\nPY 1996\nCR NUSSLEINVOLHARD C, 1980, NATURE, V287, P795\n   HAHN H, 1996, CELL, V85, P841\n   JACOB A, 1827, DUBLIN HOSP REP, V4, P232\nUT WOS:000000000001\nER\nEF\n";

    #[test]
    fn tagged_single_record_three_refs() {
        let out = parse_export(ONE_RECORD.as_bytes(), FormatHint::Auto, "one.txt").unwrap();
        assert_eq!(out.corpus.records.len(), 1);
        let rec = &out.corpus.records[0];
        assert_eq!(rec.pub_year, Some(1996));
        assert_eq!(rec.record_id, "WOS:000000000001");
        assert_eq!(rec.cited_refs.len(), 3);
        assert_eq!(out.ref_count, 3);
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn tagged_without_ef_is_accepted_when_records_are_closed() {
        let text = ONE_RECORD.trim_end_matches("EF\n");
        let out = parse_export(text.as_bytes(), FormatHint::Auto, "x").unwrap();
        assert_eq!(out.corpus.records.len(), 1);
    }

    #[test]
    fn empty_file_yields_empty_corpus_with_zero_provenance() {
        let out = parse_export(b"", FormatHint::Auto, "empty.txt").unwrap();
        assert!(out.corpus.records.is_empty());
        assert_eq!(out.corpus.provenance.len(), 1);
        assert_eq!(out.corpus.provenance[0].record_count, 0);
    }

    #[test]
    fn unterminated_record_is_a_framing_error_with_offset() {
        let text = "FN X\nVR 1.0\nPT J\nAU A\nTI T\n";
        let err = parse_export(text.as_bytes(), FormatHint::Auto, "bad.txt").unwrap_err();
        match err {
            IngestError::Framing { offset, .. } => assert_eq!(offset, 12), // "PT J" line
            other => panic!("expected framing error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_format_is_rejected() {
        let err = parse_export(b"hello world\n", FormatHint::Auto, "x").unwrap_err();
        assert!(matches!(err, IngestError::UnknownFormat { .. }));
    }

    #[test]
    fn utf16le_bom_decodes() {
        let text = ONE_RECORD;
        let mut bytes = vec![0xFF, 0xFE];
        for unit in text.encode_utf16() {
            bytes.extend_from_slice(&unit.to_le_bytes());
        }
        let out = parse_export(&bytes, FormatHint::Auto, "u16.txt").unwrap();
        assert_eq!(out.corpus.records.len(), 1);
    }

    #[test]
    fn tabular_rows_parse_and_crs_split() {
        let text = "PT\tAU\tTI\tSO\tPY\tUT\tCR\nJ\tBLOGGS J\tT1\tJ X\t2001\tWOS:1\tA B, 1990, NAT; C D, 1991, SCI\nJ\tDOE J\tT2\tJ Y\tnope\t\tE F, 1980, CELL\n";
        let out = parse_export(text.as_bytes(), FormatHint::Auto, "t.txt").unwrap();
        assert_eq!(out.corpus.records.len(), 2);
        assert_eq!(out.corpus.records[0].cited_refs.len(), 2);
        assert_eq!(out.corpus.records[1].pub_year, None);
        assert!(out.corpus.records[1].record_id.starts_with("SYN:"));
        assert_eq!(out.warnings.len(), 1); // bad PY
        assert_eq!(out.ref_count, 3);
    }

    #[test]
    fn missing_py_record_kept_with_unknown_year() {
        let text = "FN X\nVR 1\nPT J\nAU A\nTI T\nSO S\nUT WOS:9\nCR A B, 1990, NAT\nER\nEF\n";
        let out = parse_export(text.as_bytes(), FormatHint::Auto, "x").unwrap();
        assert_eq!(out.corpus.records[0].pub_year, None);
        assert_eq!(out.corpus.records.len(), 1);
    }

    #[test]
    fn parse_cited_ref_positional_fields() {
        let r = parse_cited_ref("NUSSLEINVOLHARD C, 1980, NATURE, V287, P795", "p");
        assert_eq!(r.first_author.as_deref(), Some("nussleinvolhard c"));
        assert_eq!(r.ref_year, Some(1980));
        assert_eq!(r.source.as_deref(), Some("nature"));
        assert_eq!(r.volume.as_deref(), Some("287"));
        assert_eq!(r.first_page.as_deref(), Some("795"));
        assert_eq!(r.original, "NUSSLEINVOLHARD C, 1980, NATURE, V287, P795");
    }

    #[test]
    fn parse_cited_ref_hyphenated_author_normalizes_to_same_key() {
        let r = parse_cited_ref("Nusslein-Volhard C., 1980, NATURE", "p");
        assert_eq!(r.first_author.as_deref(), Some("nussleinvolhard c"));
    }

    #[test]
    fn parse_cited_ref_degenerate_input() {
        let r = parse_cited_ref("ANON, UNTITLED", "p");
        assert_eq!(r.first_author.as_deref(), Some("anon"));
        assert_eq!(r.ref_year, None);
        assert_eq!(r.source, None);
        assert_eq!(r.volume, None);
        assert_eq!(r.first_page, None);
        assert_eq!(r.doi, None);
        assert_eq!(r.original, "ANON, UNTITLED");
    }

    #[test]
    fn parse_cited_ref_early_year() {
        let r = parse_cited_ref("Jacob A, 1827, DUBLIN HOSP REP, V4, P232", "p");
        assert_eq!(r.ref_year, Some(1827));
        assert_eq!(r.source.as_deref(), Some("dublin hosp rep"));
        assert_eq!(r.volume.as_deref(), Some("4"));
        assert_eq!(r.first_page.as_deref(), Some("232"));
    }

    #[test]
    fn parse_cited_ref_doi_and_p_prefixed_source() {
        let r = parse_cited_ref("SMITH J, 2005, PHYS REV LETT, V94, P123, DOI 10.1103/PhysRevLett.94.123", "p");
        assert_eq!(r.source.as_deref(), Some("phys rev lett"));
        assert_eq!(r.doi.as_deref(), Some("10.1103/physrevlett.94.123"));
        assert_eq!(r.volume.as_deref(), Some("94"));
        assert_eq!(r.first_page.as_deref(), Some("123"));
    }

    #[test]
    fn union_dedupes_and_concatenates_provenance() {
        let a = parse_export(ONE_RECORD.as_bytes(), FormatHint::Auto, "a").unwrap().corpus;
        let u = union(&[a.clone(), a.clone()]);
        assert_eq!(u.records.len(), 1);
        assert_eq!(u.provenance.len(), 2);
        let total: usize = u.provenance.iter().map(|p| p.record_count).sum();
        assert!(total >= u.records.len());
    }

    #[test]
    fn union_of_disjoint_corpora_adds_sizes() {
        let mk = |ids: &[&str]| Corpus {
            records: ids
                .iter()
                .map(|id| CitingRecord {
                    record_id: id.to_string(),
                    pub_year: Some(2000),
                    title: String::new(),
                    source: String::new(),
                    cited_refs: vec![],
                })
                .collect(),
            provenance: vec![],
        };
        let u = union(&[mk(&["a", "b"]), mk(&["c", "d", "e"])]);
        assert_eq!(u.records.len(), 5);
    }

    #[test]
    fn corpus_json_round_trip_is_identity() {
        let out = parse_export(ONE_RECORD.as_bytes(), FormatHint::Auto, "a").unwrap();
        let json = out.corpus.to_json();
        let back = Corpus::from_json(&json).unwrap();
        assert_eq!(back, out.corpus);
    }

    proptest! {
        #[test]
        fn parse_cited_ref_never_panics_and_preserves_original(s in ".{0,120}") {
            let r = parse_cited_ref(&s, "parent");
            prop_assert_eq!(r.original, s);
            if let Some(d) = &r.doi { prop_assert!(d.starts_with("10.")); }
            if let Some(y) = r.ref_year { prop_assert!((1500..=2100).contains(&y)); }
        }

        #[test]
        fn union_is_idempotent_and_order_insensitive(ids1 in proptest::collection::vec("[a-z]{1,4}", 0..12),
                                                     ids2 in proptest::collection::vec("[a-z]{1,4}", 0..12)) {
            let mk = |ids: &[String]| Corpus {
                records: ids.iter().map(|id| CitingRecord {
                    record_id: id.clone(), pub_year: None,
                    title: String::new(), source: String::new(), cited_refs: vec![],
                }).collect(),
                provenance: vec![],
            };
            let (a, b) = (mk(&ids1), mk(&ids2));
            let id_set = |c: &Corpus| {
                let mut v: Vec<String> = c.records.iter().map(|r| r.record_id.clone()).collect();
                v.sort(); v.dedup(); v
            };
            let ab = union(&[a.clone(), b.clone()]);
            let ba = union(&[b.clone(), a.clone()]);
            prop_assert_eq!(id_set(&ab), id_set(&ba));
            let aa = union(&[a.clone(), a.clone()]);
            prop_assert_eq!(id_set(&aa), id_set(&union(&[a])));
        }
    }
}
