//! Deterministic synthetic corpora for tests, demos, and benchmarks.
//!
//! The generators record their own ground truth (planted spike years, cluster
//! labels, article ranks), so test expectations come from the construction
//! rather than from the code under test.

use crate::ingest::RawCitedRef;
use crate::matrix::MultiRpysMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::io;
use std::io::Write as _;
use std::path::{Path, PathBuf};

/// Bundled expert milestone table (CSV) used by the validation examples.
pub const MILESTONES_CSV: &str = include_str!("../data/milestones.csv");

/// Write the bundled milestone table next to generated exports.
pub fn write_milestones_csv(dir: &Path) -> io::Result<PathBuf> {
    let path = dir.join("milestones.csv");
    std::fs::write(&path, MILESTONES_CSV)?;
    Ok(path)
}

// ---------------------------------------------------------------------------
// Spike spectrum: a staircase background that detrends to zero plus isolated
// spikes, so the expected peak set is exactly the planted years.
// ---------------------------------------------------------------------------

pub struct SpikeSpectrumFixture {
    pub counts: BTreeMap<i32, u64>,
    pub spike_years: Vec<i32>,
}

/// Eighteen spikes over 1827..=2012 on a slowly growing background. The
/// background is a staircase with plateaus long enough that its detrended
/// signal is never positive, so the spikes are the only peaks. Each spike is
/// at least three times its local median.
pub fn spike_spectrum(seed: u64) -> SpikeSpectrumFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spike_years: Vec<i32> = (0..18).map(|k| 1830 + 10 * k).collect();
    let mut counts = BTreeMap::new();
    for year in 1827..=2012 {
        let base = 2 + (year - 1827) as u64 / 16;
        counts.insert(year, base);
    }
    for &year in &spike_years {
        let base = counts[&year];
        let magnitude = 4 * base + 50 + rng.gen_range(0..100);
        counts.insert(year, magnitude);
    }
    SpikeSpectrumFixture { counts, spike_years }
}

// ---------------------------------------------------------------------------
// Boosted matrix: a matrix whose eighteen planted columns carry uniformly
// larger values than the background, making them the largest effects.
// ---------------------------------------------------------------------------

pub struct BoostedMatrixFixture {
    pub matrix: MultiRpysMatrix,
    /// Sorted planted cited years.
    pub boosted_years: Vec<i32>,
}

pub fn boosted_matrix(seed: u64) -> BoostedMatrixFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cited_years: Vec<i32> = (1950..2010).collect();
    let boosted_years: Vec<i32> = (0..18).map(|k| 1952 + 3 * k).collect();
    let n_rows = 24;
    let mut ranks = Vec::with_capacity(n_rows);
    for _ in 0..n_rows {
        let mut row = Vec::with_capacity(cited_years.len());
        for &year in &cited_years {
            if rng.gen_bool(0.08) {
                row.push(None);
                continue;
            }
            let value = if boosted_years.contains(&year) {
                100.0 + (year % 7) as f64 + rng.gen_range(0..4) as f64
            } else {
                10.0 + rng.gen_range(0..40) as f64
            };
            row.push(Some(value));
        }
        ranks.push(row);
    }
    // Every boosted column keeps at least one observation per construction
    // check; regenerate cells that went all-missing (vanishingly rare).
    for (j, &year) in cited_years.iter().enumerate() {
        if ranks.iter().all(|r| r[j].is_none()) {
            let value = if boosted_years.contains(&year) { 102.0 } else { 20.0 };
            ranks[0][j] = Some(value);
        }
    }
    BoostedMatrixFixture {
        matrix: MultiRpysMatrix {
            citing_years: (1990..1990 + n_rows as i32).collect(),
            cited_years,
            ranks,
            segment_sizes: vec![1; n_rows],
        },
        boosted_years,
    }
}

// ---------------------------------------------------------------------------
// Noisy duplicate references for the disambiguation benchmark.
// ---------------------------------------------------------------------------

pub struct NoisyRefsFixture {
    pub refs: Vec<RawCitedRef>,
    /// Ground-truth canonical index per ref; the first instance of each
    /// canonical is unperturbed.
    pub labels: Vec<usize>,
    pub n_canonicals: usize,
}

const SURNAME_POOL: [&str; 40] = [
    "ARMITAGE", "BOLTON", "CRESWELL", "DANVERS", "ELDRIDGE", "FAIRBURN", "GRANTHAM", "HOLBROOK", "INGRAM",
    "JARVIS", "KENDRICK", "LANGLEY", "MARCHETTI", "NORBURY", "OAKDEN", "PEMBERTON", "QUIMBY", "ROSSITER",
    "SELDON", "THACKERAY", "UNDERHILL", "VANCE", "WHITLOCK", "XIMENES", "YARDLEY", "ZELLER", "ASHCOMBE",
    "BRIDGER", "COLTRANE", "DUNMORE", "EASTGATE", "FENWICK", "GOULDING", "HARGREAVE", "IREDALE", "JESSOP",
    "KIRKWOOD", "LOVEDAY", "MIDWINTER", "NETTLETON",
];

const VENUE_POOL: [&str; 12] = [
    "J BIOL CHEM", "CANCER RES", "DEV BIOL", "P NATL ACAD SCI USA", "J CELL SCI", "ONCOGENE",
    "EMBO J", "MOL CELL BIOL", "BRIT J CANCER", "INT J CANCER", "J PATHOL", "EXP CELL RES",
];

fn random_word(rng: &mut ChaCha8Rng, len: usize) -> String {
    (0..len).map(|_| (b'A' + rng.gen_range(0..26u8)) as char).collect()
}

// Apply 1..=2 random single-character edits to a word, never touching the
// trailing initial.
fn perturb(rng: &mut ChaCha8Rng, word: &str) -> String {
    let mut chars: Vec<char> = word.chars().collect();
    let edits = rng.gen_range(1..=2usize);
    for _ in 0..edits {
        if chars.len() < 4 {
            break;
        }
        let pos = rng.gen_range(0..chars.len().saturating_sub(2)).max(1);
        match rng.gen_range(0..3) {
            0 => chars[pos] = (b'A' + rng.gen_range(0..26u8)) as char,
            1 => {
                chars.insert(pos, (b'A' + rng.gen_range(0..26u8)) as char);
            }
            _ => {
                chars.remove(pos);
            }
        }
    }
    chars.into_iter().collect()
}

/// `total` reference instances over `n_canonicals` canonical works; roughly
/// half the instances carry typos within edit distance two of the canonical
/// author or venue.
pub fn noisy_refs(n_canonicals: usize, total: usize, seed: u64) -> NoisyRefsFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    struct Canon {
        author: String,
        year: i32,
        venue: String,
        volume: u32,
        page: u32,
    }
    let canonicals: Vec<Canon> = (0..n_canonicals)
        .map(|i| {
            let surname_len = rng.gen_range(8..=12);
            Canon {
                author: format!("{} {}", random_word(&mut rng, surname_len), (b'A' + (i % 26) as u8) as char),
                year: rng.gen_range(1900..=2012),
                venue: VENUE_POOL[rng.gen_range(0..VENUE_POOL.len())].to_string(),
                volume: rng.gen_range(1..999),
                page: rng.gen_range(1..9999),
            }
        })
        .collect();

    let mut refs = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    for i in 0..total {
        let label = if i < n_canonicals { i } else { rng.gen_range(0..n_canonicals) };
        let c = &canonicals[label];
        // The first pass over the canonicals stays unperturbed, so each
        // cluster has a pristine anchor.
        let (author, venue) = if i < n_canonicals || rng.gen_bool(0.5) {
            (c.author.clone(), c.venue.clone())
        } else if rng.gen_bool(0.7) {
            (perturb(&mut rng, &c.author), c.venue.clone())
        } else {
            (c.author.clone(), perturb(&mut rng, &c.venue))
        };
        let original = format!("{author}, {}, {venue}, V{}, P{}", c.year, c.volume, c.page);
        refs.push(crate::ingest::parse_cited_ref(&original, "fixture"));
        labels.push(label);
    }
    NoisyRefsFixture { refs, labels, n_canonicals }
}

// ---------------------------------------------------------------------------
// Ingest fixture with the documented per-file record counts and overlap.
// ---------------------------------------------------------------------------

pub struct Table1Fixture {
    pub paths: Vec<PathBuf>,
    pub per_file_records: Vec<usize>,
    pub union_records: usize,
    pub total_records: usize,
}

/// Four overlapping tagged exports with 1148, 244, 918 and 92 records whose
/// union holds 1948 unique records (2402 raw).
pub fn write_table1_exports(dir: &Path) -> io::Result<Table1Fixture> {
    const UNIQUE: usize = 1948;
    let ranges: [(char, std::ops::Range<usize>); 4] =
        [('a', 0..1148), ('b', 1100..1344), ('c', 1030..1948), ('d', 1856..1948)];

    let record_text = |i: usize| -> String {
        let year = 1990 + (i % 26) as i32;
        format!(
            "PT J\nAU WRITER {}\nTI Synthetic search hit {i:04}\nSO J SYNTH DATA\nPY {year}\nCR ARMITAGE B, 1985, J BIOL CHEM, V12, P40\n   BOLTON C, 1992, CANCER RES, V7, P1001\nUT WOS:T1{i:06}\nER\n",
            (b'A' + (i % 26) as u8) as char
        )
    };

    let mut paths = Vec::new();
    let mut per_file = Vec::new();
    let mut total = 0usize;
    for (name, range) in ranges {
        let path = dir.join(format!("search_{name}.txt"));
        let mut f = io::BufWriter::new(std::fs::File::create(&path)?);
        writeln!(f, "FN Synthetic Citation Export\nVR 1.0")?;
        per_file.push(range.len());
        total += range.len();
        for i in range {
            f.write_all(record_text(i).as_bytes())?;
        }
        writeln!(f, "EF")?;
        f.flush()?;
        paths.push(path);
    }
    Ok(Table1Fixture { paths, per_file_records: per_file, union_records: UNIQUE, total_records: total })
}

// ---------------------------------------------------------------------------
// Planted milestone corpus: four search exports with known peak years and
// per-year article rankings mirroring the bundled milestone table.
// ---------------------------------------------------------------------------

/// A cited work used by the planted corpus.
#[derive(Debug, Clone, Copy)]
pub struct Work {
    pub id: &'static str,
    pub author: &'static str,
    pub year: i32,
    pub source: &'static str,
    pub volume: &'static str,
    pub page: &'static str,
    pub doi: Option<&'static str>,
}

impl Work {
    fn cr(&self, variant: bool) -> String {
        let author = if variant {
            // Double the last letter of the surname; clustering folds it back.
            let mut parts: Vec<&str> = self.author.splitn(2, ' ').collect();
            let surname = parts.remove(0);
            let doubled = format!("{}{}", surname, surname.chars().last().unwrap());
            if parts.is_empty() {
                doubled
            } else {
                format!("{} {}", doubled, parts[0])
            }
        } else {
            self.author.to_string()
        };
        let mut s = format!("{author}, {}, {}, V{}, P{}", self.year, self.source, self.volume, self.page);
        if let Some(doi) = self.doi {
            s.push_str(&format!(", DOI {doi}"));
        }
        s
    }
}

/// The milestone works named by the bundled milestone table, plus ranking
/// fillers. Indices are stable; ladders refer to them by position.
pub const WORKS: [Work; 41] = [
    Work { id: "jacob", author: "JACOB A", year: 1827, source: "DUBLIN HOSP REP", volume: "4", page: "232", doi: None },
    Work { id: "binns59", author: "BINNS W", year: 1959, source: "J AM VET MED RES", volume: "134", page: "180", doi: None },
    Work { id: "keeler78", author: "KEELER RF", year: 1978, source: "LIPIDS", volume: "13", page: "708", doi: None },
    Work { id: "gorlin", author: "GORLIN RJ", year: 1960, source: "NEW ENGL J MED", volume: "262", page: "908", doi: None },
    Work { id: "binns63", author: "BINNS W", year: 1963, source: "AM J VET RES", volume: "24", page: "1164", doi: None },
    Work { id: "kb66", author: "KEELER RF", year: 1966, source: "P SOC EXP BIOL MED", volume: "123", page: "921", doi: None },
    Work { id: "kb68", author: "KEELER RF", year: 1968, source: "TERATOLOGY", volume: "1", page: "5", doi: None },
    Work { id: "nv80", author: "NUSSLEINVOLHARD C", year: 1980, source: "NATURE", volume: "287", page: "795", doi: None },
    Work { id: "echelard", author: "ECHELARD Y", year: 1993, source: "CELL", volume: "75", page: "1417", doi: None },
    Work { id: "hahn", author: "HAHN H", year: 1996, source: "CELL", volume: "85", page: "841", doi: None },
    Work { id: "johnson", author: "JOHNSON RL", year: 1996, source: "SCIENCE", volume: "272", page: "1668", doi: None },
    Work { id: "stone", author: "STONE DM", year: 1996, source: "NATURE", volume: "384", page: "129", doi: None },
    Work { id: "chiang", author: "CHIANG C", year: 1996, source: "NATURE", volume: "383", page: "407", doi: None },
    Work { id: "belloni", author: "BELLONI E", year: 1996, source: "NAT GENET", volume: "14", page: "353", doi: None },
    Work { id: "roessler", author: "ROESSLER E", year: 1996, source: "NAT GENET", volume: "14", page: "357", doi: None },
    Work { id: "oro", author: "ORO AE", year: 1997, source: "SCIENCE", volume: "276", page: "817", doi: None },
    Work { id: "goodrich", author: "GOODRICH LV", year: 1997, source: "SCIENCE", volume: "277", page: "1109", doi: None },
    Work { id: "cooper", author: "COOPER MK", year: 1998, source: "SCIENCE", volume: "280", page: "1603", doi: None },
    Work { id: "xie", author: "XIE JW", year: 1998, source: "NATURE", volume: "391", page: "90", doi: None },
    Work { id: "taipale", author: "TAIPALE J", year: 2000, source: "NATURE", volume: "406", page: "1005", doi: None },
    Work { id: "chen02", author: "CHEN JK", year: 2002, source: "GENES DEV", volume: "16", page: "2743", doi: None },
    Work { id: "grachtchouk", author: "GRACHTCHOUK M", year: 2003, source: "EMBO J", volume: "22", page: "2741", doi: None },
    Work { id: "romer", author: "ROMER JT", year: 2004, source: "CANCER CELL", volume: "6", page: "229", doi: None },
    Work { id: "rudin", author: "RUDIN CM", year: 2009, source: "NEW ENGL J MED", volume: "361", page: "1173", doi: Some("10.1056/syn0901") },
    Work { id: "vonhoff", author: "VONHOFF DD", year: 2009, source: "NEW ENGL J MED", volume: "361", page: "1164", doi: Some("10.1056/syn0902") },
    Work { id: "yauch", author: "YAUCH RL", year: 2009, source: "SCIENCE", volume: "326", page: "572", doi: Some("10.1126/syn0903") },
    Work { id: "skvara", author: "SKVARA H", year: 2011, source: "J INVEST DERMATOL", volume: "131", page: "1735", doi: None },
    Work { id: "tang11", author: "TANG T", year: 2011, source: "CLIN CANCER RES", volume: "17", page: "3378", doi: None },
    Work { id: "sekulic", author: "SEKULIC A", year: 2012, source: "NEW ENGL J MED", volume: "366", page: "2171", doi: Some("10.1056/syn1201") },
    Work { id: "tang12", author: "TANG JY", year: 2012, source: "NEW ENGL J MED", volume: "366", page: "2180", doi: Some("10.1056/syn1202") },
    // Ranking fillers (not milestone articles).
    Work { id: "f96a", author: "FABER L", year: 1996, source: "DEV BIOL", volume: "57", page: "101", doi: None },
    Work { id: "f96b", author: "NORWOOD P", year: 1996, source: "J CELL SCI", volume: "31", page: "220", doi: None },
    Work { id: "f96c", author: "QUIGLEY S", year: 1996, source: "ONCOGENE", volume: "12", page: "330", doi: None },
    Work { id: "f96d", author: "ABBOT R", year: 1996, source: "MOL CELL BIOL", volume: "16", page: "440", doi: None },
    Work { id: "f96e", author: "MERTON K", year: 1996, source: "EMBO J", volume: "15", page: "550", doi: None },
    Work { id: "f04a", author: "HOLT D", year: 2004, source: "CANCER RES", volume: "64", page: "7724", doi: None },
    Work { id: "f04b", author: "ASHBY N", year: 2004, source: "ONCOGENE", volume: "23", page: "605", doi: None },
    Work { id: "f04c", author: "PRICE V", year: 2004, source: "DEV BIOL", volume: "270", page: "47", doi: None },
    Work { id: "f04d", author: "WADE O", year: 2004, source: "J CELL SCI", volume: "117", page: "2033", doi: None },
    Work { id: "f04e", author: "LUND T", year: 2004, source: "MOL CELL BIOL", volume: "24", page: "8627", doi: None },
    Work { id: "f04f", author: "REED M", year: 2004, source: "BRIT J CANCER", volume: "90", page: "1552", doi: None },
];

fn work(id: &str) -> &'static Work {
    WORKS.iter().find(|w| w.id == id).expect("known work id")
}

// Citation intensity ladders per search: (cited year, [(work id, sixteenths
// per eligible record)]). Descending sixteenths define the expected ranks.
// Boosted years within one search are spaced so each one detrends to a
// guaranteed strict peak.
type Ladder = &'static [(&'static str, u32)];
const PLAN_A: &[(i32, Ladder)] = &[
    (1827, &[("jacob", 16)]),
    (1960, &[("gorlin", 16)]),
    (1963, &[("binns63", 16)]),
    (1968, &[("kb68", 16)]),
    (1980, &[("nv80", 96)]),
    (1996, &[("hahn", 13), ("johnson", 12), ("f96a", 11), ("stone", 10), ("f96b", 9), ("chiang", 8), ("f96c", 7), ("f96d", 6), ("f96e", 5), ("roessler", 4)]),
    (2002, &[("chen02", 16)]),
    (2009, &[("vonhoff", 24), ("rudin", 22), ("yauch", 20)]),
];
const PLAN_B: &[(i32, Ladder)] = &[
    (1827, &[("jacob", 16)]),
    (1960, &[("gorlin", 16)]),
    (1963, &[("binns63", 16)]),
    (1968, &[("kb68", 16)]),
    (1980, &[("nv80", 96)]),
    (1996, &[("hahn", 13), ("johnson", 12), ("f96a", 11), ("stone", 10), ("chiang", 9)]),
    (1998, &[("xie", 20), ("cooper", 18)]),
    (2004, &[("f04a", 20), ("romer", 18)]),
    (2009, &[("vonhoff", 24), ("rudin", 22), ("yauch", 20)]),
    (2012, &[("sekulic", 20), ("tang12", 18)]),
];
const PLAN_C: &[(i32, Ladder)] = &[
    (1959, &[("binns59", 16)]),
    (1963, &[("binns63", 16)]),
    (1968, &[("kb68", 16)]),
    (1980, &[("nv80", 96)]),
    (1996, &[("chiang", 13), ("hahn", 12), ("roessler", 11), ("johnson", 10), ("f96a", 9), ("stone", 8), ("belloni", 7)]),
    (2000, &[("taipale", 16)]),
    (2002, &[("chen02", 32)]),
    (2004, &[("f04a", 10), ("f04b", 9), ("f04c", 8), ("f04d", 7), ("f04e", 6), ("f04f", 5), ("romer", 4)]),
    (2009, &[("vonhoff", 24), ("rudin", 22), ("yauch", 20)]),
];
const PLAN_D: &[(i32, Ladder)] = &[
    (1963, &[("binns63", 16)]),
    (1968, &[("kb68", 16)]),
    (1980, &[("nv80", 96)]),
    (1993, &[("echelard", 16)]),
    (1996, &[("hahn", 13), ("johnson", 12), ("f96a", 11), ("f96b", 10), ("stone", 9), ("chiang", 8), ("roessler", 7), ("f96c", 6), ("belloni", 5)]),
    (1998, &[("xie", 20), ("cooper", 18)]),
    (2002, &[("chen02", 16)]),
    (2009, &[("yauch", 24), ("rudin", 22), ("vonhoff", 20)]),
];

const SEARCH_LABELS: [&str; 4] = ["A", "B", "C", "D"];
const PLANS: [&[(i32, Ladder)]; 4] = [PLAN_A, PLAN_B, PLAN_C, PLAN_D];
const CITING_FIRST: i32 = 1990;
const N_CITING_YEARS: usize = 26;
// Records per citing year: search-exclusive counts plus a shared background
// core present in every export file.
const EXCL_PER_YEAR: [usize; 4] = [31, 9, 23, 5];
const SHARED_PER_YEAR: usize = 12;
const BG_REFS_PER_RECORD: usize = 8;
const BG_WORKS_PER_YEAR: u32 = 30;

/// Expected per-article outcome, derived from the ladders at generation time.
#[derive(Debug, Clone)]
pub struct ExpectedArticle {
    pub work_id: &'static str,
    pub milestone_year: i32,
    /// (search label, competition rank) for every search that cites the work.
    pub ranks: Vec<(&'static str, usize)>,
    pub captured: bool,
}

pub struct PlantedFixture {
    /// (label, path) for the four search exports.
    pub search_paths: Vec<(String, PathBuf)>,
    pub milestones_path: PathBuf,
    /// Distinct milestone years of the bundled table.
    pub planted_years: Vec<i32>,
    pub union_records: usize,
    pub expected_articles: Vec<ExpectedArticle>,
    pub expected_captured: usize,
    pub total_article_keys: usize,
}

fn bg_cr(year: i32, w: u32) -> String {
    let surname = SURNAME_POOL[((year as u32).wrapping_mul(31).wrapping_add(7 * w) % 40) as usize];
    let initial = (b'A' + (((year as u32).wrapping_mul(17).wrapping_add(5 * w)) % 26) as u8) as char;
    let venue = VENUE_POOL[((year as u32).wrapping_mul(13).wrapping_add(3 * w) % 12) as usize];
    let volume = 10 + 7 * w + (year as u32 % 5);
    let page = 100 + 13 * w + (year as u32 % 97);
    format!("{surname} {initial}, {year}, {venue}, V{volume}, P{page}")
}

fn copies_for(u: u32, ordinal: usize) -> usize {
    (u / 16) as usize + usize::from(((ordinal % 16) as u32) < u % 16)
}

/// Write the four planted search exports plus the milestone table, returning
/// the constructed ground truth: planted peak years per the ladders, the
/// expected per-search rank of every milestone article, and the capture rate
/// the validation must reproduce.
pub fn write_planted_exports(dir: &Path) -> io::Result<PlantedFixture> {
    // Record pool: per citing year, search-exclusive blocks then the shared
    // core. The same record text appears in every file it belongs to.
    struct Rec {
        citing_year: i32,
        /// Search index for exclusive records, None for shared.
        search: Option<usize>,
        ordinal: usize,
        cr_lines: Vec<String>,
    }

    let mut records = Vec::new();
    let mut variant_counters: BTreeMap<(usize, &'static str), usize> = BTreeMap::new();
    for year_idx in 0..N_CITING_YEARS {
        let citing_year = CITING_FIRST + year_idx as i32;
        for (s, &n) in EXCL_PER_YEAR.iter().enumerate() {
            for j in 0..n {
                records.push(Rec { citing_year, search: Some(s), ordinal: year_idx * n + j, cr_lines: Vec::new() });
            }
        }
        for j in 0..SHARED_PER_YEAR {
            records.push(Rec { citing_year, search: None, ordinal: year_idx * SHARED_PER_YEAR + j, cr_lines: Vec::new() });
        }
    }

    // Planted citations.
    for rec in records.iter_mut() {
        let Some(s) = rec.search else { continue };
        for &(year, ladder) in PLANS[s] {
            if year > rec.citing_year {
                continue;
            }
            for &(work_id, u) in ladder {
                let w = work(work_id);
                for _ in 0..copies_for(u, rec.ordinal) {
                    let counter = variant_counters.entry((s, work_id)).or_insert(0);
                    let variant = *counter % 7 == 3;
                    *counter += 1;
                    rec.cr_lines.push(w.cr(variant));
                }
            }
        }
    }
    // Background citations, seeded per record so shared records are byte
    // identical in every file.
    for (idx, rec) in records.iter_mut().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xB00C_0000 ^ idx as u64);
        for _ in 0..BG_REFS_PER_RECORD {
            let year = 1827 + rng.gen_range(0..(rec.citing_year - 1827));
            let w = rng.gen_range(0..BG_WORKS_PER_YEAR);
            rec.cr_lines.push(bg_cr(year, w));
        }
    }

    let mut search_paths = Vec::new();
    for (s, label) in SEARCH_LABELS.iter().enumerate() {
        let path = dir.join(format!("planted_{}.txt", label.to_lowercase()));
        let mut f = io::BufWriter::new(std::fs::File::create(&path)?);
        writeln!(f, "FN Synthetic Citation Export\nVR 1.0")?;
        for (idx, rec) in records.iter().enumerate() {
            if rec.search.is_some() && rec.search != Some(s) {
                continue;
            }
            writeln!(f, "PT J")?;
            writeln!(f, "AU WRITER {}", (b'A' + (idx % 26) as u8) as char)?;
            writeln!(f, "TI Synthetic citing record {idx:04}")?;
            writeln!(f, "SO J SYNTH DATA")?;
            writeln!(f, "PY {}", rec.citing_year)?;
            for (k, cr) in rec.cr_lines.iter().enumerate() {
                if k == 0 {
                    writeln!(f, "CR {cr}")?;
                } else {
                    writeln!(f, "   {cr}")?;
                }
            }
            writeln!(f, "UT WOS:PL{idx:06}")?;
            writeln!(f, "ER")?;
        }
        writeln!(f, "EF")?;
        f.flush()?;
        search_paths.push((label.to_string(), path));
    }

    let milestones_path = write_milestones_csv(dir)?;

    // Ground truth from the ladders: a milestone work is captured when some
    // search ranks it within the top ten of its (peaking) milestone year.
    let milestone_keys: [(&str, i32); 30] = [
        ("jacob", 1827),
        ("binns59", 1959),
        ("keeler78", 1959),
        ("gorlin", 1960),
        ("binns63", 1963),
        ("kb66", 1968),
        ("kb68", 1968),
        ("nv80", 1980),
        ("echelard", 1993),
        ("hahn", 1996),
        ("johnson", 1996),
        ("stone", 1996),
        ("chiang", 1996),
        ("belloni", 1996),
        ("roessler", 1996),
        ("oro", 1997),
        ("goodrich", 1997),
        ("cooper", 1998),
        ("xie", 1998),
        ("taipale", 2000),
        ("chen02", 2002),
        ("grachtchouk", 2003),
        ("romer", 2004),
        ("rudin", 2009),
        ("vonhoff", 2009),
        ("yauch", 2009),
        ("skvara", 2011),
        ("tang11", 2011),
        ("sekulic", 2012),
        ("tang12", 2012),
    ];
    let expected_articles: Vec<ExpectedArticle> = milestone_keys
        .iter()
        .map(|&(work_id, milestone_year)| {
            let w = work(work_id);
            let mut ranks = Vec::new();
            if w.year == milestone_year {
                for (s, label) in SEARCH_LABELS.iter().enumerate() {
                    if let Some((_, ladder)) = PLANS[s].iter().find(|(y, _)| *y == w.year) {
                        if let Some(pos) = ladder.iter().position(|(id, _)| *id == work_id) {
                            ranks.push((*label, pos + 1));
                        }
                    }
                }
            }
            let captured = ranks.iter().any(|&(_, r)| r <= 10);
            ExpectedArticle { work_id, milestone_year, ranks, captured }
        })
        .collect();
    let expected_captured = expected_articles.iter().filter(|a| a.captured).count();

    // Distinct years of the milestone table, including the key-less 1992
    // and 2003 entries.
    let planted_years: Vec<i32> = vec![
        1827, 1959, 1960, 1963, 1968, 1980, 1992, 1993, 1996, 1997, 1998, 2000, 2002, 2003, 2004, 2009, 2011, 2012,
    ];

    Ok(PlantedFixture {
        search_paths,
        milestones_path,
        planted_years,
        union_records: records.len(),
        expected_articles,
        expected_captured,
        total_article_keys: milestone_keys.len(),
    })
}
