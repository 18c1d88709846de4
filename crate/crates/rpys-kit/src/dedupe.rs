//! Disambiguation of cited references.
//!
//! Variant CR strings that denote the same published work are clustered so
//! citation counts attach to one canonical entry. Clustering is single-linkage
//! over a weighted string-similarity score, blocked absolutely by reference
//! year; refs with unknown year are never merged with anything under the
//! default configuration.

use crate::ingest::RawCitedRef;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{BTreeMap, HashMap};

/// Knobs for [`cluster_refs`].
#[derive(Debug, Clone, PartialEq)]
pub struct MatchConfig {
    /// Minimum similarity for two refs to be linked. In [0, 1].
    pub string_sim_threshold: f64,
    /// When true (default), refs with unknown year form singleton clusters.
    /// When false, unknown-year refs may cluster among themselves; refs with
    /// known years always block on the year.
    pub require_year_block: bool,
    /// When true (default), equal DOIs force a link and unequal DOIs forbid
    /// one. When false, DOIs are ignored.
    pub doi_overrides: bool,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig { string_sim_threshold: 0.75, require_year_block: true, doi_overrides: true }
    }
}

/// A canonical disambiguated work: every member reference denotes it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefCluster {
    /// Stable 1-based id, assigned by (ref_year, representative original)
    /// order with unknown-year clusters last.
    pub cluster_id: u64,
    /// The member with the most populated fields; ties broken by the
    /// lexicographically smallest original string.
    pub representative: RawCitedRef,
    pub members: Vec<RawCitedRef>,
    /// Year shared by all members; `None` for unknown-year singletons.
    pub ref_year: Option<i32>,
    /// Number of member references, i.e. citations received in the corpus.
    pub count: usize,
}

/// Levenshtein edit distance over chars (bytes on the ASCII fast path).
fn levenshtein(a: &str, b: &str) -> usize {
    if a.is_ascii() && b.is_ascii() {
        lev_dp(a.as_bytes(), b.as_bytes())
    } else {
        let av: Vec<char> = a.chars().collect();
        let bv: Vec<char> = b.chars().collect();
        lev_dp(&av, &bv)
    }
}

fn lev_dp<T: PartialEq + Copy>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    const STACK: usize = 63;
    if b.len() <= STACK {
        let mut prev = [0u32; STACK + 1];
        let mut cur = [0u32; STACK + 1];
        for (j, p) in prev.iter_mut().enumerate().take(b.len() + 1) {
            *p = j as u32;
        }
        for (i, &ca) in a.iter().enumerate() {
            cur[0] = i as u32 + 1;
            for (j, &cb) in b.iter().enumerate() {
                let sub = prev[j] + u32::from(ca != cb);
                cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
            }
            prev[..=b.len()].copy_from_slice(&cur[..=b.len()]);
        }
        prev[b.len()] as usize
    } else {
        let mut prev: Vec<u32> = (0..=b.len() as u32).collect();
        let mut cur = vec![0u32; b.len() + 1];
        for (i, &ca) in a.iter().enumerate() {
            cur[0] = i as u32 + 1;
            for (j, &cb) in b.iter().enumerate() {
                let sub = prev[j] + u32::from(ca != cb);
                cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
            }
            std::mem::swap(&mut prev, &mut cur);
        }
        prev[b.len()] as usize
    }
}

/// 1 - edit_distance / max(len); two empty strings are identical (1.0).
pub fn levenshtein_ratio(a: &str, b: &str) -> f64 {
    let max_len = a.chars().count().max(b.chars().count());
    if max_len == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / max_len as f64
}

fn digits(s: &str) -> Option<String> {
    let d: String = s.chars().filter(|c| c.is_ascii_digit()).collect();
    (!d.is_empty()).then_some(d)
}

// Component score for a weighted field. A field missing on one side is
// neutral (0.5); missing on both sides counts as agreement so that identical
// refs always score 1.0.
fn component(a: Option<&str>, b: Option<&str>, score: impl Fn(&str, &str) -> f64) -> f64 {
    match (a, b) {
        (Some(x), Some(y)) => score(x, y),
        (None, None) => 1.0,
        _ => 0.5,
    }
}

/// Similarity between two parsed references, in [0, 1].
///
/// Equal DOIs force 1.0 and unequal DOIs force 0.0; differing known years
/// force 0.0. Otherwise the score is
/// `0.4*lev(first_author) + 0.3*lev(source) + 0.15*exact(volume) + 0.15*exact(first_page)`,
/// with volumes and pages compared as digit strings.
pub fn similarity(a: &RawCitedRef, b: &RawCitedRef) -> f64 {
    similarity_with(a, b, true)
}

fn similarity_with(a: &RawCitedRef, b: &RawCitedRef, doi_overrides: bool) -> f64 {
    if doi_overrides {
        if let (Some(da), Some(db)) = (&a.doi, &b.doi) {
            return if da == db { 1.0 } else { 0.0 };
        }
    }
    if let (Some(ya), Some(yb)) = (a.ref_year, b.ref_year) {
        if ya != yb {
            return 0.0;
        }
    }
    let exact = |x: &str, y: &str| if x == y { 1.0 } else { 0.0 };
    0.4 * component(a.first_author.as_deref(), b.first_author.as_deref(), levenshtein_ratio)
        + 0.3 * component(a.source.as_deref(), b.source.as_deref(), levenshtein_ratio)
        + 0.15 * component(digits_opt(&a.volume).as_deref(), digits_opt(&b.volume).as_deref(), exact)
        + 0.15 * component(digits_opt(&a.first_page).as_deref(), digits_opt(&b.first_page).as_deref(), exact)
}

fn digits_opt(v: &Option<String>) -> Option<String> {
    v.as_deref().and_then(digits)
}

// Exact similarity when it reaches `threshold`, None otherwise. Skips the
// second edit-distance computation when the first already caps the score
// below the threshold; the returned value, when present, equals
// `similarity_with` exactly.
fn similarity_at_least(a: &RawCitedRef, b: &RawCitedRef, doi_overrides: bool, threshold: f64) -> Option<f64> {
    if doi_overrides {
        if let (Some(da), Some(db)) = (&a.doi, &b.doi) {
            let s = if da == db { 1.0 } else { 0.0 };
            return (s >= threshold).then_some(s);
        }
    }
    if let (Some(ya), Some(yb)) = (a.ref_year, b.ref_year) {
        if ya != yb {
            return (threshold <= 0.0).then_some(0.0);
        }
    }
    let exact = |x: &str, y: &str| if x == y { 1.0 } else { 0.0 };
    let fixed = 0.15 * component(digits_opt(&a.volume).as_deref(), digits_opt(&b.volume).as_deref(), exact)
        + 0.15 * component(digits_opt(&a.first_page).as_deref(), digits_opt(&b.first_page).as_deref(), exact);
    let author = 0.4 * component(a.first_author.as_deref(), b.first_author.as_deref(), levenshtein_ratio);
    if author + 0.3 + fixed < threshold {
        return None;
    }
    let total = author + fixed + 0.3 * component(a.source.as_deref(), b.source.as_deref(), levenshtein_ratio);
    (total >= threshold).then_some(total)
}

// The parsed fields that determine similarity. Refs sharing a signature are
// clustered together by construction, so pairwise work runs on distinct
// signatures only.
#[derive(PartialEq, Eq, Hash, Clone)]
struct Signature {
    first_author: Option<String>,
    ref_year: Option<i32>,
    source: Option<String>,
    volume: Option<String>,
    first_page: Option<String>,
    doi: Option<String>,
}

impl Signature {
    fn of(r: &RawCitedRef) -> Signature {
        Signature {
            first_author: r.first_author.clone(),
            ref_year: r.ref_year,
            source: r.source.clone(),
            volume: r.volume.clone(),
            first_page: r.first_page.clone(),
            doi: r.doi.clone(),
        }
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet { parent: (0..n).collect() }
    }
    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Partition references into clusters of co-referring variants.
///
/// Within each year block, single-linkage over pairs whose similarity meets
/// the threshold, agglomerated best-pair-first so that the unequal-DOI
/// constraint is applied deterministically: a merge that would put two
/// distinct DOIs in one cluster is skipped. The result is independent of the
/// input order, including the assigned cluster ids.
pub fn cluster_refs(refs: &[RawCitedRef], cfg: &MatchConfig) -> Vec<RefCluster> {
    // Group by year block, then by signature within the block.
    let mut blocks: BTreeMap<Option<i32>, Vec<usize>> = BTreeMap::new();
    for (i, r) in refs.iter().enumerate() {
        blocks.entry(r.ref_year).or_default().push(i);
    }

    let mut groups: Vec<(Option<i32>, Vec<Vec<usize>>)> = Vec::new();
    for (year, idxs) in blocks {
        if year.is_none() && cfg.require_year_block {
            // Unknown-year refs are never merged with anything.
            for i in idxs {
                groups.push((None, vec![vec![i]]));
            }
            continue;
        }
        groups.push((year, cluster_block(refs, &idxs, cfg)));
    }

    // Deterministic parallelism: blocks are independent; assembly sorts.
    let mut clusters: Vec<RefCluster> = groups
        .into_par_iter()
        .flat_map_iter(|(year, block_clusters)| {
            block_clusters.into_iter().map(move |member_idx| (year, member_idx)).collect::<Vec<_>>()
        })
        .map(|(year, member_idx)| assemble(refs, year, member_idx))
        .collect();

    clusters.sort_by(|a, b| {
        let ka = (a.ref_year.is_none(), a.ref_year, a.representative.original.as_str());
        let kb = (b.ref_year.is_none(), b.ref_year, b.representative.original.as_str());
        ka.cmp(&kb).then_with(|| {
            let ma = a.members.iter().map(|m| (&m.original, &m.parent_record_id));
            let mb = b.members.iter().map(|m| (&m.original, &m.parent_record_id));
            ma.cmp(mb)
        })
    });
    for (i, c) in clusters.iter_mut().enumerate() {
        c.cluster_id = (i + 1) as u64;
    }
    clusters
}

// Single-linkage within one block. Returns groups of ref indices.
fn cluster_block(refs: &[RawCitedRef], idxs: &[usize], cfg: &MatchConfig) -> Vec<Vec<usize>> {
    // Collapse identical signatures first; their members always co-cluster.
    let mut sig_index: HashMap<Signature, usize> = HashMap::new();
    let mut variants: Vec<(Signature, Vec<usize>)> = Vec::new();
    for &i in idxs {
        let sig = Signature::of(&refs[i]);
        match sig_index.get(&sig) {
            Some(&v) => variants[v].1.push(i),
            None => {
                sig_index.insert(sig.clone(), variants.len());
                variants.push((sig, vec![i]));
            }
        }
    }
    // Variant order must not depend on input order.
    variants.sort_by(|a, b| refs[a.1[0]].original.cmp(&refs[b.1[0]].original).then(a.1[0].cmp(&b.1[0])));

    let n = variants.len();
    let mut edges: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if let Some(s) =
                similarity_at_least(&refs[variants[i].1[0]], &refs[variants[j].1[0]], cfg.doi_overrides, cfg.string_sim_threshold)
            {
                edges.push((s, i, j));
            }
        }
    }
    // Best pair first; ties by variant order, which is itself canonical.
    edges.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut dsu = DisjointSet::new(n);
    // Per-component DOI, to honor "unequal DOIs are never co-clustered" even
    // through transitive chains.
    let mut comp_doi: Vec<Option<&str>> = variants.iter().map(|(s, _)| s.doi.as_deref()).collect();
    for (_, i, j) in edges {
        let (ri, rj) = (dsu.find(i), dsu.find(j));
        if ri == rj {
            continue;
        }
        if cfg.doi_overrides {
            if let (Some(di), Some(dj)) = (comp_doi[ri], comp_doi[rj]) {
                if di != dj {
                    continue;
                }
            }
        }
        dsu.union(ri, rj);
        let root = dsu.find(ri);
        comp_doi[root] = comp_doi[ri].or(comp_doi[rj]);
    }

    let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (v, (_, members)) in variants.iter().enumerate() {
        let root = dsu.find(v);
        by_root.entry(root).or_default().extend(members.iter().copied());
    }
    by_root.into_values().collect()
}

fn populated_fields(r: &RawCitedRef) -> usize {
    usize::from(r.first_author.is_some())
        + usize::from(r.source.is_some())
        + usize::from(r.volume.is_some())
        + usize::from(r.first_page.is_some())
        + usize::from(r.doi.is_some())
}

fn assemble(refs: &[RawCitedRef], year: Option<i32>, mut member_idx: Vec<usize>) -> RefCluster {
    member_idx.sort_by(|&a, &b| {
        refs[a]
            .original
            .cmp(&refs[b].original)
            .then_with(|| refs[a].parent_record_id.cmp(&refs[b].parent_record_id))
            .then(a.cmp(&b))
    });
    let members: Vec<RawCitedRef> = member_idx.iter().map(|&i| refs[i].clone()).collect();
    let representative = members
        .iter()
        .max_by(|a, b| {
            populated_fields(a)
                .cmp(&populated_fields(b))
                .then_with(|| b.original.cmp(&a.original)) // smaller original wins
        })
        .expect("cluster has at least one member")
        .clone();
    let count = members.len();
    RefCluster { cluster_id: 0, representative, members, ref_year: year, count }
}

/// Write the cluster table as CSV: id, year, count, representative fields,
/// member originals pipe-joined.
pub fn clusters_to_csv(clusters: &[RefCluster]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "cluster_id",
        "ref_year",
        "count",
        "rep_first_author",
        "rep_source",
        "rep_volume",
        "rep_first_page",
        "rep_doi",
        "rep_original",
        "member_originals",
    ])
    .expect("csv header");
    for c in clusters {
        let members = c.members.iter().map(|m| m.original.as_str()).collect::<Vec<_>>().join("|");
        w.write_record([
            c.cluster_id.to_string(),
            c.ref_year.map(|y| y.to_string()).unwrap_or_default(),
            c.count.to_string(),
            c.representative.first_author.clone().unwrap_or_default(),
            c.representative.source.clone().unwrap_or_default(),
            c.representative.volume.clone().unwrap_or_default(),
            c.representative.first_page.clone().unwrap_or_default(),
            c.representative.doi.clone().unwrap_or_default(),
            c.representative.original.clone(),
            members,
        ])
        .expect("csv row");
    }
    String::from_utf8(w.into_inner().expect("csv flush")).expect("csv utf8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_cited_ref;
    use proptest::prelude::*;

    fn refp(s: &str) -> RawCitedRef {
        parse_cited_ref(s, "p")
    }

    #[test]
    fn identical_refs_score_one() {
        let a = refp("HAHN H, 1996, CELL, V85, P841");
        assert_eq!(similarity(&a, &a), 1.0);
        let sparse = refp("ANON, UNTITLED");
        assert_eq!(similarity(&sparse, &sparse), 1.0);
    }

    #[test]
    fn equal_dois_override_everything() {
        let a = refp("HAHN H, 1996, CELL, V85, P841, DOI 10.1/x");
        let b = refp("TOTALLY DIFFERENT, 2003, NOWHERE, DOI 10.1/x");
        assert_eq!(similarity(&a, &b), 1.0);
        let c = refp("HAHN H, 1996, CELL, V85, P841, DOI 10.1/y");
        assert_eq!(similarity(&a, &c), 0.0);
    }

    #[test]
    fn differing_years_score_zero() {
        let a = refp("HAHN H, 1996, CELL, V85, P841");
        let b = refp("HAHN H, 1997, CELL, V85, P841");
        assert_eq!(similarity(&a, &b), 0.0);
    }

    #[test]
    fn weighted_formula_hand_value() {
        let a = refp("HAHN H, 1996, CELL, V85, P841");
        let b = refp("HAHN H, 1996, CELL, V85");
        // 0.4 + 0.3 + 0.15 + 0.15*0.5
        assert!((similarity(&a, &b) - 0.925).abs() < 1e-12);
    }

    #[test]
    fn exact_duplicates_form_one_cluster() {
        let refs: Vec<_> = (0..3).map(|_| refp("HAHN H, 1996, CELL, V85, P841")).collect();
        let clusters = cluster_refs(&refs, &MatchConfig::default());
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].count, 3);
        assert_eq!(clusters[0].ref_year, Some(1996));
    }

    #[test]
    fn year_blocking_splits_same_strings() {
        let refs = vec![refp("HAHN H, 1996, CELL, V85, P841"), refp("HAHN H, 1997, CELL, V85, P841")];
        let clusters = cluster_refs(&refs, &MatchConfig::default());
        assert_eq!(clusters.len(), 2);
    }

    #[test]
    fn unknown_year_refs_are_singletons() {
        let refs = vec![refp("ANON, UNTITLED"), refp("ANON, UNTITLED")];
        let clusters = cluster_refs(&refs, &MatchConfig::default());
        assert_eq!(clusters.len(), 2);
        assert!(clusters.iter().all(|c| c.count == 1 && c.ref_year.is_none()));
    }

    #[test]
    fn typo_variants_merge() {
        let refs = vec![
            refp("NUSSLEINVOLHARD C, 1980, NATURE, V287, P795"),
            refp("NUSSELINVOLHARD C, 1980, NATURE, V287, P795"),
            refp("Nusslein-Volhard C, 1980, NATURE, V287, P795"),
        ];
        let clusters = cluster_refs(&refs, &MatchConfig::default());
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].count, 3);
    }

    #[test]
    fn unequal_dois_never_co_cluster_even_through_chains() {
        // b is close to both a and c; a and c carry different DOIs.
        let a = refp("SMITH JOHN, 1999, J THINGS, V1, P10, DOI 10.1/a");
        let b = refp("SMITH JOHN, 1999, J THINGS, V1, P10");
        let c = refp("SMITH JOHN, 1999, J THINGS, V1, P10, DOI 10.1/c");
        let clusters = cluster_refs(&[a, b, c], &MatchConfig::default());
        for cl in &clusters {
            let mut dois: Vec<&str> = cl.members.iter().filter_map(|m| m.doi.as_deref()).collect();
            dois.sort();
            dois.dedup();
            assert!(dois.len() <= 1, "cluster mixes DOIs: {dois:?}");
        }
        assert_eq!(clusters.len(), 2);
    }

    #[test]
    fn representative_prefers_most_populated_fields() {
        let refs = vec![refp("HAHN H, 1996, CELL"), refp("HAHN H, 1996, CELL, V85, P841")];
        let clusters = cluster_refs(&refs, &MatchConfig::default());
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].representative.volume.as_deref(), Some("85"));
    }

    fn arb_ref() -> impl Strategy<Value = RawCitedRef> {
        let author = proptest::sample::select(vec!["hahn h", "smith j", "ng k", "doe jane", "li q"]);
        let source = proptest::sample::select(vec!["cell", "nature", "science", "j things"]);
        let year = proptest::sample::select(vec![Some(1996), Some(1997), Some(2000), None]);
        (author, source, year, 0u32..4, proptest::option::of(0u32..3)).prop_map(|(a, s, y, v, d)| RawCitedRef {
            original: format!("{a} {s} {v} {d:?}"),
            first_author: Some(a.to_string()),
            ref_year: y,
            source: Some(s.to_string()),
            volume: Some(v.to_string()),
            first_page: None,
            doi: d.map(|d| format!("10.9/{d}")),
            parent_record_id: "p".into(),
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn partition_and_year_homogeneity(refs in proptest::collection::vec(arb_ref(), 0..40)) {
            let clusters = cluster_refs(&refs, &MatchConfig::default());
            let total: usize = clusters.iter().map(|c| c.count).sum();
            prop_assert_eq!(total, refs.len());
            for c in &clusters {
                prop_assert_eq!(c.count, c.members.len());
                prop_assert!(c.members.iter().all(|m| m.ref_year == c.ref_year));
                let mut dois: Vec<&str> = c.members.iter().filter_map(|m| m.doi.as_deref()).collect();
                dois.sort(); dois.dedup();
                prop_assert!(dois.len() <= 1);
            }
        }

        #[test]
        fn determinism_under_permutation(refs in proptest::collection::vec(arb_ref(), 0..30), seed in 0u64..1000) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = refs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let a = cluster_refs(&refs, &MatchConfig::default());
            let b = cluster_refs(&shuffled, &MatchConfig::default());
            let norm = |cs: &[RefCluster]| cs.iter()
                .map(|c| (c.cluster_id, c.ref_year, c.representative.original.clone(),
                          c.members.iter().map(|m| m.original.clone()).collect::<Vec<_>>()))
                .collect::<Vec<_>>();
            prop_assert_eq!(norm(&a), norm(&b));
        }

        #[test]
        fn raising_threshold_never_decreases_cluster_count(
            refs in proptest::collection::vec(arb_ref(), 0..30),
            t1 in 0.2f64..0.9, delta in 0.0f64..0.3)
        {
            let lo = MatchConfig { string_sim_threshold: t1, ..Default::default() };
            let hi = MatchConfig { string_sim_threshold: (t1 + delta).min(1.0), ..Default::default() };
            let n_lo = cluster_refs(&refs, &lo).len();
            let n_hi = cluster_refs(&refs, &hi).len();
            prop_assert!(n_hi >= n_lo, "threshold {} -> {} clusters, {} -> {}", t1, n_lo, t1+delta, n_hi);
        }
    }
}
