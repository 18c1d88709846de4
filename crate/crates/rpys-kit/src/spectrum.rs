//! Standard RPYS: per-reference-year counts, 5-year median baseline,
//! deviation signal, peak years, and the most referenced works of a year.

use crate::dedupe::RefCluster;
use crate::ingest::RawCitedRef;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// The RPYS signal over a dense year axis.
///
/// `count[y]` is the number of cited references published in year `y`,
/// `median5[y]` the median of the counts over the window `y-2 ..= y+2`
/// clipped to the axis, and `deviation[y] = count[y] - median5[y]`. Gap years
/// inside the span are present with count 0 so the medians stay well defined
/// over sparse historical data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub years: Vec<i32>,
    pub counts: Vec<u64>,
    pub median5: Vec<f64>,
    pub deviation: Vec<f64>,
}

impl Spectrum {
    pub fn is_empty(&self) -> bool {
        self.years.is_empty()
    }

    pub fn year_index(&self, year: i32) -> Option<usize> {
        let first = *self.years.first()?;
        if year < first || year > *self.years.last()? {
            return None;
        }
        Some((year - first) as usize)
    }

    pub fn deviation_at(&self, year: i32) -> Option<f64> {
        self.year_index(year).map(|i| self.deviation[i])
    }

    /// Build from per-year totals. Years absent from the map inside the span
    /// are filled with zero counts.
    pub fn from_year_counts(counts: &BTreeMap<i32, u64>) -> Spectrum {
        let (Some(&min_year), Some(&max_year)) = (counts.keys().next(), counts.keys().next_back()) else {
            return Spectrum { years: vec![], counts: vec![], median5: vec![], deviation: vec![] };
        };
        let years: Vec<i32> = (min_year..=max_year).collect();
        let dense: Vec<u64> = years.iter().map(|y| counts.get(y).copied().unwrap_or(0)).collect();
        let median5: Vec<f64> = (0..dense.len()).map(|i| window_median(&dense, i)).collect();
        let deviation: Vec<f64> = dense.iter().zip(&median5).map(|(&c, &m)| c as f64 - m).collect();
        Spectrum { years, counts: dense, median5, deviation }
    }
}

// Median of counts[i-2 ..= i+2] clipped to the slice; 3-4 values at the
// edges. An even number of values takes the mean of the two central ones.
fn window_median(counts: &[u64], i: usize) -> f64 {
    let lo = i.saturating_sub(2);
    let hi = (i + 2).min(counts.len() - 1);
    let mut window = [0u64; 5];
    let n = hi - lo + 1;
    window[..n].copy_from_slice(&counts[lo..=hi]);
    let window = &mut window[..n];
    // Windows hold at most five values; insertion sort keeps this branch-light.
    for i in 1..n {
        let mut j = i;
        while j > 0 && window[j - 1] > window[j] {
            window.swap(j - 1, j);
            j -= 1;
        }
    }
    if n % 2 == 1 {
        window[n / 2] as f64
    } else {
        (window[n / 2 - 1] + window[n / 2]) as f64 / 2.0
    }
}

/// Aggregate disambiguated clusters into a spectrum. Clusters with unknown
/// year are skipped; an empty input yields an empty spectrum.
pub fn build_spectrum(clusters: &[RefCluster]) -> Spectrum {
    let mut counts: BTreeMap<i32, u64> = BTreeMap::new();
    for c in clusters {
        if let Some(y) = c.ref_year {
            *counts.entry(y).or_insert(0) += c.count as u64;
        }
    }
    Spectrum::from_year_counts(&counts)
}

/// No-dedup variant: every parsed reference counts once.
pub fn build_spectrum_from_refs(refs: &[RawCitedRef]) -> Spectrum {
    let mut counts: BTreeMap<i32, u64> = BTreeMap::new();
    for r in refs {
        if let Some(y) = r.ref_year {
            *counts.entry(y).or_insert(0) += 1;
        }
    }
    Spectrum::from_year_counts(&counts)
}

/// Years whose deviation strictly exceeds both neighbors and is positive.
/// Boundary years compare only the existing neighbor; plateaus never qualify.
pub fn detect_peaks(s: &Spectrum) -> Vec<i32> {
    let dev = &s.deviation;
    let n = dev.len();
    let mut peaks = Vec::new();
    for i in 0..n {
        if dev[i] <= 0.0 {
            continue;
        }
        let left_ok = i == 0 || dev[i] > dev[i - 1];
        let right_ok = i == n - 1 || dev[i] > dev[i + 1];
        if left_ok && right_ok {
            peaks.push(s.years[i]);
        }
    }
    peaks
}

/// One entry of a per-year ranking.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedEntry {
    /// 1-based competition rank; tied counts share the smallest position.
    pub rank: usize,
    pub count: usize,
    pub cluster: RefCluster,
}

/// The most referenced works of one year, count-descending with
/// deterministic tie-breaking on the representative original string.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedRefList {
    pub year: i32,
    pub entries: Vec<RankedEntry>,
}

/// The `n` largest-count clusters of `year`. Returns fewer when fewer exist.
pub fn top_references(clusters: &[RefCluster], year: i32, n: usize) -> RankedRefList {
    let ranked = rank_year_clusters(clusters, year);
    RankedRefList { year, entries: ranked.into_iter().take(n).collect() }
}

/// Full count-descending ranking of every cluster of `year`.
pub fn rank_year_clusters(clusters: &[RefCluster], year: i32) -> Vec<RankedEntry> {
    let mut of_year: Vec<&RefCluster> = clusters.iter().filter(|c| c.ref_year == Some(year)).collect();
    of_year.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.representative.original.cmp(&b.representative.original)));
    let mut entries = Vec::with_capacity(of_year.len());
    let mut rank = 1usize;
    for (i, c) in of_year.iter().enumerate() {
        if i > 0 && c.count < of_year[i - 1].count {
            rank = i + 1;
        }
        entries.push(RankedEntry { rank, count: c.count, cluster: (*c).clone() });
    }
    entries
}

/// Spectrum CSV: year, count, median5, deviation, is_peak.
pub fn spectrum_to_csv(s: &Spectrum) -> String {
    let peaks: std::collections::BTreeSet<i32> = detect_peaks(s).into_iter().collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["year", "count", "median5", "deviation", "is_peak"]).expect("csv header");
    for (i, y) in s.years.iter().enumerate() {
        w.write_record([
            y.to_string(),
            s.counts[i].to_string(),
            format!("{}", s.median5[i]),
            format!("{}", s.deviation[i]),
            peaks.contains(y).to_string(),
        ])
        .expect("csv row");
    }
    String::from_utf8(w.into_inner().expect("csv flush")).expect("csv utf8")
}
