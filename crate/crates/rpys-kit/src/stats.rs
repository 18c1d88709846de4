//! Inferential statistics over a multi-RPYS matrix: one-way ANOVA with the
//! cited-reference year as the factor, Tukey-HSD-style significance flags for
//! per-year effects, and selection of the top-k candidate milestone years by
//! least-squares-mean deviation from the grand mean.

pub mod dist;

use crate::matrix::MultiRpysMatrix;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("need at least two cited years with observations, found {0}")]
    TooFewGroups(usize),
    #[error("no residual degrees of freedom: every cited year has a single observation")]
    NoResidualDf,
}

/// One-way ANOVA summary. Each non-missing matrix cell is one observation,
/// grouped by cited year.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnovaResult {
    pub f_stat: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub p_value: f64,
    pub grand_mean: f64,
}

/// Per-cited-year effect: the least-squares mean (arithmetic mean of the
/// year's cells, one observation per cell) and its deviation from the grand
/// mean, with a Tukey-HSD significance flag at alpha = 0.05 using the
/// per-year observation count (Tukey-Kramer adjustment for unbalanced rows).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YearEffect {
    pub cited_year: i32,
    pub ls_mean: f64,
    pub effect: f64,
    pub n_obs: usize,
    pub significant_vs_grand: bool,
}

// Per-group observation lists in cited-year order.
fn groups_of(m: &MultiRpysMatrix) -> Vec<(i32, Vec<f64>)> {
    let mut groups = Vec::new();
    for (j, &year) in m.cited_years.iter().enumerate() {
        let obs: Vec<f64> = m.ranks.iter().filter_map(|row| row[j]).collect();
        if !obs.is_empty() {
            groups.push((year, obs));
        }
    }
    groups
}

fn anova_from_groups(groups: &[(i32, Vec<f64>)]) -> Result<AnovaResult, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups(groups.len()));
    }
    let n_total: usize = groups.iter().map(|(_, g)| g.len()).sum();
    let df_between = groups.len() - 1;
    if n_total <= groups.len() {
        return Err(StatsError::NoResidualDf);
    }
    let df_within = n_total - groups.len();

    let grand_mean = groups.iter().flat_map(|(_, g)| g).sum::<f64>() / n_total as f64;
    // SS_total and SS_between; residual by subtraction.
    let ss_total: f64 = groups.iter().flat_map(|(_, g)| g).map(|&x| (x - grand_mean).powi(2)).sum();
    let ss_between: f64 = groups
        .iter()
        .map(|(_, g)| {
            let mean = g.iter().sum::<f64>() / g.len() as f64;
            g.len() as f64 * (mean - grand_mean).powi(2)
        })
        .sum();
    let ss_within = (ss_total - ss_between).max(0.0);

    let ms_between = ss_between / df_between as f64;
    let ms_within = ss_within / df_within as f64;
    let (f_stat, p_value) = if ms_within == 0.0 {
        if ms_between == 0.0 {
            (0.0, 1.0) // all observations identical
        } else {
            (f64::INFINITY, 0.0)
        }
    } else {
        let f = ms_between / ms_within;
        (f, dist::f_tail_prob(f, df_between as f64, df_within as f64))
    };
    Ok(AnovaResult { f_stat, df_between, df_within, p_value, grand_mean })
}

/// One-way ANOVA with cited year as the grouping factor.
pub fn anova_by_cited_year(m: &MultiRpysMatrix) -> Result<AnovaResult, StatsError> {
    anova_from_groups(&groups_of(m))
}

/// Per-year LS means and effects, sorted by effect descending (ties broken by
/// earlier year).
pub fn year_effects(m: &MultiRpysMatrix) -> Result<Vec<YearEffect>, StatsError> {
    let groups = groups_of(m);
    let anova = anova_from_groups(&groups)?;
    let n_total: usize = groups.iter().map(|(_, g)| g.len()).sum();
    let ss_within: f64 = groups
        .iter()
        .map(|(_, g)| {
            let mean = g.iter().sum::<f64>() / g.len() as f64;
            g.iter().map(|&x| (x - mean).powi(2)).sum::<f64>()
        })
        .sum();
    let ms_within = ss_within / (n_total - groups.len()) as f64;
    let q_crit = dist::studentized_range_quantile(0.05, groups.len().max(2), (n_total - groups.len()) as f64);

    let mut effects: Vec<YearEffect> = groups
        .iter()
        .map(|(year, g)| {
            let n = g.len();
            let ls_mean = g.iter().sum::<f64>() / n as f64;
            let effect = ls_mean - anova.grand_mean;
            let half_width = q_crit * (ms_within / n as f64).sqrt() / std::f64::consts::SQRT_2;
            YearEffect {
                cited_year: *year,
                ls_mean,
                effect,
                n_obs: n,
                significant_vs_grand: effect.abs() > half_width,
            }
        })
        .collect();
    effects.sort_by(|a, b| b.effect.partial_cmp(&a.effect).expect("finite effects").then(a.cited_year.cmp(&b.cited_year)));
    Ok(effects)
}

/// The k cited years with the largest effects, in descending effect order;
/// ties resolved toward the earlier year. Returns every year when k exceeds
/// the year count.
pub fn top_milestone_years(m: &MultiRpysMatrix, k: usize) -> Result<Vec<i32>, StatsError> {
    Ok(year_effects(m)?.into_iter().take(k).map(|e| e.cited_year).collect())
}

/// Stats report serialized by the CLI: ANOVA block, effects array, selection.
#[derive(Debug, Clone, Serialize)]
pub struct StatsReport {
    pub anova: AnovaResult,
    pub effects: Vec<YearEffect>,
    pub top_years: Vec<i32>,
}

impl StatsReport {
    pub fn build(m: &MultiRpysMatrix, top_k: usize) -> Result<StatsReport, StatsError> {
        let effects = year_effects(m)?;
        let top_years = effects.iter().take(top_k).map(|e| e.cited_year).collect();
        Ok(StatsReport { anova: anova_by_cited_year(m)?, effects, top_years })
    }

    /// Human-readable summary table.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "one-way ANOVA by cited year: F = {:.4}, df = ({}, {}), p = {:.3e}, grand mean = {:.4}\n",
            self.anova.f_stat, self.anova.df_between, self.anova.df_within, self.anova.p_value, self.anova.grand_mean
        ));
        out.push_str("rank  cited_year  ls_mean    effect     n_obs  significant\n");
        for (i, e) in self.effects.iter().enumerate().take(self.top_years.len().max(10)) {
            out.push_str(&format!(
                "{:<5} {:<11} {:<10.4} {:<10.4} {:<6} {}\n",
                i + 1,
                e.cited_year,
                e.ls_mean,
                e.effect,
                e.n_obs,
                if e.significant_vs_grand { "yes" } else { "no" }
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Two-row matrix with one group per column built from explicit cells.
    fn matrix_from_columns(cols: &[(i32, &[Option<f64>])]) -> MultiRpysMatrix {
        let n_rows = cols[0].1.len();
        MultiRpysMatrix {
            citing_years: (0..n_rows as i32).collect(),
            cited_years: cols.iter().map(|(y, _)| *y).collect(),
            ranks: (0..n_rows).map(|r| cols.iter().map(|(_, c)| c[r]).collect()).collect(),
            segment_sizes: vec![1; n_rows],
        }
    }

    #[test]
    fn hand_computed_f_value() {
        // Groups [1,2,3] and [2,3,4]: SS_between = 1.5 (df 1), SS_within = 4 (df 4).
        let m = matrix_from_columns(&[
            (2000, &[Some(1.0), Some(2.0), Some(3.0)]),
            (2001, &[Some(2.0), Some(3.0), Some(4.0)]),
        ]);
        let a = anova_by_cited_year(&m).unwrap();
        assert_eq!(a.f_stat, 1.5);
        assert_eq!(a.df_between, 1);
        assert_eq!(a.df_within, 4);
        assert!((a.p_value - 0.2878641347).abs() < 1e-6);
    }

    #[test]
    fn identical_groups_give_zero_f() {
        let m = matrix_from_columns(&[
            (2000, &[Some(1.0), Some(2.0)]),
            (2001, &[Some(1.0), Some(2.0)]),
        ]);
        let a = anova_by_cited_year(&m).unwrap();
        assert_eq!(a.f_stat, 0.0);
    }

    #[test]
    fn all_identical_observations_give_f_zero_p_one() {
        let m = matrix_from_columns(&[
            (2000, &[Some(3.0), Some(3.0)]),
            (2001, &[Some(3.0), Some(3.0)]),
        ]);
        let a = anova_by_cited_year(&m).unwrap();
        assert_eq!(a.f_stat, 0.0);
        assert_eq!(a.p_value, 1.0);
    }

    #[test]
    fn single_group_is_a_precondition_error() {
        let m = matrix_from_columns(&[(2000, &[Some(1.0), Some(2.0)])]);
        assert!(matches!(anova_by_cited_year(&m), Err(StatsError::TooFewGroups(1))));
    }

    #[test]
    fn translation_leaves_f_unchanged() {
        let base = matrix_from_columns(&[
            (2000, &[Some(1.0), Some(5.0), Some(2.0)]),
            (2001, &[Some(7.0), Some(3.0), Some(4.0)]),
            (2002, &[Some(2.0), None, Some(9.0)]),
        ]);
        let shifted = MultiRpysMatrix {
            ranks: base.ranks.iter().map(|r| r.iter().map(|c| c.map(|v| v + 17.25)).collect()).collect(),
            ..base.clone()
        };
        let (a, b) = (anova_by_cited_year(&base).unwrap(), anova_by_cited_year(&shifted).unwrap());
        assert!((a.f_stat - b.f_stat).abs() < 1e-9);
        let (ea, eb) = (year_effects(&base).unwrap(), year_effects(&shifted).unwrap());
        for (x, y) in ea.iter().zip(&eb) {
            assert!((x.effect - y.effect).abs() < 1e-9);
            assert!((y.ls_mean - x.ls_mean - 17.25).abs() < 1e-9);
        }
    }

    #[test]
    fn dominant_column_has_largest_effect() {
        let m = matrix_from_columns(&[
            (1980, &[Some(10.0), Some(11.0), Some(12.0)]),
            (1990, &[Some(1.0), Some(2.0), Some(3.0)]),
            (2000, &[Some(4.0), Some(5.0), Some(3.0)]),
        ]);
        let effects = year_effects(&m).unwrap();
        assert_eq!(effects[0].cited_year, 1980);
        assert_eq!(top_milestone_years(&m, 1).unwrap(), vec![1980]);
    }

    #[test]
    fn effects_sum_weighted_by_n_obs_is_zero() {
        let m = matrix_from_columns(&[
            (2000, &[Some(1.0), Some(5.0), None]),
            (2001, &[Some(7.0), Some(3.0), Some(4.0)]),
            (2002, &[Some(2.0), None, Some(9.0)]),
        ]);
        let effects = year_effects(&m).unwrap();
        let weighted: f64 = effects.iter().map(|e| e.n_obs as f64 * e.effect).sum();
        let scale: f64 = effects.iter().map(|e| e.n_obs as f64 * e.effect.abs()).sum();
        assert!(weighted.abs() <= 1e-9 * scale.max(1.0));
    }

    #[test]
    fn planted_boosted_columns_are_the_largest_effects() {
        let f = crate::fixtures::boosted_matrix(7);
        let effects = year_effects(&f.matrix).unwrap();
        let top: Vec<i32> = effects.iter().take(f.boosted_years.len()).map(|e| e.cited_year).collect();
        let mut top_sorted = top.clone();
        top_sorted.sort_unstable();
        assert_eq!(top_sorted, f.boosted_years);
        // The boosted columns dominate the spread; the HSD criterion must
        // flag them all.
        for e in effects.iter().take(f.boosted_years.len()) {
            assert!(e.significant_vs_grand, "boosted year {} not flagged", e.cited_year);
        }
        // Prefix property of the top-k selection.
        let k10 = top_milestone_years(&f.matrix, 10).unwrap();
        let k11 = top_milestone_years(&f.matrix, 11).unwrap();
        assert_eq!(k10[..], k11[..10]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn f_matches_bruteforce_and_scaling_invariance(
            cells in proptest::collection::vec(proptest::collection::vec(proptest::option::of(0u32..60), 3..8), 2..8),
            scale in 1u32..50)
        {
            // Rows of equal width; at least two columns with data and one with 2+ obs.
            let width = cells.iter().map(|r| r.len()).min().unwrap();
            let ranks: Vec<Vec<Option<f64>>> = cells.iter().map(|r| r[..width].iter().map(|c| c.map(|v| v as f64)).collect()).collect();
            let m = MultiRpysMatrix {
                citing_years: (0..ranks.len() as i32).collect(),
                cited_years: (0..width as i32).collect(),
                ranks,
                segment_sizes: vec![1; cells.len()],
            };
            let groups = super::groups_of(&m);
            let n_total: usize = groups.iter().map(|(_, g)| g.len()).sum();
            prop_assume!(groups.len() >= 2 && n_total > groups.len());

            // Brute force: direct residuals per group.
            let grand: f64 = groups.iter().flat_map(|(_, g)| g).sum::<f64>() / n_total as f64;
            let ssb: f64 = groups.iter().map(|(_, g)| {
                let mean = g.iter().sum::<f64>() / g.len() as f64;
                g.len() as f64 * (mean - grand).powi(2)
            }).sum();
            let ssw: f64 = groups.iter().map(|(_, g)| {
                let mean = g.iter().sum::<f64>() / g.len() as f64;
                g.iter().map(|&x| (x - mean).powi(2)).sum::<f64>()
            }).sum();
            let df_b = groups.len() - 1;
            let df_w = n_total - groups.len();
            let expect = if ssw == 0.0 { if ssb == 0.0 { 0.0 } else { f64::INFINITY } }
                         else { (ssb / df_b as f64) / (ssw / df_w as f64) };

            let a = anova_by_cited_year(&m).unwrap();
            prop_assert_eq!(a.df_between, df_b);
            prop_assert_eq!(a.df_within, df_w);
            if expect.is_finite() {
                prop_assert!((a.f_stat - expect).abs() <= 1e-9 * expect.abs().max(1.0));
            } else {
                prop_assert!(!a.f_stat.is_finite());
            }

            // Positive scaling leaves F unchanged.
            let scaled = MultiRpysMatrix {
                ranks: m.ranks.iter().map(|r| r.iter().map(|c| c.map(|v| v * scale as f64)).collect()).collect(),
                ..m.clone()
            };
            let b = anova_by_cited_year(&scaled).unwrap();
            if a.f_stat.is_finite() {
                prop_assert!((a.f_stat - b.f_stat).abs() <= 1e-9 * a.f_stat.max(1.0));
            }
        }

        #[test]
        fn p_value_is_monotone_decreasing_in_f(f1 in 0.01f64..50.0, delta in 0.01f64..20.0, df1 in 1usize..40, df2 in 1usize..200) {
            let p1 = dist::f_tail_prob(f1, df1 as f64, df2 as f64);
            let p2 = dist::f_tail_prob(f1 + delta, df1 as f64, df2 as f64);
            prop_assert!(p2 <= p1 + 1e-12);
        }
    }
}
