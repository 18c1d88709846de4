//! Standalone SVG rendering: the deviation spectrogram with peak markers and
//! the multi-RPYS heatmap. Output is a pure function of (data, style); no
//! timestamps, external references, or non-deterministic formatting.

use crate::matrix::MultiRpysMatrix;
use crate::spectrum::Spectrum;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("empty spectrum: build a spectrum first")]
    EmptySpectrum,
    #[error("empty matrix: build a multi-RPYS matrix first")]
    EmptyMatrix,
    #[error("unknown palette {0:?} (expected viridis|greys)")]
    UnknownPalette(String),
}

/// Sequential palettes mapping [0, 1] monotonically in lightness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Palette {
    Viridis,
    Greys,
}

impl std::str::FromStr for Palette {
    type Err = RenderError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "viridis" => Ok(Palette::Viridis),
            "greys" | "grey" | "gray" | "grays" => Ok(Palette::Greys),
            other => Err(RenderError::UnknownPalette(other.to_string())),
        }
    }
}

const VIRIDIS_ANCHORS: [(u8, u8, u8); 9] = [
    (0x44, 0x01, 0x54),
    (0x48, 0x28, 0x78),
    (0x3e, 0x49, 0x89),
    (0x31, 0x68, 0x8e),
    (0x26, 0x82, 0x8e),
    (0x1f, 0x9e, 0x89),
    (0x35, 0xb7, 0x79),
    (0x6d, 0xcd, 0x59),
    (0xfd, 0xe7, 0x25),
];

impl Palette {
    /// Hex color for a position in [0, 1].
    pub fn color(&self, t: f64) -> String {
        let t = t.clamp(0.0, 1.0);
        let (r, g, b) = match self {
            Palette::Viridis => {
                let scaled = t * (VIRIDIS_ANCHORS.len() - 1) as f64;
                let i = (scaled.floor() as usize).min(VIRIDIS_ANCHORS.len() - 2);
                let frac = scaled - i as f64;
                let (a, b) = (VIRIDIS_ANCHORS[i], VIRIDIS_ANCHORS[i + 1]);
                (lerp(a.0, b.0, frac), lerp(a.1, b.1, frac), lerp(a.2, b.2, frac))
            }
            Palette::Greys => (lerp(0xf7, 0x25, t), lerp(0xf7, 0x25, t), lerp(0xf7, 0x25, t)),
        };
        format!("#{r:02x}{g:02x}{b:02x}")
    }
}

fn lerp(a: u8, b: u8, t: f64) -> u8 {
    (a as f64 + (b as f64 - a as f64) * t).round() as u8
}

/// Rendering options shared by both charts.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotStyle {
    pub width: u32,
    pub height: u32,
    pub color_map: Palette,
    /// Years between axis ticks.
    pub axis_label_step: i32,
    pub missing_cell_color: String,
}

impl Default for PlotStyle {
    fn default() -> Self {
        PlotStyle {
            width: 960,
            height: 600,
            color_map: Palette::Viridis,
            axis_label_step: 10,
            missing_cell_color: "#dddddd".to_string(),
        }
    }
}

const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 22.0;
const MARGIN_BOTTOM: f64 = 46.0;

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

fn svg_open(out: &mut String, style: &PlotStyle) {
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">"#,
        w = style.width,
        h = style.height
    );
}

/// Deviation-by-reference-year line chart with peak markers.
pub fn render_spectrogram(s: &Spectrum, peaks: &[i32], style: &PlotStyle) -> Result<String, RenderError> {
    if s.is_empty() {
        return Err(RenderError::EmptySpectrum);
    }
    let plot_w = style.width as f64 - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = style.height as f64 - MARGIN_TOP - MARGIN_BOTTOM;
    let (y0, y1) = (*s.years.first().unwrap(), *s.years.last().unwrap());
    let x_of = |year: i32| -> f64 {
        if y1 == y0 {
            MARGIN_LEFT + plot_w / 2.0
        } else {
            MARGIN_LEFT + (year - y0) as f64 / (y1 - y0) as f64 * plot_w
        }
    };
    let dev_min = s.deviation.iter().copied().fold(f64::INFINITY, f64::min).min(0.0);
    let dev_max = s.deviation.iter().copied().fold(f64::NEG_INFINITY, f64::max).max(0.0);
    let (dev_min, dev_max) = if dev_min == dev_max { (dev_min - 1.0, dev_max + 1.0) } else { (dev_min, dev_max) };
    let pad = 0.05 * (dev_max - dev_min);
    let (lo, hi) = (dev_min - pad, dev_max + pad);
    let y_of = |d: f64| -> f64 { MARGIN_TOP + (hi - d) / (hi - lo) * plot_h };

    let mut out = String::new();
    svg_open(&mut out, style);
    let _ = writeln!(
        out,
        r##"<rect x="{}" y="{}" width="{}" height="{}" fill="#ffffff" stroke="#999999" stroke-width="1"/>"##,
        fmt(MARGIN_LEFT),
        fmt(MARGIN_TOP),
        fmt(plot_w),
        fmt(plot_h)
    );
    // Zero axis.
    let _ = writeln!(
        out,
        r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#bbbbbb" stroke-width="1"/>"##,
        fmt(MARGIN_LEFT),
        fmt(y_of(0.0)),
        fmt(MARGIN_LEFT + plot_w),
        fmt(y_of(0.0))
    );
    // X ticks every axis_label_step years from the first year.
    let step = style.axis_label_step.max(1);
    for (i, &year) in s.years.iter().enumerate() {
        if (year - y0) % step != 0 {
            continue;
        }
        let x = x_of(year);
        let _ = writeln!(
            out,
            r##"<g class="xtick"><line x1="{x}" y1="{t}" x2="{x}" y2="{b}" stroke="#333333" stroke-width="1"/><text x="{x}" y="{label_y}" font-size="11" text-anchor="middle">{year}</text></g>"##,
            x = fmt(x),
            t = fmt(MARGIN_TOP + plot_h),
            b = fmt(MARGIN_TOP + plot_h + 5.0),
            label_y = fmt(MARGIN_TOP + plot_h + 18.0),
        );
        let _ = i;
    }
    // Y ticks: five evenly spaced values.
    for i in 0..=4 {
        let value = lo + (hi - lo) * i as f64 / 4.0;
        let y = y_of(value);
        let _ = writeln!(
            out,
            r##"<g class="ytick"><line x1="{l}" y1="{y}" x2="{r}" y2="{y}" stroke="#333333" stroke-width="1"/><text x="{tx}" y="{ty}" font-size="11" text-anchor="end">{v}</text></g>"##,
            l = fmt(MARGIN_LEFT - 5.0),
            r = fmt(MARGIN_LEFT),
            y = fmt(y),
            tx = fmt(MARGIN_LEFT - 8.0),
            ty = fmt(y + 4.0),
            v = fmt(value),
        );
    }
    // Deviation polyline.
    let points: Vec<String> = s
        .years
        .iter()
        .zip(&s.deviation)
        .map(|(&year, &d)| format!("{},{}", fmt(x_of(year)), fmt(y_of(d))))
        .collect();
    let _ = writeln!(
        out,
        r##"<polyline fill="none" stroke="#2c6fbb" stroke-width="1.5" points="{}"/>"##,
        points.join(" ")
    );
    // Peak markers.
    for &year in peaks {
        if let Some(d) = s.deviation_at(year) {
            let _ = writeln!(
                out,
                r##"<circle class="peak" cx="{}" cy="{}" r="3.5" fill="#d62728" data-year="{year}"/>"##,
                fmt(x_of(year)),
                fmt(y_of(d)),
            );
        }
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">reference publication year</text>"#,
        fmt(MARGIN_LEFT + plot_w / 2.0),
        fmt(style.height as f64 - 8.0)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {})">deviation from 5-year median</text>"#,
        fmt(MARGIN_TOP + plot_h / 2.0),
        fmt(MARGIN_TOP + plot_h / 2.0)
    );
    out.push_str("</svg>\n");
    Ok(out)
}

/// Citing-year by cited-year heatmap. Each row's ranks are normalized to
/// [0, 1] before palette lookup, so the maximal cell of every row lands on
/// palette position 1. Missing cells use the fixed neutral color.
pub fn render_heatmap(m: &MultiRpysMatrix, style: &PlotStyle) -> Result<String, RenderError> {
    if m.is_empty() {
        return Err(RenderError::EmptyMatrix);
    }
    let plot_w = style.width as f64 - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = style.height as f64 - MARGIN_TOP - MARGIN_BOTTOM;
    let cell_w = plot_w / m.cited_years.len() as f64;
    let cell_h = plot_h / m.citing_years.len() as f64;

    let mut out = String::new();
    svg_open(&mut out, style);
    for (i, row) in m.ranks.iter().enumerate() {
        let (row_min, row_max) = row
            .iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| (lo.min(r), hi.max(r)));
        let y = MARGIN_TOP + i as f64 * cell_h;
        for (j, cell) in row.iter().enumerate() {
            let x = MARGIN_LEFT + j as f64 * cell_w;
            let (fill, pos_attr) = match cell {
                Some(rank) => {
                    let pos = if row_max > row_min { (rank - row_min) / (row_max - row_min) } else { 1.0 };
                    (style.color_map.color(pos), format!(r#" data-pos="{}""#, format_args!("{pos:.4}")))
                }
                None => (style.missing_cell_color.clone(), String::new()),
            };
            let _ = writeln!(
                out,
                r#"<rect class="cell" x="{x}" y="{y}" width="{w}" height="{h}" fill="{fill}" data-citing="{citing}" data-cited="{cited}"{pos_attr}/>"#,
                x = fmt(x),
                y = fmt(y),
                w = fmt(cell_w),
                h = fmt(cell_h),
                citing = m.citing_years[i],
                cited = m.cited_years[j],
            );
        }
    }
    // Axis labels.
    let step = style.axis_label_step.max(1);
    let cited0 = m.cited_years[0];
    for (j, &year) in m.cited_years.iter().enumerate() {
        if (year - cited0) % step != 0 {
            continue;
        }
        let x = MARGIN_LEFT + (j as f64 + 0.5) * cell_w;
        let _ = writeln!(
            out,
            r##"<g class="xtick"><line x1="{x}" y1="{t}" x2="{x}" y2="{b}" stroke="#333333" stroke-width="1"/><text x="{x}" y="{ty}" font-size="11" text-anchor="middle">{year}</text></g>"##,
            x = fmt(x),
            t = fmt(MARGIN_TOP + plot_h),
            b = fmt(MARGIN_TOP + plot_h + 5.0),
            ty = fmt(MARGIN_TOP + plot_h + 18.0),
        );
    }
    let citing0 = m.citing_years[0];
    for (i, &year) in m.citing_years.iter().enumerate() {
        if (year - citing0) % step.min(5) != 0 {
            continue;
        }
        let y = MARGIN_TOP + (i as f64 + 0.5) * cell_h;
        let _ = writeln!(
            out,
            r#"<g class="ytick"><text x="{tx}" y="{ty}" font-size="11" text-anchor="end">{year}</text></g>"#,
            tx = fmt(MARGIN_LEFT - 6.0),
            ty = fmt(y + 4.0),
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">cited reference year</text>"#,
        fmt(MARGIN_LEFT + plot_w / 2.0),
        fmt(style.height as f64 - 8.0)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {})">citing publication year</text>"#,
        fmt(MARGIN_TOP + plot_h / 2.0),
        fmt(MARGIN_TOP + plot_h / 2.0)
    );
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::Spectrum;
    use std::collections::BTreeMap;

    fn spectrum_of(pairs: &[(i32, u64)]) -> Spectrum {
        let counts: BTreeMap<i32, u64> = pairs.iter().copied().collect();
        Spectrum::from_year_counts(&counts)
    }

    #[test]
    fn three_year_spectrum_has_three_xticks_at_step_one() {
        let s = spectrum_of(&[(2000, 1), (2001, 5), (2002, 2)]);
        let style = PlotStyle { axis_label_step: 1, ..Default::default() };
        let svg = render_spectrogram(&s, &[2001], &style).unwrap();
        assert_eq!(svg.matches(r#"class="xtick""#).count(), 3);
        assert!(roxmltree::Document::parse(&svg).is_ok());
    }

    #[test]
    fn identical_inputs_render_identical_bytes() {
        let s = spectrum_of(&[(1990, 3), (1991, 9), (1992, 4), (1993, 2)]);
        let style = PlotStyle::default();
        let peaks = crate::spectrum::detect_peaks(&s);
        assert_eq!(render_spectrogram(&s, &peaks, &style).unwrap(), render_spectrogram(&s, &peaks, &style).unwrap());
    }

    #[test]
    fn empty_spectrum_is_an_error() {
        let s = Spectrum { years: vec![], counts: vec![], median5: vec![], deviation: vec![] };
        let err = render_spectrogram(&s, &[], &PlotStyle::default()).unwrap_err();
        assert!(err.to_string().contains("build a spectrum first"));
    }

    #[test]
    fn marked_peaks_equal_detected_peaks() {
        let f = crate::fixtures::spike_spectrum(3);
        let s = Spectrum::from_year_counts(&f.counts);
        let peaks = crate::spectrum::detect_peaks(&s);
        let svg = render_spectrogram(&s, &peaks, &PlotStyle::default()).unwrap();
        assert_eq!(svg.matches(r#"class="peak""#).count(), peaks.len());
        for y in &peaks {
            assert!(svg.contains(&format!(r#"data-year="{y}""#)));
        }
    }

    #[test]
    fn heatmap_normalizes_each_row_over_the_palette() {
        let m = crate::matrix::MultiRpysMatrix {
            citing_years: vec![2010],
            cited_years: vec![2000, 2001, 2002],
            ranks: vec![vec![Some(1.0), Some(2.0), Some(3.0)]],
            segment_sizes: vec![1],
        };
        let svg = render_heatmap(&m, &PlotStyle::default()).unwrap();
        assert!(svg.contains(r#"data-pos="0.0000""#));
        assert!(svg.contains(r#"data-pos="0.5000""#));
        assert!(svg.contains(r#"data-pos="1.0000""#));
        assert!(roxmltree::Document::parse(&svg).is_ok());
    }

    #[test]
    fn missing_cells_use_the_neutral_color() {
        let m = crate::matrix::MultiRpysMatrix {
            citing_years: vec![2010, 2011],
            cited_years: vec![2000, 2001],
            ranks: vec![vec![Some(1.0), Some(2.0)], vec![None, Some(1.0)]],
            segment_sizes: vec![1, 1],
        };
        let svg = render_heatmap(&m, &PlotStyle::default()).unwrap();
        assert!(svg.contains(r##"fill="#dddddd""##));
    }

    #[test]
    fn palettes_are_monotone_in_lightness() {
        for palette in [Palette::Viridis, Palette::Greys] {
            let luminance = |t: f64| -> f64 {
                let hex = palette.color(t);
                let r = u8::from_str_radix(&hex[1..3], 16).unwrap() as f64;
                let g = u8::from_str_radix(&hex[3..5], 16).unwrap() as f64;
                let b = u8::from_str_radix(&hex[5..7], 16).unwrap() as f64;
                0.2126 * r + 0.7152 * g + 0.0722 * b
            };
            let samples: Vec<f64> = (0..=20).map(|i| luminance(i as f64 / 20.0)).collect();
            let increasing = samples.windows(2).all(|w| w[1] >= w[0] - 1.0);
            let decreasing = samples.windows(2).all(|w| w[1] <= w[0] + 1.0);
            assert!(increasing || decreasing, "{palette:?} not monotone: {samples:?}");
        }
    }

    #[test]
    fn svg_has_no_external_references() {
        let s = spectrum_of(&[(2000, 1), (2001, 5), (2002, 2)]);
        let svg = render_spectrogram(&s, &[], &PlotStyle::default()).unwrap();
        assert!(!svg.contains("http://") || svg.matches("http://").count() == svg.matches("http://www.w3.org/2000/svg").count());
        assert!(!svg.contains("xlink"));
        assert!(!svg.contains("url("));
    }
}
