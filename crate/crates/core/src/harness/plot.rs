//! Minimal SVG box plots.

use std::fmt::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// One box: Tukey whiskers, quartiles and outliers.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSummary {
    pub label: String,
    pub whisker_low: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

impl BoxSummary {
    pub fn from_stats(label: impl Into<String>, b: &super::BoxStats) -> Self {
        Self {
            label: label.into(),
            whisker_low: b.whisker_low,
            q1: b.q1,
            median: b.median,
            q3: b.q3,
            whisker_high: b.whisker_high,
            outliers: b.outliers.clone(),
        }
    }

    fn extent(&self) -> (f64, f64) {
        self.outliers
            .iter()
            .fold((self.whisker_low, self.whisker_high), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

pub struct Panel {
    pub title: String,
    pub boxes: Vec<BoxSummary>,
}

const PANEL_W: f64 = 320.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;

/// Side-by-side panels sharing nothing but a title style; each has its own
/// y scale, labelled "SAE (mmHg)".
pub fn render_svg(panels: &[Panel]) -> String {
    let width = panels.len().max(1) as f64 * (PANEL_W + MARGIN_L) + 20.0;
    let height = PANEL_H + MARGIN_T + MARGIN_B;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, panel) in panels.iter().enumerate() {
        let x0 = 10.0 + i as f64 * (PANEL_W + MARGIN_L) + MARGIN_L;
        draw_panel(&mut s, panel, x0, MARGIN_T);
    }
    s.push_str("</svg>\n");
    s
}

fn draw_panel(s: &mut String, panel: &Panel, x0: f64, y0: f64) {
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="13">{}</text>"#,
        x0 + PANEL_W / 2.0,
        y0 - 15.0,
        escape(&panel.title)
    );
    let _ = writeln!(s, r##"<rect x="{x0:.1}" y="{y0:.1}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="#444"/>"##);
    let (mut lo, mut hi) = panel
        .boxes
        .iter()
        .map(BoxSummary::extent)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (c, d)| (a.min(c), b.max(d)));
    if !(lo.is_finite() && hi.is_finite()) {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">no completed runs</text>"#,
            x0 + PANEL_W / 2.0,
            y0 + PANEL_H / 2.0
        );
        return;
    }
    if hi - lo < 1e-9 {
        lo -= 1.0;
        hi += 1.0;
    }
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);
    let y = |v: f64| y0 + PANEL_H * (1.0 - (v - lo) / (hi - lo));

    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.0}</text>"#,
            x0 - 6.0,
            y(v) + 4.0,
            v
        );
    }
    let _ = writeln!(
        s,
        r#"<text transform="translate({:.1},{:.1}) rotate(-90)" text-anchor="middle">SAE (mmHg)</text>"#,
        x0 - 52.0,
        y0 + PANEL_H / 2.0
    );

    let n = panel.boxes.len().max(1) as f64;
    let slot = PANEL_W / n;
    let colors = ["#3b6fb6", "#c0392b", "#2e8b57", "#8e44ad"];
    for (j, b) in panel.boxes.iter().enumerate() {
        let cx = x0 + slot * (j as f64 + 0.5);
        let half = slot * 0.2;
        let color = colors[j % colors.len()];
        let _ = writeln!(
            s,
            r#"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="{color}"/>"#,
            y(b.whisker_low),
            y(b.q1)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="{color}"/>"#,
            y(b.q3),
            y(b.whisker_high)
        );
        for v in [b.whisker_low, b.whisker_high] {
            let _ = writeln!(
                s,
                r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}"/>"#,
                cx - half / 2.0,
                y(v),
                cx + half / 2.0,
                y(v)
            );
        }
        let _ = writeln!(
            s,
            r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{color}" fill-opacity="0.25" stroke="{color}"/>"#,
            cx - half,
            y(b.q3),
            2.0 * half,
            (y(b.q1) - y(b.q3)).max(0.5)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="2"/>"#,
            cx - half,
            y(b.median),
            cx + half,
            y(b.median)
        );
        for &o in &b.outliers {
            let _ = writeln!(
                s,
                r#"<circle cx="{cx:.1}" cy="{:.1}" r="3" fill="none" stroke="{color}"/>"#,
                y(o)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            y0 + PANEL_H + 18.0,
            escape(&b.label)
        );
    }
}

/// One row of a `boxplot.csv` written by the cohort comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxRow {
    pub scenario: String,
    pub controller: String,
    pub summary: BoxSummary,
}

pub fn read_boxplot_csv(path: &Path) -> Result<Vec<BoxRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != 8 {
            return Err(Error::TraceTooShort(format!("{}: expected 8 columns, got {}", path.display(), rec.len())));
        }
        let num = |i: usize| -> Result<f64> {
            rec[i].parse().map_err(|_| Error::InvalidParameter {
                name: format!("{} column {}", path.display(), i + 1),
                reason: format!("not a number: `{}`", &rec[i]),
            })
        };
        let outliers = rec[7]
            .split(';')
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse().map_err(|_| Error::InvalidParameter {
                    name: format!("{} outliers", path.display()),
                    reason: format!("not a number: `{s}`"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let label = format!("{} {}", rec[1].to_uppercase(), &rec[0]);
        rows.push(BoxRow {
            scenario: rec[0].to_string(),
            controller: rec[1].to_string(),
            summary: BoxSummary {
                label,
                whisker_low: num(2)?,
                q1: num(3)?,
                median: num(4)?,
                q3: num(5)?,
                whisker_high: num(6)?,
                outliers,
            },
        });
    }
    Ok(rows)
}

/// Three panels: systemic resistance pair, pulmonary resistance pair, and
/// exercise with posture. Scenarios missing from `rows` leave gaps.
pub fn summary_panels(rows: &[BoxRow]) -> Vec<Panel> {
    let groups: [(&str, [&str; 2]); 3] = [
        ("Systemic resistance", ["rsa-up", "rsa-down"]),
        ("Pulmonary resistance", ["rpa-up", "rpa-down"]),
        ("Exercise and posture", ["exercise", "posture"]),
    ];
    groups
        .iter()
        .map(|(title, scenarios)| Panel {
            title: title.to_string(),
            boxes: scenarios
                .iter()
                .flat_map(|sc| rows.iter().filter(move |r| r.scenario == *sc))
                .map(|r| r.summary.clone())
                .collect(),
        })
        .collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(label: &str) -> BoxSummary {
        BoxSummary {
            label: label.into(),
            whisker_low: 1.0,
            q1: 2.0,
            median: 3.0,
            q3: 4.0,
            whisker_high: 5.0,
            outliers: vec![100.0],
        }
    }

    #[test]
    fn one_rect_per_box_plus_frames() {
        let svg = render_svg(&[
            Panel { title: "Rsa".into(), boxes: vec![sample("MFAC rsa-up"), sample("PID rsa-up")] },
            Panel { title: "empty".into(), boxes: vec![] },
        ]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        // background + 2 frames + 2 boxes
        assert_eq!(svg.matches("<rect").count(), 5);
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains("no completed runs"));
    }

    #[test]
    fn boxplot_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("boxplot.csv");
        std::fs::write(
            &path,
            "scenario,controller,whisker_low,q1,median,q3,whisker_high,outliers\n\
             rsa-up,mfac,1,2,3,4,5,100;200\nexercise,pid,1,2,3,4,5,\n",
        )
        .unwrap();
        let rows = read_boxplot_csv(&path).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].summary.outliers, vec![100.0, 200.0]);
        assert_eq!(rows[0].summary.label, "MFAC rsa-up");
        assert!(rows[1].summary.outliers.is_empty());
        let panels = summary_panels(&rows);
        assert_eq!(panels.iter().map(|p| p.boxes.len()).collect::<Vec<_>>(), [1, 0, 1]);
    }

    #[test]
    fn labels_escaped() {
        let svg = render_svg(&[Panel { title: "a<b".into(), boxes: vec![sample("x&y")] }]);
        assert!(svg.contains("a&lt;b") && svg.contains("x&amp;y"));
    }
}
