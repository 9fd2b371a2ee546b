//! Verification report artifacts: a JSON result document and an SVG plot
//! of the golden envelope, the DUT curve and the flagged bands.
//!
//! Both outputs are byte-deterministic for a given input.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::detect::{Decision, DetectorConfig, FlaggedBand, Verdict};
use crate::rf::MagnitudeTrace;
use crate::signature::GoldenSignature;

pub const RESULT_SCHEMA: &str = "pdnprint-verdict/1";
pub const RESULT_FILE: &str = "verdict.json";
pub const PLOT_FILE: &str = "verdict.svg";

#[derive(Debug, Serialize)]
struct ResultDocument<'a> {
    schema: &'static str,
    decision: Decision,
    flagged_bandwidth_hz: f64,
    max_deviation_sigma: f64,
    bands: &'a [FlaggedBand],
    config: &'a DetectorConfig,
    golden: GoldenSummary<'a>,
    frequency_hz: &'a [f64],
    deviation_sigma: &'a [f64],
}

#[derive(Debug, Serialize)]
struct GoldenSummary<'a> {
    n_samples: usize,
    n_trials: usize,
    metadata: &'a std::collections::BTreeMap<String, String>,
}

/// The machine-readable result document as pretty-printed JSON.
pub fn result_json(verdict: &Verdict, golden: &GoldenSignature) -> String {
    let doc = ResultDocument {
        schema: RESULT_SCHEMA,
        decision: verdict.decision,
        flagged_bandwidth_hz: verdict.flagged_bandwidth(),
        max_deviation_sigma: verdict.max_deviation(),
        bands: &verdict.bands,
        config: &verdict.config,
        golden: GoldenSummary {
            n_samples: golden.n_samples,
            n_trials: golden.n_trials,
            metadata: &verdict.golden_metadata,
        },
        frequency_hz: golden.grid().points(),
        deviation_sigma: &verdict.deviation,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("result document serializes");
    s.push('\n');
    s
}

const WIDTH: f64 = 960.0;
const PANEL_HEIGHT: f64 = 380.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

struct Panel {
    top: f64,
    f_lo: f64,
    f_hi: f64,
    db_lo: f64,
    db_hi: f64,
}

impl Panel {
    fn x(&self, f: f64) -> f64 {
        MARGIN_LEFT + (f - self.f_lo) / (self.f_hi - self.f_lo) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, db: f64) -> f64 {
        let h = PANEL_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        self.top + MARGIN_TOP + (self.db_hi - db) / (self.db_hi - self.db_lo) * h
    }

    fn bottom(&self) -> f64 {
        self.top + PANEL_HEIGHT - MARGIN_BOTTOM
    }
}

fn polyline(out: &mut String, class: &str, pts: impl Iterator<Item = (f64, f64)>) {
    let _ = write!(out, r#"<polyline class="{class}" points=""#);
    let mut first = true;
    for (x, y) in pts {
        if !first {
            out.push(' ');
        }
        first = false;
        let _ = write!(out, "{x:.2},{y:.2}");
    }
    out.push_str("\"/>\n");
}

fn format_hz(f: f64) -> String {
    if f >= 1e9 {
        format!("{:.3} GHz", f / 1e9)
    } else if f >= 1e6 {
        format!("{:.1} MHz", f / 1e6)
    } else {
        format!("{:.1} kHz", f / 1e3)
    }
}

fn draw_panel(
    out: &mut String,
    panel: &Panel,
    range: std::ops::RangeInclusive<usize>,
    golden: &GoldenSignature,
    dut: &MagnitudeTrace,
    half_width: f64,
    title: &str,
) {
    let f = golden.grid().points();
    let (mu, sd, x) = (golden.mean_db(), golden.sigma_db(), dut.values_db());
    let _ = writeln!(
        out,
        r##"<rect class="frame" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#444"/>"##,
        MARGIN_LEFT,
        panel.top + MARGIN_TOP,
        WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
        PANEL_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="14">{title}</text>"#,
        MARGIN_LEFT,
        panel.top + MARGIN_TOP - 10.0
    );
    // Envelope: upper edge left to right, lower edge back.
    let _ = write!(
        out,
        r##"<polygon class="envelope" fill="#9ecae1" fill-opacity="0.5" points=""##
    );
    let upper = range
        .clone()
        .map(|i| (panel.x(f[i]), panel.y(mu[i] + half_width * sd[i])));
    let lower = range
        .clone()
        .rev()
        .map(|i| (panel.x(f[i]), panel.y(mu[i] - half_width * sd[i])));
    let mut first = true;
    for (px, py) in upper.chain(lower) {
        if !first {
            out.push(' ');
        }
        first = false;
        let _ = write!(out, "{px:.2},{py:.2}");
    }
    out.push_str("\"/>\n");
    polyline(out, "mean", range.clone().map(|i| (panel.x(f[i]), panel.y(mu[i]))));
    polyline(out, "dut", range.clone().map(|i| (panel.x(f[i]), panel.y(x[i]))));
    for (value, anchor, px) in [
        (panel.f_lo, "start", panel.x(panel.f_lo)),
        (panel.f_hi, "end", panel.x(panel.f_hi)),
    ] {
        let _ = writeln!(
            out,
            r#"<text x="{px:.2}" y="{:.2}" font-size="12" text-anchor="{anchor}">{}</text>"#,
            panel.bottom() + 18.0,
            format_hz(value)
        );
    }
    for (value, py) in [(panel.db_hi, panel.y(panel.db_hi)), (panel.db_lo, panel.y(panel.db_lo))] {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="end">{value:.2} dB</text>"#,
            MARGIN_LEFT - 6.0,
            py + 4.0
        );
    }
}

fn db_limits(
    range: std::ops::RangeInclusive<usize>,
    golden: &GoldenSignature,
    dut: &MagnitudeTrace,
    half_width: f64,
) -> (f64, f64) {
    let (mu, sd, x) = (golden.mean_db(), golden.sigma_db(), dut.values_db());
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in range {
        lo = lo.min(x[i]).min(mu[i] - half_width * sd[i]);
        hi = hi.max(x[i]).max(mu[i] + half_width * sd[i]);
    }
    let pad = ((hi - lo) * 0.05).max(1e-3);
    (lo - pad, hi + pad)
}

/// SVG plot: golden mean, ±(k/2)σ envelope, DUT curve, one `class="flag"`
/// rectangle per band and, for a counterfeit verdict, a zoom panel on the
/// band with the largest deviation.
pub fn render_svg(verdict: &Verdict, golden: &GoldenSignature, dut: &MagnitudeTrace) -> String {
    let n = golden.grid().len();
    let f = golden.grid().points();
    let half_width = verdict.config.k_sigma / 2.0;
    let worst = verdict.worst_band();
    let height = if worst.is_some() {
        2.0 * PANEL_HEIGHT
    } else {
        PANEL_HEIGHT
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}">"#
    );
    out.push_str(
        "<style>.mean{fill:none;stroke:#08519c;stroke-width:1.2}.dut{fill:none;stroke:#d7301f;stroke-width:1}.flag{fill:#fdae6b;fill-opacity:0.35}</style>\n",
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{height}" fill="white"/>"#);

    let (db_lo, db_hi) = db_limits(0..=n - 1, golden, dut, half_width);
    let main = Panel {
        top: 0.0,
        f_lo: f[0],
        f_hi: f[n - 1].max(f[0] * (1.0 + 1e-9)),
        db_lo,
        db_hi,
    };
    let decision = match verdict.decision {
        Decision::Genuine => "genuine",
        Decision::Counterfeit => "counterfeit",
    };
    out.push_str("<g class=\"main-panel\">\n");
    for b in &verdict.bands {
        let x0 = main.x(b.f_start);
        let x1 = main.x(b.f_stop).max(x0 + 1.0);
        let _ = writeln!(
            out,
            r#"<rect class="flag" x="{x0:.2}" y="{:.2}" width="{:.2}" height="{:.2}"/>"#,
            main.top + MARGIN_TOP,
            x1 - x0,
            PANEL_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
        );
    }
    draw_panel(
        &mut out,
        &main,
        0..=n - 1,
        golden,
        dut,
        half_width,
        &format!("|S11| vs golden (±{half_width}σ envelope): {decision}"),
    );
    out.push_str("</g>\n");

    if let Some(b) = worst {
        let span = b.last_index - b.first_index;
        let pad = (span / 2).max(5);
        let lo = b.first_index.saturating_sub(pad);
        let hi = (b.last_index + pad).min(n - 1);
        let (db_lo, db_hi) = db_limits(lo..=hi, golden, dut, half_width);
        let zoom = Panel {
            top: PANEL_HEIGHT,
            f_lo: f[lo],
            f_hi: f[hi].max(f[lo] * (1.0 + 1e-9)),
            db_lo,
            db_hi,
        };
        out.push_str("<g class=\"zoom-panel\">\n");
        draw_panel(
            &mut out,
            &zoom,
            lo..=hi,
            golden,
            dut,
            half_width,
            &format!(
                "zoom: {} to {} (max {:.1}σ)",
                format_hz(b.f_start),
                format_hz(b.f_stop),
                b.max_deviation_sigma
            ),
        );
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

/// Writes `verdict.json` and `verdict.svg` into `dir`, creating it if needed.
pub fn write_report(
    dir: &Path,
    verdict: &Verdict,
    golden: &GoldenSignature,
    dut: &MagnitudeTrace,
) -> std::io::Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let json = dir.join(RESULT_FILE);
    let svg = dir.join(PLOT_FILE);
    std::fs::write(&json, result_json(verdict, golden))?;
    std::fs::write(&svg, render_svg(verdict, golden, dut))?;
    Ok((json, svg))
}
