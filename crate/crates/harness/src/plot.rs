//! Grouped bar charts of the summary table as static SVG.
//!
//! Each bar carries its AV case, attack and exact value as `data-*`
//! attributes, and the root element carries the pixels-per-unit scale, so
//! charts can be checked without a renderer.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use lidarsec_core::metrics::SummaryRow;

pub struct PlotMetric {
    pub file: &'static str,
    pub title: &'static str,
    pub value: fn(&SummaryRow) -> f64,
}

pub const PLOT_METRICS: [PlotMetric; 3] = [
    PlotMetric {
        file: "ft_inc.svg",
        title: "False track increment per frame",
        value: |r| r.ft_inc,
    },
    PlotMetric {
        file: "mt_inc.svg",
        title: "Missed track increment per frame",
        value: |r| r.mt_inc,
    },
    PlotMetric {
        file: "unsafe_fraction.svg",
        title: "Fraction of unsafe scenes",
        value: |r| r.unsafe_fraction,
    },
];

const COLORS: [&str; 6] = [
    "#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860",
];
const BAR_W: f64 = 18.0;
const GROUP_GAP: f64 = 24.0;
const LEFT: f64 = 60.0;
const TOP: f64 = 40.0;
const PLOT_H: f64 = 240.0;
const BOTTOM: f64 = 60.0;

fn unique<'a>(it: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for s in it {
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

/// One chart: groups are attacks, bars within a group are AV cases.
pub fn render_svg(rows: &[SummaryRow], metric: &PlotMetric) -> String {
    let attacks = unique(rows.iter().map(|r| r.attack.as_str()));
    let avs = unique(rows.iter().map(|r| r.av.as_str()));
    let values: Vec<f64> = rows.iter().map(metric.value).collect();
    let vmax = values.iter().copied().fold(0.0_f64, f64::max);
    let vmin = values.iter().copied().fold(0.0_f64, f64::min);
    let span = if vmax > vmin { vmax - vmin } else { 1.0 };
    let scale = PLOT_H / span;
    let zero_y = TOP + vmax * scale;
    let group_w = avs.len() as f64 * BAR_W + GROUP_GAP;
    let width = LEFT + attacks.len() as f64 * group_w + 120.0;
    let height = TOP + PLOT_H + BOTTOM;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" data-scale="{scale}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{LEFT}" y="20" font-size="14">{}</text>"#,
        metric.title
    );
    for i in 0..=4 {
        let v = vmin + span * i as f64 / 4.0;
        let y = zero_y - v * scale;
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" x2="{}" y1="{y}" y2="{y}" stroke="#ddd"/><text x="{}" y="{}" text-anchor="end">{v:.2}</text>"##,
            width - 120.0,
            LEFT - 4.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r##"<line x1="{LEFT}" x2="{}" y1="{zero_y}" y2="{zero_y}" stroke="#000"/>"##,
        width - 120.0
    );
    for (g, attack) in attacks.iter().enumerate() {
        let gx = LEFT + GROUP_GAP / 2.0 + g as f64 * group_w;
        for (b, av) in avs.iter().enumerate() {
            let Some(row) = rows.iter().find(|r| r.attack == *attack && r.av == *av) else {
                continue;
            };
            let v = (metric.value)(row);
            let h = v.abs() * scale;
            let y = if v >= 0.0 { zero_y - h } else { zero_y };
            let _ = writeln!(
                s,
                r#"<rect class="bar" data-av="{av}" data-attack="{attack}" data-value="{v}" x="{}" y="{y}" width="{BAR_W}" height="{h}" fill="{}"/>"#,
                gx + b as f64 * BAR_W,
                COLORS[b % COLORS.len()]
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{attack}</text>"#,
            gx + avs.len() as f64 * BAR_W / 2.0,
            TOP + PLOT_H + 20.0
        );
    }
    let lx = width - 100.0;
    for (b, av) in avs.iter().enumerate() {
        let ly = TOP + b as f64 * 16.0;
        let _ = writeln!(
            s,
            r#"<rect x="{lx}" y="{ly}" width="10" height="10" fill="{}"/><text x="{}" y="{}">{av}</text>"#,
            COLORS[b % COLORS.len()],
            lx + 14.0,
            ly + 9.0
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Write one chart per metric into `dir`. An empty summary writes nothing.
pub fn emit_plots(summary: &[SummaryRow], dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    if summary.is_empty() {
        return Ok(Vec::new());
    }
    std::fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    for m in &PLOT_METRICS {
        let p = dir.join(m.file);
        std::fs::write(&p, render_svg(summary, m))?;
        out.push(p);
    }
    Ok(out)
}
