//! Dependency-free SVG rendering of benchmark results.
//!
//! One panel per deletion percentage: grouped bars show the wall-clock
//! cost per strategy at each training-set size (left axis), and an
//! overlaid marker shows the percent change in consistency (right
//! axis). Output is plain SVG text, byte-identical for identical input.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// One parsed results row, as far as plotting is concerned.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartRow {
    pub strategy: String,
    pub target_size: u64,
    pub delete_percentage: f64,
    pub percent_change: Option<f64>,
    pub cost_seconds: f64,
}

/// Parse the results CSV, naming any missing column.
pub fn parse_results_csv(text: &str) -> Result<Vec<ChartRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("results CSV is missing column {name:?}")))
    };
    let strategy = col("strategy")?;
    let target_size = col("target_size")?;
    let delete_percentage = col("delete_percentage")?;
    let percent_change = col("percent_change")?;
    let cost = col("computational_cost_seconds")?;

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let field = |idx: usize| record.get(idx).unwrap_or("").trim();
        let parse_f64 = |idx: usize, what: &str| -> Result<f64> {
            field(idx)
                .parse()
                .map_err(|_| Error::Schema(format!("bad {what} value {:?}", field(idx))))
        };
        rows.push(ChartRow {
            strategy: field(strategy).to_string(),
            target_size: field(target_size).parse().map_err(|_| {
                Error::Schema(format!("bad target_size value {:?}", field(target_size)))
            })?,
            delete_percentage: parse_f64(delete_percentage, "delete_percentage")?,
            percent_change: match field(percent_change) {
                "NA" => None,
                _ => Some(parse_f64(percent_change, "percent_change")?),
            },
            cost_seconds: parse_f64(cost, "computational_cost_seconds")?,
        });
    }
    Ok(rows)
}

const PANEL_W: f64 = 300.0;
const PANEL_H: f64 = 260.0;
const PANEL_GAP: f64 = 56.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 72.0;
const MARGIN_TOP: f64 = 64.0;
const MARGIN_BOTTOM: f64 = 56.0;

const PALETTE: [&str; 4] = ["#4878a8", "#e07b39", "#6aa84f", "#a64d79"];

struct CellStat {
    cost: f64,
    percent_change: Option<f64>,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

fn fmt_coord(v: f64) -> String {
    format!("{v:.2}")
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// Render the grouped cost/consistency chart. Repeated cells (multiple
/// repeats of one strategy x size x percentage) are collapsed to their
/// medians. Fails on a CSV with no data rows.
pub fn render_results_chart(rows: &[ChartRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::invalid("no data rows to plot"));
    }

    let mut pcts: Vec<u64> = rows.iter().map(|r| r.delete_percentage.to_bits()).collect();
    pcts.sort_unstable();
    pcts.dedup();
    let pcts: Vec<f64> = pcts.into_iter().map(f64::from_bits).collect();

    let mut sizes: Vec<u64> = rows.iter().map(|r| r.target_size).collect();
    sizes.sort_unstable();
    sizes.dedup();

    let mut strategies: Vec<String> = rows.iter().map(|r| r.strategy.clone()).collect();
    strategies.sort();
    strategies.dedup();

    // Median per (pct, size, strategy).
    let stat = |pct: f64, size: u64, strategy: &str| -> Option<CellStat> {
        let mut costs: Vec<f64> = Vec::new();
        let mut changes: Vec<f64> = Vec::new();
        for r in rows {
            if r.delete_percentage.to_bits() == pct.to_bits()
                && r.target_size == size
                && r.strategy == strategy
            {
                costs.push(r.cost_seconds);
                changes.extend(r.percent_change);
            }
        }
        if costs.is_empty() {
            return None;
        }
        Some(CellStat {
            cost: median(&mut costs),
            percent_change: if changes.is_empty() {
                None
            } else {
                Some(median(&mut changes))
            },
        })
    };

    let mut max_cost = 0.0f64;
    let mut max_change = 0.0f64;
    for &pct in &pcts {
        for &size in &sizes {
            for strategy in &strategies {
                if let Some(s) = stat(pct, size, strategy) {
                    max_cost = max_cost.max(s.cost);
                    if let Some(c) = s.percent_change {
                        max_change = max_change.max(c.abs());
                    }
                }
            }
        }
    }
    if max_cost <= 0.0 {
        max_cost = 1.0;
    }
    if max_change <= 0.0 {
        max_change = 1.0;
    }

    let n_panels = pcts.len();
    let width = MARGIN_LEFT
        + n_panels as f64 * PANEL_W
        + (n_panels as f64 - 1.0) * PANEL_GAP
        + MARGIN_RIGHT;
    let height = MARGIN_TOP + PANEL_H + MARGIN_BOTTOM;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="Helvetica, Arial, sans-serif">"##,
        fmt_coord(width),
        fmt_coord(height),
        fmt_coord(width),
        fmt_coord(height)
    );
    let _ = writeln!(
        svg,
        r##"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r##"<text x="{}" y="24" font-size="15" text-anchor="middle" fill="#222">Unlearning cost and consistency change</text>"##,
        fmt_coord(width / 2.0)
    );

    // Legend: one swatch per strategy (bars) plus the marker symbol.
    let mut legend_x = MARGIN_LEFT;
    for (i, strategy) in strategies.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            svg,
            r##"<rect x="{}" y="36" width="12" height="12" fill="{}"/>"##,
            fmt_coord(legend_x),
            color
        );
        let _ = writeln!(
            svg,
            r##"<text x="{}" y="46" font-size="12" fill="#222">{} cost</text>"##,
            fmt_coord(legend_x + 16.0),
            strategy
        );
        legend_x += 120.0;
    }
    let _ = writeln!(
        svg,
        r##"<circle cx="{}" cy="42" r="5" fill="white" stroke="#222" stroke-width="1.5"/>"##,
        fmt_coord(legend_x + 5.0)
    );
    let _ = writeln!(
        svg,
        r##"<text x="{}" y="46" font-size="12" fill="#222">consistency change (%)</text>"##,
        fmt_coord(legend_x + 16.0)
    );

    for (p, &pct) in pcts.iter().enumerate() {
        let x0 = MARGIN_LEFT + p as f64 * (PANEL_W + PANEL_GAP);
        let y0 = MARGIN_TOP;
        let y1 = MARGIN_TOP + PANEL_H;

        let _ = writeln!(
            svg,
            r##"<text x="{}" y="{}" font-size="13" text-anchor="middle" fill="#222">deleted {}%</text>"##,
            fmt_coord(x0 + PANEL_W / 2.0),
            fmt_coord(y0 - 8.0),
            fmt_tick(pct * 100.0)
        );
        // Panel frame and axes.
        let _ = writeln!(
            svg,
            r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#999" stroke-width="1"/>"##,
            fmt_coord(x0),
            fmt_coord(y0),
            fmt_coord(PANEL_W),
            fmt_coord(PANEL_H)
        );

        // Left axis ticks (cost).
        for t in 0..=4 {
            let frac = f64::from(t) / 4.0;
            let y = y1 - frac * PANEL_H;
            let _ = writeln!(
                svg,
                r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#999" stroke-width="1"/>"##,
                fmt_coord(x0 - 4.0),
                fmt_coord(y),
                fmt_coord(x0),
                fmt_coord(y)
            );
            let _ = writeln!(
                svg,
                r##"<text x="{}" y="{}" font-size="10" text-anchor="end" fill="#444">{}</text>"##,
                fmt_coord(x0 - 7.0),
                fmt_coord(y + 3.5),
                fmt_tick(max_cost * frac)
            );
        }
        // Right axis ticks (percent change), symmetric about zero.
        for t in 0..=4 {
            let frac = f64::from(t) / 4.0;
            let value = -max_change + 2.0 * max_change * frac;
            let y = y1 - frac * PANEL_H;
            let _ = writeln!(
                svg,
                r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#999" stroke-width="1"/>"##,
                fmt_coord(x0 + PANEL_W),
                fmt_coord(y),
                fmt_coord(x0 + PANEL_W + 4.0),
                fmt_coord(y)
            );
            let _ = writeln!(
                svg,
                r##"<text x="{}" y="{}" font-size="10" text-anchor="start" fill="#444">{}</text>"##,
                fmt_coord(x0 + PANEL_W + 7.0),
                fmt_coord(y + 3.5),
                fmt_tick(value)
            );
        }
        // Zero line for the percent-change axis.
        let zero_y = y1 - PANEL_H / 2.0;
        let _ = writeln!(
            svg,
            r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#bbb" stroke-width="1" stroke-dasharray="4 3"/>"##,
            fmt_coord(x0),
            fmt_coord(zero_y),
            fmt_coord(x0 + PANEL_W),
            fmt_coord(zero_y)
        );

        let group_w = PANEL_W / sizes.len() as f64;
        let bar_w = (group_w * 0.7) / strategies.len() as f64;
        for (gi, &size) in sizes.iter().enumerate() {
            let gx = x0 + gi as f64 * group_w;
            let _ = writeln!(
                svg,
                r##"<text x="{}" y="{}" font-size="11" text-anchor="middle" fill="#222">{}</text>"##,
                fmt_coord(gx + group_w / 2.0),
                fmt_coord(y1 + 16.0),
                size
            );
            for (si, strategy) in strategies.iter().enumerate() {
                let Some(s) = stat(pct, size, strategy) else {
                    continue;
                };
                let color = PALETTE[si % PALETTE.len()];
                let bar_h = (s.cost / max_cost) * PANEL_H;
                let bx = gx + group_w * 0.15 + si as f64 * bar_w;
                let _ = writeln!(
                    svg,
                    r##"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>"##,
                    fmt_coord(bx),
                    fmt_coord(y1 - bar_h),
                    fmt_coord(bar_w.max(1.0) - 1.0),
                    fmt_coord(bar_h),
                    color
                );
                if let Some(change) = s.percent_change {
                    let my = zero_y - (change / max_change) * (PANEL_H / 2.0);
                    let _ = writeln!(
                        svg,
                        r##"<circle cx="{}" cy="{}" r="4.5" fill="white" stroke="{}" stroke-width="2"/>"##,
                        fmt_coord(bx + (bar_w.max(1.0) - 1.0) / 2.0),
                        fmt_coord(my),
                        color
                    );
                }
            }
        }
        let _ = writeln!(
            svg,
            r##"<text x="{}" y="{}" font-size="11" text-anchor="middle" fill="#222">training set size</text>"##,
            fmt_coord(x0 + PANEL_W / 2.0),
            fmt_coord(y1 + 34.0)
        );
    }

    // Axis titles.
    let _ = writeln!(
        svg,
        r##"<text x="16" y="{}" font-size="11" fill="#222" transform="rotate(-90 16 {})" text-anchor="middle">computational cost (s)</text>"##,
        fmt_coord(MARGIN_TOP + PANEL_H / 2.0),
        fmt_coord(MARGIN_TOP + PANEL_H / 2.0)
    );
    let _ = writeln!(
        svg,
        r##"<text x="{}" y="{}" font-size="11" fill="#222" transform="rotate(90 {} {})" text-anchor="middle">consistency change (%)</text>"##,
        fmt_coord(width - 14.0),
        fmt_coord(MARGIN_TOP + PANEL_H / 2.0),
        fmt_coord(width - 14.0),
        fmt_coord(MARGIN_TOP + PANEL_H / 2.0)
    );

    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Read a results CSV and write the chart; nothing is written when the
/// input is empty or malformed.
pub fn plot_file(csv_path: &Path, svg_path: &Path) -> Result<()> {
    let text = fs::read_to_string(csv_path)?;
    let rows = parse_results_csv(&text)?;
    let svg = render_results_chart(&rows)?;
    fs::write(svg_path, svg)?;
    Ok(())
}
