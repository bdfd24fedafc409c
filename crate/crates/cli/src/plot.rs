//! Static SVG line charts for run metrics.
//!
//! The chart embeds each series twice: a screen-space polyline for display
//! and an exact data-space polyline under `<defs>` (`id="data-<series>"`),
//! so tools and tests can read back the plotted numbers without reversing
//! the screen transform.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use skyseek_core::harness::smooth;

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

/// Pull (x = global_step, y = `column`) series out of a metrics CSV,
/// one series per team (or a single team when `team` is given).
pub fn series_from_csv(
    csv: &str,
    column: &str,
    team: Option<&str>,
) -> Result<Vec<Series>, String> {
    let mut lines = csv.lines();
    let header = lines.next().ok_or("empty csv")?;
    let cols: Vec<&str> = header.split(',').collect();
    let col_ix = cols
        .iter()
        .position(|c| *c == column)
        .ok_or(format!("column {column:?} not in header {header:?}"))?;
    let step_ix = cols.iter().position(|c| *c == "global_step").ok_or("missing global_step")?;
    let team_ix = cols.iter().position(|c| *c == "team");

    let mut by_team: BTreeMap<String, Series> = BTreeMap::new();
    for (ix, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(format!("row {} has {} fields, header has {}", ix + 2, fields.len(), cols.len()));
        }
        let series_name = team_ix.map(|t| fields[t].to_string()).unwrap_or_default();
        if let Some(want) = team {
            if series_name != want {
                continue;
            }
        }
        let x: f64 = fields[step_ix].parse().map_err(|e| format!("row {}: {e}", ix + 2))?;
        let y: f64 = fields[col_ix].parse().map_err(|e| format!("row {}: {e}", ix + 2))?;
        let entry = by_team.entry(series_name.clone()).or_insert_with(|| Series {
            name: if series_name.is_empty() { column.to_string() } else { series_name.clone() },
            xs: Vec::new(),
            ys: Vec::new(),
        });
        entry.xs.push(x);
        entry.ys.push(y);
    }
    if by_team.is_empty() {
        return Err(match team {
            Some(t) => format!("no rows for team {t:?}"),
            None => "no data rows".to_string(),
        });
    }
    Ok(by_team.into_values().collect())
}

const PALETTE: [&str; 4] = ["#e8861a", "#c23b28", "#3173b5", "#52a552"];

/// Render series (already smoothed by the caller) to an SVG document.
pub fn render_svg(series: &[Series], title: &str) -> String {
    let width = 920.0;
    let height = 520.0;
    let margin_l = 80.0;
    let margin_r = 30.0;
    let margin_t = 50.0;
    let margin_b = 60.0;
    let plot_w = width - margin_l - margin_r;
    let plot_h = height - margin_t - margin_b;

    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in series {
        for x in &s.xs {
            x_min = x_min.min(*x);
            x_max = x_max.max(*x);
        }
        for y in &s.ys {
            y_min = y_min.min(*y);
            y_max = y_max.max(*y);
        }
    }
    if !(x_min.is_finite() && y_min.is_finite()) {
        x_min = 0.0;
        x_max = 1.0;
        y_min = 0.0;
        y_max = 1.0;
    }
    if (x_max - x_min).abs() < 1e-12 {
        x_max = x_min + 1.0;
    }
    if (y_max - y_min).abs() < 1e-12 {
        y_max = y_min + 1.0;
    }

    let sx = |x: f64| margin_l + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| margin_t + plot_h - (y - y_min) / (y_max - y_min) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r##"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"##
    );
    let _ = writeln!(svg, r##"<rect width="{width}" height="{height}" fill="#ffffff"/>"##);
    // Exact data series, machine-readable, not rendered.
    let _ = writeln!(svg, "<defs>");
    for s in series {
        let points: Vec<String> =
            s.xs.iter().zip(&s.ys).map(|(x, y)| format!("{x},{y}")).collect();
        let _ = writeln!(svg, r##"<polyline id="data-{}" points="{}"/>"##, s.name, points.join(" "));
    }
    let _ = writeln!(svg, "</defs>");

    // Frame and ticks.
    let _ = writeln!(
        svg,
        r##"<rect x="{margin_l}" y="{margin_t}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#888888"/>"##
    );
    for k in 0..=4 {
        let frac = k as f64 / 4.0;
        let xv = x_min + frac * (x_max - x_min);
        let yv = y_min + frac * (y_max - y_min);
        let x = sx(xv);
        let y = sy(yv);
        let _ = writeln!(
            svg,
            r##"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="#cccccc"/>"##,
            margin_t,
            margin_t + plot_h
        );
        let _ = writeln!(
            svg,
            r##"<text x="{x}" y="{}" font-size="12" text-anchor="middle" fill="#333333">{}</text>"##,
            margin_t + plot_h + 20.0,
            format_tick(xv)
        );
        let _ = writeln!(
            svg,
            r##"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="#cccccc"/>"##,
            margin_l,
            margin_l + plot_w
        );
        let _ = writeln!(
            svg,
            r##"<text x="{}" y="{}" font-size="12" text-anchor="end" fill="#333333">{}</text>"##,
            margin_l - 8.0,
            y + 4.0,
            format_tick(yv)
        );
    }
    let _ = writeln!(
        svg,
        r##"<text x="{}" y="28" font-size="16" text-anchor="middle" fill="#111111">{title}</text>"##,
        width / 2.0
    );

    for (ix, s) in series.iter().enumerate() {
        let color = PALETTE[ix % PALETTE.len()];
        let points: Vec<String> = s
            .xs
            .iter()
            .zip(&s.ys)
            .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
            .collect();
        let _ = writeln!(
            svg,
            r##"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"##,
            points.join(" ")
        );
        // Legend.
        let ly = margin_t + 16.0 + ix as f64 * 18.0;
        let _ = writeln!(
            svg,
            r##"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="3"/>"##,
            margin_l + 10.0,
            margin_l + 40.0
        );
        let _ = writeln!(
            svg,
            r##"<text x="{}" y="{}" font-size="12" fill="#333333">{}</text>"##,
            margin_l + 46.0,
            ly + 4.0,
            s.name
        );
    }
    let _ = writeln!(svg, "</svg>");
    svg
}

fn format_tick(v: f64) -> String {
    if v.abs() >= 1000.0 {
        format!("{:.0}", v)
    } else {
        format!("{:.3}", v)
    }
}

/// Full plot pipeline: select, smooth, render.
pub fn plot_metrics(
    csv: &str,
    column: &str,
    team: Option<&str>,
    smooth_factor: f64,
    title: &str,
) -> Result<String, String> {
    if !(0.0..1.0).contains(&smooth_factor) {
        return Err(format!("smooth factor {smooth_factor} outside [0, 1)"));
    }
    let mut series = series_from_csv(csv, column, team)?;
    for s in &mut series {
        s.ys = smooth(&s.ys, smooth_factor);
    }
    Ok(render_svg(&series, title))
}

/// Read back the exact data polyline for `series` from a rendered SVG.
pub fn parse_data_polyline(svg: &str, series: &str) -> Result<Vec<(f64, f64)>, String> {
    let marker = format!(r##"<polyline id="data-{series}" points=""##);
    let start = svg.find(&marker).ok_or(format!("no data polyline for {series:?}"))?;
    let rest = &svg[start + marker.len()..];
    let end = rest.find('"').ok_or("unterminated points attribute")?;
    rest[..end]
        .split_whitespace()
        .map(|pair| {
            let (x, y) = pair.split_once(',').ok_or(format!("bad point {pair:?}"))?;
            Ok((
                x.parse::<f64>().map_err(|e| format!("{e}"))?,
                y.parse::<f64>().map_err(|e| format!("{e}"))?,
            ))
        })
        .collect()
}
