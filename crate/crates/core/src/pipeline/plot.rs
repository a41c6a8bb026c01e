use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::PipelineError;
use crate::allocation::CURVE_COLUMNS;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Horizontal reference lines.
    pub benchmarks: Vec<(String, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a >= 1e6 {
        format!("{:.1}M", v / 1e6)
    } else if a >= 1e4 {
        format!("{:.0}k", v / 1e3)
    } else if a >= 100.0 || v == v.round() {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

/// Renders a line chart. A series with one point is drawn as a marker;
/// longer series as one polyline with a vertex per point.
pub fn render_chart(chart: &Chart) -> Result<String, String> {
    let all: Vec<(f64, f64)> = chart.series.iter().flat_map(|s| s.points.iter().copied()).collect();
    if all.is_empty() {
        return Err(format!("chart {:?} has no points", chart.title));
    }
    if all.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(format!("chart {:?} has non-finite values", chart.title));
    }
    let x_max = all.iter().map(|p| p.0).fold(f64::MIN, f64::max).max(0.0);
    let x_min = all.iter().map(|p| p.0).fold(f64::MAX, f64::min).min(0.0);
    let ys = all.iter().map(|p| p.1).chain(chart.benchmarks.iter().map(|b| b.1));
    let (mut y_min, mut y_max) = ys.fold((f64::MAX, f64::MIN), |(lo, hi), y| (lo.min(y), hi.max(y)));
    let pad = ((y_max - y_min) * 0.05).max(1e-3 * y_max.abs().max(1.0));
    y_min -= pad;
    y_max += pad;
    let x_span = if x_max > x_min { x_max - x_min } else { 1.0 };
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_min) / x_span * plot_w;
    let sy = |y: f64| TOP + (y_max - y) / (y_max - y_min) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(&chart.title)
    );
    let _ = writeln!(
        svg,
        r#"<g stroke="black"><line x1="{LEFT}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{b}"/></g>"#,
        b = TOP + plot_h,
        r = LEFT + plot_w
    );
    for i in 0..=5 {
        let f = f64::from(i) / 5.0;
        let xv = x_min + f * x_span;
        let yv = y_min + f * (y_max - y_min);
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            sx(xv),
            TOP + plot_h + 18.0,
            tick_label(xv)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            sy(yv) + 4.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0,
        escape(&chart.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{y}" text-anchor="middle" transform="rotate(-90 16 {y})">{}</text>"#,
        escape(&chart.y_label),
        y = TOP + plot_h / 2.0
    );

    let mut legend_y = TOP + 10.0;
    let legend_x = LEFT + plot_w + 16.0;
    for (name, v) in &chart.benchmarks {
        let _ = writeln!(
            svg,
            r##"<line class="benchmark" x1="{LEFT}" y1="{y:.2}" x2="{r}" y2="{y:.2}" stroke="#555" stroke-dasharray="5,4"/>"##,
            y = sy(*v),
            r = LEFT + plot_w
        );
        let _ = writeln!(
            svg,
            r##"<text x="{legend_x}" y="{legend_y}" fill="#555">- - {}</text>"##,
            escape(name)
        );
        legend_y += 18.0;
    }
    for (i, s) in chart.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        match s.points.as_slice() {
            [] => {}
            [(x, y)] => {
                let _ = writeln!(
                    svg,
                    r#"<circle class="series" cx="{:.2}" cy="{:.2}" r="4" fill="{color}"/>"#,
                    sx(*x),
                    sy(*y)
                );
            }
            pts => {
                let coords: Vec<String> = pts
                    .iter()
                    .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
                    .collect();
                let _ = writeln!(
                    svg,
                    r#"<polyline class="series" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
                    coords.join(" ")
                );
            }
        }
        let _ = writeln!(
            svg,
            r#"<text x="{legend_x}" y="{legend_y}" fill="{color}">{}</text>"#,
            escape(&s.label)
        );
        legend_y += 18.0;
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Chart file stem, title and the benchmark metrics drawn on it.
const FAMILIES: [(&str, &str, &[&str]); 6] = [
    (
        "share_black_indigenous",
        "Black + Indigenous share of doses",
        &[
            "population_share_black_indigenous",
            "death_share_black_indigenous",
            "age_adjusted_death_share_black_indigenous",
        ],
    ),
    (
        "share_black_indigenous_hispanic",
        "Black + Indigenous + Hispanic share of doses",
        &[
            "population_share_black_indigenous_hispanic",
            "death_share_black_indigenous_latino",
            "age_adjusted_death_share_black_indigenous_latino",
        ],
    ),
    ("share_high_adi", "High-ADI share of doses", &["population_share_high_adi"]),
    ("share_female", "Female share of doses", &["population_share_female"]),
    ("mean_age", "Mean age of dose recipients", &["population_mean_age"]),
    ("marginal_share_high_adi", "Marginal high-ADI share", &[]),
];

fn plot_err(e: impl std::fmt::Display) -> PipelineError {
    PipelineError::validation("plot", e)
}

fn read_csv(path: &Path) -> Result<(csv::StringRecord, Vec<csv::StringRecord>), PipelineError> {
    if !path.is_file() {
        return Err(PipelineError::io("plot", format!("{} not found", path.display())));
    }
    let mut r = csv::Reader::from_path(path).map_err(|e| PipelineError::io("plot", format!("{}: {e}", path.display())))?;
    let header = r.headers().map_err(|e| plot_err(format!("{}: {e}", path.display())))?.clone();
    let rows = r
        .records()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| plot_err(format!("{}: {e}", path.display())))?;
    Ok((header, rows))
}

/// Renders one SVG per curve family from a run bundle. Every input is read
/// and checked before anything is written.
pub fn cmd_plot(bundle: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let entries = fs::read_dir(bundle)
        .map_err(|e| PipelineError::io("plot", format!("{}: {e}", bundle.display())))?;
    let mut curves: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("allocation_curve_") && n.ends_with(".csv"))
        })
        .collect();
    curves.sort();
    if curves.is_empty() {
        return Err(PipelineError::io(
            "plot",
            format!("no allocation_curve_*.csv in {}", bundle.display()),
        ));
    }

    let (bh, brows) = read_csv(&bundle.join("benchmarks.csv"))?;
    if bh.iter().collect::<Vec<_>>() != ["metric", "value"] {
        return Err(plot_err("benchmarks.csv must have columns metric,value"));
    }
    let mut benchmarks = BTreeMap::new();
    for r in &brows {
        let v: f64 = r[1].parse().map_err(|e| plot_err(format!("benchmarks.csv: {e}")))?;
        benchmarks.insert(r[0].to_owned(), v);
    }

    let mut series_by_family: Vec<Vec<Series>> = vec![Vec::new(); FAMILIES.len()];
    for path in &curves {
        let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
        let (header, rows) = read_csv(path)?;
        if header.iter().collect::<Vec<_>>() != CURVE_COLUMNS {
            return Err(plot_err(format!("{name}: unexpected columns")));
        }
        if rows.is_empty() {
            return Err(plot_err(format!("{name} has no rows")));
        }
        let label = rows[0][1].to_owned();
        for (fi, (family, _, _)) in FAMILIES.iter().enumerate() {
            let col = CURVE_COLUMNS.iter().position(|c| c == family).unwrap_or(0);
            let mut points = Vec::new();
            for r in &rows {
                if r[col].is_empty() {
                    continue;
                }
                let x: f64 = r[0].parse().map_err(|e| plot_err(format!("{name}: {e}")))?;
                let y: f64 = r[col].parse().map_err(|e| plot_err(format!("{name}: {e}")))?;
                points.push((x, y));
            }
            series_by_family[fi].push(Series {
                label: label.clone(),
                points,
            });
        }
    }

    let mut rendered = Vec::new();
    for ((family, title, bench), series) in FAMILIES.iter().zip(series_by_family) {
        if series.iter().all(|s| s.points.is_empty()) {
            continue;
        }
        let chart = Chart {
            title: (*title).to_owned(),
            x_label: "doses (person-units)".into(),
            y_label: family.replace('_', " "),
            series,
            benchmarks: bench
                .iter()
                .filter_map(|b| benchmarks.get(*b).map(|v| (b.replace('_', " "), *v)))
                .collect(),
        };
        rendered.push((bundle.join(format!("{family}.svg")), render_chart(&chart).map_err(plot_err)?));
    }
    for (path, svg) in &rendered {
        fs::write(path, svg).map_err(|e| PipelineError::io("plot", format!("{}: {e}", path.display())))?;
    }
    Ok(rendered.into_iter().map(|(p, _)| p).collect())
}
