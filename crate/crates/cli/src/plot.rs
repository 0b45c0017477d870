//! SVG line charts of a metrics CSV.
//!
//! Polyline vertices are written in data coordinates (episode, value) inside a
//! group whose transform maps the data box onto the plot area, so every plotted
//! value can be read back from the file at full precision.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use deeprotor::metrics::{MovingAverage, METRICS_HEADER};

pub const REWARD_FILE: &str = "reward.svg";
pub const LENGTH_FILE: &str = "episode_length.svg";
pub const ROLL_FILE: &str = "roll.svg";
pub const PITCH_FILE: &str = "pitch.svg";
pub const YAW_FILE: &str = "yaw_rate.svg";

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

/// Numeric columns of a metrics CSV, one entry per row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsTable {
    pub episode: Vec<f64>,
    pub steps: Vec<f64>,
    pub total_reward: Vec<f64>,
    pub mean_abs_yaw_rate: Vec<f64>,
    pub mean_roll: Vec<f64>,
    pub mean_pitch: Vec<f64>,
}

impl MetricsTable {
    pub fn len(&self) -> usize {
        self.episode.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episode.is_empty()
    }
}

/// Parses a metrics CSV. Errors name the 1-based data row (the header is row 0).
pub fn read_metrics(text: &str) -> Result<MetricsTable> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers().context("reading header")?.iter().map(str::to_owned).collect();
    let want: Vec<&str> = METRICS_HEADER.split(',').collect();
    if header != want {
        bail!("row 0: header does not match the metrics format");
    }
    let col = |name: &str| want.iter().position(|c| *c == name).expect("known column");
    let (ep, st, tr, yaw, roll, pitch) =
        (col("episode"), col("steps"), col("total_reward"), col("mean_abs_yaw_rate"), col("mean_roll"), col("mean_pitch"));
    let mut table = MetricsTable::default();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.with_context(|| format!("row {row}: malformed record"))?;
        let num = |idx: usize| -> Result<f64> {
            let field = record.get(idx).unwrap_or("");
            let v: f64 = field
                .trim()
                .parse()
                .with_context(|| format!("row {row}: column `{}` has non-numeric value `{field}`", want[idx]))?;
            if !v.is_finite() {
                bail!("row {row}: column `{}` is not finite", want[idx]);
            }
            Ok(v)
        };
        table.episode.push(num(ep)?);
        table.steps.push(num(st)?);
        table.total_reward.push(num(tr)?);
        table.mean_abs_yaw_rate.push(num(yaw)?);
        table.mean_roll.push(num(roll)?);
        table.mean_pitch.push(num(pitch)?);
    }
    Ok(table)
}

/// Trailing moving average of `values` with the given window.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let mut ma = MovingAverage::new(window);
    values.iter().map(|&v| ma.push(v)).collect()
}

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub values: &'a [f64],
}

/// Data-space y range; constant series are padded by one unit each way.
fn y_range(series: &[Series]) -> (f64, f64) {
    let (lo, hi) = series
        .iter()
        .flat_map(|s| s.values.iter().copied())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    if hi - lo == 0.0 {
        (lo - 1.0, hi + 1.0)
    } else {
        (lo, hi)
    }
}

fn x_range(x: &[f64]) -> (f64, f64) {
    match (x.first(), x.last()) {
        (Some(&a), Some(&b)) if b > a => (a, b),
        (Some(&a), _) => (a - 1.0, a + 1.0),
        _ => (0.0, 1.0),
    }
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    (0..=4).map(|i| lo + (hi - lo) * i as f64 / 4.0).collect()
}

fn tick_label(v: f64) -> String {
    deeprotor::metrics::format_g6((v * 1e4).round() / 1e4)
}

/// One standalone SVG chart.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, x: &[f64], series: &[Series]) -> String {
    let (x0, x1) = x_range(x);
    let (y0, y1) = y_range(series);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = pw / (x1 - x0);
    let sy = -ph / (y1 - y0);
    let tx = LEFT - x0 * sx;
    let ty = TOP + ph - y0 * sy;
    let px = |v: f64| v * sx + tx;
    let py = |v: f64| v * sy + ty;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<g class="axes" stroke="black" fill="none"><line x1="{LEFT}" y1="{}" x2="{}" y2="{}"/><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{}"/></g>"#,
        TOP + ph,
        LEFT + pw,
        TOP + ph,
        TOP + ph
    );
    for t in ticks(x0, x1) {
        let _ = writeln!(
            s,
            r#"<text class="xtick" x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            px(t),
            TOP + ph + 16.0,
            tick_label(t)
        );
    }
    for t in ticks(y0, y1) {
        let _ = writeln!(
            s,
            r#"<text class="ytick" x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            py(t) + 4.0,
            tick_label(t)
        );
    }
    let _ = writeln!(
        s,
        r#"<text class="xlabel" x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text class="ylabel" transform="translate(16 {}) rotate(-90)" text-anchor="middle">{}</text>"#,
        TOP + ph / 2.0,
        escape(y_label)
    );
    let _ = writeln!(s, r#"<g class="data" transform="matrix({sx} 0 0 {sy} {tx} {ty})">"#);
    for series in series {
        let pts: Vec<String> = x.iter().zip(series.values).map(|(a, b)| format!("{a},{b}")).collect();
        let _ = writeln!(
            s,
            r#"<polyline data-series="{}" fill="none" stroke="{}" stroke-width="1.5" vector-effect="non-scaling-stroke" points="{}"/>"#,
            escape(series.label),
            series.color,
            pts.join(" ")
        );
    }
    let _ = writeln!(s, "</g>");
    if series.len() > 1 {
        for (i, series) in series.iter().enumerate() {
            let y = TOP + 14.0 + 16.0 * i as f64;
            let _ = writeln!(
                s,
                r#"<g class="legend"><line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="{}" stroke-width="2"/><text x="{}" y="{}">{}</text></g>"#,
                LEFT + pw - 150.0,
                LEFT + pw - 130.0,
                series.color,
                LEFT + pw - 124.0,
                y + 4.0,
                escape(series.label)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Writes the five charts into `out_dir` and returns their paths.
pub fn emit_plots(metrics: &Path, out_dir: &Path, window: usize) -> Result<Vec<PathBuf>> {
    let text = fs::read_to_string(metrics).with_context(|| format!("cannot read {}", metrics.display()))?;
    let table = read_metrics(&text).with_context(|| format!("in {}", metrics.display()))?;
    fs::create_dir_all(out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    let ma = moving_average(&table.total_reward, window);
    let ma_label = format!("moving average ({window})");
    let charts = [
        (
            REWARD_FILE,
            line_chart(
                "Reward per episode",
                "episode",
                "total reward",
                &table.episode,
                &[
                    Series { label: "reward", color: "#9bb7d4", values: &table.total_reward },
                    Series { label: &ma_label, color: "#c0392b", values: &ma },
                ],
            ),
        ),
        (
            LENGTH_FILE,
            line_chart(
                "Episode length",
                "episode",
                "steps",
                &table.episode,
                &[Series { label: "steps", color: "#2c7fb8", values: &table.steps }],
            ),
        ),
        (
            ROLL_FILE,
            line_chart(
                "Mean roll angle",
                "episode",
                "roll (deg)",
                &table.episode,
                &[Series { label: "roll", color: "#31a354", values: &table.mean_roll }],
            ),
        ),
        (
            PITCH_FILE,
            line_chart(
                "Mean pitch angle",
                "episode",
                "pitch (deg)",
                &table.episode,
                &[Series { label: "pitch", color: "#756bb1", values: &table.mean_pitch }],
            ),
        ),
        (
            YAW_FILE,
            line_chart(
                "Mean absolute yaw rate",
                "episode",
                "|yaw rate| (deg/s)",
                &table.episode,
                &[Series { label: "yaw rate", color: "#e6550d", values: &table.mean_abs_yaw_rate }],
            ),
        ),
    ];
    let mut paths = Vec::new();
    for (name, svg) in charts {
        let path = out_dir.join(name);
        fs::write(&path, svg).with_context(|| format!("cannot write {}", path.display()))?;
        paths.push(path);
    }
    Ok(paths)
}
