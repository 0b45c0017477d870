//! Per-episode metrics rows and their CSV encoding.

use std::collections::VecDeque;
use std::io::{self, Write};

use crate::env::{RewardComponents, Terminal};

pub const METRICS_HEADER: &str = "episode,steps,total_reward,moving_avg_reward,terminal_reason,epsilon,\
mean_abs_yaw_rate,mean_roll,mean_pitch,checkpoints_hit,cumulative_collisions";

pub const COMPONENTS_HEADER: &str = "episode,progress,deviation,yaw,checkpoint,goal,collision,total_reward";

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub episode: usize,
    pub steps: usize,
    pub total_reward: f64,
    pub moving_avg_reward: f64,
    pub terminal: Terminal,
    pub epsilon: f64,
    pub mean_abs_yaw_rate: f64,
    pub mean_roll: f64,
    pub mean_pitch: f64,
    pub checkpoints_hit: usize,
    pub cumulative_collisions: usize,
    /// Logged to the components file, not the metrics CSV.
    pub components: RewardComponents,
}

/// `%g`-style formatting with 6 significant digits.
pub fn format_g6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        return format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn format_row(row: &MetricsRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        row.episode,
        row.steps,
        format_g6(row.total_reward),
        format_g6(row.moving_avg_reward),
        row.terminal.token(),
        format_g6(row.epsilon),
        format_g6(row.mean_abs_yaw_rate),
        format_g6(row.mean_roll),
        format_g6(row.mean_pitch),
        row.checkpoints_hit,
        row.cumulative_collisions,
    )
}

/// Full-precision reward decomposition line.
pub fn format_components(row: &MetricsRow) -> String {
    let c = &row.components;
    format!(
        "{},{},{},{},{},{},{},{}",
        row.episode, c.progress, c.deviation, c.yaw, c.checkpoint, c.goal, c.collision, row.total_reward
    )
}

/// Writes the metrics CSV and the components CSV, flushing after every row.
pub struct MetricsWriter<W: Write> {
    metrics: W,
    components: W,
}

impl<W: Write> MetricsWriter<W> {
    pub fn new(mut metrics: W, mut components: W) -> io::Result<Self> {
        writeln!(metrics, "{METRICS_HEADER}")?;
        writeln!(components, "{COMPONENTS_HEADER}")?;
        metrics.flush()?;
        components.flush()?;
        Ok(Self { metrics, components })
    }

    pub fn write_row(&mut self, row: &MetricsRow) -> io::Result<()> {
        writeln!(self.metrics, "{}", format_row(row))?;
        writeln!(self.components, "{}", format_components(row))?;
        self.metrics.flush()?;
        self.components.flush()
    }
}

/// Trailing-window mean; shorter prefixes average what is available.
#[derive(Debug, Clone, PartialEq)]
pub struct MovingAverage {
    window: usize,
    values: VecDeque<f64>,
}

impl MovingAverage {
    pub fn new(window: usize) -> Self {
        assert!(window > 0);
        Self { window, values: VecDeque::with_capacity(window) }
    }

    pub fn push(&mut self, v: f64) -> f64 {
        if self.values.len() == self.window {
            self.values.pop_front();
        }
        self.values.push_back(v);
        self.mean()
    }

    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g6_matches_printf() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (-2.5, "-2.5"),
            (123456.0, "123456"),
            (1234567.0, "1.23457e+06"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (3.14159265, "3.14159"),
            (99999.95, "99999.9"),
            (99999.96, "100000"),
            (999999.5, "1e+06"),
            (-0.05, "-0.05"),
            (50.0, "50"),
        ];
        for (x, want) in cases {
            assert_eq!(format_g6(x), want, "{x}");
        }
    }

    #[test]
    fn row_format() {
        let row = MetricsRow {
            episode: 3,
            steps: 41,
            total_reward: -47.25,
            moving_avg_reward: 1.0 / 3.0,
            terminal: Terminal::Collision,
            epsilon: 0.95,
            mean_abs_yaw_rate: 5.0,
            mean_roll: -1.25,
            mean_pitch: 5.0,
            checkpoints_hit: 0,
            cumulative_collisions: 2,
            components: RewardComponents::default(),
        };
        let line = format_row(&row);
        assert_eq!(line, "3,41,-47.25,0.333333,collision,0.95,5,-1.25,5,0,2");
        assert_eq!(line.split(',').nth(4), Some("collision"));
        assert_eq!(METRICS_HEADER.split(',').count(), line.split(',').count());
    }

    #[test]
    fn moving_average_prefix_and_window() {
        let mut m = MovingAverage::new(3);
        assert_eq!(m.push(3.0), 3.0);
        assert_eq!(m.push(6.0), 4.5);
        assert_eq!(m.push(9.0), 6.0);
        assert_eq!(m.push(0.0), 5.0);
    }
}
