//! Satisfaction and time-in-airport, per agent and per run, plus the
//! aggregate table over a batch of runs.

use std::fmt;
use std::io::{self, Write};

use thiserror::Error;

use crate::agents::{AgentEvent, Direction};
use crate::messaging::{MessageTrace, Tick};
use crate::ontology::{AgentId, ShopType};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatisfactionWeights {
    /// Gained for making the flight (or leaving the airport), lost for
    /// missing it.
    pub miss: f64,
    pub shop: f64,
    /// Lost per tick spent waiting in a line.
    pub queue: f64,
}

impl Default for SatisfactionWeights {
    fn default() -> Self {
        Self {
            miss: 100.0,
            shop: 10.0,
            queue: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricLog {
    pub aid: AgentId,
    pub direction: Direction,
    pub ami: bool,
    pub entry: Tick,
    /// Boarding completion, exit arrival, or the deadline for a missed flight.
    pub exit: Option<Tick>,
    pub queue_wait: u32,
    /// Shop type and the interest weight the agent had in it.
    pub purchases: Vec<(ShopType, f64)>,
    pub missed_flight: bool,
    /// Ended without reaching its goal for a reason other than the deadline
    /// (e.g. no path to a provider).
    pub failed: bool,
}

impl MetricLog {
    pub fn new(aid: AgentId, direction: Direction, ami: bool, entry: Tick) -> Self {
        Self {
            aid,
            direction,
            ami,
            entry,
            exit: None,
            queue_wait: 0,
            purchases: Vec::new(),
            missed_flight: false,
            failed: false,
        }
    }

    pub fn terminated(&self) -> bool {
        self.exit.is_some()
    }

    pub fn time_in_airport(&self) -> Option<Tick> {
        self.exit.map(|e| e - self.entry)
    }
}

/// `±miss + purchases × shop − wait × queue`. Evaluated on a live agent it
/// gives the running score that feeds the per-tick series.
pub fn satisfaction(log: &MetricLog, weights: &SatisfactionWeights) -> f64 {
    let flight = if log.missed_flight || log.failed {
        -weights.miss
    } else {
        weights.miss
    };
    flight + log.purchases.len() as f64 * weights.shop - log.queue_wait as f64 * weights.queue
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub tick: Tick,
    pub nonami: f64,
    pub ami: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub seed: u64,
    pub total_satisfaction: f64,
    pub total_satisfaction_ami: f64,
    pub average_time: f64,
    pub average_time_ami: f64,
    pub series: Vec<SeriesPoint>,
    pub trace: MessageTrace,
    pub logs: Vec<MetricLog>,
    pub events: Vec<AgentEvent>,
    /// Queue length per provider per tick: `(provider, lengths)`.
    pub queue_lengths: Vec<(AgentId, Vec<u32>)>,
    /// Number of ticks executed.
    pub ticks: Tick,
    pub truncated: bool,
    pub spawned: usize,
    pub terminated: usize,
}

impl RunResult {
    /// Fills the four headline numbers from the agent logs. Averages only
    /// cover terminated agents; an empty population averages to 0.
    pub fn summarize(&mut self, weights: &SatisfactionWeights) {
        let mut totals = [0.0f64; 2];
        let mut times = [(0u64, 0u64); 2];
        for log in self.logs.iter().filter(|l| l.terminated()) {
            let i = log.ami as usize;
            totals[i] += satisfaction(log, weights);
            times[i].0 += log.time_in_airport().unwrap_or(0) as u64;
            times[i].1 += 1;
        }
        let avg = |(sum, n): (u64, u64)| if n == 0 { 0.0 } else { sum as f64 / n as f64 };
        self.total_satisfaction = totals[0];
        self.total_satisfaction_ami = totals[1];
        self.average_time = avg(times[0]);
        self.average_time_ami = avg(times[1]);
        self.terminated = self.logs.iter().filter(|l| l.terminated()).count();
    }

    /// Headline values in table row order.
    pub fn headline(&self) -> [f64; 4] {
        [
            self.total_satisfaction,
            self.total_satisfaction_ami,
            self.average_time,
            self.average_time_ami,
        ]
    }
}

pub const ROW_NAMES: [&str; 4] = [
    "total-satisfaction",
    "total-satisfactionAmI",
    "average-time",
    "average-timeAmI",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub name: &'static str,
    pub average: f64,
    pub stddev: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub runs: usize,
    pub rows: Vec<SummaryRow>,
}

impl SummaryTable {
    pub fn row(&self, name: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "name,average,stddev")?;
        for r in &self.rows {
            writeln!(out, "{},{},{}", r.name, r.average, r.stddev)?;
        }
        Ok(())
    }
}

impl fmt::Display for SummaryTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<24}{:>14}{:>14}", "Name", "Average", "Std. dev.")?;
        for r in &self.rows {
            writeln!(f, "{:<24}{:>14.2}{:>14.2}", r.name, r.average, r.stddev)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("cannot aggregate an empty set of runs")]
    Empty,
}

/// Mean and sample standard deviation (n − 1). A single value has zero
/// deviation.
pub fn mean_stddev(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn aggregate_headlines(headlines: &[[f64; 4]]) -> Result<SummaryTable, MetricsError> {
    if headlines.is_empty() {
        return Err(MetricsError::Empty);
    }
    let rows = ROW_NAMES
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let column: Vec<f64> = headlines.iter().map(|h| h[i]).collect();
            let (average, stddev) = mean_stddev(&column);
            SummaryRow {
                name,
                average,
                stddev,
            }
        })
        .collect();
    Ok(SummaryTable {
        runs: headlines.len(),
        rows,
    })
}

pub fn aggregate(results: &[RunResult]) -> Result<SummaryTable, MetricsError> {
    let headlines: Vec<[f64; 4]> = results.iter().map(RunResult::headline).collect();
    aggregate_headlines(&headlines)
}
