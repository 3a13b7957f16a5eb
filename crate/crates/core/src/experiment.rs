//! Batch experiments: flat `key = value` config files, repeated seeded runs
//! and their CSV / SVG outputs.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::engine::{run, EngineError, SetupParameters};
use crate::metrics::{aggregate, MetricsError, RunResult, SeriesPoint, SummaryTable, ROW_NAMES};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// `setup.seed` is the base seed; run `i` uses `seed + i`.
    pub setup: SetupParameters,
    pub runs: u32,
    pub out_dir: Option<PathBuf>,
    pub trace: bool,
    pub series: bool,
    pub svg: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            setup: SetupParameters::default(),
            runs: 30,
            out_dir: None,
            trace: false,
            series: false,
            svg: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{at}: unknown key `{key}`")]
    UnknownKey { key: String, at: String },
    #[error("{at}: bad value `{value}` for `{key}` (expected {expected})")]
    BadValue {
        key: String,
        value: String,
        expected: &'static str,
        at: String,
    },
    #[error("{at}: expected `key = value`")]
    Syntax { at: String },
    #[error("`runs` must be at least 1")]
    NoRuns,
}

type Setter = fn(&mut ExperimentConfig, &str) -> Result<(), &'static str>;
type Getter = fn(&ExperimentConfig) -> String;

fn parse_u32(s: &str) -> Result<u32, &'static str> {
    s.parse().map_err(|_| "a non-negative integer")
}

fn parse_u64(s: &str) -> Result<u64, &'static str> {
    s.parse().map_err(|_| "a non-negative integer")
}

fn parse_f64(s: &str) -> Result<f64, &'static str> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err("a number"),
    }
}

fn parse_bool(s: &str) -> Result<bool, &'static str> {
    match s {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err("true or false"),
    }
}

macro_rules! keys {
    ($($key:literal => $($field:ident).+ : $parse:ident),+ $(,)?) => {
        const KEYS: &[(&str, Setter, Getter)] = &[
            $((
                $key,
                |c, v| {
                    c.$($field).+ = $parse(v)?;
                    Ok(())
                },
                |c| c.$($field).+.to_string(),
            )),+
        ];
    };
}

keys! {
    "runs" => runs: parse_u32,
    "seed" => setup.seed: parse_u64,
    "grid-width" => setup.grid_width: parse_u32,
    "grid-height" => setup.grid_height: parse_u32,
    "ingoing-nonami" => setup.ingoing_nonami: parse_u32,
    "ingoing-ami" => setup.ingoing_ami: parse_u32,
    "outgoing-nonami" => setup.outgoing_nonami: parse_u32,
    "outgoing-ami" => setup.outgoing_ami: parse_u32,
    "flight-deadline" => setup.flight_deadline: parse_u32,
    "passport-controls" => setup.passport_controls: parse_u32,
    "checkin-counters" => setup.checkin_counters: parse_u32,
    "shop-types" => setup.shop_types: parse_u32,
    "shops-per-type" => setup.shops_per_type: parse_u32,
    "boarding-gates" => setup.boarding_gates: parse_u32,
    "baggage-belts" => setup.baggage_belts: parse_u32,
    "flights" => setup.flights: parse_u32,
    "checkin-base" => setup.times.checkin_base: parse_u32,
    "passport-base" => setup.times.passport_base: parse_u32,
    "shop-base" => setup.times.shop_base: parse_u32,
    "belt-base" => setup.times.belt_base: parse_u32,
    "gate-base" => setup.times.gate_base: parse_u32,
    "per-suitcase" => setup.times.per_suitcase: parse_u32,
    "danger-factor" => setup.times.danger_factor: parse_u32,
    "noise-max" => setup.times.noise_max: parse_u32,
    "weight-miss" => setup.weights.miss: parse_f64,
    "weight-shop" => setup.weights.shop: parse_f64,
    "weight-queue" => setup.weights.queue: parse_f64,
    "max-ticks" => setup.max_ticks: parse_u32,
    "safety-margin" => setup.safety_margin: parse_u32,
    "ami-capacity" => setup.ami_capacity: parse_u32,
    "evaluator" => setup.evaluator: parse_bool,
    "shop-memory" => setup.shop_memory: parse_bool,
    "arrival-window" => setup.arrival_window: parse_u32,
    "trace" => trace: parse_bool,
    "series" => series: parse_bool,
    "svg" => svg: parse_bool,
}

/// Every recognised config key, in dump order.
pub fn config_keys() -> impl Iterator<Item = &'static str> {
    KEYS.iter().map(|(k, _, _)| *k)
}

impl ExperimentConfig {
    /// Sets one key. `at` names the origin for error messages.
    pub fn set(&mut self, key: &str, value: &str, at: &str) -> Result<(), ConfigError> {
        if key == "output-dir" {
            self.out_dir = (!value.is_empty()).then(|| PathBuf::from(value));
            return Ok(());
        }
        let (_, set, _) =
            KEYS.iter()
                .find(|(k, _, _)| *k == key)
                .ok_or_else(|| ConfigError::UnknownKey {
                    key: key.to_string(),
                    at: at.to_string(),
                })?;
        set(self, value).map_err(|expected| ConfigError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
            expected,
            at: at.to_string(),
        })
    }

    /// Applies a `key=value` override from the command line.
    pub fn apply_override(&mut self, kv: &str) -> Result<(), ConfigError> {
        let at = "command line";
        let (k, v) = kv
            .split_once('=')
            .ok_or(ConfigError::Syntax { at: at.into() })?;
        self.set(k.trim(), v.trim(), at)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.runs == 0 {
            return Err(ConfigError::NoRuns);
        }
        Ok(())
    }

    /// All keys with their current values; parses back to the same config.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (k, _, get) in KEYS {
            let _ = writeln!(out, "{k} = {}", get(self));
        }
        if let Some(dir) = &self.out_dir {
            let _ = writeln!(out, "output-dir = {}", dir.display());
        }
        out
    }
}

/// Parses config text. Blank lines and `#` comments are ignored; keys not
/// mentioned keep their defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::default();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = format!("line {}", n + 1);
        let (k, v) = line
            .split_once('=')
            .ok_or(ConfigError::Syntax { at: at.clone() })?;
        cfg.set(k.trim(), v.trim(), &at)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("cannot write to {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug)]
pub struct BatchOutput {
    pub results: Vec<RunResult>,
    pub summary: SummaryTable,
    /// Files written, in order.
    pub files: Vec<PathBuf>,
}

impl BatchOutput {
    pub fn any_truncated(&self) -> bool {
        self.results.iter().any(|r| r.truncated)
    }
}

fn run_all(setups: &[SetupParameters]) -> Result<Vec<RunResult>, EngineError> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        setups.par_iter().map(run).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        setups.iter().map(run).collect()
    }
}

/// Runs seeds `seed .. seed + runs` and writes the outputs when an output
/// directory is configured.
pub fn batch(config: &ExperimentConfig) -> Result<BatchOutput, ExperimentError> {
    config.validate()?;
    if let Some(dir) = &config.out_dir {
        fs::create_dir_all(dir).map_err(|source| ExperimentError::Output {
            path: dir.clone(),
            source,
        })?;
    }
    let setups: Vec<SetupParameters> = (0..config.runs)
        .map(|i| SetupParameters {
            seed: config.setup.seed.wrapping_add(i as u64),
            ..config.setup.clone()
        })
        .collect();
    let results = run_all(&setups)?;
    let summary = aggregate(&results)?;
    let files = match &config.out_dir {
        Some(dir) => write_outputs(config, dir, &results, &summary)?,
        None => Vec::new(),
    };
    Ok(BatchOutput {
        results,
        summary,
        files,
    })
}

fn write_file(
    path: PathBuf,
    files: &mut Vec<PathBuf>,
    body: impl FnOnce(&mut io::BufWriter<fs::File>) -> io::Result<()>,
) -> Result<(), ExperimentError> {
    let err = |source| ExperimentError::Output {
        path: path.clone(),
        source,
    };
    let f = fs::File::create(&path).map_err(err)?;
    let mut w = io::BufWriter::new(f);
    body(&mut w).and_then(|_| w.flush()).map_err(err)?;
    files.push(path);
    Ok(())
}

pub fn write_runs_csv<W: Write>(results: &[RunResult], mut out: W) -> io::Result<()> {
    writeln!(out, "run,seed,{},ticks,truncated", ROW_NAMES.join(","))?;
    for (i, r) in results.iter().enumerate() {
        let h = r.headline();
        writeln!(
            out,
            "{i},{},{},{},{},{},{},{}",
            r.seed, h[0], h[1], h[2], h[3], r.ticks, r.truncated
        )?;
    }
    Ok(())
}

pub fn write_series_csv<W: Write>(series: &[SeriesPoint], mut out: W) -> io::Result<()> {
    writeln!(out, "tick,satisfaction_nonami,satisfaction_ami")?;
    for p in series {
        writeln!(out, "{},{},{}", p.tick, p.nonami, p.ami)?;
    }
    Ok(())
}

/// Point-wise mean of the per-run series; a finished run keeps contributing
/// its last value.
pub fn mean_series(results: &[RunResult]) -> Vec<SeriesPoint> {
    let len = results.iter().map(|r| r.series.len()).max().unwrap_or(0);
    let n = results.len().max(1) as f64;
    (0..len)
        .map(|t| {
            let mut p = SeriesPoint {
                tick: t as u32,
                nonami: 0.0,
                ami: 0.0,
            };
            for r in results {
                if let Some(s) = r.series.get(t).or(r.series.last()) {
                    p.nonami += s.nonami / n;
                    p.ami += s.ami / n;
                }
            }
            p
        })
        .collect()
}

/// Two-curve line chart of satisfaction over time.
pub fn series_svg(series: &[SeriesPoint]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 50.0;
    let max_t = series.last().map_or(1.0, |p| p.tick.max(1) as f64);
    let values = series.iter().flat_map(|p| [p.nonami, p.ami]);
    let lo = values.clone().fold(0.0f64, f64::min);
    let hi = values.fold(0.0f64, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let x = |t: u32| PAD + t as f64 / max_t * (W - 2.0 * PAD);
    let y = |v: f64| H - PAD - (v - lo) / span * (H - 2.0 * PAD);
    let line = |pick: fn(&SeriesPoint) -> f64| {
        series
            .iter()
            .map(|p| format!("{:.1},{:.1}", x(p.tick), y(pick(p))))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<line x1="{PAD}" y1="{0:.1}" x2="{1}" y2="{0:.1}" stroke="gray"/>"#,
        y(0.0),
        W - PAD
    );
    let _ = writeln!(
        s,
        r#"<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{}" stroke="black"/>"#,
        H - PAD
    );
    let _ = writeln!(
        s,
        r#"<text x="{PAD}" y="{}" font-size="12">tick 0</text><text x="{}" y="{}" font-size="12" text-anchor="end">tick {max_t}</text>"#,
        H - PAD + 18.0,
        W - PAD,
        H - PAD + 18.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="end">{hi:.0}</text><text x="{}" y="{}" font-size="12" text-anchor="end">{lo:.0}</text>"#,
        PAD - 4.0,
        y(hi) + 4.0,
        PAD - 4.0,
        y(lo) + 4.0
    );
    let _ = writeln!(
        s,
        r#"<polyline fill="none" stroke="firebrick" stroke-width="2" points="{}"/>"#,
        line(|p| p.nonami)
    );
    let _ = writeln!(
        s,
        r#"<polyline fill="none" stroke="seagreen" stroke-width="2" points="{}"/>"#,
        line(|p| p.ami)
    );
    let _ = writeln!(
        s,
        r#"<text x="{0}" y="20" font-size="13" fill="firebrick">without AmI</text><text x="{1}" y="20" font-size="13" fill="seagreen">with AmI</text>"#,
        PAD,
        PAD + 120.0
    );
    s.push_str("</svg>\n");
    s
}

fn write_outputs(
    config: &ExperimentConfig,
    dir: &Path,
    results: &[RunResult],
    summary: &SummaryTable,
) -> Result<Vec<PathBuf>, ExperimentError> {
    let mut files = Vec::new();
    write_file(dir.join("runs.csv"), &mut files, |w| {
        write_runs_csv(results, w)
    })?;
    write_file(dir.join("summary.csv"), &mut files, |w| {
        summary.write_csv(w)
    })?;
    if config.series {
        write_file(dir.join("series-mean.csv"), &mut files, |w| {
            write_series_csv(&mean_series(results), w)
        })?;
        for r in results {
            write_file(
                dir.join(format!("series-{}.csv", r.seed)),
                &mut files,
                |w| write_series_csv(&r.series, w),
            )?;
        }
    }
    if config.trace {
        for r in results {
            write_file(dir.join(format!("trace-{}.tsv", r.seed)), &mut files, |w| {
                r.trace.write_lines(w)
            })?;
            write_file(
                dir.join(format!("events-{}.tsv", r.seed)),
                &mut files,
                |w| r.events.iter().try_for_each(|e| writeln!(w, "{e}")),
            )?;
            write_file(
                dir.join(format!("queues-{}.csv", r.seed)),
                &mut files,
                |w| {
                    writeln!(w, "provider,tick,length")?;
                    for (aid, lengths) in &r.queue_lengths {
                        for (t, l) in lengths.iter().enumerate() {
                            writeln!(w, "{aid},{t},{l}")?;
                        }
                    }
                    Ok(())
                },
            )?;
        }
    }
    if config.svg {
        let svg = series_svg(&mean_series(results));
        write_file(dir.join("satisfaction.svg"), &mut files, |w| {
            w.write_all(svg.as_bytes())
        })?;
    }
    Ok(files)
}
