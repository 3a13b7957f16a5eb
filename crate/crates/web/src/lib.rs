//! Browser bindings. Each exported function takes the config text (the same
//! `key = value` format as the CLI) and returns a JSON string; the plain
//! Rust versions are public so they can be tested natively.

use airport_sim::engine::{run_on, spawn_population, SetupParameters};
use airport_sim::experiment::{batch, parse_config, ExperimentConfig};
use airport_sim::world::{build_layout, AirportMap};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn config(text: &str) -> Result<ExperimentConfig, String> {
    parse_config(text).map_err(|e| e.to_string())
}

fn layout(setup: &SetupParameters) -> Result<AirportMap, String> {
    build_layout(setup).map_err(|e| e.to_string())
}

/// Map rows top first, plus a glyph legend.
pub fn map_json(config_text: &str) -> Result<String, String> {
    let cfg = config(config_text)?;
    let map = layout(&cfg.setup)?;
    let rows: Vec<String> = map.to_string().lines().map(str::to_string).collect();
    let mut legend = serde_json::Map::new();
    for p in map.positions() {
        let k = map.kind(p);
        legend
            .entry(k.glyph().to_string())
            .or_insert_with(|| Value::from(k.label()));
    }
    Ok(json!({
        "width": map.width(),
        "height": map.height(),
        "rows": rows,
        "legend": legend,
    })
    .to_string())
}

/// One run: headline numbers, the satisfaction series, per-passenger
/// outcomes and each provider's peak queue.
pub fn simulation_json(config_text: &str, seed: u64) -> Result<String, String> {
    let cfg = config(config_text)?;
    let setup = SetupParameters { seed, ..cfg.setup };
    setup.validate().map_err(|e| e.to_string())?;
    let map = layout(&setup)?;
    let r = run_on(&setup, &map);
    // Providers do not depend on the random stream.
    let pop = spawn_population(&setup, &map, &mut ChaCha8Rng::seed_from_u64(0));
    let queues: Vec<Value> = r
        .queue_lengths
        .iter()
        .filter_map(|(aid, lengths)| {
            let p = pop.providers.iter().find(|p| p.aid == *aid)?;
            let peak = lengths.iter().copied().max().unwrap_or(0);
            Some(json!({
                "aid": aid.0,
                "kind": p.kind.label(),
                "x": p.position.x,
                "y": p.position.y,
                "peak": peak,
            }))
        })
        .collect();
    let agents: Vec<Value> = r
        .logs
        .iter()
        .map(|l| {
            json!({
                "aid": l.aid.0,
                "direction": l.direction.to_string(),
                "ami": l.ami,
                "entry": l.entry,
                "exit": l.exit,
                "wait": l.queue_wait,
                "purchases": l.purchases.len(),
                "missed": l.missed_flight,
            })
        })
        .collect();
    let series: Vec<[f64; 3]> = r
        .series
        .iter()
        .map(|s| [s.tick as f64, s.nonami, s.ami])
        .collect();
    Ok(json!({
        "seed": seed,
        "ticks": r.ticks,
        "truncated": r.truncated,
        "messages": r.trace.len(),
        "headline": headline(&r.headline()),
        "series": series,
        "agents": agents,
        "queues": queues,
    })
    .to_string())
}

fn headline(h: &[f64; 4]) -> Value {
    json!({
        "total-satisfaction": h[0],
        "total-satisfactionAmI": h[1],
        "average-time": h[2],
        "average-timeAmI": h[3],
    })
}

/// A batch of `runs` seeds: the summary table, per-run headlines and the
/// relative AmI gains.
pub fn batch_json(config_text: &str, runs: u32) -> Result<String, String> {
    let mut cfg = config(config_text)?;
    cfg.runs = runs;
    cfg.out_dir = None;
    let out = batch(&cfg).map_err(|e| e.to_string())?;
    let rows: Vec<Value> = out
        .summary
        .rows
        .iter()
        .map(|r| json!({ "name": r.name, "average": r.average, "stddev": r.stddev }))
        .collect();
    let avg = |i: usize| out.summary.rows[i].average;
    let (non_sat, ami_sat, non_time, ami_time) = (avg(0), avg(1), avg(2), avg(3));
    Ok(json!({
        "runs": out.results.len(),
        "summary": rows,
        "per-run": out.results.iter().map(|r| headline(&r.headline())).collect::<Vec<_>>(),
        "time-saving-percent": (non_time != 0.0).then(|| (non_time - ami_time) / non_time * 100.0),
        "satisfaction-gain-percent": (non_sat != 0.0).then(|| (ami_sat - non_sat) / non_sat.abs() * 100.0),
        "truncated": out.any_truncated(),
    })
    .to_string())
}

#[wasm_bindgen]
pub fn render_map(config_text: &str) -> Result<String, JsError> {
    map_json(config_text).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn run_simulation(config_text: &str, seed: u32) -> Result<String, JsError> {
    simulation_json(config_text, seed.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn run_batch(config_text: &str, runs: u32) -> Result<String, JsError> {
    batch_json(config_text, runs).map_err(|e| JsError::new(&e))
}
