//! Independent oracles shared by the integration tests and the acceptance
//! suite. None of them call into the code they check beyond reading its
//! public results.
#![allow(dead_code)]

use std::collections::{BTreeMap, VecDeque};

use airport_sim::agents::{Action, Condition, Direction, EventKind};
use airport_sim::engine::{spawn_population, SetupParameters, FACILITATOR, POSITIONING};
use airport_sim::messaging::Performative;
use airport_sim::metrics::RunResult;
use airport_sim::ontology::{AgentId, Feature, Place, Position, Predicate, Product, Service, Site};
use airport_sim::services::ServiceTimes;
use airport_sim::world::{AirportMap, ZoneKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// Grids

/// Random wall pattern, walls over unreachable pockets so the map is
/// connected. Returns the cell grid (row-major).
pub fn random_cells(rng: &mut impl Rng, w: u32, h: u32) -> Vec<ZoneKind> {
    let density = rng.gen_range(0.0..0.4);
    let mut cells: Vec<ZoneKind> = (0..w * h)
        .map(|_| {
            if rng.gen_bool(density) {
                ZoneKind::Wall
            } else {
                ZoneKind::Open
            }
        })
        .collect();
    cells[0] = ZoneKind::Open;
    // Keep only the component of cell 0.
    let dist = bfs_grid(&cells, w, h, 0);
    for (i, c) in cells.iter_mut().enumerate() {
        if dist[i].is_none() {
            *c = ZoneKind::Wall;
        }
    }
    cells
}

/// Plain breadth-first search over a row-major grid; 4-neighbour, walls
/// (and nothing else) block.
pub fn bfs_grid(cells: &[ZoneKind], w: u32, h: u32, start: usize) -> Vec<Option<u32>> {
    let mut dist = vec![None; cells.len()];
    if cells[start] == ZoneKind::Wall {
        return dist;
    }
    dist[start] = Some(0);
    let mut q = VecDeque::from([start]);
    while let Some(i) = q.pop_front() {
        let (x, y) = ((i as u32 % w) as i64, (i as u32 / w) as i64);
        for (dx, dy) in [(0, 1), (1, 0), (0, -1), (-1, 0)] {
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                continue;
            }
            let j = (ny as u32 * w + nx as u32) as usize;
            if cells[j] != ZoneKind::Wall && dist[j].is_none() {
                dist[j] = Some(dist[i].unwrap() + 1);
                q.push_back(j);
            }
        }
    }
    dist
}

pub fn bfs_len(map: &AirportMap, from: Position, to: Position) -> Option<u32> {
    let (w, h) = (map.width(), map.height());
    let cells: Vec<ZoneKind> = (0..h)
        .flat_map(|y| (0..w).map(move |x| Position::new(x, y)))
        .map(|p| map.kind(p))
        .collect();
    bfs_grid(&cells, w, h, (from.y * w + from.x) as usize)[(to.y * w + to.x) as usize]
}

/// Checks `path` is a walk of unit steps over non-wall cells from `from`
/// (excluded) to `to` (included).
pub fn valid_walk(map: &AirportMap, from: Position, to: Position, path: &[Position]) -> bool {
    let mut at = from;
    for p in path {
        if at.manhattan(*p) != 1 || map.kind(*p) == ZoneKind::Wall {
            return false;
        }
        at = *p;
    }
    at == to
}

// ---------------------------------------------------------------------------
// Scenarios

/// Small random setup with a single shared pool of every zone type.
pub fn random_setup(rng: &mut impl Rng) -> SetupParameters {
    let w = rng.gen_range(9..=20);
    SetupParameters {
        grid_width: w,
        grid_height: rng.gen_range(16..=24),
        ingoing_nonami: rng.gen_range(0..=5),
        ingoing_ami: rng.gen_range(0..=5),
        outgoing_nonami: rng.gen_range(0..=5),
        outgoing_ami: rng.gen_range(0..=5),
        flight_deadline: rng.gen_range(40..=200),
        passport_controls: rng.gen_range(1..=2),
        checkin_counters: rng.gen_range(1..=3),
        shop_types: rng.gen_range(1..=3),
        shops_per_type: rng.gen_range(1..=2),
        boarding_gates: rng.gen_range(1..=3),
        baggage_belts: rng.gen_range(1..=2),
        flights: rng.gen_range(1..=4),
        times: ServiceTimes {
            noise_max: rng.gen_range(0..=4),
            ..ServiceTimes::default()
        },
        seed: rng.gen(),
        ami_capacity: rng.gen_range(0..=3),
        shop_memory: rng.gen_bool(0.5),
        arrival_window: rng.gen_range(0..=40),
        ..SetupParameters::default()
    }
}

pub fn scenario_rng(stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0xA1B2_C3D4 ^ stream)
}

// ---------------------------------------------------------------------------
// Queue replay

pub struct QueueReplay {
    pub waits: BTreeMap<AgentId, u32>,
    pub fifo_violations: usize,
    pub customers: usize,
}

/// Recomputes every agent's waiting time from the event log alone: the
/// server takes customers in join order and is free again when the
/// previous customer is served (or one tick after it is dropped for a
/// missed flight).
pub fn replay_queues(r: &RunResult) -> QueueReplay {
    #[derive(Clone, Copy)]
    enum End {
        Served(u32),
        Missed(u32),
        Failed(u32),
        Open,
    }
    let mut joins: BTreeMap<AgentId, Vec<(u32, AgentId)>> = BTreeMap::new();
    for e in &r.events {
        if let EventKind::QueueJoined(p) = e.kind {
            joins.entry(p).or_default().push((e.tick, e.aid));
        }
    }
    let end_of = |agent: AgentId, provider: AgentId, join: u32| -> End {
        for e in r.events.iter().filter(|e| e.aid == agent && e.tick >= join) {
            match &e.kind {
                EventKind::Served(p) if *p == provider => return End::Served(e.tick),
                EventKind::MissedFlight => return End::Missed(e.tick),
                EventKind::Failed(_) => return End::Failed(e.tick),
                _ => {}
            }
        }
        End::Open
    };
    let mut waits: BTreeMap<AgentId, u32> = r.logs.iter().map(|l| (l.aid, 0)).collect();
    let mut violations = 0;
    let mut customers = 0;
    for (provider, line) in &joins {
        let mut free = 0u32;
        let mut last_served = None;
        for &(join, agent) in line {
            customers += 1;
            let start = join.max(free);
            let wait = match end_of(agent, *provider, join) {
                End::Served(c) => {
                    if c <= start || last_served.is_some_and(|l| c <= l) {
                        violations += 1;
                    }
                    last_served = Some(c);
                    free = c;
                    start - join
                }
                End::Missed(t) if t < start => t - join + 1,
                End::Missed(t) => {
                    free = t + 1;
                    start - join
                }
                End::Failed(t) if t <= start => t - join,
                End::Failed(t) => {
                    free = t;
                    start - join
                }
                End::Open => start.min(r.ticks) - join,
            };
            *waits.get_mut(&agent).unwrap() += wait;
        }
    }
    QueueReplay {
        waits,
        fifo_violations: violations,
        customers,
    }
}

// ---------------------------------------------------------------------------
// Protocol trace scanning

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Step {
    Location,
    Services,
    ServicesAnswer,
    Provider,
    ProviderAnswer,
    Request,
}

impl Step {
    pub fn phase(self) -> u8 {
        match self {
            Step::Location => 3,
            Step::Services => 4,
            Step::ServicesAnswer => 5,
            Step::Provider => 7,
            Step::ProviderAnswer => 8,
            Step::Request => 9,
        }
    }
}

/// Scans a run's message trace. Every service an AmI user was served by
/// must be preceded by one conversation showing phases 3, 4, 5, 7, 8, 9 in
/// order, the last addressed to that provider. Users without AmI must never
/// exchange phase 4/5/7/8 messages. Returns the number of checked services.
pub fn scan_protocol(
    r: &RunResult,
    params: &SetupParameters,
    map: &AirportMap,
) -> Result<usize, String> {
    let ami: BTreeMap<AgentId, (bool, Direction)> = r
        .logs
        .iter()
        .map(|l| (l.aid, (l.ami, l.direction)))
        .collect();
    let is_user = |a: AgentId| ami.contains_key(&a);
    let pop = spawn_population(params, map, &mut ChaCha8Rng::seed_from_u64(0));
    let kind_of: BTreeMap<AgentId, ZoneKind> =
        pop.providers.iter().map(|p| (p.aid, p.kind)).collect();

    // (user, conversation) → (step, tick, counterpart).
    type Steps = Vec<(Step, u32, AgentId)>;
    let mut convs: BTreeMap<(AgentId, u32), Steps> = BTreeMap::new();
    let mut panel_asks: BTreeMap<AgentId, usize> = BTreeMap::new();
    for m in r.trace.messages() {
        let step = match (m.performative, &m.content) {
            (Performative::Inform, Predicate::HasLocation { .. }) if m.sender == POSITIONING => {
                Some(Step::Location)
            }
            (Performative::QueryRef, Predicate::HasServices { .. })
                if m.receiver == FACILITATOR =>
            {
                Some(Step::Services)
            }
            (Performative::Inform, Predicate::HasServices { .. }) if m.sender == FACILITATOR => {
                Some(Step::ServicesAnswer)
            }
            (Performative::QueryRef, Predicate::IsProvider { .. }) if m.receiver == FACILITATOR => {
                Some(Step::Provider)
            }
            (Performative::Inform, Predicate::IsProvider { .. }) if m.sender == FACILITATOR => {
                Some(Step::ProviderAnswer)
            }
            (Performative::Request, Predicate::Provide { .. }) if is_user(m.sender) => {
                if kind_of.get(&m.receiver).is_some_and(|k| k.is_panel()) {
                    if kind_of[&m.receiver] == ZoneKind::BaggageInfoPanel {
                        *panel_asks.entry(m.sender).or_default() += 1;
                    }
                    None
                } else {
                    Some(Step::Request)
                }
            }
            _ => None,
        };
        let Some(step) = step else { continue };
        let user = if is_user(m.sender) {
            m.sender
        } else {
            m.receiver
        };
        let (is_ami, _) = ami[&user];
        if !is_ami && step != Step::Request {
            return Err(format!(
                "agent {user} without AmI exchanged a phase {} message",
                step.phase()
            ));
        }
        let other = if user == m.sender {
            m.receiver
        } else {
            m.sender
        };
        convs
            .entry((user, m.conversation.0))
            .or_default()
            .push((step, m.tick, other));
    }

    let full = [
        Step::Location,
        Step::Services,
        Step::ServicesAnswer,
        Step::Provider,
        Step::ProviderAnswer,
        Step::Request,
    ];
    let mut checked = 0;
    for e in &r.events {
        let EventKind::Served(provider) = e.kind else {
            continue;
        };
        let (is_ami, _) = ami[&e.aid];
        if !is_ami {
            continue;
        }
        let ok = convs.iter().any(|((u, _), steps)| {
            *u == e.aid
                && steps.iter().map(|s| s.0).collect::<Vec<_>>() == full
                && steps.windows(2).all(|w| w[0].1 < w[1].1)
                && steps
                    .last()
                    .is_some_and(|s| s.2 == provider && s.1 < e.tick)
        });
        if !ok {
            return Err(format!(
                "AmI agent {} served by {provider} at {} without a complete discovery",
                e.aid, e.tick
            ));
        }
        checked += 1;
    }
    for (user, (is_ami, dir)) in &ami {
        let asks = panel_asks.get(user).copied().unwrap_or(0);
        if *dir == Direction::Ingoing && *is_ami && asks > 0 {
            return Err(format!("AmI agent {user} asked a baggage panel"));
        }
        let finished = r
            .logs
            .iter()
            .any(|l| l.aid == *user && l.terminated() && !l.missed_flight);
        if *dir == Direction::Ingoing && !*is_ami && finished && asks == 0 {
            return Err(format!("agent {user} found its belt without the panel"));
        }
    }
    Ok(checked)
}

// ---------------------------------------------------------------------------
// Statistics

/// Mean and sample standard deviation, computed with Welford's update.
pub fn welford(values: &[f64]) -> (f64, f64) {
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for v in values {
        n += 1.0;
        let d = v - mean;
        mean += d / n;
        m2 += d * (v - mean);
    }
    let sd = if n > 1.0 {
        (m2 / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    a == b || (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

/// Recomputes summary rows from a runs CSV and compares them with a
/// summary CSV. Returns the worst relative error.
pub fn check_summary(runs_csv: &str, summary_csv: &str) -> Result<f64, String> {
    let mut lines = runs_csv.lines();
    let header: Vec<&str> = lines.next().ok_or("empty runs csv")?.split(',').collect();
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    let mut worst = 0.0f64;
    let mut seen = 0;
    for line in summary_csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let col = header
            .iter()
            .position(|h| *h == f[0])
            .ok_or_else(|| format!("no column {}", f[0]))?;
        let values: Vec<f64> = rows
            .iter()
            .map(|r| r[col].parse::<f64>().map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        let (mean, sd) = welford(&values);
        let (got_mean, got_sd): (f64, f64) = (
            f[1].parse().map_err(|_| "bad mean")?,
            f[2].parse().map_err(|_| "bad stddev")?,
        );
        for (a, b) in [(mean, got_mean), (sd, got_sd)] {
            let rel = if a == b {
                0.0
            } else {
                (a - b).abs() / a.abs().max(b.abs())
            };
            worst = worst.max(rel);
        }
        seen += 1;
    }
    if seen != 4 {
        return Err(format!("expected 4 summary rows, found {seen}"));
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Batches on disk

/// Loads `config` from disk, runs the batch into `out` and returns every
/// written file by name.
pub fn batch_files(config: &std::path::Path, out: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    let mut cfg = airport_sim::load_config(config).unwrap();
    cfg.out_dir = Some(out.to_path_buf());
    let written = airport_sim::batch(&cfg).unwrap();
    written
        .files
        .iter()
        .map(|f| {
            (
                f.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(f).unwrap(),
            )
        })
        .collect()
}

/// A random config written as a key-value file.
pub fn random_config_text(rng: &mut impl Rng) -> String {
    let cfg = airport_sim::ExperimentConfig {
        setup: random_setup(rng),
        runs: rng.gen_range(1..=4),
        out_dir: None,
        trace: true,
        series: true,
        svg: true,
    };
    cfg.dump()
}

// ---------------------------------------------------------------------------
// Golden files

pub fn golden_text(name: &str) -> String {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    std::fs::read_to_string(path).unwrap()
}

/// Reads a plan listing: one `add-intention "action" "condition"` per line,
/// `;;` starts a comment.
pub fn golden_plan(name: &str) -> Vec<(Action, Condition)> {
    golden_text(name)
        .lines()
        .map(|l| l.split(";;").next().unwrap().trim())
        .filter(|l| !l.is_empty())
        .map(|l| {
            let rest = l.strip_prefix("add-intention").expect("add-intention line");
            let quoted: Vec<&str> = rest.split('"').filter(|s| !s.trim().is_empty()).collect();
            assert_eq!(quoted.len(), 2, "{l}");
            (quoted[0].parse().unwrap(), quoted[1].parse().unwrap())
        })
        .collect()
}

pub const PLAN_FILES: [(Direction, bool, &str); 4] = [
    (Direction::Ingoing, false, "plan-ingoing-nonami.txt"),
    (Direction::Ingoing, true, "plan-ingoing-ami.txt"),
    (Direction::Outgoing, false, "plan-outgoing-nonami.txt"),
    (Direction::Outgoing, true, "plan-outgoing-ami.txt"),
];

/// Splits a listing `["perf" "sender:N" "receiver:M" "content:" "..."]`.
pub fn read_listing(name: &str) -> (String, u32, u32, String) {
    let text = golden_text(name);
    let fields: Vec<&str> = text
        .trim()
        .trim_start_matches('[')
        .trim_end_matches(']')
        .split('"')
        .enumerate()
        .filter(|(i, _)| i % 2 == 1)
        .map(|(_, s)| s)
        .collect();
    assert_eq!(fields.len(), 5, "{fields:?}");
    let num = |s: &str, key: &str| s.strip_prefix(key).unwrap().parse().unwrap();
    (
        fields[0].to_string(),
        num(fields[1], "sender:"),
        num(fields[2], "receiver:"),
        fields[4].to_string(),
    )
}

pub fn squash(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn expected_inform() -> Predicate {
    Predicate::IsProvider {
        place: Place::airport(),
        site: Site::new("Belt", Position::new(18, 6)),
        aid: AgentId(51),
        service: Service::baggage_delivery(),
    }
}

pub fn expected_request() -> Predicate {
    Predicate::Provide {
        product: Product {
            name: "Baggage-Delivery".into(),
            characteristics: vec![Feature::new("Baggage-Number", 1)],
        },
        aid: AgentId(51),
    }
}

// ---------------------------------------------------------------------------
// Predicate strategies

pub mod strategies {
    use airport_sim::ontology::{
        AgentId, Context, Feature, Place, Position, Predicate, Product, Profile, Service, Site,
    };
    use proptest::prelude::*;

    fn word() -> impl Strategy<Value = String> {
        "[A-Za-z][A-Za-z0-9._-]{0,10}"
    }

    fn place() -> impl Strategy<Value = Place> {
        (word(), 0i32..5).prop_map(|(building, floor)| Place { building, floor })
    }

    fn site() -> impl Strategy<Value = Site> {
        (proptest::option::of(word()), 0u32..200, 0u32..200).prop_map(|(label, x, y)| Site {
            label,
            position: Position::new(x, y),
        })
    }

    fn aid() -> impl Strategy<Value = AgentId> {
        (0u32..10_000).prop_map(AgentId)
    }

    fn service() -> impl Strategy<Value = Service> {
        word().prop_map(|name| Service { name })
    }

    fn features() -> impl Strategy<Value = Vec<Feature>> {
        prop::collection::vec(
            (word(), word()).prop_map(|(name, value)| Feature { name, value }),
            0..4,
        )
    }

    fn profile() -> impl Strategy<Value = Profile> {
        (
            word(),
            prop::collection::vec(0.0f64..=1.0, 1..=10),
            0u32..10,
            0.0f64..=1.0,
            word(),
        )
            .prop_map(
                |(name, shopping_interest, suitcases, danger, flight)| Profile {
                    name,
                    shopping_interest,
                    suitcases,
                    danger,
                    flight,
                },
            )
    }

    pub fn predicate() -> impl Strategy<Value = Predicate> {
        prop_oneof![
            (place(), site(), aid()).prop_map(|(place, site, aid)| Predicate::HasLocation {
                place,
                site,
                aid
            }),
            (place(), site(), prop::collection::vec(service(), 0..5)).prop_map(
                |(place, site, services)| Predicate::HasServices {
                    place,
                    site,
                    services
                }
            ),
            (place(), site(), aid(), service()).prop_map(|(place, site, aid, service)| {
                Predicate::IsProvider {
                    place,
                    site,
                    aid,
                    service,
                }
            }),
            (word(), features(), aid()).prop_map(|(name, characteristics, who)| {
                Predicate::HasContext {
                    what: Context {
                        name,
                        characteristics,
                    },
                    who,
                }
            }),
            (profile(), aid()).prop_map(|(profile, aid)| Predicate::HasProfile { profile, aid }),
            (word(), features(), aid()).prop_map(|(name, characteristics, aid)| {
                Predicate::Provide {
                    product: Product {
                        name,
                        characteristics,
                    },
                    aid,
                }
            }),
        ]
    }
}

// ---------------------------------------------------------------------------
// Hand-traced fixture

// y=6  G.g..   gate (0,6), boarding info (2,6)
// y=5  ..0..   shop of type A at (2,5)
// y=4  ##P##   passport control (2,4)
// y=3  .....
// y=2  .C...   check-in counter (1,2)
// y=1  f....   flight info (0,1)
// y=0  .E.X.   entrance (1,0), exit (3,0)
pub const TINY: &str = "\
G.g..
..0..
##P##
.....
.C...
f....
.E.X.
";

/// One outgoing passenger, one flight, every service exactly 3 ticks.
pub fn single(ami: bool) -> SetupParameters {
    SetupParameters {
        ingoing_nonami: 0,
        ingoing_ami: 0,
        outgoing_nonami: u32::from(!ami),
        outgoing_ami: u32::from(ami),
        shop_types: 1,
        flights: 1,
        flight_deadline: 1000,
        arrival_window: 0,
        times: ServiceTimes {
            per_suitcase: 0,
            danger_factor: 0,
            noise_max: 0,
            ..ServiceTimes::default()
        },
        ..SetupParameters::default()
    }
}

pub fn no_agents() -> SetupParameters {
    SetupParameters {
        ingoing_nonami: 0,
        ingoing_ami: 0,
        outgoing_nonami: 0,
        outgoing_ami: 0,
        ..SetupParameters::default()
    }
}
