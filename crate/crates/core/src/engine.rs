//! The tick loop. Each tick runs, in order:
//!
//! 1. message delivery (everything sent last tick becomes receivable),
//! 2. agent steps in ascending aid: facilitator, positioning, evaluator,
//!    providers (which answer or enqueue requests), then users,
//! 3. provider ticks (service completions and starts),
//! 4. bookkeeping: queue waits, deadlines, failures, series.
//!
//! All randomness comes from one ChaCha8 stream seeded by the run seed.
//! Draw order: spawn (shuffle, then per user: suitcases, danger, shop
//! weights, arrival), then per tick user steps in aid order, then provider
//! service times in aid order.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::agents::{AgentEvent, Behaviour, Direction, EventKind, Status, StepContext, UserAgent};
use crate::messaging::{Message, MessageBus, Performative, Tick};
use crate::metrics::{satisfaction, MetricLog, RunResult, SatisfactionWeights, SeriesPoint};
use crate::ontology::{AgentId, Place, Position, Predicate, Profile, Service, Site};
use crate::protocol::{advance, finish_service, Conversations, Directory, Participants};
use crate::services::{service_time, ProviderState, ServiceTimes};
use crate::world::{build_layout, AirportMap, WorldError, ZoneKind};

pub const FACILITATOR: AgentId = AgentId(0);
pub const POSITIONING: AgentId = AgentId(1);
pub const EVALUATOR: AgentId = AgentId(2);
/// First provider aid; users follow the providers.
pub const FIRST_PROVIDER: u32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct SetupParameters {
    pub grid_width: u32,
    pub grid_height: u32,
    pub ingoing_nonami: u32,
    pub ingoing_ami: u32,
    pub outgoing_nonami: u32,
    pub outgoing_ami: u32,
    /// Ticks from arrival until the flight leaves.
    pub flight_deadline: u32,
    pub passport_controls: u32,
    pub checkin_counters: u32,
    pub shop_types: u32,
    pub shops_per_type: u32,
    pub boarding_gates: u32,
    pub baggage_belts: u32,
    pub flights: u32,
    pub times: ServiceTimes,
    pub weights: SatisfactionWeights,
    pub seed: u64,
    /// Tick cap; 0 means 10 × deadline (plus the arrival window).
    pub max_ticks: u32,
    pub safety_margin: u32,
    /// Messages the facilitator and the positioning agent can each handle
    /// per tick; 0 means unlimited.
    pub ami_capacity: u32,
    /// Users report their profile to the evaluator after each service.
    pub evaluator: bool,
    pub shop_memory: bool,
    /// Users arrive uniformly over `[0, arrival_window)`; 0 means all at once.
    pub arrival_window: u32,
}

impl Default for SetupParameters {
    fn default() -> Self {
        Self {
            grid_width: 33,
            grid_height: 33,
            ingoing_nonami: 25,
            ingoing_ami: 25,
            outgoing_nonami: 25,
            outgoing_ami: 25,
            flight_deadline: 250,
            passport_controls: 2,
            checkin_counters: 4,
            shop_types: 4,
            shops_per_type: 2,
            boarding_gates: 4,
            baggage_belts: 2,
            flights: 4,
            times: ServiceTimes::default(),
            weights: SatisfactionWeights::default(),
            seed: 1,
            max_ticks: 0,
            safety_margin: 10,
            ami_capacity: 0,
            evaluator: false,
            shop_memory: false,
            arrival_window: 200,
        }
    }
}

impl SetupParameters {
    pub fn users(&self) -> u32 {
        self.ingoing_nonami + self.ingoing_ami + self.outgoing_nonami + self.outgoing_ami
    }

    pub fn tick_cap(&self) -> Tick {
        if self.max_ticks > 0 {
            self.max_ticks
        } else {
            self.flight_deadline.saturating_mul(10) + self.arrival_window
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.flight_deadline == 0 {
            return Err(EngineError::Invalid("flight deadline must be positive"));
        }
        if self.users() > 0 && self.flights == 0 {
            return Err(EngineError::Invalid("at least one flight is needed"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("invalid setup: {0}")]
    Invalid(&'static str),
    #[error(transparent)]
    Layout(#[from] WorldError),
}

/// Iteration counter; moves by one per engine step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimClock {
    tick: Tick,
}

impl SimClock {
    pub fn now(self) -> Tick {
        self.tick
    }

    pub fn advance(&mut self) {
        self.tick += 1;
    }
}

/// Counter, gate and belt serving one flight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Booking {
    pub counter: Option<AgentId>,
    pub gate: Option<AgentId>,
    pub belt: Option<AgentId>,
}

/// Everything created at setup.
#[derive(Debug, Clone)]
pub struct Population {
    pub providers: Vec<ProviderState>,
    /// Users in ascending aid order.
    pub users: Vec<UserAgent>,
    /// Arrival tick per user, same order.
    pub arrivals: Vec<Tick>,
    /// Booking per flight index.
    pub bookings: Vec<Booking>,
}

pub fn flight_name(k: u32) -> String {
    format!("FL-{k}")
}

fn flight_index(name: &str) -> Option<usize> {
    name.strip_prefix("FL-")?.parse().ok()
}

/// Creates providers (one per staffed cell, in zone order) and users with
/// random profiles. Non-AmI and AmI users are shuffled together so neither
/// group always steps first.
pub fn spawn_population<R: Rng + ?Sized>(
    params: &SetupParameters,
    map: &AirportMap,
    rng: &mut R,
) -> Population {
    let mut providers = Vec::new();
    let mut next = FIRST_PROVIDER;
    for (kind, cells) in map.zone_index() {
        if !kind.has_provider() {
            continue;
        }
        for p in cells {
            providers.push(ProviderState::new(AgentId(next), *kind, *p));
            next += 1;
        }
    }
    let of_kind = |k: ZoneKind| -> Vec<AgentId> {
        providers
            .iter()
            .filter(|p| p.kind == k)
            .map(|p| p.aid)
            .collect()
    };
    let (counters, gates, belts) = (
        of_kind(ZoneKind::CheckinCounter),
        of_kind(ZoneKind::BoardingGate),
        of_kind(ZoneKind::BaggageBelt),
    );
    let pick = |v: &[AgentId], k: u32| (!v.is_empty()).then(|| v[k as usize % v.len()]);
    let bookings: Vec<Booking> = (0..params.flights)
        .map(|k| Booking {
            counter: pick(&counters, k),
            gate: pick(&gates, k),
            belt: pick(&belts, k),
        })
        .collect();

    let mut kinds = Vec::with_capacity(params.users() as usize);
    for (count, dir, ami) in [
        (params.ingoing_nonami, Direction::Ingoing, false),
        (params.ingoing_ami, Direction::Ingoing, true),
        (params.outgoing_nonami, Direction::Outgoing, false),
        (params.outgoing_ami, Direction::Outgoing, true),
    ] {
        kinds.extend(std::iter::repeat_n((dir, ami), count as usize));
    }
    kinds.shuffle(rng);

    let entrance = map.zone(ZoneKind::Entrance).first().copied();
    let gate_pos: BTreeMap<AgentId, Position> =
        providers.iter().map(|p| (p.aid, p.position)).collect();
    let mut users = Vec::with_capacity(kinds.len());
    let mut arrivals = Vec::with_capacity(kinds.len());
    for (i, (direction, ami)) in kinds.into_iter().enumerate() {
        let aid = AgentId(next + i as u32);
        let suitcases = rng.gen_range(0..=3u32);
        let danger: f64 = rng.gen();
        let shopping_interest = (0..params.shop_types).map(|_| rng.gen::<f64>()).collect();
        let arrival = if params.arrival_window > 0 {
            rng.gen_range(0..params.arrival_window)
        } else {
            0
        };
        let flight = i as u32 % params.flights.max(1);
        let profile = Profile {
            name: format!("passenger-{}", aid.0),
            shopping_interest,
            suitcases,
            danger,
            flight: flight_name(flight),
        };
        let start = match direction {
            Direction::Outgoing => entrance,
            Direction::Ingoing => bookings
                .get(flight as usize)
                .and_then(|b| b.gate)
                .and_then(|g| gate_pos.get(&g).copied()),
        }
        .unwrap_or(Position::new(0, 0));
        let deadline = (direction == Direction::Outgoing).then(|| arrival + params.flight_deadline);
        users.push(UserAgent::new(
            aid, direction, ami, profile, start, deadline,
        ));
        arrivals.push(arrival);
    }
    Population {
        providers,
        users,
        arrivals,
        bookings,
    }
}

/// The facilitator's and positioning agent's view of the airport.
pub struct AirportDirectory<'a> {
    map: &'a AirportMap,
    providers: Vec<(AgentId, ZoneKind, Position)>,
    bookings: Vec<Booking>,
    flights: BTreeMap<AgentId, usize>,
    positions: BTreeMap<AgentId, Position>,
}

impl<'a> AirportDirectory<'a> {
    pub fn new(map: &'a AirportMap, pop: &Population) -> Self {
        Self {
            map,
            providers: pop
                .providers
                .iter()
                .map(|p| (p.aid, p.kind, p.position))
                .collect(),
            bookings: pop.bookings.clone(),
            flights: pop
                .users
                .iter()
                .filter_map(|u| Some((u.aid, flight_index(&u.profile.flight)?)))
                .collect(),
            positions: pop.users.iter().map(|u| (u.aid, u.position)).collect(),
        }
    }

    pub fn set_position(&mut self, user: AgentId, at: Position) {
        self.positions.insert(user, at);
    }

    fn site_of(&self, aid: AgentId) -> Option<Site> {
        self.providers
            .iter()
            .find(|(a, _, _)| *a == aid)
            .map(|(_, k, p)| Site::new(k.label(), *p))
    }

    fn service_of(kind: ZoneKind) -> Option<Service> {
        Some(match kind {
            ZoneKind::CheckinCounter => Service::check_in(),
            ZoneKind::PassportControl => Service::passport_control(),
            ZoneKind::Shop(t) => Service::shopping(t),
            ZoneKind::BoardingGate => Service::boarding(),
            ZoneKind::BaggageBelt => Service::baggage_delivery(),
            _ => return None,
        })
    }

    /// Booked provider of the user's flight for a per-airline service.
    fn booked(&self, user: AgentId, service: &str) -> Option<AgentId> {
        let b = self.bookings.get(*self.flights.get(&user)?)?;
        match service {
            Service::CHECK_IN => b.counter,
            Service::BOARDING => b.gate,
            Service::BAGGAGE_DELIVERY => b.belt,
            _ => None,
        }
    }

    /// Reply of an information panel to `user`.
    fn panel_answer(&self, panel: ZoneKind, user: AgentId) -> Option<Predicate> {
        let service = match panel {
            ZoneKind::FlightInfoPanel => Service::check_in(),
            ZoneKind::BoardingInfoPanel => Service::boarding(),
            ZoneKind::BaggageInfoPanel => Service::baggage_delivery(),
            _ => return None,
        };
        let aid = self.booked(user, &service.name)?;
        Some(Predicate::IsProvider {
            place: Place::airport(),
            site: self.site_of(aid)?,
            aid,
            service,
        })
    }
}

impl Directory for AirportDirectory<'_> {
    fn locate(&self, user: AgentId) -> Option<Site> {
        let p = *self.positions.get(&user)?;
        Some(Site::new(self.map.kind(p).label(), p))
    }

    fn services_at(&self, position: Position) -> Vec<Service> {
        let mut out: Vec<Service> = Vec::new();
        for (_, kind, p) in &self.providers {
            if let Some(s) = Self::service_of(*kind) {
                if !out.contains(&s) && self.map.share_area(position, *p) {
                    out.push(s);
                }
            }
        }
        out
    }

    fn provider_for(
        &self,
        user: AgentId,
        service: &Service,
        from: Position,
    ) -> Option<(AgentId, Site)> {
        let aid = match self.booked(user, &service.name) {
            Some(aid) => aid,
            None => {
                self.providers
                    .iter()
                    .filter(|(_, k, _)| Self::service_of(*k).as_ref() == Some(service))
                    .filter_map(|(a, _, p)| self.map.distance(from, *p).map(|d| (d, *a)))
                    .min()?
                    .1
            }
        };
        Some((aid, self.site_of(aid)?))
    }
}

struct Engine<'a> {
    params: &'a SetupParameters,
    map: &'a AirportMap,
    dir: AirportDirectory<'a>,
    users: Vec<UserAgent>,
    arrivals: Vec<Tick>,
    logs: Vec<MetricLog>,
    providers: Vec<ProviderState>,
    provider_at: BTreeMap<Position, AgentId>,
    first_user: u32,
    bus: MessageBus,
    convs: Conversations,
    rng: ChaCha8Rng,
    behaviour: Behaviour,
    participants: Participants,
    facilitator_backlog: VecDeque<Message>,
    positioning_backlog: VecDeque<Message>,
    /// (provider, user) → enqueue tick, for agents still in line.
    waiting: HashMap<(AgentId, AgentId), Tick>,
    events: Vec<AgentEvent>,
    series: Vec<SeriesPoint>,
    queue_lengths: Vec<(AgentId, Vec<u32>)>,
}

impl Engine<'_> {
    fn user_index(&self, aid: AgentId) -> Option<usize> {
        let i = aid.0.checked_sub(self.first_user)? as usize;
        (i < self.users.len()).then_some(i)
    }

    fn send(&mut self, m: Message, now: Tick) {
        self.bus.send(m, now);
    }

    fn event(&mut self, tick: Tick, aid: AgentId, kind: EventKind) {
        self.events.push(AgentEvent { tick, aid, kind });
    }

    /// Facilitator or positioning agent: works through its backlog.
    fn step_ami_service(&mut self, who: AgentId, now: Tick) {
        let incoming: Vec<Message> = self.bus.inbox(who, now).into_iter().cloned().collect();
        let backlog = if who == FACILITATOR {
            &mut self.facilitator_backlog
        } else {
            &mut self.positioning_backlog
        };
        backlog.extend(incoming);
        let cap = match self.params.ami_capacity {
            0 => backlog.len(),
            c => (c as usize).min(backlog.len()),
        };
        let batch: Vec<Message> = backlog.drain(..cap).collect();
        for m in batch {
            let out = match self.convs.get(m.conversation) {
                Some(state) => {
                    let t = advance(state, &m, &self.dir);
                    self.convs.update(t.state);
                    t.outgoing
                }
                None => vec![m.reply(Performative::Refuse, m.content.clone())],
            };
            for o in out {
                self.send(o, now);
            }
        }
    }

    fn step_evaluator(&mut self, now: Tick) {
        let incoming: Vec<Message> = self
            .bus
            .inbox(EVALUATOR, now)
            .into_iter()
            .cloned()
            .collect();
        for m in incoming {
            if let Some(state) = self.convs.get(m.conversation) {
                // Phases 11-12: the profile is stored with the conversation.
                let t = advance(state, &m, &self.dir);
                self.convs.update(t.state);
                for o in t.outgoing {
                    self.send(o, now);
                }
            }
        }
    }

    fn step_provider(&mut self, i: usize, now: Tick) {
        let aid = self.providers[i].aid;
        let kind = self.providers[i].kind;
        let incoming: Vec<Message> = self.bus.inbox(aid, now).into_iter().cloned().collect();
        for m in incoming {
            let is_request = m.performative == Performative::Request
                && matches!(&m.content, Predicate::Provide { aid: a, .. } if *a == aid);
            if !is_request || self.user_index(m.sender).is_none() {
                if m.performative != Performative::Refuse && m.performative != Performative::Failure
                {
                    self.send(m.reply(Performative::Refuse, m.content.clone()), now);
                }
                continue;
            }
            if kind.is_panel() {
                let reply = match self.dir.panel_answer(kind, m.sender) {
                    Some(p) => m.reply(Performative::Inform, p),
                    None => m.reply(Performative::Failure, m.content.clone()),
                };
                self.send(reply, now);
                continue;
            }
            if self.providers[i].enqueue(m.sender, now).is_ok() {
                self.waiting.insert((aid, m.sender), now);
                self.event(now, m.sender, EventKind::QueueJoined(aid));
            }
        }
    }

    fn step_user(&mut self, i: usize, now: Tick) {
        let aid = self.users[i].aid;
        let incoming: Vec<Message> = self.bus.inbox(aid, now).into_iter().cloned().collect();
        for m in &incoming {
            let (out, events) = self.users[i].receive(m, &mut self.convs, &self.dir);
            for o in out {
                self.send(o, now);
            }
            for e in events {
                self.event(now, aid, e);
            }
        }
        let ctx = StepContext {
            map: self.map,
            tick: now,
            participants: self.participants,
            provider_at: &self.provider_at,
            behaviour: &self.behaviour,
        };
        let out = self.users[i].bdi_step(&ctx, &mut self.convs, &mut self.rng);
        for m in out.messages {
            self.send(m, now);
        }
        for e in out.events {
            self.event(now, aid, e);
        }
        let pos = self.users[i].position;
        self.dir.set_position(aid, pos);
        match self.users[i].status {
            Status::Exited => self.logs[i].exit = Some(now),
            Status::Failed(_) => {
                self.logs[i].failed = true;
                self.logs[i].exit = Some(now);
                self.leave_queues(aid, now);
            }
            _ => {}
        }
    }

    fn tick_providers(&mut self, now: Tick) {
        for pi in 0..self.providers.len() {
            let kind = self.providers[pi].kind;
            if kind.is_panel() {
                continue;
            }
            let aid = self.providers[pi].aid;
            let times = self.params.times;
            let first_user = self.first_user;
            let users = &self.users;
            let rng = &mut self.rng;
            let done = self.providers[pi].tick(now, |a| {
                let profile = &users[(a.0 - first_user) as usize].profile;
                service_time(kind, profile, &times, rng)
            });
            if let Some(current) = self.providers[pi].current() {
                self.waiting.remove(&(aid, current));
            }
            if let Some(user) = done {
                self.complete(aid, kind, user, now);
            }
        }
    }

    fn complete(&mut self, provider: AgentId, kind: ZoneKind, user: AgentId, now: Tick) {
        let Some(i) = self.user_index(user) else {
            return;
        };
        let events = self.users[i].served(provider, kind);
        for e in events {
            self.event(now, user, e);
        }
        if let ZoneKind::Shop(t) = kind {
            let w = self.users[i]
                .profile
                .shopping_interest
                .get(t.0 as usize)
                .copied()
                .unwrap_or(0.0);
            self.logs[i].purchases.push((t, w));
        }
        // Phase 10: report the profile once the service is done.
        if let Some(service) = AirportDirectory::service_of(kind) {
            if let Some(id) = self.users[i].conversation_for(&service.name) {
                if let Some(state) = self.convs.get(id) {
                    let t = finish_service(state, &self.users[i].profile);
                    self.convs.update(t.state);
                    for o in t.outgoing {
                        self.send(o, now);
                    }
                }
            }
        }
        self.users[i].settle(self.map);
        if self.users[i].status == Status::Boarded {
            self.logs[i].exit = Some(now);
        }
    }

    fn leave_queues(&mut self, user: AgentId, now: Tick) {
        for p in &mut self.providers {
            if p.remove(user, now) {
                self.waiting.remove(&(p.aid, user));
            }
        }
    }

    fn bookkeeping(&mut self, now: Tick) {
        for (provider, user) in self.waiting.keys() {
            let _ = provider;
            if let Some(i) = self.user_index(*user) {
                self.logs[i].queue_wait += 1;
            }
        }
        for i in 0..self.users.len() {
            let u = &self.users[i];
            if !u.is_active() || self.arrivals[i] > now {
                continue;
            }
            if u.deadline.is_some_and(|d| now >= d) {
                let aid = u.aid;
                self.users[i].status = Status::MissedFlight;
                self.logs[i].missed_flight = true;
                self.logs[i].exit = Some(now);
                self.leave_queues(aid, now);
                self.event(now, aid, EventKind::MissedFlight);
            }
        }
        let mut point = SeriesPoint {
            tick: now,
            nonami: 0.0,
            ami: 0.0,
        };
        for (i, log) in self.logs.iter().enumerate() {
            if self.arrivals[i] > now {
                continue;
            }
            let s = satisfaction(log, &self.params.weights);
            if log.ami {
                point.ami += s;
            } else {
                point.nonami += s;
            }
        }
        self.series.push(point);
        for (aid, lengths) in &mut self.queue_lengths {
            let p = &self.providers[(aid.0 - FIRST_PROVIDER) as usize];
            lengths.push(p.queue_len() as u32);
        }
    }

    fn live(&self) -> usize {
        self.users.iter().filter(|u| u.is_active()).count()
    }

    fn tick(&mut self, now: Tick) {
        self.step_ami_service(FACILITATOR, now);
        self.step_ami_service(POSITIONING, now);
        self.step_evaluator(now);
        for i in 0..self.providers.len() {
            self.step_provider(i, now);
        }
        for i in 0..self.users.len() {
            if self.users[i].is_active() && self.arrivals[i] <= now {
                if self.arrivals[i] == now {
                    let (aid, pos) = (self.users[i].aid, self.users[i].position);
                    self.event(now, aid, EventKind::Spawned(pos));
                }
                self.step_user(i, now);
            }
        }
        self.tick_providers(now);
        self.bookkeeping(now);
        self.bus.prune(now + 1);
    }
}

/// Runs one simulation to completion (or to the tick cap).
pub fn run(params: &SetupParameters) -> Result<RunResult, EngineError> {
    params.validate()?;
    let map = build_layout(params)?;
    Ok(run_on(params, &map))
}

/// Runs on a prebuilt map; `params` supplies everything but the layout.
pub fn run_on(params: &SetupParameters, map: &AirportMap) -> RunResult {
    run_with_agents(params, map).0
}

/// Like [`run_on`], also returning the final state of every user.
pub fn run_with_agents(params: &SetupParameters, map: &AirportMap) -> (RunResult, Vec<UserAgent>) {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let pop = spawn_population(params, map, &mut rng);
    let dir = AirportDirectory::new(map, &pop);
    let first_user = FIRST_PROVIDER + pop.providers.len() as u32;

    let mut agents: BTreeSet<AgentId> = [FACILITATOR, POSITIONING].into_iter().collect();
    if params.evaluator {
        agents.insert(EVALUATOR);
    }
    agents.extend(pop.providers.iter().map(|p| p.aid));
    agents.extend(pop.users.iter().map(|u| u.aid));

    let logs = pop
        .users
        .iter()
        .zip(&pop.arrivals)
        .map(|(u, a)| MetricLog::new(u.aid, u.direction, u.ami, *a))
        .collect();
    let queue_lengths = pop
        .providers
        .iter()
        .filter(|p| !p.kind.is_panel())
        .map(|p| (p.aid, Vec::new()))
        .collect();
    let mut engine = Engine {
        params,
        map,
        dir,
        provider_at: pop.providers.iter().map(|p| (p.position, p.aid)).collect(),
        providers: pop.providers,
        users: pop.users,
        arrivals: pop.arrivals,
        logs,
        first_user,
        bus: MessageBus::new(agents),
        convs: Conversations::default(),
        rng,
        behaviour: Behaviour {
            safety_margin: params.safety_margin,
            times: params.times,
            shop_memory: params.shop_memory,
        },
        participants: Participants {
            user: FACILITATOR,
            facilitator: FACILITATOR,
            positioning: POSITIONING,
            evaluator: params.evaluator.then_some(EVALUATOR),
        },
        facilitator_backlog: VecDeque::new(),
        positioning_backlog: VecDeque::new(),
        waiting: HashMap::new(),
        events: Vec::new(),
        series: Vec::new(),
        queue_lengths,
    };

    let cap = params.tick_cap();
    let mut clock = SimClock::default();
    while engine.live() > 0 && clock.now() < cap {
        engine.tick(clock.now());
        clock.advance();
    }
    let truncated = engine.live() > 0;
    let spawned = engine.users.len();
    let mut result = RunResult {
        seed: params.seed,
        total_satisfaction: 0.0,
        total_satisfaction_ami: 0.0,
        average_time: 0.0,
        average_time_ami: 0.0,
        series: std::mem::take(&mut engine.series),
        trace: std::mem::take(&mut engine.bus).into_trace(),
        logs: std::mem::take(&mut engine.logs),
        events: std::mem::take(&mut engine.events),
        queue_lengths: std::mem::take(&mut engine.queue_lengths),
        ticks: clock.now(),
        truncated,
        spawned,
        terminated: 0,
    };
    result.summarize(&params.weights);
    (result, engine.users)
}
