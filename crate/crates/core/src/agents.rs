//! User agents: plan libraries, beliefs and the per-tick BDI step.
//!
//! A plan is a stack of intentions, each an action paired with the
//! condition that completes it. Plans are written in `add-intention` order,
//! so the last intention added is on top and runs first.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::messaging::{ConversationId, Message, Performative, Tick};
use crate::ontology::{AgentId, Feature, Position, Predicate, Product, Profile, Service, ShopType};
use crate::protocol::{advance, Conversations, Directory, Participants};
use crate::services::ServiceTimes;
use crate::world::{AirportMap, ZoneKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    User,
    Provider,
    Facilitator,
    Positioning,
    Evaluator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    /// Arriving passenger: gate to exit.
    Ingoing,
    /// Departing passenger: entrance to gate.
    Outgoing,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Ingoing => "ingoing",
            Direction::Outgoing => "outgoing",
        })
    }
}

macro_rules! named_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn name(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(format!("unknown {} `{}`", stringify!($name), s)),
                }
            }
        }
    };
}

named_enum!(
    /// Actions used by the four plan libraries.
    Action {
        MoveToOutput => "move-to-output",
        PassControl => "pass-control",
        MoveToControl => "move-to-control",
        Shopping => "shopping",
        MoveToShops => "move-to-shops",
        MoveToInterestingShop => "move-to-interestingshop",
        CollectBaggage => "collect-baggage",
        MoveToBelt => "move-to-belt",
        AskBaggageInfo => "ask-baggage-info",
        MoveToBaggageInfo => "move-to-baggage-info",
        MoveToGate => "move-to-gate",
        QueryGate => "query-gate",
        MoveToGateInfo => "move-to-gate-info",
        RequestCheckin => "request-checkin",
        MoveToCheckin => "move-to-checkin",
        QueryCheckin => "query-checkin",
        MoveToCheckinInfo => "move-to-checkin-info",
    }
);

named_enum!(
    /// Completion conditions paired with the actions.
    Condition {
        InOutput => "in-output",
        PastControl => "past-control",
        InControl => "in-control",
        Shopped => "shopped",
        InShops => "in-shops",
        InInterestingShop => "in-interestingshop",
        BaggageCollected => "baggage-collected",
        InBelt => "in-belt",
        InformedBeltBaggage => "informed-belt-baggage",
        InBaggageInfo => "in-baggage-info",
        InGate => "in-gate",
        InformedGate => "informed-gate",
        InGateInfo => "in-gate-info",
        DoneCheckin => "done-checkin",
        InCheckin => "in-checkin",
        InformedCheckin => "informed-checkin",
        InCheckinInfo => "in-checkin-info",
    }
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Intention {
    pub action: Action,
    pub done_when: Condition,
}

impl fmt::Display for Intention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "add-intention \"{}\" \"{}\"",
            self.action, self.done_when
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IntentionStack {
    /// Bottom first; the last element is executed next.
    items: Vec<Intention>,
}

impl IntentionStack {
    pub fn add_intention(&mut self, action: Action, done_when: Condition) {
        self.items.push(Intention { action, done_when });
    }

    pub fn top(&self) -> Option<&Intention> {
        self.items.last()
    }

    pub fn pop(&mut self) -> Option<Intention> {
        self.items.pop()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Intentions in the order they were added.
    pub fn listing(&self) -> &[Intention] {
        &self.items
    }

    /// Intentions in the order they will run.
    pub fn execution_order(&self) -> Vec<Intention> {
        self.items.iter().rev().copied().collect()
    }

    pub fn contains(&self, action: Action) -> bool {
        self.items.iter().any(|i| i.action == action)
    }
}

/// The plan library for one passenger type.
pub fn plan_for(direction: Direction, ami: bool) -> IntentionStack {
    use Action as A;
    use Condition as C;
    let mut s = IntentionStack::default();
    match (direction, ami) {
        (Direction::Ingoing, false) => {
            s.add_intention(A::MoveToOutput, C::InOutput);
            s.add_intention(A::PassControl, C::PastControl);
            s.add_intention(A::MoveToControl, C::InControl);
            s.add_intention(A::Shopping, C::Shopped);
            s.add_intention(A::MoveToShops, C::InShops);
            s.add_intention(A::CollectBaggage, C::BaggageCollected);
            s.add_intention(A::MoveToBelt, C::InBelt);
            s.add_intention(A::AskBaggageInfo, C::InformedBeltBaggage);
            s.add_intention(A::MoveToBaggageInfo, C::InBaggageInfo);
        }
        (Direction::Ingoing, true) => {
            s.add_intention(A::MoveToOutput, C::InOutput);
            s.add_intention(A::PassControl, C::PastControl);
            s.add_intention(A::MoveToControl, C::InControl);
            s.add_intention(A::Shopping, C::Shopped);
            s.add_intention(A::MoveToInterestingShop, C::InInterestingShop);
            s.add_intention(A::CollectBaggage, C::BaggageCollected);
            s.add_intention(A::MoveToBelt, C::InBelt);
            s.add_intention(A::AskBaggageInfo, C::InformedBeltBaggage);
        }
        (Direction::Outgoing, false) => {
            s.add_intention(A::MoveToGate, C::InGate);
            s.add_intention(A::QueryGate, C::InformedGate);
            s.add_intention(A::MoveToGateInfo, C::InGateInfo);
            s.add_intention(A::Shopping, C::Shopped);
            s.add_intention(A::MoveToShops, C::InShops);
            s.add_intention(A::PassControl, C::PastControl);
            s.add_intention(A::MoveToControl, C::InControl);
            s.add_intention(A::RequestCheckin, C::DoneCheckin);
            s.add_intention(A::MoveToCheckin, C::InCheckin);
            s.add_intention(A::QueryCheckin, C::InformedCheckin);
            s.add_intention(A::MoveToCheckinInfo, C::InCheckinInfo);
        }
        (Direction::Outgoing, true) => {
            s.add_intention(A::MoveToGate, C::InGate);
            s.add_intention(A::QueryGate, C::InformedGate);
            s.add_intention(A::Shopping, C::Shopped);
            s.add_intention(A::MoveToInterestingShop, C::InInterestingShop);
            s.add_intention(A::PassControl, C::PastControl);
            s.add_intention(A::MoveToControl, C::InControl);
            s.add_intention(A::RequestCheckin, C::DoneCheckin);
            s.add_intention(A::MoveToCheckin, C::InCheckin);
            s.add_intention(A::QueryCheckin, C::InformedCheckin);
        }
    }
    s
}

/// Shop type with the highest interest weight, lowest index on ties.
/// `None` when every weight is zero.
pub fn select_interesting_shop(profile: &Profile) -> Option<ShopType> {
    let mut best: Option<(usize, f64)> = None;
    for (i, w) in profile.shopping_interest.iter().enumerate() {
        if *w > 0.0 && best.is_none_or(|(_, b)| *w > b) {
            best = Some((i, *w));
        }
    }
    best.map(|(i, _)| ShopType(i as u8))
}

/// Whether there is time to shop: the slack left after the estimated
/// shopping trip must exceed the safety margin. No deadline, always yes.
pub fn decide_shopping(now: Tick, estimate: u32, deadline: Option<Tick>, margin: u32) -> bool {
    match deadline {
        None => true,
        Some(d) => d as i64 - now as i64 - estimate as i64 > margin as i64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Milestone {
    CheckedIn,
    PassedControl,
    Shopped,
    ShoppingDeclined,
    BaggageCollected,
    Boarded,
    ReachedExit,
}

/// What the agent believes. Only ever grows during a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Beliefs {
    facts: Vec<Predicate>,
    visited: BTreeSet<Position>,
    achieved: BTreeSet<Milestone>,
    /// Provider per service, from `isProvider` facts or from sight.
    providers: BTreeMap<String, (AgentId, Position)>,
}

impl Beliefs {
    pub fn add_fact(&mut self, p: Predicate) {
        if let Predicate::IsProvider {
            aid, site, service, ..
        } = &p
        {
            self.providers
                .insert(service.name.clone(), (*aid, site.position));
        }
        if !self.facts.contains(&p) {
            self.facts.push(p);
        }
    }

    pub fn facts(&self) -> &[Predicate] {
        &self.facts
    }

    pub fn visit(&mut self, p: Position) {
        self.visited.insert(p);
    }

    pub fn visited(&self) -> &BTreeSet<Position> {
        &self.visited
    }

    pub fn achieve(&mut self, m: Milestone) {
        self.achieved.insert(m);
    }

    pub fn has(&self, m: Milestone) -> bool {
        self.achieved.contains(&m)
    }

    pub fn provider(&self, service: &str) -> Option<(AgentId, Position)> {
        self.providers.get(service).copied()
    }

    fn see_provider(&mut self, service: &str, aid: AgentId, at: Position) {
        self.providers.insert(service.to_string(), (aid, at));
    }

    pub fn size(&self) -> usize {
        self.facts.len() + self.visited.len() + self.achieved.len() + self.providers.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Active,
    Boarded,
    Exited,
    MissedFlight,
    Failed(String),
}

impl Status {
    pub fn is_active(&self) -> bool {
        matches!(self, Status::Active)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Activity {
    Idle,
    /// Waiting for an information panel to answer.
    AwaitingPanel,
    /// Request sent; waiting until served.
    Queued {
        provider: AgentId,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    Spawned(Position),
    EnteredZone(ZoneKind),
    LeftZone(ZoneKind),
    QueueJoined(AgentId),
    Served(AgentId),
    Purchased(ShopType),
    ShoppingSkipped,
    DiscoveryFailed(String),
    Boarded,
    Exited,
    MissedFlight,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentEvent {
    pub tick: Tick,
    pub aid: AgentId,
    pub kind: EventKind,
}

impl fmt::Display for AgentEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t", self.tick, self.aid)?;
        match &self.kind {
            EventKind::Spawned(p) => write!(f, "spawned\t{} {}", p.x, p.y),
            EventKind::EnteredZone(k) => write!(f, "enter\t{}", k.label()),
            EventKind::LeftZone(k) => write!(f, "leave\t{}", k.label()),
            EventKind::QueueJoined(p) => write!(f, "queue\t{p}"),
            EventKind::Served(p) => write!(f, "served\t{p}"),
            EventKind::Purchased(t) => write!(f, "purchase\t{t}"),
            EventKind::ShoppingSkipped => write!(f, "skip-shopping\t"),
            EventKind::DiscoveryFailed(s) => write!(f, "discovery-failed\t{s}"),
            EventKind::Boarded => write!(f, "boarded\t"),
            EventKind::Exited => write!(f, "exited\t"),
            EventKind::MissedFlight => write!(f, "missed-flight\t"),
            EventKind::Failed(r) => write!(f, "failed\t{r}"),
        }
    }
}

/// Knobs that shape user behaviour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Behaviour {
    pub safety_margin: u32,
    pub times: ServiceTimes,
    /// Non-AmI shop search skips shops it has already seen.
    pub shop_memory: bool,
}

/// Read-only view of the run handed to each agent step.
pub struct StepContext<'a> {
    pub map: &'a AirportMap,
    pub tick: Tick,
    pub participants: Participants,
    /// Provider agent standing at each staffed cell.
    pub provider_at: &'a BTreeMap<Position, AgentId>,
    pub behaviour: &'a Behaviour,
}

impl StepContext<'_> {
    fn provider(&self, at: Position) -> Option<AgentId> {
        self.provider_at.get(&at).copied()
    }
}

#[derive(Debug, Default)]
pub struct StepOutput {
    pub messages: Vec<Message>,
    pub events: Vec<EventKind>,
}

/// A passenger.
#[derive(Debug, Clone)]
pub struct UserAgent {
    pub aid: AgentId,
    pub direction: Direction,
    pub ami: bool,
    pub profile: Profile,
    pub beliefs: Beliefs,
    pub position: Position,
    pub stack: IntentionStack,
    pub status: Status,
    /// Absolute boarding deadline (outgoing only).
    pub deadline: Option<Tick>,
    activity: Activity,
    /// Discovery conversation per service name.
    conversations: BTreeMap<String, ConversationId>,
    /// Services for which AmI discovery failed; handled the non-AmI way.
    fallback: BTreeSet<String>,
    shop_decided: bool,
    search_target: Option<Position>,
    /// Intentions popped so far, in order.
    pub executed: Vec<Intention>,
}

fn panel_for(service: &str) -> Option<ZoneKind> {
    match service {
        Service::CHECK_IN => Some(ZoneKind::FlightInfoPanel),
        Service::BOARDING => Some(ZoneKind::BoardingInfoPanel),
        Service::BAGGAGE_DELIVERY => Some(ZoneKind::BaggageInfoPanel),
        _ => None,
    }
}

fn panel_service(kind: ZoneKind) -> &'static str {
    match kind {
        ZoneKind::FlightInfoPanel => Service::FLIGHT_INFO,
        ZoneKind::BoardingInfoPanel => Service::BOARDING_INFO,
        _ => Service::BAGGAGE_INFO,
    }
}

impl UserAgent {
    pub fn new(
        aid: AgentId,
        direction: Direction,
        ami: bool,
        profile: Profile,
        position: Position,
        deadline: Option<Tick>,
    ) -> Self {
        let mut beliefs = Beliefs::default();
        beliefs.visit(position);
        Self {
            aid,
            direction,
            ami,
            profile,
            beliefs,
            position,
            stack: plan_for(direction, ami),
            status: Status::Active,
            deadline,
            activity: Activity::Idle,
            conversations: BTreeMap::new(),
            fallback: BTreeSet::new(),
            shop_decided: false,
            search_target: None,
            executed: Vec::new(),
        }
    }

    pub fn is_active(&self) -> bool {
        self.status.is_active()
    }

    pub fn preferred_shop(&self) -> Option<ShopType> {
        select_interesting_shop(&self.profile)
    }

    fn uses_ami(&self, service: &str) -> bool {
        self.ami && !self.fallback.contains(service)
    }

    /// Conversation used for the phase 9 request to `service`, if any.
    pub fn conversation_for(&self, service: &str) -> Option<ConversationId> {
        self.conversations.get(service).copied()
    }

    /// Handles a received message. Returns messages to send right away.
    pub fn receive(
        &mut self,
        m: &Message,
        convs: &mut Conversations,
        dir: &dyn Directory,
    ) -> (Vec<Message>, Vec<EventKind>) {
        let mut out = Vec::new();
        let mut events = Vec::new();
        let service = self
            .conversations
            .iter()
            .find(|(_, c)| **c == m.conversation)
            .map(|(s, _)| s.clone());
        if let (Some(service), Some(state)) = (service, convs.get(m.conversation)) {
            let t = advance(state, m, dir);
            for msg in t.outgoing {
                // The provider request waits until the user stands at the
                // provider; a refusal is still sent.
                if msg.performative != Performative::Request {
                    out.push(msg);
                }
            }
            if t.accepted {
                if let Predicate::IsProvider { .. } = &m.content {
                    if t.state.discovered() {
                        self.beliefs.add_fact(m.content.clone());
                    }
                } else if let Predicate::HasLocation { .. } | Predicate::HasServices { .. } =
                    &m.content
                {
                    self.beliefs.add_fact(m.content.clone());
                }
                if t.state.failed {
                    self.fallback.insert(service.clone());
                    events.push(EventKind::DiscoveryFailed(service));
                }
            }
            convs.update(t.state);
            return (out, events);
        }
        // Answer from an information panel.
        if m.performative == Performative::Inform && self.activity == Activity::AwaitingPanel {
            if let Predicate::IsProvider { .. } = m.content {
                self.beliefs.add_fact(m.content.clone());
                self.activity = Activity::Idle;
            }
        }
        (out, events)
    }

    /// Called by the engine when a provider finishes serving this agent.
    pub fn served(&mut self, provider: AgentId, kind: ZoneKind) -> Vec<EventKind> {
        if self.activity == (Activity::Queued { provider }) {
            self.activity = Activity::Idle;
        }
        let mut events = vec![EventKind::Served(provider)];
        match kind {
            ZoneKind::CheckinCounter => self.beliefs.achieve(Milestone::CheckedIn),
            ZoneKind::PassportControl => self.beliefs.achieve(Milestone::PassedControl),
            ZoneKind::BaggageBelt => self.beliefs.achieve(Milestone::BaggageCollected),
            ZoneKind::BoardingGate => {
                self.beliefs.achieve(Milestone::Boarded);
                events.push(EventKind::Boarded);
            }
            ZoneKind::Shop(t) => {
                self.beliefs.achieve(Milestone::Shopped);
                events.push(EventKind::Purchased(t));
            }
            _ => {}
        }
        events
    }

    pub fn queued_at(&self) -> Option<AgentId> {
        match self.activity {
            Activity::Queued { provider } => Some(provider),
            _ => None,
        }
    }

    fn holds(&self, cond: Condition, map: &AirportMap) -> bool {
        use Condition as C;
        let here = map.kind(self.position);
        let at_provider = |service: &str| {
            self.beliefs
                .provider(service)
                .is_some_and(|(_, p)| p == self.position)
        };
        let shop_done = self.beliefs.has(Milestone::ShoppingDeclined);
        match cond {
            C::InCheckinInfo => here == ZoneKind::FlightInfoPanel,
            C::InformedCheckin => self.beliefs.provider(Service::CHECK_IN).is_some(),
            C::InCheckin => at_provider(Service::CHECK_IN),
            C::DoneCheckin => self.beliefs.has(Milestone::CheckedIn),
            C::InControl => at_provider(Service::PASSPORT_CONTROL),
            C::PastControl => self.beliefs.has(Milestone::PassedControl),
            C::InShops | C::InInterestingShop => {
                shop_done || (self.preferred_shop().map(ZoneKind::Shop) == Some(here))
            }
            C::Shopped => shop_done || self.beliefs.has(Milestone::Shopped),
            C::InGateInfo => here == ZoneKind::BoardingInfoPanel,
            C::InformedGate => self.beliefs.provider(Service::BOARDING).is_some(),
            C::InGate => self.beliefs.has(Milestone::Boarded),
            C::InBaggageInfo => here == ZoneKind::BaggageInfoPanel,
            C::InformedBeltBaggage => self.beliefs.provider(Service::BAGGAGE_DELIVERY).is_some(),
            C::InBelt => at_provider(Service::BAGGAGE_DELIVERY),
            C::BaggageCollected => self.beliefs.has(Milestone::BaggageCollected),
            C::InOutput => here == ZoneKind::Exit,
        }
    }

    fn pop_satisfied(&mut self, map: &AirportMap) {
        while let Some(top) = self.stack.top().copied() {
            if !self.holds(top.done_when, map) {
                break;
            }
            self.stack.pop();
            self.executed.push(top);
        }
    }

    /// One reasoning cycle: drop completed intentions, then perform one
    /// unit of the top intention (one cell of movement, one message, or one
    /// tick of waiting).
    pub fn bdi_step<R: Rng + ?Sized>(
        &mut self,
        ctx: &StepContext<'_>,
        convs: &mut Conversations,
        rng: &mut R,
    ) -> StepOutput {
        let mut out = StepOutput::default();
        if !self.is_active() {
            return out;
        }
        self.pop_satisfied(ctx.map);
        if let Some(top) = self.stack.top().copied() {
            if let Err(reason) = self.execute(top.action, ctx, convs, rng, &mut out) {
                self.status = Status::Failed(reason.clone());
                out.events.push(EventKind::Failed(reason));
                return out;
            }
        }
        out.events.extend(self.settle(ctx.map));
        out
    }

    /// Drops completed intentions; an empty stack ends the trip.
    pub fn settle(&mut self, map: &AirportMap) -> Option<EventKind> {
        self.pop_satisfied(map);
        if !self.stack.is_empty() || !self.is_active() {
            return None;
        }
        match self.direction {
            Direction::Outgoing => {
                self.status = Status::Boarded;
                None
            }
            Direction::Ingoing => {
                self.status = Status::Exited;
                self.beliefs.achieve(Milestone::ReachedExit);
                Some(EventKind::Exited)
            }
        }
    }

    fn execute<R: Rng + ?Sized>(
        &mut self,
        action: Action,
        ctx: &StepContext<'_>,
        convs: &mut Conversations,
        rng: &mut R,
        out: &mut StepOutput,
    ) -> Result<(), String> {
        use Action as A;
        match action {
            A::MoveToCheckinInfo => self.walk_to_nearest(ZoneKind::FlightInfoPanel, ctx, out),
            A::MoveToGateInfo => self.walk_to_nearest(ZoneKind::BoardingInfoPanel, ctx, out),
            A::MoveToBaggageInfo => self.walk_to_nearest(ZoneKind::BaggageInfoPanel, ctx, out),
            A::QueryCheckin => self.learn_provider(Service::check_in(), ctx, convs, out),
            A::QueryGate => self.learn_provider(Service::boarding(), ctx, convs, out),
            A::AskBaggageInfo => self.learn_provider(Service::baggage_delivery(), ctx, convs, out),
            A::MoveToCheckin => self.walk_to_provider(Service::CHECK_IN, ctx, out),
            A::MoveToBelt => self.walk_to_provider(Service::BAGGAGE_DELIVERY, ctx, out),
            A::RequestCheckin => self.request_service(Service::CHECK_IN, ctx, convs, out),
            A::CollectBaggage => self.request_service(Service::BAGGAGE_DELIVERY, ctx, convs, out),
            A::PassControl => self.request_service(Service::PASSPORT_CONTROL, ctx, convs, out),
            A::MoveToControl => {
                let service = Service::passport_control();
                if self.beliefs.provider(&service.name).is_none() {
                    if self.uses_ami(&service.name) {
                        return self.discover(service, ctx, convs, out);
                    }
                    let target = ctx
                        .map
                        .nearest(self.position, ZoneKind::PassportControl)
                        .ok_or("no reachable passport control")?;
                    let aid = ctx.provider(target).ok_or("unstaffed passport control")?;
                    self.beliefs.see_provider(&service.name, aid, target);
                }
                self.walk_to_provider(&service.name, ctx, out)
            }
            A::MoveToShops | A::MoveToInterestingShop => self.go_shopping(ctx, convs, rng, out),
            A::Shopping => {
                if self.beliefs.has(Milestone::ShoppingDeclined) {
                    return Ok(());
                }
                let kind = self.preferred_shop().map(ZoneKind::Shop);
                if kind != Some(ctx.map.kind(self.position)) {
                    return Err("shopping away from a matching shop".into());
                }
                let service = Service::shopping(self.preferred_shop().expect("checked above"));
                let aid = ctx.provider(self.position).ok_or("unstaffed shop")?;
                self.beliefs.see_provider(&service.name, aid, self.position);
                self.request_service(&service.name, ctx, convs, out)
            }
            A::MoveToGate => {
                if self.beliefs.has(Milestone::Boarded) {
                    return Ok(());
                }
                let (_, gate) = self
                    .beliefs
                    .provider(Service::BOARDING)
                    .ok_or("gate unknown")?;
                if self.position != gate {
                    return self.walk_to_provider(Service::BOARDING, ctx, out);
                }
                self.request_service(Service::BOARDING, ctx, convs, out)
            }
            A::MoveToOutput => {
                let exit = ctx
                    .map
                    .nearest(self.position, ZoneKind::Exit)
                    .ok_or("no reachable exit")?;
                self.walk_toward(exit, ctx, out)
            }
        }
    }

    fn walk_toward(
        &mut self,
        target: Position,
        ctx: &StepContext<'_>,
        out: &mut StepOutput,
    ) -> Result<(), String> {
        if self.position == target {
            return Ok(());
        }
        let next = ctx
            .map
            .step_toward(self.position, target)
            .ok_or_else(|| format!("no path from {} to {}", self.position, target))?;
        let from_kind = ctx.map.kind(self.position);
        let to_kind = ctx.map.kind(next);
        if from_kind != ZoneKind::Open {
            out.events.push(EventKind::LeftZone(from_kind));
        }
        if to_kind != ZoneKind::Open {
            out.events.push(EventKind::EnteredZone(to_kind));
        }
        self.position = next;
        self.beliefs.visit(next);
        Ok(())
    }

    fn walk_to_nearest(
        &mut self,
        kind: ZoneKind,
        ctx: &StepContext<'_>,
        out: &mut StepOutput,
    ) -> Result<(), String> {
        let target = ctx
            .map
            .nearest(self.position, kind)
            .ok_or_else(|| format!("no reachable {}", kind.label()))?;
        self.walk_toward(target, ctx, out)
    }

    fn walk_to_provider(
        &mut self,
        service: &str,
        ctx: &StepContext<'_>,
        out: &mut StepOutput,
    ) -> Result<(), String> {
        let (_, at) = self
            .beliefs
            .provider(service)
            .ok_or_else(|| format!("{service} provider unknown"))?;
        self.walk_toward(at, ctx, out)
    }

    fn participants(&self, ctx: &StepContext<'_>) -> Participants {
        Participants {
            user: self.aid,
            ..ctx.participants
        }
    }

    fn product_for(&self, service: &str) -> Product {
        let mut characteristics = Vec::new();
        match service {
            Service::CHECK_IN | Service::BAGGAGE_DELIVERY => {
                characteristics.push(Feature::new("Baggage-Number", self.profile.suitcases));
                characteristics.push(Feature::new("Flight-Number", &self.profile.flight));
            }
            Service::PASSPORT_CONTROL => {
                characteristics.push(Feature::new("Danger-Perception", self.profile.danger));
            }
            Service::BOARDING => {
                characteristics.push(Feature::new("Flight-Number", &self.profile.flight));
            }
            _ => {
                if let Some(t) = Service::named(service).shop_type() {
                    let w = self.profile.shopping_interest[t.0 as usize];
                    characteristics.push(Feature::new("Interest", w));
                }
            }
        }
        Product {
            name: service.to_string(),
            characteristics,
        }
    }

    /// Opens (or waits on) an AmI discovery conversation for `service`.
    fn discover(
        &mut self,
        service: Service,
        ctx: &StepContext<'_>,
        convs: &mut Conversations,
        out: &mut StepOutput,
    ) -> Result<(), String> {
        if self.conversations.contains_key(&service.name) {
            // Waiting for the conversation to progress.
            return Ok(());
        }
        let product = self.product_for(&service.name);
        let name = service.name.clone();
        let (id, first) = convs.open(self.participants(ctx), service, product);
        self.conversations.insert(name, id);
        out.messages.push(first);
        Ok(())
    }

    /// Finds out which provider serves `service` for this agent: AmI agents
    /// ask the facilitator, the others read the information panel.
    fn learn_provider(
        &mut self,
        service: Service,
        ctx: &StepContext<'_>,
        convs: &mut Conversations,
        out: &mut StepOutput,
    ) -> Result<(), String> {
        if self.uses_ami(&service.name) {
            return self.discover(service, ctx, convs, out);
        }
        let panel = panel_for(&service.name).ok_or("no panel for service")?;
        if ctx.map.kind(self.position) != panel {
            return self.walk_to_nearest(panel, ctx, out);
        }
        if self.activity == Activity::AwaitingPanel {
            return Ok(());
        }
        let aid = ctx.provider(self.position).ok_or("unstaffed panel")?;
        let product = Product {
            name: panel_service(panel).to_string(),
            characteristics: vec![Feature::new("Flight-Number", &self.profile.flight)],
        };
        let id = convs.allocate();
        out.messages.push(Message::new(
            Performative::Request,
            self.aid,
            aid,
            Predicate::Provide { product, aid },
            id,
        ));
        self.activity = Activity::AwaitingPanel;
        Ok(())
    }

    /// At the provider's cell: sends the provider request once and waits.
    fn request_service(
        &mut self,
        service: &str,
        ctx: &StepContext<'_>,
        convs: &mut Conversations,
        out: &mut StepOutput,
    ) -> Result<(), String> {
        if self.activity != Activity::Idle {
            return Ok(());
        }
        let (aid, at) = self
            .beliefs
            .provider(service)
            .ok_or_else(|| format!("{service} provider unknown"))?;
        if at != self.position {
            return self.walk_toward(at, ctx, out);
        }
        let id = match self.conversations.get(service) {
            Some(id) if self.uses_ami(service) => *id,
            _ => convs.allocate(),
        };
        out.messages.push(Message::new(
            Performative::Request,
            self.aid,
            aid,
            Predicate::Provide {
                product: self.product_for(service),
                aid,
            },
            id,
        ));
        self.activity = Activity::Queued { provider: aid };
        Ok(())
    }

    /// Shortest trip estimate for shopping from here, for the deadline
    /// check. AmI agents know where the shop is; others assume the worst.
    fn shopping_estimate(&self, shop: Option<Position>, ctx: &StepContext<'_>) -> u32 {
        let service = ctx.behaviour.times.expected_shop().ceil() as u32;
        let map = ctx.map;
        match shop {
            Some(shop) => {
                let there = map.distance(self.position, shop).unwrap_or(map.diameter());
                let onward = match self.direction {
                    Direction::Outgoing => match self.beliefs.provider(Service::BOARDING) {
                        Some((_, gate)) => map.distance(shop, gate),
                        None => map
                            .zone(ZoneKind::BoardingGate)
                            .iter()
                            .filter_map(|g| map.distance(shop, *g))
                            .max(),
                    },
                    Direction::Ingoing => map
                        .nearest(shop, ZoneKind::Exit)
                        .and_then(|e| map.distance(shop, e)),
                }
                .unwrap_or(map.diameter());
                there + service + onward
            }
            None => 2 * map.diameter() + service,
        }
    }

    fn decline_shopping(&mut self, out: &mut StepOutput) {
        self.beliefs.achieve(Milestone::ShoppingDeclined);
        out.events.push(EventKind::ShoppingSkipped);
    }

    fn go_shopping<R: Rng + ?Sized>(
        &mut self,
        ctx: &StepContext<'_>,
        convs: &mut Conversations,
        rng: &mut R,
        out: &mut StepOutput,
    ) -> Result<(), String> {
        let Some(kind) = self.preferred_shop() else {
            self.decline_shopping(out);
            return Ok(());
        };
        let service = Service::shopping(kind);
        let margin = ctx.behaviour.safety_margin;

        if self.uses_ami(&service.name) {
            let Some((_, shop)) = self.beliefs.provider(&service.name) else {
                if !self.conversations.contains_key(&service.name)
                    && !decide_shopping(ctx.tick, 0, self.deadline, margin)
                {
                    self.decline_shopping(out);
                    return Ok(());
                }
                return self.discover(service, ctx, convs, out);
            };
            if !self.shop_decided {
                let estimate = self.shopping_estimate(Some(shop), ctx);
                if !decide_shopping(ctx.tick, estimate, self.deadline, margin) {
                    self.decline_shopping(out);
                    return Ok(());
                }
                self.shop_decided = true;
            }
            return self.walk_toward(shop, ctx, out);
        }

        // Without AmI: wander from shop to shop until one matches.
        let shops = ctx.map.shops();
        if !shops.iter().any(|(_, t)| *t == kind) {
            self.decline_shopping(out);
            return Ok(());
        }
        let at_shop = matches!(ctx.map.kind(self.position), ZoneKind::Shop(_));
        let need_leg = match self.search_target {
            None => true,
            Some(t) => t == self.position,
        };
        if need_leg {
            let estimate = self.shopping_estimate(None, ctx);
            if !decide_shopping(ctx.tick, estimate, self.deadline, margin) {
                self.decline_shopping(out);
                return Ok(());
            }
            self.shop_decided = true;
            let candidates: Vec<Position> = shops
                .iter()
                .map(|(p, _)| *p)
                .filter(|p| !(at_shop && *p == self.position))
                .filter(|p| !ctx.behaviour.shop_memory || !self.beliefs.visited().contains(p))
                .collect();
            if candidates.is_empty() {
                self.decline_shopping(out);
                return Ok(());
            }
            let pick = rng.gen_range(0..candidates.len() as u32) as usize;
            self.search_target = Some(candidates[pick]);
        }
        let target = self.search_target.expect("set above");
        self.walk_toward(target, ctx, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(stack: &IntentionStack) -> Vec<&'static str> {
        stack
            .execution_order()
            .iter()
            .map(|i| i.action.name())
            .collect()
    }

    #[test]
    fn ingoing_without_ami_has_nine_intentions() {
        let s = plan_for(Direction::Ingoing, false);
        assert_eq!(s.len(), 9);
        assert_eq!(names(&s).last(), Some(&"move-to-output"));
        assert_eq!(names(&s)[0], "move-to-baggage-info");
    }

    #[test]
    fn ingoing_with_ami_drops_baggage_info_move() {
        let s = plan_for(Direction::Ingoing, true);
        assert_eq!(s.len(), 8);
        assert!(s.contains(Action::MoveToInterestingShop));
        assert!(!s.contains(Action::MoveToBaggageInfo));
        assert!(s.contains(Action::AskBaggageInfo));
    }

    #[test]
    fn outgoing_with_ami_drops_info_screens() {
        let s = plan_for(Direction::Outgoing, true);
        assert_eq!(s.len(), 9);
        assert!(!s.contains(Action::MoveToCheckinInfo));
        assert!(!s.contains(Action::MoveToGateInfo));
        assert_eq!(names(&s)[0], "query-checkin");
        assert_eq!(plan_for(Direction::Outgoing, false).len(), 11);
    }

    #[test]
    fn names_round_trip() {
        for a in Action::ALL {
            assert_eq!(a.name().parse::<Action>().unwrap(), *a);
        }
        for c in Condition::ALL {
            assert_eq!(c.name().parse::<Condition>().unwrap(), *c);
        }
        assert!("fly".parse::<Action>().is_err());
    }

    fn profile(weights: &[f64]) -> Profile {
        Profile {
            name: "p".into(),
            shopping_interest: weights.to_vec(),
            suitcases: 0,
            danger: 0.0,
            flight: "FL-0".into(),
        }
    }

    #[test]
    fn unique_argmax() {
        assert_eq!(
            select_interesting_shop(&profile(&[0.9, 0.1, 0.0])),
            Some(ShopType(0))
        );
        assert_eq!(
            select_interesting_shop(&profile(&[0.1, 0.2, 0.7])),
            Some(ShopType(2))
        );
    }

    #[test]
    fn tie_goes_to_lowest_type() {
        assert_eq!(
            select_interesting_shop(&profile(&[0.5, 0.5])),
            Some(ShopType(0))
        );
    }

    #[test]
    fn zero_interest_selects_nothing() {
        assert_eq!(select_interesting_shop(&profile(&[0.0, 0.0, 0.0])), None);
    }

    #[test]
    fn shopping_decision() {
        // deadline passed
        assert!(!decide_shopping(300, 0, Some(250), 10));
        // generous
        assert!(decide_shopping(0, 20, Some(200), 10));
        // slack exactly equal to the margin is not enough
        assert!(!decide_shopping(100, 40, Some(150), 10));
        assert!(decide_shopping(100, 39, Some(150), 10));
        // no deadline
        assert!(decide_shopping(10_000, 10_000, None, 10));
    }

    #[test]
    fn beliefs_only_grow() {
        let mut b = Beliefs::default();
        let before = b.size();
        b.visit(Position::new(1, 1));
        b.visit(Position::new(1, 1));
        b.achieve(Milestone::CheckedIn);
        assert!(b.size() >= before + 2);
        let s = b.size();
        b.see_provider("X", AgentId(3), Position::new(2, 2));
        b.see_provider("X", AgentId(4), Position::new(3, 2));
        assert!(b.size() > s);
    }
}
