//! Service discovery conversation between a user, the positioning agent,
//! the facilitator, a provider and (optionally) the evaluator.
//!
//! Message flow, one hop per tick:
//!
//! | phase | message                                                    |
//! |-------|------------------------------------------------------------|
//! | 1-2   | user → positioning `query-ref HasContext(location)`         |
//! | 3     | positioning → user `inform HasLocation`                    |
//! | 4     | user → facilitator `query-ref HasServices`                 |
//! | 5     | facilitator → user `inform HasServices`                    |
//! | 6     | user picks the wanted service (no message)                 |
//! | 7     | user → facilitator `query-ref isProvider`                  |
//! | 8     | facilitator → user `inform isProvider`                     |
//! | 9     | user → provider `request Provide`                          |
//! | 10    | user → evaluator `inform HasProfile` (optional)            |
//! | 11-12 | evaluator updates and stores the profile (no message)      |
//!
//! A conversation is a single shared record; `advance` is called with each
//! message as it is received, by whichever party receives it.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::messaging::{ConversationId, Message, Performative};
use crate::ontology::{
    AgentId, Context, Place, Position, Predicate, Product, Profile, Service, Site,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Phase1 = 1,
    Phase2,
    Phase3,
    Phase4,
    Phase5,
    Phase6,
    Phase7,
    Phase8,
    Phase9,
    Phase10,
    Phase11,
    Phase12,
}

impl Phase {
    pub fn number(self) -> u8 {
        self as u8
    }
}

/// Context name of the location query sent to the positioning agent.
pub const LOCATION_QUERY: &str = "location";

/// What the facilitator and positioning agent know about the airport.
pub trait Directory {
    /// Current position of a user, as reported by the positioning system.
    fn locate(&self, user: AgentId) -> Option<Site>;
    /// Services offered in the area around `position`.
    fn services_at(&self, position: Position) -> Vec<Service>;
    /// Provider of `service` for `user`, nearest to `from` by path length,
    /// ties to the lowest agent id.
    fn provider_for(
        &self,
        user: AgentId,
        service: &Service,
        from: Position,
    ) -> Option<(AgentId, Site)>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConversationState {
    pub id: ConversationId,
    /// Next step of the conversation.
    pub phase: Phase,
    pub user: AgentId,
    pub facilitator: AgentId,
    pub positioning: AgentId,
    pub evaluator: Option<AgentId>,
    pub place: Place,
    pub wanted: Service,
    /// Product requested from the provider in phase 9.
    pub product: Product,
    pub user_site: Option<Site>,
    pub chosen_service: Option<Service>,
    pub chosen_provider: Option<AgentId>,
    pub provider_site: Option<Site>,
    pub failed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Participants {
    pub user: AgentId,
    pub facilitator: AgentId,
    pub positioning: AgentId,
    pub evaluator: Option<AgentId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: ConversationState,
    pub outgoing: Vec<Message>,
    /// False when the message was out of phase and refused.
    pub accepted: bool,
}

impl ConversationState {
    /// Opens a conversation: the user asks the positioning agent for its
    /// location.
    pub fn open(
        id: ConversationId,
        who: Participants,
        wanted: Service,
        product: Product,
    ) -> (Self, Message) {
        let state = ConversationState {
            id,
            phase: Phase::Phase2,
            user: who.user,
            facilitator: who.facilitator,
            positioning: who.positioning,
            evaluator: who.evaluator,
            place: Place::airport(),
            wanted,
            product,
            user_site: None,
            chosen_service: None,
            chosen_provider: None,
            provider_site: None,
            failed: false,
        };
        let query = Message::new(
            Performative::QueryRef,
            who.user,
            who.positioning,
            Predicate::HasContext {
                what: Context {
                    name: LOCATION_QUERY.to_string(),
                    characteristics: vec![],
                },
                who: who.user,
            },
            id,
        );
        (state, query)
    }

    /// Ready to send the provider request.
    pub fn discovered(&self) -> bool {
        !self.failed && self.phase >= Phase::Phase9
    }

    /// The phase 9 request, once the provider is known.
    pub fn service_request(&self) -> Option<Message> {
        let provider = self.chosen_provider?;
        (self.phase >= Phase::Phase8).then(|| {
            Message::new(
                Performative::Request,
                self.user,
                provider,
                Predicate::Provide {
                    product: self.product.clone(),
                    aid: provider,
                },
                self.id,
            )
        })
    }
}

fn refuse(state: &ConversationState, incoming: &Message) -> Transition {
    Transition {
        state: state.clone(),
        outgoing: vec![incoming.reply(Performative::Refuse, incoming.content.clone())],
        accepted: false,
    }
}

fn accept(state: ConversationState, outgoing: Vec<Message>) -> Transition {
    Transition {
        state,
        outgoing,
        accepted: true,
    }
}

/// Advances the conversation with a received message.
pub fn advance(state: &ConversationState, incoming: &Message, dir: &dyn Directory) -> Transition {
    if incoming.conversation != state.id {
        return refuse(state, incoming);
    }
    // Failures from the positioning agent or facilitator end discovery.
    if incoming.performative == Performative::Failure
        && incoming.receiver == state.user
        && !state.discovered()
    {
        let mut next = state.clone();
        next.failed = true;
        return accept(next, vec![]);
    }
    if state.failed {
        return refuse(state, incoming);
    }
    let from = (incoming.sender, incoming.receiver);
    match (state.phase, incoming.performative, &incoming.content) {
        (Phase::Phase2, Performative::QueryRef, Predicate::HasContext { what, who })
            if from == (state.user, state.positioning)
                && what.name == LOCATION_QUERY
                && *who == state.user =>
        {
            let mut next = state.clone();
            match dir.locate(state.user) {
                Some(site) => {
                    next.phase = Phase::Phase3;
                    let reply = incoming.reply(
                        Performative::Inform,
                        Predicate::HasLocation {
                            place: state.place.clone(),
                            site,
                            aid: state.user,
                        },
                    );
                    accept(next, vec![reply])
                }
                None => {
                    next.failed = true;
                    let reply = incoming.reply(Performative::Failure, incoming.content.clone());
                    accept(next, vec![reply])
                }
            }
        }
        (Phase::Phase3, Performative::Inform, Predicate::HasLocation { site, aid, place })
            if from == (state.positioning, state.user) && *aid == state.user =>
        {
            let mut next = state.clone();
            next.user_site = Some(site.clone());
            next.phase = Phase::Phase4;
            let query = Message::new(
                Performative::QueryRef,
                state.user,
                state.facilitator,
                Predicate::HasServices {
                    place: place.clone(),
                    site: site.clone(),
                    services: vec![],
                },
                state.id,
            );
            accept(next, vec![query])
        }
        (Phase::Phase4, Performative::QueryRef, Predicate::HasServices { place, site, .. })
            if from == (state.user, state.facilitator) =>
        {
            let mut next = state.clone();
            next.phase = Phase::Phase5;
            let reply = incoming.reply(
                Performative::Inform,
                Predicate::HasServices {
                    place: place.clone(),
                    site: site.clone(),
                    services: dir.services_at(site.position),
                },
            );
            accept(next, vec![reply])
        }
        (
            Phase::Phase5,
            Performative::Inform,
            Predicate::HasServices {
                services,
                place,
                site,
            },
        ) if from == (state.facilitator, state.user) => {
            // Phase 6: pick the wanted service among those on offer.
            let mut next = state.clone();
            if !services.contains(&state.wanted) {
                next.phase = Phase::Phase6;
                next.failed = true;
                return accept(next, vec![]);
            }
            next.chosen_service = Some(state.wanted.clone());
            next.phase = Phase::Phase7;
            let query = Message::new(
                Performative::QueryRef,
                state.user,
                state.facilitator,
                Predicate::IsProvider {
                    place: place.clone(),
                    site: site.clone(),
                    aid: state.user,
                    service: state.wanted.clone(),
                },
                state.id,
            );
            accept(next, vec![query])
        }
        (
            Phase::Phase7,
            Performative::QueryRef,
            Predicate::IsProvider {
                service,
                site,
                place,
                ..
            },
        ) if from == (state.user, state.facilitator) => {
            let mut next = state.clone();
            match dir.provider_for(state.user, service, site.position) {
                Some((provider, provider_site)) => {
                    next.phase = Phase::Phase8;
                    next.chosen_provider = Some(provider);
                    next.provider_site = Some(provider_site.clone());
                    let reply = incoming.reply(
                        Performative::Inform,
                        Predicate::IsProvider {
                            place: place.clone(),
                            site: provider_site,
                            aid: provider,
                            service: service.clone(),
                        },
                    );
                    accept(next, vec![reply])
                }
                None => {
                    next.failed = true;
                    let reply = incoming.reply(Performative::Failure, incoming.content.clone());
                    accept(next, vec![reply])
                }
            }
        }
        (Phase::Phase8, Performative::Inform, Predicate::IsProvider { aid, .. })
            if from == (state.facilitator, state.user) && Some(*aid) == state.chosen_provider =>
        {
            let mut next = state.clone();
            next.phase = Phase::Phase9;
            let request = next
                .service_request()
                .expect("provider is known from phase 8");
            accept(next, vec![request])
        }
        (Phase::Phase10, Performative::Inform, Predicate::HasProfile { aid, .. })
            if Some(incoming.receiver) == state.evaluator
                && incoming.sender == state.user
                && *aid == state.user =>
        {
            // Phases 11 and 12 happen inside the evaluator: the profile is
            // updated and stored by the caller.
            let mut next = state.clone();
            next.phase = Phase::Phase12;
            accept(next, vec![])
        }
        _ => refuse(state, incoming),
    }
}

/// Called once the provider has served the user. With an evaluator
/// configured the user reports its profile (phase 10).
pub fn finish_service(state: &ConversationState, profile: &Profile) -> Transition {
    let mut next = state.clone();
    match (state.phase, state.evaluator) {
        (Phase::Phase9, Some(evaluator)) => {
            next.phase = Phase::Phase10;
            let report = Message::new(
                Performative::Inform,
                state.user,
                evaluator,
                Predicate::HasProfile {
                    profile: profile.clone(),
                    aid: state.user,
                },
                state.id,
            );
            accept(next, vec![report])
        }
        _ => accept(next, vec![]),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiscoveryError {
    #[error("no provider of `{0}` is reachable from the user's location")]
    NoProvider(String),
    #[error("positioning system has no fix for agent {0}")]
    NoLocation(AgentId),
    #[error("conversation stalled in {0:?}")]
    Stalled(Phase),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Discovery {
    pub service: Service,
    pub provider: AgentId,
    pub provider_site: Site,
    /// Ticks from the opening query until the user holds the provider id.
    pub elapsed: u32,
    pub messages: Vec<Message>,
}

/// Runs one discovery conversation in isolation with one-tick message
/// latency and no competing traffic.
pub fn full_discovery(
    dir: &dyn Directory,
    who: Participants,
    wanted: Service,
    product: Product,
) -> Result<Discovery, DiscoveryError> {
    let (mut state, first) = ConversationState::open(ConversationId(0), who, wanted, product);
    let mut log = vec![first.clone()];
    let mut in_flight = vec![first];
    let mut tick = 0;
    while !state.discovered() {
        if state.failed {
            return Err(if state.user_site.is_none() {
                DiscoveryError::NoLocation(who.user)
            } else {
                DiscoveryError::NoProvider(state.wanted.name.clone())
            });
        }
        if in_flight.is_empty() || tick > 12 {
            return Err(DiscoveryError::Stalled(state.phase));
        }
        tick += 1;
        let mut next_flight = Vec::new();
        for m in in_flight.drain(..) {
            let t = advance(&state, &m, dir);
            state = t.state;
            for mut out in t.outgoing {
                out.tick = tick;
                // The phase 9 request is sent by the caller once the user
                // reaches the provider.
                if out.performative != Performative::Request {
                    log.push(out.clone());
                    next_flight.push(out);
                }
            }
        }
        in_flight = next_flight;
    }
    Ok(Discovery {
        service: state.chosen_service.clone().expect("chosen in phase 6"),
        provider: state.chosen_provider.expect("chosen in phase 8"),
        provider_site: state.provider_site.clone().expect("chosen in phase 8"),
        elapsed: tick,
        messages: log,
    })
}

/// All conversations of a run, keyed by id. Ids are handed out in order,
/// including for plain provider requests that never enter discovery.
#[derive(Debug, Clone, Default)]
pub struct Conversations {
    next: u32,
    states: BTreeMap<ConversationId, ConversationState>,
}

impl Conversations {
    pub fn allocate(&mut self) -> ConversationId {
        let id = ConversationId(self.next);
        self.next += 1;
        id
    }

    /// Starts a discovery conversation; returns its id and first message.
    pub fn open(
        &mut self,
        who: Participants,
        wanted: Service,
        product: Product,
    ) -> (ConversationId, Message) {
        let id = self.allocate();
        let (state, first) = ConversationState::open(id, who, wanted, product);
        self.states.insert(id, state);
        (id, first)
    }

    pub fn get(&self, id: ConversationId) -> Option<&ConversationState> {
        self.states.get(&id)
    }

    pub fn update(&mut self, state: ConversationState) {
        self.states.insert(state.id, state);
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ConversationState> {
        self.states.values()
    }
}
