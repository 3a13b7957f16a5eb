//! Provider side: FIFO queues with a single server and profile-dependent
//! service times.

use std::collections::VecDeque;

use rand::Rng;
use thiserror::Error;

use crate::messaging::Tick;
use crate::ontology::{AgentId, Position, Profile};
use crate::world::ZoneKind;

/// Service-time constants, in ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ServiceTimes {
    pub checkin_base: u32,
    pub passport_base: u32,
    pub shop_base: u32,
    pub belt_base: u32,
    pub gate_base: u32,
    pub per_suitcase: u32,
    pub danger_factor: u32,
    pub noise_max: u32,
}

impl Default for ServiceTimes {
    fn default() -> Self {
        Self {
            checkin_base: 3,
            passport_base: 3,
            shop_base: 3,
            belt_base: 3,
            gate_base: 3,
            per_suitcase: 2,
            danger_factor: 5,
            noise_max: 2,
        }
    }
}

impl ServiceTimes {
    /// Mean shop visit length, used by agents to estimate their schedule.
    pub fn expected_shop(&self) -> f64 {
        self.shop_base as f64 + self.noise_max as f64 / 2.0
    }
}

/// Ticks needed to serve `profile` at a provider of `kind`. Information
/// panels answer instantly and draw nothing; every other kind draws one
/// uniform noise term in `0..=noise_max`.
pub fn service_time<R: Rng + ?Sized>(
    kind: ZoneKind,
    profile: &Profile,
    times: &ServiceTimes,
    rng: &mut R,
) -> u32 {
    let fixed = match kind {
        ZoneKind::CheckinCounter => times.checkin_base + times.per_suitcase * profile.suitcases,
        ZoneKind::PassportControl => {
            times.passport_base + (profile.danger * times.danger_factor as f64).round() as u32
        }
        ZoneKind::Shop(_) => times.shop_base,
        ZoneKind::BaggageBelt => times.belt_base + times.per_suitcase * profile.suitcases,
        ZoneKind::BoardingGate => times.gate_base,
        _ => return 0,
    };
    fixed + rng.gen_range(0..=times.noise_max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueueEvent {
    Enqueued {
        agent: AgentId,
        tick: Tick,
    },
    Started {
        agent: AgentId,
        tick: Tick,
        duration: u32,
    },
    Completed {
        agent: AgentId,
        tick: Tick,
    },
    /// Taken out of the queue (or out of service) without completing.
    Removed {
        agent: AgentId,
        tick: Tick,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueueError {
    #[error("agent {agent} is already queued at provider {provider}")]
    AlreadyQueued { agent: AgentId, provider: AgentId },
}

#[derive(Debug, Clone)]
pub struct ProviderState {
    pub aid: AgentId,
    pub kind: ZoneKind,
    pub position: Position,
    queue: VecDeque<(AgentId, Tick)>,
    busy_until: Option<Tick>,
    current: Option<AgentId>,
    log: Vec<QueueEvent>,
}

impl ProviderState {
    pub fn new(aid: AgentId, kind: ZoneKind, position: Position) -> Self {
        Self {
            aid,
            kind,
            position,
            queue: VecDeque::new(),
            busy_until: None,
            current: None,
            log: Vec::new(),
        }
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    pub fn current(&self) -> Option<AgentId> {
        self.current
    }

    pub fn is_idle(&self) -> bool {
        self.current.is_none()
    }

    pub fn waiting(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.queue.iter().map(|(a, _)| *a)
    }

    pub fn log(&self) -> &[QueueEvent] {
        &self.log
    }

    /// Appends `agent` to the line; returns its 0-based place in it.
    pub fn enqueue(&mut self, agent: AgentId, tick: Tick) -> Result<usize, QueueError> {
        if self.current == Some(agent) || self.queue.iter().any(|(a, _)| *a == agent) {
            return Err(QueueError::AlreadyQueued {
                agent,
                provider: self.aid,
            });
        }
        self.queue.push_back((agent, tick));
        self.log.push(QueueEvent::Enqueued { agent, tick });
        Ok(self.queue.len() - 1)
    }

    /// Releases the customer whose service ends at `now`, then starts the
    /// head of the line if the server is free. `draw` gives the service
    /// length for a customer; at least one tick is always used.
    pub fn tick(&mut self, now: Tick, draw: impl FnOnce(AgentId) -> u32) -> Option<AgentId> {
        let mut done = None;
        if matches!(self.busy_until, Some(until) if until <= now) {
            done = self.current.take();
            self.busy_until = None;
            if let Some(agent) = done {
                self.log.push(QueueEvent::Completed { agent, tick: now });
            }
        }
        if self.current.is_none() {
            if let Some((agent, _)) = self.queue.pop_front() {
                let duration = draw(agent).max(1);
                self.current = Some(agent);
                self.busy_until = Some(now + duration);
                self.log.push(QueueEvent::Started {
                    agent,
                    tick: now,
                    duration,
                });
            }
        }
        done
    }

    /// Drops `agent` from the line or from service.
    pub fn remove(&mut self, agent: AgentId, now: Tick) -> bool {
        let found = if self.current == Some(agent) {
            self.current = None;
            self.busy_until = None;
            true
        } else if let Some(i) = self.queue.iter().position(|(a, _)| *a == agent) {
            self.queue.remove(i);
            true
        } else {
            false
        };
        if found {
            self.log.push(QueueEvent::Removed { agent, tick: now });
        }
        found
    }
}
