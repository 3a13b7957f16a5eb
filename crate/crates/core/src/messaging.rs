//! Performative message envelope, one-tick delivery bus and message trace.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, Write};

use crate::ontology::{render_content, AgentId, Predicate};

pub type Tick = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConversationId(pub u32);

impl fmt::Display for ConversationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Performative {
    Inform,
    Request,
    QueryRef,
    Agree,
    Refuse,
    Failure,
}

impl Performative {
    pub fn as_str(self) -> &'static str {
        match self {
            Performative::Inform => "inform",
            Performative::Request => "request",
            Performative::QueryRef => "query-ref",
            Performative::Agree => "agree",
            Performative::Refuse => "refuse",
            Performative::Failure => "failure",
        }
    }
}

impl fmt::Display for Performative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub performative: Performative,
    pub sender: AgentId,
    pub receiver: AgentId,
    pub content: Predicate,
    /// Send tick; overwritten by the bus.
    pub tick: Tick,
    pub conversation: ConversationId,
}

impl Message {
    pub fn new(
        performative: Performative,
        sender: AgentId,
        receiver: AgentId,
        content: Predicate,
        conversation: ConversationId,
    ) -> Self {
        debug_assert_ne!(sender, receiver, "agents do not message themselves");
        Self {
            performative,
            sender,
            receiver,
            content,
            tick: 0,
            conversation,
        }
    }

    /// Reply to this message with the sender and receiver swapped.
    pub fn reply(&self, performative: Performative, content: Predicate) -> Self {
        Message::new(
            performative,
            self.receiver,
            self.sender,
            content,
            self.conversation,
        )
    }

    /// `["inform" "sender:0" "receiver:51" "content:" "isProvider (...)"]`
    pub fn to_listing(&self) -> String {
        format!(
            "[\"{}\" \"sender:{}\" \"receiver:{}\" \"content:\" \"{}\"]",
            self.performative,
            self.sender,
            self.receiver,
            render_content(&self.content)
        )
    }
}

/// Ordered log of every message sent during a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MessageTrace {
    messages: Vec<Message>,
}

impl MessageTrace {
    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    /// Line-delimited export: tick, conversation, performative, sender,
    /// receiver, rendered content, tab separated.
    pub fn write_lines<W: Write>(&self, mut out: W) -> io::Result<()> {
        for m in &self.messages {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                m.tick,
                m.conversation,
                m.performative,
                m.sender,
                m.receiver,
                render_content(&m.content)
            )?;
        }
        Ok(())
    }
}

/// Delivers every message exactly one tick after it is sent.
#[derive(Debug, Default)]
pub struct MessageBus {
    known: BTreeSet<AgentId>,
    trace: MessageTrace,
    /// (delivery tick, receiver) → indices into the trace, in send order.
    deliveries: BTreeMap<(Tick, AgentId), Vec<usize>>,
}

impl MessageBus {
    pub fn new(agents: impl IntoIterator<Item = AgentId>) -> Self {
        Self {
            known: agents.into_iter().collect(),
            ..Self::default()
        }
    }

    pub fn register(&mut self, aid: AgentId) {
        self.known.insert(aid);
    }

    pub fn knows(&self, aid: AgentId) -> bool {
        self.known.contains(&aid)
    }

    /// Records `m` at tick `now`; it becomes receivable at `now + 1`. A
    /// message to an unknown receiver is still traced and a `failure`
    /// carrying the same content goes back to the sender.
    pub fn send(&mut self, mut m: Message, now: Tick) {
        m.tick = now;
        let receiver = m.receiver;
        let bounce = (!self.known.contains(&receiver)).then(|| {
            let mut f = m.reply(Performative::Failure, m.content.clone());
            f.tick = now;
            f
        });
        self.push(m, now);
        if let Some(f) = bounce {
            self.push(f, now);
        }
    }

    fn push(&mut self, m: Message, now: Tick) {
        let idx = self.trace.messages.len();
        if self.known.contains(&m.receiver) {
            self.deliveries
                .entry((now + 1, m.receiver))
                .or_default()
                .push(idx);
        }
        self.trace.messages.push(m);
    }

    /// Messages addressed to `aid` that are receivable at `tick`, in send
    /// order. Calling it again in the same tick returns the same list.
    pub fn inbox(&self, aid: AgentId, tick: Tick) -> Vec<&Message> {
        self.deliveries
            .get(&(tick, aid))
            .map(|ids| ids.iter().map(|i| &self.trace.messages[*i]).collect())
            .unwrap_or_default()
    }

    /// Drops delivery bookkeeping for ticks before `tick`.
    pub fn prune(&mut self, tick: Tick) {
        self.deliveries = self.deliveries.split_off(&(tick, AgentId(0)));
    }

    pub fn trace(&self) -> &MessageTrace {
        &self.trace
    }

    pub fn into_trace(self) -> MessageTrace {
        self.trace
    }
}
