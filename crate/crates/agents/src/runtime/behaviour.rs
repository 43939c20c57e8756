//! Behaviour scheduling. An agent owns a list of behaviours and runs them
//! round-robin on its single thread of control, so no two behaviours of one
//! agent ever execute at the same time.

use std::collections::HashMap;
use std::time::Duration;

use icn_core::acl::{AclMessage, Aid};
use thiserror::Error;

use super::mailbox::MessageTemplate;
use super::{Endpoint, Platform, Receipt};

/// What a behaviour sees while it runs.
pub struct Context<'a, S> {
    endpoint: &'a Endpoint,
    now_ms: i64,
    added: Vec<Box<dyn Behaviour<S>>>,
    stop: bool,
}

impl<'a, S> Context<'a, S> {
    pub(crate) fn new(endpoint: &'a Endpoint, now_ms: i64) -> Self {
        Context {
            endpoint,
            now_ms,
            added: Vec::new(),
            stop: false,
        }
    }

    pub fn aid(&self) -> &Aid {
        self.endpoint.aid()
    }

    pub fn now_ms(&self) -> i64 {
        self.now_ms
    }

    pub fn platform(&self) -> &Platform {
        self.endpoint.platform()
    }

    /// Sends and returns one receipt per receiver. Invalid envelopes are
    /// logged and produce no receipts.
    pub fn send(&self, msg: AclMessage) -> Vec<Receipt> {
        match self.endpoint.send(msg) {
            Ok(r) => r,
            Err(e) => {
                log::error!("{}: dropping invalid message: {e}", self.aid());
                Vec::new()
            }
        }
    }

    pub fn receive(&self, template: &MessageTemplate) -> Option<AclMessage> {
        self.endpoint.take(template)
    }

    pub fn new_conversation_id(&self) -> String {
        self.endpoint.new_conversation_id()
    }

    pub fn add_behaviour(&mut self, b: impl Behaviour<S> + 'static) {
        self.added.push(Box::new(b));
    }

    /// Terminates the agent after the current round.
    pub fn stop(&mut self) {
        self.stop = true;
    }

    pub(crate) fn finish(self) -> (Vec<Box<dyn Behaviour<S>>>, bool) {
        (self.added, self.stop)
    }
}

pub trait Behaviour<S>: Send {
    /// Runs one step if the behaviour is ready. Returns true if it did work.
    fn step(&mut self, state: &mut S, ctx: &mut Context<'_, S>) -> bool;

    fn done(&self) -> bool;

    /// Earliest time (epoch ms) at which the behaviour wants to run again
    /// without any new mail.
    fn deadline(&self) -> Option<i64> {
        None
    }
}

type OnceAction<S> = Box<dyn FnOnce(&mut S, &mut Context<'_, S>) + Send>;

/// Runs exactly once, on the first round after it is added.
pub struct OneShot<S> {
    f: Option<OnceAction<S>>,
}

impl<S> OneShot<S> {
    pub fn new(f: impl FnOnce(&mut S, &mut Context<'_, S>) + Send + 'static) -> Self {
        OneShot {
            f: Some(Box::new(f)),
        }
    }
}

impl<S> Behaviour<S> for OneShot<S> {
    fn step(&mut self, state: &mut S, ctx: &mut Context<'_, S>) -> bool {
        match self.f.take() {
            Some(f) => {
                f(state, ctx);
                true
            }
            None => false,
        }
    }

    fn done(&self) -> bool {
        self.f.is_none()
    }
}

/// Runs once at or after an absolute time.
pub struct Waker<S> {
    at_ms: i64,
    f: Option<OnceAction<S>>,
}

impl<S> Waker<S> {
    pub fn at(at_ms: i64, f: impl FnOnce(&mut S, &mut Context<'_, S>) + Send + 'static) -> Self {
        Waker {
            at_ms,
            f: Some(Box::new(f)),
        }
    }
}

impl<S> Behaviour<S> for Waker<S> {
    fn step(&mut self, state: &mut S, ctx: &mut Context<'_, S>) -> bool {
        if ctx.now_ms() < self.at_ms {
            return false;
        }
        match self.f.take() {
            Some(f) => {
                f(state, ctx);
                true
            }
            None => false,
        }
    }

    fn done(&self) -> bool {
        self.f.is_none()
    }

    fn deadline(&self) -> Option<i64> {
        self.f.as_ref().map(|_| self.at_ms)
    }
}

/// Runs every `period` until cancelled through its handle or by returning
/// `false`. The first run happens on the first round after it is added
/// (plus any start delay). A run that falls more than one period behind is
/// rescheduled from the current time rather than replayed.
pub struct Periodic<S> {
    period_ms: i64,
    delay_ms: i64,
    next_ms: Option<i64>,
    f: Box<dyn FnMut(&mut S, &mut Context<'_, S>) -> bool + Send>,
    finished: bool,
}

impl<S> Periodic<S> {
    pub fn new(period: Duration, mut f: impl FnMut(&mut S, &mut Context<'_, S>) + Send + 'static) -> Self {
        Periodic::until(period, move |s, c| {
            f(s, c);
            true
        })
    }

    /// `f` returns whether to keep running.
    pub fn until(
        period: Duration,
        f: impl FnMut(&mut S, &mut Context<'_, S>) -> bool + Send + 'static,
    ) -> Self {
        Periodic {
            period_ms: (period.as_millis() as i64).max(1),
            delay_ms: 0,
            next_ms: None,
            f: Box::new(f),
            finished: false,
        }
    }

    pub fn starting_after(mut self, delay: Duration) -> Self {
        self.delay_ms = delay.as_millis() as i64;
        self
    }
}

impl<S> Behaviour<S> for Periodic<S> {
    fn step(&mut self, state: &mut S, ctx: &mut Context<'_, S>) -> bool {
        let now = ctx.now_ms();
        let due = *self.next_ms.get_or_insert(now + self.delay_ms);
        if self.finished || now < due {
            return false;
        }
        self.finished = !(self.f)(state, ctx);
        let mut next = due + self.period_ms;
        if next <= now {
            next = now + self.period_ms;
        }
        self.next_ms = Some(next);
        true
    }

    fn done(&self) -> bool {
        self.finished
    }

    fn deadline(&self) -> Option<i64> {
        if self.finished {
            None
        } else {
            self.next_ms
        }
    }
}

/// Runs on every round until the agent stops. `f` returns whether it did
/// any work, which is how drivers detect that an agent is idle.
pub struct Cyclic<S> {
    f: Box<dyn FnMut(&mut S, &mut Context<'_, S>) -> bool + Send>,
}

impl<S> Cyclic<S> {
    pub fn new(f: impl FnMut(&mut S, &mut Context<'_, S>) -> bool + Send + 'static) -> Self {
        Cyclic { f: Box::new(f) }
    }
}

impl<S> Behaviour<S> for Cyclic<S> {
    fn step(&mut self, state: &mut S, ctx: &mut Context<'_, S>) -> bool {
        (self.f)(state, ctx)
    }

    fn done(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FsmError {
    #[error("state `{0}` declared twice")]
    DuplicateState(&'static str),
    #[error("unknown state `{0}`")]
    UnknownState(&'static str),
    #[error("no initial state")]
    NoInitial,
    #[error("non-terminal state `{0}` has no default transition")]
    DeadEnd(&'static str),
}

type StateAction<S, D> = Box<dyn FnMut(&mut S, &mut D, &mut Context<'_, S>) -> i32 + Send>;

struct FsmState<S, D> {
    name: &'static str,
    action: StateAction<S, D>,
    terminal: bool,
    transitions: HashMap<i32, usize>,
    default: Option<usize>,
}

/// Finite state machine whose states are one-shot actions. Each round runs
/// the current state's action once; the integer it returns selects the
/// transition (falling back to the state's default). The machine finishes
/// after running a terminal state.
pub struct Fsm<S, D> {
    data: D,
    states: Vec<FsmState<S, D>>,
    current: usize,
    finished: bool,
}

impl<S, D> Fsm<S, D> {
    pub fn builder(data: D) -> FsmBuilder<S, D> {
        FsmBuilder {
            data,
            states: Vec::new(),
            edges: Vec::new(),
            defaults: Vec::new(),
            initial: None,
        }
    }

    pub fn current_state(&self) -> &'static str {
        self.states[self.current].name
    }

    pub fn data(&self) -> &D {
        &self.data
    }
}

impl<S, D: Send> Behaviour<S> for Fsm<S, D> {
    fn step(&mut self, state: &mut S, ctx: &mut Context<'_, S>) -> bool {
        if self.finished {
            return false;
        }
        let cur = &mut self.states[self.current];
        let event = (cur.action)(state, &mut self.data, ctx);
        if cur.terminal {
            self.finished = true;
        } else {
            self.current = cur
                .transitions
                .get(&event)
                .copied()
                .or(cur.default)
                .expect("builder guarantees a default transition");
        }
        true
    }

    fn done(&self) -> bool {
        self.finished
    }
}

pub struct FsmBuilder<S, D> {
    data: D,
    states: Vec<FsmState<S, D>>,
    edges: Vec<(&'static str, i32, &'static str)>,
    defaults: Vec<(&'static str, &'static str)>,
    initial: Option<&'static str>,
}

impl<S, D> FsmBuilder<S, D> {
    fn add(
        mut self,
        name: &'static str,
        terminal: bool,
        f: impl FnMut(&mut S, &mut D, &mut Context<'_, S>) -> i32 + Send + 'static,
    ) -> Self {
        self.states.push(FsmState {
            name,
            action: Box::new(f),
            terminal,
            transitions: HashMap::new(),
            default: None,
        });
        self
    }

    pub fn state(
        self,
        name: &'static str,
        f: impl FnMut(&mut S, &mut D, &mut Context<'_, S>) -> i32 + Send + 'static,
    ) -> Self {
        self.add(name, false, f)
    }

    pub fn terminal(
        self,
        name: &'static str,
        mut f: impl FnMut(&mut S, &mut D, &mut Context<'_, S>) + Send + 'static,
    ) -> Self {
        self.add(name, true, move |s, d, c| {
            f(s, d, c);
            0
        })
    }

    pub fn initial(mut self, name: &'static str) -> Self {
        self.initial = Some(name);
        self
    }

    pub fn transition(mut self, from: &'static str, event: i32, to: &'static str) -> Self {
        self.edges.push((from, event, to));
        self
    }

    pub fn default_transition(mut self, from: &'static str, to: &'static str) -> Self {
        self.defaults.push((from, to));
        self
    }

    pub fn build(mut self) -> Result<Fsm<S, D>, FsmError> {
        let mut index = HashMap::new();
        for (i, s) in self.states.iter().enumerate() {
            if index.insert(s.name, i).is_some() {
                return Err(FsmError::DuplicateState(s.name));
            }
        }
        let find = |n: &'static str| index.get(n).copied().ok_or(FsmError::UnknownState(n));
        for &(from, event, to) in &self.edges {
            let (f, t) = (find(from)?, find(to)?);
            self.states[f].transitions.insert(event, t);
        }
        for &(from, to) in &self.defaults {
            let (f, t) = (find(from)?, find(to)?);
            self.states[f].default = Some(t);
        }
        for s in &self.states {
            if !s.terminal && s.default.is_none() {
                return Err(FsmError::DeadEnd(s.name));
            }
        }
        let current = find(self.initial.ok_or(FsmError::NoInitial)?)?;
        Ok(Fsm {
            data: self.data,
            states: self.states,
            current,
            finished: false,
        })
    }
}
