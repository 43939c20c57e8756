use std::collections::VecDeque;
use std::sync::{Condvar, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use icn_core::acl::{AclMessage, Aid, Performative};

/// Optional filters over an envelope. The empty template matches everything.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MessageTemplate {
    pub performative: Option<Performative>,
    pub sender: Option<String>,
    pub conversation_id: Option<String>,
    pub ontology: Option<String>,
}

impl MessageTemplate {
    pub fn any() -> Self {
        MessageTemplate::default()
    }

    pub fn performative(p: Performative) -> Self {
        MessageTemplate {
            performative: Some(p),
            ..Default::default()
        }
    }

    pub fn conversation(id: impl Into<String>) -> Self {
        MessageTemplate {
            conversation_id: Some(id.into()),
            ..Default::default()
        }
    }

    pub fn and_performative(mut self, p: Performative) -> Self {
        self.performative = Some(p);
        self
    }

    pub fn and_sender(mut self, sender: &Aid) -> Self {
        self.sender = Some(sender.name.clone());
        self
    }

    pub fn matches(&self, msg: &AclMessage) -> bool {
        self.performative.map_or(true, |p| p == msg.performative)
            && self.sender.as_ref().map_or(true, |s| *s == msg.sender.name)
            && self
                .conversation_id
                .as_ref()
                .map_or(true, |c| *c == msg.conversation_id)
            && self.ontology.as_ref().map_or(true, |o| *o == msg.ontology)
    }
}

/// Unbounded FIFO shared between producers (any thread) and the owning agent.
#[derive(Debug, Default)]
pub struct Mailbox {
    queue: Mutex<VecDeque<AclMessage>>,
    ready: Condvar,
}

impl Mailbox {
    pub fn new() -> Self {
        Mailbox::default()
    }

    fn lock(&self) -> MutexGuard<'_, VecDeque<AclMessage>> {
        self.queue.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn push(&self, msg: AclMessage) {
        self.lock().push_back(msg);
        self.ready.notify_all();
    }

    /// Wakes a waiting owner without delivering anything.
    pub fn notify(&self) {
        let _guard = self.lock();
        self.ready.notify_all();
    }

    pub fn len(&self) -> usize {
        self.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.lock().is_empty()
    }

    /// Removes and returns the oldest message matching `template`.
    pub fn take(&self, template: &MessageTemplate) -> Option<AclMessage> {
        let mut q = self.lock();
        let i = q.iter().position(|m| template.matches(m))?;
        q.remove(i)
    }

    /// Like [`Mailbox::take`] but waits up to `timeout` for a match.
    pub fn receive(&self, template: &MessageTemplate, timeout: Duration) -> Option<AclMessage> {
        let deadline = Instant::now() + timeout;
        let mut q = self.lock();
        loop {
            if let Some(i) = q.iter().position(|m| template.matches(m)) {
                return q.remove(i);
            }
            let now = Instant::now();
            if now >= deadline {
                return None;
            }
            q = self
                .ready
                .wait_timeout(q, deadline - now)
                .unwrap_or_else(|e| e.into_inner())
                .0;
        }
    }

    /// Blocks until something is pushed or notified, or `timeout` passes.
    /// Returns immediately if mail is already waiting.
    pub fn wait(&self, timeout: Duration) {
        let q = self.lock();
        if !q.is_empty() {
            return;
        }
        let _ = self.ready.wait_timeout(q, timeout);
    }
}
