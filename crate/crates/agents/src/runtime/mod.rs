//! A small agent platform: named agents with mailboxes, behaviour
//! scheduling, a directory facilitator and newline-delimited JSON over TCP
//! between platforms.

pub mod behaviour;
pub mod clock;
pub mod df;
pub mod driver;
pub mod mailbox;
mod transport;

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};
use std::time::Duration;

use icn_core::acl::{AclMessage, Aid, AidError, EnvelopeError, Performative};
use icn_core::ontology::{Content, ControlProcess, Predicate};
use icn_core::sl::encode_sl;
use thiserror::Error;

pub use behaviour::{Behaviour, Context, Cyclic, Fsm, FsmBuilder, FsmError, OneShot, Periodic, Waker};
pub use clock::Clock;
pub use df::{DfError, DfTemplate, DirectoryFacilitator, ServiceDescription, PROCESS_CONTROL};
pub use driver::{SimDriver, ThreadedDriver};
pub use mailbox::{Mailbox, MessageTemplate};

use transport::Transport;

/// Local name of the directory facilitator; reserved on every platform.
pub const DF_NAME: &str = "df";

pub const DEFAULT_RECEIVE_TIMEOUT: Duration = Duration::from_secs(1);

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error("agent name `{0}` is already in use on this platform")]
    DuplicateName(String),
    #[error(transparent)]
    InvalidName(#[from] AidError),
    #[error("cannot listen on {addr}: {source}")]
    Listen {
        addr: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Delivery {
    Delivered,
    UnknownReceiver,
    Transport { retries: u32, error: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Receipt {
    pub receiver: Aid,
    pub delivery: Delivery,
}

impl Receipt {
    pub fn delivered(&self) -> bool {
        self.delivery == Delivery::Delivered
    }
}

struct PlatformInner {
    name: String,
    clock: Clock,
    agents: RwLock<HashMap<String, Arc<Mailbox>>>,
    df: DirectoryFacilitator,
    transport: Transport,
    address: RwLock<Option<String>>,
    delivered: AtomicU64,
}

/// Handle to one agent platform. Cheap to clone and safe to share.
#[derive(Clone)]
pub struct Platform {
    inner: Arc<PlatformInner>,
}

impl std::fmt::Debug for Platform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Platform").field("name", &self.inner.name).finish_non_exhaustive()
    }
}

impl Platform {
    pub fn new(name: &str, clock: Clock) -> Result<Platform, RuntimeError> {
        Aid::local(DF_NAME, name)?;
        Ok(Platform {
            inner: Arc::new(PlatformInner {
                name: name.to_string(),
                clock,
                agents: RwLock::new(HashMap::new()),
                df: DirectoryFacilitator::new(),
                transport: Transport::default(),
                address: RwLock::new(None),
                delivered: AtomicU64::new(0),
            }),
        })
    }

    pub fn name(&self) -> &str {
        &self.inner.name
    }

    pub fn clock(&self) -> &Clock {
        &self.inner.clock
    }

    pub fn now_ms(&self) -> i64 {
        self.inner.clock.now_ms()
    }

    /// Transport address advertised in new AIDs, once listening.
    pub fn address(&self) -> Option<String> {
        self.inner.address.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn df_aid(&self) -> Aid {
        let aid = Aid::local(DF_NAME, &self.inner.name).expect("validated platform name");
        match self.address() {
            Some(a) => aid.with_address(a),
            None => aid,
        }
    }

    /// Registers a mailbox under `name` and returns its endpoint.
    pub fn register(&self, name: &str) -> Result<Endpoint, RuntimeError> {
        let mut aid = Aid::local(name, &self.inner.name)?;
        if let Some(a) = self.address() {
            aid = aid.with_address(a);
        }
        let mailbox = Arc::new(Mailbox::new());
        {
            let mut agents = self.inner.agents.write().unwrap_or_else(|e| e.into_inner());
            if name == DF_NAME || agents.contains_key(name) {
                return Err(RuntimeError::DuplicateName(name.to_string()));
            }
            agents.insert(name.to_string(), mailbox.clone());
        }
        Ok(Endpoint {
            aid,
            platform: self.clone(),
            mailbox,
            conversations: AtomicU64::new(0),
        })
    }

    /// Creates an agent with its initial behaviours; hand it to a driver to run.
    pub fn spawn_agent<S: Send + 'static>(
        &self,
        name: &str,
        state: S,
        behaviours: Vec<Box<dyn Behaviour<S>>>,
    ) -> Result<AgentHost<S>, RuntimeError> {
        let endpoint = self.register(name)?;
        Ok(AgentHost {
            endpoint,
            state,
            behaviours,
            stopped: false,
        })
    }

    fn deregister(&self, name: &str) {
        self.inner
            .agents
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .remove(name);
    }

    pub fn is_local(&self, aid: &Aid) -> bool {
        aid.platform() == self.inner.name
    }

    /// True if `aid` names a live agent on this platform.
    pub fn resolve(&self, aid: &Aid) -> bool {
        self.is_local(aid) && self.mailbox(aid.local_name()).is_some()
    }

    fn mailbox(&self, local: &str) -> Option<Arc<Mailbox>> {
        self.inner
            .agents
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(local)
            .cloned()
    }

    /// Delivers to every receiver. Local receivers are enqueued directly;
    /// remote ones get one copy per platform over TCP.
    pub fn send(&self, msg: AclMessage) -> Result<Vec<Receipt>, EnvelopeError> {
        msg.validate()?;
        let mut receipts = Vec::with_capacity(msg.receivers.len());
        let mut remote: BTreeMap<String, Vec<Aid>> = BTreeMap::new();
        for r in &msg.receivers {
            if self.is_local(r) {
                receipts.push(Receipt {
                    receiver: r.clone(),
                    delivery: self.deliver_local(&msg, r),
                });
            } else {
                remote.entry(r.platform().to_string()).or_default().push(r.clone());
            }
        }
        if !remote.is_empty() {
            let line = msg.to_json_line();
            for (platform, receivers) in remote {
                let delivery = match receivers.iter().find_map(|r| r.addresses.first()) {
                    Some(addr) => self.inner.transport.send(&platform, addr, &line),
                    None => Delivery::UnknownReceiver,
                };
                if delivery == Delivery::Delivered {
                    self.inner.delivered.fetch_add(receivers.len() as u64, Ordering::Relaxed);
                }
                receipts.extend(receivers.into_iter().map(|receiver| Receipt {
                    receiver,
                    delivery: delivery.clone(),
                }));
            }
        }
        Ok(receipts)
    }

    fn deliver_local(&self, msg: &AclMessage, receiver: &Aid) -> Delivery {
        match self.mailbox(receiver.local_name()) {
            Some(mb) => {
                mb.push(msg.clone());
                self.inner.delivered.fetch_add(1, Ordering::Relaxed);
                Delivery::Delivered
            }
            None => Delivery::UnknownReceiver,
        }
    }

    /// Called by the TCP listener for each incoming envelope.
    fn deliver_incoming(&self, msg: AclMessage) {
        for r in msg.receivers.iter().filter(|r| self.is_local(r)) {
            if self.deliver_local(&msg, r) != Delivery::Delivered {
                log::warn!("{}: no local agent {} for incoming message", self.name(), r);
            }
        }
    }

    /// Number of per-receiver deliveries so far.
    pub fn messages_delivered(&self) -> u64 {
        self.inner.delivered.load(Ordering::Relaxed)
    }

    /// Accepts envelopes from other platforms. Agents registered afterwards
    /// advertise `http://<addr>/acc` in their AID.
    pub fn listen(&self, addr: &str) -> Result<SocketAddr, RuntimeError> {
        let bound = transport::listen(addr, Arc::downgrade(&self.inner)).map_err(|source| {
            RuntimeError::Listen {
                addr: addr.to_string(),
                source,
            }
        })?;
        *self.inner.address.write().unwrap_or_else(|e| e.into_inner()) =
            Some(format!("http://{bound}/acc"));
        Ok(bound)
    }

    pub fn df(&self) -> &DirectoryFacilitator {
        &self.inner.df
    }

    /// Registers a service and sends one INFORM to each matching DF
    /// subscriber. The notification names the service as a control process;
    /// the subscriber looks the full description up with [`Platform::df_search`].
    pub fn df_register(&self, sd: ServiceDescription) -> Result<(), DfError> {
        let service_name = sd.service_name.clone();
        let notifications = self.inner.df.register(sd)?;
        if notifications.is_empty() {
            return Ok(());
        }
        let content = encode_sl(&Content::predicate(Predicate::IsControlProcess(ControlProcess {
            name: service_name,
            variables: Vec::new(),
        })));
        let content = match content {
            Ok(c) => c,
            Err(e) => {
                log::error!("cannot encode DF notification: {e}");
                return Ok(());
            }
        };
        for n in notifications {
            let msg = AclMessage::new(Performative::Inform, self.df_aid())
                .to(n.subscriber)
                .with_content(content.clone())
                .with_conversation(df_conversation(n.subscription));
            if let Err(e) = self.send(msg) {
                log::error!("DF notification not sent: {e}");
            }
        }
        Ok(())
    }

    pub fn df_deregister(&self, provider: &Aid, service_name: &str) -> bool {
        self.inner.df.deregister(provider, service_name)
    }

    pub fn df_search(&self, template: &DfTemplate) -> Vec<ServiceDescription> {
        self.inner.df.search(template)
    }

    pub fn df_subscribe(&self, subscriber: Aid, template: DfTemplate) -> u64 {
        self.inner.df.subscribe(subscriber, template)
    }

    pub fn df_cancel(&self, subscription: u64) -> bool {
        self.inner.df.cancel(subscription)
    }
}

/// Conversation id carried by notifications for a DF subscription.
pub fn df_conversation(subscription: u64) -> String {
    format!("df-subscription-{subscription}")
}

/// A registered name with its mailbox. Dropping it removes the agent from
/// the platform, after which sends to it fail with `UnknownReceiver`.
pub struct Endpoint {
    aid: Aid,
    platform: Platform,
    mailbox: Arc<Mailbox>,
    conversations: AtomicU64,
}

impl std::fmt::Debug for Endpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Endpoint").field("aid", &self.aid).finish_non_exhaustive()
    }
}

impl Endpoint {
    pub fn aid(&self) -> &Aid {
        &self.aid
    }

    pub fn platform(&self) -> &Platform {
        &self.platform
    }

    pub fn mailbox(&self) -> &Arc<Mailbox> {
        &self.mailbox
    }

    pub fn send(&self, msg: AclMessage) -> Result<Vec<Receipt>, EnvelopeError> {
        self.platform.send(msg)
    }

    pub fn take(&self, template: &MessageTemplate) -> Option<AclMessage> {
        self.mailbox.take(template)
    }

    pub fn receive(&self, template: &MessageTemplate, timeout: Duration) -> Option<AclMessage> {
        self.mailbox.receive(template, timeout)
    }

    /// `<local>-<n>`, unique per agent and deterministic.
    pub fn new_conversation_id(&self) -> String {
        let n = self.conversations.fetch_add(1, Ordering::Relaxed) + 1;
        format!("{}-{n}", self.aid.local_name())
    }
}

impl Drop for Endpoint {
    fn drop(&mut self) {
        self.platform.deregister(self.aid.local_name());
    }
}

/// An agent: endpoint, private state and behaviours.
pub struct AgentHost<S> {
    endpoint: Endpoint,
    state: S,
    behaviours: Vec<Box<dyn Behaviour<S>>>,
    stopped: bool,
}

impl<S: Send + 'static> AgentHost<S> {
    pub fn aid(&self) -> &Aid {
        self.endpoint.aid()
    }

    pub fn endpoint(&self) -> &Endpoint {
        &self.endpoint
    }

    pub fn state(&self) -> &S {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut S {
        &mut self.state
    }

    pub fn add_behaviour(&mut self, b: impl Behaviour<S> + 'static) {
        self.behaviours.push(Box::new(b));
    }

    /// Runs every behaviour once in order. Behaviours added during the round
    /// first run in the next one. Returns true if anything did work.
    pub fn step(&mut self, now_ms: i64) -> bool {
        if self.stopped {
            return false;
        }
        let mut ctx = Context::new(&self.endpoint, now_ms);
        let mut worked = false;
        for b in self.behaviours.iter_mut() {
            worked |= b.step(&mut self.state, &mut ctx);
        }
        let (added, stop) = ctx.finish();
        self.behaviours.retain(|b| !b.done());
        worked |= !added.is_empty();
        self.behaviours.extend(added);
        if stop {
            self.stopped = true;
            worked = true;
        }
        worked
    }

    pub fn deadline(&self) -> Option<i64> {
        self.behaviours.iter().filter_map(|b| b.deadline()).min()
    }

    pub fn is_stopped(&self) -> bool {
        self.stopped
    }

    pub fn into_state(self) -> S {
        self.state
    }
}

/// Type-erased agent as seen by drivers.
pub trait Runnable: Send {
    fn aid(&self) -> &Aid;
    fn step(&mut self, now_ms: i64) -> bool;
    fn deadline(&self) -> Option<i64>;
    fn mailbox(&self) -> Arc<Mailbox>;
    fn is_stopped(&self) -> bool;
}

impl<S: Send + 'static> Runnable for AgentHost<S> {
    fn aid(&self) -> &Aid {
        AgentHost::aid(self)
    }

    fn step(&mut self, now_ms: i64) -> bool {
        AgentHost::step(self, now_ms)
    }

    fn deadline(&self) -> Option<i64> {
        AgentHost::deadline(self)
    }

    fn mailbox(&self) -> Arc<Mailbox> {
        self.endpoint.mailbox.clone()
    }

    fn is_stopped(&self) -> bool {
        self.stopped
    }
}
