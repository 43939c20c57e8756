//! The operator gateway: an agent that discovers control processes,
//! subscribes to their data and alarms, keeps views and trends, and relays
//! operator setpoints. HTTP and WebSocket clients reach it through a
//! [`GatewayHandle`].

pub mod http;
pub mod trend;

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock, RwLockReadGuard};
use std::time::Duration;

use icn_core::acl::{AclMessage, Aid, Performative};
use icn_core::ontology::{
    AgentAction, Alarm, Content, ContentElement, ControlProcess, Predicate, Variable,
};
use icn_core::setpoint::{PRIORITY_FORWARDED, PRIORITY_REJECTED};
use icn_core::sl::{encode_sl, parse_sl};
use serde::Serialize;
use thiserror::Error;
use tokio::sync::{broadcast, oneshot};

use crate::runtime::{
    AgentHost, Context, Cyclic, DfTemplate, Mailbox, MessageTemplate, OneShot, Periodic, Platform,
    RuntimeError, Waker, PROCESS_CONTROL,
};

pub use trend::{export_csv, TrendSample, TrendStore, DEFAULT_TREND_CAPACITY};

pub const ALARM_LOG_CAPACITY: usize = 1000;
pub const DEFAULT_REDISCOVERY: Duration = Duration::from_secs(10);
pub const DEFAULT_REPLY_TIMEOUT: Duration = Duration::from_secs(2);
const EVENT_BUFFER: usize = 4096;

#[derive(Debug, Clone)]
pub struct GatewayConfig {
    pub name: String,
    pub rediscovery: Duration,
    pub reply_timeout: Duration,
    pub trend_capacity: usize,
    pub journal: Option<PathBuf>,
}

impl GatewayConfig {
    pub fn new(name: impl Into<String>) -> Self {
        GatewayConfig {
            name: name.into(),
            rediscovery: DEFAULT_REDISCOVERY,
            reply_timeout: DEFAULT_REPLY_TIMEOUT,
            trend_capacity: DEFAULT_TREND_CAPACITY,
            journal: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VariableView {
    pub symbol: String,
    pub address_sp: String,
    pub low_limit: f64,
    pub high_limit: f64,
    pub pv: f64,
    pub sp: f64,
    pub last_update: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AlarmEntry {
    pub received_at: i64,
    pub process: String,
    pub symbol: String,
    pub priority: u32,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ProcessView {
    pub name: String,
    pub agent: String,
    /// No snapshot yet, or the agent could not be reached.
    pub stale: bool,
    pub variables: Vec<VariableView>,
    /// Newest first.
    pub alarms: VecDeque<AlarmEntry>,
}

impl ProcessView {
    fn new(name: &str, agent: &Aid) -> Self {
        ProcessView {
            name: name.to_string(),
            agent: agent.name.clone(),
            stale: true,
            variables: Vec::new(),
            alarms: VecDeque::new(),
        }
    }

    pub fn variable(&self, symbol: &str) -> Option<&VariableView> {
        self.variables.iter().find(|v| v.symbol == symbol)
    }

    fn push_alarm(&mut self, entry: AlarmEntry) {
        if self.alarms.len() == ALARM_LOG_CAPACITY {
            self.alarms.pop_back();
        }
        self.alarms.push_front(entry);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DataEvent {
    pub process: String,
    pub t: i64,
    pub variables: Vec<VariableView>,
}

/// Pushed to every stream client.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", content = "payload", rename_all = "lowercase")]
pub enum StreamEvent {
    Data(DataEvent),
    Alarm(AlarmEntry),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum SetpointOutcome {
    Forwarded {
        #[serde(rename = "alarmText")]
        alarm_text: String,
    },
    Rejected {
        #[serde(rename = "alarmText", skip_serializing_if = "Option::is_none")]
        alarm_text: Option<String>,
        reason: String,
    },
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GatewayError {
    #[error("unknown process `{0}`")]
    UnknownProcess(String),
    #[error("process `{process}` has no variable `{symbol}`")]
    UnknownSymbol { process: String, symbol: String },
    #[error("the gateway agent has stopped")]
    Stopped,
}

#[derive(Default)]
pub struct Views {
    processes: BTreeMap<String, ProcessView>,
    trends: Option<TrendStore>,
}

impl Views {
    pub fn processes(&self) -> impl Iterator<Item = &ProcessView> {
        self.processes.values()
    }

    pub fn process(&self, name: &str) -> Option<&ProcessView> {
        self.processes.get(name)
    }

    pub fn trend(&self, key: &str, from: i64, to: i64) -> Vec<TrendSample> {
        self.trends.as_ref().map_or_else(Vec::new, |t| t.query(key, from, to))
    }

    pub fn trend_len(&self, key: &str) -> usize {
        self.trends.as_ref().map_or(0, |t| t.len(key))
    }
}

struct SetpointCommand {
    process: String,
    symbol: String,
    value: f64,
    reply: oneshot::Sender<SetpointOutcome>,
}

/// A setpoint submitted through the handle, waiting for its outcome.
pub struct PendingSetpoint {
    rx: oneshot::Receiver<SetpointOutcome>,
}

impl PendingSetpoint {
    /// Outcome if already decided. Useful under a simulated clock.
    pub fn try_outcome(&mut self) -> Option<SetpointOutcome> {
        self.rx.try_recv().ok()
    }

    /// Blocks the calling thread; must not be used from async code.
    pub fn wait(self) -> Result<SetpointOutcome, GatewayError> {
        self.rx.blocking_recv().map_err(|_| GatewayError::Stopped)
    }

    pub async fn outcome(self) -> Result<SetpointOutcome, GatewayError> {
        self.rx.await.map_err(|_| GatewayError::Stopped)
    }
}

/// Cheap to clone; shared between the agent and any number of clients.
#[derive(Clone)]
pub struct GatewayHandle {
    views: Arc<RwLock<Views>>,
    commands: Arc<Mutex<VecDeque<SetpointCommand>>>,
    mailbox: Arc<Mailbox>,
    events: broadcast::Sender<StreamEvent>,
    reply_timeout: Duration,
}

impl GatewayHandle {
    pub fn views(&self) -> RwLockReadGuard<'_, Views> {
        self.views.read().unwrap_or_else(|e| e.into_inner())
    }

    pub fn subscribe_events(&self) -> broadcast::Receiver<StreamEvent> {
        self.events.subscribe()
    }

    pub fn reply_timeout(&self) -> Duration {
        self.reply_timeout
    }

    /// Queues a setpoint for the agent. Unknown processes or symbols fail
    /// here and nothing is sent.
    pub fn submit_setpoint(&self, process: &str, symbol: &str, value: f64) -> Result<PendingSetpoint, GatewayError> {
        {
            let views = self.views();
            let view = views
                .process(process)
                .ok_or_else(|| GatewayError::UnknownProcess(process.to_string()))?;
            if view.variable(symbol).is_none() {
                return Err(GatewayError::UnknownSymbol {
                    process: process.to_string(),
                    symbol: symbol.to_string(),
                });
            }
        }
        let (tx, rx) = oneshot::channel();
        self.commands.lock().unwrap_or_else(|e| e.into_inner()).push_back(SetpointCommand {
            process: process.to_string(),
            symbol: symbol.to_string(),
            value,
            reply: tx,
        });
        self.mailbox.notify();
        Ok(PendingSetpoint { rx })
    }
}

struct Subscribed {
    agent: Aid,
    conversation: String,
}

struct Pending {
    process: String,
    reply: oneshot::Sender<SetpointOutcome>,
}

pub struct GatewayAgent {
    views: Arc<RwLock<Views>>,
    commands: Arc<Mutex<VecDeque<SetpointCommand>>>,
    events: broadcast::Sender<StreamEvent>,
    reply_timeout: Duration,
    /// process name -> live subscription
    subscribed: HashMap<String, Subscribed>,
    pending: HashMap<String, Pending>,
}

impl GatewayAgent {
    pub fn spawn(platform: &Platform, cfg: &GatewayConfig) -> Result<(AgentHost<GatewayAgent>, GatewayHandle), GatewayStartError> {
        let mut trends = TrendStore::new(cfg.trend_capacity);
        if let Some(path) = &cfg.journal {
            trends = trends.with_journal(path).map_err(GatewayStartError::Journal)?;
        }
        let views = Arc::new(RwLock::new(Views {
            processes: BTreeMap::new(),
            trends: Some(trends),
        }));
        let commands = Arc::new(Mutex::new(VecDeque::new()));
        let (events, _) = broadcast::channel(EVENT_BUFFER);
        let agent = GatewayAgent {
            views: views.clone(),
            commands: commands.clone(),
            events: events.clone(),
            reply_timeout: cfg.reply_timeout,
            subscribed: HashMap::new(),
            pending: HashMap::new(),
        };
        let mut host = platform.spawn_agent(&cfg.name, agent, Vec::new())?;
        host.add_behaviour(OneShot::new(|g: &mut GatewayAgent, ctx| {
            ctx.platform().df_subscribe(ctx.aid().clone(), DfTemplate::service_type(PROCESS_CONTROL));
            g.discover_and_subscribe(ctx);
        }));
        host.add_behaviour(
            Periodic::new(cfg.rediscovery, |g: &mut GatewayAgent, ctx| {
                g.discover_and_subscribe(ctx);
            })
            .starting_after(cfg.rediscovery),
        );
        host.add_behaviour(Cyclic::new(|g: &mut GatewayAgent, ctx| {
            let mut worked = g.drain_commands(ctx);
            if let Some(msg) = ctx.receive(&MessageTemplate::any()) {
                g.on_message(ctx, msg);
                worked = true;
            }
            worked
        }));
        let handle = GatewayHandle {
            views,
            commands,
            mailbox: host.endpoint().mailbox().clone(),
            events,
            reply_timeout: cfg.reply_timeout,
        };
        Ok((host, handle))
    }

    fn write_views(&self) -> std::sync::RwLockWriteGuard<'_, Views> {
        self.views.write().unwrap_or_else(|e| e.into_inner())
    }

    /// Subscribes to every registered control process not yet subscribed.
    /// Returns the names of all known processes.
    pub fn discover_and_subscribe(&mut self, ctx: &mut Context<'_, Self>) -> Vec<String> {
        let found = ctx.platform().df_search(&DfTemplate::service_type(PROCESS_CONTROL));
        for sd in &found {
            let name = &sd.service_name;
            if let Some(s) = self.subscribed.get(name) {
                if s.agent == sd.provider {
                    continue;
                }
            }
            self.subscribe(ctx, name, &sd.provider);
        }
        found.into_iter().map(|sd| sd.service_name).collect()
    }

    fn subscribe(&mut self, ctx: &mut Context<'_, Self>, process: &str, agent: &Aid) {
        self.write_views()
            .processes
            .entry(process.to_string())
            .or_insert_with(|| ProcessView::new(process, agent));
        let content = Content::predicate(Predicate::IsControlProcess(ControlProcess {
            name: process.to_string(),
            variables: Vec::new(),
        }));
        let Ok(text) = encode_sl(&content) else { return };
        let conv = ctx.new_conversation_id();
        let msg = AclMessage::new(Performative::Subscribe, ctx.aid().clone())
            .to(agent.clone())
            .with_content(text)
            .with_conversation(conv.clone())
            .with_reply_with(conv.clone());
        if ctx.send(msg).iter().all(|r| r.delivered()) {
            self.subscribed.insert(
                process.to_string(),
                Subscribed {
                    agent: agent.clone(),
                    conversation: conv,
                },
            );
        } else {
            log::warn!("cannot reach {agent} for {process}; will retry");
            self.subscribed.remove(process);
            if let Some(v) = self.write_views().processes.get_mut(process) {
                v.stale = true;
            }
        }
    }

    fn process_of(&self, msg: &AclMessage) -> Option<String> {
        self.subscribed
            .iter()
            .find(|(_, s)| s.conversation == msg.conversation_id)
            .or_else(|| self.subscribed.iter().find(|(_, s)| s.agent.name == msg.sender.name))
            .map(|(name, _)| name.clone())
    }

    fn drain_commands(&mut self, ctx: &mut Context<'_, Self>) -> bool {
        let batch: Vec<SetpointCommand> = {
            let mut q = self.commands.lock().unwrap_or_else(|e| e.into_inner());
            q.drain(..).collect()
        };
        let worked = !batch.is_empty();
        for cmd in batch {
            self.send_setpoint(ctx, cmd);
        }
        worked
    }

    fn send_setpoint(&mut self, ctx: &mut Context<'_, Self>, cmd: SetpointCommand) {
        let address = {
            let views = self.views.read().unwrap_or_else(|e| e.into_inner());
            views
                .process(&cmd.process)
                .and_then(|p| p.variable(&cmd.symbol))
                .map(|v| v.address_sp.clone())
        };
        let (Some(address), Some(sub)) = (address, self.subscribed.get(&cmd.process)) else {
            let _ = cmd.reply.send(SetpointOutcome::Rejected {
                alarm_text: None,
                reason: format!("{}/{} is not available", cmd.process, cmd.symbol),
            });
            return;
        };
        let content = Content(vec![ContentElement::Action {
            actor: sub.agent.clone(),
            action: AgentAction::SetVariable {
                variable_address: address,
                value: cmd.value,
            },
        }]);
        let Ok(text) = encode_sl(&content) else {
            let _ = cmd.reply.send(SetpointOutcome::Rejected {
                alarm_text: None,
                reason: format!("value {} cannot be encoded", cmd.value),
            });
            return;
        };
        let conv = ctx.new_conversation_id();
        let msg = AclMessage::new(Performative::Request, ctx.aid().clone())
            .to(sub.agent.clone())
            .with_content(text)
            .with_conversation(conv.clone())
            .with_reply_with(conv.clone());
        if !ctx.send(msg).iter().all(|r| r.delivered()) {
            let _ = cmd.reply.send(SetpointOutcome::Rejected {
                alarm_text: None,
                reason: format!("control agent for {} is unreachable", cmd.process),
            });
            return;
        }
        self.pending.insert(
            conv.clone(),
            Pending {
                process: cmd.process,
                reply: cmd.reply,
            },
        );
        let deadline = ctx.now_ms() + self.reply_timeout.as_millis() as i64;
        ctx.add_behaviour(Waker::at(deadline, move |g: &mut GatewayAgent, _| {
            if let Some(p) = g.pending.remove(&conv) {
                let _ = p.reply.send(SetpointOutcome::Timeout);
            }
        }));
    }

    fn on_message(&mut self, ctx: &mut Context<'_, Self>, msg: AclMessage) {
        if msg.sender.name == ctx.platform().df_aid().name {
            // a control process (re)registered
            self.discover_and_subscribe(ctx);
            return;
        }
        match msg.performative {
            Performative::Inform => self.on_inform(ctx, &msg),
            Performative::Agree => {}
            Performative::Refuse | Performative::Failure | Performative::NotUnderstood => {
                if let Some(p) = self.pending.remove(&msg.conversation_id) {
                    let _ = p.reply.send(SetpointOutcome::Rejected {
                        alarm_text: None,
                        reason: format!("{}: {}", msg.performative, msg.content),
                    });
                } else if let Some(process) = self.process_of(&msg) {
                    log::warn!("{process}: subscription answered with {}", msg.performative);
                    self.subscribed.remove(&process);
                }
            }
            _ => log::debug!("ignoring {} from {}", msg.performative, msg.sender),
        }
    }

    fn on_inform(&mut self, ctx: &mut Context<'_, Self>, msg: &AclMessage) {
        let content = match parse_sl(&msg.content) {
            Ok(c) => c,
            Err(e) => {
                log::warn!("unparseable INFORM from {}: {e}", msg.sender);
                return;
            }
        };
        let now = ctx.now_ms();
        match content.first_predicate() {
            Some(Predicate::ListOfVariables(vars)) => {
                if let Some(process) = self.process_of(msg) {
                    self.on_process_data(&process, vars, now);
                }
            }
            Some(Predicate::ListOfAlarms(alarms)) => {
                let pending = self.pending.remove(&msg.conversation_id);
                let process = pending
                    .as_ref()
                    .map(|p| p.process.clone())
                    .or_else(|| self.process_of(msg));
                if let Some(process) = &process {
                    self.on_alarm(process, alarms, now);
                }
                if let Some(p) = pending {
                    let _ = p.reply.send(outcome_from_alarms(alarms));
                }
            }
            _ => log::debug!("ignoring INFORM from {}: {}", msg.sender, msg.content),
        }
    }

    /// Applies a data INFORM to the view and the trends.
    pub fn on_process_data(&mut self, process: &str, vars: &[Variable], now: i64) {
        if vars.is_empty() {
            return;
        }
        let mut changed = Vec::new();
        {
            let mut guard = self.write_views();
            let Views { processes, trends } = &mut *guard;
            let Some(view) = processes.get_mut(process) else { return };
            view.stale = false;
            for v in vars {
                let row = match view.variables.iter_mut().find(|r| r.symbol == v.symbol) {
                    Some(row) => row,
                    None => {
                        view.variables.push(VariableView {
                            symbol: v.symbol.clone(),
                            address_sp: v.address_sp.clone(),
                            low_limit: v.low_limit,
                            high_limit: v.high_limit,
                            pv: v.pv,
                            sp: v.sp,
                            last_update: now,
                        });
                        view.variables.last_mut().expect("just pushed")
                    }
                };
                row.address_sp = v.address_sp.clone();
                row.low_limit = v.low_limit;
                row.high_limit = v.high_limit;
                row.pv = v.pv;
                row.sp = v.sp;
                let sample = trends
                    .get_or_insert_with(TrendStore::default)
                    .append(process, &v.symbol, now, v.pv, v.sp);
                row.last_update = sample.t;
                changed.push(row.clone());
            }
        }
        let _ = self.events.send(StreamEvent::Data(DataEvent {
            process: process.to_string(),
            t: now,
            variables: changed,
        }));
    }

    pub fn on_alarm(&mut self, process: &str, alarms: &[Alarm], now: i64) {
        for a in alarms {
            let entry = AlarmEntry {
                received_at: now,
                process: process.to_string(),
                symbol: a.var.symbol.clone(),
                priority: a.priority,
                text: a.text.clone(),
            };
            if let Some(view) = self.write_views().processes.get_mut(process) {
                view.push_alarm(entry.clone());
            }
            let _ = self.events.send(StreamEvent::Alarm(entry));
        }
    }

    pub fn flush_journal(&mut self) {
        if let Some(t) = &mut self.write_views().trends {
            t.flush();
        }
    }
}

fn outcome_from_alarms(alarms: &[Alarm]) -> SetpointOutcome {
    match alarms.first() {
        Some(a) if a.priority == PRIORITY_FORWARDED => SetpointOutcome::Forwarded {
            alarm_text: a.text.clone(),
        },
        Some(a) if a.priority == PRIORITY_REJECTED => SetpointOutcome::Rejected {
            alarm_text: Some(a.text.clone()),
            reason: "out of range".into(),
        },
        Some(a) => SetpointOutcome::Rejected {
            alarm_text: Some(a.text.clone()),
            reason: format!("unexpected alarm priority {}", a.priority),
        },
        None => SetpointOutcome::Rejected {
            alarm_text: None,
            reason: "empty reply".into(),
        },
    }
}

#[derive(Debug, Error)]
pub enum GatewayStartError {
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error("cannot open trend journal: {0}")]
    Journal(std::io::Error),
}
