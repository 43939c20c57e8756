//! Control agent: one per PLC. Publishes data changes to subscribers,
//! validates operator setpoints, and drives dependent setpoints from
//! interpolation links, both inside its own process and across processes.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use icn_core::acl::{AclMessage, Aid, Performative};
use icn_core::alarm_text::from_epoch_millis;
use icn_core::interp::{DependencyLink, Field};
use icn_core::ontology::{
    AgentAction, Content, ContentElement, ControlProcess, Predicate, Variable, VariableRef,
};
use icn_core::plc::{CellKey, ItemAddress, OpcGroup, PlcSimulator};
use icn_core::scenario::ProcessConfig;
use icn_core::setpoint::{self, Verdict};
use icn_core::sl::{encode_sl, parse_sl};

use crate::runtime::{
    AgentHost, Context, Cyclic, DfError, DfTemplate, Fsm, MessageTemplate, OneShot, Periodic,
    Platform, RuntimeError, ServiceDescription, PROCESS_CONTROL,
};

/// Consecutive failed deliveries after which a subscriber is dropped.
pub const MAX_DELIVERY_FAILURES: u32 = 3;

#[derive(Debug, Clone)]
pub struct ControlConfig {
    pub process: ProcessConfig,
    /// Every link in the network; the agent keeps those targeting its process.
    pub links: Vec<DependencyLink>,
    pub poll_period: Duration,
    pub deadband: f64,
}

/// Counters readable while the agent runs.
#[derive(Debug, Default)]
pub struct ControlStats {
    pub setpoints_applied: AtomicU64,
    pub setpoints_rejected: AtomicU64,
    pub refused: AtomicU64,
    pub not_understood: AtomicU64,
    pub alarms_sent: AtomicU64,
    pub sp_writes: AtomicU64,
    /// Writes refused by the range guard; stays zero unless a bug slips past
    /// validation.
    pub blocked_writes: AtomicU64,
}

impl ControlStats {
    fn bump(counter: &AtomicU64) {
        counter.fetch_add(1, Ordering::Relaxed);
    }

    pub fn get(counter: &AtomicU64) -> u64 {
        counter.load(Ordering::Relaxed)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubscriptionKind {
    OperatorFull,
    CrossVariables(Vec<String>),
}

impl SubscriptionKind {
    fn same_kind(&self, other: &SubscriptionKind) -> bool {
        std::mem::discriminant(self) == std::mem::discriminant(other)
    }
}

#[derive(Debug, Clone)]
pub struct Subscription {
    pub subscriber: Aid,
    pub kind: SubscriptionKind,
    pub conversation_id: String,
    failures: u32,
}

#[derive(Debug, Clone)]
struct Slot {
    var: Variable,
    pv_addr: ItemAddress,
    sp_addr: ItemAddress,
}

/// A remote process this agent depends on through cross links.
#[derive(Debug, Clone, Default)]
struct Source {
    symbols: Vec<String>,
    conversation: Option<String>,
    provider: Option<Aid>,
    agreed: bool,
}

pub struct ControlAgent {
    process: String,
    plc: Arc<PlcSimulator>,
    group: OpcGroup,
    slots: Vec<Slot>,
    by_item: HashMap<CellKey, (usize, Field)>,
    local_links: Vec<DependencyLink>,
    cross_links: Vec<DependencyLink>,
    subscriptions: Vec<Subscription>,
    sources: BTreeMap<String, Source>,
    stats: Arc<ControlStats>,
}

impl ControlAgent {
    pub fn new(cfg: &ControlConfig, plc: Arc<PlcSimulator>) -> Self {
        let p = &cfg.process;
        let mut group = OpcGroup::new(format!("{}-group", p.name), cfg.poll_period, cfg.deadband);
        let mut slots = Vec::new();
        let mut by_item = HashMap::new();
        for (i, v) in p.variables.iter().enumerate() {
            group.add_item(v.pv_address.clone());
            group.add_item(v.sp_address.clone());
            by_item.insert(v.pv_address.key(), (i, Field::Pv));
            by_item.insert(v.sp_address.key(), (i, Field::Sp));
            let mut var = v.to_variable();
            var.pv = plc.read_item(&v.pv_address);
            var.sp = plc.read_item(&v.sp_address);
            slots.push(Slot {
                var,
                pv_addr: v.pv_address.clone(),
                sp_addr: v.sp_address.clone(),
            });
        }
        let mine: Vec<_> = cfg.links.iter().filter(|l| l.target.process == p.name).cloned().collect();
        let (local_links, cross_links): (Vec<_>, Vec<_>) = mine.into_iter().partition(|l| l.is_local());
        let mut sources: BTreeMap<String, Source> = BTreeMap::new();
        for l in &cross_links {
            let s = sources.entry(l.source.process.clone()).or_default();
            if !s.symbols.contains(&l.source.symbol) {
                s.symbols.push(l.source.symbol.clone());
            }
        }
        ControlAgent {
            process: p.name.clone(),
            plc,
            group,
            slots,
            by_item,
            local_links,
            cross_links,
            subscriptions: Vec::new(),
            sources,
            stats: Arc::new(ControlStats::default()),
        }
    }

    /// Creates the agent on `platform` with its standard behaviours.
    pub fn spawn(
        platform: &Platform,
        cfg: &ControlConfig,
        plc: Arc<PlcSimulator>,
    ) -> Result<(AgentHost<ControlAgent>, Arc<ControlStats>), RuntimeError> {
        let agent = ControlAgent::new(cfg, plc);
        let stats = agent.stats.clone();
        let mut host = platform.spawn_agent(&cfg.process.agent, agent, Vec::new())?;
        host.add_behaviour(OneShot::new(|a: &mut ControlAgent, ctx| a.setup(ctx)));
        host.add_behaviour(Periodic::new(cfg.poll_period, |a: &mut ControlAgent, ctx| {
            a.handle_data_change(ctx)
        }));
        host.add_behaviour(Cyclic::new(|a: &mut ControlAgent, ctx| {
            match ctx.receive(&MessageTemplate::any()) {
                Some(msg) => {
                    a.on_message(ctx, msg);
                    true
                }
                None => false,
            }
        }));
        Ok((host, stats))
    }

    pub fn process(&self) -> &str {
        &self.process
    }

    pub fn variables(&self) -> Vec<Variable> {
        self.slots.iter().map(|s| s.var.clone()).collect()
    }

    pub fn subscriptions(&self) -> &[Subscription] {
        &self.subscriptions
    }

    pub fn stats(&self) -> &Arc<ControlStats> {
        &self.stats
    }

    fn slot_by_symbol(&self, symbol: &str) -> Option<usize> {
        self.slots.iter().position(|s| s.var.symbol == symbol)
    }

    fn slot_by_address(&self, text: &str) -> Option<(usize, Field)> {
        let addr = ItemAddress::parse(text).ok()?;
        self.by_item.get(&addr.key()).copied()
    }

    /// The single path through which this agent writes setpoints. Values
    /// outside the variable limits never reach the PLC.
    fn write_sp(&mut self, idx: usize, value: f64) -> bool {
        let slot = &mut self.slots[idx];
        if !(value.is_finite() && slot.var.in_range(value)) {
            ControlStats::bump(&self.stats.blocked_writes);
            log::error!("{}: refusing out-of-range SP {value} for {}", self.process, slot.var.symbol);
            return false;
        }
        self.plc.write_item(&slot.sp_addr, value);
        slot.var.sp = value;
        ControlStats::bump(&self.stats.sp_writes);
        true
    }

    fn refresh(&mut self, idx: usize) -> Variable {
        let slot = &mut self.slots[idx];
        slot.var.pv = self.plc.read_item(&slot.pv_addr);
        slot.var.sp = self.plc.read_item(&slot.sp_addr);
        slot.var.clone()
    }

    fn service_description(&self, provider: Aid) -> ServiceDescription {
        let symbols: Vec<_> = self.slots.iter().map(|s| s.var.symbol.as_str()).collect();
        ServiceDescription {
            provider,
            service_type: PROCESS_CONTROL.into(),
            service_name: self.process.clone(),
            properties: BTreeMap::from([("variables".to_string(), symbols.join(","))]),
        }
    }

    fn setup(&mut self, ctx: &mut Context<'_, Self>) {
        let sd = self.service_description(ctx.aid().clone());
        let platform = ctx.platform();
        if let Err(DfError::Duplicate { .. }) = platform.df_register(sd.clone()) {
            platform.df_deregister(ctx.aid(), &self.process);
            if let Err(e) = platform.df_register(sd) {
                log::error!("{}: DF registration failed: {e}", self.process);
            }
        }
        platform.df_subscribe(ctx.aid().clone(), DfTemplate::service_type(PROCESS_CONTROL));
        let names: Vec<String> = self.sources.keys().cloned().collect();
        for name in names {
            self.subscribe_to_source(ctx, &name);
        }
    }

    fn subscribe_to_source(&mut self, ctx: &mut Context<'_, Self>, process: &str) {
        let Some(source) = self.sources.get(process) else { return };
        if source.conversation.is_some() {
            return;
        }
        let found = ctx.platform().df_search(&DfTemplate::service_name(process));
        let Some(sd) = found.into_iter().find(|sd| sd.service_type == PROCESS_CONTROL) else {
            return;
        };
        let elements = source
            .symbols
            .iter()
            .map(|s| ContentElement::Action {
                actor: sd.provider.clone(),
                action: AgentAction::GetVariable(VariableRef::Symbol(s.clone())),
            })
            .collect();
        let Ok(content) = encode_sl(&Content(elements)) else { return };
        let conv = ctx.new_conversation_id();
        let msg = AclMessage::new(Performative::Subscribe, ctx.aid().clone())
            .to(sd.provider.clone())
            .with_content(content)
            .with_conversation(conv.clone())
            .with_reply_with(conv.clone());
        if ctx.send(msg).iter().all(|r| r.delivered()) {
            let source = self.sources.get_mut(process).expect("checked above");
            source.conversation = Some(conv);
            source.provider = Some(sd.provider);
            source.agreed = false;
        }
    }

    /// Polls the PLC group and fans changes out to subscribers, local
    /// dependency links and the limit check.
    pub fn handle_data_change(&mut self, ctx: &mut Context<'_, Self>) {
        let changes = self.plc.poll_group(&mut self.group);
        if changes.is_empty() {
            return;
        }
        let mut changed = BTreeSet::new();
        let mut fields = BTreeSet::new();
        for (item, value) in changes {
            let Some(&(idx, field)) = self.by_item.get(&item.key()) else { continue };
            let var = &mut self.slots[idx].var;
            match field {
                Field::Pv => var.pv = value,
                Field::Sp => var.sp = value,
            }
            changed.insert(idx);
            fields.insert((idx, field));
        }
        let vars: Vec<Variable> = changed.iter().map(|&i| self.slots[i].var.clone()).collect();
        self.publish(ctx, &vars);
        self.higher_level_control(&fields);
        self.check_limits(ctx, &vars);
    }

    fn publish(&mut self, ctx: &mut Context<'_, Self>, vars: &[Variable]) {
        let mut outgoing = Vec::new();
        for (i, sub) in self.subscriptions.iter().enumerate() {
            let selected: Vec<Variable> = match &sub.kind {
                SubscriptionKind::OperatorFull => vars.to_vec(),
                SubscriptionKind::CrossVariables(symbols) => {
                    vars.iter().filter(|v| symbols.contains(&v.symbol)).cloned().collect()
                }
            };
            if selected.is_empty() {
                continue;
            }
            outgoing.push((i, Content::predicate(Predicate::ListOfVariables(selected))));
        }
        for (i, content) in outgoing {
            self.send_to_subscriber(ctx, i, &content);
        }
        self.prune();
    }

    fn send_to_subscriber(&mut self, ctx: &mut Context<'_, Self>, i: usize, content: &Content) {
        let Ok(text) = encode_sl(content) else { return };
        let sub = &mut self.subscriptions[i];
        let msg = AclMessage::new(Performative::Inform, ctx.aid().clone())
            .to(sub.subscriber.clone())
            .with_content(text)
            .with_conversation(sub.conversation_id.clone());
        if ctx.send(msg).iter().all(|r| r.delivered()) {
            sub.failures = 0;
        } else {
            sub.failures += 1;
        }
    }

    fn prune(&mut self) {
        let process = &self.process;
        self.subscriptions.retain(|s| {
            let keep = s.failures < MAX_DELIVERY_FAILURES;
            if !keep {
                log::warn!("{process}: dropping unreachable subscriber {}", s.subscriber);
            }
            keep
        });
    }

    /// Local interpolation links whose source field changed.
    fn higher_level_control(&mut self, changed: &BTreeSet<(usize, Field)>) {
        let mut writes = Vec::new();
        for link in &self.local_links {
            let Some(src) = self.slot_by_symbol(&link.source.symbol) else { continue };
            if !changed.contains(&(src, link.source.field)) {
                continue;
            }
            let Some(dst) = self.slot_by_symbol(&link.target.symbol) else { continue };
            writes.push((dst, self.target_value(link, &self.slots[src].var, dst)));
        }
        for (dst, value) in writes {
            self.apply_link_write(dst, value);
        }
    }

    fn target_value(&self, link: &DependencyLink, source: &Variable, dst: usize) -> f64 {
        let x = match link.source.field {
            Field::Pv => source.pv,
            Field::Sp => source.sp,
        };
        let t = &self.slots[dst].var;
        link.target_setpoint(x, t.low_limit, t.high_limit)
    }

    fn apply_link_write(&mut self, dst: usize, value: f64) {
        // unchanged targets are not rewritten, so a settled chain goes quiet
        if self.slots[dst].var.sp.to_bits() != value.to_bits() {
            self.write_sp(dst, value);
        }
    }

    fn check_limits(&mut self, ctx: &mut Context<'_, Self>, vars: &[Variable]) {
        let now = from_epoch_millis(ctx.now_ms());
        let mut outgoing = Vec::new();
        for v in vars {
            let predicate = if v.pv > v.high_limit {
                Predicate::IsHigh(v.clone())
            } else if v.pv < v.low_limit {
                Predicate::IsLow(v.clone())
            } else {
                continue;
            };
            for (i, sub) in self.subscriptions.iter().enumerate() {
                if sub.kind != SubscriptionKind::OperatorFull {
                    continue;
                }
                let Some(alarm) = setpoint::limit_alarm(now, sub.subscriber.clone(), v) else { continue };
                let content = Content(vec![
                    ContentElement::Predicate(Predicate::ListOfAlarms(vec![alarm])),
                    ContentElement::Predicate(predicate.clone()),
                ]);
                outgoing.push((i, content));
            }
        }
        for (i, content) in outgoing {
            self.send_to_subscriber(ctx, i, &content);
            ControlStats::bump(&self.stats.alarms_sent);
        }
        self.prune();
    }

    fn on_message(&mut self, ctx: &mut Context<'_, Self>, msg: AclMessage) {
        if msg.sender.name == ctx.platform().df_aid().name {
            self.on_df_notification(ctx, &msg);
            return;
        }
        match msg.performative {
            Performative::Request | Performative::Subscribe => self.on_request(ctx, msg),
            Performative::Cancel => {
                self.subscriptions.retain(|s| {
                    !(s.subscriber.name == msg.sender.name && s.conversation_id == msg.conversation_id)
                });
            }
            Performative::Inform => self.prepare_new_sp(&msg),
            Performative::Agree => {
                if let Some(s) = self.source_by_conversation(&msg.conversation_id) {
                    s.agreed = true;
                }
            }
            Performative::Refuse | Performative::Failure | Performative::NotUnderstood => {
                log::warn!("{}: {} from {}: {}", self.process, msg.performative, msg.sender, msg.content);
                if let Some(s) = self.source_by_conversation(&msg.conversation_id) {
                    s.conversation = None;
                    s.provider = None;
                }
            }
        }
    }

    fn source_by_conversation(&mut self, conv: &str) -> Option<&mut Source> {
        self.sources.values_mut().find(|s| s.conversation.as_deref() == Some(conv))
    }

    fn on_df_notification(&mut self, ctx: &mut Context<'_, Self>, msg: &AclMessage) {
        let Ok(content) = parse_sl(&msg.content) else { return };
        if let Some(Predicate::IsControlProcess(cp)) = content.first_predicate() {
            if self.sources.contains_key(&cp.name) {
                let name = cp.name.clone();
                self.subscribe_to_source(ctx, &name);
            }
        }
    }

    fn reply(ctx: &Context<'_, Self>, msg: &AclMessage, p: Performative, content: String) {
        ctx.send(msg.reply(p, ctx.aid().clone()).with_content(content));
    }

    fn not_understood(&self, ctx: &Context<'_, Self>, msg: &AclMessage) {
        ControlStats::bump(&self.stats.not_understood);
        Self::reply(ctx, msg, Performative::NotUnderstood, msg.content.clone());
    }

    /// REFUSE whose content repeats the elements that could not be honoured.
    fn refuse(&self, ctx: &Context<'_, Self>, msg: &AclMessage, offending: Vec<ContentElement>) {
        ControlStats::bump(&self.stats.refused);
        let content = encode_sl(&Content(offending)).unwrap_or_default();
        Self::reply(ctx, msg, Performative::Refuse, content);
    }

    fn on_request(&mut self, ctx: &mut Context<'_, Self>, msg: AclMessage) {
        let content = match parse_sl(&msg.content) {
            Ok(c) => c,
            Err(e) => {
                log::warn!("{}: cannot parse request from {}: {e}", self.process, msg.sender);
                self.not_understood(ctx, &msg);
                return;
            }
        };
        let subscribe = msg.performative == Performative::Subscribe;
        match content.elements() {
            [ContentElement::Predicate(Predicate::IsControlProcess(_))] => {
                self.handle_subscription(ctx, &msg, &content)
            }
            elements if subscribe && elements.iter().all(is_get_by_symbol) => {
                self.handle_subscription(ctx, &msg, &content)
            }
            [ContentElement::Action {
                action: AgentAction::SetVariable { .. },
                ..
            }] if !subscribe => self.start_setpoint_fsm(ctx, msg, &content),
            [ContentElement::Action { action, .. }] if !subscribe => {
                let action = action.clone();
                self.handle_query(ctx, &msg, &content, &action)
            }
            _ => self.not_understood(ctx, &msg),
        }
    }

    /// Records a subscription, then AGREE followed by a snapshot INFORM.
    fn handle_subscription(&mut self, ctx: &mut Context<'_, Self>, msg: &AclMessage, content: &Content) {
        let kind = match content.elements() {
            [ContentElement::Predicate(Predicate::IsControlProcess(cp))] => {
                if cp.name != self.process {
                    self.refuse(ctx, msg, content.elements().to_vec());
                    return;
                }
                if cp.variables.is_empty() {
                    SubscriptionKind::OperatorFull
                } else {
                    SubscriptionKind::CrossVariables(cp.variables.iter().map(|v| v.symbol.clone()).collect())
                }
            }
            elements => SubscriptionKind::CrossVariables(
                elements
                    .iter()
                    .filter_map(|e| match e {
                        ContentElement::Action {
                            action: AgentAction::GetVariable(VariableRef::Symbol(s)),
                            ..
                        } => Some(s.clone()),
                        _ => None,
                    })
                    .collect(),
            ),
        };
        let indices: Vec<usize> = match &kind {
            SubscriptionKind::OperatorFull => (0..self.slots.len()).collect(),
            SubscriptionKind::CrossVariables(symbols) => {
                let unknown: Vec<&String> =
                    symbols.iter().filter(|s| self.slot_by_symbol(s).is_none()).collect();
                if !unknown.is_empty() {
                    let offending = unknown
                        .into_iter()
                        .map(|s| ContentElement::Action {
                            actor: ctx.aid().clone(),
                            action: AgentAction::GetVariable(VariableRef::Symbol(s.clone())),
                        })
                        .collect();
                    self.refuse(ctx, msg, offending);
                    return;
                }
                symbols.iter().filter_map(|s| self.slot_by_symbol(s)).collect()
            }
        };
        self.subscriptions
            .retain(|s| !(s.subscriber.name == msg.sender.name && s.kind.same_kind(&kind)));
        self.subscriptions.push(Subscription {
            subscriber: msg.sender.clone(),
            kind,
            conversation_id: msg.conversation_id.clone(),
            failures: 0,
        });
        Self::reply(ctx, msg, Performative::Agree, msg.content.clone());
        let snapshot: Vec<Variable> = indices.into_iter().map(|i| self.refresh(i)).collect();
        if let Ok(text) = encode_sl(&Content::predicate(Predicate::ListOfVariables(snapshot))) {
            Self::reply(ctx, msg, Performative::Inform, text);
        }
    }

    fn handle_query(&mut self, ctx: &mut Context<'_, Self>, msg: &AclMessage, content: &Content, action: &AgentAction) {
        let found = match action {
            AgentAction::GetVariable(VariableRef::Symbol(s)) | AgentAction::LocateVariable { symbol: s } => {
                self.slot_by_symbol(s)
            }
            AgentAction::GetVariable(VariableRef::Address(a)) => self.slot_by_address(a).map(|(i, _)| i),
            AgentAction::SetVariable { .. } => None,
        };
        let Some(idx) = found else {
            self.refuse(ctx, msg, content.elements().to_vec());
            return;
        };
        let var = self.refresh(idx);
        let reply = match action {
            AgentAction::LocateVariable { .. } => Content(vec![
                ContentElement::Predicate(Predicate::IsLocatedin(
                    var.clone(),
                    ControlProcess {
                        name: self.process.clone(),
                        variables: Vec::new(),
                    },
                )),
                ContentElement::Predicate(Predicate::IsLocal(var)),
            ]),
            _ => Content::predicate(Predicate::IsVariable(var)),
        };
        if let Ok(text) = encode_sl(&reply) {
            Self::reply(ctx, msg, Performative::Inform, text);
        }
    }

    fn start_setpoint_fsm(&mut self, ctx: &mut Context<'_, Self>, msg: AclMessage, content: &Content) {
        let Some((_, AgentAction::SetVariable { variable_address, value })) = content.first_action() else {
            return;
        };
        let idx = match self.slot_by_address(variable_address) {
            Some((i, Field::Sp)) => i,
            _ => {
                self.refuse(ctx, &msg, content.elements().to_vec());
                return;
            }
        };
        ctx.add_behaviour(setpoint_fsm(SetpointRequest {
            request: msg,
            slot: idx,
            value: *value,
            verdict: Verdict::Reject,
        }));
    }

    /// Cross links fed by an INFORM on one of this agent's source
    /// subscriptions.
    fn prepare_new_sp(&mut self, msg: &AclMessage) {
        let Some(process) = self
            .sources
            .iter()
            .find(|(_, s)| s.conversation.as_deref() == Some(msg.conversation_id.as_str()))
            .map(|(name, _)| name.clone())
        else {
            return;
        };
        let Ok(content) = parse_sl(&msg.content) else { return };
        let Some(Predicate::ListOfVariables(vars)) = content.first_predicate() else { return };
        let mut writes = Vec::new();
        for v in vars {
            for link in &self.cross_links {
                if link.source.process != process || link.source.symbol != v.symbol {
                    continue;
                }
                let Some(dst) = self.slot_by_symbol(&link.target.symbol) else { continue };
                writes.push((dst, self.target_value(link, v, dst)));
            }
        }
        for (dst, value) in writes {
            self.apply_link_write(dst, value);
        }
    }
}

fn is_get_by_symbol(e: &ContentElement) -> bool {
    matches!(
        e,
        ContentElement::Action {
            action: AgentAction::GetVariable(VariableRef::Symbol(_)),
            ..
        }
    )
}

struct SetpointRequest {
    request: AclMessage,
    slot: usize,
    value: f64,
    verdict: Verdict,
}

const EV_VALID: i32 = 1;

/// VALIDATE -> APPLY | REJECT -> NOTIFY. Exactly one INFORM per request.
fn setpoint_fsm(req: SetpointRequest) -> Fsm<ControlAgent, SetpointRequest> {
    Fsm::builder(req)
        .state("VALIDATE", |a: &mut ControlAgent, r: &mut SetpointRequest, _| {
            match setpoint::validate(&a.slots[r.slot].var, r.value) {
                Verdict::Apply => EV_VALID,
                Verdict::Reject => 0,
            }
        })
        .state("APPLY", |a: &mut ControlAgent, r: &mut SetpointRequest, _| {
            r.verdict = if a.write_sp(r.slot, r.value) {
                ControlStats::bump(&a.stats.setpoints_applied);
                Verdict::Apply
            } else {
                ControlStats::bump(&a.stats.setpoints_rejected);
                Verdict::Reject
            };
            0
        })
        .state("REJECT", |a: &mut ControlAgent, r: &mut SetpointRequest, _| {
            r.verdict = Verdict::Reject;
            ControlStats::bump(&a.stats.setpoints_rejected);
            0
        })
        .terminal("NOTIFY", |a: &mut ControlAgent, r: &mut SetpointRequest, ctx| {
            let var = a.slots[r.slot].var.clone();
            let alarm = setpoint::outcome_alarm(
                from_epoch_millis(ctx.now_ms()),
                r.request.sender.clone(),
                &a.process,
                &var,
                r.value,
                r.verdict,
            );
            match encode_sl(&Content::predicate(Predicate::ListOfAlarms(vec![alarm]))) {
                Ok(text) => {
                    ctx.send(r.request.reply(Performative::Inform, ctx.aid().clone()).with_content(text));
                    ControlStats::bump(&a.stats.alarms_sent);
                }
                Err(e) => log::error!("{}: cannot encode outcome alarm: {e}", a.process),
            }
        })
        .initial("VALIDATE")
        .transition("VALIDATE", EV_VALID, "APPLY")
        .default_transition("VALIDATE", "REJECT")
        .default_transition("APPLY", "NOTIFY")
        .default_transition("REJECT", "NOTIFY")
        .build()
        .expect("setpoint FSM is well formed")
}
