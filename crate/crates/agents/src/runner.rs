//! Boots a whole network from a scenario on one host: simulators, the
//! directory, control agents and the gateway, all driven by a simulated
//! clock. Also produces the run report and the demo figure data.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use icn_core::interp::VarId;
use icn_core::plc::{CellKey, ItemAddress, PlcError, PlcSimulator, ProcessDynamics, ServerIdentity};
use icn_core::scenario::{Scenario, ScriptedSetpoint};
use serde::Serialize;
use thiserror::Error;

use crate::control::{ControlAgent, ControlConfig, ControlStats};
use crate::gateway::http::HttpServer;
use crate::gateway::{GatewayAgent, GatewayConfig, GatewayHandle, GatewayStartError, PendingSetpoint, SetpointOutcome};
use crate::runtime::{Clock, Platform, RuntimeError, SimDriver};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("simulator: {0}")]
    Plc(#[from] PlcError),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error(transparent)]
    Gateway(#[from] GatewayStartError),
    #[error("gateway port {port}: {source}")]
    Http { port: u16, source: io::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Counts every setpoint write that lands outside its variable's limits.
#[derive(Debug, Default)]
pub struct WriteAudit {
    limits: HashMap<(String, CellKey), (String, f64, f64)>,
    writes: AtomicU64,
    violations: AtomicU64,
    log: Mutex<Vec<String>>,
}

impl WriteAudit {
    pub fn sp_writes(&self) -> u64 {
        self.writes.load(Ordering::Relaxed)
    }

    pub fn violations(&self) -> u64 {
        self.violations.load(Ordering::Relaxed)
    }

    pub fn violation_log(&self) -> Vec<String> {
        self.log.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    fn observe(&self, process: &str, addr: &ItemAddress, value: f64) {
        let Some((symbol, low, high)) = self.limits.get(&(process.to_string(), addr.key())) else {
            return;
        };
        self.writes.fetch_add(1, Ordering::Relaxed);
        if !(value.is_finite() && *low <= value && value <= *high) {
            self.violations.fetch_add(1, Ordering::Relaxed);
            self.log
                .lock()
                .unwrap_or_else(|e| e.into_inner())
                .push(format!("{process}/{symbol}: SP {value} outside [{low}, {high}]"));
        }
    }
}

/// A booted network under a simulated clock.
pub struct Network {
    pub scenario: Scenario,
    pub driver: SimDriver,
    pub plcs: BTreeMap<String, Arc<PlcSimulator>>,
    pub gateway: GatewayHandle,
    pub control_stats: BTreeMap<String, Arc<ControlStats>>,
    pub audit: Arc<WriteAudit>,
}

impl Network {
    /// Starts everything in order (simulators, directory, control agents,
    /// gateway) and lets discovery settle at the start instant.
    pub fn boot(scenario: &Scenario) -> Result<Network, RunError> {
        let platform = Platform::new(&scenario.platform, Clock::virtual_at(scenario.start_time_ms))?;
        let mut driver = SimDriver::new(platform.clone(), scenario.tick);
        let mut audit = WriteAudit::default();
        let mut plcs = BTreeMap::new();
        for p in &scenario.processes {
            let plc = Arc::new(PlcSimulator::new(ServerIdentity {
                host: scenario.opc_server_host.clone(),
                name: scenario.opc_server_name.clone(),
            }));
            for v in &p.variables {
                plc.write_item(&v.pv_address, v.pv);
                plc.write_item(&v.sp_address, v.sp);
                plc.add_dynamics(ProcessDynamics {
                    pv: v.pv_address.clone(),
                    sp: v.sp_address.clone(),
                    low_limit: v.low_limit,
                    high_limit: v.high_limit,
                    tau: v.tau,
                    noise_amplitude: if scenario.noise { v.noise_amplitude } else { 0.0 },
                    rng_seed: v.rng_seed,
                })?;
                audit
                    .limits
                    .insert((p.name.clone(), v.sp_address.key()), (v.symbol.clone(), v.low_limit, v.high_limit));
            }
            plcs.insert(p.name.clone(), plc);
        }
        let audit = Arc::new(audit);
        for (name, plc) in &plcs {
            let a = audit.clone();
            let process = name.clone();
            plc.set_write_observer(Some(Arc::new(move |addr: &ItemAddress, v| a.observe(&process, addr, v))));
            driver.add_plant(plc.clone());
        }
        let mut control_stats = BTreeMap::new();
        for p in &scenario.processes {
            let cfg = ControlConfig {
                process: p.clone(),
                links: scenario.links.clone(),
                poll_period: scenario.poll_period,
                deadband: scenario.deadband,
            };
            let (host, stats) = ControlAgent::spawn(&platform, &cfg, plcs[&p.name].clone())?;
            control_stats.insert(p.name.clone(), stats);
            driver.add_agent(host);
        }
        let (gw, gateway) = GatewayAgent::spawn(&platform, &GatewayConfig::new(&scenario.operator_agent))?;
        driver.add_agent(gw);
        driver.settle();
        Ok(Network {
            scenario: scenario.clone(),
            driver,
            plcs,
            gateway,
            control_stats,
            audit,
        })
    }

    pub fn start_ms(&self) -> i64 {
        self.scenario.start_time_ms
    }

    pub fn elapsed_ms(&self) -> i64 {
        self.driver.now_ms() - self.start_ms()
    }

    /// Runs to `elapsed` ms after the start.
    pub fn run_to(&mut self, elapsed: i64) {
        self.driver.run_until(self.start_ms() + elapsed);
    }

    /// Like [`Network::run_to`] but keeps the simulated clock in step with
    /// the wall clock, for runs with live clients.
    pub fn run_to_paced(&mut self, elapsed: i64) {
        let wall0 = Instant::now();
        let sim0 = self.elapsed_ms();
        let step = self.scenario.tick.as_millis().max(1) as i64;
        while self.elapsed_ms() < elapsed {
            let next = (self.elapsed_ms() + step).min(elapsed);
            let due = wall0 + Duration::from_millis((next - sim0) as u64);
            if let Some(wait) = due.checked_duration_since(Instant::now()) {
                std::thread::sleep(wait);
            }
            self.run_to(next);
        }
    }

    pub fn plc(&self, process: &str) -> &Arc<PlcSimulator> {
        &self.plcs[process]
    }

    /// Ground-truth `(PV, SP)` straight from the simulator.
    pub fn truth(&self, id: &VarId) -> Option<(f64, f64)> {
        let v = self.scenario.variable(id)?;
        let plc = self.plcs.get(&id.process)?;
        Some((plc.read_item(&v.pv_address), plc.read_item(&v.sp_address)))
    }

    pub fn sp(&self, process: &str, symbol: &str) -> f64 {
        self.truth(&VarId::new(process, symbol)).map_or(f64::NAN, |t| t.1)
    }

    pub fn submit(&self, s: &ScriptedSetpoint) -> Result<PendingSetpoint, crate::gateway::GatewayError> {
        self.gateway.submit_setpoint(&s.process, &s.symbol, s.value)
    }

    pub fn report(&self, script: Vec<ScriptReport>) -> RunReport {
        let sum = |f: fn(&ControlStats) -> &AtomicU64| -> u64 {
            self.control_stats.values().map(|s| ControlStats::get(f(s))).sum()
        };
        let mut variables = Vec::new();
        for p in &self.scenario.processes {
            for v in &p.variables {
                let (pv, sp) = self.truth(&VarId::new(&p.name, &v.symbol)).expect("own variable");
                variables.push(VariableReport {
                    process: p.name.clone(),
                    symbol: v.symbol.clone(),
                    pv,
                    sp,
                });
            }
        }
        let alarms_logged = self.gateway.views().processes().map(|p| p.alarms.len()).sum();
        RunReport {
            platform: self.scenario.platform.clone(),
            seed: self.scenario.seed,
            noise: self.scenario.noise,
            duration_ms: self.elapsed_ms(),
            ticks: self.driver.ticks(),
            messages_sent: self.driver.platform().messages_delivered(),
            setpoints_applied: sum(|s| &s.setpoints_applied),
            setpoints_rejected: sum(|s| &s.setpoints_rejected),
            requests_refused: sum(|s| &s.refused),
            alarms_sent: sum(|s| &s.alarms_sent),
            alarms_logged,
            sp_writes: self.audit.sp_writes(),
            sp_write_violations: self.audit.violations(),
            script,
            variables,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScriptReport {
    pub at_ms: u64,
    pub process: String,
    pub symbol: String,
    pub value: f64,
    /// `forwarded`, `rejected`, `timeout`, `pending`, `error` or `not_reached`.
    pub outcome: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariableReport {
    pub process: String,
    pub symbol: String,
    pub pv: f64,
    pub sp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub platform: String,
    pub seed: u64,
    pub noise: bool,
    pub duration_ms: i64,
    pub ticks: u64,
    pub messages_sent: u64,
    pub setpoints_applied: u64,
    pub setpoints_rejected: u64,
    pub requests_refused: u64,
    pub alarms_sent: u64,
    pub alarms_logged: usize,
    pub sp_writes: u64,
    pub sp_write_violations: u64,
    pub script: Vec<ScriptReport>,
    pub variables: Vec<VariableReport>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub duration: Duration,
    /// Serve the HTTP API on this port and pace the simulation to the wall
    /// clock.
    pub gateway_port: Option<u16>,
}

fn describe(outcome: Option<SetpointOutcome>) -> (String, Option<String>) {
    match outcome {
        Some(SetpointOutcome::Forwarded { alarm_text }) => ("forwarded".into(), Some(alarm_text)),
        Some(SetpointOutcome::Rejected { alarm_text, reason }) => ("rejected".into(), Some(alarm_text.unwrap_or(reason))),
        Some(SetpointOutcome::Timeout) => ("timeout".into(), None),
        None => ("pending".into(), None),
    }
}

/// Runs a scenario for `opts.duration` and returns the report.
pub fn run(scenario: &Scenario, opts: &RunOptions) -> Result<RunReport, RunError> {
    let mut net = Network::boot(scenario)?;
    let _http = match opts.gateway_port {
        Some(port) => {
            let addr = SocketAddr::from(([0, 0, 0, 0], port));
            let server = HttpServer::start(net.gateway.clone(), addr).map_err(|source| RunError::Http { port, source })?;
            log::info!("gateway listening on http://{}", server.local_addr());
            Some(server)
        }
        None => None,
    };
    let paced = opts.gateway_port.is_some();
    let end = opts.duration.as_millis() as i64;
    let mut submitted = Vec::new();
    for s in &scenario.script {
        if s.at_ms as i64 > end {
            submitted.push((s, Err("not_reached".to_string())));
            continue;
        }
        if paced {
            net.run_to_paced(s.at_ms as i64);
        } else {
            net.run_to(s.at_ms as i64);
        }
        submitted.push((s, net.submit(s).map_err(|e| format!("error: {e}"))));
    }
    if paced {
        net.run_to_paced(end);
    } else {
        net.run_to(end);
    }
    let script = submitted
        .into_iter()
        .map(|(s, pending)| {
            let (outcome, detail) = match pending {
                Ok(mut p) => describe(p.try_outcome()),
                Err(e) => match e.split_once(": ") {
                    Some((kind, msg)) => (kind.to_string(), Some(msg.to_string())),
                    None => (e, None),
                },
            };
            ScriptReport {
                at_ms: s.at_ms,
                process: s.process.clone(),
                symbol: s.symbol.clone(),
                value: s.value,
                outcome,
                detail,
            }
        })
        .collect();
    Ok(net.report(script))
}

pub const TREND_PROCESS: &str = "PLC1";
pub const TREND_SYMBOL: &str = "PLC1Var0";
/// `(elapsed ms, new SP)` steps applied to the trend variable.
pub const TREND_STEPS: [(i64, f64); 2] = [(2_000, 500.0), (10_000, 1000.0)];
pub const TREND_END_MS: i64 = 40_000;
pub const SWEEP_STEP: f64 = 1.0;
pub const SYNC_STEP_MS: i64 = 10_000;
pub const SYNC_END_MS: i64 = 25_000;
pub const SYNC_SAMPLE_MS: i64 = 500;

/// Trend of the trend variable across two SP steps, recorded by the
/// gateway: rows of `(elapsed ms, PV, SP)`. The variable starts at rest
/// (PV equal to SP) so that each step is the whole initial error.
pub fn step_trend(scenario: &Scenario, noise: bool) -> Result<Vec<(i64, f64, f64)>, RunError> {
    let mut sc = scenario.clone();
    sc.noise = noise;
    if let Some(p) = sc.processes.iter_mut().find(|p| p.name == TREND_PROCESS) {
        if let Some(v) = p.variables.iter_mut().find(|v| v.symbol == TREND_SYMBOL) {
            v.pv = v.sp;
        }
    }
    sc.script.clear();
    let mut net = Network::boot(&sc)?;
    let mut pending = Vec::new();
    for (at, value) in TREND_STEPS {
        net.run_to(at);
        pending.push(
            net.gateway
                .submit_setpoint(TREND_PROCESS, TREND_SYMBOL, value)
                .expect("figure variable exists"),
        );
    }
    net.run_to(TREND_END_MS);
    for mut p in pending {
        match p.try_outcome() {
            Some(SetpointOutcome::Forwarded { .. }) => {}
            other => log::warn!("figure step not applied: {other:?}"),
        }
    }
    let key = format!("{TREND_PROCESS}:{TREND_SYMBOL}");
    let start = net.start_ms();
    let samples = net.gateway.views().trend(&key, i64::MIN, i64::MAX);
    Ok(samples.into_iter().map(|s| (s.t - start, s.pv, s.sp)).collect())
}

/// Sweeps the local link source PV over its range and records the target
/// SP the control agent derives from each value: rows of
/// `(elapsed ms, source PV, target SP)`.
pub fn dependency_sweep(scenario: &Scenario, step: f64) -> Result<Vec<(i64, f64, f64)>, RunError> {
    let mut sc = scenario.clone();
    sc.noise = false;
    sc.script.clear();
    let link = sc
        .links
        .iter()
        .find(|l| l.is_local())
        .cloned()
        .expect("scenario has a local link");
    let source = sc.variable(&link.source_id()).expect("validated").clone();
    let target = sc.variable(&link.target).expect("validated").clone();
    let mut net = Network::boot(&sc)?;
    let plc = net.plc(&link.source.process).clone();
    let poll = sc.poll_period.as_millis() as i64;
    let n = ((source.high_limit - source.low_limit) / step).round() as usize;
    let mut rows = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let x = (source.low_limit + i as f64 * step).min(source.high_limit);
        // hold the source at x: PV and SP both there
        plc.write_item(&source.sp_address, x);
        plc.write_item(&source.pv_address, x);
        let t = net.elapsed_ms() + poll;
        net.run_to(t);
        rows.push((t, x, plc.read_item(&target.sp_address)));
    }
    Ok(rows)
}

/// The three chained setpoints sampled every poll while the head of the
/// chain steps 500 -> 1000: rows of `(elapsed ms, [SP1, SP2, SP3])`.
pub fn sync_chain(scenario: &Scenario) -> Result<(Vec<VarId>, Vec<(i64, Vec<f64>)>), RunError> {
    let mut sc = scenario.clone();
    sc.noise = false;
    sc.script.clear();
    let chain = cross_chain(&sc);
    let head = chain[0].clone();
    let mut net = Network::boot(&sc)?;
    let mut rows = Vec::new();
    let mut pending = Vec::new();
    let mut t = 0;
    while t <= SYNC_END_MS {
        net.run_to(t);
        if t == 0 {
            pending.push(net.gateway.submit_setpoint(&head.process, &head.symbol, 500.0));
        }
        if t == SYNC_STEP_MS {
            pending.push(net.gateway.submit_setpoint(&head.process, &head.symbol, 1000.0));
        }
        rows.push((t, chain.iter().map(|id| net.sp(&id.process, &id.symbol)).collect()));
        t += SYNC_SAMPLE_MS;
    }
    Ok((chain, rows))
}

/// The longest path of cross-process links, head first.
pub fn cross_chain(sc: &Scenario) -> Vec<VarId> {
    let cross: Vec<_> = sc.links.iter().filter(|l| !l.is_local()).collect();
    let mut best: Vec<VarId> = Vec::new();
    for start in &cross {
        let mut path = vec![start.source_id(), start.target.clone()];
        while let Some(next) = cross.iter().find(|l| &l.source_id() == path.last().expect("non-empty")) {
            path.push(next.target.clone());
        }
        if path.len() > best.len() {
            best = path;
        }
    }
    best
}

fn write_csv(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> io::Result<()> {
    let mut out = String::from(header);
    out.push('\n');
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    fs::write(path, out)
}

/// Writes `step_trend.csv`, `dependency_curve.csv` and `sync_chain.csv`
/// into `outdir`. Noise is off for all three, so output is bit-exact.
pub fn demo_figures(scenario: &Scenario, outdir: &Path) -> Result<Vec<PathBuf>, RunError> {
    fs::create_dir_all(outdir)?;
    let trend = outdir.join("step_trend.csv");
    write_csv(
        &trend,
        "t_ms,pv,sp",
        step_trend(scenario, false)?.into_iter().map(|(t, pv, sp)| format!("{t},{pv},{sp}")),
    )?;
    let curve = outdir.join("dependency_curve.csv");
    write_csv(
        &curve,
        "t_ms,source_pv,target_sp",
        dependency_sweep(scenario, SWEEP_STEP)?.into_iter().map(|(t, x, y)| format!("{t},{x},{y}")),
    )?;
    let sync = outdir.join("sync_chain.csv");
    let (chain, rows) = sync_chain(scenario)?;
    let header = std::iter::once("t_ms".to_string())
        .chain(chain.iter().map(|id| format!("{}_sp", id.symbol)))
        .collect::<Vec<_>>()
        .join(",");
    write_csv(
        &sync,
        &header,
        rows.into_iter().map(|(t, sps)| {
            std::iter::once(t.to_string())
                .chain(sps.iter().map(|v| v.to_string()))
                .collect::<Vec<_>>()
                .join(",")
        }),
    )?;
    Ok(vec![trend, curve, sync])
}
