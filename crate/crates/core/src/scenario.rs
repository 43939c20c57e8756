//! Scenario files: the whole plant topology, dynamics, dependency links and
//! an optional operator script in one JSON document.
//!
//! Loading validates everything up front and reports every violation found,
//! not just the first one.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interp::{DependencyLink, Field, InterpolationTable, LinkSource, TableError, VarId};
use crate::ontology::Variable;
use crate::plc::{ItemAddress, DEFAULT_NOISE, DEFAULT_OPC_SERVER_HOST, DEFAULT_OPC_SERVER_NAME};

/// The bundled three-PLC scenario.
pub const DEFAULT_SCENARIO_JSON: &str = include_str!("../scenarios/default.json");

/// 2014-09-23T08:34:00Z, so simulated alarm stamps read like the field logs.
pub const DEFAULT_START_MS: i64 = 1_411_461_240_000;

fn default_platform() -> String {
    "SCADA".into()
}
fn default_seed() -> u64 {
    42
}
fn default_true() -> bool {
    true
}
fn default_poll_ms() -> u64 {
    500
}
fn default_tick_ms() -> u64 {
    100
}
fn default_start() -> i64 {
    DEFAULT_START_MS
}
fn default_tau_s() -> f64 {
    5.0
}
fn default_noise() -> f64 {
    DEFAULT_NOISE
}
fn default_host() -> String {
    DEFAULT_OPC_SERVER_HOST.into()
}
fn default_server() -> String {
    DEFAULT_OPC_SERVER_NAME.into()
}
fn default_operator() -> String {
    "R1".into()
}

/// On-disk form of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default = "default_platform")]
    pub platform: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Master switch for measurement noise.
    #[serde(default = "default_true")]
    pub noise: bool,
    #[serde(default = "default_poll_ms")]
    pub poll_period_ms: u64,
    /// Plant integration step.
    #[serde(default = "default_tick_ms")]
    pub tick_ms: u64,
    /// Simulated wall-clock at t = 0, epoch milliseconds.
    #[serde(default = "default_start")]
    pub start_time_ms: i64,
    #[serde(default, rename = "OpcServerHost", alias = "opc_server_host")]
    pub opc_server_host: Option<String>,
    #[serde(default, rename = "OpcServerName", alias = "opc_server_name")]
    pub opc_server_name: Option<String>,
    #[serde(default)]
    pub deadband: f64,
    #[serde(default = "default_tau_s")]
    pub tau_s: f64,
    /// Default noise amplitude as a fraction of each variable's span.
    #[serde(default = "default_noise")]
    pub noise_amplitude: f64,
    #[serde(default = "default_operator")]
    pub operator_agent: String,
    pub processes: Vec<ProcessFile>,
    #[serde(default)]
    pub links: Vec<LinkFile>,
    #[serde(default)]
    pub script: Vec<ScriptedSetpoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessFile {
    pub name: String,
    pub agent: String,
    pub variables: Vec<VariableFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableFile {
    pub symbol: String,
    pub address_pv: String,
    pub address_sp: String,
    pub low_limit: f64,
    pub high_limit: f64,
    pub pv: f64,
    pub sp: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkFile {
    pub source: LinkSource,
    pub target: VarId,
    pub table: Vec<(f64, f64)>,
}

/// An operator setpoint submitted through the gateway at `at_ms`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedSetpoint {
    pub at_ms: u64,
    pub process: String,
    pub symbol: String,
    pub value: f64,
}

/// A validated variable with parsed addresses and resolved dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableConfig {
    pub symbol: String,
    pub pv_address: ItemAddress,
    pub sp_address: ItemAddress,
    pub low_limit: f64,
    pub high_limit: f64,
    pub pv: f64,
    pub sp: f64,
    pub tau: Duration,
    pub noise_amplitude: f64,
    pub rng_seed: u64,
}

impl VariableConfig {
    pub fn to_variable(&self) -> Variable {
        Variable {
            symbol: self.symbol.clone(),
            address_pv: self.pv_address.to_string(),
            address_sp: self.sp_address.to_string(),
            low_limit: self.low_limit,
            high_limit: self.high_limit,
            pv: self.pv,
            sp: self.sp,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessConfig {
    pub name: String,
    pub agent: String,
    pub variables: Vec<VariableConfig>,
}

impl ProcessConfig {
    pub fn variable(&self, symbol: &str) -> Option<&VariableConfig> {
        self.variables.iter().find(|v| v.symbol == symbol)
    }
}

/// A scenario that passed validation.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub platform: String,
    pub seed: u64,
    pub noise: bool,
    pub poll_period: Duration,
    pub tick: Duration,
    pub start_time_ms: i64,
    pub opc_server_host: String,
    pub opc_server_name: String,
    pub deadband: f64,
    pub operator_agent: String,
    pub processes: Vec<ProcessConfig>,
    pub links: Vec<DependencyLink>,
    pub script: Vec<ScriptedSetpoint>,
}

/// One named validation failure.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("platform name `{0}` must be a non-empty token without `@` or whitespace")]
    InvalidPlatform(String),
    #[error("{0}")]
    InvalidSetting(String),
    #[error("process `{0}` is defined more than once")]
    DuplicateProcess(String),
    #[error("process `{process}`: agent name `{agent}` must be a non-empty token without `@`")]
    InvalidAgentName { process: String, agent: String },
    #[error("agent `{0}` is assigned to more than one process")]
    DuplicateAgent(String),
    #[error("process `{process}`: symbol `{symbol}` is defined more than once")]
    DuplicateSymbol { process: String, symbol: String },
    #[error("process `{process}`: empty variable symbol")]
    EmptySymbol { process: String },
    #[error("{var}: bad {field} address: {message}")]
    AddressSyntax {
        var: VarId,
        field: Field,
        message: String,
    },
    #[error("process `{process}`: address `{address}` is used by more than one variable")]
    DuplicateAddress { process: String, address: String },
    #[error("{0}: lowLimit must be below highLimit")]
    LimitsInverted(VarId),
    #[error("{var}: initial {field} is outside the variable limits")]
    InitialOutOfRange { var: VarId, field: Field },
    #[error("{0}: time constant must be positive")]
    InvalidTau(VarId),
    #[error("{0}: noise amplitude must be finite and non-negative")]
    InvalidNoise(VarId),
    #[error("link {link}: endpoint {endpoint} does not name a scenario variable")]
    UnresolvedLinkEndpoint { link: usize, endpoint: VarId },
    #[error("link {link}: {error}")]
    TableTooShort { link: usize, error: TableError },
    #[error("link {link}: {error}")]
    TableNotMonotone { link: usize, error: TableError },
    #[error("link {link}: {error}")]
    TableNonFinite { link: usize, error: TableError },
    #[error("link {link}: table output [{min}, {max}] exceeds the limits of {target}")]
    TableRangeExceedsTarget {
        link: usize,
        target: VarId,
        min: f64,
        max: f64,
    },
    #[error("{0} is the target of more than one link")]
    DuplicateLinkTarget(VarId),
    #[error("dependency cycle: {}", path.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" -> "))]
    CycleDetected { path: Vec<VarId> },
    #[error("script entry {index}: {var} does not name a scenario variable")]
    ScriptUnknownVariable { index: usize, var: VarId },
    #[error("script entry {index}: value must be finite")]
    ScriptBadValue { index: usize },
}

impl Violation {
    /// Stable variant name, e.g. `CycleDetected`.
    pub fn name(&self) -> &'static str {
        match self {
            Violation::InvalidPlatform(_) => "InvalidPlatform",
            Violation::InvalidSetting(_) => "InvalidSetting",
            Violation::DuplicateProcess(_) => "DuplicateProcess",
            Violation::InvalidAgentName { .. } => "InvalidAgentName",
            Violation::DuplicateAgent(_) => "DuplicateAgent",
            Violation::DuplicateSymbol { .. } => "DuplicateSymbol",
            Violation::EmptySymbol { .. } => "EmptySymbol",
            Violation::AddressSyntax { .. } => "AddressSyntax",
            Violation::DuplicateAddress { .. } => "DuplicateAddress",
            Violation::LimitsInverted(_) => "LimitsInverted",
            Violation::InitialOutOfRange { .. } => "InitialOutOfRange",
            Violation::InvalidTau(_) => "InvalidTau",
            Violation::InvalidNoise(_) => "InvalidNoise",
            Violation::UnresolvedLinkEndpoint { .. } => "UnresolvedLinkEndpoint",
            Violation::TableTooShort { .. } => "TableTooShort",
            Violation::TableNotMonotone { .. } => "TableNotMonotone",
            Violation::TableNonFinite { .. } => "TableNonFinite",
            Violation::TableRangeExceedsTarget { .. } => "TableRangeExceedsTarget",
            Violation::DuplicateLinkTarget(_) => "DuplicateLinkTarget",
            Violation::CycleDetected { .. } => "CycleDetected",
            Violation::ScriptUnknownVariable { .. } => "ScriptUnknownVariable",
            Violation::ScriptBadValue { .. } => "ScriptBadValue",
        }
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("scenario syntax error: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("scenario has {} violation(s):\n{}", .0.len(), Violations(.0))]
    Invalid(Vec<Violation>),
}

struct Violations<'a>(&'a [Violation]);

impl fmt::Display for Violations<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in self.0 {
            writeln!(f, "  [{}] {v}", v.name())?;
        }
        Ok(())
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path)?;
    Scenario::from_json(&text)
}

fn is_token(s: &str) -> bool {
    !s.is_empty() && !s.contains('@') && !s.chars().any(char::is_whitespace)
}

/// splitmix64 finalizer; derives independent per-variable noise seeds.
fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario, ScenarioError> {
        let file: ScenarioFile = serde_json::from_str(text)?;
        Scenario::from_file(file)
    }

    pub fn default_scenario() -> Scenario {
        Scenario::from_json(DEFAULT_SCENARIO_JSON).expect("bundled scenario is valid")
    }

    pub fn from_file(file: ScenarioFile) -> Result<Scenario, ScenarioError> {
        let mut errs = Vec::new();
        if !is_token(&file.platform) {
            errs.push(Violation::InvalidPlatform(file.platform.clone()));
        }
        if file.poll_period_ms == 0 {
            errs.push(Violation::InvalidSetting("poll_period_ms must be positive".into()));
        }
        if file.tick_ms == 0 {
            errs.push(Violation::InvalidSetting("tick_ms must be positive".into()));
        } else if file.poll_period_ms % file.tick_ms != 0 {
            errs.push(Violation::InvalidSetting(
                "poll_period_ms must be a multiple of tick_ms".into(),
            ));
        }
        if !(file.deadband.is_finite() && file.deadband >= 0.0) {
            errs.push(Violation::InvalidSetting("deadband must be finite and non-negative".into()));
        }
        if !is_token(&file.operator_agent) {
            errs.push(Violation::InvalidSetting(format!(
                "operator_agent `{}` must be a non-empty token without `@`",
                file.operator_agent
            )));
        }

        let mut processes = Vec::new();
        let mut seen_procs = BTreeSet::new();
        let mut seen_agents = BTreeSet::new();
        let mut var_index = 0u64;
        for p in &file.processes {
            if !seen_procs.insert(p.name.clone()) {
                errs.push(Violation::DuplicateProcess(p.name.clone()));
            }
            if !is_token(&p.agent) || p.agent == file.operator_agent {
                errs.push(Violation::InvalidAgentName {
                    process: p.name.clone(),
                    agent: p.agent.clone(),
                });
            } else if !seen_agents.insert(p.agent.clone()) {
                errs.push(Violation::DuplicateAgent(p.agent.clone()));
            }
            let mut symbols = BTreeSet::new();
            let mut addresses = BTreeMap::new();
            let mut variables = Vec::new();
            for v in &p.variables {
                var_index += 1;
                let id = VarId::new(&p.name, &v.symbol);
                if v.symbol.is_empty() {
                    errs.push(Violation::EmptySymbol {
                        process: p.name.clone(),
                    });
                } else if !symbols.insert(v.symbol.clone()) {
                    errs.push(Violation::DuplicateSymbol {
                        process: p.name.clone(),
                        symbol: v.symbol.clone(),
                    });
                }
                let mut parse = |text: &str, field| match ItemAddress::parse(text) {
                    Ok(a) => {
                        if addresses.insert(a.key(), ()).is_some() {
                            errs.push(Violation::DuplicateAddress {
                                process: p.name.clone(),
                                address: text.to_string(),
                            });
                        }
                        Some(a)
                    }
                    Err(e) => {
                        errs.push(Violation::AddressSyntax {
                            var: id.clone(),
                            field,
                            message: e.to_string(),
                        });
                        None
                    }
                };
                let pv_address = parse(&v.address_pv, Field::Pv);
                let sp_address = parse(&v.address_sp, Field::Sp);
                let limits_ok = v.low_limit.is_finite()
                    && v.high_limit.is_finite()
                    && v.low_limit < v.high_limit;
                if !limits_ok {
                    errs.push(Violation::LimitsInverted(id.clone()));
                } else {
                    for (field, value) in [(Field::Pv, v.pv), (Field::Sp, v.sp)] {
                        if !(v.low_limit <= value && value <= v.high_limit) {
                            errs.push(Violation::InitialOutOfRange {
                                var: id.clone(),
                                field,
                            });
                        }
                    }
                }
                let tau_s = v.tau_s.unwrap_or(file.tau_s);
                if !(tau_s.is_finite() && tau_s > 0.0) {
                    errs.push(Violation::InvalidTau(id.clone()));
                }
                let noise = v.noise_amplitude.unwrap_or(file.noise_amplitude);
                if !(noise.is_finite() && noise >= 0.0) {
                    errs.push(Violation::InvalidNoise(id.clone()));
                }
                if let (Some(pv_address), Some(sp_address)) = (pv_address, sp_address) {
                    variables.push(VariableConfig {
                        symbol: v.symbol.clone(),
                        pv_address,
                        sp_address,
                        low_limit: v.low_limit,
                        high_limit: v.high_limit,
                        pv: v.pv,
                        sp: v.sp,
                        tau: Duration::try_from_secs_f64(tau_s).unwrap_or(Duration::ZERO),
                        noise_amplitude: noise,
                        rng_seed: v.rng_seed.unwrap_or_else(|| mix_seed(file.seed, var_index)),
                    });
                }
            }
            processes.push(ProcessConfig {
                name: p.name.clone(),
                agent: p.agent.clone(),
                variables,
            });
        }

        let limits: BTreeMap<VarId, (f64, f64)> = file
            .processes
            .iter()
            .flat_map(|p| {
                p.variables
                    .iter()
                    .map(move |v| (VarId::new(&p.name, &v.symbol), (v.low_limit, v.high_limit)))
            })
            .collect();

        let mut links = Vec::new();
        let mut targets = BTreeSet::new();
        for (i, l) in file.links.iter().enumerate() {
            let source = VarId::new(&l.source.process, &l.source.symbol);
            let mut resolved = true;
            for endpoint in [&source, &l.target] {
                if !limits.contains_key(endpoint) {
                    errs.push(Violation::UnresolvedLinkEndpoint {
                        link: i,
                        endpoint: endpoint.clone(),
                    });
                    resolved = false;
                }
            }
            if !targets.insert(l.target.clone()) {
                errs.push(Violation::DuplicateLinkTarget(l.target.clone()));
            }
            let table = match InterpolationTable::new(l.table.clone()) {
                Ok(t) => t,
                Err(error) => {
                    errs.push(match error {
                        TableError::TooShort(_) => Violation::TableTooShort { link: i, error },
                        TableError::NotMonotone(_) => Violation::TableNotMonotone { link: i, error },
                        TableError::NonFinite(_) => Violation::TableNonFinite { link: i, error },
                    });
                    continue;
                }
            };
            if resolved {
                let (low, high) = limits[&l.target];
                let (min, max) = table.y_range();
                if min < low || max > high {
                    errs.push(Violation::TableRangeExceedsTarget {
                        link: i,
                        target: l.target.clone(),
                        min,
                        max,
                    });
                }
            }
            links.push(DependencyLink {
                source: l.source.clone(),
                target: l.target.clone(),
                table,
            });
        }
        if let Some(path) = find_cycle(&file.links) {
            errs.push(Violation::CycleDetected { path });
        }

        for (index, s) in file.script.iter().enumerate() {
            let var = VarId::new(&s.process, &s.symbol);
            if !limits.contains_key(&var) {
                errs.push(Violation::ScriptUnknownVariable { index, var });
            }
            if !s.value.is_finite() {
                errs.push(Violation::ScriptBadValue { index });
            }
        }

        if !errs.is_empty() {
            return Err(ScenarioError::Invalid(errs));
        }
        let mut script = file.script.clone();
        script.sort_by_key(|s| s.at_ms);
        Ok(Scenario {
            platform: file.platform,
            seed: file.seed,
            noise: file.noise,
            poll_period: Duration::from_millis(file.poll_period_ms),
            tick: Duration::from_millis(file.tick_ms),
            start_time_ms: file.start_time_ms,
            opc_server_host: file.opc_server_host.unwrap_or_else(default_host),
            opc_server_name: file.opc_server_name.unwrap_or_else(default_server),
            deadband: file.deadband,
            operator_agent: file.operator_agent,
            processes,
            links,
            script,
        })
    }

    pub fn process(&self, name: &str) -> Option<&ProcessConfig> {
        self.processes.iter().find(|p| p.name == name)
    }

    pub fn variable(&self, id: &VarId) -> Option<&VariableConfig> {
        self.process(&id.process)?.variable(&id.symbol)
    }

    /// Re-derives every per-variable noise seed from a new scenario seed.
    /// Explicit per-variable seeds in the file are overwritten as well.
    pub fn reseed(&mut self, seed: u64) {
        self.seed = seed;
        let mut index = 0u64;
        for p in &mut self.processes {
            for v in &mut p.variables {
                index += 1;
                v.rng_seed = mix_seed(seed, index);
            }
        }
    }

    /// Links whose target lives in `process`.
    pub fn links_into<'a>(&'a self, process: &'a str) -> impl Iterator<Item = &'a DependencyLink> {
        self.links.iter().filter(move |l| l.target.process == process)
    }
}

/// Depth-first search over the variable dependency graph; returns one cycle
/// as a closed path if any exists.
fn find_cycle(links: &[LinkFile]) -> Option<Vec<VarId>> {
    let mut graph: BTreeMap<VarId, Vec<VarId>> = BTreeMap::new();
    for l in links {
        graph
            .entry(VarId::new(&l.source.process, &l.source.symbol))
            .or_default()
            .push(l.target.clone());
    }
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Done,
    }
    fn visit(
        node: &VarId,
        graph: &BTreeMap<VarId, Vec<VarId>>,
        marks: &mut BTreeMap<VarId, Mark>,
        stack: &mut Vec<VarId>,
    ) -> Option<Vec<VarId>> {
        match marks.get(node) {
            Some(Mark::Done) => return None,
            Some(Mark::Open) => {
                let start = stack.iter().position(|n| n == node).expect("open node on stack");
                let mut path = stack[start..].to_vec();
                path.push(node.clone());
                return Some(path);
            }
            None => {}
        }
        marks.insert(node.clone(), Mark::Open);
        stack.push(node.clone());
        for next in graph.get(node).into_iter().flatten() {
            if let Some(cycle) = visit(next, graph, marks, stack) {
                return Some(cycle);
            }
        }
        stack.pop();
        marks.insert(node.clone(), Mark::Done);
        None
    }
    let mut marks = BTreeMap::new();
    let mut stack = Vec::new();
    graph
        .keys()
        .find_map(|start| visit(start, &graph, &mut marks, &mut stack))
}
