//! Application ontology: three concepts, three agent actions and eight
//! predicates. The ontology is fixed for the lifetime of every agent.

use serde::{Deserialize, Serialize};

use crate::acl::Aid;

/// A process variable as seen by agents. Addresses are kept as the text of
/// an item address (`s7:[server]dbN,wM`) and treated as opaque identifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub symbol: String,
    pub address_pv: String,
    pub address_sp: String,
    pub low_limit: f64,
    pub high_limit: f64,
    pub pv: f64,
    pub sp: f64,
}

impl Variable {
    pub fn in_range(&self, value: f64) -> bool {
        self.low_limit <= value && value <= self.high_limit
    }

    /// Operator-table range text, e.g. `(0.0-->3000.0)`.
    pub fn range_text(&self) -> String {
        format!(
            "({}-->{})",
            crate::format_float(self.low_limit),
            crate::format_float(self.high_limit)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alarm {
    pub destination: Aid,
    /// Lower is more urgent.
    pub priority: u32,
    pub text: String,
    pub var: Variable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlProcess {
    pub name: String,
    pub variables: Vec<Variable>,
}

/// How a `GetVariable` action names its variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum VariableRef {
    Symbol(String),
    Address(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AgentAction {
    SetVariable { variable_address: String, value: f64 },
    GetVariable(VariableRef),
    LocateVariable { symbol: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Predicate {
    IsHigh(Variable),
    IsLow(Variable),
    IsLocal(Variable),
    IsLocatedin(Variable, ControlProcess),
    IsVariable(Variable),
    IsControlProcess(ControlProcess),
    ListOfVariables(Vec<Variable>),
    ListOfAlarms(Vec<Alarm>),
}

impl Predicate {
    pub fn name(&self) -> &'static str {
        match self {
            Predicate::IsHigh(_) => "IsHigh",
            Predicate::IsLow(_) => "IsLow",
            Predicate::IsLocal(_) => "IsLocal",
            Predicate::IsLocatedin(..) => "IsLocatedin",
            Predicate::IsVariable(_) => "IsVariable",
            Predicate::IsControlProcess(_) => "IsControlProcess",
            Predicate::ListOfVariables(_) => "ListOfVariables",
            Predicate::ListOfAlarms(_) => "ListOfAlarms",
        }
    }
}

/// One top-level expression of a message content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ContentElement {
    /// `(action <actor> <agent-action>)`
    Action { actor: Aid, action: AgentAction },
    Predicate(Predicate),
}

impl From<Predicate> for ContentElement {
    fn from(p: Predicate) -> Self {
        ContentElement::Predicate(p)
    }
}

/// Message content: a non-empty list of expressions, `(e1 e2 ...)` in SL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Content(pub Vec<ContentElement>);

impl Content {
    pub fn single(element: impl Into<ContentElement>) -> Self {
        Content(vec![element.into()])
    }

    pub fn action(actor: Aid, action: AgentAction) -> Self {
        Content(vec![ContentElement::Action { actor, action }])
    }

    pub fn predicate(p: Predicate) -> Self {
        Content(vec![ContentElement::Predicate(p)])
    }

    pub fn elements(&self) -> &[ContentElement] {
        &self.0
    }

    /// The first element if it is a predicate.
    pub fn first_predicate(&self) -> Option<&Predicate> {
        self.0.iter().find_map(|e| match e {
            ContentElement::Predicate(p) => Some(p),
            _ => None,
        })
    }

    pub fn first_action(&self) -> Option<(&Aid, &AgentAction)> {
        self.0.iter().find_map(|e| match e {
            ContentElement::Action { actor, action } => Some((actor, action)),
            _ => None,
        })
    }
}
