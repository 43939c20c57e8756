//! Text codec for the SL content language, restricted to the ontology in
//! [`crate::ontology`].
//!
//! Canonical form: content is wrapped in one pair of parentheses around the
//! list of expressions, frames are written `(Name :slot value ...)`, lists as
//! `(sequence ...)`, floats with at least one fractional digit, and tokens are
//! double-quoted only when they would not survive as a bare atom. Alarm texts
//! are always quoted.
//!
//! The parser tolerates arbitrary whitespace between tokens and accepts a
//! slot name written without its leading colon when the name is a known slot
//! of the enclosing frame (`highLimit 1000.0`).

use thiserror::Error;

use crate::acl::Aid;
use crate::format_float;
use crate::ontology::{
    AgentAction, Alarm, Content, ContentElement, ControlProcess, Predicate, Variable, VariableRef,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SlError {
    #[error("SL parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("schema violation{}: {message}", offset.map(|o| format!(" at byte {o}")).unwrap_or_default())]
    SchemaViolation {
        offset: Option<usize>,
        message: String,
    },
}

impl SlError {
    fn schema(offset: Option<usize>, message: impl Into<String>) -> Self {
        SlError::SchemaViolation {
            offset,
            message: message.into(),
        }
    }
}

type Result<T> = std::result::Result<T, SlError>;

/// Collapses whitespace runs to one space and drops spaces just inside
/// parentheses, so hand-wrapped SL text can be compared with encoder output.
pub fn normalize_whitespace(text: &str) -> String {
    let collapsed = text.split_whitespace().collect::<Vec<_>>().join(" ");
    collapsed.replace("( ", "(").replace(" )", ")")
}

// ---------------------------------------------------------------------------
// Encoding

/// Encodes schema-valid content into canonical SL text.
pub fn encode_sl(content: &Content) -> Result<String> {
    check_content(content)?;
    let mut out = String::from("(");
    for (i, element) in content.elements().iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write_element(&mut out, element);
    }
    out.push(')');
    Ok(out)
}

fn write_element(out: &mut String, element: &ContentElement) {
    match element {
        ContentElement::Action { actor, action } => {
            out.push_str("(action ");
            write_aid(out, actor);
            out.push(' ');
            write_action(out, action);
            out.push(')');
        }
        ContentElement::Predicate(p) => {
            out.push('(');
            out.push_str(p.name());
            out.push(' ');
            match p {
                Predicate::IsHigh(v)
                | Predicate::IsLow(v)
                | Predicate::IsLocal(v)
                | Predicate::IsVariable(v) => write_variable(out, v),
                Predicate::IsLocatedin(v, cp) => {
                    write_variable(out, v);
                    out.push(' ');
                    write_process(out, cp);
                }
                Predicate::IsControlProcess(cp) => write_process(out, cp),
                Predicate::ListOfVariables(vs) => write_sequence(out, vs, write_variable),
                Predicate::ListOfAlarms(alarms) => write_sequence(out, alarms, write_alarm),
            }
            out.push(')');
        }
    }
}

fn write_sequence<T>(out: &mut String, items: &[T], mut each: impl FnMut(&mut String, &T)) {
    out.push_str("(sequence");
    for item in items {
        out.push(' ');
        each(out, item);
    }
    out.push(')');
}

fn write_aid(out: &mut String, aid: &Aid) {
    out.push_str("(agent-identifier :name ");
    write_token(out, &aid.name);
    if !aid.addresses.is_empty() {
        out.push_str(" :addresses ");
        write_sequence(out, &aid.addresses, |o, a| write_token(o, a));
    }
    out.push(')');
}

fn write_action(out: &mut String, action: &AgentAction) {
    match action {
        AgentAction::SetVariable {
            variable_address,
            value,
        } => {
            out.push_str("(SetVariable :variableAddress ");
            write_token(out, variable_address);
            out.push_str(" :value ");
            out.push_str(&format_float(*value));
        }
        AgentAction::GetVariable(VariableRef::Symbol(s)) => {
            out.push_str("(GetVariable :symbol ");
            write_token(out, s);
        }
        AgentAction::GetVariable(VariableRef::Address(a)) => {
            out.push_str("(GetVariable :variableAddress ");
            write_token(out, a);
        }
        AgentAction::LocateVariable { symbol } => {
            out.push_str("(LocateVariable :symbol ");
            write_token(out, symbol);
        }
    }
    out.push(')');
}

fn write_variable(out: &mut String, v: &Variable) {
    out.push_str("(Variable :lowLimit ");
    out.push_str(&format_float(v.low_limit));
    out.push_str(" :highLimit ");
    out.push_str(&format_float(v.high_limit));
    out.push_str(" :addressPV ");
    write_token(out, &v.address_pv);
    out.push_str(" :addressSP ");
    write_token(out, &v.address_sp);
    out.push_str(" :symbol ");
    write_token(out, &v.symbol);
    out.push_str(" :PV ");
    out.push_str(&format_float(v.pv));
    out.push_str(" :SP ");
    out.push_str(&format_float(v.sp));
    out.push(')');
}

fn write_alarm(out: &mut String, a: &Alarm) {
    out.push_str("(Alarm :destination ");
    write_aid(out, &a.destination);
    out.push_str(" :priority ");
    out.push_str(&a.priority.to_string());
    out.push_str(" :text ");
    write_quoted(out, &a.text);
    out.push_str(" :var ");
    write_variable(out, &a.var);
    out.push(')');
}

fn write_process(out: &mut String, cp: &ControlProcess) {
    out.push_str("(ControlProcess :name ");
    write_token(out, &cp.name);
    out.push_str(" :variables ");
    write_sequence(out, &cp.variables, write_variable);
    out.push(')');
}

fn needs_quotes(s: &str) -> bool {
    s.is_empty()
        || s.starts_with(':')
        || s.chars()
            .any(|c| c.is_whitespace() || matches!(c, '(' | ')' | '"'))
}

fn write_token(out: &mut String, s: &str) {
    if needs_quotes(s) {
        write_quoted(out, s);
    } else {
        out.push_str(s);
    }
}

fn write_quoted(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        if matches!(c, '"' | '\\') {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
}

// ---------------------------------------------------------------------------
// Schema checks shared by both directions

fn check_content(content: &Content) -> Result<()> {
    if content.elements().is_empty() {
        return Err(SlError::schema(None, "content has no expressions"));
    }
    for element in content.elements() {
        match element {
            ContentElement::Action { actor, action } => {
                check_aid(actor, None)?;
                check_action(action, None)?;
            }
            ContentElement::Predicate(p) => match p {
                Predicate::IsHigh(v)
                | Predicate::IsLow(v)
                | Predicate::IsLocal(v)
                | Predicate::IsVariable(v) => check_variable(v, None)?,
                Predicate::IsLocatedin(v, cp) => {
                    check_variable(v, None)?;
                    check_process(cp, None)?;
                }
                Predicate::IsControlProcess(cp) => check_process(cp, None)?,
                Predicate::ListOfVariables(vs) => {
                    for v in vs {
                        check_variable(v, None)?;
                    }
                }
                Predicate::ListOfAlarms(alarms) => {
                    for a in alarms {
                        check_alarm(a, None)?;
                    }
                }
            },
        }
    }
    Ok(())
}

fn check_aid(aid: &Aid, at: Option<usize>) -> Result<()> {
    aid.validate()
        .map_err(|e| SlError::schema(at, e.to_string()))
}

fn check_finite(name: &str, v: f64, at: Option<usize>) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(SlError::schema(at, format!("slot `{name}` must be finite")))
    }
}

fn check_variable(v: &Variable, at: Option<usize>) -> Result<()> {
    if v.symbol.is_empty() {
        return Err(SlError::schema(at, "Variable symbol is empty"));
    }
    check_finite("lowLimit", v.low_limit, at)?;
    check_finite("highLimit", v.high_limit, at)?;
    check_finite("PV", v.pv, at)?;
    check_finite("SP", v.sp, at)?;
    if v.low_limit >= v.high_limit {
        return Err(SlError::schema(
            at,
            format!("Variable `{}` has lowLimit >= highLimit", v.symbol),
        ));
    }
    Ok(())
}

fn check_alarm(a: &Alarm, at: Option<usize>) -> Result<()> {
    check_aid(&a.destination, at)?;
    check_variable(&a.var, at)
}

fn check_process(cp: &ControlProcess, at: Option<usize>) -> Result<()> {
    if cp.name.is_empty() {
        return Err(SlError::schema(at, "ControlProcess name is empty"));
    }
    for (i, v) in cp.variables.iter().enumerate() {
        check_variable(v, at)?;
        if cp.variables[..i].iter().any(|o| o.symbol == v.symbol) {
            return Err(SlError::schema(
                at,
                format!("duplicate symbol `{}` in process `{}`", v.symbol, cp.name),
            ));
        }
    }
    Ok(())
}

fn check_action(action: &AgentAction, at: Option<usize>) -> Result<()> {
    match action {
        AgentAction::SetVariable {
            variable_address,
            value,
        } => {
            if variable_address.is_empty() {
                return Err(SlError::schema(at, "SetVariable address is empty"));
            }
            check_finite("value", *value, at)
        }
        AgentAction::GetVariable(VariableRef::Symbol(s) | VariableRef::Address(s))
        | AgentAction::LocateVariable { symbol: s } => {
            if s.is_empty() {
                Err(SlError::schema(at, "variable reference is empty"))
            } else {
                Ok(())
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Lexing into a small tree

#[derive(Debug)]
enum Node {
    Atom { text: String, at: usize },
    Str { text: String, at: usize },
    List { items: Vec<Node>, at: usize },
}

impl Node {
    fn at(&self) -> usize {
        match self {
            Node::Atom { at, .. } | Node::Str { at, .. } | Node::List { at, .. } => *at,
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn err<T>(&self, at: usize, message: impl Into<String>) -> Result<T> {
        Err(SlError::Parse {
            offset: at,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn node(&mut self) -> Result<Node> {
        self.skip_ws();
        let at = self.pos;
        match self.peek() {
            None => self.err(at, "unexpected end of input"),
            Some(')') => self.err(at, "unexpected `)`"),
            Some('(') => {
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.peek() {
                        None => return self.err(at, "unclosed `(`"),
                        Some(')') => {
                            self.pos += 1;
                            return Ok(Node::List { items, at });
                        }
                        Some(_) => items.push(self.node()?),
                    }
                }
            }
            Some('"') => {
                self.pos += 1;
                let mut text = String::new();
                loop {
                    let Some(c) = self.peek() else {
                        return self.err(at, "unterminated string");
                    };
                    self.pos += c.len_utf8();
                    match c {
                        '"' => return Ok(Node::Str { text, at }),
                        '\\' => match self.peek() {
                            Some(e @ ('"' | '\\')) => {
                                self.pos += 1;
                                text.push(e);
                            }
                            _ => text.push('\\'),
                        },
                        c => text.push(c),
                    }
                }
            }
            Some(_) => {
                while let Some(c) = self.peek() {
                    if c.is_whitespace() || matches!(c, '(' | ')' | '"') {
                        break;
                    }
                    self.pos += c.len_utf8();
                }
                Ok(Node::Atom {
                    text: self.src[at..self.pos].to_string(),
                    at,
                })
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Decoding

/// Parses SL text into structured content.
pub fn parse_sl(text: &str) -> Result<Content> {
    let mut lexer = Lexer { src: text, pos: 0 };
    let root = lexer.node()?;
    lexer.skip_ws();
    if lexer.pos != text.len() {
        return lexer.err(lexer.pos, "trailing input after content");
    }
    let Node::List { items, at } = root else {
        return Err(SlError::schema(
            Some(root.at()),
            "content must be a parenthesized list of expressions",
        ));
    };
    if items.is_empty() {
        return Err(SlError::schema(Some(at), "content has no expressions"));
    }
    let elements = items
        .iter()
        .map(decode_element)
        .collect::<Result<Vec<_>>>()?;
    Ok(Content(elements))
}

fn head(node: &Node) -> Result<(&str, &[Node])> {
    match node {
        Node::List { items, at } => match items.first() {
            Some(Node::Atom { text, .. }) => Ok((text.as_str(), &items[1..])),
            _ => Err(SlError::schema(Some(*at), "expression has no head symbol")),
        },
        other => Err(SlError::schema(Some(other.at()), "expected an expression")),
    }
}

fn arity(node: &Node, name: &str, args: &[Node], n: usize) -> Result<()> {
    if args.len() == n {
        Ok(())
    } else {
        Err(SlError::schema(
            Some(node.at()),
            format!("`{name}` takes {n} argument(s), got {}", args.len()),
        ))
    }
}

fn decode_element(node: &Node) -> Result<ContentElement> {
    let (name, args) = head(node)?;
    let one = |args: &[Node]| -> Result<Variable> {
        arity(node, name, args, 1)?;
        decode_variable(&args[0])
    };
    let p = match name {
        "action" => {
            arity(node, name, args, 2)?;
            return Ok(ContentElement::Action {
                actor: decode_aid(&args[0])?,
                action: decode_action(&args[1])?,
            });
        }
        "IsHigh" => Predicate::IsHigh(one(args)?),
        "IsLow" => Predicate::IsLow(one(args)?),
        "IsLocal" => Predicate::IsLocal(one(args)?),
        "IsVariable" => Predicate::IsVariable(one(args)?),
        "IsLocatedin" => {
            arity(node, name, args, 2)?;
            Predicate::IsLocatedin(decode_variable(&args[0])?, decode_process(&args[1])?)
        }
        "IsControlProcess" => {
            arity(node, name, args, 1)?;
            Predicate::IsControlProcess(decode_process(&args[0])?)
        }
        "ListOfVariables" => {
            arity(node, name, args, 1)?;
            Predicate::ListOfVariables(
                sequence(&args[0])?
                    .iter()
                    .map(decode_variable)
                    .collect::<Result<_>>()?,
            )
        }
        "ListOfAlarms" => {
            arity(node, name, args, 1)?;
            Predicate::ListOfAlarms(
                sequence(&args[0])?
                    .iter()
                    .map(decode_alarm)
                    .collect::<Result<_>>()?,
            )
        }
        other => {
            return Err(SlError::schema(
                Some(node.at()),
                format!("unknown expression `{other}` in icn-ontology"),
            ))
        }
    };
    Ok(ContentElement::Predicate(p))
}

/// Slots of one frame, checked against the frame's schema.
struct Frame<'n> {
    name: &'static str,
    at: usize,
    slots: Vec<(&'static str, &'n Node)>,
}

impl<'n> Frame<'n> {
    fn parse(node: &'n Node, name: &'static str, allowed: &[&'static str]) -> Result<Self> {
        let (found, rest) = head(node)?;
        if found != name {
            return Err(SlError::schema(
                Some(node.at()),
                format!("expected `{name}`, found `{found}`"),
            ));
        }
        let mut slots: Vec<(&'static str, &'n Node)> = Vec::new();
        let mut it = rest.iter();
        while let Some(key) = it.next() {
            let Node::Atom { text, at } = key else {
                return Err(SlError::schema(
                    Some(key.at()),
                    format!("expected a slot name in `{name}`"),
                ));
            };
            let bare = text.strip_prefix(':').unwrap_or(text);
            let Some(slot) = allowed.iter().copied().find(|s| *s == bare) else {
                return Err(SlError::schema(
                    Some(*at),
                    format!("unknown slot `{text}` in `{name}`"),
                ));
            };
            if slots.iter().any(|(s, _)| *s == slot) {
                return Err(SlError::schema(
                    Some(*at),
                    format!("duplicate slot `{slot}` in `{name}`"),
                ));
            }
            let Some(value) = it.next() else {
                return Err(SlError::schema(
                    Some(*at),
                    format!("slot `{slot}` in `{name}` has no value"),
                ));
            };
            slots.push((slot, value));
        }
        Ok(Frame {
            name,
            at: node.at(),
            slots,
        })
    }

    fn get(&self, slot: &str) -> Option<&'n Node> {
        self.slots.iter().find(|(s, _)| *s == slot).map(|(_, n)| *n)
    }

    fn req(&self, slot: &str) -> Result<&'n Node> {
        self.get(slot).ok_or_else(|| {
            SlError::schema(
                Some(self.at),
                format!("`{}` is missing slot `{slot}`", self.name),
            )
        })
    }
}

fn token(node: &Node) -> Result<String> {
    match node {
        Node::Atom { text, .. } | Node::Str { text, .. } => Ok(text.clone()),
        Node::List { at, .. } => Err(SlError::schema(Some(*at), "expected a token")),
    }
}

fn float(node: &Node) -> Result<f64> {
    match node {
        Node::Atom { text, at } => match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(SlError::schema(Some(*at), format!("`{text}` is not a finite number"))),
        },
        other => Err(SlError::schema(Some(other.at()), "expected a number")),
    }
}

fn integer(node: &Node) -> Result<u32> {
    match node {
        Node::Atom { text, at } => text
            .parse::<u32>()
            .map_err(|_| SlError::schema(Some(*at), format!("`{text}` is not a non-negative integer"))),
        other => Err(SlError::schema(Some(other.at()), "expected an integer")),
    }
}

fn sequence(node: &Node) -> Result<&[Node]> {
    match head(node)? {
        ("sequence", items) => Ok(items),
        (other, _) => Err(SlError::schema(
            Some(node.at()),
            format!("expected `sequence`, found `{other}`"),
        )),
    }
}

fn decode_aid(node: &Node) -> Result<Aid> {
    let f = Frame::parse(node, "agent-identifier", &["name", "addresses"])?;
    let addresses = match f.get("addresses") {
        Some(n) => sequence(n)?.iter().map(token).collect::<Result<_>>()?,
        None => Vec::new(),
    };
    let aid = Aid {
        name: token(f.req("name")?)?,
        addresses,
    };
    check_aid(&aid, Some(node.at()))?;
    Ok(aid)
}

fn decode_action(node: &Node) -> Result<AgentAction> {
    let (name, _) = head(node)?;
    let action = match name {
        "SetVariable" => {
            let f = Frame::parse(node, "SetVariable", &["variableAddress", "value"])?;
            AgentAction::SetVariable {
                variable_address: token(f.req("variableAddress")?)?,
                value: float(f.req("value")?)?,
            }
        }
        "GetVariable" => {
            let f = Frame::parse(node, "GetVariable", &["symbol", "variableAddress"])?;
            match (f.get("symbol"), f.get("variableAddress")) {
                (Some(s), None) => AgentAction::GetVariable(VariableRef::Symbol(token(s)?)),
                (None, Some(a)) => AgentAction::GetVariable(VariableRef::Address(token(a)?)),
                _ => {
                    return Err(SlError::schema(
                        Some(node.at()),
                        "GetVariable needs exactly one of :symbol or :variableAddress",
                    ))
                }
            }
        }
        "LocateVariable" => {
            let f = Frame::parse(node, "LocateVariable", &["symbol"])?;
            AgentAction::LocateVariable {
                symbol: token(f.req("symbol")?)?,
            }
        }
        other => {
            return Err(SlError::schema(
                Some(node.at()),
                format!("unknown agent action `{other}`"),
            ))
        }
    };
    check_action(&action, Some(node.at()))?;
    Ok(action)
}

const VARIABLE_SLOTS: [&str; 7] = [
    "lowLimit",
    "highLimit",
    "addressPV",
    "addressSP",
    "symbol",
    "PV",
    "SP",
];

fn decode_variable(node: &Node) -> Result<Variable> {
    let f = Frame::parse(node, "Variable", &VARIABLE_SLOTS)?;
    let v = Variable {
        symbol: token(f.req("symbol")?)?,
        address_pv: token(f.req("addressPV")?)?,
        address_sp: token(f.req("addressSP")?)?,
        low_limit: float(f.req("lowLimit")?)?,
        high_limit: float(f.req("highLimit")?)?,
        pv: float(f.req("PV")?)?,
        sp: float(f.req("SP")?)?,
    };
    check_variable(&v, Some(node.at()))?;
    Ok(v)
}

fn decode_alarm(node: &Node) -> Result<Alarm> {
    let f = Frame::parse(node, "Alarm", &["destination", "priority", "text", "var"])?;
    Ok(Alarm {
        destination: decode_aid(f.req("destination")?)?,
        priority: integer(f.req("priority")?)?,
        text: token(f.req("text")?)?,
        var: decode_variable(f.req("var")?)?,
    })
}

fn decode_process(node: &Node) -> Result<ControlProcess> {
    let f = Frame::parse(node, "ControlProcess", &["name", "variables"])?;
    let variables = match f.get("variables") {
        Some(n) => sequence(n)?
            .iter()
            .map(decode_variable)
            .collect::<Result<_>>()?,
        None => Vec::new(),
    };
    let cp = ControlProcess {
        name: token(f.req("name")?)?,
        variables,
    };
    check_process(&cp, Some(node.at()))?;
    Ok(cp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var4() -> Variable {
        Variable {
            symbol: "PLC1Variable4".into(),
            address_pv: "s7:[LOCALSERVER]db1,w6".into(),
            address_sp: "s7:[LOCALSERVER]db1,w26".into(),
            low_limit: 0.0,
            high_limit: 1000.0,
            pv: 360.0,
            sp: 334.0,
        }
    }

    #[test]
    fn empty_alarm_list() {
        let c = Content::predicate(Predicate::ListOfAlarms(vec![]));
        assert_eq!(encode_sl(&c).unwrap(), "((ListOfAlarms (sequence)))");
        assert_eq!(parse_sl("((ListOfAlarms (sequence)))").unwrap(), c);
        assert_eq!(parse_sl("  (\n( ListOfAlarms\t(sequence ) )\n) ").unwrap(), c);
    }

    #[test]
    fn get_variable_by_symbol_or_address() {
        let actor = Aid::new("c1@SCADA").unwrap();
        for r in [
            VariableRef::Symbol("PLC1Var4".into()),
            VariableRef::Address("s7:[LOCALSERVER]db1,w6".into()),
        ] {
            let c = Content::action(actor.clone(), AgentAction::GetVariable(r));
            assert_eq!(parse_sl(&encode_sl(&c).unwrap()).unwrap(), c);
        }
        let both = "((action (agent-identifier :name c1@SCADA) (GetVariable :symbol a :variableAddress b)))";
        assert!(matches!(parse_sl(both), Err(SlError::SchemaViolation { .. })));
    }

    #[test]
    fn bare_slot_name_accepted_only_for_known_slots() {
        let ok = "((IsVariable (Variable :lowLimit 0.0 highLimit 1000.0 :addressPV a :addressSP b :symbol s :PV 1.0 :SP 2.0)))";
        let c = parse_sl(ok).unwrap();
        let Some(Predicate::IsVariable(v)) = c.first_predicate() else { panic!() };
        assert_eq!(v.high_limit, 1000.0);
        let bad = "((IsVariable (Variable :lowLimit 0.0 bogus 1000.0 :addressPV a :addressSP b :symbol s :PV 1.0 :SP 2.0)))";
        assert!(matches!(parse_sl(bad), Err(SlError::SchemaViolation { .. })));
    }

    #[test]
    fn unknown_forms_and_slots_rejected() {
        for text in [
            "((IsWarm (Variable :lowLimit 0.0 :highLimit 1.0 :addressPV a :addressSP b :symbol s :PV 1.0 :SP 2.0)))",
            "((action (agent-identifier :name c1@SCADA) (DeleteVariable :symbol x)))",
            "((ListOfAlarms (list)))",
            "((action (agent-identifier :name c1@SCADA :colour red) (LocateVariable :symbol x)))",
            "((IsVariable (Variable :lowLimit 5.0 :highLimit 1.0 :addressPV a :addressSP b :symbol s :PV 1.0 :SP 2.0)))",
            "((action (agent-identifier :name c1) (LocateVariable :symbol x)))",
            "((action (agent-identifier :name c1@SCADA) (SetVariable :variableAddress a :value inf)))",
            "()",
        ] {
            assert!(
                matches!(parse_sl(text), Err(SlError::SchemaViolation { .. })),
                "{text}"
            );
        }
    }

    #[test]
    fn parse_errors_carry_offsets() {
        assert_eq!(
            parse_sl("((ListOfAlarms (sequence))"),
            Err(SlError::Parse {
                offset: 0,
                message: "unclosed `(`".into()
            })
        );
        match parse_sl("((ListOfAlarms (sequence))) x") {
            Err(SlError::Parse { offset, .. }) => assert_eq!(offset, 28),
            other => panic!("{other:?}"),
        }
        match parse_sl("((IsVariable \"abc") {
            Err(SlError::Parse { offset, .. }) => assert_eq!(offset, 13),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_sl(")"), Err(SlError::Parse { offset: 0, .. })));
        assert!(matches!(parse_sl(""), Err(SlError::Parse { offset: 0, .. })));
    }

    #[test]
    fn tokens_quoted_when_needed() {
        let mut v = var4();
        v.symbol = "has space".into();
        v.address_pv = ":colon".into();
        v.address_sp = r#"q"uo\te"#.into();
        let c = Content::predicate(Predicate::IsLocal(v));
        let text = encode_sl(&c).unwrap();
        assert!(text.contains("\"has space\""));
        assert!(text.contains("\":colon\""));
        assert!(text.contains(r#""q\"uo\\te""#));
        assert_eq!(parse_sl(&text).unwrap(), c);
    }

    #[test]
    fn multi_element_content() {
        let cp = ControlProcess {
            name: "PLC1".into(),
            variables: vec![],
        };
        let c = Content(vec![
            Predicate::IsLocatedin(var4(), cp).into(),
            Predicate::IsLocal(var4()).into(),
        ]);
        let text = encode_sl(&c).unwrap();
        assert!(text.starts_with("((IsLocatedin (Variable"));
        assert!(text.contains(") (IsLocal (Variable"));
        assert_eq!(parse_sl(&text).unwrap(), c);
    }

    #[test]
    fn encode_rejects_schema_violations() {
        let mut v = var4();
        v.pv = f64::NAN;
        assert!(encode_sl(&Content::predicate(Predicate::IsHigh(v))).is_err());
        let c = Content::action(
            Aid::new("c1@SCADA").unwrap(),
            AgentAction::SetVariable {
                variable_address: "s7:[X]db1,w2".into(),
                value: f64::INFINITY,
            },
        );
        assert!(encode_sl(&c).is_err());
        assert!(encode_sl(&Content(vec![])).is_err());
        let dup = ControlProcess {
            name: "P".into(),
            variables: vec![var4(), var4()],
        };
        assert!(encode_sl(&Content::predicate(Predicate::IsControlProcess(dup))).is_err());
    }
}
