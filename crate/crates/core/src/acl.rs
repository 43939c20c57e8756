//! Speech-act message envelopes exchanged between agents.
//!
//! On the wire each [`AclMessage`] is one line of JSON; the `content` field
//! carries SL text verbatim (see [`crate::sl`]).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Content language stamped on every message produced by this system.
pub const LANGUAGE: &str = "fipa-sl";
/// Ontology stamped on every message produced by this system.
pub const ONTOLOGY: &str = "icn-ontology";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AidError {
    #[error("agent name `{0}` must contain exactly one `@`")]
    MissingPlatform(String),
    #[error("agent name `{0}` has an empty local part")]
    EmptyLocal(String),
    #[error("agent name `{0}` has an empty platform part")]
    EmptyPlatform(String),
}

/// Agent identifier: `local@platform` plus transport addresses.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Aid {
    pub name: String,
    #[serde(default)]
    pub addresses: Vec<String>,
}

impl Aid {
    pub fn new(name: impl Into<String>) -> Result<Self, AidError> {
        let name = name.into();
        validate_name(&name)?;
        Ok(Aid {
            name,
            addresses: Vec::new(),
        })
    }

    pub fn local(local: &str, platform: &str) -> Result<Self, AidError> {
        Self::new(format!("{local}@{platform}"))
    }

    pub fn with_address(mut self, url: impl Into<String>) -> Self {
        self.addresses.push(url.into());
        self
    }

    pub fn local_name(&self) -> &str {
        self.name.split('@').next().unwrap_or("")
    }

    pub fn platform(&self) -> &str {
        self.name.split_once('@').map(|(_, p)| p).unwrap_or("")
    }

    pub fn validate(&self) -> Result<(), AidError> {
        validate_name(&self.name)
    }
}

fn validate_name(name: &str) -> Result<(), AidError> {
    if name.matches('@').count() != 1 {
        return Err(AidError::MissingPlatform(name.to_string()));
    }
    let (local, platform) = name.split_once('@').expect("one @");
    if local.is_empty() {
        return Err(AidError::EmptyLocal(name.to_string()));
    }
    if platform.is_empty() {
        return Err(AidError::EmptyPlatform(name.to_string()));
    }
    Ok(())
}

impl fmt::Display for Aid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Performative {
    Request,
    Inform,
    Subscribe,
    Agree,
    Refuse,
    Failure,
    NotUnderstood,
    Cancel,
}

impl Performative {
    pub const ALL: [Performative; 8] = [
        Performative::Request,
        Performative::Inform,
        Performative::Subscribe,
        Performative::Agree,
        Performative::Refuse,
        Performative::Failure,
        Performative::NotUnderstood,
        Performative::Cancel,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Performative::Request => "REQUEST",
            Performative::Inform => "INFORM",
            Performative::Subscribe => "SUBSCRIBE",
            Performative::Agree => "AGREE",
            Performative::Refuse => "REFUSE",
            Performative::Failure => "FAILURE",
            Performative::NotUnderstood => "NOT_UNDERSTOOD",
            Performative::Cancel => "CANCEL",
        }
    }
}

impl fmt::Display for Performative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Performative {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Performative::ALL
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown performative `{s}`"))
    }
}

#[derive(Debug, Error)]
pub enum EnvelopeError {
    #[error("message has no receivers")]
    NoReceivers,
    #[error("invalid agent identifier: {0}")]
    Aid(#[from] AidError),
    #[error("malformed envelope: {0}")]
    Json(#[from] serde_json::Error),
}

/// A speech-act message. Field names are exactly the wire field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AclMessage {
    pub performative: Performative,
    pub sender: Aid,
    pub receivers: Vec<Aid>,
    pub content: String,
    pub language: String,
    pub ontology: String,
    pub conversation_id: String,
    pub reply_with: String,
    #[serde(default)]
    pub in_reply_to: Option<String>,
}

impl AclMessage {
    pub fn new(performative: Performative, sender: Aid) -> Self {
        AclMessage {
            performative,
            sender,
            receivers: Vec::new(),
            content: String::new(),
            language: LANGUAGE.to_string(),
            ontology: ONTOLOGY.to_string(),
            conversation_id: String::new(),
            reply_with: String::new(),
            in_reply_to: None,
        }
    }

    pub fn to(mut self, receiver: Aid) -> Self {
        self.receivers.push(receiver);
        self
    }

    pub fn with_content(mut self, content: impl Into<String>) -> Self {
        self.content = content.into();
        self
    }

    pub fn with_conversation(mut self, id: impl Into<String>) -> Self {
        self.conversation_id = id.into();
        self
    }

    pub fn with_reply_with(mut self, token: impl Into<String>) -> Self {
        self.reply_with = token.into();
        self
    }

    /// Builds a reply addressed to this message's sender, continuing its
    /// conversation.
    pub fn reply(&self, performative: Performative, sender: Aid) -> AclMessage {
        let mut reply = AclMessage::new(performative, sender).to(self.sender.clone());
        reply.conversation_id = self.conversation_id.clone();
        if !self.reply_with.is_empty() {
            reply.in_reply_to = Some(self.reply_with.clone());
        }
        reply
    }

    /// Checks the invariants every outgoing message must satisfy.
    pub fn validate(&self) -> Result<(), EnvelopeError> {
        if self.receivers.is_empty() {
            return Err(EnvelopeError::NoReceivers);
        }
        self.sender.validate()?;
        for r in &self.receivers {
            r.validate()?;
        }
        Ok(())
    }

    /// One newline-free JSON line.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("envelope serializes")
    }

    pub fn from_json_line(line: &str) -> Result<Self, EnvelopeError> {
        let msg: AclMessage = serde_json::from_str(line.trim_end())?;
        msg.sender.validate()?;
        Ok(msg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aid_parts() {
        let aid = Aid::new("c1@SCADA").unwrap();
        assert_eq!(aid.local_name(), "c1");
        assert_eq!(aid.platform(), "SCADA");
        assert!(Aid::new("c1").is_err());
        assert!(Aid::new("@SCADA").is_err());
        assert!(Aid::new("a@b@c").is_err());
        assert!(Aid::new("c1@").is_err());
    }

    #[test]
    fn performative_names() {
        for p in Performative::ALL {
            assert_eq!(p.as_str().parse::<Performative>().unwrap(), p);
            let json = serde_json::to_string(&p).unwrap();
            assert_eq!(json, format!("\"{}\"", p.as_str()));
        }
    }

    #[test]
    fn json_line_has_wire_field_names() {
        let sender = Aid::new("R1@SCADA")
            .unwrap()
            .with_address("http://scada:7778/acc");
        let msg = AclMessage::new(Performative::Request, sender)
            .to(Aid::new("c1@SCADA").unwrap())
            .with_content("((ListOfAlarms (sequence)))")
            .with_conversation("sp-1")
            .with_reply_with("r1");
        let line = msg.to_json_line();
        assert!(!line.contains('\n'));
        let value: serde_json::Value = serde_json::from_str(&line).unwrap();
        let mut keys: Vec<_> = value.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(
            keys,
            [
                "content",
                "conversation_id",
                "in_reply_to",
                "language",
                "ontology",
                "performative",
                "receivers",
                "reply_with",
                "sender"
            ]
        );
        assert_eq!(value["language"], "fipa-sl");
        assert_eq!(value["ontology"], "icn-ontology");
        assert_eq!(AclMessage::from_json_line(&line).unwrap(), msg);
    }

    #[test]
    fn reply_continues_conversation() {
        let r1 = Aid::new("R1@SCADA").unwrap();
        let c1 = Aid::new("c1@SCADA").unwrap();
        let req = AclMessage::new(Performative::Request, r1.clone())
            .to(c1.clone())
            .with_conversation("conv-7")
            .with_reply_with("q1");
        let rep = req.reply(Performative::Inform, c1);
        assert_eq!(rep.receivers, vec![r1]);
        assert_eq!(rep.conversation_id, "conv-7");
        assert_eq!(rep.in_reply_to.as_deref(), Some("q1"));
        assert!(rep.validate().is_ok());
        assert!(matches!(
            AclMessage::new(Performative::Inform, Aid::new("x@y").unwrap()).validate(),
            Err(EnvelopeError::NoReceivers)
        ));
    }
}
