use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("address syntax error at byte {offset} in `{text}`: expected {expected}")]
pub struct AddressSyntax {
    pub text: String,
    pub offset: usize,
    pub expected: &'static str,
}

/// An OPC item connection string, `s7:[<server>]db<N>,w<M>`.
///
/// The scheme is matched case-insensitively but kept as written so that
/// rendering reproduces the parsed text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ItemAddress {
    pub scheme: String,
    pub server: String,
    pub db: u32,
    pub word: u32,
}

/// Storage identity of an address: server compared case-insensitively with
/// any leading `@` dropped.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellKey {
    pub server: String,
    pub db: u32,
    pub word: u32,
}

impl ItemAddress {
    pub fn new(server: impl Into<String>, db: u32, word: u32) -> Self {
        ItemAddress {
            scheme: "s7".into(),
            server: server.into(),
            db,
            word,
        }
    }

    pub fn parse(text: &str) -> Result<Self, AddressSyntax> {
        let err = |offset, expected| AddressSyntax {
            text: text.to_string(),
            offset,
            expected,
        };
        let scheme = text.get(..2).filter(|s| s.eq_ignore_ascii_case("s7"));
        let Some(scheme) = scheme else {
            return Err(err(0, "scheme `s7`"));
        };
        let mut pos = 2;
        if !text[pos..].starts_with(":[") {
            return Err(err(pos, "`:[`"));
        }
        pos += 2;
        let close = text[pos..]
            .find(']')
            .ok_or_else(|| err(text.len(), "`]` closing the server"))?;
        if close == 0 {
            return Err(err(pos, "a server name"));
        }
        let server = &text[pos..pos + close];
        pos += close + 1;
        if !text[pos..].starts_with("db") {
            return Err(err(pos, "`db`"));
        }
        pos += 2;
        let (db, used) = number(&text[pos..]).ok_or_else(|| err(pos, "a block number"))?;
        pos += used;
        if !text[pos..].starts_with(",w") {
            return Err(err(pos, "`,w`"));
        }
        pos += 2;
        let (word, used) = number(&text[pos..]).ok_or_else(|| err(pos, "a word offset"))?;
        pos += used;
        if pos != text.len() {
            return Err(err(pos, "end of address"));
        }
        Ok(ItemAddress {
            scheme: scheme.to_string(),
            server: server.to_string(),
            db,
            word,
        })
    }

    pub fn key(&self) -> CellKey {
        CellKey {
            server: self.server.trim_start_matches('@').to_ascii_uppercase(),
            db: self.db,
            word: self.word,
        }
    }
}

/// Decimal digits without sign or superfluous leading zeros.
fn number(s: &str) -> Option<(u32, usize)> {
    let len = s.bytes().take_while(u8::is_ascii_digit).count();
    if len == 0 || (len > 1 && s.starts_with('0')) {
        return None;
    }
    s[..len].parse().ok().map(|n| (n, len))
}

impl fmt::Display for ItemAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:[{}]db{},w{}", self.scheme, self.server, self.db, self.word)
    }
}

impl FromStr for ItemAddress {
    type Err = AddressSyntax;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ItemAddress::parse(s)
    }
}
