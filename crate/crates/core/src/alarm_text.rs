//! Operator alarm lines: `<asctime> |'<symbol>' <message>`.

use chrono::{DateTime, NaiveDateTime, Utc};
use thiserror::Error;

const ASCTIME: &str = "%a %b %e %H:%M:%S %Y";

/// C-library `asctime` rendering without the trailing newline, e.g.
/// `Thu Jan  1 00:00:00 1970`.
pub fn asctime(t: DateTime<Utc>) -> String {
    t.format(ASCTIME).to_string()
}

pub fn format_alarm_text(now: DateTime<Utc>, symbol: &str, message: &str) -> String {
    format!("{} |'{}' {}", asctime(now), symbol, message)
}

/// Epoch milliseconds to a UTC timestamp; out-of-range values saturate at
/// the epoch.
pub fn from_epoch_millis(ms: i64) -> DateTime<Utc> {
    DateTime::from_timestamp_millis(ms).unwrap_or(DateTime::UNIX_EPOCH)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed alarm text: {0}")]
pub struct AlarmTextError(pub &'static str);

/// Splits an alarm line back into its timestamp (second resolution), symbol
/// and message.
pub fn parse_alarm_text(text: &str) -> Result<(DateTime<Utc>, String, String), AlarmTextError> {
    let (stamp, rest) = text
        .split_once(" |'")
        .ok_or(AlarmTextError("missing ` |'` separator"))?;
    let t = NaiveDateTime::parse_from_str(stamp, ASCTIME)
        .map_err(|_| AlarmTextError("bad timestamp"))?
        .and_utc();
    let (symbol, message) = rest
        .split_once("' ")
        .ok_or(AlarmTextError("unterminated symbol"))?;
    if symbol.is_empty() || symbol.contains('\'') {
        return Err(AlarmTextError("bad symbol"));
    }
    Ok((t, symbol.to_string(), message.to_string()))
}
