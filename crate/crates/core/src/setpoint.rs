//! Operator setpoint rules shared by the control agent and the demo.

use chrono::{DateTime, Utc};

use crate::acl::Aid;
use crate::alarm_text::format_alarm_text;
use crate::format_float;
use crate::ontology::{Alarm, Variable};

/// Alarm priorities; lower is more urgent.
pub const PRIORITY_LIMIT: u32 = 0;
pub const PRIORITY_REJECTED: u32 = 1;
pub const PRIORITY_FORWARDED: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Apply,
    Reject,
}

/// Setpoints on the limits are legal: `low <= value <= high`.
pub fn validate(var: &Variable, value: f64) -> Verdict {
    if value.is_finite() && var.in_range(value) {
        Verdict::Apply
    } else {
        Verdict::Reject
    }
}

pub fn forwarded_message(value: f64, process: &str) -> String {
    format!(
        "New SP ({}) was forwarded to control process {process}",
        format_float(value)
    )
}

pub fn rejected_message(value: f64, low: f64, high: f64) -> String {
    format!(
        "New SP ({}) rejected: out of range [{}, {}]",
        format_float(value),
        format_float(low),
        format_float(high)
    )
}

/// The alarm sent back to the requester once a setpoint request has been
/// decided. `var` must already reflect the outcome (new SP on apply).
pub fn outcome_alarm(
    now: DateTime<Utc>,
    requester: Aid,
    process: &str,
    var: &Variable,
    value: f64,
    verdict: Verdict,
) -> Alarm {
    let (priority, message) = match verdict {
        Verdict::Apply => (PRIORITY_FORWARDED, forwarded_message(value, process)),
        Verdict::Reject => (
            PRIORITY_REJECTED,
            rejected_message(value, var.low_limit, var.high_limit),
        ),
    };
    Alarm {
        destination: requester,
        priority,
        text: format_alarm_text(now, &var.symbol, &message),
        var: var.clone(),
    }
}

/// Alarm raised when a PV leaves its range (strictly above or below).
pub fn limit_alarm(now: DateTime<Utc>, destination: Aid, var: &Variable) -> Option<Alarm> {
    let message = if var.pv > var.high_limit {
        format!(
            "PV ({}) is high: above limit {}",
            format_float(var.pv),
            format_float(var.high_limit)
        )
    } else if var.pv < var.low_limit {
        format!(
            "PV ({}) is low: below limit {}",
            format_float(var.pv),
            format_float(var.low_limit)
        )
    } else {
        return None;
    };
    Some(Alarm {
        destination,
        priority: PRIORITY_LIMIT,
        text: format_alarm_text(now, &var.symbol, &message),
        var: var.clone(),
    })
}
