//! Browser bindings for a few pieces of the control network: dependency
//! curves, the simulated step response and setpoint validation.
//!
//! Each export has a plain Rust twin returning `Result<String, String>` so the
//! logic is testable off the browser. All results are JSON text.

use std::time::Duration;

use icn_core::acl::Aid;
use icn_core::alarm_text::from_epoch_millis;
use icn_core::interp::InterpolationTable;
use icn_core::ontology::{Content, Predicate, Variable};
use icn_core::plc::{ItemAddress, PlcSimulator, ProcessDynamics, ServerIdentity};
use icn_core::setpoint::{outcome_alarm, validate, Verdict};
use icn_core::sl::encode_sl;
use serde_json::json;
use wasm_bindgen::prelude::*;

const MAX_SAMPLES: u32 = 100_000;

/// `points` is a JSON array of `[x, y]` knots. Returns `[[x, y], ...]`
/// sampled at `samples` evenly spaced inputs spanning the knots.
pub fn curve(points: &str, samples: u32) -> Result<String, String> {
    let knots: Vec<(f64, f64)> = serde_json::from_str(points).map_err(|e| format!("points: {e}"))?;
    let table = InterpolationTable::new(knots).map_err(|e| e.to_string())?;
    if !(2..=MAX_SAMPLES).contains(&samples) {
        return Err(format!("samples must be in 2..={MAX_SAMPLES}"));
    }
    let pts = table.points();
    let (x0, x1) = (pts[0].0, pts[pts.len() - 1].0);
    let rows: Vec<[f64; 2]> = (0..samples)
        .map(|i| {
            let x = x0 + (x1 - x0) * i as f64 / (samples - 1) as f64;
            [x, table.interpolate(x)]
        })
        .collect();
    Ok(serde_json::to_string(&rows).unwrap())
}

/// Runs one simulated variable at rest on `from`, steps its SP to `to` and
/// records `[t_ms, pv]` every tick for `duration_s` seconds.
#[allow(clippy::too_many_arguments)]
pub fn step(
    low: f64,
    high: f64,
    from: f64,
    to: f64,
    tau_s: f64,
    noise: f64,
    seed: u64,
    duration_s: f64,
    tick_ms: u32,
) -> Result<String, String> {
    if !(tau_s.is_finite() && tau_s > 0.0) {
        return Err("tau must be positive".into());
    }
    if tick_ms == 0 || !(duration_s.is_finite() && duration_s >= 0.0) {
        return Err("tick and duration must be positive".into());
    }
    let n = (duration_s * 1000.0 / tick_ms as f64).floor();
    if n > MAX_SAMPLES as f64 {
        return Err(format!("more than {MAX_SAMPLES} ticks requested"));
    }
    let pv = ItemAddress::parse("s7:[LOCALSERVER]db1,w2").unwrap();
    let sp = ItemAddress::parse("s7:[LOCALSERVER]db1,w22").unwrap();
    let plc = PlcSimulator::new(ServerIdentity::default());
    plc.write_item(&pv, from);
    plc.write_item(&sp, to);
    plc.add_dynamics(ProcessDynamics {
        pv: pv.clone(),
        sp,
        low_limit: low,
        high_limit: high,
        tau: Duration::from_secs_f64(tau_s),
        noise_amplitude: noise,
        rng_seed: seed,
    })
    .map_err(|e| e.to_string())?;
    let dt = Duration::from_millis(tick_ms as u64);
    let mut rows = vec![[0.0, from]];
    for i in 1..=n as u64 {
        plc.tick(dt);
        rows.push([(i * tick_ms as u64) as f64, plc.read_item(&pv)]);
    }
    Ok(serde_json::to_string(&rows).unwrap())
}

/// Decides a setpoint request for one variable and returns
/// `{"applied": bool, "priority": n, "text": ..., "sl": ...}` where `sl` is
/// the encoded alarm inform the control agent would send back.
#[allow(clippy::too_many_arguments)]
pub fn setpoint(
    symbol: &str,
    process: &str,
    low: f64,
    high: f64,
    pv: f64,
    sp: f64,
    value: f64,
    epoch_ms: f64,
) -> Result<String, String> {
    let mut var = Variable {
        symbol: symbol.into(),
        address_pv: "s7:[LOCALSERVER]db1,w6".into(),
        address_sp: "s7:[LOCALSERVER]db1,w26".into(),
        low_limit: low,
        high_limit: high,
        pv,
        sp,
    };
    let verdict = validate(&var, value);
    if verdict == Verdict::Apply {
        var.sp = value;
    }
    let requester = Aid::new("R1@SCADA").map_err(|e| e.to_string())?;
    let alarm = outcome_alarm(from_epoch_millis(epoch_ms as i64), requester, process, &var, value, verdict);
    let content = Content::predicate(Predicate::ListOfAlarms(vec![alarm.clone()]));
    let sl = encode_sl(&content).map_err(|e| e.to_string())?;
    Ok(json!({
        "applied": verdict == Verdict::Apply,
        "priority": alarm.priority,
        "text": alarm.text,
        "sl": sl,
    })
    .to_string())
}

#[wasm_bindgen(js_name = interpolationCurve)]
pub fn interpolation_curve(points: &str, samples: u32) -> Result<String, JsError> {
    curve(points, samples).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = stepResponse)]
#[allow(clippy::too_many_arguments)]
pub fn step_response(
    low: f64,
    high: f64,
    from: f64,
    to: f64,
    tau_s: f64,
    noise: f64,
    seed: u32,
    duration_s: f64,
    tick_ms: u32,
) -> Result<String, JsError> {
    step(low, high, from, to, tau_s, noise, seed as u64, duration_s, tick_ms).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = validateSetpoint)]
#[allow(clippy::too_many_arguments)]
pub fn validate_setpoint(
    symbol: &str,
    process: &str,
    low: f64,
    high: f64,
    pv: f64,
    sp: f64,
    value: f64,
    epoch_ms: f64,
) -> Result<String, JsError> {
    setpoint(symbol, process, low, high, pv, sp, value, epoch_ms).map_err(|e| JsError::new(&e))
}
