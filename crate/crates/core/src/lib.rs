//! Domain core of the agent-based industrial control network.
//!
//! Everything in this crate is free of threads and I/O (apart from scenario
//! file loading), so it also compiles for the browser demo:
//!
//! * [`acl`]: speech-act envelopes and agent identifiers.
//! * [`ontology`] and [`sl`]: the application ontology and its SL text codec.
//! * [`alarm_text`]: asctime-stamped operator alarm lines.
//! * [`plc`]: the simulated PLC / OPC item layer with process dynamics.
//! * [`interp`]: interpolation tables and variable dependency links.
//! * [`setpoint`]: operator setpoint validation rules and alarm wording.
//! * [`scenario`]: scenario files, defaults and validation.

pub mod acl;
pub mod alarm_text;
mod float;
pub mod interp;
pub mod ontology;
pub mod plc;
pub mod scenario;
pub mod setpoint;
pub mod sl;

pub use float::format_float;
