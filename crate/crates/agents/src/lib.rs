//! Agents for an industrial control network: the agent runtime, control
//! agents bound to simulated PLCs, the operator gateway and the scenario
//! runner.

pub mod control;
pub mod gateway;
pub mod runner;
pub mod runtime;
