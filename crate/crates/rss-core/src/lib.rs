//! Safety envelopes and certification tooling for automated vehicles:
//! closed-form safe-distance kinematics, the five-rule safety model with
//! proper responses, a scenario catalog and deterministic simulator with
//! worst-case oracles and blame assignment, an STPA/HARA analysis engine,
//! and an evidence-gated certification pipeline.

pub mod kinematics;
pub mod pipeline;
pub mod report;
pub mod rules;
pub mod scenarios;
pub mod simulator;
pub mod stpa;
