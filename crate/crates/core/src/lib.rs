//! Agent-skill routing experiments: skill repositories, prompt protocol,
//! chat backends, a POMDP disclosure controller, metrics and the evaluation
//! harness.

pub mod backend;
pub mod disclosure;
pub mod harness;
pub mod metrics;
pub mod prompt;
pub mod report;
pub mod rng;
pub mod skill_repo;
