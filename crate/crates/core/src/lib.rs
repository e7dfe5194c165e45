//! Neurogenetic program synthesis.
//!
//! A team of developers (genetic, neural and dummy) takes turns proposing
//! programs in a small tape language. Each proposal is run for one episode in
//! an environment, the reward is stored in a shared codebase, and the
//! developer learns from it.

pub mod lang;
pub mod pomdp;
pub mod codebase;
pub mod genetic;
pub mod neural;
pub mod scrum;
