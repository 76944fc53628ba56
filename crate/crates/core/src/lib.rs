//! Exact moments of Bernoulli sums.

pub mod bernoulli;
pub mod cli;
pub mod combinat;
pub mod distributions;
pub mod genfun;
pub mod oracle;
pub mod tail_moments;
