pub mod band;
pub mod coin;
pub mod control;
pub mod error;
pub mod experiment;
pub mod gheat;
pub mod lil;
pub mod parallel;
pub mod payoff;
pub mod quadrature;
pub mod schedule;
pub mod strategy;
pub mod sublinear;
pub mod verdict;
