pub mod error;
pub mod exact;
pub mod geometry;
pub mod group;
pub mod instances;
pub mod case1;
pub mod case2;
pub mod trace;
pub mod run;
pub mod verifier;
pub mod cli;
