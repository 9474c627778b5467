//! Command-line front end for `polar-bohm`: JSON scenarios, equilibria
//! reports and the self-verification suite.

pub mod config;
pub mod equilibria;
pub mod output;
pub mod run;
pub mod verify;
