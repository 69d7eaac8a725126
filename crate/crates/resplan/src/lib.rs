//! Scenario files, exports and the command-line front end for
//! [`resplan_core`].

pub mod clarabel_backend;
pub mod cli;
pub mod lp_format;
pub mod minilp_backend;
pub mod scenario_file;
