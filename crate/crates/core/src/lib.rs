pub mod batch;
pub mod cli;
pub mod netmodel;
pub mod protocols;
pub mod qmaps;
pub mod qstate;
pub mod registry;
pub mod sim;
pub mod trace;
