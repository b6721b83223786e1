//! Software twin of a multi-function lab-instrument front panel.

pub mod client;
pub mod device;
pub mod engine;
pub mod netlist;
pub mod panel;
pub mod protocol;
pub mod server;
