pub mod assignment;
pub mod directive;
pub mod milp;
pub mod monitor;
pub mod session;
pub mod world;
