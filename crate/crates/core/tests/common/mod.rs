#![allow(dead_code)]

pub mod assign_oracle;
pub mod directive_oracle;
pub mod milp_oracle;
