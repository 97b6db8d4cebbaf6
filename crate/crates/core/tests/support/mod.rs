#![allow(dead_code)]

pub mod sched_oracle;
