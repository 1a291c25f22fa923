//! Independent reference implementations used only by tests.
#![allow(dead_code)]

pub mod double_double;
pub mod max_margin;
pub mod normal_integral;
