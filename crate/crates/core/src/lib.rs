//! Exact computations over the causal hierarchy of finite binary structural
//! causal models.

pub mod bounds;
pub mod causation;
pub mod error;
pub mod examples;
pub mod hierarchy;
pub mod io;
pub mod lp;
pub mod rational;
pub mod scm;
pub mod separation;
pub mod standard_form;
pub mod verify;

pub use error::{Error, Result};
pub use rational::Rational;
