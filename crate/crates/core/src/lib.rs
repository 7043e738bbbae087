//! Radial solutions of the coupled k-Hessian system
//! `S_k(D^2 u) = |Du|^m v^p`, `S_k(D^2 v) = |Du|^q v^s`.

pub mod asymptotics;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod ode;
pub mod picard;
pub mod radial;

pub use config::{
    classify, classify_sigma, validate, DerivedConstants, ExponentConfig, Regime, RegimeTag,
};
pub use error::{Error, Result};
