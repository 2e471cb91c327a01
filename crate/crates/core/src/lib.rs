//! Computations with singular foliations presented by polynomial vector fields.

pub mod algebroid;
pub mod bisubmersion;
pub mod catalog;
pub mod error;
pub mod exec;
pub mod fiber;
pub mod flowengine;
pub mod foliation;
pub mod fpath;
pub mod holonomy;
pub mod io;
pub mod linalg;
pub mod morphism;
pub mod sampling;
pub mod symcore;

pub use error::{Error, Result};
