//! std companion of `ein-core`: file formats, random generation and the
//! property harness behind the `ein` command.

pub mod data;
pub mod doc;
pub mod envfile;
pub mod exhaustive;
pub mod gen;
pub mod harness;
pub mod trace;
pub mod witness;
