//! File formats, experiment drivers and the `ssrlab` command line on top of
//! [`ssrlab_core`].

pub mod cli;
pub mod experiment;
pub mod format;
