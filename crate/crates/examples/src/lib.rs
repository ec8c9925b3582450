//! Example choreographies: a bookseller, and a key-value store with
//! pluggable replication. The `choreo-examples` binary runs them.

pub mod bookseller;
pub mod cli;
pub mod config;
pub mod kvs;
pub mod show;
