//! Networked outsourcing for `twog2t`: a TCP server that caches bases per
//! session, a client, on-disk key and bases files, and the `outsource`
//! workflow behind the `twog2t` command.

pub mod client;
pub mod files;
pub mod outsource;
pub mod server;
pub mod store;

pub use client::{Client, ClientError};
pub use outsource::{run_outsource, OutsourceConfig, OutsourceError, OutsourceReport};
pub use server::{Server, ServerConfig, ServerHandle, ServerMode};
