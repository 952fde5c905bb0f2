//! Verifiable outsourcing of multi-scalar multiplication.
//!
//! A client with fixed bases `P` runs a one-time keyed [`protocol::setup`]
//! that publishes merged bases `T`. An untrusted server answers each query
//! `x` with two group elements `(A, B)`, and the client checks them with one
//! length-`n` field inner product plus two scalar multiplications.
//!
//! Modules:
//!
//! * [`group`]: prime-order group trait with Ristretto255 and toy `Z_q` backends.
//! * [`msm`]: naive, bucketed and dual MSM engines.
//! * [`field`]: lazy-reduction inner product.
//! * [`protocol`]: setup, honest server, verifier.
//! * [`wire`]: framed binary messages.
//! * [`lab`]: adversarial strategies and soundness experiments.
//! * [`bench`]: speedup measurements.

pub mod bench;
pub mod error;
pub mod field;
pub mod group;
pub mod lab;
pub mod msm;
pub mod protocol;
pub mod wire;

pub use error::{Error, Result};
