//! Core library of the DefecTor evaluation toolkit.
//!
//! The crate simulates the DNS side channel of an anonymity network at
//! desk scale and evaluates how much an attacker who sees a fraction of
//! exit DNS traffic gains over plain website fingerprinting:
//!
//! * [`popmodel`] — site popularity models (power-law and uniform) with
//!   deterministic inverse-CDF sampling,
//! * [`corpus`] — site→domain corpora: file format, unique-domain index,
//!   and a synthetic generator tuned to measured web statistics,
//! * [`dnscache`] — per-exit resolver caches with TTL clipping and the
//!   attacker's sliding observation window,
//! * [`trafficgen`] — Poisson visit streams over weighted exits and their
//!   expansion into cache-filtered DNS requests,
//! * [`dnsmap`] — the unique-domain DNS→site classifier,
//! * [`wfknn`] — a k-nearest-neighbour website fingerprinting classifier
//!   with learned feature weights,
//! * [`defector`] — the ctw and hp combinators that fuse DNS observations
//!   with fingerprinting verdicts,
//! * [`evaluation`] — the open-world cross-validated experiment harness
//!   and parameter sweeps,
//! * [`exposure`] — AS-level exposure of DNS resolution versus website
//!   traffic (the λ metric),
//! * [`pathsim`] — Monte-Carlo relay-selection simulation of client
//!   compromise under different DNS configurations.
//!
//! Everything is deterministic given a master seed: random streams are
//! derived per task through [`seeds`], and parallel runs reduce in a
//! fixed order so output bytes do not depend on the worker count.

pub mod config;
pub mod corpus;
pub mod defector;
pub mod dnscache;
pub mod dnsmap;
pub mod evaluation;
pub mod exposure;
pub mod manifest;
pub mod pathsim;
pub mod popmodel;
pub mod seeds;
pub mod trafficgen;
pub mod wfknn;
