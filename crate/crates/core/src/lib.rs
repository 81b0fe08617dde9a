//! Behavioral model and protocol toolkit for semi-active wake-up receivers.
//!
//! * [`codec`] builds OOK wake frames and decodes comparator output with the
//!   network-id / address matcher.
//! * [`analog`] models the receive chain (matching network, rectifier,
//!   optional nano-power amplifier, comparator) and searches sensitivity.
//! * [`catalog`] holds the comparator and op-amp tables.
//! * [`energy`] rolls currents up into averages, ledgers and battery life.
//! * [`netsim`] runs deterministic multi-node wake-up scenarios.
//! * [`config`] reads chain and scenario files.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analog;
pub mod catalog;
pub mod codec;
pub mod config;
pub mod energy;
pub mod netsim;
pub mod units;
