//! Core models and algorithms for opportunistic spectrum access.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod access;
pub mod channel;
pub mod detector;
pub mod geometry;
pub mod math;
pub mod policy;
pub mod sharing;
pub mod tracker;
