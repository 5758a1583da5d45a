//! Semantic-graph clone detection for LLVM IR.
//!
//! The pipeline: parse textual IR ([`ir`]), build an operation-centric
//! semantic graph with data-flow and control-flow edges ([`graph`]), embed
//! node tokens ([`vocab`]), score graph pairs with a trainable graph match
//! network ([`model`]), train it on labeled clone pairs and pick a similarity
//! threshold on validation data ([`train`], [`corpus`]).

pub mod checkpoint;
pub mod config;
pub mod corpus;
pub mod graph;
pub mod ir;
pub mod model;
pub mod pipeline;
pub mod synth;
pub mod train;
pub mod vocab;
