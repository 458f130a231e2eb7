//! Symbolic safety checking for relational action bases.

pub mod formula;
pub mod spec;
pub mod smt;
pub mod oracle;
pub mod covers;
pub mod preimage;
pub mod transform;
pub mod engine;
pub mod corpus;
