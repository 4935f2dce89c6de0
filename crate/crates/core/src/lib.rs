pub mod bounds;
pub mod cli;
pub mod dynamics;
pub mod environment;
pub mod error;
pub mod influence;
pub mod lattice;
pub mod oracle;
pub mod rare;
pub mod renorm;
pub mod stats;
pub mod union_find;
