pub mod corpus;
mod ids;
pub mod lda;
pub mod topicsim;
pub mod synthetic;
pub mod workflow;
pub mod server;
pub mod cli;
