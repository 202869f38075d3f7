//! Seeded synthetic inputs with known ground truth, plus slow reference
//! implementations used to cross-check the streaming code.

pub mod beacon_day;
pub mod corpus;
pub mod oracle;
pub mod streams;
pub mod wire;

pub use wire::mutate;
