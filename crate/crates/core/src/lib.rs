//! Batch analytics for social-media narratives: corpus handling, text
//! normalization, topic discovery, event extraction, connotation-frame
//! sentiment and regression inference.

pub mod connotation;
pub mod corpus;
pub mod events;
pub mod stats;
pub mod stopwords;
pub mod textprep;
pub mod topics;
