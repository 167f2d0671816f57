pub mod channel;
pub mod error;
pub mod fresnel;
pub mod geometry;
pub mod interference;
pub mod linalg;
pub mod precoding;
pub mod schedulers;
pub mod harness;
