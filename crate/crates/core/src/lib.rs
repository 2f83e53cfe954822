//! Exact enumeration and asymptotics of Huffman codes over n-ary trees and
//! 2,3 trees (binary-ternary trees whose even levels branch in two and odd
//! levels in three).

pub mod bounds;
pub mod bt;
pub mod cache;
pub mod cli;
pub mod error;
pub mod exact;
pub mod fit;
pub mod model;
pub mod oracle;
pub mod rep;
pub mod report;
pub mod roots;

pub use error::{Error, Result};
pub use model::{BranchingSchedule, HuffmanSequence, LevelProfile, Parity};
