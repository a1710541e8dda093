//! Parallel in-place algorithms built on inversion encoding: merging,
//! shuffling, and MSF/connectivity oracles stored inside a CSR offset array.
//!
//! ```
//! use pipkit::graph_oracle::{build_oracle, CsrGraph, OracleConfig};
//! use pipkit::merge::{merge, MergeConfig};
//!
//! let mut data = vec![1, 4, 9, 2, 3, 10];
//! merge(&mut data, 3, &MergeConfig::default())?;
//! assert_eq!(data, [1, 2, 3, 4, 9, 10]);
//!
//! let mut words = CsrGraph::from_edges(3, &[(0, 1, 5), (1, 2, 1), (0, 2, 7)])?.into_words();
//! let oracle = build_oracle(&mut words, &OracleConfig::seeded(7))?;
//! assert!(!oracle.msf_query(0, 2)?);
//! assert!(oracle.msf_query(0, 1)?);
//! # Ok::<(), pipkit::PipError>(())
//! ```

pub mod alloc_track;
pub mod bench;
pub mod buffers;
pub mod cli;
pub mod encoding;
pub mod error;
pub mod gen;
pub mod graph_oracle;
pub mod io;
pub mod merge;
pub mod reference;
pub mod rng;
pub mod shuffle;
pub mod stats;
pub mod verify;

pub use error::{PipError, Result};
