//! Hidden community detection on multi-layer stochastic block models.
//!
//! The crate generates networks whose edges come from several superimposed
//! partitions ("layers"), detects one layer at a time with a greedy
//! modularity optimiser, and weakens detected layers so that weaker,
//! hidden layers become detectable. A verification harness checks the
//! expected edge counts and the modularity effects of weakening on
//! generated instances, and a landscape sampler shows how modularity is
//! distributed around the planted layers.
//!
//! ```
//! use hicode_lab::{graph::Graph, modularity::partition_modularity, partition::Partition};
//!
//! let g = Graph::from_pairs(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])?;
//! let halves = Partition::new(vec![0, 0, 0, 1, 1, 1])?;
//! assert_eq!(partition_modularity(&g, &halves)?, 0.5);
//! # Ok::<(), hicode_lab::Error>(())
//! ```

pub mod error;
pub mod graph;
pub mod hicode;
pub mod io;
pub mod landscape;
pub mod louvain;
pub mod metrics;
pub mod modularity;
pub mod partition;
mod rng;
pub mod plot;
pub mod sbm;
pub mod verify;
pub mod weaken;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/graphs.md")]
    mod graphs {}
    #[doc = include_str!("../../../book/src/modularity.md")]
    mod modularity {}
    #[doc = include_str!("../../../book/src/sbm.md")]
    mod sbm {}
    #[doc = include_str!("../../../book/src/louvain.md")]
    mod louvain {}
    #[doc = include_str!("../../../book/src/weaken.md")]
    mod weaken {}
    #[doc = include_str!("../../../book/src/hicode.md")]
    mod hicode {}
    #[doc = include_str!("../../../book/src/nmi.md")]
    mod nmi {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/landscape.md")]
    mod landscape {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
