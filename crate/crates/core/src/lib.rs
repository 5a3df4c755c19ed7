pub mod bounds;
pub mod bp;
pub mod codebook;
pub mod error;
pub mod gf2;
pub mod mbbp;
pub mod orbits;
pub mod sim;
pub mod stoppingsets;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/gf2.md")]
    mod gf2 {}
    #[doc = include_str!("../../../book/src/codes.md")]
    mod codes {}
    #[doc = include_str!("../../../book/src/families.md")]
    mod families {}
    #[doc = include_str!("../../../book/src/stopping-sets.md")]
    mod stopping_sets {}
    #[doc = include_str!("../../../book/src/bp.md")]
    mod bp {}
    #[doc = include_str!("../../../book/src/multiple-bases.md")]
    mod multiple_bases {}
    #[doc = include_str!("../../../book/src/bounds.md")]
    mod bounds {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
}
