//! One-catalyst membrane systems: multisets, membrane structures, maximally
//! parallel steps under several control regimes, bounded exploration, and
//! compilers from register machines.

pub mod compare;
pub mod compile;
pub mod engine;
pub mod explorer;
pub mod machine;
pub mod model;
pub mod multiset;
pub mod text;
