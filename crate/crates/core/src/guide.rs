//! The mdbook chapters, compiled here so their code blocks run as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/geometry.md")]
pub mod geometry {}
#[doc = include_str!("../../../book/src/htransform.md")]
pub mod htransform {}
#[doc = include_str!("../../../book/src/semigroup.md")]
pub mod semigroup {}
#[doc = include_str!("../../../book/src/evolution.md")]
pub mod evolution {}
#[doc = include_str!("../../../book/src/riesz.md")]
pub mod riesz {}
#[doc = include_str!("../../../book/src/testfunctional.md")]
pub mod testfunctional {}
#[doc = include_str!("../../../book/src/duhamel.md")]
pub mod duhamel {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
