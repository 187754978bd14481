pub mod error;
pub mod forms;
pub mod lfunc;
pub mod qseries;
pub mod quad;
pub mod special;
pub mod verify;
pub mod zeros;

pub use error::{Error, Result};

/// The user guide under `book/`, compiled here so its snippets run as doc-tests.
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/coefficients.md")]
    pub mod coefficients {}
    #[doc = include_str!("../../../book/src/values.md")]
    pub mod values {}
    #[doc = include_str!("../../../book/src/zeros.md")]
    pub mod zeros {}
    #[doc = include_str!("../../../book/src/checks.md")]
    pub mod checks {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
