// The chapters are pulled in as doc comments so `cargo test` runs every Rust
// code block in the book against the current library.

#[cfg(doctest)]
#[doc = include_str!("src/introduction.md")]
pub mod introduction {}

#[cfg(doctest)]
#[doc = include_str!("src/model.md")]
pub mod model {}

#[cfg(doctest)]
#[doc = include_str!("src/simulation.md")]
pub mod simulation {}

#[cfg(doctest)]
#[doc = include_str!("src/risk-measures.md")]
pub mod risk_measures {}

#[cfg(doctest)]
#[doc = include_str!("src/two-bank-chain.md")]
pub mod two_bank_chain {}

#[cfg(doctest)]
#[doc = include_str!("src/network-inference.md")]
pub mod network_inference {}

#[cfg(doctest)]
#[doc = include_str!("src/baselines.md")]
pub mod baselines {}

#[cfg(doctest)]
#[doc = include_str!("src/command-line.md")]
pub mod command_line {}
