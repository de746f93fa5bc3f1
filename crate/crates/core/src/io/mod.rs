//! Files in and out.

mod banks;
pub mod commands;
pub mod config;
pub mod network;

pub use banks::{bundled_sample, load_banks, parse_banks, BankTable, RatingMap, DEFAULT_LGD};
pub use commands::{run, Artifact, Command};
pub use config::{Overrides, RunConfig};
pub use network::{read_edge_list, write_edge_list};
