pub mod compare;
pub mod dc_joint;
pub mod fit;
pub mod predict;
pub mod simulate;
pub mod synth;

use anyhow::Result;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::{self, RunConfig};

/// A subcommand: its flags, its typed parameters and its body.
pub trait Command: Serialize + Sized {
    const NAME: &'static str;
    type Params: Serialize + DeserializeOwned;

    fn cli_map(&self) -> Result<Map<String, Value>> {
        config::cli_map(self)
    }

    fn run(cfg: &RunConfig<Self::Params>) -> Result<()>;
}
