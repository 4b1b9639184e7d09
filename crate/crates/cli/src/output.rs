use std::fs;
use std::path::{Path, PathBuf};

use biqutrit::qutrit::ProtocolStateId;
use biqutrit::{Error, Result};

/// Writes to `path`, or to stdout when absent.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(Error::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn to_json(value: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

pub fn parse_state(s: &str) -> std::result::Result<ProtocolStateId, String> {
    s.parse::<ProtocolStateId>().map_err(|e| e.to_string())
}

#[derive(Debug, Clone, clap::Args)]
pub struct OutArg {
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}
