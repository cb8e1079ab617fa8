use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// What produced an output directory, written next to the outputs as
/// `manifest.txt` (`key = value` lines).
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub out: PathBuf,
    pub seed: u64,
    pub graph: Option<PathBuf>,
    pub events: Option<PathBuf>,
    pub config: Option<PathBuf>,
    pub arrivals: Option<PathBuf>,
    pub version: &'static str,
}

impl RunManifest {
    pub fn new(command: &str, out: &Path, seed: u64) -> Self {
        RunManifest {
            command: command.to_string(),
            out: out.to_path_buf(),
            seed,
            graph: None,
            events: None,
            config: None,
            arrivals: None,
            version: env!("CARGO_PKG_VERSION"),
        }
    }

    pub fn with_graph(mut self, p: &Path) -> Self {
        self.graph = Some(p.to_path_buf());
        self
    }

    pub fn with_events(mut self, p: &Path) -> Self {
        self.events = Some(p.to_path_buf());
        self
    }

    pub fn with_config(mut self, p: &Path) -> Self {
        self.config = Some(p.to_path_buf());
        self
    }

    pub fn with_arrivals(mut self, p: &Path) -> Self {
        self.arrivals = Some(p.to_path_buf());
        self
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "tool = escsim {}", self.version);
        let _ = writeln!(s, "command = {}", self.command);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "out = {}", self.out.display());
        for (k, v) in [
            ("graph", &self.graph),
            ("events", &self.events),
            ("config", &self.config),
            ("arrivals", &self.arrivals),
        ] {
            if let Some(p) = v {
                let _ = writeln!(s, "{k} = {}", p.display());
            }
        }
        s
    }

    pub fn write(&self) -> Result<()> {
        let path = self.out.join("manifest.txt");
        std::fs::write(&path, self.render()).with_context(|| format!("writing {}", path.display()))
    }
}
