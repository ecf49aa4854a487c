//! Shared argument types and output writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::ValueEnum;
use dcproc_core::sim::{ContactMode, SleepPolicy};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Negligible,
    Full,
}

impl From<Mode> for ContactMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Negligible => ContactMode::NegligibleContacts,
            Mode::Full => ContactMode::FullContacts,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    #[default]
    Sleep,
    StayAwake,
}

impl From<Policy> for SleepPolicy {
    fn from(p: Policy) -> Self {
        match p {
            Policy::Sleep => SleepPolicy::SleepAlways,
            Policy::StayAwake => SleepPolicy::StayAwakeOnContact,
        }
    }
}

/// Parses a unit enum through its serde name, so the command line accepts
/// exactly the spelling used in config files.
pub fn serde_name<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(Value::String(s.to_string())).map_err(|e| e.to_string())
}

/// Writes a run's files into its output directory. JSON files carry the run
/// config under `"run"`; CSV files start with a `# {run}` comment line.
pub struct Outputs {
    dir: PathBuf,
    run: Value,
}

impl Outputs {
    pub fn create(dir: &Path, run: Value) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            run,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn create_file(&self, name: &str) -> Result<BufWriter<File>> {
        let path = self.path(name);
        log::info!("writing {}", path.display());
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(BufWriter::new(f))
    }

    /// `body` must serialize to a JSON object.
    pub fn json<T: Serialize>(&mut self, name: &str, body: &T) -> Result<()> {
        let mut v = serde_json::to_value(body)?;
        let map = v
            .as_object_mut()
            .context("JSON output body must be an object")?;
        map.insert("run".into(), self.run.clone());
        let mut w = self.create_file(name)?;
        serde_json::to_writer_pretty(&mut w, &v)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    /// CSV body written by `f` after the run comment line.
    pub fn csv_with(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut dyn Write) -> dcproc_core::Result<()>,
    ) -> Result<()> {
        let run = serde_json::to_string(&self.run)?;
        let mut w = self.create_file(name)?;
        writeln!(w, "# {run}")?;
        f(&mut w).with_context(|| format!("writing {name}"))?;
        w.flush()?;
        Ok(())
    }

    pub fn csv_rows<R: Serialize>(
        &mut self,
        name: &str,
        header: &[&str],
        rows: impl IntoIterator<Item = R>,
    ) -> Result<()> {
        self.csv_with(name, |w| {
            let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
            out.write_record(header)?;
            for r in rows {
                out.serialize(r)?;
            }
            out.flush()?;
            Ok(())
        })
    }
}

/// Reads a JSON output file.
pub fn read_json(path: &Path) -> Result<Value> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// CSV reader that skips the run comment line.
pub fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))
}

#[derive(Debug, Clone, Serialize)]
pub struct Axis {
    pub column: &'static str,
    pub label: &'static str,
    pub scale: &'static str,
}

/// Declarative description of one figure; rendering is left to any plotter.
#[derive(Debug, Clone, Serialize)]
pub struct Plot {
    pub id: &'static str,
    pub title: String,
    pub file: &'static str,
    pub kind: &'static str,
    pub x: Axis,
    pub y: Axis,
    pub series: String,
}

pub fn axis(column: &'static str, label: &'static str, scale: &'static str) -> Axis {
    Axis {
        column,
        label,
        scale,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enums_use_config_spelling() {
        assert_eq!(serde_name::<Policy>("stay-awake"), Ok(Policy::StayAwake));
        assert!(serde_name::<Mode>("partial").is_err());
        for m in Mode::value_variants() {
            let name = m.to_possible_value().unwrap().get_name().to_string();
            assert_eq!(serde_name::<Mode>(&name).as_ref(), Ok(m));
        }
    }

    #[test]
    fn csv_run_line_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = Outputs::create(dir.path(), serde_json::json!({"seed": 1})).unwrap();
        out.csv_rows("a.csv", &["k", "v"], [(1u64, 0.5f64), (2, 0.25)])
            .unwrap();
        let text = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
        assert_eq!(text, "# {\"seed\":1}\nk,v\n1,0.5\n2,0.25\n");
        let rows: Vec<(u64, f64)> = csv_reader(&dir.path().join("a.csv"))
            .unwrap()
            .deserialize()
            .map(|r| r.unwrap())
            .collect();
        assert_eq!(rows, vec![(1, 0.5), (2, 0.25)]);
    }
}
