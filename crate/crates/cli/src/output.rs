use anyhow::{Context, Result};
use curved_dirac::io::{write_csv, write_pgm, Matrix, RunManifest, Scaling, Table};
use serde_json::Value;
use std::path::{Path, PathBuf};

/// Output directory of one run; the manifest is written by [`Output::finish`].
pub struct Output {
    root: PathBuf,
    manifest: RunManifest,
}

impl Output {
    pub fn create(root: &Path, command: &str, config: &Value) -> Result<Self> {
        std::fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Output {
            root: root.to_path_buf(),
            manifest: RunManifest::start(command, config),
        })
    }

    fn prepare(&self, rel: &str) -> Result<PathBuf> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
        Ok(path)
    }

    pub fn csv(&mut self, rel: &str, table: &Table) -> Result<()> {
        let path = self.prepare(rel)?;
        write_csv(table, &path)?;
        self.manifest.add_file(&self.root, rel)?;
        Ok(())
    }

    pub fn pgm(&mut self, rel: &str, m: &Matrix, scaling: Scaling) -> Result<()> {
        let path = self.prepare(rel)?;
        write_pgm(m, &path, scaling)?;
        self.manifest.add_file(&self.root, rel)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<PathBuf> {
        Ok(self.manifest.write(&self.root)?)
    }
}

/// Sub-directory name for one value of a swept parameter.
pub fn sweep_dir(prefix: &str, value: impl std::fmt::Display) -> String {
    format!("{prefix}_{value}")
}

pub fn scaling(name: &str) -> Scaling {
    if name == "log" {
        Scaling::Log
    } else {
        Scaling::Linear
    }
}
