use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use serde::Serialize;

/// Writes reports into the output directory.
pub struct Output {
    dir: PathBuf,
}

impl Output {
    pub fn new(dir: PathBuf) -> Result<Output> {
        fs::create_dir_all(&dir).with_context(|| format!("creating output directory `{}`", dir.display()))?;
        Ok(Output { dir })
    }

    pub fn json<T: Serialize + ?Sized>(&self, file: &str, value: &T) -> Result<()> {
        let path = self.dir.join(file);
        let mut text = serde_json::to_string_pretty(value).context("serializing report")?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing `{}`", path.display()))
    }

    pub fn csv(&self, file: &str, header: &[String], rows: &[Vec<String>]) -> Result<()> {
        let path = self.dir.join(file);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing `{}`", path.display()))?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Zoo names like `sigma_p(3)` as file-name-safe stems.
pub fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' })
        .collect::<String>()
        .trim_end_matches('_')
        .to_string()
}
