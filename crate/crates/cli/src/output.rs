use std::fs;
use std::io::Write;
use std::path::Path;

use tempfile::NamedTempFile;

use crate::error::{CliError, CliResult};

/// Writes `bytes` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let mut set = OutputSet::new();
    set.stage(path, bytes)?;
    set.commit()
}

/// Stages several outputs and only renames them once every one is written.
#[derive(Default)]
pub struct OutputSet {
    staged: Vec<(std::path::PathBuf, NamedTempFile)>,
}

impl OutputSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stage(&mut self, path: &Path, bytes: &[u8]) -> CliResult<()> {
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d,
            _ => Path::new("."),
        };
        let fail = |what: &str, e: std::io::Error| CliError::io(format!("{what} {}: {e}", path.display()));
        fs::create_dir_all(dir).map_err(|e| fail("cannot create directory for", e))?;
        let mut tmp = NamedTempFile::new_in(dir).map_err(|e| fail("cannot stage", e))?;
        tmp.write_all(bytes).map_err(|e| fail("cannot write", e))?;
        tmp.as_file().sync_all().map_err(|e| fail("cannot flush", e))?;
        self.staged.push((path.to_path_buf(), tmp));
        Ok(())
    }

    pub fn commit(self) -> CliResult<()> {
        for (path, tmp) in self.staged {
            tmp.persist(&path)
                .map_err(|e| CliError::io(format!("cannot replace {}: {}", path.display(), e.error)))?;
        }
        Ok(())
    }
}
