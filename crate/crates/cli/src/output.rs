use std::fs;
use std::path::{Path, PathBuf};

use crate::Failure;

/// Every artifact goes into this one directory; names are built here from
/// fixed stems, never from user input.
pub struct OutDir {
    dir: PathBuf,
    written: usize,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir)
            .map_err(|e| Failure::Runtime(anyhow::anyhow!("cannot create {}: {e}", dir.display())))?;
        Ok(OutDir {
            dir: dir.to_path_buf(),
            written: 0,
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        debug_assert!(!name.contains('/') && !name.contains(".."));
        let path = self.dir.join(name);
        fs::write(&path, bytes)
            .map_err(|e| Failure::Runtime(anyhow::anyhow!("cannot write {}: {e}", path.display())))?;
        self.written += 1;
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &serde_json::Value) -> Result<(), Failure> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn files_written(&self) -> usize {
        self.written
    }
}
