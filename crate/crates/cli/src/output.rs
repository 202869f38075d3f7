use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Version stamped into every table header and report.
pub const FORMAT_VERSION: u32 = 1;

pub struct OutDir {
    dir: PathBuf,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(OutDir { dir: dir.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn file(&self, name: &str) -> Result<BufWriter<File>> {
        let p = self.path(name);
        Ok(BufWriter::new(File::create(&p).with_context(|| format!("creating {}", p.display()))?))
    }

    /// CSV file opened with a `# commex <table> v<N> [notes]` line.
    pub fn table(&self, name: &str, table: &str, notes: &[(&str, String)]) -> Result<BufWriter<File>> {
        let mut f = self.file(name)?;
        write!(f, "# commex {table} v{FORMAT_VERSION}")?;
        for (k, v) in notes {
            write!(f, " {k}={v}")?;
        }
        writeln!(f)?;
        Ok(f)
    }

    /// Pretty JSON report with a `format_version` field prepended.
    pub fn report<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut v = serde_json::to_value(value)?;
        if let serde_json::Value::Object(map) = &mut v {
            let mut stamped = serde_json::Map::new();
            stamped.insert("format_version".into(), FORMAT_VERSION.into());
            stamped.append(map);
            v = serde_json::Value::Object(stamped);
        }
        let mut f = self.file(name)?;
        serde_json::to_writer_pretty(&mut f, &v)?;
        writeln!(f)?;
        f.flush()?;
        Ok(())
    }
}

pub fn finish(mut w: impl Write, what: &str) -> Result<()> {
    w.flush().with_context(|| format!("writing {what}"))
}
