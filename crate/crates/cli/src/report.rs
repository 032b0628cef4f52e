//! CSV output. Every file starts with a `#` provenance line; numbers use a
//! fixed `{:.12e}` format so identical inputs give identical bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

pub struct Provenance {
    pub config_hash: String,
    pub model_key: Option<String>,
}

impl Provenance {
    pub fn line(&self) -> String {
        let mut s = format!(
            "# kolambert {} config-sha256={}",
            env!("CARGO_PKG_VERSION"),
            self.config_hash
        );
        if let Some(k) = &self.model_key {
            s.push_str(&format!(" model={k}"));
        }
        s
    }
}

pub fn num(v: f64) -> String {
    format!("{v:.12e}")
}

pub struct CsvFile {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl CsvFile {
    pub fn create(dir: &Path, name: &str, provenance: &Provenance, header: &[&str]) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let path = dir.join(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut out = BufWriter::new(file);
        write!(out, "{}\r\n", provenance.line()).map_err(|e| CliError::io(&path, e))?;
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(out);
        writer.write_record(header)?;
        Ok(Self { path, writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> CliResult<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> CliResult<PathBuf> {
        self.writer.flush().map_err(|e| CliError::io(&self.path, e))?;
        Ok(self.path)
    }
}
