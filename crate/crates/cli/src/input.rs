use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{Context, Result};
use commex_core::model::{read_jsonl, Disambiguator, UpdateRecord, UpdateStream};
use commex_core::mrt::MrtReader;
use commex_core::reduce::FileOrigin;

pub type Records = Box<dyn Iterator<Item = Result<UpdateRecord>> + Send>;

pub fn is_jsonl(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "jsonl")
}

pub fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn collector_for(path: &Path, explicit: Option<&str>) -> String {
    explicit.map(str::to_string).unwrap_or_else(|| FileOrigin::from_path(path).collector)
}

/// Records of one input file in file order. MRT input gets same-second
/// arrivals spread over microseconds; JSONL input is taken as normalized.
pub fn open_records(path: &Path, collector: &str) -> Result<Records> {
    let shown = path.display().to_string();
    if is_jsonl(path) {
        let f = File::open(path).with_context(|| format!("opening {shown}"))?;
        let it = read_jsonl(BufReader::new(f)).map(move |r| r.with_context(|| shown.clone()));
        return Ok(Box::new(it));
    }
    let reader = MrtReader::open(path).with_context(|| format!("opening {shown}"))?;
    let mut dis = Disambiguator::new();
    let it = UpdateStream::new(reader, collector, file_name(path)).map(move |r| {
        let mut r = r.with_context(|| shown.clone())?;
        dis.apply(&mut r);
        Ok(r)
    });
    Ok(Box::new(it))
}
