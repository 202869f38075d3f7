use std::io::{BufRead, Write};

use thiserror::Error;

use super::UpdateRecord;

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("line {line}: {source}")]
    Decode { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One JSON object per line, fields as in [`UpdateRecord`]; `arrival` is
/// epoch microseconds.
pub fn write_jsonl<'a, W: Write>(
    records: impl IntoIterator<Item = &'a UpdateRecord>,
    mut out: W,
) -> Result<u64, JsonlError> {
    let mut n = 0;
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
        n += 1;
    }
    Ok(n)
}

pub fn read_jsonl<R: BufRead>(input: R) -> impl Iterator<Item = Result<UpdateRecord, JsonlError>> {
    input.lines().enumerate().filter_map(|(i, line)| match line {
        Err(e) => Some(Err(JsonlError::Io(e))),
        Ok(l) if l.trim().is_empty() => None,
        Ok(l) => Some(serde_json::from_str(&l).map_err(|source| JsonlError::Decode { line: i + 1, source })),
    })
}
