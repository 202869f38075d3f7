use std::io::{self, Cursor, Read, Write};

use bzip2::read::MultiBzDecoder;
use bzip2::write::BzEncoder;
use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;

use super::{MrtBody, MrtError, MrtHeader, MrtRecord, HEADER_LEN, MAX_RECORD_LEN};

/// Outer container of an archive file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Container {
    Plain,
    Gzip,
    Bzip2,
    /// Pick by magic bytes: `1f 8b` gzip, `BZh` bzip2, anything else plain.
    Detect,
}

impl Container {
    pub fn sniff(prefix: &[u8]) -> Container {
        if prefix.starts_with(&[0x1f, 0x8b]) {
            Container::Gzip
        } else if prefix.starts_with(b"BZh") {
            Container::Bzip2
        } else {
            Container::Plain
        }
    }

    /// Container implied by a file extension (`.gz`, `.bz2`), used when writing.
    pub fn from_extension(path: &std::path::Path) -> Container {
        match path.extension().and_then(|e| e.to_str()) {
            Some("gz") => Container::Gzip,
            Some("bz2") => Container::Bzip2,
            _ => Container::Plain,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ReadStats {
    pub records: u64,
    pub updates: u64,
    pub add_path: u64,
    pub unsupported: u64,
    pub malformed: u64,
    pub bytes: u64,
}

/// Streaming record reader. Memory use is bounded by the largest record.
pub struct MrtReader<'a> {
    inner: Box<dyn Read + Send + 'a>,
    container: Container,
    offset: u64,
    done: bool,
    stats: ReadStats,
}

impl<'a> MrtReader<'a> {
    pub fn new<R: Read + Send + 'a>(mut source: R, container: Container) -> Result<Self, MrtError> {
        let container = match container {
            Container::Detect => {
                let mut magic = Vec::with_capacity(3);
                (&mut source).take(3).read_to_end(&mut magic).map_err(MrtError::Io)?;
                let kind = Container::sniff(&magic);
                return Ok(Self::wrap(Cursor::new(magic).chain(source), kind));
            }
            c => c,
        };
        Ok(Self::wrap(source, container))
    }

    fn wrap<R: Read + Send + 'a>(source: R, container: Container) -> Self {
        let inner: Box<dyn Read + Send + 'a> = match container {
            Container::Gzip => Box::new(MultiGzDecoder::new(source)),
            Container::Bzip2 => Box::new(MultiBzDecoder::new(source)),
            _ => Box::new(source),
        };
        MrtReader { inner, container, offset: 0, done: false, stats: ReadStats::default() }
    }

    pub fn open(path: impl AsRef<std::path::Path>) -> Result<Self, MrtError> {
        let file = std::fs::File::open(path).map_err(MrtError::Io)?;
        Self::new(io::BufReader::new(file), Container::Detect)
    }

    pub fn container(&self) -> Container {
        self.container
    }

    pub fn stats(&self) -> ReadStats {
        self.stats
    }

    fn io_error(&self, e: io::Error) -> MrtError {
        if self.container == Container::Plain {
            MrtError::Io(e)
        } else {
            MrtError::ContainerCorrupt(e)
        }
    }

    /// Fill `buf` as far as the source allows; returns bytes read.
    fn fill(&mut self, buf: &mut [u8]) -> Result<usize, MrtError> {
        let mut got = 0;
        while got < buf.len() {
            match self.inner.read(&mut buf[got..]) {
                Ok(0) => break,
                Ok(n) => got += n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(e) => return Err(self.io_error(e)),
            }
        }
        Ok(got)
    }

    fn next_record(&mut self) -> Result<Option<MrtRecord>, MrtError> {
        let mut hdr = [0u8; HEADER_LEN];
        let got = self.fill(&mut hdr)?;
        if got == 0 {
            return Ok(None);
        }
        if got < HEADER_LEN {
            return Err(MrtError::TruncatedRecord {
                offset: self.offset,
                needed: HEADER_LEN as u64,
                found: got as u64,
            });
        }
        let header = MrtHeader {
            timestamp: u32::from_be_bytes([hdr[0], hdr[1], hdr[2], hdr[3]]),
            mrt_type: u16::from_be_bytes([hdr[4], hdr[5]]),
            subtype: u16::from_be_bytes([hdr[6], hdr[7]]),
            length: u32::from_be_bytes([hdr[8], hdr[9], hdr[10], hdr[11]]),
            microseconds: None,
        };
        if header.length > MAX_RECORD_LEN {
            return Err(MrtError::RecordTooLarge { offset: self.offset, length: header.length });
        }
        let mut body = vec![0u8; header.length as usize];
        let got = self.fill(&mut body)?;
        if got < body.len() {
            return Err(MrtError::TruncatedRecord {
                offset: self.offset,
                needed: (HEADER_LEN + body.len()) as u64,
                found: (HEADER_LEN + got) as u64,
            });
        }
        self.offset += (HEADER_LEN + body.len()) as u64;
        let record = MrtRecord::decode(header, body);
        self.stats.records += 1;
        self.stats.bytes = self.offset;
        match record.body() {
            MrtBody::AddPath => self.stats.add_path += 1,
            MrtBody::Unsupported => self.stats.unsupported += 1,
            MrtBody::Malformed(_) => self.stats.malformed += 1,
            _ if record.is_update() => self.stats.updates += 1,
            _ => {}
        }
        Ok(Some(record))
    }
}

impl Iterator for MrtReader<'_> {
    type Item = Result<MrtRecord, MrtError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.next_record() {
            Ok(Some(r)) => Some(Ok(r)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// Iterate the records of `source` in file order.
pub fn read_mrt_stream<'a, R: Read + Send + 'a>(source: R, container: Container) -> Result<MrtReader<'a>, MrtError> {
    MrtReader::new(source, container)
}

enum Sink<W: Write> {
    Plain(W),
    Gzip(GzEncoder<W>),
    Bzip2(BzEncoder<W>),
}

/// Record writer; `finish` must be called to flush compressed trailers.
pub struct MrtWriter<W: Write> {
    sink: Sink<W>,
    written: u64,
    scratch: Vec<u8>,
}

impl<W: Write> MrtWriter<W> {
    pub fn new(sink: W, container: Container) -> Self {
        let sink = match container {
            Container::Gzip => Sink::Gzip(GzEncoder::new(sink, flate2::Compression::default())),
            Container::Bzip2 => Sink::Bzip2(BzEncoder::new(sink, bzip2::Compression::default())),
            Container::Plain | Container::Detect => Sink::Plain(sink),
        };
        MrtWriter { sink, written: 0, scratch: Vec::new() }
    }

    pub fn write_record(&mut self, record: &MrtRecord) -> Result<usize, MrtError> {
        self.scratch.clear();
        let n = record.encode(&mut self.scratch)?;
        let res = match &mut self.sink {
            Sink::Plain(w) => w.write_all(&self.scratch),
            Sink::Gzip(w) => w.write_all(&self.scratch),
            Sink::Bzip2(w) => w.write_all(&self.scratch),
        };
        res.map_err(MrtError::SinkFailure)?;
        self.written += n as u64;
        Ok(n)
    }

    /// Uncompressed bytes written so far.
    pub fn bytes_written(&self) -> u64 {
        self.written
    }

    pub fn finish(self) -> Result<W, MrtError> {
        let mut inner = match self.sink {
            Sink::Plain(w) => w,
            Sink::Gzip(w) => w.finish().map_err(MrtError::SinkFailure)?,
            Sink::Bzip2(w) => w.finish().map_err(MrtError::SinkFailure)?,
        };
        inner.flush().map_err(MrtError::SinkFailure)?;
        Ok(inner)
    }
}

/// Write all records to `sink`; returns the uncompressed byte count.
pub fn write_mrt_stream<'r, W: Write>(
    records: impl IntoIterator<Item = &'r MrtRecord>,
    sink: W,
    container: Container,
) -> Result<u64, MrtError> {
    let mut writer = MrtWriter::new(sink, container);
    for r in records {
        writer.write_record(r)?;
    }
    let n = writer.bytes_written();
    writer.finish()?;
    Ok(n)
}
