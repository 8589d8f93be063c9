//! Pre-trained word vectors: storage, word2vec readers/writers and the two
//! vector comparisons used to weight context graphs.
//!
//! Vectors are held as `f32`, the precision of the public word2vec
//! distribution. Similarity and distance reductions accumulate in `f64`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use crate::error::{Error, Location, Result};
use crate::scalar::Scalar;

const BINARY: &str = "word2vec binary";
const TEXT: &str = "word2vec text";

/// Immutable-after-load map from token bytes to a dense `f32` vector.
///
/// Insertion order is preserved so that a loaded file can be written back
/// byte for byte.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    tokens: Vec<Box<[u8]>>,
    index: HashMap<Box<[u8]>, usize>,
    data: Vec<f32>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("embedding dimensionality must be positive".into()));
        }
        Ok(EmbeddingTable { dim, tokens: Vec::new(), index: HashMap::new(), data: Vec::new() })
    }

    fn with_capacity(dim: usize, n: usize) -> Self {
        EmbeddingTable {
            dim,
            tokens: Vec::with_capacity(n),
            index: HashMap::with_capacity(n),
            data: Vec::with_capacity(n.saturating_mul(dim)),
        }
    }

    /// Adds one entry. Rejects empty tokens, tokens containing spaces or
    /// newlines, duplicates, wrong lengths and non-finite components.
    pub fn insert(&mut self, token: impl Into<Vec<u8>>, vector: &[f32]) -> Result<()> {
        let token = token.into();
        self.check_entry(&token, vector).map_err(Error::Config)?;
        self.push_unchecked(token.into_boxed_slice(), vector);
        Ok(())
    }

    fn check_entry(&self, token: &[u8], vector: &[f32]) -> std::result::Result<(), String> {
        if token.is_empty() {
            return Err("empty token".into());
        }
        if token.iter().any(|&b| b == b' ' || b == b'\n') {
            return Err(format!("token {:?} contains a space or newline", String::from_utf8_lossy(token)));
        }
        if vector.len() != self.dim {
            return Err(format!(
                "token {:?} has {} components, expected {}",
                String::from_utf8_lossy(token),
                vector.len(),
                self.dim
            ));
        }
        if let Some(bad) = vector.iter().find(|x| !x.is_finite()) {
            return Err(format!("token {:?} has non-finite component {bad}", String::from_utf8_lossy(token)));
        }
        if self.index.contains_key(token) {
            return Err(format!("duplicate token {:?}", String::from_utf8_lossy(token)));
        }
        Ok(())
    }

    fn push_unchecked(&mut self, token: Box<[u8]>, vector: &[f32]) {
        let idx = self.tokens.len();
        self.index.insert(token.clone(), idx);
        self.tokens.push(token);
        self.data.extend_from_slice(vector);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Exact-match lookup.
    pub fn get(&self, token: &[u8]) -> Option<&[f32]> {
        self.index.get(token).map(|&i| self.row(i))
    }

    pub fn get_str(&self, token: &str) -> Option<&[f32]> {
        self.get(token.as_bytes())
    }

    fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Entries in load order.
    pub fn iter(&self) -> impl Iterator<Item = (&[u8], &[f32])> + '_ {
        self.tokens.iter().enumerate().map(move |(i, t)| (&t[..], self.row(i)))
    }

    pub fn load_word2vec_binary(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_word2vec_binary(BufReader::with_capacity(1 << 20, file))
    }

    /// Parses the word2vec binary layout: an ASCII `"<vocab> <dim>\n"` header
    /// followed by `token 0x20 <dim little-endian f32>` records, each
    /// optionally terminated by `0x0A`.
    pub fn read_word2vec_binary<R: BufRead>(reader: R) -> Result<Self> {
        let mut rd = Counting { inner: reader, pos: 0 };

        let mut header = Vec::new();
        let n = rd.read_until(b'\n', &mut header).map_err(|e| io_at(e, 0))?;
        if n == 0 || header.last() != Some(&b'\n') {
            return Err(Error::parse(BINARY, Location::Byte(rd.pos), "truncated header"));
        }
        let (vocab, dim) = parse_header(&header[..header.len() - 1])
            .ok_or_else(|| Error::parse(BINARY, Location::Byte(0), "header is not \"<vocab_size> <dim>\""))?;
        if dim == 0 {
            return Err(Error::parse(BINARY, Location::Byte(0), "dimensionality must be positive"));
        }

        // Cap the pre-allocation so a corrupt header cannot request absurd memory.
        let mut table = EmbeddingTable::with_capacity(dim, vocab.min(1 << 22));
        let mut token = Vec::new();
        let mut raw = vec![0u8; dim * 4];
        let mut vector = vec![0f32; dim];

        for entry in 0..vocab {
            let token_start = rd.pos;
            token.clear();
            rd.read_until(b' ', &mut token).map_err(|e| io_at(e, token_start))?;
            if token.last() != Some(&b' ') {
                return Err(Error::parse(
                    BINARY,
                    Location::Byte(rd.pos),
                    format!("truncated file: header declares {vocab} entries, found {entry}"),
                ));
            }
            token.pop();
            if token.is_empty() {
                return Err(Error::parse(BINARY, Location::Byte(token_start), "empty token"));
            }
            if token.contains(&b'\n') {
                return Err(Error::parse(BINARY, Location::Byte(token_start), "token contains a newline"));
            }
            if table.index.contains_key(&token[..]) {
                return Err(Error::parse(
                    BINARY,
                    Location::Byte(token_start),
                    format!("duplicate token {:?}", String::from_utf8_lossy(&token)),
                ));
            }

            let vector_start = rd.pos;
            rd.read_exact(&mut raw).map_err(|e| match e.kind() {
                ErrorKind::UnexpectedEof => Error::parse(
                    BINARY,
                    Location::Byte(vector_start),
                    format!("truncated vector for token {:?}", String::from_utf8_lossy(&token)),
                ),
                _ => io_at(e, vector_start),
            })?;
            for (i, (dst, chunk)) in vector.iter_mut().zip(raw.chunks_exact(4)).enumerate() {
                let x = f32::from_le_bytes(chunk.try_into().expect("chunk of 4 bytes"));
                if !x.is_finite() {
                    return Err(Error::parse(
                        BINARY,
                        Location::Byte(vector_start + 4 * i as u64),
                        "non-finite vector component",
                    ));
                }
                *dst = x;
            }

            let at = rd.pos;
            let next = rd.fill_buf().map_err(|e| io_at(e, at))?;
            if next.first() == Some(&b'\n') {
                rd.consume(1);
            }
            table.push_unchecked(token.clone().into_boxed_slice(), &vector);
        }

        let at = rd.pos;
        if !rd.fill_buf().map_err(|e| io_at(e, at))?.is_empty() {
            return Err(Error::parse(
                BINARY,
                Location::Byte(rd.pos),
                format!("trailing data after the {vocab} entries declared in the header"),
            ));
        }
        Ok(table)
    }

    pub fn save_word2vec_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_word2vec_binary(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
    }

    /// Writes the canonical binary layout: every record ends with `0x0A`.
    pub fn write_word2vec_binary<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "{} {}", self.len(), self.dim)?;
        for (token, vector) in self.iter() {
            w.write_all(token)?;
            w.write_all(b" ")?;
            for x in vector {
                w.write_all(&x.to_le_bytes())?;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn load_word2vec_text(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_word2vec_text(BufReader::new(file))
    }

    /// Parses `token v1 .. vdim` lines with an optional `<count> <dim>` header.
    pub fn read_word2vec_text<R: BufRead>(reader: R) -> Result<Self> {
        let mut rows: Vec<(usize, String)> = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::parse(TEXT, Location::Line(i + 1), format!("unreadable line: {e}")))?;
            if line.trim().is_empty() {
                continue;
            }
            rows.push((i + 1, line));
        }
        if rows.is_empty() {
            return Err(Error::parse(TEXT, Location::Line(1), "empty input"));
        }

        let mut declared = None;
        if let Some((count, dim)) = parse_header(rows[0].1.as_bytes()) {
            let next_fits = rows.get(1).is_none_or(|(_, l)| l.split_ascii_whitespace().count() == dim + 1);
            if next_fits {
                declared = Some((rows[0].0, count, dim));
                rows.remove(0);
            }
        }

        let dim = match (declared, rows.first()) {
            (Some((_, _, dim)), _) => dim,
            (None, Some((_, l))) => l.split_ascii_whitespace().count() - 1,
            (None, None) => unreachable!("at least one row"),
        };
        if dim == 0 {
            let line = declared.map_or(rows[0].0, |d| d.0);
            return Err(Error::parse(TEXT, Location::Line(line), "dimensionality must be positive"));
        }

        let mut table = EmbeddingTable::with_capacity(dim, rows.len());
        let mut vector = Vec::with_capacity(dim);
        for (line_no, line) in &rows {
            let mut fields = line.split_ascii_whitespace();
            let token = fields.next().expect("non-blank line has a field");
            vector.clear();
            for field in fields {
                let x: f32 = field.parse().map_err(|_| {
                    Error::parse(TEXT, Location::Line(*line_no), format!("non-numeric field {field:?}"))
                })?;
                vector.push(x);
            }
            if vector.len() != dim {
                return Err(Error::parse(
                    TEXT,
                    Location::Line(*line_no),
                    format!("ragged row: {} components, expected {dim}", vector.len()),
                ));
            }
            table
                .check_entry(token.as_bytes(), &vector)
                .map_err(|m| Error::parse(TEXT, Location::Line(*line_no), m))?;
            table.push_unchecked(token.as_bytes().into(), &vector);
        }

        if let Some((line, count, _)) = declared {
            if count != table.len() {
                return Err(Error::parse(
                    TEXT,
                    Location::Line(line),
                    format!("header declares {count} entries, found {}", table.len()),
                ));
            }
        }
        Ok(table)
    }

    /// Writes a header line and one `token v1 .. vdim` line per entry, using
    /// the shortest decimal that round-trips each `f32`.
    pub fn write_word2vec_text<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "{} {}", self.len(), self.dim)?;
        for (token, vector) in self.iter() {
            w.write_all(token)?;
            for x in vector {
                write!(w, " {x}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

fn parse_header(line: &[u8]) -> Option<(usize, usize)> {
    let text = std::str::from_utf8(line).ok()?;
    let mut parts = text.split_ascii_whitespace();
    let vocab = parts.next()?.parse().ok()?;
    let dim = parts.next()?.parse().ok()?;
    if parts.next().is_some() {
        return None;
    }
    Some((vocab, dim))
}

fn io_at(e: io::Error, offset: u64) -> Error {
    Error::parse(BINARY, Location::Byte(offset), format!("read failed: {e}"))
}

/// `BufRead` adapter that tracks the absolute byte position.
struct Counting<R> {
    inner: R,
    pos: u64,
}

impl<R: BufRead> Read for Counting<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.pos += n as u64;
        Ok(n)
    }
}

impl<R: BufRead> BufRead for Counting<R> {
    fn fill_buf(&mut self) -> io::Result<&[u8]> {
        self.inner.fill_buf()
    }

    fn consume(&mut self, amt: usize) {
        self.pos += amt as u64;
        self.inner.consume(amt);
    }
}

/// `dot(u, v) / (‖u‖ ‖v‖)`, accumulated in `f64`.
pub fn cosine_similarity<T: Scalar>(u: &[T], v: &[T]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch { left: u.len(), right: v.len() });
    }
    let (mut dot, mut uu, mut vv) = (0f64, 0f64, 0f64);
    for (&a, &b) in u.iter().zip(v) {
        let (a, b) = (a.wide(), b.wide());
        dot += a * b;
        uu += a * a;
        vv += b * b;
    }
    if uu == 0.0 || vv == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot / (uu.sqrt() * vv.sqrt())).clamp(-1.0, 1.0))
}

/// `‖u − v‖₂`, accumulated in `f64`.
pub fn euclidean_distance<T: Scalar>(u: &[T], v: &[T]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch { left: u.len(), right: v.len() });
    }
    let sq: f64 = u
        .iter()
        .zip(v)
        .map(|(&a, &b)| {
            let d = a.wide() - b.wide();
            d * d
        })
        .sum();
    Ok(sq.sqrt())
}
