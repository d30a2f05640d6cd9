//! Static pretrained word vectors.
//!
//! Two on-disk formats are supported:
//!
//! * word2vec binary: an ASCII header `"V D\n"` followed by `V` records, each
//!   the token bytes, a single space, `D` little-endian `f32`s and an
//!   optional `'\n'`.
//! * plain text: one `token v1 .. vD` row per line, with an optional
//!   `"V D"` header line.
//!
//! Values are widened to `f64` on load. The table is never modified after
//! construction.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::{self, stream};
use crate::tensor::{Matrix, Vector};
use crate::textprep::Vocabulary;

pub const DEFAULT_DIM: usize = 300;
/// Half-width of the uniform range used for randomly initialized vectors.
pub const RANDOM_RANGE: f64 = 0.25;

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Matrix,
    oov: Vector,
}

impl EmbeddingTable {
    pub fn from_entries(dim: usize, entries: Vec<(String, Vec<f64>)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        let mut words = Vec::with_capacity(entries.len());
        let mut index = HashMap::with_capacity(entries.len());
        let mut data = Vec::with_capacity(entries.len() * dim);
        for (word, v) in entries {
            if v.len() != dim {
                return Err(Error::shape("EmbeddingTable", dim, v.len()));
            }
            // First occurrence wins, as word2vec readers conventionally do.
            if index.contains_key(&word) {
                continue;
            }
            index.insert(word.clone(), words.len());
            words.push(word);
            data.extend(v);
        }
        let vectors = Matrix::from_vec(words.len(), dim, data)?;
        Ok(EmbeddingTable {
            dim,
            words,
            index,
            vectors,
            oov: Vector::zeros(dim),
        })
    }

    /// Seeded uniform vectors in `[-0.25, 0.25]` for each token. A token's
    /// vector depends only on `(seed, token)`, so it is stable across
    /// vocabularies. Values are `f32`-representable so that writing the
    /// table in word2vec binary form is lossless.
    pub fn random<'a>(tokens: impl IntoIterator<Item = &'a str>, dim: usize, seed: u64) -> Result<Self> {
        let entries = tokens
            .into_iter()
            .map(|t| {
                let tag = rng::fingerprint([t]);
                let mut r = rng::seeded(seed, stream::EMBEDDING, tag);
                let v = (0..dim)
                    .map(|_| r.gen_range(-RANDOM_RANGE as f32..=RANDOM_RANGE as f32) as f64)
                    .collect();
                (t.to_owned(), v)
            })
            .collect();
        Self::from_entries(dim, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index.get(token).map(|&i| self.vectors.row(i))
    }

    /// Exact match, then lowercase, then first-letter-capitalized; unknown
    /// tokens map to the zero vector.
    pub fn lookup(&self, token: &str) -> &[f64] {
        self.get(token)
            .or_else(|| self.get(&token.to_lowercase()))
            .or_else(|| self.get(&capitalize(token)))
            .unwrap_or(&self.oov)
    }

    /// Rows aligned with vocabulary indices. UNK and PAD rows are zero.
    pub fn project(&self, vocab: &Vocabulary) -> Matrix {
        let mut m = Matrix::zeros(vocab.len(), self.dim);
        for (i, tok) in vocab.tokens().iter().enumerate().skip(2) {
            m.row_mut(i).copy_from_slice(self.lookup(tok));
        }
        m
    }

    /// Sub-table with only the rows reachable from the given vocabulary,
    /// stored under the vocabulary's own spelling.
    pub fn restrict_to(&self, vocab: &Vocabulary) -> Result<Self> {
        let entries = vocab
            .tokens()
            .iter()
            .skip(2)
            .filter(|t| self.get(t).is_some() || self.get(&t.to_lowercase()).is_some() || self.get(&capitalize(t)).is_some())
            .map(|t| (t.clone(), self.lookup(t).to_vec()))
            .collect();
        Self::from_entries(self.dim, entries)
    }

    pub fn write_word2vec_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "{} {}", self.len(), self.dim).map_err(io)?;
        for (i, word) in self.words.iter().enumerate() {
            w.write_all(word.as_bytes()).map_err(io)?;
            w.write_all(b" ").map_err(io)?;
            for &x in self.vectors.row(i) {
                w.write_all(&(x as f32).to_le_bytes()).map_err(io)?;
            }
            w.write_all(b"\n").map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn write_word2vec_text(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "{} {}", self.len(), self.dim).map_err(io)?;
        for (i, word) in self.words.iter().enumerate() {
            w.write_all(word.as_bytes()).map_err(io)?;
            for &x in self.vectors.row(i) {
                write!(w, " {x}").map_err(io)?;
            }
            w.write_all(b"\n").map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

fn capitalize(token: &str) -> String {
    let mut chars = token.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars.flat_map(char::to_lowercase)).collect(),
        None => String::new(),
    }
}

/// Byte reader that tracks its offset for error reporting.
struct OffsetReader<'p, R> {
    inner: R,
    offset: u64,
    path: &'p Path,
}

impl<R: BufRead> OffsetReader<'_, R> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::ParseOffset {
            path: self.path.to_path_buf(),
            offset: self.offset,
            msg: msg.into(),
        }
    }

    fn read_until(&mut self, delim: u8, what: &str) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        let n = self
            .inner
            .read_until(delim, &mut buf)
            .map_err(|e| Error::io(self.path, e))?;
        if n == 0 || buf.last() != Some(&delim) {
            return Err(self.err(format!("unexpected end of file while reading {what}")));
        }
        self.offset += n as u64;
        buf.pop();
        Ok(buf)
    }

    fn read_exact(&mut self, buf: &mut [u8], what: &str) -> Result<()> {
        let mut filled = 0;
        while filled < buf.len() {
            let n = self
                .inner
                .read(&mut buf[filled..])
                .map_err(|e| Error::io(self.path, e))?;
            if n == 0 {
                self.offset += filled as u64;
                return Err(self.err(format!("truncated record: unexpected end of file in {what}")));
            }
            filled += n;
        }
        self.offset += buf.len() as u64;
        Ok(())
    }

    fn peek(&mut self) -> Result<Option<u8>> {
        let buf = self.inner.fill_buf().map_err(|e| Error::io(self.path, e))?;
        Ok(buf.first().copied())
    }

    fn skip(&mut self, n: usize) {
        self.inner.consume(n);
        self.offset += n as u64;
    }
}

/// Reads the canonical word2vec binary format. With `limit`, only the first
/// `limit` records are read.
pub fn load_word2vec_binary(path: impl AsRef<Path>, limit: Option<usize>) -> Result<EmbeddingTable> {
    load_word2vec_binary_filtered(path, limit, |_| true)
}

/// As [`load_word2vec_binary`], but only keeps records whose token passes
/// `keep`. Skipped records still count towards `limit`.
pub fn load_word2vec_binary_filtered(
    path: impl AsRef<Path>,
    limit: Option<usize>,
    keep: impl Fn(&str) -> bool,
) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = OffsetReader {
        inner: BufReader::with_capacity(1 << 20, file),
        offset: 0,
        path,
    };

    let header = r.read_until(b'\n', "header")?;
    let header = String::from_utf8(header).map_err(|_| Error::ParseOffset {
        path: path.to_path_buf(),
        offset: 0,
        msg: "header is not ASCII".into(),
    })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let parse = |s: &str| s.parse::<i64>().ok();
    let (count, dim) = match fields.as_slice() {
        [v, d] => match (parse(v), parse(d)) {
            (Some(v), Some(d)) => (v, d),
            _ => return Err(malformed_header(path, &header)),
        },
        _ => return Err(malformed_header(path, &header)),
    };
    if count <= 0 || dim <= 0 {
        return Err(Error::ParseOffset {
            path: path.to_path_buf(),
            offset: 0,
            msg: format!("header counts must be positive, got {count} {dim}"),
        });
    }
    let (count, dim) = (count as usize, dim as usize);
    let take = limit.map_or(count, |l| l.min(count));

    let mut entries = Vec::new();
    let mut raw = vec![0u8; 4 * dim];
    for _ in 0..take {
        // Some writers put the newline before the token instead of after
        // the vector; tolerate a leading one.
        if r.peek()? == Some(b'\n') {
            r.skip(1);
        }
        let token = r.read_until(b' ', "token")?;
        let token = String::from_utf8_lossy(&token).into_owned();
        r.read_exact(&mut raw, "vector")?;
        if keep(&token) {
            let v = raw
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
                .collect();
            entries.push((token, v));
        }
        if r.peek()? == Some(b'\n') {
            r.skip(1);
        }
    }
    EmbeddingTable::from_entries(dim, entries)
}

fn malformed_header(path: &Path, header: &str) -> Error {
    Error::ParseOffset {
        path: path.to_path_buf(),
        offset: 0,
        msg: format!("malformed header {header:?}, expected \"V D\""),
    }
}

pub fn load_word2vec_text(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    load_word2vec_text_filtered(path, |_| true)
}

pub fn load_word2vec_text_filtered(path: impl AsRef<Path>, keep: impl Fn(&str) -> bool) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut dim: Option<usize> = None;
    let mut entries = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let err = |msg: String| Error::ParseLine {
            path: path.to_path_buf(),
            line: lineno,
            msg,
        };
        if lineno == 1 && fields.len() == 2 && fields.iter().all(|f| f.parse::<u64>().is_ok()) {
            let d: usize = fields[1].parse().unwrap();
            if d == 0 {
                return Err(err("header dimension must be positive".into()));
            }
            dim = Some(d);
            continue;
        }
        let (token, values) = (fields[0], &fields[1..]);
        if values.is_empty() {
            return Err(err(format!("token {token:?} has no values")));
        }
        match dim {
            Some(d) if d != values.len() => {
                return Err(err(format!("expected {d} values, found {}", values.len())));
            }
            None => dim = Some(values.len()),
            _ => {}
        }
        if !keep(token) {
            continue;
        }
        let v = values
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| err(format!("invalid number {s:?}"))))
            .collect::<Result<Vec<f64>>>()?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(err("non-finite value".into()));
        }
        entries.push((token.to_owned(), v));
    }
    let dim = dim.ok_or_else(|| Error::ParseLine {
        path: path.to_path_buf(),
        line: 0,
        msg: "file contains no vectors".into(),
    })?;
    EmbeddingTable::from_entries(dim, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_bytes(bytes: &[u8]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(bytes).unwrap();
        f.flush().unwrap();
        f
    }

    fn fixture() -> Vec<u8> {
        let mut b = b"2 3\n".to_vec();
        for (w, v) in [("hi", [1.0f32, 2.0, 3.0]), ("yo", [4.0, 5.0, 6.0])] {
            b.extend_from_slice(w.as_bytes());
            b.push(b' ');
            for x in v {
                b.extend_from_slice(&x.to_le_bytes());
            }
            b.push(b'\n');
        }
        b
    }

    #[test]
    fn binary_fixture() {
        let f = write_bytes(&fixture());
        let t = load_word2vec_binary(f.path(), None).unwrap();
        assert_eq!(t.dim(), 3);
        assert_eq!(t.len(), 2);
        assert_eq!(t.get("hi").unwrap(), &[1.0, 2.0, 3.0]);
        assert_eq!(t.get("yo").unwrap(), &[4.0, 5.0, 6.0]);

        let t1 = load_word2vec_binary(f.path(), Some(1)).unwrap();
        assert_eq!(t1.words(), ["hi"]);
    }

    #[test]
    fn binary_without_trailing_newlines() {
        let mut b = b"2 1\n".to_vec();
        b.extend_from_slice(b"a ");
        b.extend_from_slice(&1.5f32.to_le_bytes());
        b.extend_from_slice(b"b ");
        b.extend_from_slice(&(-2.0f32).to_le_bytes());
        let f = write_bytes(&b);
        let t = load_word2vec_binary(f.path(), None).unwrap();
        assert_eq!(t.get("b").unwrap(), &[-2.0]);
    }

    #[test]
    fn binary_truncated_reports_offset() {
        let mut b = fixture();
        b.truncate(b.len() - 6);
        let f = write_bytes(&b);
        match load_word2vec_binary(f.path(), None).unwrap_err() {
            Error::ParseOffset { offset, msg, .. } => {
                assert!(msg.contains("truncated"), "{msg}");
                // header(4) + "hi "(3) + 12 + '\n' + "yo "(3) + 7 bytes read
                assert_eq!(offset, 4 + 3 + 12 + 1 + 3 + 7);
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn binary_bad_headers() {
        for h in [&b"x 3\n"[..], b"0 3\n", b"2 -1\n", b"2\n", b"2 3"] {
            let f = write_bytes(h);
            assert!(
                matches!(load_word2vec_binary(f.path(), None), Err(Error::ParseOffset { .. })),
                "{:?}",
                String::from_utf8_lossy(h)
            );
        }
    }

    #[test]
    fn text_format() {
        let a = write_bytes(b"a 1 0\nb 0 1\n");
        let b = write_bytes(b"2 2\na 1 0\nb 0 1\n");
        let ta = load_word2vec_text(a.path()).unwrap();
        let tb = load_word2vec_text(b.path()).unwrap();
        assert_eq!(ta.dim(), 2);
        assert_eq!(ta.len(), 2);
        assert_eq!(ta, tb);

        let bad = write_bytes(b"a 1 0\nb 0\n");
        match load_word2vec_text(bad.path()).unwrap_err() {
            Error::ParseLine { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn lookup_fallbacks() {
        let t = EmbeddingTable::from_entries(
            2,
            vec![("Good".into(), vec![1.0, 2.0]), ("bad".into(), vec![3.0, 4.0])],
        )
        .unwrap();
        assert_eq!(t.lookup("bad"), &[3.0, 4.0]);
        assert_eq!(t.lookup("BAD"), &[3.0, 4.0]);
        assert_eq!(t.lookup("good"), &[1.0, 2.0]);
        assert_eq!(t.lookup("missing"), &[0.0, 0.0]);
    }

    #[test]
    fn loading_twice_is_identical() {
        let f = write_bytes(&fixture());
        assert_eq!(
            load_word2vec_binary(f.path(), None).unwrap(),
            load_word2vec_binary(f.path(), None).unwrap()
        );
    }

    #[test]
    fn random_vectors_depend_only_on_token() {
        let a = EmbeddingTable::random(["x", "y"], 5, 3).unwrap();
        let b = EmbeddingTable::random(["y", "z"], 5, 3).unwrap();
        assert_eq!(a.get("y"), b.get("y"));
        assert!(a.get("x").unwrap().iter().all(|v| v.abs() <= RANDOM_RANGE));
        let c = EmbeddingTable::random(["y"], 5, 4).unwrap();
        assert_ne!(a.get("y"), c.get("y"));
    }

    #[test]
    fn projection_aligns_with_vocab() {
        let t = EmbeddingTable::from_entries(1, vec![("b".into(), vec![7.0])]).unwrap();
        let v = Vocabulary::from_tokens(["a".to_owned(), "b".to_owned()]);
        let m = t.project(&v);
        assert_eq!(m.as_slice(), &[0.0, 0.0, 0.0, 7.0]);
    }
}
