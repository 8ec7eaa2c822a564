use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::textprep::CleanDocument;

/// Static word vectors read from the whitespace text format: a
/// `<count> <dimension>` header followed by one `word v1 .. vd` line per
/// word.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    words: Vec<String>,
    data: Vec<f64>,
    index: HashMap<String, u32>,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Self {
        EmbeddingTable {
            dimension,
            words: Vec::new(),
            data: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// Adds a vector; returns `false` (and keeps the first) if `word` is
    /// already present.
    pub fn insert(&mut self, word: impl Into<String>, vector: &[f64]) -> Result<bool> {
        if vector.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                actual: vector.len(),
            });
        }
        if let Some(v) = vector.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("embedding value {v}")));
        }
        let word = word.into();
        if self.index.contains_key(&word) {
            return Ok(false);
        }
        self.index.insert(word.clone(), self.words.len() as u32);
        self.words.push(word);
        self.data.extend_from_slice(vector);
        Ok(true)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(file))
    }

    pub fn read(reader: impl BufRead) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let bad = |line: usize, message: String| Error::EmbeddingFormat { line, message };

        let (count, dimension) = loop {
            let Some((i, line)) = lines.next() else {
                return Err(bad(1, "missing header".into()));
            };
            let line = line.map_err(|e| bad(i + 1, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(bad(i + 1, format!("header must be `<count> <dimension>`, got `{line}`")));
            }
            let count: usize = fields[0].parse().map_err(|_| bad(i + 1, format!("bad count `{}`", fields[0])))?;
            let dimension: usize = fields[1]
                .parse()
                .map_err(|_| bad(i + 1, format!("bad dimension `{}`", fields[1])))?;
            if dimension == 0 {
                return Err(bad(i + 1, "dimension must be positive".into()));
            }
            break (count, dimension);
        };

        let mut table = EmbeddingTable::new(dimension);
        table.data.reserve(count.min(1 << 22) * dimension);
        let mut rows = 0usize;
        let mut values = Vec::with_capacity(dimension);
        for (i, line) in lines {
            let line_no = i + 1;
            let line = line.map_err(|e| bad(line_no, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let word = fields.next().expect("non-empty line");
            values.clear();
            for f in fields {
                let v: f64 = f.parse().map_err(|_| bad(line_no, format!("bad value `{f}`")))?;
                if !v.is_finite() {
                    return Err(bad(line_no, format!("non-finite value `{f}`")));
                }
                values.push(v);
            }
            if values.len() != dimension {
                return Err(bad(
                    line_no,
                    format!("expected {dimension} values for `{word}`, found {}", values.len()),
                ));
            }
            table.insert(word, &values)?;
            rows += 1;
        }
        if rows != count {
            return Err(bad(1, format!("header declares {count} rows, found {rows}")));
        }
        Ok(table)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Values use the shortest round-trip decimal form, so reading the
    /// output back yields bit-identical vectors.
    pub fn write<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.words.len(), self.dimension)?;
        for (i, word) in self.words.iter().enumerate() {
            w.write_all(word.as_bytes())?;
            for v in self.row(i) {
                write!(w, " {v}")?;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn vocabulary_size(&self) -> usize {
        self.words.len()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn id_of(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn row(&self, id: usize) -> &[f64] {
        &self.data[id * self.dimension..(id + 1) * self.dimension]
    }

    pub fn vector(&self, word: &str) -> Option<&[f64]> {
        self.id_of(word).map(|id| self.row(id as usize))
    }

    /// Ids of the first `max_len` in-vocabulary tokens of `doc`.
    pub fn lookup_ids(&self, doc: &CleanDocument, max_len: usize) -> Vec<u32> {
        doc.tokens.iter().filter_map(|t| self.id_of(t)).take(max_len).collect()
    }
}

/// Mean of the in-vocabulary token vectors; the zero vector if none.
pub fn embed_mean(table: &EmbeddingTable, doc: &CleanDocument) -> Vec<f64> {
    let mut sum = vec![0.0; table.dimension()];
    let mut n = 0usize;
    for t in &doc.tokens {
        if let Some(v) = table.vector(t) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
            n += 1;
        }
    }
    if n > 0 {
        let inv = n as f64;
        sum.iter_mut().for_each(|s| *s /= inv);
    }
    sum
}

/// Row-major `max_len x dimension` matrix, zero-padded past `valid_len`.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedSequence {
    pub data: Vec<f64>,
    pub max_len: usize,
    pub dimension: usize,
    pub valid_len: usize,
}

impl PaddedSequence {
    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.dimension..(t + 1) * self.dimension]
    }
}

pub fn embed_sequence(table: &EmbeddingTable, doc: &CleanDocument, max_len: usize) -> Result<PaddedSequence> {
    if max_len == 0 {
        return Err(Error::InvalidArgument("max_len must be at least 1".into()));
    }
    let dim = table.dimension();
    let ids = table.lookup_ids(doc, max_len);
    let mut data = vec![0.0; max_len * dim];
    for (t, &id) in ids.iter().enumerate() {
        data[t * dim..(t + 1) * dim].copy_from_slice(table.row(id as usize));
    }
    Ok(PaddedSequence {
        data,
        max_len,
        dimension: dim,
        valid_len: ids.len(),
    })
}

/// Token-id view of a document against a shared table; the compact form
/// used for recurrent training.
#[derive(Debug, Clone)]
pub struct EmbeddedDoc<'a> {
    table: &'a EmbeddingTable,
    ids: Vec<u32>,
}

impl<'a> EmbeddedDoc<'a> {
    pub fn new(table: &'a EmbeddingTable, doc: &CleanDocument, max_len: usize) -> Self {
        EmbeddedDoc {
            table,
            ids: table.lookup_ids(doc, max_len),
        }
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }
}

/// A variable-length sequence of equally sized input vectors.
pub trait SequenceInput {
    fn input_dim(&self) -> usize;
    fn steps(&self) -> usize;
    fn step(&self, t: usize) -> &[f64];
}

impl SequenceInput for EmbeddedDoc<'_> {
    fn input_dim(&self) -> usize {
        self.table.dimension()
    }

    fn steps(&self) -> usize {
        self.ids.len()
    }

    fn step(&self, t: usize) -> &[f64] {
        self.table.row(self.ids[t] as usize)
    }
}

impl SequenceInput for PaddedSequence {
    fn input_dim(&self) -> usize {
        self.dimension
    }

    fn steps(&self) -> usize {
        self.valid_len
    }

    fn step(&self, t: usize) -> &[f64] {
        self.row(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(text: &str) -> CleanDocument {
        CleanDocument::new("d", text.split_whitespace().map(String::from).collect())
    }

    fn toy() -> EmbeddingTable {
        EmbeddingTable::read("2 3\na 1 0 0\nb 0 1 0\n".as_bytes()).unwrap()
    }

    #[test]
    fn parses_format() {
        let t = toy();
        assert_eq!((t.vocabulary_size(), t.dimension()), (2, 3));
        assert_eq!(t.vector("b").unwrap(), [0.0, 1.0, 0.0]);
    }

    #[test]
    fn duplicate_first_wins() {
        let t = EmbeddingTable::read("2 1\na 1\na 2\n".as_bytes()).unwrap();
        assert_eq!(t.vector("a").unwrap(), [1.0]);
        assert_eq!(t.vocabulary_size(), 1);
    }

    #[test]
    fn rejects_malformed() {
        let cases: [(&str, usize); 7] = [
            ("2 3\na 1 0 0\nb 0 1\n", 3),
            ("", 1),
            ("2\na 1\n", 1),
            ("x 3\n", 1),
            ("1 2\na 1 nan\n", 2),
            ("1 2\na 1 zz\n", 2),
            ("3 1\na 1\n", 1),
        ];
        for (text, line) in cases {
            match EmbeddingTable::read(text.as_bytes()) {
                Err(Error::EmbeddingFormat { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?} gave {other:?}"),
            }
        }
    }

    #[test]
    fn mean_embedding() {
        let t = toy();
        assert_eq!(embed_mean(&t, &doc("a")), [1.0, 0.0, 0.0]);
        assert_eq!(embed_mean(&t, &doc("a b")), [0.5, 0.5, 0.0]);
        assert_eq!(embed_mean(&t, &doc("zz yy")), [0.0, 0.0, 0.0]);
        assert_eq!(embed_mean(&t, &doc("b b b b b")), t.vector("b").unwrap());
    }

    #[test]
    fn padded_sequences() {
        let t = toy();
        let s = embed_sequence(&t, &doc("a q b"), 4).unwrap();
        assert_eq!(s.valid_len, 2);
        assert_eq!(s.row(0), [1.0, 0.0, 0.0]);
        assert_eq!(s.row(1), [0.0, 1.0, 0.0]);
        assert!(s.data[6..].iter().all(|&v| v == 0.0));

        let s = embed_sequence(&t, &doc("a b a b a b a b a b"), 4).unwrap();
        assert_eq!(s.valid_len, 4);
        assert_eq!(s.row(3), [0.0, 1.0, 0.0]);

        let s = embed_sequence(&t, &doc("x y"), 4).unwrap();
        assert_eq!(s.valid_len, 0);
        assert!(s.data.iter().all(|&v| v == 0.0));
        assert!(embed_sequence(&t, &doc("a"), 0).is_err());
    }

    #[test]
    fn save_load_bit_exact() {
        let mut t = EmbeddingTable::new(3);
        t.insert("x", &[0.1, -1e-300, 1.0 / 3.0]).unwrap();
        t.insert("y", &[f64::MAX, f64::MIN_POSITIVE, -0.0]).unwrap();
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        let back = EmbeddingTable::read(buf.as_slice()).unwrap();
        for w in ["x", "y"] {
            let a: Vec<u64> = t.vector(w).unwrap().iter().map(|v| v.to_bits()).collect();
            let b: Vec<u64> = back.vector(w).unwrap().iter().map(|v| v.to_bits()).collect();
            assert_eq!(a, b);
        }
    }
}
