//! Pretrained word vectors in the word2vec text and binary formats.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    index: HashMap<String, usize>,
    words: Vec<String>,
    data: Vec<f32>,
}

fn emb_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Record {
        source_name: "embeddings".into(),
        line,
        message: msg.into(),
    }
}

fn parse_header(line: &str) -> Result<(usize, usize)> {
    let mut it = line.split_whitespace();
    let parse = |s: Option<&str>| -> Result<usize> {
        s.and_then(|v| v.parse().ok())
            .ok_or_else(|| emb_err(1, "header must be `vocab_size dim`"))
    };
    let vocab = parse(it.next())?;
    let dim = parse(it.next())?;
    if dim == 0 {
        return Err(emb_err(1, "embedding dimension must be positive"));
    }
    Ok((vocab, dim))
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::input("embedding dimension must be positive"));
        }
        Ok(EmbeddingTable {
            dim,
            index: HashMap::new(),
            words: Vec::new(),
            data: Vec::new(),
        })
    }

    /// Adds a vector; a word that is already present keeps its first vector.
    pub fn insert(&mut self, word: impl Into<String>, vector: &[f32]) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::input(format!(
                "vector of length {} in a {}-dimensional table",
                vector.len(),
                self.dim
            )));
        }
        let word = word.into();
        if self.index.contains_key(&word) {
            return Ok(());
        }
        self.index.insert(word.clone(), self.words.len());
        self.words.push(word);
        self.data.extend_from_slice(vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab_size(&self) -> usize {
        self.words.len()
    }

    fn get(&self, word: &str) -> Option<&[f32]> {
        self.index
            .get(word)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    /// Case-sensitive lookup falling back to the lowercased word.
    pub fn lookup(&self, word: &str) -> Option<&[f32]> {
        self.get(word).or_else(|| {
            let lower = word.to_lowercase();
            if lower != word {
                self.get(&lower)
            } else {
                None
            }
        })
    }

    /// Text format: `vocab_size dim` header, then `word v1 ... vdim` lines.
    pub fn read_text<R: Read>(reader: R) -> Result<Self> {
        let mut lines = BufReader::new(reader).lines();
        let header = lines
            .next()
            .ok_or_else(|| emb_err(1, "empty embedding file"))?
            .map_err(|e| Error::io("<embeddings>", e))?;
        let (vocab, dim) = parse_header(&header)?;
        let mut table = EmbeddingTable::new(dim)?;
        let mut buf = Vec::with_capacity(dim);
        for (idx, line) in lines.enumerate() {
            let lineno = idx + 2;
            let line = line.map_err(|e| Error::io("<embeddings>", e))?;
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            let word = parts.next().unwrap_or_default();
            buf.clear();
            for p in parts.filter(|p| !p.is_empty()) {
                buf.push(
                    p.parse::<f32>()
                        .map_err(|_| emb_err(lineno, format!("bad float `{p}`")))?,
                );
            }
            if buf.len() != dim {
                return Err(emb_err(lineno, format!("expected {dim} values, found {}", buf.len())));
            }
            table.insert(word, &buf)?;
        }
        if table.vocab_size() != vocab {
            log::warn!("embedding header declares {vocab} words, read {}", table.vocab_size());
        }
        Ok(table)
    }

    /// Binary format: ASCII `vocab_size dim\n` header, then per entry the
    /// word bytes terminated by a space and `dim` little-endian f32 values.
    /// Newlines between entries are skipped.
    pub fn read_binary<R: Read>(reader: R) -> Result<Self> {
        let mut r = BufReader::new(reader);
        let mut header = Vec::new();
        r.read_until(b'\n', &mut header)
            .map_err(|e| Error::io("<embeddings>", e))?;
        let header = String::from_utf8(header).map_err(|_| emb_err(1, "header is not UTF-8"))?;
        let (vocab, dim) = parse_header(&header)?;
        let mut table = EmbeddingTable::new(dim)?;
        let mut raw = vec![0u8; dim * 4];
        let mut vec = vec![0f32; dim];
        for entry in 0..vocab {
            let mut word = Vec::new();
            r.read_until(b' ', &mut word)
                .map_err(|e| Error::io("<embeddings>", e))?;
            if word.last() != Some(&b' ') {
                return Err(emb_err(entry + 2, "truncated binary embedding file"));
            }
            word.pop();
            let start = word.iter().position(|b| *b != b'\n').unwrap_or(word.len());
            let word = String::from_utf8_lossy(&word[start..]).into_owned();
            r.read_exact(&mut raw)
                .map_err(|_| emb_err(entry + 2, format!("truncated vector for `{word}`")))?;
            for (v, chunk) in vec.iter_mut().zip(raw.chunks_exact(4)) {
                *v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
            }
            table.insert(word, &vec)?;
        }
        Ok(table)
    }

    /// Picks the reader from the first bytes: a binary file is not valid
    /// UTF-8 text past its header, or is named `*.bin`.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let binary = path.extension().is_some_and(|e| e == "bin") || std::str::from_utf8(&bytes).is_err();
        if binary {
            Self::read_binary(&bytes[..])
        } else {
            Self::read_text(&bytes[..])
        }
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.vocab_size(), self.dim)?;
        for (i, word) in self.words.iter().enumerate() {
            write!(w, "{word}")?;
            for v in &self.data[i * self.dim..(i + 1) * self.dim] {
                write!(w, " {v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.vocab_size(), self.dim)?;
        for (i, word) in self.words.iter().enumerate() {
            w.write_all(word.as_bytes())?;
            w.write_all(b" ")?;
            for v in &self.data[i * self.dim..(i + 1) * self.dim] {
                w.write_all(&v.to_le_bytes())?;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}
