//! Sentence data model, input readers, and corpus-level cleanup.

mod conllu;
mod tokenize;

use std::collections::{BTreeSet, HashSet};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use conllu::{parse_conllu, parse_conllu_named, read_conllu_dir, write_conllu, ConlluParse};
pub use tokenize::{is_punct, is_punct_token, tokenize_raw};

/// UPOS tags counted as verbs by the argument-quality zero rule.
pub const VERB_TAGS: [&str; 2] = ["VERB", "AUX"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub lemma: String,
    pub upos: String,
    /// 0-based index of the governor; `None` for the root.
    pub head: Option<usize>,
    pub deprel: String,
}

impl Token {
    /// A token produced by the raw tokenizer, without syntactic annotation.
    pub fn bare(surface: impl Into<String>) -> Self {
        let surface = surface.into();
        Token {
            lemma: surface.clone(),
            surface,
            upos: "X".to_string(),
            head: None,
            deprel: "_".to_string(),
        }
    }

    pub fn is_verb(&self) -> bool {
        VERB_TAGS.contains(&self.upos.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedSentence {
    pub id: String,
    pub topic: String,
    pub post_id: String,
    pub raw_text: String,
    pub tokens: Vec<Token>,
    pub aq_score: Option<f64>,
    /// False when the tokens came from the raw tokenizer and carry no
    /// dependency tree.
    pub has_dependencies: bool,
}

impl ParsedSentence {
    /// Builds an unparsed sentence by running the raw tokenizer over `text`.
    pub fn from_raw(
        id: impl Into<String>,
        topic: impl Into<String>,
        post_id: impl Into<String>,
        text: impl Into<String>,
    ) -> Self {
        let text = text.into();
        let tokens = tokenize_raw(&text).into_iter().map(Token::bare).collect();
        ParsedSentence {
            id: id.into(),
            topic: topic.into(),
            post_id: post_id.into(),
            raw_text: text,
            tokens,
            aq_score: None,
            has_dependencies: false,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn has_verb(&self) -> bool {
        self.tokens.iter().any(Token::is_verb)
    }

    /// Lowercased surfaces, the form every similarity feature works on.
    pub fn lower_surfaces(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.surface.to_lowercase()).collect()
    }

    /// Text with case folded and whitespace runs collapsed; the key used for
    /// duplicate detection.
    pub fn normalized_text(&self) -> String {
        normalize_text(&self.raw_text)
    }

    /// Checks the structural invariants of tokens and dependency heads.
    pub fn validate(&self) -> Result<()> {
        if self.tokens.is_empty() {
            return Err(Error::input(format!("sentence {} has no tokens", self.id)));
        }
        let mut roots = 0;
        for (i, tok) in self.tokens.iter().enumerate() {
            if tok.surface.is_empty() {
                return Err(Error::input(format!("sentence {}: empty token {i}", self.id)));
            }
            match tok.head {
                None => roots += 1,
                Some(h) if h == i || h >= self.tokens.len() => {
                    return Err(Error::input(format!(
                        "sentence {}: token {i} has invalid head {h}",
                        self.id
                    )))
                }
                Some(_) => {}
            }
        }
        if self.has_dependencies && roots > 1 {
            return Err(Error::input(format!("sentence {} has {roots} roots", self.id)));
        }
        Ok(())
    }
}

pub fn normalize_text(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub topic: String,
    pub sentences: Vec<ParsedSentence>,
    /// (file name, record count) for every input that fed this corpus.
    pub source_manifest: Vec<(String, usize)>,
}

impl Corpus {
    pub fn new(topic: impl Into<String>, sentences: Vec<ParsedSentence>) -> Self {
        Corpus {
            topic: topic.into(),
            sentences,
            source_manifest: Vec::new(),
        }
    }

    pub fn get(&self, id: &str) -> Option<&ParsedSentence> {
        self.sentences.iter().find(|s| s.id == id)
    }

    /// Index from sentence id to position.
    pub fn index(&self) -> std::collections::HashMap<&str, usize> {
        self.sentences
            .iter()
            .enumerate()
            .map(|(i, s)| (s.id.as_str(), i))
            .collect()
    }

    /// Rejects corpora where two sentences share an id.
    pub fn check_unique_ids(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for s in &self.sentences {
            if !seen.insert(s.id.as_str()) {
                return Err(Error::input(format!("duplicate sentence id {}", s.id)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DedupStats {
    pub removed: usize,
}

/// Keeps the first sentence of every normalized-text equivalence class.
pub fn normalize_and_dedup(corpus: &Corpus) -> (Corpus, DedupStats) {
    let mut seen = HashSet::new();
    let mut kept = Vec::with_capacity(corpus.sentences.len());
    for s in &corpus.sentences {
        if seen.insert(s.normalized_text()) {
            kept.push(s.clone());
        }
    }
    let removed = corpus.sentences.len() - kept.len();
    (
        Corpus {
            topic: corpus.topic.clone(),
            sentences: kept,
            source_manifest: corpus.source_manifest.clone(),
        },
        DedupStats { removed },
    )
}

/// Lowercase wordlist used to decide whether a token is a "real" word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dictionary {
    entries: HashSet<String>,
}

const DEFAULT_DICTIONARY: &str = include_str!("../../data/dictionary.txt");

impl Dictionary {
    pub fn from_words<I, S>(words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let entries: HashSet<String> = words
            .into_iter()
            .map(|w| w.as_ref().trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();
        if entries.is_empty() {
            return Err(Error::input("dictionary is empty"));
        }
        Ok(Dictionary { entries })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_words(text.lines())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// The small wordlist bundled with the crate.
    pub fn bundled() -> Self {
        Self::parse(DEFAULT_DICTIONARY).expect("bundled dictionary is non-empty")
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains(word)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn union(&self, other: &Dictionary) -> Dictionary {
        Dictionary {
            entries: self.entries.union(&other.entries).cloned().collect(),
        }
    }

    pub fn words(&self) -> BTreeSet<&str> {
        self.entries.iter().map(String::as_str).collect()
    }
}

/// Number of token instances whose lowercased surface is a dictionary word.
pub fn count_dictionary_words(sentence: &ParsedSentence, dict: &Dictionary) -> usize {
    sentence
        .tokens
        .iter()
        .filter(|t| dict.contains(&t.surface.to_lowercase()))
        .count()
}

/// Function words skipped by the embedding average and the STS proxy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stopwords {
    words: HashSet<String>,
}

const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

impl Stopwords {
    pub fn parse(text: &str) -> Self {
        Stopwords {
            words: text
                .lines()
                .map(|l| l.trim().to_lowercase())
                .filter(|l| !l.is_empty())
                .collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn bundled() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }

    pub fn empty() -> Self {
        Stopwords { words: HashSet::new() }
    }

    /// Case-insensitive membership.
    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word) || self.words.contains(&word.to_lowercase())
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct RawSentenceRecord {
    id: String,
    topic: String,
    post_id: String,
    text: String,
}

/// Reads the `id,topic,post_id,text` sentence CSV, tokenizing each text with
/// the raw tokenizer.
pub fn read_raw_csv<R: Read>(reader: R) -> Result<Vec<ParsedSentence>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for rec in rdr.deserialize() {
        let rec: RawSentenceRecord = rec?;
        out.push(ParsedSentence::from_raw(rec.id, rec.topic, rec.post_id, rec.text));
    }
    Ok(out)
}

pub fn write_raw_csv<W: std::io::Write>(writer: W, sentences: &[ParsedSentence]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for s in sentences {
        wtr.serialize(RawSentenceRecord {
            id: s.id.clone(),
            topic: s.topic.clone(),
            post_id: s.post_id.clone(),
            text: s.raw_text.clone(),
        })?;
    }
    wtr.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sent(id: &str, text: &str) -> ParsedSentence {
        ParsedSentence::from_raw(id, "t", "p", text)
    }

    #[test]
    fn dedup_without_duplicates_is_identity() {
        let c = Corpus::new("t", vec![sent("1", "a b"), sent("2", "c d")]);
        let (out, stats) = normalize_and_dedup(&c);
        assert_eq!(out, c);
        assert_eq!(stats.removed, 0);
    }

    #[test]
    fn dedup_folds_case_and_whitespace() {
        let c = Corpus::new(
            "t",
            vec![sent("1", "Gun  control FAILS."), sent("2", "gun control fails.")],
        );
        let (out, stats) = normalize_and_dedup(&c);
        assert_eq!(out.sentences.len(), 1);
        assert_eq!(out.sentences[0].id, "1");
        assert_eq!(stats.removed, 1);
    }

    #[test]
    fn dictionary_counts_instances() {
        let d = Dictionary::from_words(["the"]).unwrap();
        let s = ParsedSentence {
            tokens: ["the", "the", "zzqx"].iter().map(|w| Token::bare(*w)).collect(),
            ..sent("1", "")
        };
        assert_eq!(count_dictionary_words(&s, &d), 2);
        let s = sent("2", "HAHAHAHA");
        assert_eq!(count_dictionary_words(&s, &Dictionary::bundled()), 0);
    }

    #[test]
    fn dictionary_lowercases_and_rejects_empty() {
        let d = Dictionary::parse("The\nGUN\n\n").unwrap();
        assert!(d.contains("the") && d.contains("gun"));
        assert!(Dictionary::parse("\n \n").is_err());
    }

    #[test]
    fn raw_csv_reads_quoted_text() {
        let data = "id,topic,post_id,text\ns1,gc,p1,\"Guns, he said, \"\"kill\"\".\"\n";
        let s = read_raw_csv(data.as_bytes()).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].raw_text, "Guns, he said, \"kill\".");
        assert_eq!(s[0].lower_surfaces(), vec!["guns", "he", "said", "kill"]);
        assert!(!s[0].has_dependencies);
    }

    #[test]
    fn validate_rejects_self_head() {
        let mut s = sent("1", "a b");
        s.tokens[0].head = Some(0);
        assert!(s.validate().is_err());
    }
}
