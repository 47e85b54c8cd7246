//! Synthetic corpora with a known relation between pairs and their gold
//! similarity.
//!
//! Each pair `(a, b)` draws `b` from a share of `a`'s lemmas plus fresh
//! ones, in shuffled order; some shared lemmas surface inflected in `b`.
//! The latent score is `5 * dice(lemmas(a), lemmas(b)) + N(0, noise_sd)`,
//! clipped to `[0, 5]`.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::aq::AqAnnotation;
use crate::corpus::{ParsedSentence, Stopwords, Token};
use crate::error::{Error, Result};
use crate::features::{CategoryLexicon, EmbeddingTable};
use crate::pairing::{AfsAnnotation, ArgumentPair, ProxySts, StsScorer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub topic: String,
    pub n_pairs: usize,
    pub noise_sd: f64,
    pub min_len: usize,
    pub max_len: usize,
    pub vocab_size: usize,
    pub embedding_dim: usize,
    pub n_workers: usize,
    /// Extra sentences that the AQ and length filters should remove.
    pub n_junk: usize,
    pub inflect_prob: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            topic: "synthetic".into(),
            n_pairs: 500,
            noise_sd: 0.3,
            min_len: 10,
            max_len: 20,
            vocab_size: 1500,
            embedding_dim: 8,
            n_workers: 3,
            n_junk: 12,
            inflect_prob: 0.5,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_pairs == 0 || self.n_workers < 2 || self.embedding_dim == 0 {
            return Err(Error::config(
                "n_pairs and embedding_dim must be positive, n_workers at least 2",
            ));
        }
        if self.min_len < 2 || self.min_len > self.max_len {
            return Err(Error::config("need 2 <= min_len <= max_len"));
        }
        if self.vocab_size < 4 * self.max_len {
            return Err(Error::config("vocab_size too small for sentence length"));
        }
        if !(self.noise_sd >= 0.0) || !(0.0..=1.0).contains(&self.inflect_prob) {
            return Err(Error::config("noise_sd must be non-negative, inflect_prob in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub sentences: Vec<ParsedSentence>,
    /// Pairs with `gold_afs` set to the latent score.
    pub pairs: Vec<ArgumentPair>,
    /// Integer worker scores whose mean is the latent score rounded to thirds.
    pub annotations: Vec<AfsAnnotation>,
    pub aq_annotations: Vec<AqAnnotation>,
    /// Lemma dice overlap per pair.
    pub overlap: Vec<f64>,
    pub lexicon_text: String,
    pub embeddings: EmbeddingTable,
}

impl SyntheticCorpus {
    pub fn lexicon(&self) -> CategoryLexicon {
        CategoryLexicon::parse(&self.lexicon_text).expect("generated lexicon is well formed")
    }
}

const ONSETS: [&str; 14] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "t", "v", "z", "sh"];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];
const INFLECTION: &str = "s";
const CATEGORIES: [(&str, Option<u32>); 6] = [
    ("affect", None),
    ("posemo", Some(1)),
    ("negemo", Some(1)),
    ("social", None),
    ("cogmech", None),
    ("cause", Some(5)),
];

struct Word {
    lemma: String,
    upos: &'static str,
}

/// Distinct consonant-vowel words; none ends in the inflection suffix.
fn vocabulary(rng: &mut ChaCha8Rng, n: usize) -> Vec<Word> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let syl = rng.random_range(2..=3);
        let mut w = String::new();
        for _ in 0..syl {
            w.push_str(ONSETS.choose(rng).unwrap());
            w.push_str(VOWELS.choose(rng).unwrap());
        }
        if seen.insert(w.clone()) {
            let upos = match rng.random_range(0..10) {
                0..=2 => "VERB",
                3..=4 => "ADJ",
                _ => "NOUN",
            };
            out.push(Word { lemma: w, upos });
        }
    }
    out
}

/// Random dependency tree rooted at the first verb (or token 0).
fn random_heads(rng: &mut ChaCha8Rng, tokens: &[Token]) -> Vec<Option<usize>> {
    let n = tokens.len();
    let root = tokens.iter().position(Token::is_verb).unwrap_or(0);
    let mut order: Vec<usize> = (0..n).filter(|&i| i != root).collect();
    order.shuffle(rng);
    let mut attached = vec![root];
    let mut heads = vec![None; n];
    for i in order {
        heads[i] = Some(*attached.choose(rng).unwrap());
        attached.push(i);
    }
    heads
}

fn build_sentence(
    rng: &mut ChaCha8Rng,
    id: String,
    topic: &str,
    words: &[(String, String, &'static str)],
    aq: f64,
) -> ParsedSentence {
    let mut tokens: Vec<Token> = words
        .iter()
        .map(|(surface, lemma, upos)| Token {
            surface: surface.clone(),
            lemma: lemma.clone(),
            upos: upos.to_string(),
            head: None,
            deprel: "dep".into(),
        })
        .collect();
    let heads = random_heads(rng, &tokens);
    for (t, h) in tokens.iter_mut().zip(heads) {
        t.head = h;
        if h.is_none() {
            t.deprel = "root".into();
        }
    }
    let surfaces: Vec<&str> = tokens.iter().map(|t| t.surface.as_str()).collect();
    let mut raw = surfaces.join(" ");
    raw.push('.');
    if let Some(c) = raw.get(..1) {
        raw = c.to_uppercase() + &raw[1..];
    }
    ParsedSentence {
        post_id: format!("post-{}", id.split('-').next().unwrap_or(&id)),
        id,
        topic: topic.to_string(),
        raw_text: raw,
        tokens,
        aq_score: Some(aq),
        has_dependencies: true,
    }
}

fn dice(a: &BTreeSet<&str>, b: &BTreeSet<&str>) -> f64 {
    2.0 * a.intersection(b).count() as f64 / (a.len() + b.len()) as f64
}

pub fn generate(cfg: &SynthConfig) -> Result<SyntheticCorpus> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let vocab = vocabulary(&mut rng, cfg.vocab_size);
    let noise = Normal::new(0.0, cfg.noise_sd).map_err(|e| Error::config(e.to_string()))?;
    let verbs: Vec<usize> = (0..vocab.len()).filter(|&i| vocab[i].upos == "VERB").collect();

    let mut sentences = Vec::new();
    let mut pairs = Vec::new();
    let mut overlap = Vec::new();
    let mut texts = HashSet::new();
    for p in 0..cfg.n_pairs {
        let la = rng.random_range(cfg.min_len..=cfg.max_len);
        let lb = rng.random_range(cfg.min_len..=cfg.max_len);
        let mut a_idx: Vec<usize> = rand::seq::index::sample(&mut rng, vocab.len(), la).into_vec();
        if !a_idx.iter().any(|&i| vocab[i].upos == "VERB") {
            let v = *verbs.iter().find(|v| !a_idx.contains(v)).expect("vocabulary has verbs");
            a_idx[0] = v;
        }
        let k = rng.random_range(0..=la.min(lb));
        let mut shared = a_idx.clone();
        shared.shuffle(&mut rng);
        shared.truncate(k);
        let a_set: HashSet<usize> = a_idx.iter().copied().collect();
        let mut b_idx = shared.clone();
        while b_idx.len() < lb {
            let w = rng.random_range(0..vocab.len());
            if !a_set.contains(&w) && !b_idx.contains(&w) {
                b_idx.push(w);
            }
        }
        if !b_idx.iter().any(|&i| vocab[i].upos == "VERB") {
            if k < lb {
                let v = *verbs
                    .iter()
                    .find(|v| !a_set.contains(v) && !b_idx.contains(v))
                    .expect("vocabulary has verbs");
                b_idx[lb - 1] = v;
            } else {
                let v = *a_idx.iter().find(|&&i| vocab[i].upos == "VERB").expect("a has a verb");
                b_idx[0] = v;
            }
        }
        b_idx.shuffle(&mut rng);

        let a_words: Vec<(String, String, &'static str)> = a_idx
            .iter()
            .map(|&i| (vocab[i].lemma.clone(), vocab[i].lemma.clone(), vocab[i].upos))
            .collect();
        let mut b_words: Vec<(String, String, &'static str)> = b_idx
            .iter()
            .map(|&i| {
                let w = &vocab[i];
                let surface = if a_set.contains(&i) && rng.random_bool(cfg.inflect_prob) {
                    format!("{}{INFLECTION}", w.lemma)
                } else {
                    w.lemma.clone()
                };
                (surface, w.lemma.clone(), w.upos)
            })
            .collect();
        let join = |w: &[(String, String, &str)]| w.iter().map(|x| x.0.as_str()).collect::<Vec<_>>().join(" ");
        if !texts.insert(join(&a_words)) {
            return Err(Error::Internal("synthetic sentence collision".into()));
        }
        while !texts.insert(join(&b_words)) {
            let i = rng.random_range(0..b_words.len());
            b_words[i].0.push_str(INFLECTION);
        }

        let la_set: BTreeSet<&str> = a_words.iter().map(|w| w.1.as_str()).collect();
        let lb_set: BTreeSet<&str> = b_words.iter().map(|w| w.1.as_str()).collect();
        let d = dice(&la_set, &lb_set);
        let gold = (5.0 * d + noise.sample(&mut rng)).clamp(0.0, 5.0);
        let aq_a = rng.random_range(0.6..1.0);
        let aq_b = rng.random_range(0.6..1.0);
        let id_a = format!("p{p:04}-a");
        let id_b = format!("p{p:04}-b");
        sentences.push(build_sentence(&mut rng, id_a.clone(), &cfg.topic, &a_words, aq_a));
        sentences.push(build_sentence(&mut rng, id_b.clone(), &cfg.topic, &b_words, aq_b));
        let mut pair = ArgumentPair::new(id_a, id_b, 0.0);
        pair.gold_afs = Some(gold);
        pairs.push(pair);
        overlap.push(d);
    }

    for j in 0..cfg.n_junk {
        let id = format!("x{j:04}-j");
        let (words, aq): (Vec<(String, String, &'static str)>, f64) = match j % 3 {
            0 => {
                let w = "ha".repeat(2 + j % 4);
                (
                    vec![
                        (w.to_uppercase(), w.clone(), "INTJ"),
                        ("ha".into(), "ha".into(), "INTJ"),
                    ],
                    0.9,
                )
            }
            1 => {
                let n = cfg.max_len * 3;
                let idx = rand::seq::index::sample(&mut rng, vocab.len(), n).into_vec();
                (
                    idx.iter()
                        .map(|&i| (vocab[i].lemma.clone(), vocab[i].lemma.clone(), vocab[i].upos))
                        .collect(),
                    0.8,
                )
            }
            _ => {
                let n = cfg.min_len;
                let idx = rand::seq::index::sample(&mut rng, vocab.len(), n).into_vec();
                (
                    idx.iter()
                        .map(|&i| (vocab[i].lemma.clone(), vocab[i].lemma.clone(), vocab[i].upos))
                        .collect(),
                    0.2,
                )
            }
        };
        sentences.push(build_sentence(&mut rng, id, &cfg.topic, &words, aq));
    }
    if cfg.n_junk > 0 {
        let mut dup = sentences.last().expect("junk sentence").clone();
        dup.id = "x9999-d".into();
        sentences.push(dup);
    }

    let sts = ProxySts::fit(&sentences, Stopwords::bundled());
    let index: std::collections::HashMap<&str, &ParsedSentence> =
        sentences.iter().map(|s| (s.id.as_str(), s)).collect();
    for p in &mut pairs {
        p.sts_prescore = sts
            .score(index[p.sent_a.as_str()], index[p.sent_b.as_str()])
            .expect("proxy always scores");
    }

    let mut annotations = Vec::new();
    for p in &pairs {
        let total = (3.0 * p.gold_afs.expect("set above")).round() as usize;
        let total = total * cfg.n_workers / 3;
        let base = total / cfg.n_workers;
        let mut extra = total % cfg.n_workers;
        let mut workers: Vec<usize> = (0..cfg.n_workers).collect();
        workers.shuffle(&mut rng);
        let mut scores = vec![base; cfg.n_workers];
        for &w in &workers {
            if extra == 0 {
                break;
            }
            if scores[w] < 5 {
                scores[w] += 1;
                extra -= 1;
            }
        }
        for (w, s) in scores.into_iter().enumerate() {
            annotations.push(AfsAnnotation {
                pair_id: p.pair_id.clone(),
                worker_id: format!("w{w}"),
                score: s.min(5) as u8,
            });
        }
    }

    let mut aq_annotations = Vec::new();
    for s in &sentences {
        let q = s.aq_score.unwrap_or(0.0);
        for w in 0..3 {
            let score = if rng.random_bool(q) { 3 } else { rng.random_range(1..=2) };
            aq_annotations.push(AqAnnotation {
                sentence_id: s.id.clone(),
                worker_id: format!("w{w}"),
                score,
            });
        }
    }

    let mut lexicon_text = String::from("%\n");
    for (i, (name, parent)) in CATEGORIES.iter().enumerate() {
        match parent {
            Some(p) => writeln!(lexicon_text, "{}\t{name}\t{p}", i + 1),
            None => writeln!(lexicon_text, "{}\t{name}", i + 1),
        }
        .expect("write to string");
    }
    lexicon_text.push_str("%\n");
    for w in &vocab {
        if rng.random_bool(0.3) {
            let cat = rng.random_range(1..=CATEGORIES.len());
            writeln!(lexicon_text, "{}*\t{cat}", w.lemma).expect("write to string");
        }
    }

    let mut embeddings = EmbeddingTable::new(cfg.embedding_dim)?;
    let unit = Normal::new(0.0f32, 1.0).expect("valid normal");
    for w in &vocab {
        let v: Vec<f32> = (0..cfg.embedding_dim).map(|_| unit.sample(&mut rng)).collect();
        embeddings.insert(w.lemma.clone(), &v)?;
        embeddings.insert(format!("{}{INFLECTION}", w.lemma), &v)?;
    }

    Ok(SyntheticCorpus {
        sentences,
        pairs,
        annotations,
        aq_annotations,
        overlap,
        lexicon_text,
        embeddings,
    })
}

/// File names used by [`write_corpus`].
pub mod files {
    pub const CONLLU: &str = "corpus.conllu";
    pub const PAIRS: &str = "pairs.csv";
    pub const AFS: &str = "afs_annotations.csv";
    pub const AQ: &str = "aq_annotations.csv";
    pub const LEXICON: &str = "lexicon.dic";
    pub const EMBEDDINGS: &str = "embeddings.txt";
}

/// Writes the corpus files into `dir`, which must exist.
pub fn write_corpus(corpus: &SyntheticCorpus, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let write = |name: &str, bytes: Vec<u8>| -> Result<std::path::PathBuf> {
        let p = dir.join(name);
        std::fs::write(&p, bytes).map_err(|e| Error::io(&p, e))?;
        Ok(p)
    };
    let mut out = vec![write(
        files::CONLLU,
        crate::corpus::write_conllu(&corpus.sentences).into_bytes(),
    )?];
    let mut buf = Vec::new();
    crate::pairing::write_pairs(&mut buf, &corpus.pairs)?;
    out.push(write(files::PAIRS, buf)?);
    let mut buf = Vec::new();
    crate::pairing::write_afs_annotations(&mut buf, &corpus.annotations)?;
    out.push(write(files::AFS, buf)?);
    let mut buf = Vec::new();
    crate::aq::write_aq_annotations(&mut buf, &corpus.aq_annotations)?;
    out.push(write(files::AQ, buf)?);
    out.push(write(files::LEXICON, corpus.lexicon_text.clone().into_bytes())?);
    let mut buf = Vec::new();
    corpus
        .embeddings
        .write_text(&mut buf)
        .map_err(|e| Error::io(dir.join(files::EMBEDDINGS), e))?;
    out.push(write(files::EMBEDDINGS, buf)?);
    Ok(out)
}
