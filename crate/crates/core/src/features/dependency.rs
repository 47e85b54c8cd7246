//! Dependency edges generalized through the category lexicon.
//!
//! An edge `governor -> dependent` becomes `(governor word, category)` for
//! every category (and ancestor) of the dependent word; the relation label
//! is dropped.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::lexicon::{CategoryId, CategoryLexicon};
use crate::corpus::ParsedSentence;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LexicalizedSide {
    /// Keep the governor word, generalize the dependent.
    #[default]
    Governor,
    /// Emit governor-lexicalized and dependent-lexicalized tuples.
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapNorm {
    /// Divide by `len(a) + len(b)`.
    #[default]
    SumOfLengths,
    /// Divide by `(len(a) + len(b)) / 2`.
    MeanOfLengths,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DepTuple {
    /// Lowercased surface of the lexicalized word.
    pub word: String,
    pub category: CategoryId,
    /// True when the word is the dependent and the category comes from the
    /// governor (only produced with [`LexicalizedSide::Both`]).
    pub dependent_side: bool,
}

/// Generalized tuples of a sentence, as a multiset in emission order.
pub fn dep_category_tuples(s: &ParsedSentence, lex: &CategoryLexicon, side: LexicalizedSide) -> Result<Vec<DepTuple>> {
    if !s.has_dependencies {
        return Err(Error::input(format!(
            "sentence {} has no dependency annotation; supply CoNLL-U input",
            s.id
        )));
    }
    let mut out = Vec::new();
    for tok in &s.tokens {
        let Some(h) = tok.head else { continue };
        let gov = &s.tokens[h];
        let gov_word = gov.surface.to_lowercase();
        for category in lex.lookup(&tok.surface) {
            out.push(DepTuple {
                word: gov_word.clone(),
                category,
                dependent_side: false,
            });
        }
        if side == LexicalizedSide::Both {
            let dep_word = tok.surface.to_lowercase();
            for category in lex.lookup(&gov.surface) {
                out.push(DepTuple {
                    word: dep_word.clone(),
                    category,
                    dependent_side: true,
                });
            }
        }
    }
    Ok(out)
}

fn counts(tuples: &[DepTuple]) -> HashMap<&DepTuple, usize> {
    let mut m = HashMap::new();
    for t in tuples {
        *m.entry(t).or_insert(0) += 1;
    }
    m
}

/// Size of the multiset intersection of two tuple lists.
pub fn multiset_intersection(a: &[DepTuple], b: &[DepTuple]) -> usize {
    let cb = counts(b);
    counts(a).iter().map(|(t, &k)| k.min(*cb.get(t).unwrap_or(&0))).sum()
}

/// Shared generalized tuples normalized by sentence length.
pub fn dep_overlap(
    a: &ParsedSentence,
    b: &ParsedSentence,
    lex: &CategoryLexicon,
    side: LexicalizedSide,
    norm: OverlapNorm,
) -> Result<f64> {
    let ta = dep_category_tuples(a, lex, side)?;
    let tb = dep_category_tuples(b, lex, side)?;
    let shared = multiset_intersection(&ta, &tb) as f64;
    let total = (a.len() + b.len()) as f64;
    let denom = match norm {
        OverlapNorm::SumOfLengths => total,
        OverlapNorm::MeanOfLengths => total / 2.0,
    };
    Ok(if denom == 0.0 { 0.0 } else { shared / denom })
}
