//! Hierarchical word-category lexicon in the LIWC dictionary layout.
//!
//! ```text
//! %
//! 1	affect
//! 3	negemo	1
//! %
//! fear*	3
//! love	2
//! ```
//!
//! The header between the `%` lines declares `id<TAB>name[<TAB>parent]`;
//! every following line maps a pattern to comma-separated category ids. A
//! trailing `*` turns the pattern into a prefix.

#![allow(clippy::tabs_in_doc_comments)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use crate::error::{Error, Result};

pub type CategoryId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Category {
    pub name: String,
    pub parent: Option<CategoryId>,
}

#[derive(Debug, Clone, Default)]
pub struct CategoryLexicon {
    categories: BTreeMap<CategoryId, Category>,
    literals: HashMap<String, BTreeSet<CategoryId>>,
    prefixes: HashMap<String, BTreeSet<CategoryId>>,
}

const TOY_LEXICON: &str = include_str!("../../data/toy_lexicon.dic");

fn lex_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Record {
        source_name: "lexicon".into(),
        line,
        message: msg.into(),
    }
}

impl CategoryLexicon {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lex = CategoryLexicon::default();
        let mut section = 0;
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            if line.trim() == "%" {
                section += 1;
                continue;
            }
            match section {
                0 => return Err(lex_err(lineno, "content before the `%` header")),
                1 => {
                    let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
                    if cols.len() < 2 || cols.len() > 3 {
                        return Err(lex_err(lineno, "category line needs id, name and optional parent"));
                    }
                    let id = parse_id(cols[0], lineno)?;
                    let parent = cols
                        .get(2)
                        .filter(|p| !p.is_empty())
                        .map(|p| parse_id(p, lineno))
                        .transpose()?;
                    if lex
                        .categories
                        .insert(
                            id,
                            Category {
                                name: cols[1].to_string(),
                                parent,
                            },
                        )
                        .is_some()
                    {
                        return Err(lex_err(lineno, format!("category {id} declared twice")));
                    }
                }
                _ => {
                    let (pattern, ids) = line
                        .split_once('\t')
                        .ok_or_else(|| lex_err(lineno, "entry line needs pattern<TAB>ids"))?;
                    let pattern = pattern.trim().to_lowercase();
                    let mut set = BTreeSet::new();
                    for id in ids.split([',', '\t', ' ']).filter(|s| !s.trim().is_empty()) {
                        let id = parse_id(id.trim(), lineno)?;
                        if !lex.categories.contains_key(&id) {
                            return Err(lex_err(lineno, format!("unknown category {id}")));
                        }
                        set.insert(id);
                    }
                    let target = match pattern.strip_suffix('*') {
                        Some(prefix) if !prefix.is_empty() => lex.prefixes.entry(prefix.to_string()),
                        Some(_) => return Err(lex_err(lineno, "bare `*` pattern")),
                        None => lex.literals.entry(pattern),
                    };
                    target.or_default().extend(set);
                }
            }
        }
        if section < 2 {
            return Err(Error::input("lexicon header is not closed by a second `%` line"));
        }
        lex.check_forest()?;
        Ok(lex)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Small open lexicon bundled for tests and demos.
    pub fn toy() -> Self {
        Self::parse(TOY_LEXICON).expect("bundled lexicon parses")
    }

    fn check_forest(&self) -> Result<()> {
        for (&id, cat) in &self.categories {
            if let Some(p) = cat.parent {
                if !self.categories.contains_key(&p) {
                    return Err(Error::input(format!("category {id} has unknown parent {p}")));
                }
            }
            let mut cur = cat.parent;
            let mut steps = 0;
            while let Some(c) = cur {
                if c == id || steps > self.categories.len() {
                    return Err(Error::input(format!("category {id} is part of a cycle")));
                }
                cur = self.categories[&c].parent;
                steps += 1;
            }
        }
        Ok(())
    }

    pub fn category(&self, id: CategoryId) -> Option<&Category> {
        self.categories.get(&id)
    }

    pub fn category_by_name(&self, name: &str) -> Option<CategoryId> {
        self.categories.iter().find(|(_, c)| c.name == name).map(|(id, _)| *id)
    }

    /// `id` followed by its ancestors up to the root.
    pub fn lineage(&self, id: CategoryId) -> Vec<CategoryId> {
        let mut out = vec![id];
        let mut cur = self.categories.get(&id).and_then(|c| c.parent);
        while let Some(c) = cur {
            out.push(c);
            cur = self.categories.get(&c).and_then(|c| c.parent);
        }
        out
    }

    /// Categories for a word: the exact literal entry, every matching prefix
    /// entry, and all ancestors of those.
    pub fn lookup(&self, word: &str) -> BTreeSet<CategoryId> {
        let word = word.to_lowercase();
        let mut direct = BTreeSet::new();
        if let Some(ids) = self.literals.get(&word) {
            direct.extend(ids);
        }
        for (end, _) in word.char_indices().skip(1).chain(std::iter::once((word.len(), ' '))) {
            if let Some(ids) = self.prefixes.get(&word[..end]) {
                direct.extend(ids);
            }
        }
        direct.iter().flat_map(|&id| self.lineage(id)).collect()
    }
}

fn parse_id(s: &str, line: usize) -> Result<CategoryId> {
    s.parse().map_err(|_| lex_err(line, format!("bad category id `{s}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const LEX: &str = "%\n1\taffect\n2\tnegemo\t1\n3\tanx\t2\n4\tsocial\n%\nfear*\t3\nfeared\t4\nlove\t1\n";

    #[test]
    fn lookup_adds_prefixes_and_ancestors() {
        let lex = CategoryLexicon::parse(LEX).unwrap();
        assert_eq!(lex.lookup("fearful"), BTreeSet::from([1, 2, 3]));
        assert_eq!(lex.lookup("Feared"), BTreeSet::from([1, 2, 3, 4]));
        assert_eq!(lex.lookup("fear"), BTreeSet::from([1, 2, 3]));
        assert_eq!(lex.lookup("fea"), BTreeSet::new());
        assert_eq!(lex.lookup("love"), BTreeSet::from([1]));
        assert_eq!(lex.lookup("lovely"), BTreeSet::new());
    }

    #[test]
    fn rejects_cycles_and_unknown_ids() {
        assert!(CategoryLexicon::parse("%\n1\ta\t2\n2\tb\t1\n%\n").is_err());
        assert!(CategoryLexicon::parse("%\n1\ta\n%\nx\t9\n").is_err());
        assert!(CategoryLexicon::parse("%\n1\ta\n").is_err());
    }

    #[test]
    fn toy_lexicon_loads() {
        let lex = CategoryLexicon::toy();
        let neg = lex.category_by_name("negemo").unwrap();
        let affect = lex.category_by_name("affect").unwrap();
        let fear = lex.lookup("fear");
        assert!(fear.contains(&neg) && fear.contains(&affect));
    }
}
