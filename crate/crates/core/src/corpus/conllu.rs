//! CoNLL-U reader and writer.
//!
//! Sentence-level metadata travels in comment lines: `sent_id`, `text`, and
//! the non-standard `topic`, `post_id` and `aq_score` keys written by
//! [`write_conllu`].

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use super::{ParsedSentence, Token};
use crate::error::{Error, Result};

/// Sentences parsed from one stream together with the records that failed.
#[derive(Debug, Default)]
pub struct ConlluParse {
    pub sentences: Vec<ParsedSentence>,
    pub errors: Vec<Error>,
}

pub fn parse_conllu(input: &str) -> ConlluParse {
    parse_conllu_named(input, "<stream>", "")
}

/// Parses a CoNLL-U document. `source_name` is used for generated sentence
/// ids (`name:line`) and error messages; `default_topic` fills sentences
/// without a `# topic =` comment.
pub fn parse_conllu_named(input: &str, source_name: &str, default_topic: &str) -> ConlluParse {
    let mut out = ConlluParse::default();
    let mut block: Vec<(usize, &str)> = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            if !block.is_empty() {
                push_block(&block, source_name, default_topic, &mut out);
                block.clear();
            }
        } else {
            block.push((idx + 1, line));
        }
    }
    if !block.is_empty() {
        push_block(&block, source_name, default_topic, &mut out);
    }
    out
}

fn push_block(block: &[(usize, &str)], source: &str, topic: &str, out: &mut ConlluParse) {
    match parse_block(block, source, topic) {
        Ok(Some(s)) => out.sentences.push(s),
        Ok(None) => {}
        Err(e) => out.errors.push(e),
    }
}

fn record_err(source: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Record {
        source_name: source.to_string(),
        line,
        message: message.into(),
    }
}

fn parse_block(block: &[(usize, &str)], source: &str, topic: &str) -> Result<Option<ParsedSentence>> {
    let start_line = block[0].0;
    let mut id = None;
    let mut text = None;
    let mut sent_topic = None;
    let mut post_id = None;
    let mut aq_score = None;
    let mut tokens = Vec::new();

    for &(lineno, line) in block {
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                let value = value.trim().to_string();
                match key.trim() {
                    "sent_id" => id = Some(value),
                    "text" => text = Some(value),
                    "topic" => sent_topic = Some(value),
                    "post_id" => post_id = Some(value),
                    "aq_score" => {
                        let v: f64 = value
                            .parse()
                            .map_err(|_| record_err(source, lineno, "aq_score is not a number"))?;
                        aq_score = Some(v);
                    }
                    _ => {}
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(record_err(
                source,
                lineno,
                format!("expected 10 tab-separated columns, found {}", cols.len()),
            ));
        }
        // Multiword ranges and empty nodes carry no tree position.
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let position: usize = cols[0]
            .parse()
            .map_err(|_| record_err(source, lineno, format!("bad token id `{}`", cols[0])))?;
        if position != tokens.len() + 1 {
            return Err(record_err(
                source,
                lineno,
                format!("token id {position} out of sequence"),
            ));
        }
        let head: usize = cols[6]
            .parse()
            .map_err(|_| record_err(source, lineno, format!("non-integer HEAD `{}`", cols[6])))?;
        tokens.push((
            lineno,
            Token {
                surface: cols[1].to_string(),
                lemma: cols[2].to_string(),
                upos: cols[3].to_string(),
                head: head.checked_sub(1),
                deprel: cols[7].to_string(),
            },
        ));
    }

    if tokens.is_empty() {
        return if id.is_some() || text.is_some() {
            Err(record_err(source, start_line, "sentence block without tokens"))
        } else {
            Ok(None)
        };
    }
    let n = tokens.len();
    let mut roots = 0;
    for (i, (lineno, tok)) in tokens.iter().enumerate() {
        match tok.head {
            None => roots += 1,
            Some(h) if h >= n => {
                return Err(record_err(
                    source,
                    *lineno,
                    format!("HEAD {} beyond sentence length", h + 1),
                ))
            }
            Some(h) if h == i => return Err(record_err(source, *lineno, "token is its own head")),
            Some(_) => {}
        }
        if tok.surface.is_empty() {
            return Err(record_err(source, *lineno, "empty FORM"));
        }
    }
    if roots > 1 {
        return Err(record_err(source, start_line, format!("{roots} root tokens")));
    }
    let tokens: Vec<Token> = tokens.into_iter().map(|(_, t)| t).collect();
    let raw_text = text.unwrap_or_else(|| tokens.iter().map(|t| t.surface.as_str()).collect::<Vec<_>>().join(" "));
    Ok(Some(ParsedSentence {
        id: id.unwrap_or_else(|| format!("{source}:{start_line}")),
        topic: sent_topic.unwrap_or_else(|| topic.to_string()),
        post_id: post_id.unwrap_or_default(),
        raw_text,
        tokens,
        aq_score,
        has_dependencies: true,
    }))
}

/// Serializes sentences so that [`parse_conllu`] reproduces them.
/// Sentences without dependency annotations are written as flat trees
/// hanging off the first token.
pub fn write_conllu(sentences: &[ParsedSentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        let _ = writeln!(out, "# sent_id = {}", s.id);
        if !s.topic.is_empty() {
            let _ = writeln!(out, "# topic = {}", s.topic);
        }
        if !s.post_id.is_empty() {
            let _ = writeln!(out, "# post_id = {}", s.post_id);
        }
        if let Some(aq) = s.aq_score {
            let _ = writeln!(out, "# aq_score = {aq}");
        }
        let _ = writeln!(out, "# text = {}", s.raw_text.replace(['\n', '\r'], " "));
        for (i, t) in s.tokens.iter().enumerate() {
            let head = match (s.has_dependencies, t.head) {
                (true, Some(h)) => h + 1,
                (true, None) => 0,
                (false, _) => usize::from(i > 0),
            };
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t_\t_\t{}\t{}\t_\t_",
                i + 1,
                t.surface,
                if t.lemma.is_empty() { "_" } else { &t.lemma },
                t.upos,
                head,
                t.deprel
            );
        }
        out.push('\n');
    }
    out
}

/// Reads every `*.conllu` file in `dir` (sorted by file name). Files are
/// parsed in parallel; sentence order within and across files is stable.
pub fn read_conllu_dir(dir: &Path, default_topic: &str) -> Result<(ConlluParse, Vec<(String, usize)>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "conllu"))
        .collect();
    files.sort();
    let parsed: Vec<Result<(String, ConlluParse)>> = files
        .par_iter()
        .map(|path| {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let name = path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            let parse = parse_conllu_named(&text, &name, default_topic);
            Ok((name, parse))
        })
        .collect();
    let mut all = ConlluParse::default();
    let mut manifest = Vec::new();
    for p in parsed {
        let (name, parse) = p?;
        manifest.push((name, parse.sentences.len()));
        all.sentences.extend(parse.sentences);
        all.errors.extend(parse.errors);
    }
    Ok((all, manifest))
}
