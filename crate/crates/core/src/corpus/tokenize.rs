/// Punctuation as far as token trimming is concerned: ASCII punctuation plus
/// the typographic quotes and dashes common in forum text.
pub fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2018}'..='\u{201F}' | '\u{2010}'..='\u{2015}' | '\u{2026}' | '«' | '»' | '¿' | '¡'
        )
}

/// True for tokens consisting only of punctuation characters.
pub fn is_punct_token(tok: &str) -> bool {
    !tok.is_empty() && tok.chars().all(is_punct)
}

/// Whitespace split with leading and trailing punctuation stripped from each
/// piece. Internal punctuation (apostrophes, hyphens) is kept and case is
/// preserved.
pub fn tokenize_raw(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|piece| piece.trim_matches(is_punct))
        .filter(|piece| !piece.is_empty())
        .map(str::to_string)
        .collect()
}
