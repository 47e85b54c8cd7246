use std::collections::HashMap;

pub(crate) fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if n > 0 && tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Cosine of n-gram count vectors with orders `1..=max_order` pooled into
/// one space. Inputs are expected lowercased. Zero when either side has no
/// n-grams.
pub fn ngram_cosine(a: &[String], b: &[String], max_order: usize) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for n in 1..=max_order {
        let ca = ngram_counts(a, n);
        let cb = ngram_counts(b, n);
        for (g, &x) in &ca {
            na += (x * x) as f64;
            if let Some(&y) = cb.get(g) {
                dot += (x * y) as f64;
            }
        }
        nb += cb.values().map(|&y| (y * y) as f64).sum::<f64>();
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na.sqrt() * nb.sqrt())).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn identical_is_one() {
        let a = toks("the death penalty deters murder");
        assert!((ngram_cosine(&a, &a, 3) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hand_counted_prefix_pair() {
        // a: {guns, kill, guns_kill}; b adds people, kill_people, guns_kill_people
        let v = ngram_cosine(&toks("guns kill"), &toks("guns kill people"), 3);
        assert!((v - 3.0 / (3.0f64 * 6.0).sqrt()).abs() < 1e-15);
        assert!((v - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn disjoint_and_empty() {
        assert_eq!(ngram_cosine(&toks("a b"), &toks("c d"), 3), 0.0);
        assert_eq!(ngram_cosine(&[], &toks("c d"), 3), 0.0);
    }
}
