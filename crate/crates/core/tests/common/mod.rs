//! Independent reference implementations used by several test targets.
//!
//! Everything here is written for clarity over speed and shares no code with
//! the library.

#![allow(dead_code, clippy::needless_range_loop)]

pub mod checks;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random token sequence of length `0..=max_len` over a small vocabulary so
/// that matches are frequent.
pub fn random_tokens(rng: &mut ChaCha8Rng, max_len: usize, vocab: usize) -> Vec<String> {
    let n = rng.random_range(0..=max_len);
    (0..n).map(|_| format!("w{}", rng.random_range(0..vocab))).collect()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

// ---------------------------------------------------------------- n-grams

/// All n-grams as a list, with repetitions, in order.
pub fn ngram_list(t: &[String], n: usize) -> Vec<Vec<String>> {
    if n == 0 || t.len() < n {
        return Vec::new();
    }
    (0..=t.len() - n).map(|i| t[i..i + n].to_vec()).collect()
}

/// Multiset intersection size by greedy matching with a used-mask.
pub fn clipped_matches<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut used = vec![false; b.len()];
    let mut k = 0;
    for x in a {
        if let Some(j) = (0..b.len()).find(|&j| !used[j] && b[j] == *x) {
            used[j] = true;
            k += 1;
        }
    }
    k
}

pub fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// (precision, recall, f) of ROUGE-N with beta = 1.
pub fn rouge_n(reference: &[String], candidate: &[String], n: usize) -> (f64, f64, f64) {
    let r = ngram_list(reference, n);
    let c = ngram_list(candidate, n);
    if r.is_empty() || c.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let m = clipped_matches(&c, &r) as f64;
    let (p, rc) = (m / c.len() as f64, m / r.len() as f64);
    (p, rc, f1(p, rc))
}

/// Pooled n-gram count cosine with orders 1..=max_order, counting by
/// scanning the distinct n-grams of both sides.
pub fn ngram_cosine(a: &[String], b: &[String], max_order: usize) -> f64 {
    let mut keys: Vec<Vec<String>> = Vec::new();
    let mut la = Vec::new();
    let mut lb = Vec::new();
    for n in 1..=max_order {
        la.extend(ngram_list(a, n));
        lb.extend(ngram_list(b, n));
    }
    for g in la.iter().chain(&lb) {
        if !keys.contains(g) {
            keys.push(g.clone());
        }
    }
    let count = |l: &[Vec<String>], g: &Vec<String>| l.iter().filter(|x| *x == g).count() as f64;
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for g in &keys {
        let (x, y) = (count(&la, g), count(&lb, g));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na.sqrt() * nb.sqrt())).min(1.0)
    }
}

// ---------------------------------------------------------------- LCS family

fn is_subsequence(sub: &[&String], seq: &[String]) -> bool {
    let mut it = seq.iter();
    sub.iter().all(|x| it.any(|y| y == *x))
}

/// LCS length by enumerating every subsequence of the shorter sequence.
pub fn lcs_brute(a: &[String], b: &[String]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut best = 0;
    for mask in 0u32..(1 << short.len()) {
        let k = mask.count_ones() as usize;
        if k <= best {
            continue;
        }
        let sub: Vec<&String> = (0..short.len())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| &short[i])
            .collect();
        if is_subsequence(&sub, long) {
            best = k;
        }
    }
    best
}

pub fn rouge_l(reference: &[String], candidate: &[String]) -> (f64, f64, f64) {
    if reference.is_empty() || candidate.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let l = lcs_brute(reference, candidate) as f64;
    let (p, r) = (l / candidate.len() as f64, l / reference.len() as f64);
    (p, r, f1(p, r))
}

/// Weighted LCS by enumerating every strictly increasing matching between
/// `a` and `b`; each maximal run of `k` diagonal-consecutive matches scores
/// `k^w`.
pub fn wlcs_brute(a: &[String], b: &[String], w: f64) -> f64 {
    fn go(a: &[String], b: &[String], i0: usize, j0: usize, path: &mut Vec<(usize, usize)>, w: f64, best: &mut f64) {
        *best = best.max(score(path, w));
        for i in i0..a.len() {
            for j in j0..b.len() {
                if a[i] == b[j] {
                    path.push((i, j));
                    go(a, b, i + 1, j + 1, path, w, best);
                    path.pop();
                }
            }
        }
    }
    fn score(path: &[(usize, usize)], w: f64) -> f64 {
        let mut total = 0.0;
        let mut run = 0usize;
        for (k, &(i, j)) in path.iter().enumerate() {
            if k > 0 && path[k - 1] == (i.wrapping_sub(1), j.wrapping_sub(1)) {
                run += 1;
            } else {
                if run > 0 {
                    total += (run as f64).powf(w);
                }
                run = 1;
            }
        }
        if run > 0 {
            total += (run as f64).powf(w);
        }
        total
    }
    let mut best = 0.0;
    go(a, b, 0, 0, &mut Vec::new(), w, &mut best);
    best
}

pub fn rouge_w(reference: &[String], candidate: &[String], w: f64) -> (f64, f64, f64) {
    if reference.is_empty() || candidate.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let s = wlcs_brute(reference, candidate, w);
    let r = (s / (reference.len() as f64).powf(w)).powf(1.0 / w).min(1.0);
    let p = (s / (candidate.len() as f64).powf(w)).powf(1.0 / w).min(1.0);
    (p, r, f1(p, r))
}

/// Ordered skip-bigrams (i < j) as a list with repetitions.
pub fn skip_bigram_list<T: Clone>(t: &[T]) -> Vec<(T, T)> {
    let mut out = Vec::new();
    for i in 0..t.len() {
        for j in i + 1..t.len() {
            out.push((t[i].clone(), t[j].clone()));
        }
    }
    out
}

fn skip_score(r: &[Option<String>], c: &[Option<String>]) -> (f64, f64, f64) {
    let rb = skip_bigram_list(r);
    let cb = skip_bigram_list(c);
    if rb.is_empty() || cb.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let m = clipped_matches(&cb, &rb) as f64;
    let (p, rc) = (m / cb.len() as f64, m / rb.len() as f64);
    (p, rc, f1(p, rc))
}

pub fn rouge_s(reference: &[String], candidate: &[String]) -> (f64, f64, f64) {
    let r: Vec<Option<String>> = reference.iter().cloned().map(Some).collect();
    let c: Vec<Option<String>> = candidate.iter().cloned().map(Some).collect();
    skip_score(&r, &c)
}

/// Skip-bigrams plus unigrams, the latter as pairs with a start marker that
/// cannot collide with any token.
pub fn rouge_su(reference: &[String], candidate: &[String]) -> (f64, f64, f64) {
    if reference.is_empty() || candidate.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let r: Vec<Option<String>> = std::iter::once(None)
        .chain(reference.iter().cloned().map(Some))
        .collect();
    let c: Vec<Option<String>> = std::iter::once(None)
        .chain(candidate.iter().cloned().map(Some))
        .collect();
    skip_score(&r, &c)
}

// ---------------------------------------------------------------- lexicon

/// A lexicon described as plain data: categories with optional parents and
/// entries `(pattern, ids)` where a trailing `*` means prefix match.
pub struct LexSpec {
    pub categories: Vec<(u32, String, Option<u32>)>,
    pub entries: Vec<(String, Vec<u32>)>,
}

impl LexSpec {
    pub fn to_text(&self) -> String {
        let mut s = String::from("%\n");
        for (id, name, parent) in &self.categories {
            match parent {
                Some(p) => s.push_str(&format!("{id}\t{name}\t{p}\n")),
                None => s.push_str(&format!("{id}\t{name}\n")),
            }
        }
        s.push_str("%\n");
        for (pat, ids) in &self.entries {
            let ids: Vec<String> = ids.iter().map(u32::to_string).collect();
            s.push_str(&format!("{pat}\t{}\n", ids.join(",")));
        }
        s
    }

    /// Linear scan over entries, then ancestor closure.
    pub fn lookup(&self, word: &str) -> Vec<u32> {
        let word = word.to_lowercase();
        let mut out: Vec<u32> = Vec::new();
        for (pat, ids) in &self.entries {
            let hit = match pat.strip_suffix('*') {
                Some(prefix) => word.starts_with(prefix),
                None => word == *pat,
            };
            if hit {
                for &id in ids {
                    let mut cur = Some(id);
                    while let Some(c) = cur {
                        if !out.contains(&c) {
                            out.push(c);
                        }
                        cur = self.categories.iter().find(|x| x.0 == c).and_then(|x| x.2);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Governor-lexicalized tuples of a dependency tree given as
/// `(surface, head)` with 0-based heads and `None` for the root.
pub fn dep_tuples(tokens: &[(String, Option<usize>)], lex: &LexSpec) -> Vec<(String, u32)> {
    let mut out = Vec::new();
    for (surface, head) in tokens {
        if let Some(h) = head {
            let gov = tokens[*h].0.to_lowercase();
            for c in lex.lookup(surface) {
                out.push((gov.clone(), c));
            }
        }
    }
    out
}

pub fn dep_overlap(a: &[(String, Option<usize>)], b: &[(String, Option<usize>)], lex: &LexSpec) -> f64 {
    let ta = dep_tuples(a, lex);
    let tb = dep_tuples(b, lex);
    let denom = (a.len() + b.len()) as f64;
    if denom == 0.0 {
        0.0
    } else {
        clipped_matches(&ta, &tb) as f64 / denom
    }
}

/// Random tree over `n` tokens: token 0 is the root, every other token
/// attaches to an earlier one, then positions are shuffled.
pub fn random_tree(rng: &mut ChaCha8Rng, words: &[String]) -> Vec<(String, Option<usize>)> {
    let n = words.len();
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        perm.swap(i, j);
    }
    let mut heads = vec![None; n];
    for k in 1..n {
        heads[perm[k]] = Some(perm[rng.random_range(0..k)]);
    }
    words.iter().cloned().zip(heads).collect()
}

pub fn to_conllu(id: &str, tokens: &[(String, Option<usize>)]) -> String {
    let mut s = format!("# sent_id = {id}\n");
    for (i, (w, h)) in tokens.iter().enumerate() {
        let (head, rel) = match h {
            Some(h) => (h + 1, "dep"),
            None => (0, "root"),
        };
        s.push_str(&format!("{}\t{w}\t{w}\tNOUN\t_\t_\t{head}\t{rel}\t_\t_\n", i + 1));
    }
    s.push('\n');
    s
}

// ---------------------------------------------------------------- linear algebra

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

/// Ridge with an unpenalized intercept from the augmented normal equations
/// `[X 1]^T [X 1] + diag(alpha, .., alpha, 0)`. Returns (weights, intercept).
pub fn ridge_normal_equations(x: &[Vec<f64>], y: &[f64], alpha: f64) -> (Vec<f64>, f64) {
    let p = x[0].len();
    let aug: Vec<Vec<f64>> = x
        .iter()
        .map(|r| {
            let mut v = r.clone();
            v.push(1.0);
            v
        })
        .collect();
    let mut a = vec![vec![0.0; p + 1]; p + 1];
    let mut b = vec![0.0; p + 1];
    for (row, t) in aug.iter().zip(y) {
        for i in 0..=p {
            b[i] += row[i] * t;
            for j in 0..=p {
                a[i][j] += row[i] * row[j];
            }
        }
    }
    for (i, r) in a.iter_mut().enumerate().take(p) {
        r[i] += alpha;
    }
    let mut w = gauss_solve(a, b);
    let intercept = w.pop().unwrap();
    (w, intercept)
}

// ---------------------------------------------------------------- SVR QP

pub fn rbf(u: &[f64], v: &[f64], gamma: f64) -> f64 {
    (-gamma * u.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum::<f64>()).exp()
}

/// Projects `v` onto `{z in [0, c]^m : sum(sign_i z_i) = 0}` by bisection on
/// the multiplier.
fn project(v: &[f64], sign: &[f64], c: f64) -> Vec<f64> {
    let at = |lambda: f64| -> (Vec<f64>, f64) {
        let z: Vec<f64> = v
            .iter()
            .zip(sign)
            .map(|(x, s)| (x - lambda * s).clamp(0.0, c))
            .collect();
        let g = z.iter().zip(sign).map(|(a, s)| a * s).sum();
        (z, g)
    };
    let span = v.iter().fold(0.0f64, |m, x| m.max(x.abs())) + c + 1.0;
    let (mut lo, mut hi) = (-span, span);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if at(mid).1 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi)).0
}

/// Epsilon-SVR dual solved over `(alpha, alpha*)` by accelerated projected
/// gradient. Returns `beta = alpha - alpha*` and the bias.
pub fn svr_projected_gradient(k: &[Vec<f64>], y: &[f64], c: f64, eps: f64, iters: usize) -> (Vec<f64>, f64) {
    let n = y.len();
    let m = 2 * n;
    let sign: Vec<f64> = (0..m).map(|i| if i < n { 1.0 } else { -1.0 }).collect();
    // Lipschitz constant of the gradient: 2 * largest eigenvalue of K, bounded
    // by 2 * max row sum.
    let lip = 2.0
        * k.iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
    let step = 1.0 / lip;
    let grad = |z: &[f64]| -> Vec<f64> {
        let beta: Vec<f64> = (0..n).map(|i| z[i] - z[n + i]).collect();
        let kb: Vec<f64> = (0..n).map(|i| (0..n).map(|j| k[i][j] * beta[j]).sum()).collect();
        let mut g = vec![0.0; m];
        for i in 0..n {
            g[i] = kb[i] + eps - y[i];
            g[n + i] = -kb[i] + eps + y[i];
        }
        g
    };
    let mut z = vec![0.0; m];
    let mut yk = z.clone();
    let mut t = 1.0f64;
    for _ in 0..iters {
        let g = grad(&yk);
        let v: Vec<f64> = yk.iter().zip(&g).map(|(a, b)| a - step * b).collect();
        let z_next = project(&v, &sign, c);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        yk = z_next
            .iter()
            .zip(&z)
            .map(|(a, b)| a + (t - 1.0) / t_next * (a - b))
            .collect();
        z = z_next;
        t = t_next;
    }
    let beta: Vec<f64> = (0..n).map(|i| z[i] - z[n + i]).collect();
    let kb: Vec<f64> = (0..n).map(|i| (0..n).map(|j| k[i][j] * beta[j]).sum()).collect();
    let r: Vec<f64> = (0..n).map(|i| y[i] - kb[i]).collect();
    (beta, optimal_bias(&r, eps))
}

/// Minimizer of the epsilon-insensitive loss `sum max(0, |r_i - b| - eps)`
/// over `b`; the midpoint when the minimizers form an interval. The loss is
/// convex and piecewise linear, so its minimizers are spanned by breakpoints.
pub fn optimal_bias(r: &[f64], eps: f64) -> f64 {
    let loss = |b: f64| r.iter().map(|v| ((v - b).abs() - eps).max(0.0)).sum::<f64>();
    let points: Vec<f64> = r.iter().flat_map(|v| [v - eps, v + eps]).collect();
    let values: Vec<f64> = points.iter().map(|&b| loss(b)).collect();
    let best = values.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = 1e-12 * (1.0 + best);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (b, v) in points.iter().zip(&values) {
        if *v <= best + tol {
            lo = lo.min(*b);
            hi = hi.max(*b);
        }
    }
    0.5 * (lo + hi)
}

// ---------------------------------------------------------------- statistics

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Pearson r by the two-pass textbook formula.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

pub fn rmse(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

/// Paired t statistic with the sample sd of differences.
pub fn paired_t(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let m = mean(&d);
    let sd = (d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (d.len() - 1) as f64).sqrt();
    m / (sd / (d.len() as f64).sqrt())
}
