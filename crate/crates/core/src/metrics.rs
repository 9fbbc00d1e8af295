//! Corpus-level BLEU over pre-tokenized sentences.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

pub const MAX_N: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct BleuResult {
    /// 0 to 100.
    pub score: f64,
    pub precisions: [f64; MAX_N],
    pub brevity_penalty: f64,
    pub hyp_len: usize,
    pub ref_len: usize,
}

impl fmt::Display for BleuResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p: Vec<String> = self.precisions.iter().map(|p| format!("{:.1}", p * 100.0)).collect();
        write!(
            f,
            "BLEU = {:.2} {} (BP = {:.3} ratio = {:.3} hyp_len = {} ref_len = {})",
            self.score,
            p.join("/"),
            self.brevity_penalty,
            if self.ref_len == 0 { 0.0 } else { self.hyp_len as f64 / self.ref_len as f64 },
            self.hyp_len,
            self.ref_len
        )
    }
}

fn ngram_counts<'a, S: AsRef<str>>(tokens: &'a [S], n: usize) -> HashMap<Vec<&'a str>, usize> {
    let mut out = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *out.entry(w.iter().map(AsRef::as_ref).collect()).or_insert(0) += 1;
        }
    }
    out
}

/// Clipped 1..4-gram precision with a brevity penalty. With `smooth`, orders
/// 2 to 4 use `(matches + 1) / (total + 1)`. An order with no hypothesis
/// n-grams has precision 0.
pub fn corpus_bleu<H, R>(hypotheses: &[Vec<H>], references: &[Vec<R>], smooth: bool) -> Result<BleuResult>
where
    H: AsRef<str>,
    R: AsRef<str>,
{
    if hypotheses.len() != references.len() {
        return Err(Error::Structural(format!(
            "{} hypotheses but {} references",
            hypotheses.len(),
            references.len()
        )));
    }
    if hypotheses.is_empty() {
        return Err(Error::Structural("no sentences to score".into()));
    }
    let mut matches = [0usize; MAX_N];
    let mut totals = [0usize; MAX_N];
    let mut hyp_len = 0;
    let mut ref_len = 0;
    for (h, r) in hypotheses.iter().zip(references) {
        hyp_len += h.len();
        ref_len += r.len();
        for n in 1..=MAX_N {
            let hc = ngram_counts(h, n);
            let rc = ngram_counts(r, n);
            for (g, c) in &hc {
                matches[n - 1] += (*c).min(rc.get(g).copied().unwrap_or(0));
                totals[n - 1] += c;
            }
        }
    }
    let mut precisions = [0.0; MAX_N];
    for n in 0..MAX_N {
        precisions[n] = if smooth && n > 0 {
            (matches[n] + 1) as f64 / (totals[n] + 1) as f64
        } else if totals[n] == 0 {
            0.0
        } else {
            matches[n] as f64 / totals[n] as f64
        };
    }
    let brevity_penalty = if hyp_len == 0 {
        0.0
    } else if hyp_len >= ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };
    let score = if precisions.iter().any(|&p| p == 0.0) {
        0.0
    } else {
        let log_mean = precisions.iter().map(|p| p.ln()).sum::<f64>() / MAX_N as f64;
        brevity_penalty * log_mean.exp() * 100.0
    };
    Ok(BleuResult {
        score,
        precisions,
        brevity_penalty,
        hyp_len,
        ref_len,
    })
}
