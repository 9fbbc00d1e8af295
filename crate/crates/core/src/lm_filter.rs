//! Word n-gram language model and perplexity-based selection of synthetic pairs.
//!
//! Smoothing is interpolated absolute discounting. With `c` the training
//! counts, `D` the discount and `N1+(h)` the number of distinct words seen
//! after context `h`:
//!
//! ```text
//! p(w | h) = max(c(h w) - D, 0) / c(h) + D * N1+(h) / c(h) * p(w | h')
//! p(w)     = max(c(w) - D, 0) / N     + D * |V| / N       * 1 / (|V| + 1)
//! ```
//!
//! where `h'` drops the oldest word of `h`, `V` holds the training words and
//! `</s>`, and the extra `+ 1` reserves mass for `<unk>`. Contexts never seen
//! in training fall through to `p(w | h')` unchanged.
//!
//! The model is stored in back-off form (probability of every observed
//! n-gram plus a weight per context), which is exactly the ARPA layout.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::augmentor::{format_pool_line, parse_pool_line, SyntheticPair};
use crate::corpus::read_lines;
use crate::error::{Error, Result};

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

const UNK_ID: u32 = 0;
const BOS_ID: u32 = 1;
const EOS_ID: u32 = 2;

/// Highest supported order.
pub const MAX_ORDER: usize = 8;

/// Probability given to unknown words when the model reserves no mass for them.
pub const UNK_FLOOR: f64 = 1e-10;

/// log10 value written for zero probabilities.
const ARPA_LOG_ZERO: f64 = -99.0;

#[derive(Clone, Debug, PartialEq)]
pub struct LmConfig {
    pub order: usize,
    pub discount: f64,
    /// Reserve `1 / (|V| + 1)` of the base distribution for `<unk>`.
    pub open_vocabulary: bool,
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig {
            order: 3,
            discount: 0.75,
            open_vocabulary: true,
        }
    }
}

/// Anything that can score a tokenized sentence.
pub trait LanguageModel: Sync {
    /// Sum of log2 probabilities over the sentence and `</s>`, and the number
    /// of scored positions.
    fn log2_prob(&self, sentence: &[&str]) -> (f64, usize);

    /// `exp(-(1/t) * sum ln p)`, computed in base 2.
    fn perplexity(&self, sentence: &[&str]) -> Result<f64> {
        if sentence.is_empty() {
            return Err(Error::Domain("perplexity of an empty sentence".into()));
        }
        let (sum, t) = self.log2_prob(sentence);
        Ok((-sum / t as f64).exp2())
    }

    /// Perplexity of several sentences taken as one stream of scored positions.
    fn corpus_perplexity(&self, sentences: &[Vec<&str>]) -> Result<f64> {
        let mut sum = 0.0;
        let mut t = 0;
        for s in sentences {
            if s.is_empty() {
                return Err(Error::Domain("perplexity of an empty sentence".into()));
            }
            let (ls, lt) = self.log2_prob(s);
            sum += ls;
            t += lt;
        }
        if t == 0 {
            return Err(Error::Domain("perplexity of an empty corpus".into()));
        }
        Ok((-sum / t as f64).exp2())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Entry {
    prob: f64,
    backoff: f64,
}

impl Default for Entry {
    fn default() -> Self {
        Entry {
            prob: 0.0,
            backoff: 1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NGramLM {
    order: usize,
    discount: f64,
    open_vocabulary: bool,
    words: Vec<String>,
    ids: HashMap<String, u32>,
    /// `levels[k]` holds n-grams of length `k + 1`.
    levels: Vec<HashMap<Box<[u32]>, Entry>>,
}

impl NGramLM {
    fn empty(order: usize, discount: f64, open_vocabulary: bool) -> Self {
        let mut lm = NGramLM {
            order,
            discount,
            open_vocabulary,
            words: Vec::new(),
            ids: HashMap::new(),
            levels: vec![HashMap::new(); order],
        };
        for w in [UNK, BOS, EOS] {
            lm.intern(w);
        }
        lm
    }

    fn intern(&mut self, w: &str) -> u32 {
        if let Some(&id) = self.ids.get(w) {
            return id;
        }
        let id = self.words.len() as u32;
        self.words.push(w.to_string());
        self.ids.insert(w.to_string(), id);
        id
    }

    fn id(&self, w: &str) -> u32 {
        self.ids.get(w).copied().unwrap_or(UNK_ID)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    /// Predictable vocabulary: training words and `</s>`.
    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.words
            .iter()
            .enumerate()
            .filter(|&(i, _)| i as u32 != UNK_ID && i as u32 != BOS_ID)
            .map(|(_, w)| w.as_str())
    }

    pub fn vocabulary_size(&self) -> usize {
        self.words.len() - 2
    }

    /// Contexts with at least one observed continuation, as word sequences.
    pub fn observed_contexts(&self) -> Vec<Vec<String>> {
        let mut out = vec![Vec::new()];
        for k in 1..self.order {
            let mut ctx: Vec<Vec<String>> = self.levels[k]
                .keys()
                .map(|key| key[..k].iter().map(|&i| self.words[i as usize].clone()).collect())
                .collect();
            ctx.sort();
            ctx.dedup();
            out.extend(ctx);
        }
        out
    }

    fn unigram(&self, w: u32) -> f64 {
        match self.levels[0].get(&[w][..]) {
            Some(e) if e.prob > 0.0 => e.prob,
            _ => UNK_FLOOR,
        }
    }

    /// p(w | ctx) in back-off form; `ctx` may be longer than needed.
    fn prob_ids(&self, ctx: &[u32], w: u32) -> f64 {
        let n = ctx.len().min(self.order - 1);
        let ctx = &ctx[ctx.len() - n..];
        let mut key = [0u32; MAX_ORDER];
        let mut weight = 1.0;
        for l in (1..=n).rev() {
            let h = &ctx[n - l..];
            key[..l].copy_from_slice(h);
            key[l] = w;
            if let Some(e) = self.levels[l].get(&key[..=l]) {
                if e.prob > 0.0 {
                    return weight * e.prob;
                }
            }
            if let Some(e) = self.levels[l - 1].get(h) {
                weight *= e.backoff;
            }
        }
        weight * self.unigram(w)
    }

    /// p(word | context) with words as strings; unknown words map to `<unk>`.
    pub fn prob(&self, context: &[&str], word: &str) -> f64 {
        let ctx: Vec<u32> = context.iter().map(|w| self.id(w)).collect();
        self.prob_ids(&ctx, self.id(word))
    }

    /// Probability of `<unk>` at the unigram level.
    pub fn unknown_prob(&self) -> f64 {
        self.unigram(UNK_ID)
    }

    pub fn write_arpa(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_arpa_to(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_arpa_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(
            w,
            "# order={} discount={} open_vocabulary={}",
            self.order, self.discount, self.open_vocabulary
        )?;
        writeln!(w)?;
        writeln!(w, "\\data\\")?;
        for (k, level) in self.levels.iter().enumerate() {
            writeln!(w, "ngram {}={}", k + 1, level.len())?;
        }
        for (k, level) in self.levels.iter().enumerate() {
            writeln!(w)?;
            writeln!(w, "\\{}-grams:", k + 1)?;
            let mut rows: Vec<(Vec<&str>, &Entry)> = level
                .iter()
                .map(|(key, e)| (key.iter().map(|&i| self.words[i as usize].as_str()).collect(), e))
                .collect();
            rows.sort_by(|a, b| a.0.cmp(&b.0));
            for (words, e) in rows {
                let lp = if e.prob > 0.0 { e.prob.log10() } else { ARPA_LOG_ZERO };
                write!(w, "{lp}\t{}", words.join(" "))?;
                if k + 1 < self.order && e.backoff != 1.0 {
                    write!(w, "\t{}", e.backoff.log10())?;
                }
                writeln!(w)?;
            }
        }
        writeln!(w)?;
        writeln!(w, "\\end\\")
    }

    pub fn read_arpa(path: &Path) -> Result<Self> {
        let lines = read_lines(path)?;
        let bad = |line: usize, msg: &str| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: msg.to_string(),
        };
        let mut discount = f64::NAN;
        let mut open = true;
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        let mut section: Option<usize> = None;
        let mut in_data = false;
        let mut lm: Option<NGramLM> = None;
        for (i, raw) in lines.iter().enumerate() {
            let line = raw.trim();
            let lineno = i + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                for kv in rest.split_whitespace() {
                    match kv.split_once('=') {
                        Some(("discount", v)) => discount = v.parse().unwrap_or(f64::NAN),
                        Some(("open_vocabulary", v)) => open = v == "true",
                        _ => {}
                    }
                }
                continue;
            }
            if line == "\\data\\" {
                in_data = true;
                continue;
            }
            if line == "\\end\\" {
                break;
            }
            if let Some(n) = line.strip_prefix('\\').and_then(|s| s.strip_suffix("-grams:")) {
                let n: usize = n.parse().map_err(|_| bad(lineno, "bad section header"))?;
                if lm.is_none() {
                    let order = counts.keys().copied().max().unwrap_or(0);
                    if order == 0 || order > MAX_ORDER {
                        return Err(bad(lineno, "missing or unsupported ngram counts"));
                    }
                    lm = Some(NGramLM::empty(order, discount, open));
                }
                if n == 0 || n > lm.as_ref().unwrap().order {
                    return Err(bad(lineno, "section order out of range"));
                }
                section = Some(n);
                in_data = false;
                continue;
            }
            if in_data {
                let spec = line.strip_prefix("ngram ").ok_or_else(|| bad(lineno, "expected ngram count"))?;
                let (n, c) = spec.split_once('=').ok_or_else(|| bad(lineno, "expected ngram N=count"))?;
                let n: usize = n.trim().parse().map_err(|_| bad(lineno, "bad ngram order"))?;
                let c: usize = c.trim().parse().map_err(|_| bad(lineno, "bad ngram count"))?;
                counts.insert(n, c);
                continue;
            }
            let (Some(n), Some(model)) = (section, lm.as_mut()) else {
                return Err(bad(lineno, "n-gram line outside a section"));
            };
            let cols: Vec<&str> = line.split('\t').collect();
            let (lp, words, bo) = match cols.as_slice() {
                [lp, words] => (*lp, *words, None),
                [lp, words, bo] => (*lp, *words, Some(*bo)),
                _ => {
                    // tolerate space-separated files
                    let toks: Vec<&str> = line.split_whitespace().collect();
                    if toks.len() < n + 1 {
                        return Err(bad(lineno, "short n-gram line"));
                    }
                    let bo = (toks.len() == n + 2).then(|| toks[n + 1]);
                    let words = toks[1..=n].join(" ");
                    let lp: f64 = toks[0].parse().map_err(|_| bad(lineno, "bad log probability"))?;
                    let bo = bo.map(|b| b.parse::<f64>()).transpose().map_err(|_| bad(lineno, "bad back-off"))?;
                    model.insert_arpa(n, &words, lp, bo);
                    continue;
                }
            };
            let lp: f64 = lp.parse().map_err(|_| bad(lineno, "bad log probability"))?;
            let bo = bo
                .map(|b| b.parse::<f64>())
                .transpose()
                .map_err(|_| bad(lineno, "bad back-off"))?;
            if words.split(' ').count() != n {
                return Err(bad(lineno, "word count does not match section"));
            }
            model.insert_arpa(n, words, lp, bo);
        }
        let lm = lm.ok_or_else(|| bad(lines.len(), "no n-gram sections"))?;
        for (n, c) in counts {
            if lm.levels.get(n - 1).map(HashMap::len) != Some(c) {
                return Err(Error::Structural(format!(
                    "{}: header announces {c} {n}-grams, file has {}",
                    path.display(),
                    lm.levels.get(n - 1).map(HashMap::len).unwrap_or(0)
                )));
            }
        }
        Ok(lm)
    }

    fn insert_arpa(&mut self, n: usize, words: &str, log_prob: f64, log_backoff: Option<f64>) {
        let key: Box<[u32]> = words.split(' ').map(|w| self.intern(w)).collect();
        let prob = if log_prob <= ARPA_LOG_ZERO { 0.0 } else { 10f64.powf(log_prob) };
        let backoff = log_backoff.map(|b| 10f64.powf(b)).unwrap_or(1.0);
        self.levels[n - 1].insert(key, Entry { prob, backoff });
    }
}

impl LanguageModel for NGramLM {
    fn log2_prob(&self, sentence: &[&str]) -> (f64, usize) {
        let pad = self.order - 1;
        let mut seq: Vec<u32> = Vec::with_capacity(sentence.len() + pad + 1);
        seq.extend(std::iter::repeat(BOS_ID).take(pad));
        seq.extend(sentence.iter().map(|w| self.id(w)));
        seq.push(EOS_ID);
        let mut sum = 0.0;
        for p in pad..seq.len() {
            sum += self.prob_ids(&seq[p - pad..p], seq[p]).log2();
        }
        (sum, seq.len() - pad)
    }
}

/// Trains an n-gram model on tokenized sentences. Each sentence is padded
/// with `order - 1` begin symbols and one end symbol.
pub fn train_lm<S: AsRef<str>>(sentences: &[Vec<S>], cfg: &LmConfig) -> Result<NGramLM> {
    if cfg.order == 0 || cfg.order > MAX_ORDER {
        return Err(Error::Config(format!(
            "language model order must be in 1..={MAX_ORDER}, got {}",
            cfg.order
        )));
    }
    if !(0.0..1.0).contains(&cfg.discount) {
        return Err(Error::Config(format!(
            "discount must be in [0, 1), got {}",
            cfg.discount
        )));
    }
    if !sentences.iter().any(|s| !s.is_empty()) {
        return Err(Error::Config(
            "language model needs at least one non-empty sentence".into(),
        ));
    }
    let order = cfg.order;
    let d = cfg.discount;
    let mut lm = NGramLM::empty(order, d, cfg.open_vocabulary);

    let mut counts: Vec<HashMap<Box<[u32]>, u64>> = vec![HashMap::new(); order];
    let pad = order - 1;
    let mut seq = Vec::new();
    for s in sentences.iter().filter(|s| !s.is_empty()) {
        seq.clear();
        seq.extend(std::iter::repeat(BOS_ID).take(pad));
        for w in s {
            let id = lm.intern(w.as_ref());
            seq.push(id);
        }
        seq.push(EOS_ID);
        for p in pad..seq.len() {
            for len in 1..=order {
                *counts[len - 1].entry(seq[p + 1 - len..=p].into()).or_insert(0) += 1;
            }
        }
    }

    // unigrams
    let total: u64 = counts[0].values().sum();
    let n_types = counts[0].len();
    let base = if cfg.open_vocabulary {
        1.0 / (n_types as f64 + 1.0)
    } else {
        1.0 / n_types as f64
    };
    let escape = d * n_types as f64 / total as f64;
    for (key, &c) in &counts[0] {
        let prob = (c as f64 - d).max(0.0) / total as f64 + escape * base;
        lm.levels[0].insert(key.clone(), Entry { prob, backoff: 1.0 });
    }
    let unk = if cfg.open_vocabulary { escape * base } else { 0.0 };
    lm.levels[0].insert(Box::new([UNK_ID]), Entry { prob: unk, backoff: 1.0 });
    lm.levels[0].entry(Box::new([BOS_ID])).or_default();

    for len in 2..=order {
        // context totals and distinct continuations
        let mut ctx_stats: HashMap<&[u32], (u64, u64)> = HashMap::new();
        for (key, &c) in &counts[len - 1] {
            let st = ctx_stats.entry(&key[..len - 1]).or_insert((0, 0));
            st.0 += c;
            st.1 += 1;
        }
        let mut gammas: HashMap<&[u32], f64> = HashMap::with_capacity(ctx_stats.len());
        for (&h, &(total, distinct)) in &ctx_stats {
            let gamma = d * distinct as f64 / total as f64;
            gammas.insert(h, gamma);
            lm.levels[len - 2].entry(h.into()).or_default().backoff = gamma;
        }
        let mut new_level = HashMap::with_capacity(counts[len - 1].len());
        for (key, &c) in &counts[len - 1] {
            let h = &key[..len - 1];
            let w = key[len - 1];
            let (total, _) = ctx_stats[h];
            let lower = lm.prob_ids(&h[1..], w);
            let prob = (c as f64 - d).max(0.0) / total as f64 + gammas[h] * lower;
            new_level.insert(key.clone(), Entry { prob, backoff: 1.0 });
        }
        lm.levels[len - 1] = new_level;
    }
    Ok(lm)
}

/// Which side of a synthetic pair is scored.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ScoredSide {
    Source,
    #[default]
    Target,
    /// Sum of the two perplexities.
    Sum,
}

impl FromStr for ScoredSide {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "source" => Ok(Self::Source),
            "target" => Ok(Self::Target),
            "sum" => Ok(Self::Sum),
            _ => Err(format!("unknown scored side {s:?} (expected source, target or sum)")),
        }
    }
}

impl fmt::Display for ScoredSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Source => "source",
            Self::Target => "target",
            Self::Sum => "sum",
        })
    }
}

/// Perplexity scorer over one or both sides of a synthetic pair.
pub struct PairScorer<'a> {
    pub side: ScoredSide,
    pub source_lm: Option<&'a dyn LanguageModel>,
    pub target_lm: Option<&'a dyn LanguageModel>,
}

impl<'a> PairScorer<'a> {
    pub fn target(lm: &'a dyn LanguageModel) -> Self {
        PairScorer {
            side: ScoredSide::Target,
            source_lm: None,
            target_lm: Some(lm),
        }
    }

    fn side_ppl(lm: Option<&dyn LanguageModel>, tokens: &[String], which: &str) -> Result<f64> {
        let lm = lm.ok_or_else(|| Error::Config(format!("no {which} language model configured")))?;
        let toks: Vec<&str> = tokens.iter().map(String::as_str).collect();
        lm.perplexity(&toks)
    }

    pub fn score(&self, pair: &SyntheticPair) -> Result<f64> {
        match self.side {
            ScoredSide::Target => Self::side_ppl(self.target_lm, &pair.target, "target"),
            ScoredSide::Source => Self::side_ppl(self.source_lm, &pair.source, "source"),
            ScoredSide::Sum => Ok(Self::side_ppl(self.source_lm, &pair.source, "source")?
                + Self::side_ppl(self.target_lm, &pair.target, "target")?),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredPair {
    pub pair: SyntheticPair,
    pub ppl: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Selection {
    /// Lowest perplexity first.
    #[default]
    Filtered,
    /// Uniform sample without replacement.
    Random,
}

impl FromStr for Selection {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "filtered" => Ok(Self::Filtered),
            "random" => Ok(Self::Random),
            _ => Err(format!("unknown selection mode {s:?} (expected filtered or random)")),
        }
    }
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Filtered => "filtered",
            Self::Random => "random",
        })
    }
}

/// Scores every pair; order is preserved.
pub fn score_pool(pool: &[SyntheticPair], scorer: &PairScorer<'_>) -> Result<Vec<ScoredPair>> {
    pool.par_iter()
        .map(|p| {
            Ok(ScoredPair {
                pair: p.clone(),
                ppl: scorer.score(p)?,
            })
        })
        .collect()
}

/// Picks `k` pairs. Filtered mode returns the `k` lowest perplexities in
/// ascending order (ties by pool position); random mode draws `k` positions
/// uniformly without replacement from a ChaCha8 stream seeded with
/// `rng_seed` and returns them in pool order.
pub fn select(scored: Vec<ScoredPair>, k: usize, mode: Selection, rng_seed: u64) -> Result<Vec<ScoredPair>> {
    if k > scored.len() {
        return Err(Error::Config(format!(
            "cannot select {k} pairs from a pool of {}",
            scored.len()
        )));
    }
    match mode {
        Selection::Filtered => {
            let mut order: Vec<usize> = (0..scored.len()).collect();
            order.sort_by(|&a, &b| scored[a].ppl.total_cmp(&scored[b].ppl).then(a.cmp(&b)));
            order.truncate(k);
            let mut slots: Vec<Option<ScoredPair>> = scored.into_iter().map(Some).collect();
            Ok(order.into_iter().map(|i| slots[i].take().unwrap()).collect())
        }
        Selection::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            let mut picked = index::sample(&mut rng, scored.len(), k).into_vec();
            picked.sort_unstable();
            let mut slots: Vec<Option<ScoredPair>> = scored.into_iter().map(Some).collect();
            Ok(picked.into_iter().map(|i| slots[i].take().unwrap()).collect())
        }
    }
}

/// Scores `pool` and selects `k` pairs from it.
pub fn filter_rank(
    pool: &[SyntheticPair],
    scorer: &PairScorer<'_>,
    k: usize,
    mode: Selection,
    rng_seed: u64,
) -> Result<Vec<ScoredPair>> {
    if k > pool.len() {
        return Err(Error::Config(format!(
            "cannot select {k} pairs from a pool of {}",
            pool.len()
        )));
    }
    select(score_pool(pool, scorer)?, k, mode, rng_seed)
}

/// Pool TSV with a trailing perplexity column.
pub fn write_scored(path: &Path, scored: &[ScoredPair]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for s in scored {
        writeln!(w, "{}\t{}", format_pool_line(&s.pair), s.ppl).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a scored dump: pool columns followed by the perplexity.
pub fn read_scored(path: &Path) -> Result<Vec<ScoredPair>> {
    let bad = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    read_lines(path)?
        .iter()
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let (head, ppl) = l
                .rsplit_once('\t')
                .ok_or_else(|| bad(i + 1, "missing perplexity column".into()))?;
            let ppl: f64 = ppl
                .parse()
                .map_err(|_| bad(i + 1, format!("bad perplexity {ppl:?}")))?;
            let pair = parse_pool_line(head).map_err(|m| bad(i + 1, m))?;
            Ok(ScoredPair { pair, ppl })
        })
        .collect()
}
