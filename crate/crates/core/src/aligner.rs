//! Statistical word alignment: IBM Model 1 trained by EM, with an optional
//! diagonal position prior in the style of fast_align.
//!
//! The alignment distribution for target position `j` (1-based) of a
//! sentence pair with `n` source and `m` target tokens is
//!
//! ```text
//! a(null | j)  = 1 / (n + 1)                        when the null word is on
//! a(i | j)     = (1 - a(null | j)) * h(i, j) / sum_i' h(i', j)
//! h(i, j)      = exp(-tension * |i / n - j / m|)
//! ```
//!
//! With `tension == 0` every source position (and null) gets `1 / (n + 1)`,
//! which is plain IBM Model 1. The prior is fixed; only the lexical table is
//! re-estimated, so EM never decreases the corpus log-likelihood.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::corpus::{read_lines, ParallelCorpus, SentencePair};
use crate::error::{Error, Result};

/// Source-side symbol standing in for the null word.
pub const NULL_WORD: &str = "<null>";

/// Probability used for (source, target) pairs absent from a table.
pub const OOV_FLOOR: f64 = 1e-12;

/// Pairs per work unit in the E-step. Fixed so results do not depend on the
/// number of worker threads.
const E_STEP_CHUNK: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AlignmentLink {
    pub src: usize,
    pub tgt: usize,
}

impl AlignmentLink {
    pub fn new(src: usize, tgt: usize) -> Self {
        AlignmentLink { src, tgt }
    }

    pub fn transposed(self) -> Self {
        AlignmentLink {
            src: self.tgt,
            tgt: self.src,
        }
    }
}

impl fmt::Display for AlignmentLink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.src, self.tgt)
    }
}

impl FromStr for AlignmentLink {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (a, b) = s
            .split_once('-')
            .ok_or_else(|| format!("bad alignment point {s:?}"))?;
        let src = a.parse().map_err(|_| format!("bad source index in {s:?}"))?;
        let tgt = b.parse().map_err(|_| format!("bad target index in {s:?}"))?;
        Ok(AlignmentLink { src, tgt })
    }
}

/// Parses one Pharaoh line (`0-0 1-2 ...`).
pub fn parse_pharaoh(line: &str) -> std::result::Result<Vec<AlignmentLink>, String> {
    line.split_whitespace().map(str::parse).collect()
}

pub fn format_pharaoh(links: &[AlignmentLink]) -> String {
    let mut sorted = links.to_vec();
    sorted.sort_unstable();
    sorted
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn read_pharaoh(path: &Path) -> Result<Vec<Vec<AlignmentLink>>> {
    read_lines(path)?
        .iter()
        .enumerate()
        .map(|(i, line)| {
            parse_pharaoh(line).map_err(|msg| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg,
            })
        })
        .collect()
}

pub fn write_pharaoh(path: &Path, alignments: &[Vec<AlignmentLink>]) -> Result<()> {
    let mut out = String::new();
    for links in alignments {
        out.push_str(&format_pharaoh(links));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetrization {
    Intersection,
    Union,
    GrowDiag,
}

impl FromStr for Symmetrization {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "intersection" | "intersect" => Ok(Symmetrization::Intersection),
            "union" => Ok(Symmetrization::Union),
            "grow-diag" => Ok(Symmetrization::GrowDiag),
            _ => Err(format!(
                "unknown symmetrization {s:?} (expected intersection, union or grow-diag)"
            )),
        }
    }
}

impl fmt::Display for Symmetrization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Symmetrization::Intersection => "intersection",
            Symmetrization::Union => "union",
            Symmetrization::GrowDiag => "grow-diag",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlignerConfig {
    pub iterations: usize,
    pub tension: f64,
    pub use_null: bool,
    pub symmetrization: Symmetrization,
}

impl Default for AlignerConfig {
    fn default() -> Self {
        AlignerConfig {
            iterations: 5,
            tension: 4.0,
            use_null: true,
            symmetrization: Symmetrization::GrowDiag,
        }
    }
}

#[derive(Clone, Debug, Default)]
struct Vocab {
    words: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Vocab {
    fn intern(&mut self, w: &str) -> u32 {
        if let Some(&id) = self.ids.get(w) {
            return id;
        }
        let id = self.words.len() as u32;
        self.words.push(w.to_string());
        self.ids.insert(w.to_string(), id);
        id
    }

    fn get(&self, w: &str) -> Option<u32> {
        self.ids.get(w).copied()
    }

    fn len(&self) -> usize {
        self.words.len()
    }
}

/// Lexical translation probabilities t(target | source).
///
/// Only co-occurring pairs are stored; each stored row sums to one.
#[derive(Clone, Debug)]
pub struct TranslationTable {
    src_vocab: Vocab,
    tgt_vocab: Vocab,
    /// Per source id: ascending target ids and their probabilities.
    rows: Vec<(Vec<u32>, Vec<f64>)>,
    tension: f64,
    use_null: bool,
    log_likelihood: Vec<f64>,
}

impl TranslationTable {
    /// Builds a table from explicit `(source, target, probability)` entries.
    /// Rows are taken as given, not renormalized. Use [`NULL_WORD`] as the
    /// source to set null-word probabilities.
    pub fn from_entries<'a, I>(entries: I, tension: f64, use_null: bool) -> Self
    where
        I: IntoIterator<Item = (&'a str, &'a str, f64)>,
    {
        let mut src_vocab = Vocab::default();
        src_vocab.intern(NULL_WORD);
        let mut tgt_vocab = Vocab::default();
        let mut raw: Vec<Vec<(u32, f64)>> = vec![Vec::new()];
        for (s, t, p) in entries {
            let sid = src_vocab.intern(s) as usize;
            let tid = tgt_vocab.intern(t);
            if raw.len() <= sid {
                raw.resize_with(sid + 1, Vec::new);
            }
            raw[sid].push((tid, p));
        }
        let rows = raw
            .into_iter()
            .map(|mut row| {
                row.sort_by_key(|&(t, _)| t);
                row.dedup_by_key(|&mut (t, _)| t);
                row.into_iter().unzip()
            })
            .collect();
        TranslationTable {
            src_vocab,
            tgt_vocab,
            rows,
            tension,
            use_null,
            log_likelihood: Vec::new(),
        }
    }

    pub fn tension(&self) -> f64 {
        self.tension
    }

    pub fn use_null(&self) -> bool {
        self.use_null
    }

    /// Corpus log-likelihood before each EM iteration and after the last one.
    pub fn log_likelihood(&self) -> &[f64] {
        &self.log_likelihood
    }

    fn lookup(&self, sid: Option<u32>, tid: Option<u32>) -> f64 {
        let (Some(s), Some(t)) = (sid, tid) else {
            return OOV_FLOOR;
        };
        let Some((tgts, probs)) = self.rows.get(s as usize) else {
            return OOV_FLOOR;
        };
        match tgts.binary_search(&t) {
            Ok(i) => probs[i].max(OOV_FLOOR),
            Err(_) => OOV_FLOOR,
        }
    }

    /// t(target | source), floored at [`OOV_FLOOR`].
    pub fn prob(&self, source: &str, target: &str) -> f64 {
        self.lookup(self.src_vocab.get(source), self.tgt_vocab.get(target))
    }

    /// Stored probability without the floor, if the pair co-occurred.
    pub fn stored(&self, source: &str, target: &str) -> Option<f64> {
        let s = self.src_vocab.get(source)?;
        let t = self.tgt_vocab.get(target)?;
        let (tgts, probs) = self.rows.get(s as usize)?;
        tgts.binary_search(&t).ok().map(|i| probs[i])
    }

    /// All source types with at least one stored entry (null included).
    pub fn source_types(&self) -> impl Iterator<Item = &str> {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, (t, _))| !t.is_empty())
            .map(|(i, _)| self.src_vocab.words[i].as_str())
    }

    /// Sum of stored probabilities for a source type.
    pub fn row_sum(&self, source: &str) -> f64 {
        self.src_vocab
            .get(source)
            .and_then(|s| self.rows.get(s as usize))
            .map(|(_, p)| p.iter().sum())
            .unwrap_or(0.0)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.rows.iter().enumerate().flat_map(move |(s, (tgts, probs))| {
            tgts.iter().zip(probs).map(move |(&t, &p)| {
                (
                    self.src_vocab.words[s].as_str(),
                    self.tgt_vocab.words[t as usize].as_str(),
                    p,
                )
            })
        })
    }

    /// Writes `source<TAB>target<TAB>probability` lines.
    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for (s, t, p) in self.entries() {
            writeln!(w, "{s}\t{t}\t{p}").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_tsv(path: &Path, tension: f64, use_null: bool) -> Result<Self> {
        let lines = read_lines(path)?;
        let mut entries = Vec::with_capacity(lines.len());
        for (i, line) in lines.iter().enumerate() {
            let bad = |msg: &str| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: msg.to_string(),
            };
            let mut cols = line.split('\t');
            let (Some(s), Some(t), Some(p)) = (cols.next(), cols.next(), cols.next()) else {
                return Err(bad("expected source<TAB>target<TAB>probability"));
            };
            let p: f64 = p.parse().map_err(|_| bad("bad probability"))?;
            entries.push((s.to_string(), t.to_string(), p));
        }
        Ok(Self::from_entries(
            entries.iter().map(|(s, t, p)| (s.as_str(), t.as_str(), *p)),
            tension,
            use_null,
        ))
    }
}

/// Alignment prior over source positions for target position `j`.
/// Returns `(null_weight, position_weights)`; the weights sum to one.
fn position_prior(j: usize, m: usize, n: usize, tension: f64, use_null: bool, out: &mut Vec<f64>) -> f64 {
    out.clear();
    let slots = n + usize::from(use_null);
    if tension == 0.0 {
        let w = 1.0 / slots as f64;
        out.resize(n, w);
        return if use_null { w } else { 0.0 };
    }
    let null_w = if use_null { 1.0 / (n as f64 + 1.0) } else { 0.0 };
    let jr = (j + 1) as f64 / m as f64;
    let mut z = 0.0;
    for i in 0..n {
        let h = (-tension * ((i + 1) as f64 / n as f64 - jr).abs()).exp();
        out.push(h);
        z += h;
    }
    let scale = (1.0 - null_w) / z;
    for h in out.iter_mut() {
        *h *= scale;
    }
    null_w
}

/// Interned view of one sentence pair used during training.
struct Interned {
    src: Vec<u32>,
    tgt: Vec<u32>,
    /// Offset into the shared slot buffer; slots are laid out target-major,
    /// `[null?, src_0, .., src_{n-1}]` per target position.
    slot_start: usize,
}

/// Trains t(target | source) with EM. Target tokens are generated by source tokens.
pub fn train(
    corpus: &ParallelCorpus,
    iterations: usize,
    tension: f64,
    use_null: bool,
) -> Result<TranslationTable> {
    if corpus.is_empty() {
        return Err(Error::Config("cannot train an aligner on an empty corpus".into()));
    }
    if iterations == 0 {
        return Err(Error::Config("aligner iterations must be at least 1".into()));
    }
    if !(tension >= 0.0) || !tension.is_finite() {
        return Err(Error::Config(format!("tension must be a finite non-negative number, got {tension}")));
    }

    let mut src_vocab = Vocab::default();
    src_vocab.intern(NULL_WORD);
    let mut tgt_vocab = Vocab::default();
    let mut pairs: Vec<Interned> = Vec::with_capacity(corpus.len());
    let mut slot_total = 0usize;
    for p in &corpus.pairs {
        let src: Vec<u32> = p.source.iter().map(|t| src_vocab.intern(&t.surface)).collect();
        let tgt: Vec<u32> = p.target.iter().map(|t| tgt_vocab.intern(&t.surface)).collect();
        let width = src.len() + usize::from(use_null);
        pairs.push(Interned {
            src,
            tgt,
            slot_start: slot_total,
        });
        slot_total += width * pairs.last().unwrap().tgt.len();
    }

    // Co-occurrence rows.
    let mut cooc: Vec<Vec<u32>> = vec![Vec::new(); src_vocab.len()];
    for p in &pairs {
        for &f in &p.tgt {
            if use_null {
                cooc[0].push(f);
            }
            for &e in &p.src {
                cooc[e as usize].push(f);
            }
        }
    }
    let mut row_offset = Vec::with_capacity(cooc.len() + 1);
    let mut acc = 0usize;
    for row in cooc.iter_mut() {
        row.sort_unstable();
        row.dedup();
        row_offset.push(acc);
        acc += row.len();
    }
    row_offset.push(acc);
    let n_cells = acc;

    // Cell index for every (pair, target position, source slot).
    let mut slots: Vec<u32> = Vec::with_capacity(slot_total);
    for p in &pairs {
        for &f in &p.tgt {
            let cell = |e: u32| {
                let row = &cooc[e as usize];
                let k = row.binary_search(&f).expect("co-occurrence row built from corpus");
                (row_offset[e as usize] + k) as u32
            };
            if use_null {
                slots.push(cell(0));
            }
            for &e in &p.src {
                slots.push(cell(e));
            }
        }
    }

    let mut t = vec![1.0 / tgt_vocab.len() as f64; n_cells];
    let mut history = Vec::with_capacity(iterations + 1);
    for _ in 0..iterations {
        let (ll, counts) = e_step(&pairs, &slots, &t, n_cells, tension, use_null, true);
        history.push(ll);
        let counts = counts.expect("counts requested");
        for s in 0..cooc.len() {
            let range = row_offset[s]..row_offset[s + 1];
            let total: f64 = counts[range.clone()].iter().sum();
            if total > 0.0 {
                for c in range {
                    t[c] = counts[c] / total;
                }
            }
        }
    }
    let (ll, _) = e_step(&pairs, &slots, &t, n_cells, tension, use_null, false);
    history.push(ll);

    let rows = cooc
        .into_iter()
        .enumerate()
        .map(|(s, tgts)| {
            let probs = t[row_offset[s]..row_offset[s + 1]].to_vec();
            (tgts, probs)
        })
        .collect();
    Ok(TranslationTable {
        src_vocab,
        tgt_vocab,
        rows,
        tension,
        use_null,
        log_likelihood: history,
    })
}

/// One expectation pass. Returns the log-likelihood under `t` and, when
/// requested, expected counts per cell.
///
/// Chunks are processed in parallel; their posteriors are then added to the
/// count vector sequentially in corpus order, so the result is bit-identical
/// to a single-threaded pass.
fn e_step(
    pairs: &[Interned],
    slots: &[u32],
    t: &[f64],
    n_cells: usize,
    tension: f64,
    use_null: bool,
    want_counts: bool,
) -> (f64, Option<Vec<f64>>) {
    let chunk_results: Vec<(Vec<f64>, Vec<f64>)> = pairs
        .par_chunks(E_STEP_CHUNK)
        .map(|chunk| {
            let mut lls = Vec::with_capacity(chunk.len());
            let mut posts = Vec::new();
            let mut prior = Vec::new();
            let mut weights = Vec::new();
            for p in chunk {
                let n = p.src.len();
                let m = p.tgt.len();
                let width = n + usize::from(use_null);
                let mut ll = 0.0;
                for j in 0..m {
                    let null_w = position_prior(j, m, n, tension, use_null, &mut prior);
                    let base = p.slot_start + j * width;
                    weights.clear();
                    if use_null {
                        weights.push(null_w * t[slots[base] as usize]);
                    }
                    let off = usize::from(use_null);
                    for i in 0..n {
                        weights.push(prior[i] * t[slots[base + off + i] as usize]);
                    }
                    let z: f64 = weights.iter().sum();
                    if z > 0.0 {
                        ll += z.ln();
                        if want_counts {
                            posts.extend(weights.iter().map(|w| w / z));
                        }
                    } else {
                        ll += f64::NEG_INFINITY;
                        if want_counts {
                            posts.extend(std::iter::repeat(0.0).take(width));
                        }
                    }
                }
                lls.push(ll);
            }
            (lls, posts)
        })
        .collect();

    let mut ll_total = 0.0;
    let mut counts = want_counts.then(|| vec![0.0; n_cells]);
    let mut pair_idx = 0;
    for (lls, posts) in chunk_results {
        let mut k = 0;
        for ll in lls {
            ll_total += ll;
            if let Some(counts) = counts.as_mut() {
                let p = &pairs[pair_idx];
                let len = (p.src.len() + usize::from(use_null)) * p.tgt.len();
                for (s, post) in slots[p.slot_start..p.slot_start + len]
                    .iter()
                    .zip(&posts[k..k + len])
                {
                    counts[*s as usize] += post;
                }
                k += len;
            }
            pair_idx += 1;
        }
    }
    (ll_total, counts)
}

/// Links each target token to its most probable source token under `table`
/// and the table's position prior. Targets whose best source is the null
/// word stay unlinked. Ties go to the smallest source index; the null word
/// only wins when strictly better than every real position.
pub fn viterbi_align(pair: &SentencePair, table: &TranslationTable) -> Vec<AlignmentLink> {
    let n = pair.source.len();
    let m = pair.target.len();
    let src_ids: Vec<Option<u32>> = pair
        .source
        .iter()
        .map(|t| table.src_vocab.get(&t.surface))
        .collect();
    let null_id = table.src_vocab.get(NULL_WORD);
    let mut prior = Vec::with_capacity(n);
    let mut links = Vec::new();
    for (j, tok) in pair.target.iter().enumerate() {
        let tid = table.tgt_vocab.get(&tok.surface);
        let null_w = position_prior(j, m, n, table.tension, table.use_null, &mut prior);
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (i, &sid) in src_ids.iter().enumerate() {
            let score = prior[i] * table.lookup(sid, tid);
            if score > best_score {
                best_score = score;
                best = i;
            }
        }
        let null_score = if table.use_null {
            null_w * table.lookup(null_id, tid)
        } else {
            f64::NEG_INFINITY
        };
        if best_score >= null_score {
            links.push(AlignmentLink::new(best, j));
        }
    }
    links
}

/// Combines forward (source→target) and reverse links, both expressed as
/// `(source index, target index)`.
pub fn symmetrize(
    forward: &[AlignmentLink],
    reverse: &[AlignmentLink],
    mode: Symmetrization,
) -> Vec<AlignmentLink> {
    use std::collections::BTreeSet;
    let fwd: BTreeSet<_> = forward.iter().copied().collect();
    let rev: BTreeSet<_> = reverse.iter().copied().collect();
    let union: BTreeSet<_> = fwd.union(&rev).copied().collect();
    let inter: BTreeSet<_> = fwd.intersection(&rev).copied().collect();
    match mode {
        Symmetrization::Intersection => inter.into_iter().collect(),
        Symmetrization::Union => union.into_iter().collect(),
        Symmetrization::GrowDiag => grow_diag(&inter, &union),
    }
}

fn grow_diag(
    inter: &std::collections::BTreeSet<AlignmentLink>,
    union: &std::collections::BTreeSet<AlignmentLink>,
) -> Vec<AlignmentLink> {
    const NEIGHBORS: [(isize, isize); 8] = [
        (-1, 0),
        (0, -1),
        (1, 0),
        (0, 1),
        (-1, -1),
        (-1, 1),
        (1, -1),
        (1, 1),
    ];
    if union.is_empty() {
        return Vec::new();
    }
    let n = union.iter().map(|l| l.src).max().unwrap() + 1;
    let m = union.iter().map(|l| l.tgt).max().unwrap() + 1;
    let mut in_union = vec![false; n * m];
    for l in union {
        in_union[l.src * m + l.tgt] = true;
    }
    let mut aligned = vec![false; n * m];
    let mut src_aligned = vec![false; n];
    let mut tgt_aligned = vec![false; m];
    for l in inter {
        aligned[l.src * m + l.tgt] = true;
        src_aligned[l.src] = true;
        tgt_aligned[l.tgt] = true;
    }
    let mut added = true;
    while added {
        added = false;
        for e in 0..n {
            for f in 0..m {
                if !aligned[e * m + f] {
                    continue;
                }
                for (de, df) in NEIGHBORS {
                    let (ne, nf) = (e as isize + de, f as isize + df);
                    if ne < 0 || nf < 0 || ne >= n as isize || nf >= m as isize {
                        continue;
                    }
                    let (ne, nf) = (ne as usize, nf as usize);
                    let cell = ne * m + nf;
                    if (!src_aligned[ne] || !tgt_aligned[nf]) && in_union[cell] && !aligned[cell] {
                        aligned[cell] = true;
                        src_aligned[ne] = true;
                        tgt_aligned[nf] = true;
                        added = true;
                    }
                }
            }
        }
    }
    let mut out = Vec::new();
    for e in 0..n {
        for f in 0..m {
            if aligned[e * m + f] {
                out.push(AlignmentLink::new(e, f));
            }
        }
    }
    out
}

/// Anything that can produce one link set per corpus pair.
pub trait Aligner {
    fn align(&self, corpus: &ParallelCorpus) -> Result<Vec<Vec<AlignmentLink>>>;
}

/// Bidirectional IBM Model 1 with symmetrization.
#[derive(Clone, Debug, Default)]
pub struct StatisticalAligner {
    pub config: AlignerConfig,
}

impl StatisticalAligner {
    pub fn new(config: AlignerConfig) -> Self {
        StatisticalAligner { config }
    }
}

impl Aligner for StatisticalAligner {
    fn align(&self, corpus: &ParallelCorpus) -> Result<Vec<Vec<AlignmentLink>>> {
        let c = &self.config;
        let fwd_table = train(corpus, c.iterations, c.tension, c.use_null)?;
        let reversed = corpus.reversed();
        let rev_table = train(&reversed, c.iterations, c.tension, c.use_null)?;
        let out = corpus
            .pairs
            .par_iter()
            .zip(reversed.pairs.par_iter())
            .map(|(p, rp)| {
                let fwd = viterbi_align(p, &fwd_table);
                let rev: Vec<_> = viterbi_align(rp, &rev_table)
                    .into_iter()
                    .map(AlignmentLink::transposed)
                    .collect();
                symmetrize(&fwd, &rev, c.symmetrization)
            })
            .collect();
        Ok(out)
    }
}

/// Links read from a Pharaoh file, e.g. produced by an external aligner.
#[derive(Clone, Debug)]
pub struct PrecomputedAligner {
    pub links: Vec<Vec<AlignmentLink>>,
}

impl Aligner for PrecomputedAligner {
    fn align(&self, corpus: &ParallelCorpus) -> Result<Vec<Vec<AlignmentLink>>> {
        if self.links.len() != corpus.len() {
            return Err(Error::Structural(format!(
                "alignment has {} lines but corpus has {} pairs",
                self.links.len(),
                corpus.len()
            )));
        }
        Ok(self.links.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SentencePair;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn corpus(pairs: &[(&str, &str)]) -> ParallelCorpus {
        let mut c = ParallelCorpus::new("s", "t");
        for (i, (s, t)) in pairs.iter().enumerate() {
            c.push(SentencePair::from_text(i, s, t).unwrap()).unwrap();
        }
        c
    }

    fn links(v: &[(usize, usize)]) -> Vec<AlignmentLink> {
        v.iter().map(|&(s, t)| AlignmentLink::new(s, t)).collect()
    }

    #[test]
    fn single_cooccurrence_is_certain() {
        let c = corpus(&[("x", "y")]);
        let table = train(&c, 5, 0.0, false).unwrap();
        assert_eq!(table.stored("x", "y"), Some(1.0));
        assert_eq!(viterbi_align(&c.pairs[0], &table), links(&[(0, 0)]));
    }

    #[test]
    fn house_maison_converges() {
        let c = corpus(&[("the house", "la maison"), ("house", "maison")]);
        let table = train(&c, 20, 0.0, false).unwrap();
        assert!(table.prob("house", "maison") > 0.9);
        assert_eq!(viterbi_align(&c.pairs[1], &table), links(&[(0, 0)]));
    }

    #[test]
    fn empty_corpus_rejected() {
        let c = ParallelCorpus::new("s", "t");
        assert!(matches!(train(&c, 5, 0.0, true), Err(Error::Config(_))));
        let c = corpus(&[("a", "b")]);
        assert!(matches!(train(&c, 0, 0.0, true), Err(Error::Config(_))));
    }

    #[test]
    fn figure_pair_links_guitar() {
        let pair = SentencePair::from_text(
            0,
            "He plays the guitar very well",
            "Ew gîtarê pir baş lê dide",
        )
        .unwrap();
        let table = TranslationTable::from_entries(
            [
                ("He", "Ew", 0.9),
                ("guitar", "gîtarê", 0.9),
                ("very", "pir", 0.9),
                ("well", "baş", 0.9),
                ("plays", "lê", 0.5),
                ("plays", "dide", 0.5),
            ],
            0.0,
            true,
        );
        let got = viterbi_align(&pair, &table);
        assert!(got.contains(&AlignmentLink::new(3, 1)), "{got:?}");
        assert!(got.contains(&AlignmentLink::new(1, 4)));
        assert!(got.contains(&AlignmentLink::new(1, 5)));
    }

    #[test]
    fn total_oov_does_not_panic() {
        let pair = SentencePair::from_text(0, "p q r", "u v").unwrap();
        let table = TranslationTable::from_entries([("a", "b", 1.0)], 4.0, true);
        let got = viterbi_align(&pair, &table);
        assert!(got.len() <= 2);
        let table = TranslationTable::from_entries([("a", "b", 1.0)], 0.0, false);
        // uniform scores: every target goes to source 0
        assert_eq!(viterbi_align(&pair, &table), links(&[(0, 0), (0, 1)]));
    }

    #[test]
    fn symmetrize_set_modes() {
        let f = links(&[(0, 0)]);
        let r = links(&[(1, 1)]);
        assert!(symmetrize(&f, &r, Symmetrization::Intersection).is_empty());
        assert_eq!(symmetrize(&f, &r, Symmetrization::Union), links(&[(0, 0), (1, 1)]));
    }

    #[test]
    fn grow_diag_hand_simulated() {
        // intersection {(0,0),(1,1)}; (2,1) and (0,2) grow from (1,1) because one
        // side is still unaligned; (2,2) is then blocked as both sides are aligned.
        let f = links(&[(0, 0), (1, 1), (2, 2)]);
        let r = links(&[(0, 0), (1, 1), (0, 2), (2, 1)]);
        assert_eq!(
            symmetrize(&f, &r, Symmetrization::GrowDiag),
            links(&[(0, 0), (0, 2), (1, 1), (2, 1)])
        );
    }

    #[test]
    fn pharaoh_round_trip_and_errors() {
        let ls = parse_pharaoh("0-0 3-1 1-4").unwrap();
        assert_eq!(format_pharaoh(&ls), "0-0 1-4 3-1");
        assert!(parse_pharaoh("").unwrap().is_empty());
        assert!(parse_pharaoh("0-x").is_err());
        assert!(parse_pharaoh("12").is_err());
    }

    #[test]
    fn table_tsv_round_trip() {
        let c = corpus(&[("the house", "la maison"), ("house", "maison"), ("a cat", "un chat")]);
        let table = train(&c, 5, 0.0, true).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.tsv");
        table.write_tsv(&p).unwrap();
        let back = TranslationTable::read_tsv(&p, 0.0, true).unwrap();
        for (s, t, prob) in table.entries() {
            assert_eq!(back.stored(s, t), Some(prob));
        }
    }

    #[test]
    fn statistical_aligner_directions() {
        let c = corpus(&[
            ("a b c", "x y z"),
            ("a b", "x y"),
            ("b c", "y z"),
            ("a c", "x z"),
        ]);
        for mode in [Symmetrization::Intersection, Symmetrization::Union, Symmetrization::GrowDiag] {
            let cfg = AlignerConfig {
                iterations: 10,
                symmetrization: mode,
                ..Default::default()
            };
            let out = StatisticalAligner::new(cfg).align(&c).unwrap();
            assert_eq!(out[0], links(&[(0, 0), (1, 1), (2, 2)]), "{mode}");
        }
    }

    fn small_corpus() -> impl Strategy<Value = Vec<(Vec<u8>, Vec<u8>)>> {
        let side = proptest::collection::vec(0u8..5, 1..5);
        proptest::collection::vec((side.clone(), side), 1..5)
    }

    fn to_corpus(raw: &[(Vec<u8>, Vec<u8>)]) -> ParallelCorpus {
        let mut c = ParallelCorpus::new("s", "t");
        for (i, (s, t)) in raw.iter().enumerate() {
            let s: Vec<String> = s.iter().map(|w| format!("s{w}")).collect();
            let t: Vec<String> = t.iter().map(|w| format!("t{w}")).collect();
            c.push(SentencePair::from_text(i, &s.join(" "), &t.join(" ")).unwrap()).unwrap();
        }
        c
    }

    proptest! {
        #[test]
        fn em_is_monotone_and_normalized(raw in small_corpus(), tension in prop_oneof![Just(0.0), 0.0f64..8.0], use_null: bool) {
            let c = to_corpus(&raw);
            let table = train(&c, 8, tension, use_null).unwrap();
            for w in table.log_likelihood().windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-9, "{:?}", table.log_likelihood());
            }
            for s in table.source_types() {
                prop_assert!((table.row_sum(s) - 1.0).abs() < 1e-6);
            }
        }

        #[test]
        fn viterbi_links_in_bounds(raw in small_corpus(), use_null: bool) {
            let c = to_corpus(&raw);
            let table = train(&c, 3, 4.0, use_null).unwrap();
            for p in &c.pairs {
                let ls = viterbi_align(p, &table);
                let mut seen = BTreeSet::new();
                for l in &ls {
                    prop_assert!(l.src < p.source.len() && l.tgt < p.target.len());
                    prop_assert!(seen.insert(l.tgt));
                }
            }
        }

        #[test]
        fn copy_corpus_aligns_diagonally(sents in proptest::collection::vec(
            proptest::sample::subsequence((0u8..12).collect::<Vec<_>>(), 1..7).prop_shuffle(), 1..8)) {
            let mut c = ParallelCorpus::new("s", "t");
            for (i, s) in sents.iter().enumerate() {
                let text: Vec<String> = s.iter().map(|w| format!("w{w}")).collect();
                let text = text.join(" ");
                c.push(SentencePair::from_text(i, &text, &text).unwrap()).unwrap();
            }
            let table = train(&c, 10, 4.0, true).unwrap();
            for p in &c.pairs {
                let expected: Vec<_> = (0..p.source.len()).map(|i| AlignmentLink::new(i, i)).collect();
                prop_assert_eq!(viterbi_align(p, &table), expected);
            }
        }

        #[test]
        fn symmetrize_bounds(f in proptest::collection::btree_set((0usize..5, 0usize..5), 0..12),
                             r in proptest::collection::btree_set((0usize..5, 0usize..5), 0..12)) {
            let f: Vec<_> = f.into_iter().map(|(a, b)| AlignmentLink::new(a, b)).collect();
            let r: Vec<_> = r.into_iter().map(|(a, b)| AlignmentLink::new(a, b)).collect();
            let inter: BTreeSet<_> = symmetrize(&f, &r, Symmetrization::Intersection).into_iter().collect();
            let uni: BTreeSet<_> = symmetrize(&f, &r, Symmetrization::Union).into_iter().collect();
            let grow: BTreeSet<_> = symmetrize(&f, &r, Symmetrization::GrowDiag).into_iter().collect();
            prop_assert!(inter.is_subset(&grow));
            prop_assert!(grow.is_subset(&uni));
            for mode in [Symmetrization::Intersection, Symmetrization::Union, Symmetrization::GrowDiag] {
                let same: BTreeSet<_> = symmetrize(&f, &f, mode).into_iter().collect();
                prop_assert_eq!(same, f.iter().copied().collect::<BTreeSet<_>>());
            }
        }
    }
}
