//! Synthetic sentence pairs by lexical replacement of aligned word pairs.
//!
//! # Random draws
//!
//! Every seed sentence gets its own generator: a ChaCha8 stream keyed by
//! `(rng_seed, round)` in the 32-byte seed (little-endian, bytes 0..8 and
//! 8..16, the rest zero) and selected by `seed_id` via `set_stream`. Per-seed
//! output therefore does not depend on processing order or thread count.
//!
//! One synthetic sentence consumes, in order:
//!
//! 1. the replacement count `k`: `random_range(1..=max_k)` where
//!    `max_k = min(max_replacements, slots)`; no draw when `max_k == 1`;
//! 2. `rand::seq::index::sample(rng, slots, k)`, sorted ascending;
//! 3. per chosen slot (ascending source index), `random_range(0..candidates)`.
//!
//! Failed attempts and duplicates are retried up to `max_retries` times per
//! requested sentence, continuing on the same stream.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::{fold_key, read_lines, ParallelCorpus, SentencePair};
use crate::error::{Error, Result};
use crate::lexicon::{BilingualLexicon, ConsumedEntries, LexEntry, VocabularyRestriction};
use crate::morphology::{Analysis, FeatureBundle, ParadigmLexicon, Pos};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Same feature bundle on both sides, target re-inflected.
    #[default]
    Informed,
    /// Same POS only, citation forms inserted verbatim.
    Naive,
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "informed" => Ok(Strategy::Informed),
            "naive" => Ok(Strategy::Naive),
            _ => Err(format!("unknown strategy {s:?} (expected informed or naive)")),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Informed => "informed",
            Strategy::Naive => "naive",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AugmentationConfig {
    pub strategy: Strategy,
    pub per_seed: usize,
    pub max_replacements: usize,
    pub eligible_pos: Vec<Pos>,
    pub rng_seed: u64,
    pub restriction: VocabularyRestriction,
    pub inflect_source: bool,
    pub inflect_target: bool,
    pub max_retries: usize,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        AugmentationConfig {
            strategy: Strategy::Informed,
            per_seed: 1,
            max_replacements: 2,
            eligible_pos: vec![Pos::N, Pos::Adj, Pos::V],
            rng_seed: 0,
            restriction: VocabularyRestriction::All,
            inflect_source: true,
            inflect_target: true,
            max_retries: 10,
        }
    }
}

impl AugmentationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.per_seed == 0 {
            return Err(Error::Config("per_seed must be at least 1".into()));
        }
        if self.max_replacements == 0 {
            return Err(Error::Config("max_replacements must be at least 1".into()));
        }
        Ok(())
    }
}

/// A replaceable aligned word pair within one seed sentence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Slot {
    pub src_index: usize,
    pub tgt_index: usize,
    pub source: Analysis,
    /// Unique analysis of the aligned target token; required for informed
    /// replacement, optional for naive.
    pub target: Option<Analysis>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Replacement {
    pub src_index: usize,
    pub tgt_index: usize,
    pub old_lemma: String,
    pub new_lemma: String,
}

impl fmt::Display for Replacement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}-{}:{}>{}",
            self.src_index, self.tgt_index, self.old_lemma, self.new_lemma
        )
    }
}

impl FromStr for Replacement {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let bad = || format!("bad replacement descriptor {s:?}");
        let (pos, lemmas) = s.split_once(':').ok_or_else(bad)?;
        let (si, ti) = pos.split_once('-').ok_or_else(bad)?;
        let (old, new) = lemmas.split_once('>').ok_or_else(bad)?;
        Ok(Replacement {
            src_index: si.parse().map_err(|_| bad())?,
            tgt_index: ti.parse().map_err(|_| bad())?,
            old_lemma: old.to_string(),
            new_lemma: new.to_string(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SyntheticPair {
    pub seed_id: usize,
    pub strategy: Strategy,
    pub source: Vec<String>,
    pub target: Vec<String>,
    pub replacements: Vec<Replacement>,
}

impl SyntheticPair {
    pub fn source_text(&self) -> String {
        self.source.join(" ")
    }

    pub fn target_text(&self) -> String {
        self.target.join(" ")
    }

    fn key(&self) -> (String, String) {
        (self.source_text(), self.target_text())
    }
}

/// Aligned positions eligible for replacement, ascending by source index.
///
/// A source token qualifies when it has exactly one paradigm analysis, its
/// POS is eligible and it takes part in exactly one alignment link. The
/// linked target token must have exactly one analysis for informed
/// replacement; naive replacement records it when available.
pub fn select_replaceable(
    pair: &SentencePair,
    src_lex: &ParadigmLexicon,
    tgt_lex: &ParadigmLexicon,
    cfg: &AugmentationConfig,
) -> Vec<Slot> {
    let Some(links) = &pair.links else {
        return Vec::new();
    };
    let mut link_count = vec![0usize; pair.source.len()];
    let mut link_tgt = vec![0usize; pair.source.len()];
    for l in links {
        link_count[l.src] += 1;
        link_tgt[l.src] = l.tgt;
    }
    let mut slots = Vec::new();
    for (i, tok) in pair.source.iter().enumerate() {
        if link_count[i] != 1 {
            continue;
        }
        let Some(source) = src_lex.unique_analysis(&tok.surface) else {
            continue;
        };
        if !cfg.eligible_pos.contains(&source.bundle.pos) {
            continue;
        }
        let j = link_tgt[i];
        let target = tgt_lex.unique_analysis(&pair.target[j].surface);
        if cfg.strategy == Strategy::Informed && target.is_none() {
            continue;
        }
        slots.push(Slot {
            src_index: i,
            tgt_index: j,
            source,
            target,
        });
    }
    slots
}

/// Generator for one seed sentence under the documented keying.
pub fn seed_rng(rng_seed: u64, round: u64, seed_id: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&rng_seed.to_le_bytes());
    key[8..16].copy_from_slice(&round.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(seed_id as u64);
    rng
}

/// Carries the original token's capitalization over to a replacement.
fn match_case(original: &str, replacement: &str) -> String {
    let letters: Vec<char> = original.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.len() > 1 && letters.iter().all(|c| c.is_uppercase()) {
        return replacement.to_uppercase();
    }
    let mut orig = original.chars();
    let mut rep = replacement.chars();
    match (orig.next(), rep.next()) {
        (Some(o), Some(r)) if o.is_uppercase() && r.is_lowercase() => {
            r.to_uppercase().chain(rep).collect()
        }
        _ => replacement.to_string(),
    }
}

/// Replacement count and chosen slot indices (steps 1 and 2 of the draw order).
fn draw_slots(rng: &mut ChaCha8Rng, n_slots: usize, max_replacements: usize) -> Vec<usize> {
    let max_k = max_replacements.min(n_slots);
    let k = if max_k >= 2 {
        rng.random_range(1..=max_k)
    } else {
        1
    };
    let mut chosen = index::sample(rng, n_slots, k).into_vec();
    chosen.sort_unstable();
    chosen
}

struct Choice<'a> {
    slot: &'a Slot,
    entry: &'a LexEntry,
    new_src: String,
    new_tgt: String,
}

fn assemble(pair: &SentencePair, strategy: Strategy, choices: &[Choice<'_>]) -> Option<SyntheticPair> {
    let mut source: Vec<String> = pair.source.iter().map(|t| t.surface.clone()).collect();
    let mut target: Vec<String> = pair.target.iter().map(|t| t.surface.clone()).collect();
    let mut replacements = Vec::with_capacity(choices.len());
    let mut touched_tgt = HashSet::new();
    for c in choices {
        let (i, j) = (c.slot.src_index, c.slot.tgt_index);
        if source[i] == c.new_src || target[j] == c.new_tgt || !touched_tgt.insert(j) {
            return None;
        }
        source[i] = c.new_src.clone();
        target[j] = c.new_tgt.clone();
        replacements.push(Replacement {
            src_index: i,
            tgt_index: j,
            old_lemma: c.slot.source.lemma.clone(),
            new_lemma: c.entry.src_lemma.clone(),
        });
    }
    Some(SyntheticPair {
        seed_id: pair.id,
        strategy,
        source,
        target,
        replacements,
    })
}

fn pick<'a>(
    rng: &mut ChaCha8Rng,
    mut cands: Vec<&'a LexEntry>,
    slot: &Slot,
    taken: &[&LexEntry],
    restriction: VocabularyRestriction,
) -> Option<&'a LexEntry> {
    let own = fold_key(&slot.source.lemma);
    cands.retain(|e| fold_key(&e.src_lemma) != own);
    if restriction == VocabularyRestriction::ConsumeOnce {
        cands.retain(|e| !taken.iter().any(|t| std::ptr::eq(*t, *e)));
    }
    if cands.is_empty() {
        return None;
    }
    Some(cands[rng.random_range(0..cands.len())])
}

/// Morphologically informed replacement: the source word is swapped for a
/// lexicon entry realizing the same feature bundle, and the aligned target
/// word for the entry's translation inflected into the original target
/// token's bundle. Returns `None` if any step lacks a candidate or a
/// paradigm cell.
#[allow(clippy::too_many_arguments)]
pub fn augment_informed(
    pair: &SentencePair,
    slots: &[Slot],
    lexicon: &BilingualLexicon,
    src_par: &ParadigmLexicon,
    tgt_par: &ParadigmLexicon,
    cfg: &AugmentationConfig,
    rng: &mut ChaCha8Rng,
    consumed: &mut ConsumedEntries,
) -> Option<SyntheticPair> {
    if slots.is_empty() {
        return None;
    }
    let chosen = draw_slots(rng, slots.len(), cfg.max_replacements);
    let mut choices: Vec<Choice<'_>> = Vec::with_capacity(chosen.len());
    for &s in &chosen {
        let slot = &slots[s];
        let bundle = &slot.source.bundle;
        let tgt_analysis = slot.target.as_ref()?;
        let cands = lexicon.candidates(bundle, cfg.restriction, consumed);
        let taken: Vec<&LexEntry> = choices.iter().map(|c| c.entry).collect();
        let entry = pick(rng, cands, slot, &taken, cfg.restriction)?;

        let new_src = if cfg.inflect_source {
            src_par
                .inflect_exact(&entry.src_lemma, bundle)
                .or_else(|| (entry.src_bundle.as_ref() == Some(bundle)).then(|| entry.src_lemma.clone()))?
        } else {
            entry.src_lemma.clone()
        };
        let tgt_bundle = &tgt_analysis.bundle;
        let tgt_lemma = tgt_par
            .lemmatize(&entry.tgt_lemma, &FeatureBundle::pos_only(tgt_bundle.pos.clone()))
            .unwrap_or_else(|| entry.tgt_lemma.clone());
        let new_tgt = if cfg.inflect_target {
            tgt_par.inflect(&tgt_lemma, tgt_bundle)?
        } else {
            tgt_lemma
        };
        choices.push(Choice {
            slot,
            entry,
            new_src: match_case(&pair.source[slot.src_index].surface, &new_src),
            new_tgt: match_case(&pair.target[slot.tgt_index].surface, &new_tgt),
        });
    }
    let out = assemble(pair, Strategy::Informed, &choices)?;
    if cfg.restriction == VocabularyRestriction::ConsumeOnce {
        for c in &choices {
            consumed.consume(c.entry, lexicon);
        }
    }
    Some(out)
}

/// Naive replacement: any entry with the same POS; the source lemma and the
/// target lemma are inserted as they appear in the lexicon.
pub fn augment_naive(
    pair: &SentencePair,
    slots: &[Slot],
    lexicon: &BilingualLexicon,
    cfg: &AugmentationConfig,
    rng: &mut ChaCha8Rng,
    consumed: &mut ConsumedEntries,
) -> Option<SyntheticPair> {
    if slots.is_empty() {
        return None;
    }
    let chosen = draw_slots(rng, slots.len(), cfg.max_replacements);
    let mut choices: Vec<Choice<'_>> = Vec::with_capacity(chosen.len());
    for &s in &chosen {
        let slot = &slots[s];
        let cands = lexicon.candidates_by_pos(&slot.source.bundle.pos, cfg.restriction, consumed);
        let taken: Vec<&LexEntry> = choices.iter().map(|c| c.entry).collect();
        let entry = pick(rng, cands, slot, &taken, cfg.restriction)?;
        choices.push(Choice {
            slot,
            entry,
            new_src: entry.src_lemma.clone(),
            new_tgt: entry.tgt_lemma.clone(),
        });
    }
    let out = assemble(pair, Strategy::Naive, &choices)?;
    if cfg.restriction == VocabularyRestriction::ConsumeOnce {
        for c in &choices {
            consumed.consume(c.entry, lexicon);
        }
    }
    Some(out)
}

/// Everything needed to generate synthetic pairs from an aligned seed corpus.
pub struct Generator<'a> {
    pub corpus: &'a ParallelCorpus,
    pub lexicon: &'a BilingualLexicon,
    pub src_paradigms: &'a ParadigmLexicon,
    pub tgt_paradigms: &'a ParadigmLexicon,
    pub cfg: AugmentationConfig,
    slots: Vec<Vec<Slot>>,
}

impl<'a> Generator<'a> {
    pub fn new(
        corpus: &'a ParallelCorpus,
        lexicon: &'a BilingualLexicon,
        src_paradigms: &'a ParadigmLexicon,
        tgt_paradigms: &'a ParadigmLexicon,
        cfg: AugmentationConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let slots = corpus
            .pairs
            .iter()
            .map(|p| select_replaceable(p, src_paradigms, tgt_paradigms, &cfg))
            .collect();
        Ok(Generator {
            corpus,
            lexicon,
            src_paradigms,
            tgt_paradigms,
            cfg,
            slots,
        })
    }

    pub fn slots(&self) -> &[Vec<Slot>] {
        &self.slots
    }

    /// Seeds with at least one replaceable slot.
    pub fn productive_seeds(&self) -> usize {
        self.slots.iter().filter(|s| !s.is_empty()).count()
    }

    fn attempt(
        &self,
        pair: &SentencePair,
        slots: &[Slot],
        rng: &mut ChaCha8Rng,
        consumed: &mut ConsumedEntries,
    ) -> Option<SyntheticPair> {
        match self.cfg.strategy {
            Strategy::Informed => augment_informed(
                pair,
                slots,
                self.lexicon,
                self.src_paradigms,
                self.tgt_paradigms,
                &self.cfg,
                rng,
                consumed,
            ),
            Strategy::Naive => augment_naive(pair, slots, self.lexicon, &self.cfg, rng, consumed),
        }
    }

    fn for_seed(
        &self,
        idx: usize,
        round: u64,
        per_seed: usize,
        consumed: &mut ConsumedEntries,
    ) -> Vec<SyntheticPair> {
        let pair = &self.corpus.pairs[idx];
        let slots = &self.slots[idx];
        if slots.is_empty() {
            return Vec::new();
        }
        let mut rng = seed_rng(self.cfg.rng_seed, round, pair.id);
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for _ in 0..per_seed {
            for _ in 0..=self.cfg.max_retries {
                if let Some(sp) = self.attempt(pair, slots, &mut rng, consumed) {
                    if seen.insert(sp.key()) {
                        out.push(sp);
                        break;
                    }
                }
            }
        }
        out
    }

    /// Up to `per_seed` distinct pairs per seed, deduplicated pool-wide
    /// (first occurrence kept), in seed order.
    pub fn generate(&self, round: u64, per_seed: usize) -> Vec<SyntheticPair> {
        let per_seed_out: Vec<Vec<SyntheticPair>> =
            if self.cfg.restriction == VocabularyRestriction::ConsumeOnce {
                let mut consumed = ConsumedEntries::new();
                (0..self.corpus.len())
                    .map(|i| self.for_seed(i, round, per_seed, &mut consumed))
                    .collect()
            } else {
                (0..self.corpus.len())
                    .into_par_iter()
                    .map(|i| self.for_seed(i, round, per_seed, &mut ConsumedEntries::new()))
                    .collect()
            };
        dedup_pool(per_seed_out.into_iter().flatten())
    }

    /// Pool with the configured `per_seed`, round 0.
    pub fn generate_pool(&self) -> Vec<SyntheticPair> {
        self.generate(0, self.cfg.per_seed)
    }
}

/// Removes pairs whose (source, target) text repeats an earlier one.
pub fn dedup_pool(pairs: impl IntoIterator<Item = SyntheticPair>) -> Vec<SyntheticPair> {
    let mut seen = HashSet::new();
    pairs.into_iter().filter(|p| seen.insert(p.key())).collect()
}

/// `generate_pool` as a free function over borrowed inputs.
pub fn generate_pool(
    corpus: &ParallelCorpus,
    lexicon: &BilingualLexicon,
    src_paradigms: &ParadigmLexicon,
    tgt_paradigms: &ParadigmLexicon,
    cfg: &AugmentationConfig,
) -> Result<Vec<SyntheticPair>> {
    Ok(Generator::new(corpus, lexicon, src_paradigms, tgt_paradigms, cfg.clone())?.generate_pool())
}

/// One pool line: `seed_id<TAB>strategy<TAB>source<TAB>target<TAB>replacements`.
pub fn format_pool_line(p: &SyntheticPair) -> String {
    let reps: Vec<String> = p.replacements.iter().map(ToString::to_string).collect();
    format!(
        "{}\t{}\t{}\t{}\t{}",
        p.seed_id,
        p.strategy,
        p.source_text(),
        p.target_text(),
        reps.join(" ")
    )
}

pub fn parse_pool_line(line: &str) -> std::result::Result<SyntheticPair, String> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() < 5 {
        return Err(format!("expected at least 5 columns, found {}", cols.len()));
    }
    let reps = cols[4]
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<Vec<Replacement>, _>>()?;
    Ok(SyntheticPair {
        seed_id: cols[0].parse().map_err(|_| format!("bad seed id {:?}", cols[0]))?,
        strategy: cols[1].parse()?,
        source: cols[2].split(' ').map(str::to_string).collect(),
        target: cols[3].split(' ').map(str::to_string).collect(),
        replacements: reps,
    })
}

pub fn write_pool(path: &Path, pool: &[SyntheticPair]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for p in pool {
        writeln!(w, "{}", format_pool_line(p)).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a pool dump; extra trailing columns (such as a perplexity) are ignored.
pub fn read_pool(path: &Path) -> Result<Vec<SyntheticPair>> {
    read_lines(path)?
        .iter()
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            parse_pool_line(l).map_err(|msg| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aligner::{parse_pharaoh, AlignmentLink};
    use std::collections::BTreeSet;

    fn b(s: &str) -> FeatureBundle {
        s.parse().unwrap()
    }

    struct Fixture {
        pair: SentencePair,
        en: ParadigmLexicon,
        kmr: ParadigmLexicon,
        lex: BilingualLexicon,
    }

    fn entry(src: &str, tgt: &str, en: &ParadigmLexicon) -> LexEntry {
        LexEntry {
            src_lemma: src.into(),
            tgt_lemma: tgt.into(),
            pos: Pos::N,
            src_bundle: en.unique_analysis(src).map(|a| a.bundle),
            src_cells: en.paradigm_cells(src),
        }
    }

    fn figure() -> Fixture {
        let pair = SentencePair::from_text(
            0,
            "He plays the guitar very well",
            "Ew gîtarê pir baş lê dide",
        )
        .unwrap()
        .with_links(parse_pharaoh("0-0 1-4 1-5 2-1 3-1 4-2 5-3").unwrap())
        .unwrap();
        let mut en = ParadigmLexicon::new("en");
        en.insert("guitar", "guitar", b("N;ACC;SG"));
        en.insert("flower", "flower", b("N;ACC;SG"));
        let mut kmr = ParadigmLexicon::new("kmr");
        kmr.insert("gîtar", "gîtarê", b("N;ACC;SG"));
        kmr.insert("gul", "gulê", b("N;ACC;SG"));
        let lex = BilingualLexicon::from_entries(
            "en",
            "kmr",
            [entry("guitar", "gîtar", &en), entry("flower", "gul", &en)],
        );
        Fixture { pair, en, kmr, lex }
    }

    #[test]
    fn figure_slots() {
        let f = figure();
        let slots = select_replaceable(&f.pair, &f.en, &f.kmr, &AugmentationConfig::default());
        assert_eq!(slots.len(), 1);
        assert_eq!((slots[0].src_index, slots[0].tgt_index), (3, 1));
        assert_eq!(slots[0].source.lemma, "guitar");
        assert_eq!(slots[0].target.as_ref().unwrap().lemma, "gîtar");
    }

    #[test]
    fn multi_link_source_is_excluded() {
        let mut f = figure();
        f.en.insert("play", "plays", b("V;PRS;3;SG"));
        f.kmr.insert("dan", "dide", b("V;PRS;3;SG"));
        let slots = select_replaceable(&f.pair, &f.en, &f.kmr, &AugmentationConfig::default());
        assert!(slots.iter().all(|s| s.src_index != 1));
    }

    #[test]
    fn function_words_only_gives_no_slots() {
        let f = figure();
        let pair = SentencePair::from_text(1, "of the and", "û ya")
            .unwrap()
            .with_links(vec![AlignmentLink::new(0, 0), AlignmentLink::new(2, 1)])
            .unwrap();
        assert!(select_replaceable(&pair, &f.en, &f.kmr, &AugmentationConfig::default()).is_empty());
    }

    #[test]
    fn figure_informed_and_naive() {
        let f = figure();
        let cfg = AugmentationConfig::default();
        let slots = select_replaceable(&f.pair, &f.en, &f.kmr, &cfg);
        let mut rng = seed_rng(7, 0, 0);
        let mut used = ConsumedEntries::new();
        let sp = augment_informed(&f.pair, &slots, &f.lex, &f.en, &f.kmr, &cfg, &mut rng, &mut used)
            .unwrap();
        assert_eq!(sp.source_text(), "He plays the flower very well");
        assert_eq!(sp.target_text(), "Ew gulê pir baş lê dide");
        assert_eq!(
            sp.replacements,
            vec![Replacement {
                src_index: 3,
                tgt_index: 1,
                old_lemma: "guitar".into(),
                new_lemma: "flower".into()
            }]
        );

        let naive_cfg = AugmentationConfig {
            strategy: Strategy::Naive,
            ..cfg
        };
        let slots = select_replaceable(&f.pair, &f.en, &f.kmr, &naive_cfg);
        let sp = augment_naive(&f.pair, &slots, &f.lex, &naive_cfg, &mut rng, &mut used).unwrap();
        assert_eq!(sp.source_text(), "He plays the flower very well");
        assert_eq!(sp.target_text(), "Ew gul pir baş lê dide");
    }

    #[test]
    fn empty_candidate_pool_is_absent() {
        let f = figure();
        let lex = BilingualLexicon::from_entries("en", "kmr", [entry("guitar", "gîtar", &f.en)]);
        let cfg = AugmentationConfig::default();
        let slots = select_replaceable(&f.pair, &f.en, &f.kmr, &cfg);
        let mut rng = seed_rng(1, 0, 0);
        let mut used = ConsumedEntries::new();
        assert!(augment_informed(&f.pair, &slots, &lex, &f.en, &f.kmr, &cfg, &mut rng, &mut used).is_none());
        assert!(augment_naive(&f.pair, &slots, &lex, &cfg, &mut rng, &mut used).is_none());
    }

    #[test]
    fn missing_target_paradigm_discards_attempt() {
        let mut f = figure();
        f.en.insert("tree", "tree", b("N;ACC;SG"));
        let lex = BilingualLexicon::from_entries(
            "en",
            "kmr",
            [entry("guitar", "gîtar", &f.en), entry("tree", "dar", &f.en)],
        );
        let cfg = AugmentationConfig::default();
        let slots = select_replaceable(&f.pair, &f.en, &f.kmr, &cfg);
        let mut rng = seed_rng(1, 0, 0);
        let mut used = ConsumedEntries::new();
        assert!(augment_informed(&f.pair, &slots, &f.lex, &f.en, &f.kmr, &cfg, &mut rng, &mut used).is_some());
        assert!(augment_informed(&f.pair, &slots, &lex, &f.en, &f.kmr, &cfg, &mut rng, &mut used).is_none());
        let no_inflection = AugmentationConfig {
            inflect_target: false,
            ..cfg
        };
        let sp = augment_informed(&f.pair, &slots, &lex, &f.en, &f.kmr, &no_inflection, &mut rng, &mut used)
            .unwrap();
        assert_eq!(sp.target_text(), "Ew dar pir baş lê dide");
    }

    /// Two slots, two alternative lemmas each; the expected pair is obtained by
    /// replaying the documented draw sequence on an identically keyed stream.
    #[test]
    fn seeded_draws_replay() {
        let mut en = ParadigmLexicon::new("en");
        let mut xx = ParadigmLexicon::new("xx");
        for (l, f) in [("cat", "cats"), ("dog", "dogs"), ("fox", "foxes")] {
            en.insert(l, f, b("N;PL"));
            xx.insert(&format!("{l}o"), &format!("{l}oi"), b("N;PL"));
        }
        for (l, f) in [("run", "ran"), ("see", "saw"), ("eat", "ate")] {
            en.insert(l, f, b("V;PST"));
            xx.insert(&format!("{l}a"), &format!("{l}at"), b("V;PST"));
        }
        let lex = BilingualLexicon::from_entries(
            "en",
            "xx",
            ["cat", "dog", "fox"]
                .iter()
                .map(|w| LexEntry {
                    src_lemma: w.to_string(),
                    tgt_lemma: format!("{w}o"),
                    pos: Pos::N,
                    src_bundle: None,
                    src_cells: en.paradigm_cells(w),
                })
                .chain(["run", "see", "eat"].iter().map(|w| LexEntry {
                    src_lemma: w.to_string(),
                    tgt_lemma: format!("{w}a"),
                    pos: Pos::V,
                    src_bundle: None,
                    src_cells: en.paradigm_cells(w),
                })),
        );
        let pair = SentencePair::from_text(4, "the dogs ran home", "i dogoi runat domu")
            .unwrap()
            .with_links(parse_pharaoh("0-0 1-1 2-2 3-3").unwrap())
            .unwrap();
        let cfg = AugmentationConfig {
            rng_seed: 99,
            ..Default::default()
        };
        let slots = select_replaceable(&pair, &en, &xx, &cfg);
        assert_eq!(slots.len(), 2);

        // replay
        let mut replay = seed_rng(99, 0, 4);
        let k = replay.random_range(1..=2usize);
        let mut chosen = index::sample(&mut replay, 2, k).into_vec();
        chosen.sort_unstable();
        let mut src: Vec<&str> = vec!["the", "dogs", "ran", "home"];
        let mut tgt: Vec<&str> = vec!["i", "dogoi", "runat", "domu"];
        let nouns = [("cat", "cats", "catoi"), ("fox", "foxes", "foxoi")];
        let verbs = [("eat", "ate", "eatat"), ("see", "saw", "seeat")];
        for c in chosen {
            let r = replay.random_range(0..2usize);
            let (_, s, t) = if c == 0 { nouns[r] } else { verbs[r] };
            src[c + 1] = s;
            tgt[c + 1] = t;
        }

        let mut rng = seed_rng(99, 0, 4);
        let mut used = ConsumedEntries::new();
        let sp = augment_informed(&pair, &slots, &lex, &en, &xx, &cfg, &mut rng, &mut used).unwrap();
        assert_eq!(sp.source, src);
        assert_eq!(sp.target, tgt);

        // naive with the same stream touches the same positions with citation forms
        let naive = AugmentationConfig {
            strategy: Strategy::Naive,
            ..cfg.clone()
        };
        let mut rng = seed_rng(99, 0, 4);
        let nv = augment_naive(&pair, &slots, &lex, &naive, &mut rng, &mut used).unwrap();
        let inf_pos: Vec<_> = sp.replacements.iter().map(|r| (r.src_index, r.new_lemma.clone())).collect();
        let nv_pos: Vec<_> = nv.replacements.iter().map(|r| (r.src_index, r.new_lemma.clone())).collect();
        assert_eq!(inf_pos, nv_pos);
        for i in 0..4 {
            if sp.replacements.iter().any(|r| r.src_index == i) {
                // informed inserts inflected forms, naive the citation forms
                assert_ne!(sp.source[i], nv.source[i]);
                assert_ne!(sp.target[i], nv.target[i]);
            } else {
                assert_eq!(sp.source[i], nv.source[i]);
                assert_eq!(sp.target[i], nv.target[i]);
            }
        }
    }

    #[test]
    fn case_is_carried_over() {
        assert_eq!(match_case("Guitar", "flower"), "Flower");
        assert_eq!(match_case("NATO", "flower"), "FLOWER");
        assert_eq!(match_case("guitar", "Paris"), "Paris");
        assert_eq!(match_case("I", "flower"), "Flower");
    }

    #[test]
    fn pool_line_round_trip() {
        let p = SyntheticPair {
            seed_id: 12,
            strategy: Strategy::Naive,
            source: vec!["a".into(), "b".into()],
            target: vec!["c".into()],
            replacements: vec![Replacement {
                src_index: 1,
                tgt_index: 0,
                old_lemma: "x".into(),
                new_lemma: "b".into(),
            }],
        };
        let line = format_pool_line(&p);
        assert_eq!(line, "12\tnaive\ta b\tc\t1-0:x>b");
        assert_eq!(parse_pool_line(&line).unwrap(), p);
        assert!(parse_pool_line("1\tinformed\ta").is_err());
    }

    #[test]
    fn generator_is_deterministic_and_unique() {
        let f = figure();
        let mut corpus = ParallelCorpus::new("en", "kmr");
        corpus.push(f.pair.clone()).unwrap();
        let cfg = AugmentationConfig {
            per_seed: 5,
            ..Default::default()
        };
        let g = Generator::new(&corpus, &f.lex, &f.en, &f.kmr, cfg).unwrap();
        let a = g.generate_pool();
        // only one alternative exists
        assert_eq!(a.len(), 1);
        assert_eq!(a, g.generate_pool());
        let keys: BTreeSet<_> = a.iter().map(|p| p.key()).collect();
        assert_eq!(keys.len(), a.len());
    }
}
