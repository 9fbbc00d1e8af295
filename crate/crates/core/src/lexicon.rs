//! Bilingual lexicon normalized to one translation per source lemma.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use unicode_normalization::UnicodeNormalization;

use crate::corpus::{fold_key, read_lines};
use crate::error::{Error, Result};
use crate::morphology::{FeatureBundle, ParadigmLexicon, Pos};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexEntry {
    pub src_lemma: String,
    pub tgt_lemma: String,
    pub pos: Pos,
    /// Bundle of the source lemma itself: given explicitly in the file or the
    /// unique same-POS analysis found in the source paradigms.
    pub src_bundle: Option<FeatureBundle>,
    /// Paradigm cells the source lemma can be inflected into.
    pub src_cells: BTreeSet<FeatureBundle>,
}

impl LexEntry {
    /// True when the source side can realize exactly `bundle`.
    pub fn matches(&self, bundle: &FeatureBundle) -> bool {
        self.pos == bundle.pos
            && (self.src_cells.contains(bundle) || self.src_bundle.as_ref() == Some(bundle))
    }

    /// Entries without any paradigm coverage only serve naive replacement.
    pub fn has_morphology(&self) -> bool {
        !self.src_cells.is_empty() || self.src_bundle.as_ref().is_some_and(|b| !b.features.is_empty())
    }
}

/// How the candidate list for one slot is narrowed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum VocabularyRestriction {
    #[default]
    All,
    /// Only the lexicographically first half (rounded up) of the matching entries.
    FirstHalf,
    /// Each entry may be drawn at most once per generation run.
    ConsumeOnce,
}

impl FromStr for VocabularyRestriction {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "all" => Ok(Self::All),
            "first-half" | "half" => Ok(Self::FirstHalf),
            "consume-once" | "remove" => Ok(Self::ConsumeOnce),
            _ => Err(format!(
                "unknown restriction {s:?} (expected all, first-half or consume-once)"
            )),
        }
    }
}

impl fmt::Display for VocabularyRestriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::All => "all",
            Self::FirstHalf => "first-half",
            Self::ConsumeOnce => "consume-once",
        })
    }
}

/// Entries already handed out under [`VocabularyRestriction::ConsumeOnce`].
/// Owned by a single generation driver.
#[derive(Clone, Debug, Default)]
pub struct ConsumedEntries {
    used: HashSet<usize>,
}

impl ConsumedEntries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn consume(&mut self, entry: &LexEntry, lex: &BilingualLexicon) {
        if let Some(&i) = lex.index.get(&fold_key(&entry.src_lemma)) {
            self.used.insert(i);
        }
    }

    pub fn len(&self) -> usize {
        self.used.len()
    }

    pub fn is_empty(&self) -> bool {
        self.used.is_empty()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub rows: usize,
    pub malformed: usize,
    pub multiword: usize,
    pub pos_mismatch: usize,
    pub later_translation: usize,
}

#[derive(Clone, Debug, Default)]
pub struct BilingualLexicon {
    pub source_lang: String,
    pub target_lang: String,
    /// Entries sorted by case-folded source lemma.
    entries: Vec<LexEntry>,
    index: HashMap<String, usize>,
    by_bundle: HashMap<FeatureBundle, Vec<usize>>,
    by_pos: HashMap<Pos, Vec<usize>>,
    pub report: LoadReport,
}

impl BilingualLexicon {
    /// Builds a lexicon from entries in priority order: the first entry for a
    /// source lemma wins.
    pub fn from_entries(
        source_lang: impl Into<String>,
        target_lang: impl Into<String>,
        entries: impl IntoIterator<Item = LexEntry>,
    ) -> Self {
        let mut seen = HashSet::new();
        let mut kept = Vec::new();
        let mut later = 0;
        for e in entries {
            if seen.insert(fold_key(&e.src_lemma)) {
                kept.push(e);
            } else {
                later += 1;
            }
        }
        kept.sort_by_cached_key(|e| (fold_key(&e.src_lemma), e.src_lemma.clone()));
        let mut lex = BilingualLexicon {
            source_lang: source_lang.into(),
            target_lang: target_lang.into(),
            entries: kept,
            ..Default::default()
        };
        lex.report.later_translation = later;
        lex.reindex();
        lex
    }

    fn reindex(&mut self) {
        self.index.clear();
        self.by_bundle.clear();
        self.by_pos.clear();
        for (i, e) in self.entries.iter().enumerate() {
            self.index.insert(fold_key(&e.src_lemma), i);
            self.by_pos.entry(e.pos.clone()).or_default().push(i);
            let mut bundles: BTreeSet<&FeatureBundle> = e.src_cells.iter().collect();
            if let Some(b) = &e.src_bundle {
                bundles.insert(b);
            }
            for b in bundles.into_iter().filter(|b| b.pos == e.pos) {
                self.by_bundle.entry(b.clone()).or_default().push(i);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[LexEntry] {
        &self.entries
    }

    pub fn get(&self, src_lemma: &str) -> Option<&LexEntry> {
        self.index.get(&fold_key(src_lemma)).map(|&i| &self.entries[i])
    }

    /// Entries whose source side realizes exactly `bundle`, in source-lemma order.
    pub fn candidates(
        &self,
        bundle: &FeatureBundle,
        restriction: VocabularyRestriction,
        consumed: &ConsumedEntries,
    ) -> Vec<&LexEntry> {
        self.restrict(self.by_bundle.get(bundle), restriction, consumed)
    }

    /// Entries with the given POS regardless of features (naive replacement).
    pub fn candidates_by_pos(
        &self,
        pos: &Pos,
        restriction: VocabularyRestriction,
        consumed: &ConsumedEntries,
    ) -> Vec<&LexEntry> {
        self.restrict(self.by_pos.get(pos), restriction, consumed)
    }

    fn restrict(
        &self,
        ids: Option<&Vec<usize>>,
        restriction: VocabularyRestriction,
        consumed: &ConsumedEntries,
    ) -> Vec<&LexEntry> {
        let Some(ids) = ids else {
            return Vec::new();
        };
        let ids: &[usize] = match restriction {
            VocabularyRestriction::FirstHalf => &ids[..ids.len().div_ceil(2)],
            _ => ids,
        };
        ids.iter()
            .filter(|i| restriction != VocabularyRestriction::ConsumeOnce || !consumed.used.contains(i))
            .map(|&i| &self.entries[i])
            .collect()
    }
}

/// POS tags the paradigms attest for a word, as a form or as a lemma.
fn attested_pos(paradigms: &ParadigmLexicon, word: &str) -> BTreeSet<Pos> {
    let mut out: BTreeSet<Pos> = paradigms.analyze(word).into_iter().map(|a| a.bundle.pos).collect();
    out.extend(paradigms.paradigm_cells(word).into_iter().map(|b| b.pos));
    out
}

/// Loads `src_lemma<TAB>tgt_lemma<TAB>POS[<TAB>features]` rows.
///
/// File order is significant: the first surviving translation of a source
/// lemma is kept and later ones are discarded. Rows whose POS contradicts
/// the paradigms of either side are dropped before that rule applies.
pub fn load_lexicon(
    path: &Path,
    src_paradigms: &ParadigmLexicon,
    tgt_paradigms: &ParadigmLexicon,
) -> Result<BilingualLexicon> {
    let lines = read_lines(path)?;
    let mut report = LoadReport::default();
    let mut entries = Vec::new();
    for line in &lines {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        report.rows += 1;
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 3 {
            report.malformed += 1;
            continue;
        }
        let src: String = cols[0].trim().nfc().collect();
        let tgt: String = cols[1].trim().nfc().collect();
        let Some(pos) = Pos::from_label(cols[2]) else {
            report.malformed += 1;
            continue;
        };
        if src.is_empty() || tgt.is_empty() {
            report.malformed += 1;
            continue;
        }
        if src.contains(char::is_whitespace) || tgt.contains(char::is_whitespace) {
            report.multiword += 1;
            continue;
        }
        let explicit = match cols.get(3).map(|s| s.trim()).filter(|s| !s.is_empty()) {
            Some(feats) => match feats.parse::<FeatureBundle>() {
                Ok(b) if b.pos == pos => Some(b),
                Ok(_) => {
                    report.pos_mismatch += 1;
                    continue;
                }
                Err(_) => {
                    report.malformed += 1;
                    continue;
                }
            },
            None => None,
        };
        let src_pos = attested_pos(src_paradigms, &src);
        let tgt_pos = attested_pos(tgt_paradigms, &tgt);
        if (!src_pos.is_empty() && !src_pos.contains(&pos))
            || (!tgt_pos.is_empty() && !tgt_pos.contains(&pos))
        {
            report.pos_mismatch += 1;
            continue;
        }
        let src_bundle = explicit.or_else(|| {
            let same_pos: Vec<_> = src_paradigms
                .analyze(&src)
                .into_iter()
                .filter(|a| a.bundle.pos == pos)
                .collect();
            match same_pos.as_slice() {
                [only] => Some(only.bundle.clone()),
                _ => None,
            }
        });
        let src_cells = src_paradigms
            .paradigm_cells(&src)
            .into_iter()
            .filter(|b| b.pos == pos)
            .collect();
        entries.push(LexEntry {
            src_lemma: src,
            tgt_lemma: tgt,
            pos,
            src_bundle,
            src_cells,
        });
    }
    let mut lex = BilingualLexicon::from_entries(
        src_paradigms.language.clone(),
        tgt_paradigms.language.clone(),
        entries,
    );
    report.later_translation = lex.report.later_translation;
    lex.report = report;
    if lex.is_empty() {
        return Err(Error::Config(format!(
            "{}: no usable lexicon entries",
            path.display()
        )));
    }
    Ok(lex)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::fs;

    fn b(s: &str) -> FeatureBundle {
        s.parse().unwrap()
    }

    fn paradigms() -> (ParadigmLexicon, ParadigmLexicon) {
        let mut en = ParadigmLexicon::new("en");
        en.insert("guitar", "guitar", b("N;ACC;SG"));
        en.insert("flower", "flower", b("N;ACC;SG"));
        en.insert("run", "run", b("V;NFIN"));
        en.insert("run", "ran", b("V;PST"));
        let mut kmr = ParadigmLexicon::new("kmr");
        kmr.insert("gîtar", "gîtarê", b("N;ACC;SG"));
        kmr.insert("gul", "gulê", b("N;ACC;SG"));
        kmr.insert("bez", "bezî", b("V;PST"));
        (en, kmr)
    }

    fn load(body: &str) -> Result<BilingualLexicon> {
        let (en, kmr) = paradigms();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("lex.tsv");
        fs::write(&p, body).unwrap();
        load_lexicon(&p, &en, &kmr)
    }

    #[test]
    fn first_translation_wins() {
        let lex = load("flower\tgul\tN\nflower\tkulîlk\tN\n").unwrap();
        assert_eq!(lex.len(), 1);
        assert_eq!(lex.get("flower").unwrap().tgt_lemma, "gul");
        assert_eq!(lex.report.later_translation, 1);
    }

    #[test]
    fn empty_file_is_config_error() {
        assert!(matches!(load(""), Err(Error::Config(_))));
        assert!(matches!(load("only\ttwo\n"), Err(Error::Config(_))));
    }

    #[test]
    fn pos_mismatch_rows_dropped() {
        // "run" is a verb in the English paradigms, so the noun row goes.
        let body = "guitar\tgîtar\tN\nflower\tgul\tN\nrun\tbez\tN\ntable\tmase\tN\nred\tsor\tADJ\nrun\tbez\tV\n";
        let lex = load(body).unwrap();
        assert_eq!(lex.report.pos_mismatch, 1);
        assert_eq!(lex.len(), 5);
        assert_eq!(lex.get("run").unwrap().pos, Pos::V);
        // target-side mismatch
        let lex = load("flower\tgul\tV\nguitar\tgîtar\tN\n").unwrap();
        assert_eq!(lex.len(), 1);
        assert_eq!(lex.report.pos_mismatch, 1);
    }

    #[test]
    fn bundles_attached_from_paradigms() {
        let lex = load("flower\tgul\tN\ntable\tmase\tN\nrun\tbez\tverb\nblue\tşîn\tADJ\tADJ;POS\n").unwrap();
        let flower = lex.get("flower").unwrap();
        assert_eq!(flower.src_bundle, Some(b("N;ACC;SG")));
        assert!(flower.matches(&b("N;ACC;SG")));
        let table = lex.get("table").unwrap();
        assert_eq!(table.src_bundle, None);
        assert!(!table.has_morphology());
        let run = lex.get("run").unwrap();
        assert!(run.src_cells.contains(&b("V;PST")));
        assert_eq!(lex.get("blue").unwrap().src_bundle, Some(b("ADJ;POS")));
    }

    #[test]
    fn candidates_follow_bundle_and_pos() {
        let lex = load("guitar\tgîtar\tN\nflower\tgul\tN\nrun\tbez\tV\ntable\tmase\tN\n").unwrap();
        let none = ConsumedEntries::new();
        let got: Vec<_> = lex
            .candidates(&b("N;ACC;SG"), VocabularyRestriction::All, &none)
            .iter()
            .map(|e| e.src_lemma.as_str())
            .collect();
        assert_eq!(got, ["flower", "guitar"]);
        assert!(lex.candidates(&b("V;ACC;SG"), VocabularyRestriction::All, &none).is_empty());
        let nouns: Vec<_> = lex
            .candidates_by_pos(&Pos::N, VocabularyRestriction::All, &none)
            .iter()
            .map(|e| e.src_lemma.as_str())
            .collect();
        assert_eq!(nouns, ["flower", "guitar", "table"]);
    }

    fn ten_nouns() -> BilingualLexicon {
        let words = ["kiwi", "apple", "judo", "hat", "bean", "fig", "gum", "date", "egg", "cat"];
        BilingualLexicon::from_entries(
            "en",
            "xx",
            words.iter().map(|w| LexEntry {
                src_lemma: w.to_string(),
                tgt_lemma: format!("{w}-x"),
                pos: Pos::N,
                src_bundle: Some(b("N;SG")),
                src_cells: BTreeSet::new(),
            }),
        )
    }

    #[test]
    fn first_half_is_sorted_prefix() {
        let lex = ten_nouns();
        let none = ConsumedEntries::new();
        let half: Vec<_> = lex
            .candidates(&b("N;SG"), VocabularyRestriction::FirstHalf, &none)
            .iter()
            .map(|e| e.src_lemma.as_str())
            .collect();
        assert_eq!(half, ["apple", "bean", "cat", "date", "egg"]);
    }

    #[test]
    fn consume_once_hands_out_each_entry_once() {
        let lex = ten_nouns();
        let mut used = ConsumedEntries::new();
        let mut drawn = Vec::new();
        loop {
            let c = lex.candidates(&b("N;SG"), VocabularyRestriction::ConsumeOnce, &used);
            let Some(first) = c.first().copied() else { break };
            drawn.push(first.src_lemma.clone());
            used.consume(first, &lex);
        }
        assert_eq!(drawn.len(), 10);
        let unique: HashSet<_> = drawn.iter().collect();
        assert_eq!(unique.len(), 10);
    }

    proptest! {
        #[test]
        fn all_is_superset_of_first_half(rows in proptest::collection::vec(
            ("[a-f]{1,3}", "[a-f]{1,3}", proptest::sample::select(vec!["N;SG", "N;PL", "V;PST", "ADJ"])), 0..30)) {
            let lex = BilingualLexicon::from_entries("a", "b", rows.iter().map(|(s, t, f)| {
                let bundle = b(f);
                LexEntry { src_lemma: s.clone(), tgt_lemma: t.clone(), pos: bundle.pos.clone(), src_bundle: Some(bundle), src_cells: BTreeSet::new() }
            }));
            let distinct: HashSet<_> = rows.iter().map(|r| r.0.clone()).collect();
            prop_assert!(lex.len() <= distinct.len());
            let none = ConsumedEntries::new();
            for f in ["N;SG", "N;PL", "V;PST", "ADJ"] {
                let all: HashSet<_> = lex.candidates(&b(f), VocabularyRestriction::All, &none).iter().map(|e| e.src_lemma.clone()).collect();
                let half: HashSet<_> = lex.candidates(&b(f), VocabularyRestriction::FirstHalf, &none).iter().map(|e| e.src_lemma.clone()).collect();
                prop_assert!(half.is_subset(&all));
            }
        }
    }
}
