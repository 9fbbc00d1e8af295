//! Paradigm-table morphology: context-free analysis, lemmatization and
//! inflection over UniMorph-style `lemma<TAB>form<TAB>features` files.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::corpus::{fold_key, read_lines};
use crate::error::{Error, Result};

/// Coarse part of speech. Only nouns, adjectives and verbs take part in
/// replacement; every other UniMorph POS tag is kept verbatim in `Other`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pos {
    N,
    Adj,
    V,
    Other(String),
}

/// UniMorph part-of-speech tags recognized inside a feature string.
const POS_TAGS: &[&str] = &[
    "N", "PROPN", "ADJ", "PRO", "CLF", "ART", "DET", "V", "V.PTCP", "V.MSDR", "V.CVB", "ADV",
    "AUX", "ADP", "COMP", "CONJ", "NUM", "PART", "INTJ",
];

impl Pos {
    pub fn as_str(&self) -> &str {
        match self {
            Pos::N => "N",
            Pos::Adj => "ADJ",
            Pos::V => "V",
            Pos::Other(s) => s,
        }
    }

    /// Parses a POS label as found in lexicon files (`N`, `noun`, `adj`, `VERB`, ...).
    pub fn from_label(label: &str) -> Option<Pos> {
        let up = label.trim().to_uppercase();
        if up.is_empty() {
            return None;
        }
        Some(match up.as_str() {
            "N" | "NOUN" => Pos::N,
            "ADJ" | "A" | "ADJECTIVE" => Pos::Adj,
            "V" | "VERB" => Pos::V,
            _ => Pos::Other(up),
        })
    }

    fn from_unimorph_tag(tag: &str) -> Option<Pos> {
        if POS_TAGS.contains(&tag) {
            Pos::from_label(tag)
        } else {
            None
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pos {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Pos::from_label(s).ok_or_else(|| "empty POS".to_string())
    }
}

/// A POS tag plus a set of UniMorph feature tags.
///
/// Serialized as `POS;F1;F2;...` with features in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureBundle {
    pub pos: Pos,
    pub features: BTreeSet<String>,
}

impl FeatureBundle {
    pub fn new<I, S>(pos: Pos, features: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        FeatureBundle {
            pos,
            features: features.into_iter().map(Into::into).collect(),
        }
    }

    pub fn pos_only(pos: Pos) -> Self {
        FeatureBundle {
            pos,
            features: BTreeSet::new(),
        }
    }

    /// Case, number (nominals) or tense (verbs) subset used as the inflection fallback key.
    pub fn core(&self) -> FeatureBundle {
        let keep: &dyn Fn(&str) -> bool = match self.pos {
            Pos::N | Pos::Adj => &|f| is_case(f) || NUMBER_TAGS.contains(&f),
            Pos::V => &|f| TENSE_TAGS.contains(&f),
            Pos::Other(_) => &|_| false,
        };
        FeatureBundle {
            pos: self.pos.clone(),
            features: self.features.iter().filter(|f| keep(f)).cloned().collect(),
        }
    }

    fn overlap(&self, other: &FeatureBundle) -> usize {
        self.features.intersection(&other.features).count()
    }
}

const CASE_TAGS: &[&str] = &[
    "NOM", "ACC", "ERG", "ABS", "NOMS", "DAT", "BEN", "PRP", "GEN", "REL", "PRT", "INS", "COM",
    "VOC", "COMPV", "EQTV", "PRIV", "PROPR", "AVR", "FRML", "TRANS", "BYWAY", "INTER", "AT",
    "POST", "IN", "CIRC", "ANTE", "APUD", "ON", "ONHR", "ONVR", "SUB", "REM", "PROXM", "ESS",
    "ALL", "ABL", "APPRX", "TERM", "OBL", "OBLIQUE", "DIR",
];
const NUMBER_TAGS: &[&str] = &["SG", "PL", "DU", "TRI", "PAUC", "GRPL", "GPAUC"];
const TENSE_TAGS: &[&str] = &["PRS", "PST", "FUT", "1DAY", "HOD", "IMMED", "RCT", "RMT"];

fn is_case(tag: &str) -> bool {
    // composite local cases such as IN+ABL
    tag.split('+').all(|t| CASE_TAGS.contains(&t))
}

impl fmt::Display for FeatureBundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.pos.as_str())?;
        for feat in &self.features {
            write!(f, ";{feat}")?;
        }
        Ok(())
    }
}

impl FromStr for FeatureBundle {
    type Err = String;

    /// The first recognized UniMorph POS tag becomes the POS; the remaining
    /// tags (in any order) become features.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let tags: Vec<&str> = s.split(';').map(str::trim).filter(|t| !t.is_empty()).collect();
        let pos_at = tags
            .iter()
            .position(|t| Pos::from_unimorph_tag(t).is_some())
            .ok_or_else(|| format!("no part-of-speech tag in {s:?}"))?;
        let pos = Pos::from_unimorph_tag(tags[pos_at]).unwrap();
        let features = tags
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != pos_at)
            .map(|(_, t)| t.to_string())
            .collect();
        Ok(FeatureBundle { pos, features })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Analysis {
    pub lemma: String,
    pub bundle: FeatureBundle,
}

impl fmt::Display for Analysis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]", self.lemma, self.bundle)
    }
}

/// Both directions of a paradigm table. Keys are case-folded; stored
/// lemmas and forms keep their original spelling.
#[derive(Clone, Debug, Default)]
pub struct ParadigmLexicon {
    pub language: String,
    by_form: HashMap<String, BTreeSet<Analysis>>,
    by_lemma: HashMap<String, HashMap<FeatureBundle, BTreeSet<String>>>,
    rows: usize,
    skipped_malformed: usize,
    skipped_multiword: usize,
}

impl ParadigmLexicon {
    pub fn new(language: impl Into<String>) -> Self {
        ParadigmLexicon {
            language: language.into(),
            ..Default::default()
        }
    }

    /// Adds one row. Multi-word lemmas or forms are ignored and counted.
    pub fn insert(&mut self, lemma: &str, form: &str, bundle: FeatureBundle) {
        let lemma = lemma.trim();
        let form = form.trim();
        if lemma.is_empty() || form.is_empty() {
            self.skipped_malformed += 1;
            return;
        }
        if lemma.chars().any(char::is_whitespace) || form.chars().any(char::is_whitespace) {
            self.skipped_multiword += 1;
            return;
        }
        let analysis = Analysis {
            lemma: lemma.to_string(),
            bundle: bundle.clone(),
        };
        let fresh = self.by_form.entry(fold_key(form)).or_default().insert(analysis);
        self.by_lemma
            .entry(fold_key(lemma))
            .or_default()
            .entry(bundle)
            .or_default()
            .insert(form.to_string());
        if fresh {
            self.rows += 1;
        }
    }

    /// Distinct (lemma, form, bundle) rows held.
    pub fn len(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn skipped_malformed(&self) -> usize {
        self.skipped_malformed
    }

    pub fn skipped_multiword(&self) -> usize {
        self.skipped_multiword
    }

    /// All analyses of a surface form (case-insensitive), in canonical order.
    pub fn analyze(&self, form: &str) -> Vec<Analysis> {
        self.by_form
            .get(&fold_key(form))
            .map(|s| s.iter().cloned().collect())
            .unwrap_or_default()
    }

    /// The single analysis of `form`, if it is unambiguous.
    pub fn unique_analysis(&self, form: &str) -> Option<Analysis> {
        let set = self.by_form.get(&fold_key(form))?;
        if set.len() == 1 {
            set.iter().next().cloned()
        } else {
            None
        }
    }

    /// Lemma of the analysis of `form` that best matches `bundle`.
    ///
    /// Only analyses with the same POS qualify. Preference order: exact
    /// bundle, largest feature overlap, lemma equal to the form itself, then
    /// the lexicographically smallest lemma.
    pub fn lemmatize(&self, form: &str, bundle: &FeatureBundle) -> Option<String> {
        let key = fold_key(form);
        let set = self.by_form.get(&key)?;
        set.iter()
            .filter(|a| a.bundle.pos == bundle.pos)
            .max_by(|a, b| {
                let rank = |x: &Analysis| {
                    (
                        x.bundle == *bundle,
                        x.bundle.overlap(bundle),
                        fold_key(&x.lemma) == key,
                    )
                };
                rank(a).cmp(&rank(b)).then_with(|| b.lemma.cmp(&a.lemma))
            })
            .map(|a| a.lemma.clone())
    }

    /// Form of `lemma` carrying exactly `bundle`; smallest if several.
    pub fn inflect_exact(&self, lemma: &str, bundle: &FeatureBundle) -> Option<String> {
        self.by_lemma
            .get(&fold_key(lemma))?
            .get(bundle)?
            .iter()
            .next()
            .cloned()
    }

    /// Form of `lemma` for `bundle`. When no row carries the exact bundle,
    /// falls back to rows with the same POS and the same core features
    /// (case/number for nominals, tense for verbs), preferring the largest
    /// overall feature overlap, then the smallest form.
    pub fn inflect(&self, lemma: &str, bundle: &FeatureBundle) -> Option<String> {
        let cells = self.by_lemma.get(&fold_key(lemma))?;
        if let Some(forms) = cells.get(bundle) {
            return forms.iter().next().cloned();
        }
        let core = bundle.core();
        if core.features.is_empty() {
            return None;
        }
        cells
            .iter()
            .filter(|(b, _)| b.pos == bundle.pos && b.core() == core)
            .flat_map(|(b, forms)| forms.iter().map(move |f| (b.overlap(bundle), f)))
            .max_by(|(oa, fa), (ob, fb)| oa.cmp(ob).then_with(|| fb.cmp(fa)))
            .map(|(_, f)| f.clone())
    }

    /// Bundles for which `lemma` has at least one form.
    pub fn paradigm_cells(&self, lemma: &str) -> BTreeSet<FeatureBundle> {
        self.by_lemma
            .get(&fold_key(lemma))
            .map(|cells| cells.keys().cloned().collect())
            .unwrap_or_default()
    }

    /// Every stored `(lemma, form, bundle)` row, sorted.
    pub fn rows(&self) -> Vec<(String, String, FeatureBundle)> {
        let mut out = Vec::with_capacity(self.rows);
        for (form_key, analyses) in &self.by_form {
            for a in analyses {
                // recover original spelling from the lemma side
                let forms = &self.by_lemma[&fold_key(&a.lemma)][&a.bundle];
                for f in forms.iter().filter(|f| fold_key(f) == *form_key) {
                    out.push((a.lemma.clone(), f.clone(), a.bundle.clone()));
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }
}

/// Loads a UniMorph TSV. Lines without three non-empty columns or without a
/// recognizable POS tag are skipped and counted.
pub fn load_paradigms(path: &Path, language: &str) -> Result<ParadigmLexicon> {
    let lines = read_lines(path)?;
    let mut lex = ParadigmLexicon::new(language);
    for line in &lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split('\t');
        let (Some(lemma), Some(form), Some(feats)) = (cols.next(), cols.next(), cols.next()) else {
            lex.skipped_malformed += 1;
            continue;
        };
        match feats.parse::<FeatureBundle>() {
            Ok(bundle) => lex.insert(lemma, form, bundle),
            Err(_) => lex.skipped_malformed += 1,
        }
    }
    if lex.is_empty() {
        return Err(Error::Config(format!(
            "{}: no valid paradigm rows",
            path.display()
        )));
    }
    Ok(lex)
}
