//! Parallel corpus loading, tokenization and seed selection.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;

use unicode_normalization::UnicodeNormalization;
use unicode_properties::{GeneralCategoryGroup, UnicodeGeneralCategory};

use crate::aligner::AlignmentLink;
use crate::error::{Error, Result};

/// Default minimum source length (in tokens) for a seed sentence.
pub const DEFAULT_MIN_SEED_LEN: usize = 7;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Token {
    pub surface: String,
    pub index: usize,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.surface)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SentencePair {
    /// Zero-based line number in the originating file(s).
    pub id: usize,
    pub source: Vec<Token>,
    pub target: Vec<Token>,
    pub links: Option<Vec<AlignmentLink>>,
}

impl SentencePair {
    /// Builds a pair from already tokenized text. Both sides must be non-empty.
    pub fn new(id: usize, source: Vec<Token>, target: Vec<Token>) -> Result<Self> {
        if source.is_empty() || target.is_empty() {
            return Err(Error::Structural(format!(
                "pair {id}: both sides must contain at least one token"
            )));
        }
        Ok(SentencePair {
            id,
            source,
            target,
            links: None,
        })
    }

    pub fn from_text(id: usize, source: &str, target: &str) -> Result<Self> {
        Self::new(id, tokenize(source), tokenize(target))
    }

    /// Attaches alignment links, checking every index against the sentence bounds.
    pub fn with_links(mut self, links: Vec<AlignmentLink>) -> Result<Self> {
        self.set_links(links)?;
        Ok(self)
    }

    pub fn set_links(&mut self, mut links: Vec<AlignmentLink>) -> Result<()> {
        for link in &links {
            if link.src >= self.source.len() || link.tgt >= self.target.len() {
                return Err(Error::Structural(format!(
                    "pair {}: link {link} out of bounds for {}x{} sentence",
                    self.id,
                    self.source.len(),
                    self.target.len()
                )));
            }
        }
        links.sort_unstable();
        links.dedup();
        self.links = Some(links);
        Ok(())
    }

    pub fn source_surfaces(&self) -> Vec<&str> {
        self.source.iter().map(|t| t.surface.as_str()).collect()
    }

    pub fn target_surfaces(&self) -> Vec<&str> {
        self.target.iter().map(|t| t.surface.as_str()).collect()
    }

    pub fn source_text(&self) -> String {
        join_tokens(&self.source)
    }

    pub fn target_text(&self) -> String {
        join_tokens(&self.target)
    }
}

fn join_tokens(tokens: &[Token]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&t.surface);
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParallelCorpus {
    pub pairs: Vec<SentencePair>,
    pub source_lang: String,
    pub target_lang: String,
    /// Line numbers skipped because one side was blank.
    pub blank_lines: Vec<usize>,
}

impl ParallelCorpus {
    pub fn new(source_lang: impl Into<String>, target_lang: impl Into<String>) -> Self {
        ParallelCorpus {
            pairs: Vec::new(),
            source_lang: source_lang.into(),
            target_lang: target_lang.into(),
            blank_lines: Vec::new(),
        }
    }

    /// Appends a pair, rejecting duplicate ids.
    pub fn push(&mut self, pair: SentencePair) -> Result<()> {
        if self.pairs.iter().any(|p| p.id == pair.id) {
            return Err(Error::Structural(format!("duplicate pair id {}", pair.id)));
        }
        self.pairs.push(pair);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<&SentencePair> {
        // ids are ascending in load order, but tolerate hand-built corpora
        match self.pairs.binary_search_by_key(&id, |p| p.id) {
            Ok(i) => Some(&self.pairs[i]),
            Err(_) => self.pairs.iter().find(|p| p.id == id),
        }
    }

    /// Target side as token sequences, e.g. for language model training.
    pub fn target_sentences(&self) -> Vec<Vec<String>> {
        self.pairs
            .iter()
            .map(|p| p.target.iter().map(|t| t.surface.clone()).collect())
            .collect()
    }

    pub fn source_sentences(&self) -> Vec<Vec<String>> {
        self.pairs
            .iter()
            .map(|p| p.source.iter().map(|t| t.surface.clone()).collect())
            .collect()
    }

    /// Swaps source and target sides (links are transposed as well).
    pub fn reversed(&self) -> ParallelCorpus {
        ParallelCorpus {
            pairs: self
                .pairs
                .iter()
                .map(|p| SentencePair {
                    id: p.id,
                    source: p.target.clone(),
                    target: p.source.clone(),
                    links: p
                        .links
                        .as_ref()
                        .map(|ls| ls.iter().map(|l| l.transposed()).collect()),
                })
                .collect(),
            source_lang: self.target_lang.clone(),
            target_lang: self.source_lang.clone(),
            blank_lines: self.blank_lines.clone(),
        }
    }

    /// Attaches one link set per pair, in corpus order.
    pub fn attach_links(&mut self, links: Vec<Vec<AlignmentLink>>) -> Result<()> {
        if links.len() != self.pairs.len() {
            return Err(Error::Structural(format!(
                "alignment has {} lines but corpus has {} pairs",
                links.len(),
                self.pairs.len()
            )));
        }
        for (pair, ls) in self.pairs.iter_mut().zip(links) {
            pair.set_links(ls)?;
        }
        Ok(())
    }
}

/// NFC-normalizes `line`, splits on whitespace and detaches leading and
/// trailing punctuation runs from each word.
pub fn tokenize(line: &str) -> Vec<Token> {
    let normalized: String = line.nfc().collect();
    let mut surfaces: Vec<&str> = Vec::new();
    for word in normalized.split_whitespace() {
        split_edge_punctuation(word, &mut surfaces);
    }
    surfaces
        .into_iter()
        .enumerate()
        .map(|(index, s)| Token {
            surface: s.to_string(),
            index,
        })
        .collect()
}

fn is_punct(c: char) -> bool {
    c.general_category_group() == GeneralCategoryGroup::Punctuation
}

fn split_edge_punctuation<'a>(word: &'a str, out: &mut Vec<&'a str>) {
    let core_start = word.find(|c: char| !is_punct(c));
    let Some(start) = core_start else {
        // all punctuation: keep as one token
        out.push(word);
        return;
    };
    let end = word
        .char_indices()
        .rev()
        .find(|&(_, c)| !is_punct(c))
        .map(|(i, c)| i + c.len_utf8())
        .unwrap_or(word.len());
    if start > 0 {
        out.push(&word[..start]);
    }
    out.push(&word[start..end]);
    if end < word.len() {
        out.push(&word[end..]);
    }
}

/// Lookup key for lexicon and paradigm tables: NFC + lowercase.
pub fn fold_key(s: &str) -> String {
    s.nfc().collect::<String>().to_lowercase()
}

/// Reads a UTF-8 file as lines, reporting the 1-based line of the first invalid byte sequence.
pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut lines = Vec::new();
    if bytes.is_empty() {
        return Ok(lines);
    }
    let body = bytes.strip_suffix(b"\n").unwrap_or(&bytes);
    for (i, raw) in body.split(|&b| b == b'\n').enumerate() {
        let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
        let line = std::str::from_utf8(raw).map_err(|_| Error::Encoding {
            path: path.to_path_buf(),
            line: i + 1,
        })?;
        lines.push(line.to_string());
    }
    Ok(lines)
}

fn lang_from_path(path: &Path, fallback: &str) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .filter(|e| !e.is_empty() && *e != "txt")
        .unwrap_or(fallback)
        .to_string()
}

/// Loads a line-aligned pair of files. Language codes default to the file extensions.
pub fn load_parallel(source_path: &Path, target_path: &Path) -> Result<ParallelCorpus> {
    let src = read_lines(source_path)?;
    let tgt = read_lines(target_path)?;
    if src.len() != tgt.len() {
        return Err(Error::Structural(format!(
            "line count mismatch: {} has {} lines, {} has {} lines",
            source_path.display(),
            src.len(),
            target_path.display(),
            tgt.len()
        )));
    }
    let mut corpus = ParallelCorpus::new(
        lang_from_path(source_path, "src"),
        lang_from_path(target_path, "tgt"),
    );
    for (id, (s, t)) in src.iter().zip(&tgt).enumerate() {
        push_line(&mut corpus, id, s, t);
    }
    Ok(corpus)
}

/// Loads the single-file form: `source<TAB>target` per line.
pub fn load_parallel_tsv(path: &Path) -> Result<ParallelCorpus> {
    let lines = read_lines(path)?;
    let mut corpus = ParallelCorpus::new("src", "tgt");
    for (id, line) in lines.iter().enumerate() {
        let (s, t) = line.split_once('\t').ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: id + 1,
            msg: "expected source<TAB>target".into(),
        })?;
        push_line(&mut corpus, id, s, t);
    }
    Ok(corpus)
}

fn push_line(corpus: &mut ParallelCorpus, id: usize, s: &str, t: &str) {
    let source = tokenize(s);
    let target = tokenize(t);
    if source.is_empty() || target.is_empty() {
        corpus.blank_lines.push(id);
        return;
    }
    corpus.pairs.push(SentencePair {
        id,
        source,
        target,
        links: None,
    });
}

/// Keeps the pairs whose source side has at least `min_len` tokens.
pub fn filter_seed_eligible(corpus: &ParallelCorpus, min_len: usize) -> ParallelCorpus {
    ParallelCorpus {
        pairs: corpus
            .pairs
            .iter()
            .filter(|p| p.source.len() >= min_len)
            .cloned()
            .collect(),
        source_lang: corpus.source_lang.clone(),
        target_lang: corpus.target_lang.clone(),
        blank_lines: corpus.blank_lines.clone(),
    }
}

/// Distinct surface types over a set of token sequences.
pub fn surface_types<'a, I, S>(sentences: I) -> HashSet<String>
where
    I: IntoIterator<Item = &'a [S]>,
    S: AsRef<str> + 'a,
{
    let mut set = HashSet::new();
    for s in sentences {
        for t in s {
            set.insert(t.as_ref().to_string());
        }
    }
    set
}
