//! A small artificial language pair with regular inflection, written to disk
//! in the same formats the tool reads.
//!
//! Source nouns `nounK` (SG) / `nounKs` (PL), verbs `verbKed` (PST) /
//! `verbKs` (PRS), adjectives `adjK`. Target nouns `navK` / `navKan`, verbs
//! `lêkerKî` / `lêkerKe`, adjectives `rengînK`. Seeds follow
//!
//! ```text
//! the A N1 V the N2 near the river   ->   N1 A N2 V nêzîkî çem
//! ```
#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use lexaug::aligner::read_pharaoh;
use lexaug::corpus::{load_parallel, ParallelCorpus};
use lexaug::lexicon::{load_lexicon, BilingualLexicon};
use lexaug::morphology::{load_paradigms, ParadigmLexicon};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct ToyWorld {
    pub nouns: usize,
    pub adjectives: usize,
    pub verbs: usize,
    /// Seeds draw content words from the first `seed_vocab` lemmas of each class.
    pub seed_vocab: usize,
}

impl ToyWorld {
    /// A lexicon of `entries` rows split 2:1:1 between nouns, adjectives and verbs.
    pub fn with_lexicon_size(entries: usize) -> Self {
        let nouns = entries / 2;
        let adjectives = (entries - nouns) / 2;
        ToyWorld {
            nouns,
            adjectives,
            verbs: entries - nouns - adjectives,
            seed_vocab: 10,
        }
    }

    fn en_paradigms(&self) -> String {
        let mut s = String::new();
        for i in 0..self.nouns {
            writeln!(s, "noun{i}\tnoun{i}\tN;SG").unwrap();
            writeln!(s, "noun{i}\tnoun{i}s\tN;PL").unwrap();
        }
        for i in 0..self.adjectives {
            writeln!(s, "adj{i}\tadj{i}\tADJ").unwrap();
        }
        for i in 0..self.verbs {
            writeln!(s, "verb{i}\tverb{i}ed\tV;PST").unwrap();
            writeln!(s, "verb{i}\tverb{i}s\tV;PRS;3;SG").unwrap();
        }
        s
    }

    fn xx_paradigms(&self) -> String {
        let mut s = String::new();
        for i in 0..self.nouns {
            writeln!(s, "nav{i}\tnav{i}\tN;SG").unwrap();
            writeln!(s, "nav{i}\tnav{i}an\tN;PL").unwrap();
        }
        for i in 0..self.adjectives {
            writeln!(s, "rengîn{i}\trengîn{i}\tADJ").unwrap();
        }
        for i in 0..self.verbs {
            writeln!(s, "lêker{i}\tlêker{i}î\tV;PST").unwrap();
            writeln!(s, "lêker{i}\tlêker{i}e\tV;PRS;3;SG").unwrap();
        }
        s
    }

    fn lexicon(&self) -> String {
        let mut s = String::new();
        for i in 0..self.nouns {
            writeln!(s, "noun{i}\tnav{i}\tN").unwrap();
        }
        for i in 0..self.adjectives {
            writeln!(s, "adj{i}\trengîn{i}\tADJ").unwrap();
        }
        for i in 0..self.verbs {
            writeln!(s, "verb{i}\tlêker{i}\tV").unwrap();
        }
        s
    }

    /// `count` seed pairs plus `short` pairs of fewer than seven source tokens.
    pub fn seeds(&self, count: usize, short: usize, rng_seed: u64) -> (Vec<String>, Vec<String>, Vec<String>) {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let v = self.seed_vocab;
        let (mut src, mut tgt, mut links) = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..count {
            let a = rng.random_range(0..v.min(self.adjectives));
            let n1 = rng.random_range(0..v.min(self.nouns));
            let n2 = rng.random_range(0..v.min(self.nouns));
            let vb = rng.random_range(0..v.min(self.verbs));
            let (p1, p2, past) = (rng.random_bool(0.5), rng.random_bool(0.5), rng.random_bool(0.5));
            let sn = |i: usize, pl: bool| if pl { format!("noun{i}s") } else { format!("noun{i}") };
            let tn = |i: usize, pl: bool| if pl { format!("nav{i}an") } else { format!("nav{i}") };
            let sv = if past { format!("verb{vb}ed") } else { format!("verb{vb}s") };
            let tv = if past { format!("lêker{vb}î") } else { format!("lêker{vb}e") };
            src.push(format!("the adj{a} {} {sv} the {} near the river", sn(n1, p1), sn(n2, p2)));
            tgt.push(format!("{} rengîn{a} {} {tv} nêzîkî çem", tn(n1, p1), tn(n2, p2)));
            links.push("1-1 2-0 3-3 5-2 6-4 8-5".to_string());
        }
        for k in 0..short {
            let n = k % v.min(self.nouns);
            src.push(format!("the noun{n} sleeps"));
            tgt.push(format!("nav{n} radizê"));
            links.push("1-0 2-1".to_string());
        }
        (src, tgt, links)
    }

    /// Writes every input file plus `config.toml` into `dir`.
    pub fn write(&self, dir: &Path, seeds: usize, short: usize, rng_seed: u64, extra_config: &str) -> PathBuf {
        fs::create_dir_all(dir).unwrap();
        let (src, tgt, links) = self.seeds(seeds, short, rng_seed);
        let join = |v: &[String]| v.iter().map(|l| format!("{l}\n")).collect::<String>();
        fs::write(dir.join("seed.en"), join(&src)).unwrap();
        fs::write(dir.join("seed.xx"), join(&tgt)).unwrap();
        fs::write(dir.join("seed.pharaoh"), join(&links)).unwrap();
        fs::write(dir.join("lexicon.tsv"), self.lexicon()).unwrap();
        fs::write(dir.join("en.unimorph"), self.en_paradigms()).unwrap();
        fs::write(dir.join("xx.unimorph"), self.xx_paradigms()).unwrap();
        let config = format!(
            "source = \"seed.en\"\ntarget = \"seed.xx\"\nlexicon = \"lexicon.tsv\"\n\
             source_paradigms = \"en.unimorph\"\ntarget_paradigms = \"xx.unimorph\"\n\
             out_dir = \"out\"\n{extra_config}\n"
        );
        let path = dir.join("config.toml");
        fs::write(&path, config).unwrap();
        path
    }
}

pub struct Loaded {
    pub corpus: ParallelCorpus,
    pub en: ParadigmLexicon,
    pub xx: ParadigmLexicon,
    pub lexicon: BilingualLexicon,
}

/// Loads what [`ToyWorld::write`] produced, with the alignment attached.
pub fn load(dir: &Path) -> Loaded {
    let mut corpus = load_parallel(&dir.join("seed.en"), &dir.join("seed.xx")).unwrap();
    corpus.attach_links(read_pharaoh(&dir.join("seed.pharaoh")).unwrap()).unwrap();
    let en = load_paradigms(&dir.join("en.unimorph"), "en").unwrap();
    let xx = load_paradigms(&dir.join("xx.unimorph"), "xx").unwrap();
    let lexicon = load_lexicon(&dir.join("lexicon.tsv"), &en, &xx).unwrap();
    Loaded {
        corpus,
        en,
        xx,
        lexicon,
    }
}

pub fn fixture_dir(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn lexaug() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lexaug"))
}

/// Runs the binary and returns stdout, panicking with stderr on failure.
pub fn run_ok(args: &[&str]) -> String {
    let out = lexaug().args(args).output().unwrap();
    assert!(
        out.status.success(),
        "lexaug {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Every file under `dir` with its bytes, sorted by relative path.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(base: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(base, &p, out);
            } else {
                let rel = p.strip_prefix(base).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}
