//! Run configuration: a flat TOML document of `key = value` lines.
//!
//! Relative paths are resolved against the directory holding the config file.
//! Every problem found (unknown keys, wrong types, missing required keys,
//! missing files) is collected and reported together.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use lexaug::aligner::{AlignerConfig, Symmetrization};
use lexaug::assembler::{PoolPlan, TierMode, TierSpec};
use lexaug::augmentor::{AugmentationConfig, Strategy};
use lexaug::corpus::DEFAULT_MIN_SEED_LEN;
use lexaug::lexicon::VocabularyRestriction;
use lexaug::lm_filter::{LmConfig, ScoredSide, Selection};
use lexaug::morphology::Pos;
use lexaug::{Error, Result};
use toml::{Table, Value};

/// Documented keys, with a short description each. `lexaug validate --keys`
/// prints this table.
pub const KEYS: &[(&str, &str)] = &[
    ("source", "seed source file, one sentence per line"),
    ("target", "seed target file, line-aligned with source"),
    ("tsv", "seed as one source<TAB>target file (instead of source/target)"),
    ("source_lang", "source language code (default: source file extension)"),
    ("target_lang", "target language code (default: target file extension)"),
    ("lexicon", "bilingual lexicon: src<TAB>tgt<TAB>POS[<TAB>features]"),
    ("source_paradigms", "UniMorph-style paradigms for the source language"),
    ("target_paradigms", "UniMorph-style paradigms for the target language"),
    ("monolingual", "target-side LM training text (default: seed target)"),
    ("source_monolingual", "source-side LM training text (default: seed source)"),
    ("alignment", "precomputed Pharaoh alignment; skips statistical alignment"),
    ("out_dir", "output directory"),
    ("min_len", "minimum source length of a seed sentence (default 7)"),
    ("strategy", "informed | naive (default informed)"),
    ("per_seed", "\"auto\" or attempts per seed sentence (default auto)"),
    ("oversample", "candidates per selected pair when per_seed is auto (default 2.0)"),
    ("max_doublings", "times per_seed may double on a short pool (default 8)"),
    ("max_replacements", "replacements per synthetic sentence, at most (default 2)"),
    ("eligible_pos", "replaceable parts of speech (default [\"N\", \"ADJ\", \"V\"])"),
    ("restriction", "all | first-half | consume-once (default all)"),
    ("inflect_source", "inflect the new source word (default true)"),
    ("inflect_target", "inflect the new target word (default true)"),
    ("max_retries", "extra attempts per requested sentence (default 10)"),
    ("tiers", "ascending tier sizes (default [5000, 10000, 50000, 100000, 200000])"),
    ("clean_tag", "prefix for real lines (default <clean>)"),
    ("noisy_tag", "prefix for synthetic lines (default <noisy>)"),
    ("tier_mode", "incremental | global (default incremental)"),
    ("interleave", "mix real and synthetic lines by hash order (default false)"),
    ("align_iterations", "EM iterations per direction (default 5)"),
    ("align_tension", "diagonal prior strength, 0 disables it (default 4.0)"),
    ("align_null", "allow alignment to the empty word (default true)"),
    ("align_symmetrization", "intersection | union | grow-diag (default grow-diag)"),
    ("lm_order", "n-gram order (default 3)"),
    ("lm_discount", "absolute discount in [0, 1) (default 0.75)"),
    ("lm_side", "source | target | sum (default target)"),
    ("selection", "filtered | random (default filtered)"),
    ("rng_seed", "global random seed (default 0)"),
    ("workers", "worker threads (default: all cores)"),
];

#[derive(Clone, Debug, PartialEq)]
pub enum Seed {
    Files { source: PathBuf, target: PathBuf },
    Tsv(PathBuf),
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub seed: Seed,
    pub source_lang: Option<String>,
    pub target_lang: Option<String>,
    pub lexicon: PathBuf,
    pub source_paradigms: PathBuf,
    pub target_paradigms: PathBuf,
    pub monolingual: Option<PathBuf>,
    pub source_monolingual: Option<PathBuf>,
    pub alignment: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub min_len: usize,
    pub augment: AugmentationConfig,
    pub pool: PoolPlan,
    pub tiers: TierSpec,
    pub interleave: bool,
    pub aligner: AlignerConfig,
    pub lm: LmConfig,
    pub lm_side: ScoredSide,
    pub selection: Selection,
    pub rng_seed: u64,
    pub workers: Option<usize>,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub strategy: Option<String>,
    pub mode: Option<String>,
    pub tiers: Option<String>,
    pub out: Option<PathBuf>,
}

struct Reader<'a> {
    table: &'a Table,
    base: &'a Path,
    errors: Vec<String>,
    seen: BTreeSet<&'a str>,
}

impl<'a> Reader<'a> {
    fn get(&mut self, key: &'a str) -> Option<&'a Value> {
        self.seen.insert(key);
        self.table.get(key)
    }

    fn fail(&mut self, key: &str, want: &str, v: &Value) {
        self.errors.push(format!("{key}: expected {want}, got {v}"));
    }

    fn string(&mut self, key: &'a str) -> Option<String> {
        match self.get(key)? {
            Value::String(s) => Some(s.clone()),
            v => {
                self.fail(key, "a string", v);
                None
            }
        }
    }

    fn path(&mut self, key: &'a str) -> Option<PathBuf> {
        self.string(key).map(|s| self.base.join(s))
    }

    fn required_path(&mut self, key: &'a str) -> PathBuf {
        match self.path(key) {
            Some(p) => p,
            None => {
                if !self.table.contains_key(key) {
                    self.errors.push(format!("{key}: required key is missing"));
                }
                PathBuf::new()
            }
        }
    }

    fn bool(&mut self, key: &'a str, default: bool) -> bool {
        match self.get(key) {
            None => default,
            Some(Value::Boolean(b)) => *b,
            Some(v) => {
                self.fail(key, "true or false", v);
                default
            }
        }
    }

    fn uint(&mut self, key: &'a str, default: usize) -> usize {
        match self.get(key) {
            None => default,
            Some(Value::Integer(i)) if *i >= 0 => *i as usize,
            Some(v) => {
                self.fail(key, "a non-negative integer", v);
                default
            }
        }
    }

    fn u64(&mut self, key: &'a str, default: u64) -> u64 {
        match self.get(key) {
            None => default,
            Some(Value::Integer(i)) if *i >= 0 => *i as u64,
            Some(Value::String(s)) if s.parse::<u64>().is_ok() => s.parse().unwrap(),
            Some(v) => {
                self.fail(key, "a non-negative integer", v);
                default
            }
        }
    }

    fn float(&mut self, key: &'a str, default: f64) -> f64 {
        match self.get(key) {
            None => default,
            Some(Value::Float(f)) => *f,
            Some(Value::Integer(i)) => *i as f64,
            Some(v) => {
                self.fail(key, "a number", v);
                default
            }
        }
    }

    fn parsed<T>(&mut self, key: &'a str, default: T) -> T
    where
        T: std::str::FromStr<Err = String>,
    {
        match self.get(key) {
            None => default,
            Some(Value::String(s)) => match s.parse() {
                Ok(v) => v,
                Err(e) => {
                    self.errors.push(format!("{key}: {e}"));
                    default
                }
            },
            Some(v) => {
                self.fail(key, "a string", v);
                default
            }
        }
    }
}

/// Parses `1,2,3` or `5K,10K` (K = 1000).
pub fn parse_tiers_csv(s: &str) -> std::result::Result<Vec<usize>, String> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            let (num, mult) = match t.strip_suffix(['K', 'k']) {
                Some(n) => (n, 1000),
                None => (t, 1),
            };
            num.parse::<usize>()
                .map(|n| n * mult)
                .map_err(|_| format!("bad tier size {t:?}"))
        })
        .collect()
}

impl RunConfig {
    /// Loads and validates `path`, applying `overrides` first.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::from_toml(&text, base, overrides)
    }

    pub fn from_toml(text: &str, base: &Path, overrides: &Overrides) -> Result<Self> {
        let mut table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.message().replace('\n', " ")))?;
        let mut errors = Vec::new();
        apply_overrides(&mut table, overrides, &mut errors);
        let mut r = Reader {
            table: &table,
            base,
            errors,
            seen: BTreeSet::new(),
        };

        let source = r.path("source");
        let target = r.path("target");
        let tsv = r.path("tsv");
        let seed = match (source, target, tsv) {
            (Some(s), Some(t), None) => Seed::Files { source: s, target: t },
            (None, None, Some(t)) => Seed::Tsv(t),
            (None, None, None) => {
                r.errors.push("source/target: required keys are missing (or give tsv)".into());
                Seed::Tsv(PathBuf::new())
            }
            (Some(_), None, None) | (None, Some(_), None) => {
                r.errors.push("source/target: both must be given".into());
                Seed::Tsv(PathBuf::new())
            }
            _ => {
                r.errors.push("tsv: cannot be combined with source/target".into());
                Seed::Tsv(PathBuf::new())
            }
        };
        let source_lang = r.string("source_lang");
        let target_lang = r.string("target_lang");
        let lexicon = r.required_path("lexicon");
        let source_paradigms = r.required_path("source_paradigms");
        let target_paradigms = r.required_path("target_paradigms");
        let monolingual = r.path("monolingual");
        let source_monolingual = r.path("source_monolingual");
        let alignment = r.path("alignment");
        let out_dir = r.required_path("out_dir");
        let min_len = r.uint("min_len", DEFAULT_MIN_SEED_LEN);

        let rng_seed = r.u64("rng_seed", 0);
        let d = AugmentationConfig::default();
        let strategy: Strategy = r.parsed("strategy", d.strategy);
        let per_seed = match r.get("per_seed") {
            None => None,
            Some(Value::String(s)) if s == "auto" => None,
            Some(Value::Integer(i)) if *i > 0 => Some(*i as usize),
            Some(v) => {
                r.fail("per_seed", "\"auto\" or a positive integer", v);
                None
            }
        };
        let eligible_pos = match r.get("eligible_pos") {
            None => d.eligible_pos.clone(),
            Some(Value::Array(items)) => {
                let mut out = Vec::new();
                for it in items {
                    match it.as_str().and_then(Pos::from_label) {
                        Some(p) => out.push(p),
                        None => r.errors.push(format!("eligible_pos: unknown part of speech {it}")),
                    }
                }
                out
            }
            Some(v) => {
                r.fail("eligible_pos", "an array of strings", v);
                d.eligible_pos.clone()
            }
        };
        let augment = AugmentationConfig {
            strategy,
            per_seed: per_seed.unwrap_or(d.per_seed),
            max_replacements: r.uint("max_replacements", d.max_replacements),
            eligible_pos,
            rng_seed,
            restriction: r.parsed::<VocabularyRestriction>("restriction", d.restriction),
            inflect_source: r.bool("inflect_source", d.inflect_source),
            inflect_target: r.bool("inflect_target", d.inflect_target),
            max_retries: r.uint("max_retries", d.max_retries),
        };
        if let Err(e) = augment.validate() {
            r.errors.push(e.to_string());
        }

        let pd = PoolPlan::default();
        let pool = PoolPlan {
            mode: r.parsed::<TierMode>("tier_mode", pd.mode),
            per_seed,
            oversample: r.float("oversample", pd.oversample),
            max_doublings: r.uint("max_doublings", pd.max_doublings),
        };
        if let Err(e) = pool.validate() {
            r.errors.push(e.to_string());
        }

        let td = TierSpec::default();
        let sizes = match r.get("tiers") {
            None => td.sizes.clone(),
            Some(Value::Array(items)) => {
                let mut out = Vec::new();
                for it in items {
                    match it.as_integer() {
                        Some(i) if i > 0 => out.push(i as usize),
                        _ => r.errors.push(format!("tiers: expected positive integers, got {it}")),
                    }
                }
                out
            }
            Some(Value::String(s)) => parse_tiers_csv(s).unwrap_or_else(|e| {
                r.errors.push(format!("tiers: {e}"));
                td.sizes.clone()
            }),
            Some(v) => {
                r.fail("tiers", "an array of integers", v);
                td.sizes.clone()
            }
        };
        let tiers = TierSpec {
            sizes,
            clean_tag: r.string("clean_tag").unwrap_or(td.clean_tag),
            noisy_tag: r.string("noisy_tag").unwrap_or(td.noisy_tag),
        };
        if let Err(e) = tiers.validate() {
            r.errors.push(e.to_string());
        }
        let interleave = r.bool("interleave", false);

        let ad = AlignerConfig::default();
        let aligner = AlignerConfig {
            iterations: r.uint("align_iterations", ad.iterations),
            tension: r.float("align_tension", ad.tension),
            use_null: r.bool("align_null", ad.use_null),
            symmetrization: r.parsed::<Symmetrization>("align_symmetrization", ad.symmetrization),
        };
        if aligner.iterations == 0 {
            r.errors.push("align_iterations: must be at least 1".into());
        }
        if !(aligner.tension >= 0.0 && aligner.tension.is_finite()) {
            r.errors.push(format!("align_tension: must be a finite number >= 0, got {}", aligner.tension));
        }

        let ld = LmConfig::default();
        let lm = LmConfig {
            order: r.uint("lm_order", ld.order),
            discount: r.float("lm_discount", ld.discount),
            open_vocabulary: true,
        };
        if lm.order == 0 || lm.order > lexaug::lm_filter::MAX_ORDER {
            r.errors.push(format!(
                "lm_order: must be in 1..={}, got {}",
                lexaug::lm_filter::MAX_ORDER,
                lm.order
            ));
        }
        if !(0.0..1.0).contains(&lm.discount) {
            r.errors.push(format!("lm_discount: must be in [0, 1), got {}", lm.discount));
        }
        let lm_side = r.parsed::<ScoredSide>("lm_side", ScoredSide::Target);
        let selection = r.parsed::<Selection>("selection", Selection::Filtered);
        let workers = match r.get("workers") {
            None => None,
            Some(Value::Integer(i)) if *i > 0 => Some(*i as usize),
            Some(v) => {
                r.fail("workers", "a positive integer", v);
                None
            }
        };

        let known: BTreeSet<&str> = KEYS.iter().map(|(k, _)| *k).collect();
        for key in table.keys() {
            if !known.contains(key.as_str()) {
                r.errors.push(format!("{key}: unknown key"));
            }
        }
        debug_assert!(r.seen.iter().all(|k| known.contains(k)));

        let cfg = RunConfig {
            seed,
            source_lang,
            target_lang,
            lexicon,
            source_paradigms,
            target_paradigms,
            monolingual,
            source_monolingual,
            alignment,
            out_dir,
            min_len,
            augment,
            pool,
            tiers,
            interleave,
            aligner,
            lm,
            lm_side,
            selection,
            rng_seed,
            workers,
        };
        let mut errors = r.errors;
        if errors.is_empty() {
            errors.extend(cfg.missing_files());
        }
        if errors.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Config(errors.join("; ")))
        }
    }

    /// Input files that do not exist.
    pub fn missing_files(&self) -> Vec<String> {
        let mut inputs: Vec<(&str, &Path)> = match &self.seed {
            Seed::Files { source, target } => vec![("source", source), ("target", target)],
            Seed::Tsv(p) => vec![("tsv", p)],
        };
        inputs.extend([
            ("lexicon", self.lexicon.as_path()),
            ("source_paradigms", &self.source_paradigms),
            ("target_paradigms", &self.target_paradigms),
        ]);
        for (k, p) in [
            ("monolingual", &self.monolingual),
            ("source_monolingual", &self.source_monolingual),
            ("alignment", &self.alignment),
        ] {
            if let Some(p) = p {
                inputs.push((k, p));
            }
        }
        inputs
            .into_iter()
            .filter(|(_, p)| !p.is_file())
            .map(|(k, p)| format!("{k}: file not found: {}", p.display()))
            .collect()
    }

    /// Settings as `key = value` lines, for logs and `validate`.
    pub fn describe(&self) -> String {
        let seed = match &self.seed {
            Seed::Files { source, target } => format!("source = {}\ntarget = {}", source.display(), target.display()),
            Seed::Tsv(p) => format!("tsv = {}", p.display()),
        };
        let pos: Vec<&str> = self.augment.eligible_pos.iter().map(Pos::as_str).collect();
        let per_seed = self.pool.per_seed.map_or("auto".to_string(), |n| n.to_string());
        format!(
            "{seed}\nlexicon = {}\nsource_paradigms = {}\ntarget_paradigms = {}\nout_dir = {}\n\
             min_len = {}\nstrategy = {}\nper_seed = {per_seed}\nmax_replacements = {}\n\
             eligible_pos = {}\nrestriction = {:?}\ntiers = {:?}\ntier_mode = {}\n\
             align = {} iterations, tension {}, null {}, {}\nlm = order {}, discount {}, side {}\n\
             selection = {}\nrng_seed = {}",
            self.lexicon.display(),
            self.source_paradigms.display(),
            self.target_paradigms.display(),
            self.out_dir.display(),
            self.min_len,
            self.augment.strategy,
            self.augment.max_replacements,
            pos.join(","),
            self.augment.restriction,
            self.tiers.sizes,
            self.pool.mode,
            self.aligner.iterations,
            self.aligner.tension,
            self.aligner.use_null,
            self.aligner.symmetrization,
            self.lm.order,
            self.lm.discount,
            self.lm_side,
            self.selection,
            self.rng_seed,
        )
    }
}

fn apply_overrides(table: &mut Table, o: &Overrides, errors: &mut Vec<String>) {
    if let Some(s) = o.seed {
        table.insert("rng_seed".into(), Value::String(s.to_string()));
    }
    if let Some(w) = o.workers {
        table.insert("workers".into(), Value::Integer(w as i64));
    }
    if let Some(s) = &o.strategy {
        table.insert("strategy".into(), Value::String(s.clone()));
    }
    if let Some(m) = &o.mode {
        table.insert("selection".into(), Value::String(m.clone()));
    }
    if let Some(t) = &o.tiers {
        match parse_tiers_csv(t) {
            Ok(sizes) => {
                table.insert(
                    "tiers".into(),
                    Value::Array(sizes.into_iter().map(|s| Value::Integer(s as i64)).collect()),
                );
            }
            Err(e) => errors.push(format!("--tiers: {e}")),
        }
    }
    if let Some(out) = &o.out {
        // relative to the working directory, not the config file
        let abs = std::env::current_dir().map(|d| d.join(out)).unwrap_or_else(|_| out.clone());
        table.insert("out_dir".into(), Value::String(abs.to_string_lossy().into_owned()));
    }
}
