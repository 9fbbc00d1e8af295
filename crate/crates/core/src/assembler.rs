//! Nested synthetic tiers, clean/noisy tagging and dataset emission.
//!
//! Tiers are built as prefixes of one ordered list of selected pairs, so
//! `tier(a) ⊆ tier(b)` for `a < b` holds by construction. In incremental
//! mode each increment is selected from its own freshly generated pool;
//! in global mode a single pool is ranked once and cut at every size.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::augmentor::{Generator, SyntheticPair};
use crate::corpus::ParallelCorpus;
use crate::error::{Error, Result};
use crate::lm_filter::{score_pool, select, PairScorer, ScoredPair, Selection};

pub const DEFAULT_TIERS: [usize; 5] = [5000, 10000, 50000, 100000, 200000];
pub const MANIFEST: &str = "manifest";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TierSpec {
    pub sizes: Vec<usize>,
    pub clean_tag: String,
    pub noisy_tag: String,
}

impl Default for TierSpec {
    fn default() -> Self {
        TierSpec {
            sizes: DEFAULT_TIERS.to_vec(),
            clean_tag: "<clean>".into(),
            noisy_tag: "<noisy>".into(),
        }
    }
}

impl TierSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(Error::Config("at least one tier size is required".into()));
        }
        if self.sizes[0] == 0 {
            return Err(Error::Config("tier sizes must be positive".into()));
        }
        if let Some(w) = self.sizes.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "tier sizes must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        for (name, tag) in [("clean", &self.clean_tag), ("noisy", &self.noisy_tag)] {
            if tag.is_empty() || tag.chars().any(char::is_whitespace) {
                return Err(Error::Config(format!(
                    "{name} tag must be non-empty without whitespace, got {tag:?}"
                )));
            }
        }
        Ok(())
    }

    /// Tier sizes as increments over the previous tier.
    pub fn deltas(&self) -> Vec<usize> {
        let mut prev = 0;
        self.sizes
            .iter()
            .map(|&s| {
                let d = s - prev;
                prev = s;
                d
            })
            .collect()
    }

    pub fn largest(&self) -> usize {
        self.sizes.last().copied().unwrap_or(0)
    }
}

/// Directory name for a tier: `5K` for multiples of 1000, the plain number otherwise.
pub fn tier_label(size: usize) -> String {
    if size == 0 {
        "0K".into()
    } else if size % 1000 == 0 {
        format!("{}K", size / 1000)
    } else {
        size.to_string()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TierMode {
    /// A fresh pool per increment.
    #[default]
    Incremental,
    /// One pool ranked once.
    Global,
}

impl FromStr for TierMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "incremental" => Ok(Self::Incremental),
            "global" => Ok(Self::Global),
            _ => Err(format!("unknown tier mode {s:?} (expected incremental or global)")),
        }
    }
}

impl fmt::Display for TierMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Incremental => "incremental",
            Self::Global => "global",
        })
    }
}

/// How large the candidate pools are.
#[derive(Clone, Debug, PartialEq)]
pub struct PoolPlan {
    pub mode: TierMode,
    /// Fixed attempts per seed; `None` sizes it from the requested count.
    pub per_seed: Option<usize>,
    /// Candidates wanted per selected pair when `per_seed` is automatic.
    pub oversample: f64,
    /// How many times `per_seed` may double when a pool comes up short.
    pub max_doublings: usize,
}

impl Default for PoolPlan {
    fn default() -> Self {
        PoolPlan {
            mode: TierMode::Incremental,
            per_seed: None,
            oversample: 2.0,
            max_doublings: 8,
        }
    }
}

impl PoolPlan {
    pub fn validate(&self) -> Result<()> {
        if !(self.oversample >= 1.0 && self.oversample.is_finite()) {
            return Err(Error::Config(format!(
                "oversample must be a finite number >= 1, got {}",
                self.oversample
            )));
        }
        if self.per_seed == Some(0) {
            return Err(Error::Config("per_seed must be positive".into()));
        }
        Ok(())
    }
}

/// Generates one pool per increment (incremental mode) or one pool for the
/// largest tier (global mode). Pools never share a pair with an earlier pool.
///
/// Pool `i` is drawn from generation round `i`. With an automatic `per_seed`
/// the first attempt asks each productive seed for
/// `ceil(need * oversample / seeds)` pairs; whenever fewer than `need` new
/// pairs come back the request doubles on the same round, up to
/// `max_doublings` times or until the output stops growing.
pub fn generate_tier_pools(
    generator: &Generator<'_>,
    spec: &TierSpec,
    plan: &PoolPlan,
) -> Result<Vec<Vec<SyntheticPair>>> {
    spec.validate()?;
    plan.validate()?;
    let needs = match plan.mode {
        TierMode::Incremental => spec.deltas(),
        TierMode::Global => vec![spec.largest()],
    };
    let seeds = generator.productive_seeds();
    if seeds == 0 {
        return Err(Error::Capacity {
            requested: needs[0],
            achieved: 0,
        });
    }
    let mut earlier: HashSet<(String, String)> = HashSet::new();
    let mut pools = Vec::with_capacity(needs.len());
    let mut achieved = 0;
    for (round, &need) in needs.iter().enumerate() {
        let mut per_seed = plan
            .per_seed
            .unwrap_or_else(|| ((need as f64 * plan.oversample) / seeds as f64).ceil() as usize)
            .max(1);
        let mut last_len = None;
        let mut fresh;
        let mut doublings = 0;
        loop {
            fresh = generator
                .generate(round as u64, per_seed)
                .into_iter()
                .filter(|p| !earlier.contains(&(p.source_text(), p.target_text())))
                .collect::<Vec<_>>();
            if fresh.len() >= need || doublings == plan.max_doublings || last_len == Some(fresh.len()) {
                break;
            }
            log::debug!(
                "round {round}: {} new pairs for {need} requested, doubling per_seed to {}",
                fresh.len(),
                per_seed * 2
            );
            last_len = Some(fresh.len());
            per_seed *= 2;
            doublings += 1;
        }
        if fresh.len() < need {
            return Err(Error::Capacity {
                requested: achieved + need,
                achieved: achieved + fresh.len(),
            });
        }
        achieved += need;
        earlier.extend(fresh.iter().map(|p| (p.source_text(), p.target_text())));
        pools.push(fresh);
    }
    Ok(pools)
}

/// Draws `k` of `n` positions for a random-mode cut, in draw order.
fn random_order(n: usize, k: usize, rng_seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    index::sample(&mut rng, n, k).into_vec()
}

/// Turns scored pools into the ordered list of selected pairs: the first
/// `sizes[i]` entries form tier `i`.
///
/// Incremental mode selects `deltas[i]` from pool `i` (random selections use
/// `rng_seed + i`). Global mode orders the single pool by perplexity, or by a
/// random draw, and takes the first `largest` entries.
pub fn select_tiers(
    pools: Vec<Vec<ScoredPair>>,
    spec: &TierSpec,
    mode: TierMode,
    selection: Selection,
    rng_seed: u64,
) -> Result<Vec<ScoredPair>> {
    spec.validate()?;
    let needs = match mode {
        TierMode::Incremental => spec.deltas(),
        TierMode::Global => vec![spec.largest()],
    };
    if pools.len() != needs.len() {
        return Err(Error::Structural(format!(
            "{} pools for {} tier increments",
            pools.len(),
            needs.len()
        )));
    }
    let mut out = Vec::with_capacity(spec.largest());
    for (i, (pool, need)) in pools.into_iter().zip(needs).enumerate() {
        if pool.len() < need {
            return Err(Error::Capacity {
                requested: out.len() + need,
                achieved: out.len() + pool.len(),
            });
        }
        let seed = rng_seed.wrapping_add(i as u64);
        match (mode, selection) {
            (TierMode::Global, Selection::Random) => {
                let order = random_order(pool.len(), need, seed);
                let mut slots: Vec<Option<ScoredPair>> = pool.into_iter().map(Some).collect();
                out.extend(order.into_iter().map(|j| slots[j].take().unwrap()));
            }
            _ => out.extend(select(pool, need, selection, seed)?),
        }
    }
    Ok(out)
}

/// Generates, scores and selects; the result holds the largest tier in
/// tier order.
pub fn build_tiers(
    generator: &Generator<'_>,
    scorer: &PairScorer<'_>,
    spec: &TierSpec,
    plan: &PoolPlan,
    selection: Selection,
    rng_seed: u64,
) -> Result<Vec<ScoredPair>> {
    let pools = generate_tier_pools(generator, spec, plan)?;
    let scored = pools
        .iter()
        .map(|p| score_pool(p, scorer))
        .collect::<Result<Vec<_>>>()?;
    select_tiers(scored, spec, plan.mode, selection, rng_seed)
}

/// Tier `i` as a slice of the ordered selection.
pub fn tier_slice<'a, T>(selected: &'a [T], spec: &TierSpec, i: usize) -> &'a [T] {
    &selected[..spec.sizes[i].min(selected.len())]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tagging {
    Tagged,
    Untagged,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub lines: usize,
    pub sha256: String,
}

fn write_lines(path: &Path, lines: &[String]) -> Result<ManifestEntry> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut bytes = Vec::with_capacity(lines.iter().map(|l| l.len() + 1).sum());
    for l in lines {
        bytes.extend_from_slice(l.as_bytes());
        bytes.push(b'\n');
    }
    fs::write(path, &bytes).map_err(|e| Error::io(path, e))?;
    Ok(ManifestEntry {
        path: path.to_string_lossy().into_owned(),
        lines: lines.len(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

/// Hash-keyed order for optional interleaving of real and synthetic lines.
fn interleave_key(rng_seed: u64, src: &str, tgt: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(rng_seed.to_le_bytes());
    h.update(src.as_bytes());
    h.update([0]);
    h.update(tgt.as_bytes());
    h.finalize().into()
}

/// Writes `train.src` and `train.tgt` under `out_dir/<label>`, where the label
/// is `0K` for an untagged seed-only emission and the tier size otherwise.
///
/// Tagged lines start with the clean or noisy tag and a space. The seed block
/// comes first unless `interleave` is set, in which case all pairs are
/// ordered by a SHA-256 key of `rng_seed` and the untagged line pair.
pub fn emit_dataset(
    seed: &ParallelCorpus,
    tier: &[SyntheticPair],
    spec: &TierSpec,
    out_dir: &Path,
    tagging: Tagging,
    interleave: Option<u64>,
) -> Result<Vec<ManifestEntry>> {
    let label = tier_label(tier.len());
    let mut rows: Vec<(String, String)> = Vec::with_capacity(seed.len() + tier.len());
    let tag = |t: &str, line: String| match tagging {
        Tagging::Tagged => format!("{t} {line}"),
        Tagging::Untagged => line,
    };
    let mut keyed: Vec<([u8; 32], usize, String, String)> = Vec::new();
    let real = seed.pairs.iter().map(|p| (p.source_text(), p.target_text(), &spec.clean_tag));
    let synth = tier.iter().map(|p| (p.source_text(), p.target_text(), &spec.noisy_tag));
    for (i, (s, t, tg)) in real.chain(synth).enumerate() {
        match interleave {
            Some(rng_seed) => {
                keyed.push((interleave_key(rng_seed, &s, &t), i, tag(tg, s), tag(tg, t)));
            }
            None => rows.push((tag(tg, s), tag(tg, t))),
        }
    }
    if interleave.is_some() {
        keyed.sort();
        rows.extend(keyed.into_iter().map(|(_, _, s, t)| (s, t)));
    }
    let dir = out_dir.join(&label);
    let (src, tgt): (Vec<String>, Vec<String>) = rows.into_iter().unzip();
    let mut entries = Vec::with_capacity(2);
    for (name, lines) in [("train.src", &src), ("train.tgt", &tgt)] {
        let mut e = write_lines(&dir.join(name), lines)?;
        e.path = format!("{label}/{name}");
        entries.push(e);
    }
    Ok(entries)
}

/// Writes `out_dir/manifest`: a header with the RNG seed, then one
/// `path<TAB>lines<TAB>sha256` record per file, sorted by path.
pub fn write_manifest(out_dir: &Path, entries: &[ManifestEntry], rng_seed: u64) -> Result<PathBuf> {
    let mut sorted: Vec<&ManifestEntry> = entries.iter().collect();
    sorted.sort_by(|a, b| a.path.cmp(&b.path));
    let path = out_dir.join(MANIFEST);
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(&path, e);
    writeln!(w, "# rng_seed={rng_seed}").map_err(io)?;
    for e in sorted {
        writeln!(w, "{}\t{}\t{}", e.path, e.lines, e.sha256).map_err(io)?;
    }
    w.flush().map_err(io)?;
    Ok(path)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TierStats {
    pub size: usize,
    pub unique_seeds: usize,
    pub seed_source_types: usize,
    pub seed_target_types: usize,
    pub new_source_types: usize,
    pub new_target_types: usize,
    pub mean_ppl: Option<f64>,
    pub median_ppl: Option<f64>,
}

impl fmt::Display for TierStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
        write!(
            f,
            "size={}\tseeds={}\tseed_src_types={}\tseed_tgt_types={}\tnew_src_types={}\tnew_tgt_types={}\tmean_ppl={}\tmedian_ppl={}",
            self.size,
            self.unique_seeds,
            self.seed_source_types,
            self.seed_target_types,
            self.new_source_types,
            self.new_target_types,
            opt(self.mean_ppl),
            opt(self.median_ppl)
        )
    }
}

/// Type accounting for a tier against the seed corpus. Types are distinct
/// surface tokens. Perplexities are summarized when given.
pub fn stats(seed: &ParallelCorpus, tier: &[SyntheticPair], ppls: Option<&[f64]>) -> TierStats {
    let seed_src: HashSet<&str> = seed.pairs.iter().flat_map(|p| p.source.iter().map(|t| t.surface.as_str())).collect();
    let seed_tgt: HashSet<&str> = seed.pairs.iter().flat_map(|p| p.target.iter().map(|t| t.surface.as_str())).collect();
    let new_src: HashSet<&str> = tier
        .iter()
        .flat_map(|p| p.source.iter().map(String::as_str))
        .filter(|w| !seed_src.contains(w))
        .collect();
    let new_tgt: HashSet<&str> = tier
        .iter()
        .flat_map(|p| p.target.iter().map(String::as_str))
        .filter(|w| !seed_tgt.contains(w))
        .collect();
    let seeds: BTreeSet<usize> = tier.iter().map(|p| p.seed_id).collect();
    let (mean_ppl, median_ppl) = match ppls {
        Some(v) if !v.is_empty() => {
            let mut sorted = v.to_vec();
            sorted.sort_by(f64::total_cmp);
            let n = sorted.len();
            let median = if n % 2 == 1 {
                sorted[n / 2]
            } else {
                (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
            };
            (Some(v.iter().sum::<f64>() / n as f64), Some(median))
        }
        _ => (None, None),
    };
    TierStats {
        size: tier.len(),
        unique_seeds: seeds.len(),
        seed_source_types: seed_src.len(),
        seed_target_types: seed_tgt.len(),
        new_source_types: new_src.len(),
        new_target_types: new_tgt.len(),
        mean_ppl,
        median_ppl,
    }
}
