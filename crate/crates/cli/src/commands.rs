//! Pipeline stages. Each stage reads its inputs from the config and from
//! files written by earlier stages in `out_dir`, so running the stages one
//! by one gives the same files as `build`.

use std::fs;
use std::path::{Path, PathBuf};

use lexaug::aligner::{read_pharaoh, write_pharaoh, Aligner, PrecomputedAligner, StatisticalAligner};
use lexaug::assembler::{
    emit_dataset, generate_tier_pools, select_tiers, stats, tier_label, tier_slice, write_manifest, Tagging,
    TierMode, TierStats,
};
use lexaug::augmentor::{read_pool, write_pool, Generator, SyntheticPair};
use lexaug::corpus::{filter_seed_eligible, load_parallel, load_parallel_tsv, read_lines, tokenize, ParallelCorpus};
use lexaug::lexicon::load_lexicon;
use lexaug::lm_filter::{
    read_scored, score_pool, train_lm, write_scored, LanguageModel, NGramLM, PairScorer, ScoredSide,
};
use lexaug::metrics::{corpus_bleu, BleuResult};
use lexaug::morphology::load_paradigms;
use lexaug::{Error, Result};

use crate::config::{RunConfig, Seed};

pub const ALIGNMENT: &str = "alignment.pharaoh";
pub const LM_TARGET: &str = "lm.tgt.arpa";
pub const LM_SOURCE: &str = "lm.src.arpa";
pub const SELECTED: &str = "selected.tsv";

pub fn pool_file(i: usize) -> String {
    format!("pool.{i}.tsv")
}

fn out(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.out_dir.join(name)
}

fn ensure_out_dir(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::Io {
        path: cfg.out_dir.clone(),
        source: e,
    })
}

fn require(path: &Path, stage: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{} not found; run `lexaug {stage}` first",
            path.display()
        )))
    }
}

pub fn load_seed(cfg: &RunConfig) -> Result<ParallelCorpus> {
    let mut corpus = match &cfg.seed {
        Seed::Files { source, target } => load_parallel(source, target)?,
        Seed::Tsv(p) => load_parallel_tsv(p)?,
    };
    if let Some(l) = &cfg.source_lang {
        corpus.source_lang = l.clone();
    }
    if let Some(l) = &cfg.target_lang {
        corpus.target_lang = l.clone();
    }
    if !corpus.blank_lines.is_empty() {
        log::warn!("skipped {} seed lines with an empty side", corpus.blank_lines.len());
    }
    Ok(corpus)
}

fn load_tokenized(path: &Path) -> Result<Vec<Vec<String>>> {
    Ok(read_lines(path)?
        .iter()
        .map(|l| tokenize(l).into_iter().map(|t| t.surface).collect::<Vec<_>>())
        .filter(|s| !s.is_empty())
        .collect())
}

fn pool_count(cfg: &RunConfig) -> usize {
    match cfg.pool.mode {
        TierMode::Incremental => cfg.tiers.sizes.len(),
        TierMode::Global => 1,
    }
}

/// Word-aligns the seed corpus and writes `alignment.pharaoh`.
pub fn cmd_align(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    ensure_out_dir(cfg)?;
    let corpus = load_seed(cfg)?;
    let links = match &cfg.alignment {
        Some(p) => PrecomputedAligner { links: read_pharaoh(p)? }.align(&corpus)?,
        None => StatisticalAligner::new(cfg.aligner.clone()).align(&corpus)?,
    };
    let path = out(cfg, ALIGNMENT);
    write_pharaoh(&path, &links)?;
    Ok(vec![path])
}

/// Trains the language model(s) the scored side needs.
pub fn cmd_train_lm(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    ensure_out_dir(cfg)?;
    let mut written = Vec::new();
    let mut seed = None;
    let mut seed_corpus = || -> Result<ParallelCorpus> {
        if seed.is_none() {
            seed = Some(load_seed(cfg)?);
        }
        Ok(seed.clone().unwrap())
    };
    if matches!(cfg.lm_side, ScoredSide::Target | ScoredSide::Sum) {
        let data = match &cfg.monolingual {
            Some(p) => load_tokenized(p)?,
            None => seed_corpus()?.target_sentences(),
        };
        let path = out(cfg, LM_TARGET);
        train_lm(&data, &cfg.lm)?.write_arpa(&path)?;
        written.push(path);
    }
    if matches!(cfg.lm_side, ScoredSide::Source | ScoredSide::Sum) {
        let data = match &cfg.source_monolingual {
            Some(p) => load_tokenized(p)?,
            None => seed_corpus()?.source_sentences(),
        };
        let path = out(cfg, LM_SOURCE);
        train_lm(&data, &cfg.lm)?.write_arpa(&path)?;
        written.push(path);
    }
    Ok(written)
}

/// Generates the candidate pools, one per tier increment.
pub fn cmd_augment(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    ensure_out_dir(cfg)?;
    let alignment = out(cfg, ALIGNMENT);
    require(&alignment, "align")?;
    let mut corpus = load_seed(cfg)?;
    corpus.attach_links(read_pharaoh(&alignment)?)?;
    let eligible = filter_seed_eligible(&corpus, cfg.min_len);
    log::info!(
        "{} of {} seed pairs have at least {} source tokens",
        eligible.len(),
        corpus.len(),
        cfg.min_len
    );
    let src_par = load_paradigms(&cfg.source_paradigms, &corpus.source_lang)?;
    let tgt_par = load_paradigms(&cfg.target_paradigms, &corpus.target_lang)?;
    let lexicon = load_lexicon(&cfg.lexicon, &src_par, &tgt_par)?;
    log::info!("lexicon: {} entries ({:?})", lexicon.len(), lexicon.report);
    let generator = Generator::new(&eligible, &lexicon, &src_par, &tgt_par, cfg.augment.clone())?;
    let pools = generate_tier_pools(&generator, &cfg.tiers, &cfg.pool)?;
    let mut written = Vec::new();
    for (i, pool) in pools.iter().enumerate() {
        let path = out(cfg, &pool_file(i));
        write_pool(&path, pool)?;
        written.push(path);
    }
    Ok(written)
}

/// Scores the pools and writes the ordered selection.
pub fn cmd_filter(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let load = |name: &str| -> Result<Option<NGramLM>> {
        let p = out(cfg, name);
        require(&p, "train-lm")?;
        NGramLM::read_arpa(&p).map(Some)
    };
    let (src_lm, tgt_lm) = match cfg.lm_side {
        ScoredSide::Target => (None, load(LM_TARGET)?),
        ScoredSide::Source => (load(LM_SOURCE)?, None),
        ScoredSide::Sum => (load(LM_SOURCE)?, load(LM_TARGET)?),
    };
    let scorer = PairScorer {
        side: cfg.lm_side,
        source_lm: src_lm.as_ref().map(|l| l as &dyn LanguageModel),
        target_lm: tgt_lm.as_ref().map(|l| l as &dyn LanguageModel),
    };
    let mut scored = Vec::new();
    for i in 0..pool_count(cfg) {
        let p = out(cfg, &pool_file(i));
        require(&p, "augment")?;
        scored.push(score_pool(&read_pool(&p)?, &scorer)?);
    }
    let selected = select_tiers(scored, &cfg.tiers, cfg.pool.mode, cfg.selection, cfg.rng_seed)?;
    let path = out(cfg, SELECTED);
    write_scored(&path, &selected)?;
    Ok(vec![path])
}

/// Writes the untagged baseline, every tagged tier and the manifest.
pub fn cmd_emit(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let sel_path = out(cfg, SELECTED);
    require(&sel_path, "filter")?;
    let selected: Vec<SyntheticPair> = read_scored(&sel_path)?.into_iter().map(|s| s.pair).collect();
    if selected.len() < cfg.tiers.largest() {
        return Err(Error::Structural(format!(
            "{} holds {} pairs but the largest tier is {}",
            sel_path.display(),
            selected.len(),
            cfg.tiers.largest()
        )));
    }
    let seed = load_seed(cfg)?;
    let interleave = cfg.interleave.then_some(cfg.rng_seed);
    let mut entries = emit_dataset(&seed, &[], &cfg.tiers, &cfg.out_dir, Tagging::Untagged, None)?;
    for i in 0..cfg.tiers.sizes.len() {
        let tier = tier_slice(&selected, &cfg.tiers, i);
        entries.extend(emit_dataset(&seed, tier, &cfg.tiers, &cfg.out_dir, Tagging::Tagged, interleave)?);
    }
    let mut written: Vec<PathBuf> = entries.iter().map(|e| cfg.out_dir.join(&e.path)).collect();
    written.push(write_manifest(&cfg.out_dir, &entries, cfg.rng_seed)?);
    Ok(written)
}

/// align, train-lm, augment, filter and emit in sequence.
pub fn cmd_build(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let mut written = cmd_align(cfg)?;
    written.extend(cmd_train_lm(cfg)?);
    written.extend(cmd_augment(cfg)?);
    written.extend(cmd_filter(cfg)?);
    written.extend(cmd_emit(cfg)?);
    Ok(written)
}

/// Per-tier statistics: a `0K` row for the seed, then one row per tier.
pub fn cmd_stats(cfg: &RunConfig) -> Result<Vec<(String, TierStats)>> {
    let sel_path = out(cfg, SELECTED);
    require(&sel_path, "filter")?;
    let selected = read_scored(&sel_path)?;
    let seed = load_seed(cfg)?;
    let mut rows = vec![(tier_label(0), stats(&seed, &[], None))];
    for i in 0..cfg.tiers.sizes.len() {
        let tier = tier_slice(&selected, &cfg.tiers, i);
        let pairs: Vec<SyntheticPair> = tier.iter().map(|s| s.pair.clone()).collect();
        let ppls: Vec<f64> = tier.iter().map(|s| s.ppl).collect();
        rows.push((tier_label(cfg.tiers.sizes[i]), stats(&seed, &pairs, Some(&ppls))));
    }
    Ok(rows)
}

/// BLEU of whitespace-tokenized hypothesis lines against reference lines.
pub fn cmd_bleu(hyp: &Path, reference: &Path, smooth: bool) -> Result<BleuResult> {
    let split = |p: &Path| -> Result<Vec<Vec<String>>> {
        Ok(read_lines(p)?
            .iter()
            .map(|l| l.split_whitespace().map(str::to_string).collect())
            .collect())
    };
    corpus_bleu(&split(hyp)?, &split(reference)?, smooth)
}
