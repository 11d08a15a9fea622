//! On-disk corpus layout. Every file is UTF-8 with `\n` line ends:
//!
//! - `{config}.{split}.txt`: one sentence per line, tokens separated by spaces
//! - `{config}.{split}.templates.txt`: the template id of each line above
//! - `{config}.{split}.meta.json`: counts, length histogram and seed
//! - `{config}.judgment_{kind}.txt`: grammatical and ungrammatical sides on alternating lines
//! - `{config}.judgment_{kind}.meta.json`
//! - `{config}.lexicon.tsv`: the lexicon file format

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::judgment::{JudgmentKind, JudgmentPair, JudgmentSet};
use super::splits::{CorpusSplit, SentenceRecord, SplitName};
use super::CorpusError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitMeta {
    pub config_id: String,
    pub split: SplitName,
    pub seed: u64,
    pub count: usize,
    pub length_histogram: BTreeMap<usize, usize>,
    pub distinct_templates: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgmentMeta {
    pub config_id: String,
    pub kind: JudgmentKind,
    pub seed: u64,
    pub count: usize,
    pub short_of_target: bool,
    /// Index of the edited token in each pair.
    pub positions: Vec<usize>,
}

pub fn split_path(dir: &Path, config_id: &str, split: SplitName) -> PathBuf {
    dir.join(format!("{config_id}.{split}.txt"))
}

pub fn judgment_path(dir: &Path, config_id: &str, kind: JudgmentKind) -> PathBuf {
    dir.join(format!("{config_id}.judgment_{kind}.txt"))
}

pub fn lexicon_path(dir: &Path, config_id: &str) -> PathBuf {
    dir.join(format!("{config_id}.lexicon.tsv"))
}

fn meta_path(text_path: &Path) -> PathBuf {
    text_path.with_extension("meta.json")
}

fn templates_path(text_path: &Path) -> PathBuf {
    text_path.with_extension("templates.txt")
}

fn lines<'a>(items: impl Iterator<Item = &'a str>) -> String {
    let mut s = String::new();
    for l in items {
        s.push_str(l);
        s.push('\n');
    }
    s
}

/// Writes the sentence, template and meta files; returns the sentence file path.
pub fn write_split(dir: &Path, split: &CorpusSplit) -> Result<PathBuf, CorpusError> {
    fs::create_dir_all(dir)?;
    let path = split_path(dir, &split.config_id, split.name);
    let texts: Vec<String> = split.records.iter().map(SentenceRecord::text).collect();
    fs::write(&path, lines(texts.iter().map(String::as_str)))?;
    fs::write(templates_path(&path), lines(split.records.iter().map(|r| r.template_id.as_str())))?;
    let distinct: std::collections::BTreeSet<&str> = split.records.iter().map(|r| r.template_id.as_str()).collect();
    let meta = SplitMeta {
        config_id: split.config_id.clone(),
        split: split.name,
        seed: split.seed,
        count: split.len(),
        length_histogram: split.length_histogram(),
        distinct_templates: distinct.len(),
    };
    fs::write(meta_path(&path), serde_json::to_string_pretty(&meta).expect("meta serializes") + "\n")?;
    Ok(path)
}

fn read_lines(path: &Path) -> Result<Vec<String>, CorpusError> {
    Ok(fs::read_to_string(path)?.lines().map(String::from).collect())
}

fn parse_meta<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CorpusError> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CorpusError::Format { path: path.to_path_buf(), msg: e.to_string() })
}

pub fn read_split(dir: &Path, config_id: &str, split: SplitName) -> Result<CorpusSplit, CorpusError> {
    let path = split_path(dir, config_id, split);
    let sentences = read_lines(&path)?;
    let templates = read_lines(&templates_path(&path))?;
    if templates.len() != sentences.len() {
        return Err(CorpusError::Format {
            path: templates_path(&path),
            msg: format!("{} template ids for {} sentences", templates.len(), sentences.len()),
        });
    }
    let meta: SplitMeta = parse_meta(&meta_path(&path))?;
    let records = sentences
        .into_iter()
        .zip(templates)
        .map(|(s, t)| SentenceRecord {
            tokens: s.split(' ').map(String::from).collect(),
            config_id: config_id.to_string(),
            template_id: t,
            split,
        })
        .collect();
    Ok(CorpusSplit { name: split, config_id: config_id.to_string(), seed: meta.seed, records })
}

/// Reads only the sentences of a split file.
pub fn read_sentences(path: &Path) -> Result<Vec<Vec<String>>, CorpusError> {
    Ok(read_lines(path)?.into_iter().map(|l| l.split(' ').map(String::from).collect()).collect())
}

pub fn write_judgments(dir: &Path, config_id: &str, set: &JudgmentSet, seed: u64) -> Result<PathBuf, CorpusError> {
    fs::create_dir_all(dir)?;
    let path = judgment_path(dir, config_id, set.kind);
    let mut text = String::new();
    for p in &set.pairs {
        text.push_str(&p.grammatical.text());
        text.push('\n');
        text.push_str(&p.ungrammatical.text());
        text.push('\n');
    }
    fs::write(&path, text)?;
    let meta = JudgmentMeta {
        config_id: config_id.to_string(),
        kind: set.kind,
        seed,
        count: set.pairs.len(),
        short_of_target: set.short_of_target,
        positions: set.pairs.iter().map(|p| p.position).collect(),
    };
    fs::write(meta_path(&path), serde_json::to_string_pretty(&meta).expect("meta serializes") + "\n")?;
    Ok(path)
}

pub fn read_judgments(dir: &Path, config_id: &str, kind: JudgmentKind) -> Result<JudgmentSet, CorpusError> {
    let path = judgment_path(dir, config_id, kind);
    let ls = read_sentences(&path)?;
    if ls.len() % 2 != 0 {
        return Err(CorpusError::Format { path, msg: "odd number of lines".into() });
    }
    let meta: JudgmentMeta = parse_meta(&meta_path(&path))?;
    let record = |tokens: Vec<String>| SentenceRecord {
        tokens,
        config_id: config_id.to_string(),
        template_id: String::new(),
        split: SplitName::Medium,
    };
    let mut pairs = Vec::with_capacity(ls.len() / 2);
    let mut it = ls.into_iter();
    let mut i = 0;
    while let (Some(good), Some(bad)) = (it.next(), it.next()) {
        let position = meta.positions.get(i).copied().unwrap_or_else(|| {
            good.iter().zip(&bad).position(|(a, b)| a != b).unwrap_or(0)
        });
        pairs.push(JudgmentPair { grammatical: record(good), ungrammatical: record(bad), kind, position });
        i += 1;
    }
    Ok(JudgmentSet { kind, pairs, short_of_target: meta.short_of_target })
}
