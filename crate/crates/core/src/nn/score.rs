use std::collections::BTreeMap;

use super::model::LanguageModel;
use super::NnError;

/// Anything that assigns next-token probabilities to whole sentences.
pub trait SentenceScorer {
    /// Per-token NLL for each sentence followed by `eos`, every sentence
    /// scored independently from the start state. The result for a sentence
    /// of `n` tokens has `n + 1` entries.
    fn token_nlls(&self, sentences: &[Vec<u32>], eos: u32) -> Result<Vec<Vec<f64>>, NnError>;
}

const SCORE_BATCH: usize = 64;

impl SentenceScorer for LanguageModel {
    fn token_nlls(&self, sentences: &[Vec<u32>], eos: u32) -> Result<Vec<Vec<f64>>, NnError> {
        let mut by_len: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, s) in sentences.iter().enumerate() {
            by_len.entry(s.len()).or_default().push(i);
        }
        let mut out = vec![Vec::new(); sentences.len()];
        for idx in by_len.values() {
            for chunk in idx.chunks(SCORE_BATCH) {
                let inputs: Vec<Vec<u32>> =
                    chunk.iter().map(|&i| std::iter::once(eos).chain(sentences[i].iter().copied()).collect()).collect();
                let targets: Vec<Vec<u32>> =
                    chunk.iter().map(|&i| sentences[i].iter().copied().chain(std::iter::once(eos)).collect()).collect();
                let ir: Vec<&[u32]> = inputs.iter().map(Vec::as_slice).collect();
                let tr: Vec<&[u32]> = targets.iter().map(Vec::as_slice).collect();
                for (&i, nll) in chunk.iter().zip(self.token_nll(&ir, &tr)?) {
                    out[i] = nll;
                }
            }
        }
        Ok(out)
    }
}

/// Add-one smoothed token frequencies, with one `eos` counted per sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct UnigramModel {
    pub log_probs: Vec<f64>,
}

impl UnigramModel {
    pub fn fit(sentences: &[Vec<u32>], eos: u32, vocab_size: usize) -> Result<Self, NnError> {
        let mut counts = vec![1.0f64; vocab_size];
        for s in sentences {
            for &t in s.iter().chain(std::iter::once(&eos)) {
                let c = counts.get_mut(t as usize).ok_or(NnError::TokenOutOfRange { id: t, vocab: vocab_size })?;
                *c += 1.0;
            }
        }
        let total: f64 = counts.iter().sum();
        Ok(UnigramModel { log_probs: counts.iter().map(|c| (c / total).ln()).collect() })
    }
}

impl SentenceScorer for UnigramModel {
    fn token_nlls(&self, sentences: &[Vec<u32>], eos: u32) -> Result<Vec<Vec<f64>>, NnError> {
        let v = self.log_probs.len();
        sentences
            .iter()
            .map(|s| {
                s.iter()
                    .chain(std::iter::once(&eos))
                    .map(|&t| self.log_probs.get(t as usize).map(|lp| -lp).ok_or(NnError::TokenOutOfRange { id: t, vocab: v }))
                    .collect()
            })
            .collect()
    }
}

/// `exp(total NLL / total predicted tokens)`, EOS included.
pub fn perplexity(scorer: &dyn SentenceScorer, sentences: &[Vec<u32>], eos: u32) -> Result<f64, NnError> {
    let nlls = scorer.token_nlls(sentences, eos)?;
    let n: usize = nlls.iter().map(Vec::len).sum();
    if n == 0 {
        return Err(NnError::EmptyBatch);
    }
    let total: f64 = nlls.iter().flatten().sum();
    Ok((total / n as f64).exp())
}
