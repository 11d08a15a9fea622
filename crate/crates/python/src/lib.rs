//! Python bindings: languages, parsing, corpus sampling, checkpoint scoring
//! and the correlation helpers.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use wordorder_core::corpus::{build_splits, SplitSizes};
use wordorder_core::eval;
use wordorder_core::grammar::Grammar;
use wordorder_core::language::{enumerate_configs, Language, VocabSpec, WordOrderConfig};
use wordorder_core::nn::{load_checkpoint, perplexity, Arch, LanguageModel, ModelSpec};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// All 96 consistent configuration ids, in enumeration order.
#[pyfunction]
fn configs() -> Vec<String> {
    enumerate_configs().iter().map(WordOrderConfig::id).collect()
}

#[pyfunction]
fn pearson(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    eval::pearson(&x, &y).map_err(value_err)
}

/// `(r, p)` for the two-sided test of zero correlation.
#[pyfunction]
fn correlation_test(x: Vec<f64>, y: Vec<f64>) -> PyResult<(f64, f64)> {
    let r = eval::pearson(&x, &y).map_err(value_err)?;
    Ok((r, eval::pearson_p_value(r, x.len()).map_err(value_err)?))
}

#[pyfunction]
#[pyo3(signature = (arch, vocab_size = 500))]
fn param_count(arch: &str, vocab_size: usize) -> PyResult<usize> {
    let arch: Arch = arch.parse().map_err(value_err)?;
    Ok(ModelSpec::default_for(arch, vocab_size).param_count())
}

/// One artificial language: its lexicon, vocabulary and parser.
#[pyclass(name = "Language", frozen)]
struct PyLanguage {
    lang: Language,
    grammar: Grammar,
}

#[pymethods]
impl PyLanguage {
    #[new]
    fn new(id: &str) -> PyResult<Self> {
        let config: WordOrderConfig = id.parse().map_err(value_err)?;
        let lang = Language::build(config, &VocabSpec::default()).map_err(value_err)?;
        let grammar = lang.grammar().map_err(runtime_err)?;
        Ok(PyLanguage { lang, grammar })
    }

    #[getter]
    fn id(&self) -> String {
        self.lang.id()
    }

    #[getter]
    fn base_order(&self) -> String {
        self.lang.config.base_order().to_string()
    }

    #[getter]
    fn vocabulary(&self) -> Vec<String> {
        self.lang.vocabulary.tokens().to_vec()
    }

    /// `(token, category, pos)` rows.
    fn lexicon(&self) -> Vec<(String, String, String)> {
        self.lang
            .lexicon
            .entries()
            .iter()
            .map(|e| (e.token.clone(), e.category.to_string(), e.pos.name().to_string()))
            .collect()
    }

    fn is_grammatical(&self, tokens: Vec<String>) -> PyResult<bool> {
        self.grammar.is_grammatical(&tokens).map_err(value_err)
    }

    /// Rule symbols of a derivation in post-order, or `None` if the
    /// sentence does not parse.
    fn parse(&self, tokens: Vec<String>) -> PyResult<Option<Vec<String>>> {
        let d = self.grammar.parse(&tokens).map_err(value_err)?;
        Ok(d.map(|d| d.rules_postorder().iter().map(ToString::to_string).collect()))
    }

    fn encode(&self, tokens: Vec<String>) -> PyResult<Vec<u32>> {
        self.lang.vocabulary.encode(&tokens).map_err(value_err)
    }

    /// Samples train/short/medium/long splits as lists of token lists.
    #[pyo3(signature = (train = 1000, short = 100, medium = 100, long = 50, seed = 1))]
    fn sample(
        &self,
        py: Python<'_>,
        train: usize,
        short: usize,
        medium: usize,
        long: usize,
        seed: u64,
    ) -> PyResult<Vec<(String, Vec<Vec<String>>)>> {
        let sizes = SplitSizes { train, short, medium, long, long_templates: long.max(1) * 4, ..SplitSizes::default() };
        let splits = py.detach(|| build_splits(&self.lang, &sizes, seed)).map_err(runtime_err)?;
        Ok([splits.train, splits.short, splits.medium, splits.long]
            .into_iter()
            .map(|s| (s.name.to_string(), s.records.into_iter().map(|r| r.tokens).collect()))
            .collect())
    }

    fn __repr__(&self) -> String {
        format!("Language('{}', base_order='{}')", self.lang.id(), self.lang.config.base_order())
    }
}

/// A trained language model loaded from a checkpoint.
#[pyclass(name = "Model", frozen)]
struct PyModel {
    model: LanguageModel,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let (model, _) = load_checkpoint(&path).map_err(runtime_err)?;
        Ok(PyModel { model })
    }

    #[getter]
    fn arch(&self) -> String {
        self.model.spec.arch.to_string()
    }

    #[getter]
    fn param_count(&self) -> usize {
        self.model.spec.param_count()
    }

    /// Perplexity of `sentences` (token lists) under this model.
    fn perplexity(&self, py: Python<'_>, language: &PyLanguage, sentences: Vec<Vec<String>>) -> PyResult<f64> {
        let voc = &language.lang.vocabulary;
        let ids = sentences.iter().map(|s| voc.encode(s)).collect::<Result<Vec<_>, _>>().map_err(value_err)?;
        py.detach(|| perplexity(&self.model, &ids, voc.eos())).map_err(runtime_err)
    }
}

#[pymodule]
fn wordorder(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLanguage>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(configs, m)?)?;
    m.add_function(wrap_pyfunction!(pearson, m)?)?;
    m.add_function(wrap_pyfunction!(correlation_test, m)?)?;
    m.add_function(wrap_pyfunction!(param_count, m)?)?;
    Ok(())
}
