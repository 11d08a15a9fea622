use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use crate::grammar::Grammar;

use super::splits::CorpusSplit;
use super::template::{SlotInventory, Template, TemplateOrigin};
use super::CorpusError;

/// Category and rule counts over canonical template derivations, per length.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// length → number of templates
    pub templates: BTreeMap<usize, usize>,
    /// length → category → occurrences
    pub categories: BTreeMap<usize, BTreeMap<String, usize>>,
    /// length → rule short name → applications
    pub rules: BTreeMap<usize, BTreeMap<String, usize>>,
}

impl Diagnostics {
    pub fn mean(&self, len: usize, total: usize) -> f64 {
        total as f64 / self.templates[&len] as f64
    }

    /// `length,templates,kind,name,total,mean_per_template`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("length,templates,kind,name,total,mean_per_template\n");
        for (&len, &n) in &self.templates {
            for (kind, table) in [("category", &self.categories), ("rule", &self.rules)] {
                for (name, &total) in table.get(&len).into_iter().flatten() {
                    let quoted = if name.contains(',') { format!("\"{name}\"") } else { name.clone() };
                    writeln!(out, "{len},{n},{kind},{quoted},{total},{:.6}", self.mean(len, total)).unwrap();
                }
            }
        }
        out
    }
}

/// Counts lexical categories and rule applications in the canonical
/// derivation of each template. Invalid templates are an error.
pub fn template_diagnostics(g: &Grammar, inv: &SlotInventory, templates: &[Template]) -> Result<Diagnostics, CorpusError> {
    let mut d = Diagnostics::default();
    for t in templates {
        let deriv = g
            .parse_categories(&inv.cat_ids(t))?
            .ok_or_else(|| CorpusError::InvalidTemplate(inv.template_id(t)))?;
        let len = t.len();
        *d.templates.entry(len).or_insert(0) += 1;
        let cats = d.categories.entry(len).or_default();
        for &s in &t.slots {
            *cats.entry(inv.get(s).category.to_string()).or_insert(0) += 1;
        }
        let rules = d.rules.entry(len).or_default();
        for (rule, k) in deriv.rule_counts() {
            *rules.entry(rule.short_name().to_string()).or_insert(0) += k;
        }
    }
    Ok(d)
}

/// Diagnostics over the distinct templates used by a split.
pub fn split_diagnostics(g: &Grammar, inv: &SlotInventory, split: &CorpusSplit) -> Result<Diagnostics, CorpusError> {
    let ids: BTreeSet<&str> = split.records.iter().map(|r| r.template_id.as_str()).collect();
    let templates = ids
        .into_iter()
        .map(|id| inv.parse_template_id(id, TemplateOrigin::Enumerated).ok_or_else(|| CorpusError::InvalidTemplate(id.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    template_diagnostics(g, inv, &templates)
}
