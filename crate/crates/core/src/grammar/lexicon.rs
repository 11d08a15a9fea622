use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::category::Category;
use super::GrammarError;

/// Part-of-speech class of a lexical entry; templates are built from these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PosClass {
    Noun,
    TransitiveVerb,
    IntransitiveVerb,
    Adjective,
    Adposition,
    SubjectMarker,
    ObjectMarker,
    Complementizer,
    Relativizer,
    Conjunction,
    ClauseVerb,
}

impl PosClass {
    pub const ALL: [PosClass; 11] = [
        PosClass::Noun,
        PosClass::TransitiveVerb,
        PosClass::IntransitiveVerb,
        PosClass::Adjective,
        PosClass::Adposition,
        PosClass::SubjectMarker,
        PosClass::ObjectMarker,
        PosClass::Complementizer,
        PosClass::Relativizer,
        PosClass::Conjunction,
        PosClass::ClauseVerb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PosClass::Noun => "noun",
            PosClass::TransitiveVerb => "transitive_verb",
            PosClass::IntransitiveVerb => "intransitive_verb",
            PosClass::Adjective => "adjective",
            PosClass::Adposition => "adposition",
            PosClass::SubjectMarker => "subject_marker",
            PosClass::ObjectMarker => "object_marker",
            PosClass::Complementizer => "complementizer",
            PosClass::Relativizer => "relativizer",
            PosClass::Conjunction => "conjunction",
            PosClass::ClauseVerb => "clause_verb",
        }
    }

    /// Compact tag used in template ids.
    pub fn tag(self) -> &'static str {
        match self {
            PosClass::Noun => "N",
            PosClass::TransitiveVerb => "TV",
            PosClass::IntransitiveVerb => "IV",
            PosClass::Adjective => "ADJ",
            PosClass::Adposition => "ADP",
            PosClass::SubjectMarker => "GA",
            PosClass::ObjectMarker => "O",
            PosClass::Complementizer => "COMP",
            PosClass::Relativizer => "REL",
            PosClass::Conjunction => "CONJ",
            PosClass::ClauseVerb => "CV",
        }
    }
}

impl fmt::Display for PosClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PosClass {
    type Err = GrammarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PosClass::ALL
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| GrammarError::UnknownPosClass(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LexEntry {
    pub token: String,
    pub category: Category,
    pub pos: PosClass,
}

impl LexEntry {
    pub fn new(token: impl Into<String>, category: Category, pos: PosClass) -> Self {
        LexEntry { token: token.into(), category, pos }
    }
}

/// Token-to-category assignments. One token may carry several entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicon {
    entries: Vec<LexEntry>,
    by_token: HashMap<String, Vec<usize>>,
}

impl Lexicon {
    pub fn new(entries: impl IntoIterator<Item = LexEntry>) -> Self {
        let mut lex = Lexicon::default();
        for e in entries {
            lex.push(e);
        }
        lex
    }

    pub fn push(&mut self, entry: LexEntry) {
        if self.entries.contains(&entry) {
            return;
        }
        self.by_token.entry(entry.token.clone()).or_default().push(self.entries.len());
        self.entries.push(entry);
    }

    pub fn entries(&self) -> &[LexEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, token: &str) -> impl Iterator<Item = &LexEntry> {
        self.by_token.get(token).into_iter().flatten().map(move |&i| &self.entries[i])
    }

    pub fn contains_token(&self, token: &str) -> bool {
        self.by_token.contains_key(token)
    }

    /// Tokens of one part-of-speech class with the given category, in entry order.
    pub fn tokens_for(&self, pos: PosClass, category: &Category) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|e| e.pos == pos && &e.category == category)
            .map(|e| e.token.as_str())
            .collect()
    }

    pub fn tokens_of(&self, pos: PosClass) -> Vec<&str> {
        self.entries.iter().filter(|e| e.pos == pos).map(|e| e.token.as_str()).collect()
    }

    /// Distinct `(pos, category)` pairs in first-appearance order.
    pub fn slot_types(&self) -> Vec<(PosClass, Category)> {
        let mut out: Vec<(PosClass, Category)> = Vec::new();
        for e in &self.entries {
            if !out.iter().any(|(p, c)| *p == e.pos && c == &e.category) {
                out.push((e.pos, e.category.clone()));
            }
        }
        out
    }

    /// Reads the tab-separated `token<TAB>category<TAB>pos_class` format.
    pub fn read(reader: impl BufRead) -> Result<Self, GrammarError> {
        let mut lex = Lexicon::default();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim_end_matches(['\r', '\n']);
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split('\t').collect();
            let bad = |msg: String| GrammarError::LexiconLine { line: lineno + 1, msg };
            if fields.len() != 3 {
                return Err(bad(format!("expected 3 tab-separated fields, found {}", fields.len())));
            }
            if fields[0].is_empty() {
                return Err(bad("empty token".into()));
            }
            let category: Category = fields[1].parse().map_err(|e| bad(format!("{e}")))?;
            let pos: PosClass = fields[2].parse().map_err(|e| bad(format!("{e}")))?;
            lex.push(LexEntry::new(fields[0], category, pos));
        }
        Ok(lex)
    }

    pub fn write(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "# token\tcategory\tpos_class")?;
        for e in &self.entries {
            writeln!(w, "{}\t{}\t{}", e.token, e.category, e.pos)?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("lexicon is UTF-8")
    }
}

impl FromStr for Lexicon {
    type Err = GrammarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Lexicon::read(s.as_bytes())
    }
}
