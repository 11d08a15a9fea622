use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::GrammarError;

/// Closed inventory of atomic categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Atom {
    S,
    Np,
    NpSbj,
    NpObj,
    /// Complementizer phrase, the argument of clause-taking verbs.
    Cp,
    /// Bare conjunction; only consumed by the coordination rule.
    Conj,
}

impl Atom {
    pub const ALL: [Atom; 6] = [Atom::S, Atom::Np, Atom::NpSbj, Atom::NpObj, Atom::Cp, Atom::Conj];

    pub fn name(self) -> &'static str {
        match self {
            Atom::S => "S",
            Atom::Np => "NP",
            Atom::NpSbj => "NP_SBJ",
            Atom::NpObj => "NP_OBJ",
            Atom::Cp => "CP",
            Atom::Conj => "CONJ",
        }
    }
}

impl FromStr for Atom {
    type Err = GrammarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Atom::ALL
            .iter()
            .copied()
            .find(|a| a.name() == s)
            .ok_or_else(|| GrammarError::UnknownAtom(s.to_string()))
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Slash {
    /// `/`: seeks its argument to the right.
    Forward,
    /// `\`: seeks its argument to the left.
    Backward,
}

impl Slash {
    pub fn symbol(self) -> char {
        match self {
            Slash::Forward => '/',
            Slash::Backward => '\\',
        }
    }

    pub fn flip(self) -> Slash {
        match self {
            Slash::Forward => Slash::Backward,
            Slash::Backward => Slash::Forward,
        }
    }
}

/// A categorial-grammar type: an atom or a directional functor.
///
/// Equality is structural. Sub-trees are shared through `Arc`, so cloning is cheap.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Atom(Atom),
    Functor {
        result: Arc<Category>,
        slash: Slash,
        arg: Arc<Category>,
    },
}

pub const DEFAULT_MAX_DEPTH: usize = 8;

impl Category {
    pub fn atom(a: Atom) -> Self {
        Category::Atom(a)
    }

    pub fn functor(result: Category, slash: Slash, arg: Category) -> Self {
        Category::Functor { result: Arc::new(result), slash, arg: Arc::new(arg) }
    }

    /// `result / arg`
    pub fn fwd(result: Category, arg: Category) -> Self {
        Self::functor(result, Slash::Forward, arg)
    }

    /// `result \ arg`
    pub fn bwd(result: Category, arg: Category) -> Self {
        Self::functor(result, Slash::Backward, arg)
    }

    pub fn with_slash(result: Category, slash: Slash, arg: Category) -> Self {
        Self::functor(result, slash, arg)
    }

    pub fn is_atom(&self) -> bool {
        matches!(self, Category::Atom(_))
    }

    pub fn as_atom(&self) -> Option<Atom> {
        match self {
            Category::Atom(a) => Some(*a),
            _ => None,
        }
    }

    pub fn is(&self, atom: Atom) -> bool {
        self.as_atom() == Some(atom)
    }

    /// Nesting depth; atoms have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Category::Atom(_) => 0,
            Category::Functor { result, arg, .. } => 1 + result.depth().max(arg.depth()),
        }
    }

    /// Splits a functor into `(result, slash, arg)`.
    pub fn split(&self) -> Option<(&Category, Slash, &Category)> {
        match self {
            Category::Atom(_) => None,
            Category::Functor { result, slash, arg } => Some((result, *slash, arg)),
        }
    }

    /// Peels the argument spine down to its atomic result.
    ///
    /// Returns the atomic result and the arguments ordered innermost first,
    /// so the last argument is the one consumed first.
    pub fn spine(&self) -> (&Category, Vec<(Slash, &Category)>) {
        let mut args = Vec::new();
        let mut cur = self;
        while let Category::Functor { result, slash, arg } = cur {
            args.push((*slash, arg.as_ref()));
            cur = result;
        }
        args.reverse();
        (cur, args)
    }

    /// Rebuilds a category from a result and innermost-first arguments.
    pub fn from_spine(result: &Category, args: &[(Slash, &Category)]) -> Category {
        args.iter()
            .fold(result.clone(), |acc, (slash, arg)| Category::functor(acc, *slash, (*arg).clone()))
    }

    pub fn arity(&self) -> usize {
        self.spine().1.len()
    }

    pub fn check_depth(&self, max_depth: usize) -> Result<(), GrammarError> {
        let depth = self.depth();
        if depth > max_depth {
            return Err(GrammarError::DepthExceeded { category: self.to_string(), depth, max: max_depth });
        }
        Ok(())
    }
}

impl From<Atom> for Category {
    fn from(a: Atom) -> Self {
        Category::Atom(a)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn side(c: &Category, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            if c.is_atom() {
                write!(f, "{c}")
            } else {
                write!(f, "({c})")
            }
        }
        match self {
            Category::Atom(a) => write!(f, "{a}"),
            Category::Functor { result, slash, arg } => {
                side(result, f)?;
                write!(f, "{}", slash.symbol())?;
                side(arg, f)
            }
        }
    }
}

impl FromStr for Category {
    type Err = GrammarError;

    /// Parses `/`, `\`, parentheses and bare atom names. Slashes associate to the left.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = CatParser { src: s, pos: 0 };
        let cat = p.expr()?;
        p.skip_ws();
        if p.pos != s.len() {
            return Err(p.error("trailing input"));
        }
        Ok(cat)
    }
}

struct CatParser<'a> {
    src: &'a str,
    pos: usize,
}

impl CatParser<'_> {
    fn error(&self, msg: &str) -> GrammarError {
        GrammarError::CategorySyntax { input: self.src.to_string(), pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn expr(&mut self) -> Result<Category, GrammarError> {
        let mut acc = self.primary()?;
        loop {
            let slash = match self.peek() {
                Some('/') => Slash::Forward,
                Some('\\') => Slash::Backward,
                _ => return Ok(acc),
            };
            self.pos += 1;
            let arg = self.primary()?;
            acc = Category::functor(acc, slash, arg);
        }
    }

    fn primary(&mut self) -> Result<Category, GrammarError> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                let start = self.pos;
                let len = self.src[start..]
                    .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
                    .unwrap_or(self.src.len() - start);
                self.pos += len;
                Ok(Category::Atom(self.src[start..self.pos].parse()?))
            }
            _ => Err(self.error("expected atom or '('")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat(s: &str) -> Category {
        s.parse().unwrap()
    }

    #[test]
    fn prints_with_parenthesised_functors() {
        let c = Category::fwd(Category::bwd(Atom::S.into(), Atom::NpSbj.into()), Atom::NpObj.into());
        assert_eq!(c.to_string(), "(S\\NP_SBJ)/NP_OBJ");
        assert_eq!(cat("(S\\NP_SBJ)/NP_OBJ"), c);
    }

    #[test]
    fn slashes_associate_left() {
        assert_eq!(cat("S\\NP_SBJ/NP_OBJ"), cat("(S\\NP_SBJ)/NP_OBJ"));
        assert_ne!(cat("S\\(NP_SBJ/NP_OBJ)"), cat("(S\\NP_SBJ)/NP_OBJ"));
    }

    #[test]
    fn rejects_unknown_atoms_and_junk() {
        assert!(matches!("VP/NP".parse::<Category>(), Err(GrammarError::UnknownAtom(a)) if a == "VP"));
        assert!("(S/NP".parse::<Category>().is_err());
        assert!("S/".parse::<Category>().is_err());
        assert!("S NP".parse::<Category>().is_err());
    }

    #[test]
    fn spine_round_trip() {
        let c = cat("((S\\NP_SBJ)/NP_OBJ)/CP");
        let (res, args) = c.spine();
        assert_eq!(res, &Category::Atom(Atom::S));
        assert_eq!(args.len(), 3);
        assert_eq!(args[0], (Slash::Backward, &Category::Atom(Atom::NpSbj)));
        assert_eq!(Category::from_spine(res, &args), c);
    }

    #[test]
    fn depth_is_bounded() {
        let mut c = Category::Atom(Atom::S);
        for _ in 0..9 {
            c = Category::bwd(c, Atom::Np.into());
        }
        assert_eq!(c.depth(), 9);
        assert!(c.check_depth(DEFAULT_MAX_DEPTH).is_err());
    }
}
