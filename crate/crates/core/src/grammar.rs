//! BNF grammars for the strategy language.
//!
//! The accepted syntax is one rule per line, `<nt> ::= alt | alt`, with
//! double-quoted terminals and angle-bracketed non-terminals. A line starting
//! with `|` continues the previous rule and a line starting with `#` is a
//! comment. The first rule defines the start symbol.
//!
//! Production order is significant: it fixes the option index that the
//! genotype mapping selects with `gene mod options`.

use std::collections::HashMap;
use std::fmt;

/// Source text of the built-in strategy grammar.
pub const DEFAULT_GRAMMAR: &str = include_str!("default.bnf");

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GrammarError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("rule <{0}> is defined more than once")]
    DuplicateRule(String),
    #[error("undefined non-terminal <{0}>")]
    UndefinedNonTerminal(String),
    #[error("no finite derivation exists for {}", .0.iter().map(|n| format!("<{n}>")).collect::<Vec<_>>().join(", "))]
    NonTerminating(Vec<String>),
    #[error("grammar has no rules")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Symbol {
    Terminal(String),
    NonTerminal(String),
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Terminal(t) => write!(f, "\"{t}\""),
            Symbol::NonTerminal(n) => write!(f, "<{n}>"),
        }
    }
}

pub type Production = Vec<Symbol>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub name: String,
    pub productions: Vec<Production>,
}

/// Syntactically parsed rules, before reference and termination checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
}

/// Symbols with non-terminals resolved to rule indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Sym {
    T(String),
    N(usize),
}

/// A validated grammar.
#[derive(Debug, Clone)]
pub struct Grammar {
    rules: Vec<Rule>,
    compiled: Vec<Vec<Vec<Sym>>>,
}

impl PartialEq for Grammar {
    fn eq(&self, other: &Self) -> bool {
        self.rules == other.rules
    }
}

fn tokenize_alternatives(text: &str, line: usize) -> Result<Vec<Production>, GrammarError> {
    let syntax = |message: String| GrammarError::Syntax { line, message };
    let mut alts = vec![Vec::new()];
    let mut chars = text.char_indices().peekable();
    while let Some(&(start, c)) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '|' => {
                chars.next();
                alts.push(Vec::new());
            }
            '"' => {
                chars.next();
                let body_start = start + 1;
                let end = loop {
                    match chars.next() {
                        Some((i, '"')) => break i,
                        Some(_) => {}
                        None => return Err(syntax("unterminated terminal string".into())),
                    }
                };
                let term = &text[body_start..end];
                if term.is_empty() {
                    return Err(syntax("empty terminal".into()));
                }
                alts.last_mut().expect("non-empty").push(Symbol::Terminal(term.to_string()));
            }
            '<' => {
                chars.next();
                let end = loop {
                    match chars.next() {
                        Some((i, '>')) => break i,
                        Some((_, c)) if c.is_whitespace() || c == '<' => {
                            return Err(syntax("malformed non-terminal".into()))
                        }
                        Some(_) => {}
                        None => return Err(syntax("unterminated non-terminal".into())),
                    }
                };
                let name = &text[start + 1..end];
                if name.is_empty() {
                    return Err(syntax("empty non-terminal name".into()));
                }
                alts.last_mut().expect("non-empty").push(Symbol::NonTerminal(name.to_string()));
            }
            other => return Err(syntax(format!("unexpected character `{other}`"))),
        }
    }
    if alts.iter().any(Vec::is_empty) {
        return Err(syntax("empty alternative".into()));
    }
    Ok(alts)
}

impl RuleSet {
    /// Parses BNF text without checking references or termination.
    pub fn parse(text: &str) -> Result<Self, GrammarError> {
        let mut rules: Vec<Rule> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('|') {
                let Some(last) = rules.last_mut() else {
                    return Err(GrammarError::Syntax { line: line_no, message: "continuation before any rule".into() });
                };
                last.productions.extend(tokenize_alternatives(rest, line_no)?);
                continue;
            }
            let Some((lhs, rhs)) = line.split_once("::=") else {
                return Err(GrammarError::Syntax { line: line_no, message: "expected `<name> ::= ...`".into() });
            };
            let lhs = lhs.trim();
            let name = lhs
                .strip_prefix('<')
                .and_then(|s| s.strip_suffix('>'))
                .filter(|n| !n.is_empty() && !n.contains(|c: char| c.is_whitespace() || c == '<' || c == '>'))
                .ok_or_else(|| GrammarError::Syntax {
                    line: line_no,
                    message: format!("invalid rule name `{lhs}`"),
                })?;
            if rules.iter().any(|r| r.name == name) {
                return Err(GrammarError::DuplicateRule(name.to_string()));
            }
            rules.push(Rule { name: name.to_string(), productions: tokenize_alternatives(rhs, line_no)? });
        }
        if rules.is_empty() {
            return Err(GrammarError::Empty);
        }
        Ok(Self { rules })
    }
}

impl Grammar {
    /// Parses and validates BNF text.
    pub fn parse(text: &str) -> Result<Self, GrammarError> {
        Self::from_rules(RuleSet::parse(text)?)
    }

    pub fn from_rules(set: RuleSet) -> Result<Self, GrammarError> {
        let rules = set.rules;
        if rules.is_empty() {
            return Err(GrammarError::Empty);
        }
        let index: HashMap<&str, usize> = rules.iter().enumerate().map(|(i, r)| (r.name.as_str(), i)).collect();
        let mut compiled = Vec::with_capacity(rules.len());
        for rule in &rules {
            let mut prods = Vec::with_capacity(rule.productions.len());
            for prod in &rule.productions {
                let mut syms = Vec::with_capacity(prod.len());
                for sym in prod {
                    syms.push(match sym {
                        Symbol::Terminal(t) => Sym::T(t.clone()),
                        Symbol::NonTerminal(n) => Sym::N(
                            *index.get(n.as_str()).ok_or_else(|| GrammarError::UndefinedNonTerminal(n.clone()))?,
                        ),
                    });
                }
                prods.push(syms);
            }
            compiled.push(prods);
        }

        // least fixpoint of "has a finite derivation"
        let mut terminates = vec![false; rules.len()];
        loop {
            let mut changed = false;
            for (r, prods) in compiled.iter().enumerate() {
                if terminates[r] {
                    continue;
                }
                let ok = prods
                    .iter()
                    .any(|p: &Vec<Sym>| p.iter().all(|s| matches!(s, Sym::T(_)) || matches!(s, Sym::N(n) if terminates[*n])));
                if ok {
                    terminates[r] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let stuck: Vec<String> =
            rules.iter().zip(&terminates).filter(|(_, &t)| !t).map(|(r, _)| r.name.clone()).collect();
        if !stuck.is_empty() {
            return Err(GrammarError::NonTerminating(stuck));
        }
        Ok(Self { rules, compiled })
    }

    /// The built-in strategy grammar.
    pub fn default_grammar() -> Self {
        Self::parse(DEFAULT_GRAMMAR).expect("built-in grammar is valid")
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn start_symbol(&self) -> &str {
        &self.rules[0].name
    }

    pub fn rule(&self, name: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.name == name)
    }

    /// Largest number of alternatives of any rule.
    pub fn max_options(&self) -> usize {
        self.rules.iter().map(|r| r.productions.len()).max().unwrap_or(0)
    }

    pub(crate) fn compiled(&self) -> &[Vec<Vec<Sym>>] {
        &self.compiled
    }
}

impl fmt::Display for Grammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for rule in &self.rules {
            write!(f, "<{}> ::=", rule.name)?;
            for (i, prod) in rule.productions.iter().enumerate() {
                if i > 0 {
                    write!(f, " |")?;
                }
                for sym in prod {
                    write!(f, " {sym}")?;
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXCERPT: &str = r#"
<mutantOperation> ::= "Retain Mutants" <selectMutants> | "Discard Mutants" <selectMutants>
<selectMutants> ::= <mutantSelectionType> <quantity> | <mutantSelectionType> <percentage>
<mutantSelectionType> ::= "Select Mutants" <selectionType> <mutantSorting> | "Select Mutants by Groups" <mutantGroupSelectionType> <selectMutants>
"#;

    #[test]
    fn excerpt_syntax() {
        let set = RuleSet::parse(EXCERPT).unwrap();
        assert_eq!(set.rules.len(), 3);
        assert_eq!(set.rules[0].name, "mutantOperation");
        assert_eq!(set.rules[0].productions.len(), 2);
        assert_eq!(set.rules[0].productions[1][0], Symbol::Terminal("Discard Mutants".into()));
        // the excerpt leaves <quantity> and friends undefined
        assert_eq!(Grammar::from_rules(set), Err(GrammarError::UndefinedNonTerminal("quantity".into())));
    }

    #[test]
    fn single_terminal_rule() {
        let g = Grammar::parse(r#"<a> ::= "x""#).unwrap();
        assert_eq!(g.rules().len(), 1);
        assert_eq!(g.rules()[0].productions, vec![vec![Symbol::Terminal("x".into())]]);
        assert_eq!(g.start_symbol(), "a");
    }

    #[test]
    fn undefined_reference() {
        assert_eq!(Grammar::parse("<a> ::= <b>"), Err(GrammarError::UndefinedNonTerminal("b".into())));
    }

    #[test]
    fn non_terminating_rules() {
        let err = Grammar::parse("<a> ::= <b> | \"x\"\n<b> ::= <b> \"y\"").unwrap_err();
        assert_eq!(err, GrammarError::NonTerminating(vec!["b".into()]));
        assert!(Grammar::parse("<a> ::= <a> \"x\"").is_err());
        assert!(Grammar::parse("<a> ::= <a> \"x\" | \"y\"").is_ok());
    }

    #[test]
    fn syntax_errors_carry_line() {
        let err = Grammar::parse("# comment\n<a> ::= \"x\"\n<b> = \"y\"").unwrap_err();
        assert_eq!(err, GrammarError::Syntax { line: 3, message: "expected `<name> ::= ...`".into() });
        assert!(matches!(Grammar::parse("<a> ::= \"x\" |"), Err(GrammarError::Syntax { line: 1, .. })));
        assert!(matches!(Grammar::parse("<a> ::= \"x"), Err(GrammarError::Syntax { line: 1, .. })));
        assert!(matches!(Grammar::parse("<a> ::= x"), Err(GrammarError::Syntax { line: 1, .. })));
        assert!(matches!(Grammar::parse("  \n# only comments"), Err(GrammarError::Empty)));
        assert!(matches!(Grammar::parse("<a> ::= \"x\"\n<a> ::= \"y\""), Err(GrammarError::DuplicateRule(_))));
    }

    #[test]
    fn continuation_lines() {
        let g = Grammar::parse("<a> ::= \"x\"\n  | \"y\"\n  | <a> \"z\"").unwrap();
        assert_eq!(g.rules()[0].productions.len(), 3);
    }

    #[test]
    fn default_grammar_bounds() {
        let g = Grammar::default_grammar();
        assert_eq!(g.start_symbol(), "strategy");
        assert!(g.max_options() <= 180);
        assert_eq!(g.rule("percentage").unwrap().productions.len(), 10);
        assert_eq!(g.rule("quantity").unwrap().productions.len(), 10);
    }

    #[test]
    fn print_parse_round_trip() {
        let g = Grammar::default_grammar();
        assert_eq!(Grammar::parse(&g.to_string()).unwrap(), g);
        let set = RuleSet::parse(EXCERPT).unwrap();
        let printed: String = set
            .rules
            .iter()
            .map(|r| {
                let alts: Vec<String> = r
                    .productions
                    .iter()
                    .map(|p| p.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "))
                    .collect();
                format!("<{}> ::= {}\n", r.name, alts.join(" | "))
            })
            .collect();
        assert_eq!(RuleSet::parse(&printed).unwrap(), set);
    }
}
