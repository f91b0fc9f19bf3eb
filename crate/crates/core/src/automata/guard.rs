//! Boolean guard expressions over propositions, as used on reward machine
//! edges (`!sp & pr`, `c | m`, ...).
//!
//! Grammar, lowest precedence first:
//!
//! ```text
//! or   := and ( ('|' | '∨') and )*
//! and  := not ( ('&' | '∧') not )*
//! not  := ('!' | '¬') not | atom
//! atom := ident | 'true' | 'false' | '(' or ')'
//! ```

use std::fmt;

use super::label::{Label, PropSet};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GuardExpr {
    True,
    False,
    Prop(String),
    Not(Box<GuardExpr>),
    And(Box<GuardExpr>, Box<GuardExpr>),
    Or(Box<GuardExpr>, Box<GuardExpr>),
}

impl GuardExpr {
    /// Evaluates the guard on a label, resolving names through `props`.
    pub fn eval(&self, props: &PropSet, label: Label) -> Result<bool> {
        Ok(match self {
            GuardExpr::True => true,
            GuardExpr::False => false,
            GuardExpr::Prop(name) => {
                let idx = props
                    .index_of(name)
                    .ok_or_else(|| Error::input(format!("unknown proposition `{name}`")))?;
                label.contains(idx)
            }
            GuardExpr::Not(g) => !g.eval(props, label)?,
            GuardExpr::And(a, b) => a.eval(props, label)? && b.eval(props, label)?,
            GuardExpr::Or(a, b) => a.eval(props, label)? || b.eval(props, label)?,
        })
    }

    /// Proposition names referenced by the expression, in order of appearance.
    pub fn props(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_props(&mut out);
        out
    }

    fn collect_props<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            GuardExpr::True | GuardExpr::False => {}
            GuardExpr::Prop(p) => {
                if !out.contains(&p.as_str()) {
                    out.push(p);
                }
            }
            GuardExpr::Not(g) => g.collect_props(out),
            GuardExpr::And(a, b) | GuardExpr::Or(a, b) => {
                a.collect_props(out);
                b.collect_props(out);
            }
        }
    }
}

impl fmt::Display for GuardExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn prec(g: &GuardExpr) -> u8 {
            match g {
                GuardExpr::Or(..) => 0,
                GuardExpr::And(..) => 1,
                _ => 2,
            }
        }
        fn child(f: &mut fmt::Formatter<'_>, g: &GuardExpr, min: u8) -> fmt::Result {
            if prec(g) < min {
                write!(f, "({g})")
            } else {
                write!(f, "{g}")
            }
        }
        match self {
            GuardExpr::True => f.write_str("true"),
            GuardExpr::False => f.write_str("false"),
            GuardExpr::Prop(p) => f.write_str(p),
            GuardExpr::Not(g) => {
                f.write_str("!")?;
                child(f, g, 2)
            }
            GuardExpr::And(a, b) => {
                child(f, a, 1)?;
                f.write_str(" & ")?;
                child(f, b, 1)
            }
            GuardExpr::Or(a, b) => {
                child(f, a, 0)?;
                f.write_str(" | ")?;
                child(f, b, 0)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Not,
    And,
    Or,
    LParen,
    RParen,
}

/// Tokens paired with their 1-based character column.
fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '!' | '¬' => out.push((Tok::Not, col)),
            '&' | '∧' => out.push((Tok::And, col)),
            '|' | '∨' => out.push((Tok::Or, col)),
            '(' => out.push((Tok::LParen, col)),
            ')' => out.push((Tok::RParen, col)),
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push((Tok::Ident(chars[start..i].iter().collect()), col));
                continue;
            }
            other => {
                return Err(Error::parse(
                    1,
                    col,
                    format!("unexpected character `{other}`"),
                ));
            }
        }
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end_col: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |(_, c)| *c)
    }

    fn or(&mut self) -> Result<GuardExpr> {
        let mut lhs = self.and()?;
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            let rhs = self.and()?;
            lhs = GuardExpr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<GuardExpr> {
        let mut lhs = self.not()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            let rhs = self.not()?;
            lhs = GuardExpr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn not(&mut self) -> Result<GuardExpr> {
        if self.peek() == Some(&Tok::Not) {
            self.pos += 1;
            return Ok(GuardExpr::Not(Box::new(self.not()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<GuardExpr> {
        let col = self.col();
        match self.toks.get(self.pos).map(|(t, _)| t.clone()) {
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                Ok(match name.as_str() {
                    "true" => GuardExpr::True,
                    "false" => GuardExpr::False,
                    _ => GuardExpr::Prop(name),
                })
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.or()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(Error::parse(1, self.col(), "expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(tok) => Err(Error::parse(1, col, format!("unexpected token {tok:?}"))),
            None => Err(Error::parse(1, col, "unexpected end of guard")),
        }
    }
}

/// Parses a guard. Errors carry the 1-based column of the offending token.
pub fn parse_guard(text: &str) -> Result<GuardExpr> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end_col: text.chars().count() + 1,
    };
    let expr = p.or()?;
    if p.pos != p.toks.len() {
        return Err(Error::parse(1, p.col(), "trailing input after guard"));
    }
    Ok(expr)
}

/// All labels of the universe that satisfy the guard, in ascending bit order.
pub fn expand_guard(guard: &GuardExpr, props: &PropSet) -> Result<Vec<Label>> {
    for name in guard.props() {
        if props.index_of(name).is_none() {
            return Err(Error::input(format!(
                "guard references `{name}`, which is not in the universe [{props}]"
            )));
        }
    }
    let mut out = Vec::new();
    for label in props.labels() {
        if guard.eval(props, label)? {
            out.push(label);
        }
    }
    Ok(out)
}

/// A product term: `mask` selects the propositions that are fixed, `value`
/// gives their polarity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Cube {
    mask: u32,
    value: u32,
}

impl Cube {
    fn covers(self, label: u32) -> bool {
        label & self.mask == self.value
    }
}

/// Renders a set of labels as a compact guard, using prime implicants and a
/// greedy cover. The result satisfies `expand_guard(result) == labels`.
pub fn guard_for_labels(labels: &[Label], props: &PropSet) -> GuardExpr {
    let n = props.len();
    let full = props.label_count();
    let mut set: Vec<u32> = labels.iter().map(|l| l.0).collect();
    set.sort_unstable();
    set.dedup();
    if set.is_empty() {
        return GuardExpr::False;
    }
    if set.len() == full {
        return GuardExpr::True;
    }
    let all_mask = (full as u32) - 1;

    // Quine-McCluskey: repeatedly combine cubes that differ in one fixed bit.
    let mut current: Vec<Cube> = set
        .iter()
        .map(|&v| Cube {
            mask: all_mask,
            value: v,
        })
        .collect();
    let mut primes: Vec<Cube> = Vec::new();
    while !current.is_empty() {
        let mut used = vec![false; current.len()];
        let mut next: Vec<Cube> = Vec::new();
        for i in 0..current.len() {
            for j in (i + 1)..current.len() {
                let (a, b) = (current[i], current[j]);
                if a.mask != b.mask {
                    continue;
                }
                let diff = a.value ^ b.value;
                if diff.count_ones() == 1 {
                    used[i] = true;
                    used[j] = true;
                    next.push(Cube {
                        mask: a.mask & !diff,
                        value: a.value & !diff,
                    });
                }
            }
        }
        for (i, c) in current.iter().enumerate() {
            if !used[i] && !primes.contains(c) {
                primes.push(*c);
            }
        }
        next.sort_unstable();
        next.dedup();
        current = next;
    }

    // Greedy cover: prefer cubes covering the most uncovered labels, then
    // fewer literals.
    let mut uncovered: Vec<u32> = set.clone();
    let mut chosen: Vec<Cube> = Vec::new();
    while !uncovered.is_empty() {
        let best = primes
            .iter()
            .copied()
            .max_by(|a, b| {
                let ca = uncovered.iter().filter(|&&l| a.covers(l)).count();
                let cb = uncovered.iter().filter(|&&l| b.covers(l)).count();
                ca.cmp(&cb)
                    .then(b.mask.count_ones().cmp(&a.mask.count_ones()))
                    .then(b.cmp(a))
            })
            .expect("prime implicants cover every label");
        uncovered.retain(|&l| !best.covers(l));
        chosen.push(best);
    }
    chosen.sort_unstable_by_key(|c| (c.mask.count_ones(), c.mask, c.value));

    let term = |c: Cube| -> GuardExpr {
        let mut lits: Vec<GuardExpr> = Vec::new();
        for i in 0..n {
            if c.mask & (1 << i) == 0 {
                continue;
            }
            let p = GuardExpr::Prop(props.names()[i].clone());
            lits.push(if c.value & (1 << i) != 0 {
                p
            } else {
                GuardExpr::Not(Box::new(p))
            });
        }
        lits.into_iter()
            .reduce(|a, b| GuardExpr::And(Box::new(a), Box::new(b)))
            .unwrap_or(GuardExpr::True)
    };
    chosen
        .into_iter()
        .map(term)
        .reduce(|a, b| GuardExpr::Or(Box::new(a), Box::new(b)))
        .unwrap_or(GuardExpr::False)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn universe() -> PropSet {
        PropSet::new(["sp", "pr", "B"]).unwrap()
    }

    fn names(props: &PropSet, labels: &[Label]) -> Vec<String> {
        labels.iter().map(|l| props.format_label(*l)).collect()
    }

    #[test]
    fn negated_conjunction_expands_to_satisfying_labels() {
        let p = universe();
        let g = parse_guard("!sp & pr").unwrap();
        assert_eq!(
            names(&p, &expand_guard(&g, &p).unwrap()),
            ["{pr}", "{pr,B}"]
        );
    }

    #[test]
    fn true_expands_to_every_label() {
        let p = PropSet::new(["x", "y", "z"]).unwrap();
        let g = parse_guard("true").unwrap();
        assert_eq!(expand_guard(&g, &p).unwrap().len(), 8);
        assert!(expand_guard(&parse_guard("false").unwrap(), &p)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn disjunction_matches_truth_table() {
        let p = PropSet::new(["a", "b", "c", "d", "m", "o"]).unwrap();
        let g = parse_guard("c | m").unwrap();
        let got = expand_guard(&g, &p).unwrap();
        let (c, m) = (p.index_of("c").unwrap(), p.index_of("m").unwrap());
        let want: Vec<Label> = p
            .labels()
            .filter(|l| l.contains(c) || l.contains(m))
            .collect();
        assert_eq!(got, want);
        assert_eq!(got.len(), 48);
    }

    #[test]
    fn unicode_operators_parse() {
        let p = universe();
        let a = expand_guard(&parse_guard("¬sp ∧ (pr ∨ B)").unwrap(), &p).unwrap();
        let b = expand_guard(&parse_guard("!sp & (pr | B)").unwrap(), &p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn parse_errors_report_column() {
        match parse_guard("a & & b") {
            Err(Error::Parse { column, .. }) => assert_eq!(column, 5),
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse_guard("(a | b") {
            Err(Error::Parse { column, .. }) => assert_eq!(column, 7),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse_guard("a $ b").is_err());
        assert!(parse_guard("").is_err());
    }

    #[test]
    fn unknown_proposition_is_an_input_error() {
        let g = parse_guard("sp & q").unwrap();
        assert!(matches!(
            expand_guard(&g, &universe()),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn display_reparses_to_same_semantics() {
        let p = universe();
        for text in [
            "!(sp | pr) & B",
            "sp | pr & !B",
            "!!sp",
            "(sp | B) & (pr | !B)",
        ] {
            let g = parse_guard(text).unwrap();
            let again = parse_guard(&g.to_string()).unwrap();
            assert_eq!(
                expand_guard(&g, &p).unwrap(),
                expand_guard(&again, &p).unwrap(),
                "{text}"
            );
        }
    }

    fn arb_guard(depth: u32) -> BoxedStrategy<GuardExpr> {
        let leaf = prop_oneof![
            Just(GuardExpr::True),
            Just(GuardExpr::False),
            prop::sample::select(vec!["sp", "pr", "B"]).prop_map(|s| GuardExpr::Prop(s.into())),
        ];
        leaf.prop_recursive(depth, 24, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|g| GuardExpr::Not(Box::new(g))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| GuardExpr::And(Box::new(a), Box::new(b))),
                (inner.clone(), inner).prop_map(|(a, b)| GuardExpr::Or(Box::new(a), Box::new(b))),
            ]
        })
        .boxed()
    }

    fn not(g: GuardExpr) -> GuardExpr {
        GuardExpr::Not(Box::new(g))
    }

    proptest! {
        #[test]
        fn double_negation_and_de_morgan_preserve_expansion(a in arb_guard(3), b in arb_guard(3)) {
            let p = universe();
            let base = expand_guard(&a, &p).unwrap();
            prop_assert_eq!(&base, &expand_guard(&not(not(a.clone())), &p).unwrap());

            let conj = GuardExpr::And(Box::new(a.clone()), Box::new(b.clone()));
            let de_morgan = not(GuardExpr::Or(Box::new(not(a.clone())), Box::new(not(b.clone()))));
            prop_assert_eq!(expand_guard(&conj, &p).unwrap(), expand_guard(&de_morgan, &p).unwrap());

            let disj = GuardExpr::Or(Box::new(a.clone()), Box::new(b.clone()));
            let de_morgan = not(GuardExpr::And(Box::new(not(a)), Box::new(not(b))));
            prop_assert_eq!(expand_guard(&disj, &p).unwrap(), expand_guard(&de_morgan, &p).unwrap());
        }

        #[test]
        fn minimized_guard_expands_to_the_same_labels(bits in prop::collection::vec(any::<bool>(), 16)) {
            let p = PropSet::new(["a", "b", "c", "d"]).unwrap();
            let labels: Vec<Label> = p.labels().filter(|l| bits[l.index()]).collect();
            let g = guard_for_labels(&labels, &p);
            prop_assert_eq!(expand_guard(&g, &p).unwrap(), labels.clone());
            let reparsed = parse_guard(&g.to_string()).unwrap();
            prop_assert_eq!(expand_guard(&reparsed, &p).unwrap(), labels);
        }
    }
}
