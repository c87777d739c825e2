//! Parser for `.pgsos` specification files.
//!
//! ```text
//! actions a, b;
//! set B = {a};
//! op par : 2;
//! rule sync forall a in B {
//!     x1 --a--> mu1
//!     x2 --a--> mu2
//!     ---
//!     par(x1, x2) --a--> par(mu1, mu2)
//! }
//! term T = par(pref_a(zero), zero);
//! ```

use super::lexer::{tokenize, Tok};
use super::{
    expand_templates, Pos, RuleCandidate, RuleTemplate, SetExpr, Signature, SpecDocument, SpecError, TemplateDocument,
    Warning,
};
use crate::rational::{parse_rational, Rational};
use crate::term::{name, DistTerm, Name, StateTerm};
use std::collections::{BTreeMap, BTreeSet};

const KEYWORDS: &[&str] = &["actions", "set", "op", "rule", "term", "forall", "in", "delta", "ACT"];

/// Parses and validates a specification, discarding warnings.
pub fn parse_spec(text: &str) -> Result<SpecDocument, SpecError> {
    parse_spec_with_warnings(text).map(|(doc, _)| doc)
}

pub fn parse_spec_with_warnings(text: &str) -> Result<(SpecDocument, Vec<Warning>), SpecError> {
    expand_templates(parse_templates(text)?)
}

/// Parses a specification without expanding rule templates.
pub fn parse_templates(text: &str) -> Result<TemplateDocument, SpecError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, at: 0 };
    let items = p.items()?;
    if items.is_empty() {
        return Err(SpecError::Syntax { pos: p.pos(), msg: "empty specification".into() });
    }
    resolve_document(items)
}

pub(crate) fn parse_state_term(doc: &SpecDocument, text: &str) -> Result<StateTerm, SpecError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, at: 0 };
    let raw = p.sum()?;
    p.expect_eof()?;
    let ctx = Ctx { ops: &doc.signature.operators, terms: &doc.terms };
    ctx.state(&raw)
}

#[derive(Debug, Clone)]
enum Raw {
    Ident { name: String, pos: Pos, args: Option<Vec<RawSum>> },
    Paren(RawSum),
}

type RawSum = Vec<(Option<(Rational, Pos)>, Raw)>;

fn raw_pos(r: &Raw) -> Pos {
    match r {
        Raw::Ident { pos, .. } => *pos,
        Raw::Paren(s) => s.first().map(|(_, r)| raw_pos(r)).unwrap_or_default(),
    }
}

enum Item {
    Actions(Vec<(String, Pos)>),
    Set(String, Pos, SetExpr),
    Op(String, Pos, usize),
    Term(String, Pos, RawSum),
    Rule(RawRule),
}

struct RawRule {
    pos: Pos,
    name: String,
    binders: Vec<(String, SetExpr)>,
    positive: Vec<(String, Pos, String, Pos, String)>,
    negative: Vec<(String, Pos, String, Pos)>,
    op: String,
    op_pos: Pos,
    sources: Vec<(String, Pos)>,
    action: String,
    action_pos: Pos,
    target: RawSum,
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.at + 1).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, expected: &str) -> Result<T, SpecError> {
        Err(SpecError::Syntax { pos: self.pos(), msg: format!("expected {expected}, found {}", self.peek()) })
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == &Tok::Punct(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), SpecError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.error(&format!("`{c}`"))
        }
    }

    fn expect_tok(&mut self, tok: Tok) -> Result<(), SpecError> {
        if self.peek() == &tok {
            self.bump();
            Ok(())
        } else {
            self.error(&tok.to_string())
        }
    }

    fn expect_eof(&mut self) -> Result<(), SpecError> {
        if self.peek() == &Tok::Eof {
            Ok(())
        } else {
            self.error("end of input")
        }
    }

    fn ident(&mut self) -> Result<(String, Pos), SpecError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let pos = self.bump().1;
                Ok((s, pos))
            }
            _ => self.error("an identifier"),
        }
    }

    /// An identifier that is not a keyword.
    fn user_ident(&mut self) -> Result<(String, Pos), SpecError> {
        let (s, pos) = self.ident()?;
        if KEYWORDS.contains(&s.as_str()) {
            return Err(SpecError::Syntax { pos, msg: format!("`{s}` is a reserved word") });
        }
        Ok((s, pos))
    }

    fn keyword(&mut self, kw: &str) -> Result<(), SpecError> {
        match self.peek() {
            Tok::Ident(s) if s == kw => {
                self.bump();
                Ok(())
            }
            _ => self.error(&format!("`{kw}`")),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn items(&mut self) -> Result<Vec<Item>, SpecError> {
        let mut items = Vec::new();
        while self.peek() != &Tok::Eof {
            items.push(self.item()?);
        }
        Ok(items)
    }

    fn item(&mut self) -> Result<Item, SpecError> {
        let (kw, _) = self.ident()?;
        match kw.as_str() {
            "actions" => {
                let mut list = Vec::new();
                if !self.eat(';') {
                    loop {
                        list.push(self.user_ident()?);
                        if self.eat(';') {
                            break;
                        }
                        self.expect(',')?;
                    }
                }
                Ok(Item::Actions(list))
            }
            "set" => {
                let (n, pos) = self.user_ident()?;
                self.expect('=')?;
                let e = self.set_expr()?;
                self.expect(';')?;
                Ok(Item::Set(n, pos, e))
            }
            "op" => {
                let (n, pos) = self.user_ident()?;
                self.expect(':')?;
                let arity = match self.bump() {
                    (Tok::Number(s), pos) => s
                        .parse::<usize>()
                        .map_err(|_| SpecError::Syntax { pos, msg: format!("invalid arity `{s}`") })?,
                    (_, pos) => return Err(SpecError::Syntax { pos, msg: "expected an arity".into() }),
                };
                self.expect(';')?;
                Ok(Item::Op(n, pos, arity))
            }
            "term" => {
                let (n, pos) = self.user_ident()?;
                self.expect('=')?;
                let body = self.sum()?;
                self.expect(';')?;
                Ok(Item::Term(n, pos, body))
            }
            "rule" => self.rule().map(Item::Rule),
            _ => {
                self.at -= 1;
                self.error("`actions`, `set`, `op`, `rule` or `term`")
            }
        }
    }

    fn set_expr(&mut self) -> Result<SetExpr, SpecError> {
        let mut left = self.set_primary()?;
        loop {
            if self.eat('\\') {
                left = SetExpr::Difference(Box::new(left), Box::new(self.set_primary()?));
            } else if self.eat('|') {
                left = SetExpr::Union(Box::new(left), Box::new(self.set_primary()?));
            } else {
                return Ok(left);
            }
        }
    }

    fn set_primary(&mut self) -> Result<SetExpr, SpecError> {
        if self.eat('(') {
            let e = self.set_expr()?;
            self.expect(')')?;
            return Ok(e);
        }
        if self.eat('{') {
            let mut items = Vec::new();
            if !self.eat('}') {
                loop {
                    let (a, pos) = self.user_ident()?;
                    items.push((name(&a), pos));
                    if self.eat('}') {
                        break;
                    }
                    self.expect(',')?;
                }
            }
            return Ok(SetExpr::Literal(items));
        }
        if self.at_keyword("ACT") {
            self.bump();
            return Ok(SetExpr::All);
        }
        let (n, pos) = self.user_ident()?;
        Ok(SetExpr::Named(name(&n), pos))
    }

    fn rule(&mut self) -> Result<RawRule, SpecError> {
        let pos = self.pos();
        let (mut rule_name, _) = self.user_ident()?;
        if self.eat('[') {
            let mut parts = Vec::new();
            loop {
                parts.push(self.ident()?.0);
                if self.eat(']') {
                    break;
                }
                self.expect(',')?;
            }
            rule_name = format!("{rule_name}[{}]", parts.join(","));
        }
        let mut binders = Vec::new();
        if self.at_keyword("forall") {
            self.bump();
            loop {
                let (v, _) = self.user_ident()?;
                self.keyword("in")?;
                binders.push((v, self.set_expr()?));
                if !self.eat(',') {
                    break;
                }
            }
        }
        self.expect('{')?;
        let mut positive = Vec::new();
        let mut negative = Vec::new();
        while self.peek() != &Tok::Separator {
            let (x, xpos) = self.user_ident()?;
            match self.peek() {
                Tok::ArrowOpen => {
                    self.bump();
                    let (a, apos) = self.user_ident()?;
                    self.expect_tok(Tok::ArrowClose)?;
                    let (mu, _) = self.user_ident()?;
                    positive.push((x, xpos, a, apos, mu));
                }
                Tok::NegOpen => {
                    self.bump();
                    let (b, bpos) = self.user_ident()?;
                    self.expect_tok(Tok::NegClose)?;
                    negative.push((x, xpos, b, bpos));
                }
                _ => return self.error("`--` or `-/` (or `---` before the conclusion)"),
            }
            if !self.eat(',') {
                self.eat(';');
            }
        }
        self.bump();
        let (op, op_pos) = self.user_ident()?;
        let mut sources = Vec::new();
        if self.eat('(') {
            loop {
                sources.push(self.user_ident()?);
                if self.eat(')') {
                    break;
                }
                self.expect(',')?;
            }
        }
        self.expect_tok(Tok::ArrowOpen)?;
        let (action, action_pos) = self.user_ident()?;
        self.expect_tok(Tok::ArrowClose)?;
        let target = self.sum()?;
        self.eat(';');
        self.expect('}')?;
        Ok(RawRule {
            pos,
            name: rule_name,
            binders,
            positive,
            negative,
            op,
            op_pos,
            sources,
            action,
            action_pos,
            target,
        })
    }

    fn sum(&mut self) -> Result<RawSum, SpecError> {
        let mut items = vec![self.summand()?];
        while self.eat('+') {
            items.push(self.summand()?);
        }
        Ok(items)
    }

    fn summand(&mut self) -> Result<(Option<(Rational, Pos)>, Raw), SpecError> {
        if let Tok::Number(_) = self.peek() {
            let pos = self.pos();
            let q = self.rational()?;
            self.expect('*')?;
            return Ok((Some((q, pos)), self.primary()?));
        }
        Ok((None, self.primary()?))
    }

    fn rational(&mut self) -> Result<Rational, SpecError> {
        let (tok, pos) = self.bump();
        let Tok::Number(mut text) = tok else {
            return Err(SpecError::Syntax { pos, msg: "expected a number".into() });
        };
        if self.peek() == &Tok::Punct('/') && matches!(self.peek2(), Tok::Number(_)) {
            self.bump();
            if let (Tok::Number(d), _) = self.bump() {
                text = format!("{text}/{d}");
            }
        }
        parse_rational(&text).map_err(|e| SpecError::Syntax { pos, msg: e.to_string() })
    }

    fn primary(&mut self) -> Result<Raw, SpecError> {
        if self.eat('(') {
            let inner = self.sum()?;
            self.expect(')')?;
            return Ok(Raw::Paren(inner));
        }
        let (n, pos) = self.ident()?;
        if KEYWORDS.contains(&n.as_str()) && n != "delta" {
            return Err(SpecError::Syntax { pos, msg: format!("`{n}` is a reserved word") });
        }
        let args = if self.eat('(') {
            let mut args = Vec::new();
            if !self.eat(')') {
                loop {
                    args.push(self.sum()?);
                    if self.eat(')') {
                        break;
                    }
                    self.expect(',')?;
                }
            }
            Some(args)
        } else {
            None
        };
        Ok(Raw::Ident { name: n, pos, args })
    }
}

struct Ctx<'a> {
    ops: &'a BTreeMap<Name, usize>,
    terms: &'a BTreeMap<Name, StateTerm>,
}

impl Ctx<'_> {
    fn arity_check(&self, op: &str, pos: Pos, found: usize) -> Result<(), SpecError> {
        let expected = self.ops[op];
        if expected != found {
            return Err(SpecError::ArityMismatch { pos, op: op.to_string(), expected, found });
        }
        Ok(())
    }

    fn state(&self, sum: &RawSum) -> Result<StateTerm, SpecError> {
        match sum.as_slice() {
            [(None, raw)] => self.state_primary(raw),
            _ => Err(SpecError::Syntax {
                pos: sum.first().map(|(_, r)| raw_pos(r)).unwrap_or_default(),
                msg: "a convex combination is not a state term".into(),
            }),
        }
    }

    fn state_primary(&self, raw: &Raw) -> Result<StateTerm, SpecError> {
        match raw {
            Raw::Paren(inner) => self.state(inner),
            Raw::Ident { name: n, pos, args } => {
                if n == "delta" {
                    return Err(SpecError::Syntax { pos: *pos, msg: "`delta` is not a state term".into() });
                }
                match args {
                    Some(args) => {
                        if !self.ops.contains_key(n.as_str()) {
                            return Err(SpecError::UndeclaredSymbol { pos: *pos, what: "operator", name: n.clone() });
                        }
                        self.arity_check(n, *pos, args.len())?;
                        let args = args.iter().map(|a| self.state(a)).collect::<Result<Vec<_>, _>>()?;
                        Ok(StateTerm::app(n, args))
                    }
                    None if self.ops.contains_key(n.as_str()) => {
                        self.arity_check(n, *pos, 0)?;
                        Ok(StateTerm::constant(n))
                    }
                    None => Ok(self.terms.get(n.as_str()).cloned().unwrap_or_else(|| StateTerm::var(n))),
                }
            }
        }
    }

    fn dist(&self, sum: &RawSum) -> Result<DistTerm, SpecError> {
        if let [(None, raw)] = sum.as_slice() {
            return self.dist_primary(raw);
        }
        let mut items = Vec::new();
        for (w, raw) in sum {
            let Some((q, _)) = w else {
                return Err(SpecError::Syntax { pos: raw_pos(raw), msg: "summand needs a weight `q*`".into() });
            };
            items.push((q.clone(), self.dist_primary(raw)?));
        }
        let pos = sum[0].0.as_ref().map(|(_, p)| *p).unwrap_or_default();
        DistTerm::convex(items).map_err(|e| SpecError::Term { pos, msg: e.to_string() })
    }

    fn dist_primary(&self, raw: &Raw) -> Result<DistTerm, SpecError> {
        match raw {
            Raw::Paren(inner) => self.dist(inner),
            Raw::Ident { name: n, pos, args } => match args {
                Some(args) if n == "delta" => {
                    if args.len() != 1 {
                        return Err(SpecError::ArityMismatch {
                            pos: *pos,
                            op: "delta".into(),
                            expected: 1,
                            found: args.len(),
                        });
                    }
                    Ok(DistTerm::dirac(self.state(&args[0])?))
                }
                Some(args) => {
                    if !self.ops.contains_key(n.as_str()) {
                        return Err(SpecError::UndeclaredSymbol { pos: *pos, what: "operator", name: n.clone() });
                    }
                    self.arity_check(n, *pos, args.len())?;
                    let args = args.iter().map(|a| self.dist(a)).collect::<Result<Vec<_>, _>>()?;
                    Ok(DistTerm::app(n, args))
                }
                None if n == "delta" => Err(SpecError::Syntax { pos: *pos, msg: "`delta` needs an argument".into() }),
                None if self.ops.contains_key(n.as_str()) => {
                    self.arity_check(n, *pos, 0)?;
                    Ok(DistTerm::app(n, Vec::new()))
                }
                None if self.terms.contains_key(n.as_str()) => {
                    Err(SpecError::Syntax { pos: *pos, msg: format!("`{n}` names a state term; write delta({n})") })
                }
                None => Ok(DistTerm::var(n)),
            },
        }
    }
}

fn resolve_document(items: Vec<Item>) -> Result<TemplateDocument, SpecError> {
    let mut actions = BTreeSet::new();
    let mut ops: BTreeMap<Name, usize> = BTreeMap::new();
    let mut set_exprs = Vec::new();
    let mut names: BTreeSet<String> = BTreeSet::new();
    let mut claim = |n: &str, pos: Pos| {
        if names.insert(n.to_string()) {
            Ok(())
        } else {
            Err(SpecError::Duplicate { pos, name: n.to_string() })
        }
    };
    for item in &items {
        match item {
            Item::Actions(list) => {
                for (a, pos) in list {
                    claim(a, *pos)?;
                    actions.insert(name(a));
                }
            }
            Item::Op(n, pos, arity) => {
                claim(n, *pos)?;
                ops.insert(name(n), *arity);
            }
            Item::Set(n, pos, e) => {
                claim(n, *pos)?;
                set_exprs.push((name(n), e.clone()));
            }
            Item::Term(n, pos, _) => claim(n, *pos)?,
            Item::Rule(_) => {}
        }
    }
    let mut sets = BTreeMap::new();
    for (n, e) in set_exprs {
        let value = e.eval(&actions, &sets)?;
        sets.insert(n, value);
    }
    let mut terms = BTreeMap::new();
    for item in &items {
        if let Item::Term(n, _, body) = item {
            let t = Ctx { ops: &ops, terms: &terms }.state(body)?;
            terms.insert(name(n), t);
        }
    }
    let ctx = Ctx { ops: &ops, terms: &terms };
    let mut templates = Vec::new();
    for item in items {
        if let Item::Rule(r) = item {
            templates.push(resolve_rule(&ctx, r)?);
        }
    }
    Ok(TemplateDocument { signature: Signature { operators: ops, actions }, sets, templates, terms })
}

fn resolve_rule(ctx: &Ctx<'_>, r: RawRule) -> Result<RuleTemplate, SpecError> {
    if !ctx.ops.contains_key(r.op.as_str()) {
        return Err(SpecError::UndeclaredSymbol { pos: r.op_pos, what: "operator", name: r.op });
    }
    ctx.arity_check(&r.op, r.op_pos, r.sources.len())?;
    for (x, pos) in &r.sources {
        if ctx.ops.contains_key(x.as_str()) {
            return Err(SpecError::Syntax { pos: *pos, msg: format!("source variable `{x}` is an operator name") });
        }
    }
    let target = ctx.dist(&r.target)?;
    let mut action_positions = Vec::new();
    let positive = r
        .positive
        .iter()
        .map(|(x, _, a, apos, mu)| {
            action_positions.push(*apos);
            (name(x), name(a), name(mu))
        })
        .collect();
    let negative = r
        .negative
        .iter()
        .map(|(x, _, b, bpos)| {
            action_positions.push(*bpos);
            (name(x), name(b))
        })
        .collect();
    action_positions.push(r.action_pos);
    Ok(RuleTemplate {
        pos: r.pos,
        binders: r.binders.into_iter().map(|(v, e)| (name(&v), e)).collect(),
        rule: RuleCandidate {
            name: name(&r.name),
            op: name(&r.op),
            sources: r.sources.iter().map(|(x, _)| name(x)).collect(),
            positive,
            negative,
            action: name(&r.action),
            target,
        },
        action_positions,
    })
}
