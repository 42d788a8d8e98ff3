use std::collections::BTreeSet;

use super::lexer::{lex, Spanned, Tok};
use super::{CmpOp, Direction, Expr, Item, Literal, NodePat, OrderBy, Pattern, Query, QueryError, Step};

const KEYWORDS: &[&str] = &[
    "MATCH", "WHERE", "RETURN", "ORDER", "BY", "ASC", "DESC", "LIMIT", "AND", "OR", "NOT", "EXISTS",
];

fn is_keyword(s: &str) -> bool {
    KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(s))
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &[&str]) -> QueryError {
        let s = &self.toks[self.pos];
        QueryError::Syntax {
            line: s.line,
            column: s.column,
            expected: expected.iter().map(|e| e.to_string()).collect(),
            found: s.tok.describe(),
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s.eq_ignore_ascii_case(kw))
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), QueryError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.unexpected(&[kw]))
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), QueryError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&[&tok.describe()]))
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    /// Identifier that is not a reserved word.
    fn ident(&mut self, what: &str) -> Result<String, QueryError> {
        match self.peek() {
            Tok::Ident(s) if !is_keyword(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected(&[what])),
        }
    }

    fn query(&mut self) -> Result<Query, QueryError> {
        self.expect_kw("MATCH")?;
        let mut patterns = vec![self.pattern()?];
        while self.eat(&Tok::Comma) {
            patterns.push(self.pattern()?);
        }
        let filter = if self.eat_kw("WHERE") { Some(self.or_expr()?) } else { None };
        if !self.is_kw("RETURN") {
            return Err(self.unexpected(if filter.is_some() {
                &["AND", "OR", "RETURN"]
            } else {
                &["`,`", "`-`", "`<-`", "WHERE", "RETURN"]
            }));
        }
        self.bump();
        let mut returns = vec![self.item()?];
        while self.eat(&Tok::Comma) {
            returns.push(self.item()?);
        }
        let order = if self.eat_kw("ORDER") {
            self.expect_kw("BY")?;
            let item = self.item()?;
            let descending = if self.eat_kw("DESC") {
                true
            } else {
                self.eat_kw("ASC");
                false
            };
            Some(OrderBy { item, descending })
        } else {
            None
        };
        let limit = if self.eat_kw("LIMIT") {
            match self.peek().clone() {
                Tok::Int(n) if n >= 0 => {
                    self.bump();
                    Some(n as u64)
                }
                _ => return Err(self.unexpected(&["integer"])),
            }
        } else {
            None
        };
        if *self.peek() != Tok::Eof {
            let mut expected = vec!["end of input"];
            if order.is_none() && limit.is_none() {
                expected.extend(["`,`", "ORDER", "LIMIT"]);
            } else if limit.is_none() {
                expected.push("LIMIT");
            }
            return Err(self.unexpected(&expected));
        }
        Ok(Query {
            patterns,
            filter,
            returns,
            order,
            limit,
        })
    }

    fn pattern(&mut self) -> Result<Pattern, QueryError> {
        let start = self.node()?;
        let mut steps = Vec::new();
        while matches!(self.peek(), Tok::Dash | Tok::ArrowLeft) {
            let step = self.step()?;
            steps.push((step, self.node()?));
        }
        Ok(Pattern { start, steps })
    }

    fn node(&mut self) -> Result<NodePat, QueryError> {
        self.expect(Tok::LParen)?;
        let var = match self.peek() {
            Tok::Ident(s) if !is_keyword(s) => Some(self.ident("variable")?),
            _ => None,
        };
        let label = if self.eat(&Tok::Colon) { Some(self.ident("label")?) } else { None };
        let prop = if self.eat(&Tok::LBrace) {
            let key = self.ident("property")?;
            self.expect(Tok::Colon)?;
            let value = match self.peek().clone() {
                Tok::Str(s) => s,
                _ => return Err(self.unexpected(&["string"])),
            };
            self.bump();
            self.expect(Tok::RBrace)?;
            Some((key, value))
        } else {
            None
        };
        if *self.peek() != Tok::RParen {
            let mut expected = vec!["`)`"];
            if prop.is_none() {
                expected.insert(0, "`{`");
                if label.is_none() {
                    expected.insert(0, "`:`");
                }
            }
            return Err(self.unexpected(&expected));
        }
        self.bump();
        Ok(NodePat { var, label, prop })
    }

    fn rel_body(&mut self) -> Result<Option<String>, QueryError> {
        self.expect(Tok::LBracket)?;
        let rel = if self.eat(&Tok::Colon) { Some(self.ident("relation type")?) } else { None };
        if *self.peek() != Tok::RBracket {
            return Err(self.unexpected(if rel.is_some() { &["`]`"] } else { &["`:`", "`]`"] }));
        }
        self.bump();
        Ok(rel)
    }

    fn step(&mut self) -> Result<Step, QueryError> {
        if self.eat(&Tok::ArrowLeft) {
            let rel = self.rel_body()?;
            self.expect(Tok::Dash)?;
            return Ok(Step { rel, dir: Direction::In });
        }
        self.expect(Tok::Dash)?;
        let rel = self.rel_body()?;
        let dir = match self.peek() {
            Tok::ArrowRight => Direction::Out,
            Tok::Dash => Direction::Either,
            _ => return Err(self.unexpected(&["`->`", "`-`"])),
        };
        self.bump();
        Ok(Step { rel, dir })
    }

    fn or_expr(&mut self) -> Result<Expr, QueryError> {
        let mut e = self.and_expr()?;
        while self.eat_kw("OR") {
            e = Expr::Or(Box::new(e), Box::new(self.and_expr()?));
        }
        Ok(e)
    }

    fn and_expr(&mut self) -> Result<Expr, QueryError> {
        let mut e = self.term()?;
        while self.eat_kw("AND") {
            e = Expr::And(Box::new(e), Box::new(self.term()?));
        }
        Ok(e)
    }

    fn term(&mut self) -> Result<Expr, QueryError> {
        if self.eat(&Tok::LParen) {
            let e = self.or_expr()?;
            if *self.peek() != Tok::RParen {
                return Err(self.unexpected(&["AND", "OR", "`)`"]));
            }
            self.bump();
            return Ok(e);
        }
        if self.eat_kw("NOT") {
            self.expect_kw("EXISTS")?;
            self.expect(Tok::LParen)?;
            let p = self.pattern()?;
            if *self.peek() != Tok::RParen {
                return Err(self.unexpected(&["`-`", "`<-`", "`)`"]));
            }
            self.bump();
            return Ok(Expr::NotExists(p));
        }
        let var = match self.peek() {
            Tok::Ident(s) if !is_keyword(s) => self.ident("variable")?,
            _ => return Err(self.unexpected(&["variable", "NOT", "`(`"])),
        };
        self.expect(Tok::Dot)?;
        let prop = self.ident("property")?;
        let op = match self.peek() {
            Tok::Eq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            _ => return Err(self.unexpected(&["`=`", "`<>`"])),
        };
        self.bump();
        let value = match self.peek().clone() {
            Tok::Str(s) => Literal::Str(s),
            Tok::Int(i) => Literal::Int(i),
            _ => return Err(self.unexpected(&["string", "integer"])),
        };
        self.bump();
        Ok(Expr::Cmp { var, prop, op, value })
    }

    fn item(&mut self) -> Result<Item, QueryError> {
        let is_count = |t: &Tok| matches!(t, Tok::Ident(s) if s.eq_ignore_ascii_case("count"));
        if is_count(self.peek()) && *self.peek_at(1) == Tok::LParen {
            self.bump();
            self.bump();
            if is_count(self.peek()) && *self.peek_at(1) == Tok::LParen {
                let s = &self.toks[self.pos];
                return Err(QueryError::NestedAggregate {
                    line: s.line,
                    column: s.column,
                });
            }
            let v = self.ident("variable")?;
            self.expect(Tok::RParen)?;
            return Ok(Item::Count(v));
        }
        let v = self.ident("return item")?;
        if self.eat(&Tok::Dot) {
            let p = self.ident("property")?;
            return Ok(Item::Prop(v, p));
        }
        Ok(Item::Var(v))
    }
}

fn check_bound(e: &Expr, bound: &BTreeSet<&str>) -> Result<(), QueryError> {
    match e {
        Expr::Cmp { var, .. } if !bound.contains(var.as_str()) => Err(QueryError::UnboundVariable(var.clone())),
        Expr::Cmp { .. } | Expr::NotExists(_) => Ok(()),
        Expr::And(a, b) | Expr::Or(a, b) => {
            check_bound(a, bound)?;
            check_bound(b, bound)
        }
    }
}

/// Parses MSQL text; the result is checked for unbound variables and for
/// ORDER BY items that are not returned.
pub fn parse(text: &str) -> Result<Query, QueryError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let q = p.query()?;
    let bound: BTreeSet<&str> = q
        .patterns
        .iter()
        .flat_map(|p| p.nodes())
        .filter_map(|n| n.var.as_deref())
        .collect();
    if let Some(e) = &q.filter {
        check_bound(e, &bound)?;
    }
    for item in &q.returns {
        if !bound.contains(item.var()) {
            return Err(QueryError::UnboundVariable(item.var().to_string()));
        }
    }
    if let Some(o) = &q.order {
        if !q.returns.contains(&o.item) {
            return Err(QueryError::InvalidOrder(o.item.to_string()));
        }
    }
    Ok(q)
}
