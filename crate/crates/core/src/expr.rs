//! Set-expression parsing.
//!
//! Grammar, with `&` binding tighter than `|`:
//!
//! ```text
//! expr := term ('|' term)*
//! term := atom ('&' atom)*
//! atom := label | '(' expr ')'
//! ```

use thiserror::Error;

use crate::lattice::{Canonical, Element, Frame, Model};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unknown label `{label}` at byte {offset}")]
    UnknownLabel { label: String, offset: usize },
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
}

/// Expression tree over frame labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SetExpr {
    Label(usize),
    Union(Box<SetExpr>, Box<SetExpr>),
    Intersection(Box<SetExpr>, Box<SetExpr>),
}

impl SetExpr {
    /// Free-lattice canonical form.
    pub fn to_element(&self) -> Element {
        match self {
            SetExpr::Label(i) => Element::clause(1 << i),
            SetExpr::Union(a, b) => a.to_element().join(&b.to_element()),
            SetExpr::Intersection(a, b) => a.to_element().meet(&b.to_element()),
        }
    }

    pub fn label_mask(&self) -> u32 {
        match self {
            SetExpr::Label(i) => 1 << i,
            SetExpr::Union(a, b) | SetExpr::Intersection(a, b) => a.label_mask() | b.label_mask(),
        }
    }
}

pub fn parse_expr(text: &str, frame: &Frame) -> Result<SetExpr, ParseError> {
    let mut parser = Parser {
        text,
        pos: 0,
        frame,
    };
    let expr = parser.expr()?;
    parser.skip_ws();
    if parser.pos < text.len() {
        return Err(parser.syntax("unexpected input after expression"));
    }
    Ok(expr)
}

/// c(X) under `model`, with the empty flag.
pub fn canonical_form(expr: &SetExpr, model: &Model) -> Canonical {
    model.canonical(&expr.to_element())
}

/// u(X): the union of every label appearing in the expression.
pub fn disjunctive_form(expr: &SetExpr) -> Element {
    Element::clause(expr.label_mask())
}

pub fn is_empty(element: &Element, model: &Model) -> bool {
    model.is_empty(element)
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
    frame: &'a Frame,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn syntax(&self, message: &str) -> ParseError {
        ParseError::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn expr(&mut self) -> Result<SetExpr, ParseError> {
        let mut left = self.term()?;
        loop {
            self.skip_ws();
            if self.peek() != Some('|') {
                return Ok(left);
            }
            self.pos += 1;
            let right = self.term()?;
            left = SetExpr::Union(Box::new(left), Box::new(right));
        }
    }

    fn term(&mut self) -> Result<SetExpr, ParseError> {
        let mut left = self.atom()?;
        loop {
            self.skip_ws();
            if self.peek() != Some('&') {
                return Ok(left);
            }
            self.pos += 1;
            let right = self.atom()?;
            left = SetExpr::Intersection(Box::new(left), Box::new(right));
        }
    }

    fn atom(&mut self) -> Result<SetExpr, ParseError> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.syntax("expected a label or `(`")),
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.skip_ws();
                if self.peek() != Some(')') {
                    return Err(self.syntax("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some('|' | '&' | ')') => Err(self.syntax("expected a label or `(`")),
            Some(_) => {
                let start = self.pos;
                while let Some(c) = self.peek() {
                    if c.is_whitespace() || matches!(c, '|' | '&' | '(' | ')') {
                        break;
                    }
                    self.pos += c.len_utf8();
                }
                let label = &self.text[start..self.pos];
                self.frame
                    .index_of(label)
                    .map(SetExpr::Label)
                    .ok_or_else(|| ParseError::UnknownLabel {
                        label: label.to_string(),
                        offset: start,
                    })
            }
        }
    }
}
