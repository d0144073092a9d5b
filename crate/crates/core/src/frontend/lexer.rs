//! Tokenizer for the concrete syntax.

use std::fmt;

use crate::ast::Span;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Num(f64),
    Kw(Kw),
    LParen,
    RParen,
    LBrack,
    RBrack,
    LBrace,
    RBrace,
    Comma,
    Slash,
    Bar,
    Backslash,
    Arrow,
    Assign,
    Eq,
    Neq,
    Tilde,
    Bottom,
    Eof,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kw {
    Cons,
    Prim,
    Fun,
    Case,
    Of,
    Let,
    In,
    Where,
    Delta,
    Gamma,
    Phi,
    Exists,
    And,
    Or,
    True,
    False,
}

impl Kw {
    fn from_word(w: &str) -> Option<Kw> {
        Some(match w {
            "cons" => Kw::Cons,
            "prim" => Kw::Prim,
            "fun" => Kw::Fun,
            "case" => Kw::Case,
            "of" => Kw::Of,
            "let" => Kw::Let,
            "in" => Kw::In,
            "where" => Kw::Where,
            "delta" => Kw::Delta,
            "gamma" => Kw::Gamma,
            "phi" => Kw::Phi,
            "exists" => Kw::Exists,
            "and" => Kw::And,
            "or" => Kw::Or,
            "true" => Kw::True,
            "false" => Kw::False,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Kw::Cons => "cons",
            Kw::Prim => "prim",
            Kw::Fun => "fun",
            Kw::Case => "case",
            Kw::Of => "of",
            Kw::Let => "let",
            Kw::In => "in",
            Kw::Where => "where",
            Kw::Delta => "delta",
            Kw::Gamma => "gamma",
            Kw::Phi => "phi",
            Kw::Exists => "exists",
            Kw::And => "and",
            Kw::Or => "or",
            Kw::True => "true",
            Kw::False => "false",
        }
    }
}

/// Whether `w` is reserved and cannot be used as an identifier.
pub fn is_keyword(w: &str) -> bool {
    Kw::from_word(w).is_some()
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Num(n) => write!(f, "number `{n}`"),
            Tok::Kw(k) => write!(f, "`{}`", k.as_str()),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBrack => f.write_str("`[`"),
            Tok::RBrack => f.write_str("`]`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Slash => f.write_str("`/`"),
            Tok::Bar => f.write_str("`|`"),
            Tok::Backslash => f.write_str("`\\`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Assign => f.write_str("`:=`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Neq => f.write_str("`!=`"),
            Tok::Tilde => f.write_str("`~`"),
            Tok::Bottom => f.write_str("`_|_`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {message}")]
pub struct LexError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

fn ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_' || c == '%'
}

fn ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\'' || c == '%'
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, LexError> {
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1u32;
    let mut col = 1u32;
    let at = |i: usize| chars.get(i).map(|&(_, c)| c);
    let offset = |i: usize| chars.get(i).map_or(src.len(), |&(o, _)| o);

    while i < chars.len() {
        let c = chars[i].1;
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '-' && at(i + 1) == Some('-') {
            while i < chars.len() && chars[i].1 != '\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let (sline, scol) = (line, col);
        let tok = if c == '_' && at(i + 1) == Some('|') && at(i + 2) == Some('_') {
            i += 3;
            Tok::Bottom
        } else if ident_start(c) {
            while i < chars.len() && ident_continue(chars[i].1) {
                i += 1;
            }
            let word = &src[offset(start)..offset(i)];
            match Kw::from_word(word) {
                Some(k) => Tok::Kw(k),
                None => Tok::Ident(word.to_string()),
            }
        } else if c.is_ascii_digit() || (c == '-' && at(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            i += 1;
            while at(i).is_some_and(|d| d.is_ascii_digit()) {
                i += 1;
            }
            if at(i) == Some('.') && at(i + 1).is_some_and(|d| d.is_ascii_digit()) {
                i += 1;
                while at(i).is_some_and(|d| d.is_ascii_digit()) {
                    i += 1;
                }
            }
            if matches!(at(i), Some('e' | 'E')) {
                let mut j = i + 1;
                if matches!(at(j), Some('+' | '-')) {
                    j += 1;
                }
                if at(j).is_some_and(|d| d.is_ascii_digit()) {
                    i = j;
                    while at(i).is_some_and(|d| d.is_ascii_digit()) {
                        i += 1;
                    }
                }
            }
            let text = &src[offset(start)..offset(i)];
            let n: f64 = text.parse().map_err(|_| LexError {
                line: sline,
                col: scol,
                message: format!("malformed number `{text}`"),
            })?;
            Tok::Num(n)
        } else {
            let two = |a: char, b: char| c == a && at(i + 1) == Some(b);
            let (t, len) = if two('-', '>') {
                (Tok::Arrow, 2)
            } else if two(':', '=') {
                (Tok::Assign, 2)
            } else if two('!', '=') {
                (Tok::Neq, 2)
            } else {
                let t = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '[' => Tok::LBrack,
                    ']' => Tok::RBrack,
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    ',' => Tok::Comma,
                    '/' => Tok::Slash,
                    '|' => Tok::Bar,
                    '\\' => Tok::Backslash,
                    '=' => Tok::Eq,
                    '~' => Tok::Tilde,
                    other => {
                        return Err(LexError {
                            line,
                            col,
                            message: format!("unexpected character `{other}`"),
                        })
                    }
                };
                (t, 1)
            };
            i += len;
            t
        };
        col += (i - start) as u32;
        out.push(Token {
            tok,
            span: Span { start: offset(start), end: offset(i), line: sline, col: scol },
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span { start: src.len(), end: src.len(), line, col },
    });
    Ok(out)
}
