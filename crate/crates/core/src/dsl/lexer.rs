use crate::error::{Error, Result};
use crate::rational::Rational;

/// 1-based line and column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl Default for Pos {
    fn default() -> Self {
        Pos { line: 1, column: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Number(Rational, String),
    Semi,
    Plus,
    ParBar,
    Bar,
    LBracket,
    RBracket,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Arrow,
    Star,
    Eq,
    Ge,
    Le,
    Bang,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(_, s) => format!("number `{s}`"),
            Tok::Eof => "end of input".into(),
            t => format!("`{}`", symbol(t)),
        }
    }
}

fn symbol(t: &Tok) -> &'static str {
    match t {
        Tok::Semi => ";",
        Tok::Plus => "+",
        Tok::ParBar => "||",
        Tok::Bar => "|",
        Tok::LBracket => "[",
        Tok::RBracket => "]",
        Tok::LParen => "(",
        Tok::RParen => ")",
        Tok::LBrace => "{",
        Tok::RBrace => "}",
        Tok::Comma => ",",
        Tok::Arrow => "->",
        Tok::Star => "*",
        Tok::Eq => "=",
        Tok::Ge => ">=",
        Tok::Le => "<=",
        Tok::Bang => "!",
        _ => "?",
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

pub(crate) fn syntax(pos: Pos, message: impl Into<String>) -> Error {
    Error::Syntax { line: pos.line, column: pos.column, message: message.into() }
}

/// Splits source text into tokens. `#` starts a comment.
pub fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, column: col };
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
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i + 1 < chars.len() && (chars[i] == '/' || chars[i] == '.') && chars[i + 1].is_ascii_digit() {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i].is_alphabetic() || chars[i] == '_') {
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                Tok::Ident(chars[start..i].iter().collect())
            } else {
                let text: String = chars[start..i].iter().collect();
                let r: Rational = text.parse().map_err(|_| syntax(pos, format!("bad number `{text}`")))?;
                Tok::Number(r, text)
            }
        } else if c.is_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else {
            let next = chars.get(i + 1).copied();
            let (t, w) = match (c, next) {
                ('|', Some('|')) => (Tok::ParBar, 2),
                ('-', Some('>')) => (Tok::Arrow, 2),
                ('>', Some('=')) => (Tok::Ge, 2),
                ('<', Some('=')) => (Tok::Le, 2),
                ('|', _) => (Tok::Bar, 1),
                (';', _) => (Tok::Semi, 1),
                ('+', _) => (Tok::Plus, 1),
                ('[', _) => (Tok::LBracket, 1),
                (']', _) => (Tok::RBracket, 1),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                ('{', _) => (Tok::LBrace, 1),
                ('}', _) => (Tok::RBrace, 1),
                (',', _) => (Tok::Comma, 1),
                ('*', _) => (Tok::Star, 1),
                ('=', _) => (Tok::Eq, 1),
                ('!', _) => (Tok::Bang, 1),
                _ => return Err(syntax(pos, format!("unexpected character `{c}`"))),
            };
            i += w;
            t
        };
        col += i - start;
        out.push(Token { tok, pos });
    }
    out.push(Token { tok: Tok::Eof, pos: Pos { line, column: col } });
    Ok(out)
}
