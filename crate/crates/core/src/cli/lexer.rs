use std::fmt;

use super::{ParseError, Span};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Eq,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    /// `;` or a line break outside brackets.
    End,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "'{s}'"),
            Tok::Int(s) => write!(f, "'{s}'"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::LBracket => f.write_str("'['"),
            Tok::RBracket => f.write_str("']'"),
            Tok::Comma => f.write_str("','"),
            Tok::Eq => f.write_str("'='"),
            Tok::Plus => f.write_str("'+'"),
            Tok::Minus => f.write_str("'-'"),
            Tok::Star => f.write_str("'*'"),
            Tok::Slash => f.write_str("'/'"),
            Tok::Caret => f.write_str("'^'"),
            Tok::End => f.write_str("end of statement"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
    /// Byte range in the source.
    pub start: usize,
    pub end: usize,
}

pub fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let (mut line, mut col) = (1usize, 1usize);
    let mut chars = src.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        let span = Span { line, col };
        let single = |tok| Token { tok, span, start: i, end: i + c.len_utf8() };
        match c {
            '\n' => {
                chars.next();
                if depth == 0 {
                    out.push(single(Tok::End));
                }
                line += 1;
                col = 1;
                continue;
            }
            '#' => {
                while let Some(&(_, c)) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
                continue;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' || c.is_ascii_digit() => {
                let digits = c.is_ascii_digit();
                let mut end = i;
                while let Some(&(j, d)) = chars.peek() {
                    let more = if digits { d.is_ascii_digit() } else { d.is_ascii_alphanumeric() || d == '_' };
                    if !more {
                        break;
                    }
                    end = j + d.len_utf8();
                    chars.next();
                    col += 1;
                }
                let text = src[i..end].to_string();
                let tok = if digits { Tok::Int(text) } else { Tok::Ident(text) };
                out.push(Token { tok, span, start: i, end });
                continue;
            }
            _ => {}
        }
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ',' => Tok::Comma,
            '=' => Tok::Eq,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            ';' => Tok::End,
            other => {
                return Err(ParseError {
                    span,
                    expected: vec!["a token".into()],
                    found: format!("character '{other}'"),
                })
            }
        };
        match tok {
            Tok::LParen | Tok::LBracket => depth += 1,
            Tok::RParen | Tok::RBracket => depth = depth.saturating_sub(1),
            _ => {}
        }
        out.push(single(tok));
        chars.next();
        col += 1;
    }
    out.push(Token { tok: Tok::Eof, span: Span { line, col }, start: src.len(), end: src.len() });
    Ok(out)
}
