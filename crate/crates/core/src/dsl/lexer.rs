//! Tokenizer for the manifold/submersion definition language.

use std::fmt;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Number(f64),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
    Semi,
    Eq,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Number(n) => write!(f, "number {n}"),
            Tok::LBrace => write!(f, "`{{`"),
            Tok::RBrace => write!(f, "`}}`"),
            Tok::LBracket => write!(f, "`[`"),
            Tok::RBracket => write!(f, "`]`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Semi => write!(f, "`;`"),
            Tok::Eq => write!(f, "`=`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Minus => write!(f, "`-`"),
            Tok::Star => write!(f, "`*`"),
            Tok::Slash => write!(f, "`/`"),
            Tok::Caret => write!(f, "`^`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
    pub col: u32,
}

/// A parse or validation diagnostic with source position.
#[derive(Clone, Debug, thiserror::Error, PartialEq)]
#[error("{line}:{col}: {message}")]
pub struct Diagnostic {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl Diagnostic {
    pub fn new(line: u32, col: u32, message: impl Into<String>) -> Self {
        Diagnostic {
            line,
            col,
            message: message.into(),
        }
    }
}

pub fn lex(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut out = Vec::new();
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    let mut chars = src.chars().peekable();

    macro_rules! push {
        ($tok:expr, $l:expr, $c:expr) => {
            out.push(Token {
                tok: $tok,
                line: $l,
                col: $c,
            })
        };
    }

    while let Some(&c) = chars.peek() {
        let (l0, c0) = (line, col);
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            ' ' | '\t' | '\r' => {
                chars.next();
                col += 1;
            }
            '#' => {
                // comment to end of line
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
            }
            '{' | '}' | '[' | ']' | '(' | ')' | ',' | ';' | '=' | '+' | '-' | '*' | '/' | '^' => {
                chars.next();
                col += 1;
                let tok = match c {
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    ';' => Tok::Semi,
                    '=' => Tok::Eq,
                    '+' => Tok::Plus,
                    '-' => Tok::Minus,
                    '*' => Tok::Star,
                    '/' => Tok::Slash,
                    _ => Tok::Caret,
                };
                push!(tok, l0, c0);
            }
            c if c.is_ascii_digit() || c == '.' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() || c == '.' {
                        s.push(c);
                        chars.next();
                        col += 1;
                    } else if c == 'e' || c == 'E' {
                        // exponent only if followed by digit or sign+digit
                        let mut ahead = chars.clone();
                        ahead.next();
                        match ahead.peek() {
                            Some(&d) if d.is_ascii_digit() => {
                                s.push(c);
                                chars.next();
                                col += 1;
                            }
                            Some(&('+' | '-')) => {
                                let mut ahead2 = ahead.clone();
                                ahead2.next();
                                if matches!(ahead2.peek(), Some(d) if d.is_ascii_digit()) {
                                    s.push(c);
                                    chars.next();
                                    col += 1;
                                    s.push(chars.next().unwrap());
                                    col += 1;
                                } else {
                                    break;
                                }
                            }
                            _ => break,
                        }
                    } else {
                        break;
                    }
                }
                let n: f64 = s
                    .parse()
                    .map_err(|_| Diagnostic::new(l0, c0, format!("malformed number `{s}`")))?;
                push!(Tok::Number(n), l0, c0);
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(c);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                push!(Tok::Ident(s), l0, c0);
            }
            other => {
                return Err(Diagnostic::new(
                    l0,
                    c0,
                    format!("unexpected character `{other}`"),
                ));
            }
        }
    }
    push!(Tok::Eof, line, col);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_track_lines() {
        let toks = lex("manifold m {\n  dim 2\n}").unwrap();
        assert_eq!(toks[0].tok, Tok::Ident("manifold".into()));
        assert_eq!(toks[3].line, 2);
        assert_eq!(toks[3].tok, Tok::Ident("dim".into()));
    }

    #[test]
    fn numbers_with_exponents() {
        let toks = lex("1e-3 2.5E4 0.5").unwrap();
        assert_eq!(toks[0].tok, Tok::Number(1e-3));
        assert_eq!(toks[1].tok, Tok::Number(2.5e4));
        assert_eq!(toks[2].tok, Tok::Number(0.5));
    }

    #[test]
    fn e_not_followed_by_digit_is_separate() {
        // `2e` must not swallow the identifier-ish suffix; `e` is the Euler constant.
        let toks = lex("2 e").unwrap();
        assert_eq!(toks[0].tok, Tok::Number(2.0));
        assert_eq!(toks[1].tok, Tok::Ident("e".into()));
    }

    #[test]
    fn rejects_unknown_characters() {
        let err = lex("dim @").unwrap_err();
        assert_eq!(err.col, 5);
    }
}
