//! Tokenizer for `.iop` specifications. `--` starts a line comment.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    // punctuation and operators
    Arrow,      // ->
    ExtCh,      // []
    IntCh,      // |~|
    Ileave,     // |||
    LParSync,   // [|
    RParSync,   // |]
    LSetBar,    // {|
    RSetBar,    // |}
    LRename,    // [[
    RRename,    // ]]
    RenameTo,   // <-
    Bar,        // |
    FRefine,    // [F=
    BRefine,    // [B=
    FEquiv,     // =F
    InheritCvg, // <-cvg
    InheritEcvg, // <-ecvg
    Backslash,  // \
    Semi,       // ;
    Amp,        // &
    At,         // @
    Colon,      // :
    Comma,      // ,
    Dot,        // .
    DotDot,     // ..
    Query,      // ?
    Bang,       // !
    LParen,
    RParen,
    LBrace,
    RBrace,
    Assign,     // =
    EqEq,       // ==
    NotEq,      // !=
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Percent,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(i) => write!(f, "`{i}`"),
            Tok::Str(s) => write!(f, "\"{s}\""),
            t => {
                let s = match t {
                    Tok::Arrow => "->",
                    Tok::ExtCh => "[]",
                    Tok::IntCh => "|~|",
                    Tok::Ileave => "|||",
                    Tok::LParSync => "[|",
                    Tok::RParSync => "|]",
                    Tok::LSetBar => "{|",
                    Tok::RSetBar => "|}",
                    Tok::LRename => "[[",
                    Tok::RRename => "]]",
                    Tok::RenameTo => "<-",
                    Tok::Bar => "|",
                    Tok::FRefine => "[F=",
                    Tok::BRefine => "[B=",
                    Tok::FEquiv => "=F",
                    Tok::InheritCvg => "<-cvg",
                    Tok::InheritEcvg => "<-ecvg",
                    Tok::Backslash => "\\",
                    Tok::Semi => ";",
                    Tok::Amp => "&",
                    Tok::At => "@",
                    Tok::Colon => ":",
                    Tok::Comma => ",",
                    Tok::Dot => ".",
                    Tok::DotDot => "..",
                    Tok::Query => "?",
                    Tok::Bang => "!",
                    Tok::LParen => "(",
                    Tok::RParen => ")",
                    Tok::LBrace => "{",
                    Tok::RBrace => "}",
                    Tok::Assign => "=",
                    Tok::EqEq => "==",
                    Tok::NotEq => "!=",
                    Tok::Lt => "<",
                    Tok::Le => "<=",
                    Tok::Gt => ">",
                    Tok::Ge => ">=",
                    Tok::Plus => "+",
                    Tok::Minus => "-",
                    Tok::Star => "*",
                    Tok::Percent => "%",
                    Tok::Eof => "end of input",
                    _ => unreachable!(),
                };
                write!(f, "`{s}`")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

pub struct LexError {
    pub pos: Pos,
    pub message: String,
}

pub fn tokenize(src: &str) -> (Vec<Token>, Vec<LexError>) {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut errs = Vec::new();
    let mut i = 0;
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! push {
        ($tok:expr, $len:expr, $pos:expr) => {{
            toks.push(Token { tok: $tok, pos: $pos });
            i += $len;
            col += $len as u32;
        }};
    }

    while i < bytes.len() {
        let c = bytes[i];
        let pos = Pos { line, col };
        match c {
            b'\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            b' ' | b'\t' | b'\r' => {
                i += 1;
                col += 1;
            }
            b'-' if bytes.get(i + 1) == Some(&b'-') => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'-' if bytes.get(i + 1) == Some(&b'>') => push!(Tok::Arrow, 2, pos),
            b'-' => push!(Tok::Minus, 1, pos),
            b'"' => {
                let start = i + 1;
                let mut j = start;
                while j < bytes.len() && bytes[j] != b'"' && bytes[j] != b'\n' {
                    j += 1;
                }
                if bytes.get(j) == Some(&b'"') {
                    let s = std::str::from_utf8(&bytes[start..j]).unwrap_or("").to_string();
                    toks.push(Token { tok: Tok::Str(s), pos });
                    col += (j + 1 - i) as u32;
                    i = j + 1;
                } else {
                    errs.push(LexError {
                        pos,
                        message: "unterminated string literal".into(),
                    });
                    i = j;
                }
            }
            b'[' => {
                if bytes.get(i + 1) == Some(&b']') {
                    push!(Tok::ExtCh, 2, pos)
                } else if bytes.get(i + 1) == Some(&b'|') {
                    push!(Tok::LParSync, 2, pos)
                } else if bytes.get(i + 1) == Some(&b'[') {
                    push!(Tok::LRename, 2, pos)
                } else if bytes.get(i + 1) == Some(&b'F') && bytes.get(i + 2) == Some(&b'=') {
                    push!(Tok::FRefine, 3, pos)
                } else if bytes.get(i + 1) == Some(&b'B') && bytes.get(i + 2) == Some(&b'=') {
                    push!(Tok::BRefine, 3, pos)
                } else {
                    errs.push(LexError {
                        pos,
                        message: "stray `[`".into(),
                    });
                    i += 1;
                    col += 1;
                }
            }
            b']' => {
                if bytes.get(i + 1) == Some(&b']') {
                    push!(Tok::RRename, 2, pos)
                } else {
                    errs.push(LexError {
                        pos,
                        message: "stray `]`".into(),
                    });
                    i += 1;
                    col += 1;
                }
            }
            b'|' => {
                if bytes.get(i + 1) == Some(&b'~') && bytes.get(i + 2) == Some(&b'|') {
                    push!(Tok::IntCh, 3, pos)
                } else if bytes.get(i + 1) == Some(&b'|') && bytes.get(i + 2) == Some(&b'|') {
                    push!(Tok::Ileave, 3, pos)
                } else if bytes.get(i + 1) == Some(&b']') {
                    push!(Tok::RParSync, 2, pos)
                } else if bytes.get(i + 1) == Some(&b'}') {
                    push!(Tok::RSetBar, 2, pos)
                } else {
                    push!(Tok::Bar, 1, pos)
                }
            }
            b'{' => {
                if bytes.get(i + 1) == Some(&b'|') {
                    push!(Tok::LSetBar, 2, pos)
                } else {
                    push!(Tok::LBrace, 1, pos)
                }
            }
            b'}' => push!(Tok::RBrace, 1, pos),
            b'<' => {
                if bytes.get(i + 1) == Some(&b'-') {
                    // `<-`, `<-cvg`, `<-ecvg`
                    let rest = &bytes[i + 2..];
                    if rest.starts_with(b"ecvg") {
                        push!(Tok::InheritEcvg, 6, pos)
                    } else if rest.starts_with(b"cvg") {
                        push!(Tok::InheritCvg, 5, pos)
                    } else {
                        push!(Tok::RenameTo, 2, pos)
                    }
                } else if bytes.get(i + 1) == Some(&b'=') {
                    push!(Tok::Le, 2, pos)
                } else {
                    push!(Tok::Lt, 1, pos)
                }
            }
            b'>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    push!(Tok::Ge, 2, pos)
                } else {
                    push!(Tok::Gt, 1, pos)
                }
            }
            b'=' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    push!(Tok::EqEq, 2, pos)
                } else if bytes.get(i + 1) == Some(&b'F')
                    && !bytes
                        .get(i + 2)
                        .is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_')
                {
                    push!(Tok::FEquiv, 2, pos)
                } else {
                    push!(Tok::Assign, 1, pos)
                }
            }
            b'!' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    push!(Tok::NotEq, 2, pos)
                } else {
                    push!(Tok::Bang, 1, pos)
                }
            }
            b'.' => {
                if bytes.get(i + 1) == Some(&b'.') {
                    push!(Tok::DotDot, 2, pos)
                } else {
                    push!(Tok::Dot, 1, pos)
                }
            }
            b'\\' => push!(Tok::Backslash, 1, pos),
            b';' => push!(Tok::Semi, 1, pos),
            b'&' => push!(Tok::Amp, 1, pos),
            b'@' => push!(Tok::At, 1, pos),
            b':' => push!(Tok::Colon, 1, pos),
            b',' => push!(Tok::Comma, 1, pos),
            b'?' => push!(Tok::Query, 1, pos),
            b'(' => push!(Tok::LParen, 1, pos),
            b')' => push!(Tok::RParen, 1, pos),
            b'+' => push!(Tok::Plus, 1, pos),
            b'*' => push!(Tok::Star, 1, pos),
            b'%' => push!(Tok::Percent, 1, pos),
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let text = std::str::from_utf8(&bytes[start..i]).unwrap();
                match text.parse::<i64>() {
                    Ok(n) => toks.push(Token { tok: Tok::Int(n), pos }),
                    Err(_) => errs.push(LexError {
                        pos,
                        message: format!("integer literal `{text}` out of range"),
                    }),
                }
                col += (i - start) as u32;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'\'')
                {
                    i += 1;
                }
                let text = std::str::from_utf8(&bytes[start..i]).unwrap().to_string();
                toks.push(Token {
                    tok: Tok::Ident(text),
                    pos,
                });
                col += (i - start) as u32;
            }
            other => {
                errs.push(LexError {
                    pos,
                    message: format!("unexpected character `{}`", other as char),
                });
                i += 1;
                col += 1;
            }
        }
    }
    toks.push(Token {
        tok: Tok::Eof,
        pos: Pos { line, col },
    });
    (toks, errs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<Tok> {
        let (toks, errs) = tokenize(src);
        assert!(errs.is_empty(), "lex errors: {:?}", errs.len());
        toks.into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn operators_lex_greedily() {
        let ts = kinds("P [] Q |~| R ||| S [| {| c |} |] T");
        assert!(ts.contains(&Tok::ExtCh));
        assert!(ts.contains(&Tok::IntCh));
        assert!(ts.contains(&Tok::Ileave));
        assert!(ts.contains(&Tok::LParSync));
        assert!(ts.contains(&Tok::LSetBar));
        assert!(ts.contains(&Tok::RSetBar));
        assert!(ts.contains(&Tok::RParSync));
    }

    #[test]
    fn comments_and_positions() {
        let (toks, errs) = tokenize("a -- comment ->\nb");
        assert!(errs.is_empty());
        assert_eq!(toks.len(), 3); // a, b, eof
        assert_eq!(toks[1].pos.line, 2);
        assert_eq!(toks[1].pos.col, 1);
    }

    #[test]
    fn assertion_operators() {
        let ts = kinds("A [F= B [B= C <-cvg D <-ecvg E =F F");
        assert!(ts.contains(&Tok::FRefine));
        assert!(ts.contains(&Tok::BRefine));
        assert!(ts.contains(&Tok::InheritCvg));
        assert!(ts.contains(&Tok::InheritEcvg));
        assert!(ts.contains(&Tok::FEquiv));
    }

    #[test]
    fn arrow_vs_minus_vs_comment() {
        let ts = kinds("a -> b - 1");
        assert_eq!(
            ts,
            vec![
                Tok::Ident("a".into()),
                Tok::Arrow,
                Tok::Ident("b".into()),
                Tok::Minus,
                Tok::Int(1),
                Tok::Eof
            ]
        );
    }
}
