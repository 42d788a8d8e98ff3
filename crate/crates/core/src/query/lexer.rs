use super::QueryError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(super) enum Tok {
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Colon,
    Comma,
    Dot,
    Eq,
    Ne,
    Dash,
    /// `->`
    ArrowRight,
    /// `<-`
    ArrowLeft,
    Ident(String),
    Str(String),
    Int(i64),
    Eof,
}

impl Tok {
    pub(super) fn describe(&self) -> String {
        match self {
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Ne => "`<>`".into(),
            Tok::Dash => "`-`".into(),
            Tok::ArrowRight => "`->`".into(),
            Tok::ArrowLeft => "`<-`".into(),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(s) => format!("string '{s}'"),
            Tok::Int(i) => format!("integer {i}"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(super) struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

fn err(line: usize, column: usize, expected: &[&str], found: String) -> QueryError {
    QueryError::Syntax {
        line,
        column,
        expected: expected.iter().map(|s| s.to_string()).collect(),
        found,
    }
}

pub(super) fn lex(text: &str) -> Result<Vec<Spanned>, QueryError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let mut push = |tok: Tok, width: usize, i: &mut usize, col: &mut usize| {
            out.push(Spanned { tok, line: l0, column: c0 });
            *i += width;
            *col += width;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
            }
            '(' => push(Tok::LParen, 1, &mut i, &mut col),
            ')' => push(Tok::RParen, 1, &mut i, &mut col),
            '[' => push(Tok::LBracket, 1, &mut i, &mut col),
            ']' => push(Tok::RBracket, 1, &mut i, &mut col),
            '{' => push(Tok::LBrace, 1, &mut i, &mut col),
            '}' => push(Tok::RBrace, 1, &mut i, &mut col),
            ':' => push(Tok::Colon, 1, &mut i, &mut col),
            ',' => push(Tok::Comma, 1, &mut i, &mut col),
            '.' => push(Tok::Dot, 1, &mut i, &mut col),
            '=' => push(Tok::Eq, 1, &mut i, &mut col),
            '-' if chars.get(i + 1) == Some(&'>') => push(Tok::ArrowRight, 2, &mut i, &mut col),
            '-' => push(Tok::Dash, 1, &mut i, &mut col),
            '<' if chars.get(i + 1) == Some(&'>') => push(Tok::Ne, 2, &mut i, &mut col),
            '<' if chars.get(i + 1) == Some(&'-') => push(Tok::ArrowLeft, 2, &mut i, &mut col),
            '\'' => {
                let mut s = String::new();
                let mut j = i + 1;
                let mut width = 1;
                loop {
                    match chars.get(j) {
                        None => return Err(err(l0, c0, &["closing `'`"], "end of input".into())),
                        Some('\\') if matches!(chars.get(j + 1), Some('\'') | Some('\\')) => {
                            s.push(chars[j + 1]);
                            j += 2;
                            width += 2;
                        }
                        Some('\'') => {
                            width += 1;
                            break;
                        }
                        Some('\n') => return Err(err(l0, c0, &["closing `'`"], "newline".into())),
                        Some(&ch) => {
                            s.push(ch);
                            j += 1;
                            width += 1;
                        }
                    }
                }
                push(Tok::Str(s), width, &mut i, &mut col);
            }
            c if c.is_ascii_digit() => {
                let start = i;
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let digits: String = chars[start..j].iter().collect();
                let n = digits
                    .parse::<i64>()
                    .map_err(|_| err(l0, c0, &["integer"], format!("`{digits}`")))?;
                push(Tok::Int(n), j - start, &mut i, &mut col);
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let word: String = chars[start..j].iter().collect();
                push(Tok::Ident(word), j - start, &mut i, &mut col);
            }
            other => return Err(err(l0, c0, &["token"], format!("`{other}`"))),
        }
    }
    out.push(Spanned { tok: Tok::Eof, line, column: col });
    Ok(out)
}
