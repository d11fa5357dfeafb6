use super::SyntaxError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Num(f64),
    Str(String),
    Ident(String),
    Function,
    If,
    Else,
    While,
    True,
    False,
    Arrow,
    Plus,
    Minus,
    Star,
    Lt,
    EqEq,
    Colon,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Newline,
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub const RESERVED: &[&str] = &["function", "if", "else", "while", "TRUE", "FALSE"];

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '.' || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '.' || c == '_'
}

pub fn lex(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    macro_rules! err {
        ($l:expr, $c:expr, $($arg:tt)*) => {
            return Err(SyntaxError { line: $l, col: $c, msg: format!($($arg)*) })
        };
    }
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let push = |tok: Tok, out: &mut Vec<Token>| out.push(Token { tok, line: tl, col: tc });
        match c {
            '\n' => {
                push(Tok::Newline, &mut out);
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            ' ' | '\t' | '\r' => {}
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '(' => push(Tok::LParen, &mut out),
            ')' => push(Tok::RParen, &mut out),
            '{' => push(Tok::LBrace, &mut out),
            '}' => push(Tok::RBrace, &mut out),
            ',' => push(Tok::Comma, &mut out),
            ';' => push(Tok::Semi, &mut out),
            '+' => push(Tok::Plus, &mut out),
            '*' => push(Tok::Star, &mut out),
            ':' => push(Tok::Colon, &mut out),
            '-' => push(Tok::Minus, &mut out),
            '<' => {
                if chars.get(i + 1) == Some(&'-') {
                    push(Tok::Arrow, &mut out);
                    i += 2;
                    col += 2;
                    continue;
                }
                push(Tok::Lt, &mut out)
            }
            '=' => {
                if chars.get(i + 1) == Some(&'=') {
                    push(Tok::EqEq, &mut out);
                    i += 2;
                    col += 2;
                    continue;
                }
                err!(tl, tc, "unexpected '=' (named arguments are not supported)")
            }
            '"' => {
                let mut s = String::new();
                let mut j = i + 1;
                loop {
                    match chars.get(j) {
                        None | Some('\n') => err!(tl, tc, "unterminated string literal"),
                        Some('"') => break,
                        Some('\\') => {
                            match chars.get(j + 1) {
                                Some('n') => s.push('\n'),
                                Some('t') => s.push('\t'),
                                Some('"') => s.push('"'),
                                Some('\\') => s.push('\\'),
                                _ => err!(tl, tc, "invalid escape in string literal"),
                            }
                            j += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            j += 1;
                        }
                    }
                }
                push(Tok::Str(s), &mut out);
                col += j + 1 - i;
                i = j + 1;
                continue;
            }
            c if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                    j += 1;
                }
                if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                    let mut k = j + 1;
                    if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                        k += 1;
                    }
                    if k < chars.len() && chars[k].is_ascii_digit() {
                        while k < chars.len() && chars[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let text: String = chars[i..j].iter().collect();
                let v: f64 = match text.parse() {
                    Ok(v) => v,
                    Err(_) => err!(tl, tc, "malformed number '{}'", text),
                };
                push(Tok::Num(v), &mut out);
                col += j - i;
                i = j;
                continue;
            }
            c if is_ident_start(c) => {
                let mut j = i;
                while j < chars.len() && is_ident_char(chars[j]) {
                    j += 1;
                }
                let text: String = chars[i..j].iter().collect();
                let tok = match text.as_str() {
                    "function" => Tok::Function,
                    "if" => Tok::If,
                    "else" => Tok::Else,
                    "while" => Tok::While,
                    "TRUE" => Tok::True,
                    "FALSE" => Tok::False,
                    _ => Tok::Ident(text),
                };
                push(tok, &mut out);
                col += j - i;
                i = j;
                continue;
            }
            other => err!(tl, tc, "unexpected character '{}'", other),
        }
        i += 1;
        col += 1;
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}
