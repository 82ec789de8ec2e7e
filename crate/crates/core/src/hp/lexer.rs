use super::parse::ParseError;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Num(f64),
    /// `::=`
    ProgDef,
    /// `:==`
    FormDef,
    /// `:=`
    Assign,
    Prime,
    Eq,
    Ne,
    Ge,
    Gt,
    Le,
    Lt,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBrack,
    RBrack,
    Semi,
    /// `++`
    Choice,
    Amp,
    Bar,
    Bang,
    Arrow,
    Quest,
    Comma,
    Dot,
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
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
        let start_col = col;
        let peek = |k: usize| chars.get(i + k).copied();
        let (tok, len) = if c.is_ascii_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            (Tok::Ident(chars[i..j].iter().collect()), j - i)
        } else if c.is_ascii_digit() || (c == '.' && peek(1).is_some_and(|d| d.is_ascii_digit())) {
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            if j < chars.len() && chars[j] == '.' && chars.get(j + 1).is_some_and(|d| d.is_ascii_digit()) {
                j += 1;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
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
            let v: f64 = text.parse().map_err(|_| ParseError::syntax(line, col, format!("bad number `{text}`")))?;
            (Tok::Num(v), j - i)
        } else {
            match (c, peek(1), peek(2)) {
                (':', Some(':'), Some('=')) => (Tok::ProgDef, 3),
                (':', Some('='), Some('=')) => (Tok::FormDef, 3),
                (':', Some('='), _) => (Tok::Assign, 2),
                ('!', Some('='), _) => (Tok::Ne, 2),
                ('>', Some('='), _) => (Tok::Ge, 2),
                ('<', Some('='), _) => (Tok::Le, 2),
                ('-', Some('>'), _) => (Tok::Arrow, 2),
                ('+', Some('+'), _) => (Tok::Choice, 2),
                ('\'', _, _) => (Tok::Prime, 1),
                ('=', _, _) => (Tok::Eq, 1),
                ('>', _, _) => (Tok::Gt, 1),
                ('<', _, _) => (Tok::Lt, 1),
                ('+', _, _) => (Tok::Plus, 1),
                ('-', _, _) => (Tok::Minus, 1),
                ('*', _, _) => (Tok::Star, 1),
                ('/', _, _) => (Tok::Slash, 1),
                ('^', _, _) => (Tok::Caret, 1),
                ('(', _, _) => (Tok::LParen, 1),
                (')', _, _) => (Tok::RParen, 1),
                ('{', _, _) => (Tok::LBrace, 1),
                ('}', _, _) => (Tok::RBrace, 1),
                ('[', _, _) => (Tok::LBrack, 1),
                (']', _, _) => (Tok::RBrack, 1),
                (';', _, _) => (Tok::Semi, 1),
                ('&', _, _) => (Tok::Amp, 1),
                ('|', _, _) => (Tok::Bar, 1),
                ('!', _, _) => (Tok::Bang, 1),
                ('?', _, _) => (Tok::Quest, 1),
                (',', _, _) => (Tok::Comma, 1),
                ('.', _, _) => (Tok::Dot, 1),
                _ => return Err(ParseError::syntax(line, col, format!("unexpected character `{c}`"))),
            }
        };
        out.push(Token { tok, line, col: start_col });
        i += len;
        col += len;
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}
