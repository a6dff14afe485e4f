use super::SpecError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Number(f64),
    Prop,
    Req,
    In,
    True,
    False,
    Inf,
    Xor,
    TimedTrigger,
    Next,
    Finally,
    Globally,
    Until,
    Define,
    Semi,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Bang,
    Amp,
    Pipe,
    Arrow,
    Minus,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    Ne,
    Eq,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(x) => format!("number `{x}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::Prop => "prop",
            Tok::Req => "req",
            Tok::In => "in",
            Tok::True => "true",
            Tok::False => "false",
            Tok::Inf => "inf",
            Tok::Xor => "xor",
            Tok::TimedTrigger => "timedTrigger",
            Tok::Next => "X",
            Tok::Finally => "F",
            Tok::Globally => "G",
            Tok::Until => "U",
            Tok::Define => ":=",
            Tok::Semi => ";",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
            Tok::Bang => "!",
            Tok::Amp => "&",
            Tok::Pipe => "|",
            Tok::Arrow => "->",
            Tok::Minus => "-",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::EqEq => "==",
            Tok::Ne => "!=",
            Tok::Eq => "=",
            Tok::Ident(_) | Tok::Number(_) | Tok::Eof => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
    /// Character offset into the source.
    pub offset: usize,
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, SpecError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut k, mut line, mut col) = (0usize, 1usize, 1usize);
    while k < chars.len() {
        let c = chars[k];
        let (start_line, start_col) = (line, col);
        let mut push = |tok: Tok, len: usize, k: &mut usize, col: &mut usize| {
            out.push(Token {
                tok,
                line: start_line,
                column: start_col,
                offset: *k,
            });
            *k += len;
            *col += len;
        };
        let peek = chars.get(k + 1).copied();
        match c {
            '\n' => {
                k += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                k += 1;
                col += 1;
            }
            '#' => {
                while k < chars.len() && chars[k] != '\n' {
                    k += 1;
                }
            }
            ':' if peek == Some('=') => push(Tok::Define, 2, &mut k, &mut col),
            '-' if peek == Some('>') => push(Tok::Arrow, 2, &mut k, &mut col),
            '<' if peek == Some('=') => push(Tok::Le, 2, &mut k, &mut col),
            '>' if peek == Some('=') => push(Tok::Ge, 2, &mut k, &mut col),
            '=' if peek == Some('=') => push(Tok::EqEq, 2, &mut k, &mut col),
            '!' if peek == Some('=') => push(Tok::Ne, 2, &mut k, &mut col),
            ';' => push(Tok::Semi, 1, &mut k, &mut col),
            '(' => push(Tok::LParen, 1, &mut k, &mut col),
            ')' => push(Tok::RParen, 1, &mut k, &mut col),
            '[' => push(Tok::LBracket, 1, &mut k, &mut col),
            ']' => push(Tok::RBracket, 1, &mut k, &mut col),
            ',' => push(Tok::Comma, 1, &mut k, &mut col),
            '!' => push(Tok::Bang, 1, &mut k, &mut col),
            '&' => push(Tok::Amp, 1, &mut k, &mut col),
            '|' => push(Tok::Pipe, 1, &mut k, &mut col),
            '-' => push(Tok::Minus, 1, &mut k, &mut col),
            '<' => push(Tok::Lt, 1, &mut k, &mut col),
            '>' => push(Tok::Gt, 1, &mut k, &mut col),
            '=' => push(Tok::Eq, 1, &mut k, &mut col),
            c if c.is_ascii_digit() || (c == '.' && peek.is_some_and(|d| d.is_ascii_digit())) => {
                let len = number_len(&chars[k..]);
                let lexeme: String = chars[k..k + len].iter().collect();
                let value = lexeme.parse::<f64>().map_err(|_| {
                    SpecError::syntax(
                        start_line,
                        start_col,
                        format!("malformed number `{lexeme}`"),
                    )
                })?;
                push(Tok::Number(value), len, &mut k, &mut col);
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let len = chars[k..]
                    .iter()
                    .take_while(|c| c.is_ascii_alphanumeric() || **c == '_' || **c == '.')
                    .count();
                let word: String = chars[k..k + len].iter().collect();
                let tok = match word.as_str() {
                    "prop" => Tok::Prop,
                    "req" => Tok::Req,
                    "in" => Tok::In,
                    "true" => Tok::True,
                    "false" => Tok::False,
                    "inf" => Tok::Inf,
                    "xor" => Tok::Xor,
                    "timedTrigger" => Tok::TimedTrigger,
                    "X" => Tok::Next,
                    "F" => Tok::Finally,
                    "G" => Tok::Globally,
                    "U" => Tok::Until,
                    _ => Tok::Ident(word),
                };
                push(tok, len, &mut k, &mut col);
            }
            other => {
                return Err(SpecError::syntax(
                    start_line,
                    start_col,
                    format!("unexpected character `{other}`"),
                ))
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
        offset: chars.len(),
    });
    Ok(out)
}

fn number_len(chars: &[char]) -> usize {
    let digits = |from: usize| {
        chars[from..]
            .iter()
            .take_while(|c| c.is_ascii_digit())
            .count()
    };
    let mut len = digits(0);
    if chars.get(len) == Some(&'.') {
        len += 1 + digits(len + 1);
    }
    if matches!(chars.get(len), Some('e' | 'E')) {
        let sign = usize::from(matches!(chars.get(len + 1), Some('+' | '-')));
        let exp = digits(len + 1 + sign);
        if exp > 0 {
            len += 1 + sign + exp;
        }
    }
    len
}
