//! Tokenizer for Python source, including INDENT/DEDENT synthesis and
//! implicit line joining inside brackets.

use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Name(String),
    /// Numeric literal, raw source text.
    Number(String),
    Str(StrToken),
    Op(&'static str),
    Newline,
    Indent,
    Dedent,
    EndMarker,
}

/// One string literal as written: lowercase prefix letters, body between
/// the quotes (escapes not yet processed).
#[derive(Debug, Clone, PartialEq)]
pub struct StrToken {
    pub prefix: String,
    pub body: String,
    pub quote: char,
    pub triple: bool,
}

impl StrToken {
    pub fn is_raw(&self) -> bool {
        self.prefix.contains('r')
    }
    pub fn is_bytes(&self) -> bool {
        self.prefix.contains('b')
    }
    pub fn is_fstring(&self) -> bool {
        self.prefix.contains('f')
    }

    /// The literal as it appeared in the source.
    pub fn source_text(&self) -> String {
        let q: String = if self.triple {
            std::iter::repeat_n(self.quote, 3).collect()
        } else {
            self.quote.to_string()
        };
        format!("{}{q}{}{q}", self.prefix, self.body)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

const OPERATORS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "<<", ">>", "<=", ">=", "==", "!=",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@=", "+", "-", "*", "/", "%", "@", "&", "|",
    "^", "~", "<", ">", "(", ")", "[", "]", "{", "}", ",", ":", ".", ";", "=", "!",
];

pub fn tokenize(source: &str) -> Result<Vec<Token>, ParseError> {
    Lexer::new(source).run()
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    line_start: usize,
    indents: Vec<usize>,
    depth: usize,
    tokens: Vec<Token>,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src,
            pos: 0,
            line: 1,
            line_start: 0,
            indents: vec![0],
            depth: 0,
            tokens: Vec::new(),
        }
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            col: self.pos - self.line_start + 1,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(offset)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.line_start = self.pos;
        }
        Some(c)
    }

    fn push(&mut self, tok: Tok, line: usize, col: usize) {
        self.tokens.push(Token { tok, line, col });
    }

    fn run(mut self) -> Result<Vec<Token>, ParseError> {
        let mut at_line_start = true;
        loop {
            if at_line_start && self.depth == 0 {
                if !self.handle_indentation()? {
                    break;
                }
                at_line_start = false;
            }
            let Some(c) = self.peek() else { break };
            let (line, col) = (self.line, self.pos - self.line_start + 1);
            match c {
                ' ' | '\t' | '\x0c' | '\r' => {
                    self.bump();
                }
                '#' => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                '\\' => {
                    self.bump();
                    if self.peek() == Some('\r') {
                        self.bump();
                    }
                    if self.bump() != Some('\n') {
                        return Err(self.err("unexpected character after line continuation"));
                    }
                }
                '\n' => {
                    self.bump();
                    if self.depth == 0 {
                        self.push(Tok::Newline, line, col);
                        at_line_start = true;
                    }
                }
                c if c.is_ascii_digit()
                    || (c == '.' && self.peek_at(1).is_some_and(|d| d.is_ascii_digit())) =>
                {
                    let text = self.number()?;
                    self.push(Tok::Number(text), line, col);
                }
                c if is_ident_start(c) => {
                    if let Some(s) = self.try_string()? {
                        self.push(Tok::Str(s), line, col);
                    } else {
                        let start = self.pos;
                        while self.peek().is_some_and(is_ident_continue) {
                            self.bump();
                        }
                        let name = self.src[start..self.pos].to_string();
                        self.push(Tok::Name(name), line, col);
                    }
                }
                '"' | '\'' => {
                    let s = self.string(String::new())?;
                    self.push(Tok::Str(s), line, col);
                }
                _ => {
                    let rest = &self.src[self.pos..];
                    let Some(op) = OPERATORS.iter().find(|op| rest.starts_with(**op)) else {
                        return Err(self.err(format!("unexpected character {c:?}")));
                    };
                    match *op {
                        "(" | "[" | "{" => self.depth += 1,
                        ")" | "]" | "}" => {
                            if self.depth == 0 {
                                return Err(self.err(format!("unmatched {op:?}")));
                            }
                            self.depth -= 1;
                        }
                        _ => {}
                    }
                    self.pos += op.len();
                    self.push(Tok::Op(op), line, col);
                }
            }
        }
        if self.depth > 0 {
            return Err(self.err("unexpected end of input inside brackets"));
        }
        let (line, col) = (self.line, self.pos - self.line_start + 1);
        if !matches!(
            self.tokens.last().map(|t| &t.tok),
            None | Some(Tok::Newline) | Some(Tok::Dedent)
        ) {
            self.push(Tok::Newline, line, col);
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            self.push(Tok::Dedent, line, col);
        }
        self.push(Tok::EndMarker, line, col);
        Ok(self.tokens)
    }

    /// Consumes leading whitespace of a logical line, skipping blank and
    /// comment-only lines. Returns false at end of input.
    fn handle_indentation(&mut self) -> Result<bool, ParseError> {
        loop {
            let mut width = 0usize;
            while let Some(c) = self.peek() {
                match c {
                    ' ' => width += 1,
                    '\t' => width = (width / 8 + 1) * 8,
                    '\x0c' => width = 0,
                    _ => break,
                }
                self.bump();
            }
            match self.peek() {
                None => return Ok(false),
                Some('\n') => {
                    self.bump();
                    continue;
                }
                Some('\r') if self.peek_at(1) == Some('\n') => {
                    self.bump();
                    self.bump();
                    continue;
                }
                Some('#') => {
                    while self.peek().is_some_and(|c| c != '\n') {
                        self.bump();
                    }
                    continue;
                }
                Some('\\') => return Ok(true),
                Some(_) => {}
            }
            let (line, col) = (self.line, self.pos - self.line_start + 1);
            let current = *self.indents.last().expect("indent stack never empty");
            if width > current {
                self.indents.push(width);
                self.push(Tok::Indent, line, col);
            } else {
                while width < *self.indents.last().expect("indent stack never empty") {
                    self.indents.pop();
                    self.push(Tok::Dedent, line, col);
                }
                if width != *self.indents.last().expect("indent stack never empty") {
                    return Err(self.err("unindent does not match any outer indentation level"));
                }
            }
            return Ok(true);
        }
    }

    fn number(&mut self) -> Result<String, ParseError> {
        let start = self.pos;
        let digits = |lx: &mut Self, pred: fn(char) -> bool| {
            while lx.peek().is_some_and(|c| pred(c) || c == '_') {
                lx.bump();
            }
        };
        if self.peek() == Some('0') && self.peek_at(1).is_some_and(|c| "xXoObB".contains(c)) {
            self.bump();
            let kind = self.bump().expect("checked").to_ascii_lowercase();
            let before = self.pos;
            match kind {
                'x' => digits(self, |c| c.is_ascii_hexdigit()),
                'o' => digits(self, |c| ('0'..='7').contains(&c)),
                _ => digits(self, |c| c == '0' || c == '1'),
            }
            if self.pos == before {
                return Err(self.err("invalid numeric literal"));
            }
        } else {
            digits(self, |c| c.is_ascii_digit());
            if self.peek() == Some('.') {
                self.bump();
                digits(self, |c| c.is_ascii_digit());
            }
            if self.peek().is_some_and(|c| c == 'e' || c == 'E') {
                let sign = self.peek_at(1).is_some_and(|c| c == '+' || c == '-');
                let digit_at = if sign { 2 } else { 1 };
                if self.peek_at(digit_at).is_some_and(|c| c.is_ascii_digit()) {
                    self.bump();
                    if sign {
                        self.bump();
                    }
                    digits(self, |c| c.is_ascii_digit());
                }
            }
            if self.peek().is_some_and(|c| c == 'j' || c == 'J') {
                self.bump();
            }
        }
        if self.peek().is_some_and(is_ident_continue) {
            return Err(self.err("invalid numeric literal"));
        }
        Ok(self.src[start..self.pos].to_string())
    }

    /// A string literal with a prefix (`r"..."`, `f'...'`), if one starts here.
    fn try_string(&mut self) -> Result<Option<StrToken>, ParseError> {
        let rest = &self.src[self.pos..];
        let prefix_len = rest
            .chars()
            .take(3)
            .take_while(|c| "rRbBuUfF".contains(*c))
            .count();
        if prefix_len == 0 || prefix_len > 2 {
            return Ok(None);
        }
        if !matches!(rest[prefix_len..].chars().next(), Some('"' | '\'')) {
            return Ok(None);
        }
        let prefix = rest[..prefix_len].to_ascii_lowercase();
        let valid = matches!(
            prefix.as_str(),
            "r" | "u" | "b" | "f" | "br" | "rb" | "fr" | "rf"
        );
        if !valid {
            return Ok(None);
        }
        self.pos += prefix_len;
        self.string(prefix).map(Some)
    }

    fn string(&mut self, prefix: String) -> Result<StrToken, ParseError> {
        let quote = self.bump().expect("caller checked quote");
        let triple = self.peek() == Some(quote) && self.peek_at(1) == Some(quote);
        if triple {
            self.bump();
            self.bump();
        }
        let start = self.pos;
        loop {
            let Some(c) = self.peek() else {
                return Err(self.err("unterminated string literal"));
            };
            if c == '\\' {
                self.bump();
                if self.bump().is_none() {
                    return Err(self.err("unterminated string literal"));
                }
                continue;
            }
            if c == '\n' && !triple {
                return Err(self.err("unterminated string literal"));
            }
            if c == quote {
                if !triple {
                    let body = self.src[start..self.pos].to_string();
                    self.bump();
                    return Ok(StrToken {
                        prefix,
                        body,
                        quote,
                        triple,
                    });
                }
                if self.peek_at(1) == Some(quote) && self.peek_at(2) == Some(quote) {
                    let body = self.src[start..self.pos].to_string();
                    self.bump();
                    self.bump();
                    self.bump();
                    return Ok(StrToken {
                        prefix,
                        body,
                        quote,
                        triple,
                    });
                }
            }
            self.bump();
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c == '_' || c.is_alphabetic()
}

fn is_ident_continue(c: char) -> bool {
    c == '_' || c.is_alphanumeric()
}
