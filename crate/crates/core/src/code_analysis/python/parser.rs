//! Recursive-descent parser producing [`ast`](super::ast) nodes.

use super::ast::*;
use super::lexer::{tokenize, StrToken, Tok, Token};
use super::ParseError;

/// Nesting bound (brackets, unary chains, blocks) so hostile input cannot
/// exhaust the stack.
const MAX_DEPTH: usize = 100;

const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue",
    "def", "del", "elif", "else", "except", "finally", "for", "from", "global", "if", "import", "in",
    "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try", "while", "with",
    "yield",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

pub fn parse_module(source: &str) -> Result<Module, ParseError> {
    let tokens = tokenize(source)?;
    Parser::new(tokens, 0).module()
}

/// Parses a single expression (as inside parentheses).
pub fn parse_expression(source: &str) -> Result<Expr, ParseError> {
    parse_fragment(source, 0)
}

fn parse_fragment(source: &str, depth: usize) -> Result<Expr, ParseError> {
    let wrapped = format!("({source}\n)");
    let tokens = tokenize(&wrapped)?;
    let mut p = Parser::new(tokens, depth);
    let e = p.atom()?;
    if !matches!(p.peek(), Tok::Newline) {
        return Err(p.err("unexpected trailing tokens in expression"));
    }
    Ok(e)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    depth: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(toks: Vec<Token>, depth: usize) -> Self {
        Parser {
            toks,
            pos: 0,
            depth,
        }
    }

    // ---- token helpers -------------------------------------------------

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_nth(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        let t = &self.toks[self.pos];
        ParseError {
            line: t.line,
            col: t.col,
            message: format!("{} (at {:?})", message.into(), t.tok),
        }
    }

    fn is_op(&self, op: &str) -> bool {
        matches!(self.peek(), Tok::Op(o) if *o == op)
    }

    fn is_op_at(&self, n: usize, op: &str) -> bool {
        matches!(self.peek_nth(n), Tok::Op(o) if *o == op)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Name(n) if n == kw)
    }

    fn is_kw_at(&self, n: usize, kw: &str) -> bool {
        matches!(self.peek_nth(n), Tok::Name(s) if s == kw)
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.is_op(op) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: &str) -> PResult<()> {
        if self.eat_op(op) {
            Ok(())
        } else {
            Err(self.err(format!("expected {op:?}")))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.err(format!("expected keyword {kw:?}")))
        }
    }

    fn expect_name(&mut self) -> PResult<String> {
        match self.peek() {
            Tok::Name(n) if !is_keyword(n) => {
                let n = n.clone();
                self.advance();
                Ok(n)
            }
            _ => Err(self.err("expected identifier")),
        }
    }

    fn nested<T>(&mut self, f: impl FnOnce(&mut Self) -> PResult<T>) -> PResult<T> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.err("too deeply nested"));
        }
        let r = f(self);
        self.depth -= 1;
        r
    }

    fn starts_expression(&self) -> bool {
        match self.peek() {
            Tok::Name(n) => {
                !is_keyword(n)
                    || matches!(
                        n.as_str(),
                        "not" | "lambda" | "await" | "None" | "True" | "False" | "yield"
                    )
            }
            Tok::Number(_) | Tok::Str(_) => true,
            Tok::Op(o) => matches!(*o, "(" | "[" | "{" | "-" | "+" | "~" | "*" | "..." | "**"),
            _ => false,
        }
    }

    fn at_stmt_end(&self) -> bool {
        matches!(self.peek(), Tok::Newline | Tok::EndMarker) || self.is_op(";")
    }

    // ---- statements ----------------------------------------------------

    fn module(mut self) -> PResult<Module> {
        let mut body = Vec::new();
        loop {
            match self.peek() {
                Tok::EndMarker => break,
                Tok::Newline => {
                    self.advance();
                }
                _ => body.extend(self.statement()?),
            }
        }
        Ok(Module { body })
    }

    fn statement(&mut self) -> PResult<Vec<Stmt>> {
        self.nested(|p| {
            let stmt = match p.peek() {
                Tok::Op("@") => p.decorated()?,
                Tok::Name(n) => match n.as_str() {
                    "if" => p.if_stmt()?,
                    "while" => p.while_stmt()?,
                    "for" => p.for_stmt(false)?,
                    "try" => p.try_stmt()?,
                    "with" => p.with_stmt(false)?,
                    "def" => p.funcdef(Vec::new(), false)?,
                    "class" => p.classdef(Vec::new())?,
                    "async" if p.is_kw_at(1, "def") => {
                        p.advance();
                        p.funcdef(Vec::new(), true)?
                    }
                    "async" if p.is_kw_at(1, "for") => {
                        p.advance();
                        p.for_stmt(true)?
                    }
                    "async" if p.is_kw_at(1, "with") => {
                        p.advance();
                        p.with_stmt(true)?
                    }
                    _ => return p.simple_stmts(),
                },
                Tok::Indent => return Err(p.err("unexpected indent")),
                _ => return p.simple_stmts(),
            };
            Ok(vec![stmt])
        })
    }

    fn simple_stmts(&mut self) -> PResult<Vec<Stmt>> {
        let mut out = vec![self.small_stmt()?];
        while self.eat_op(";") {
            if matches!(self.peek(), Tok::Newline | Tok::EndMarker) {
                break;
            }
            out.push(self.small_stmt()?);
        }
        match self.peek() {
            Tok::Newline => {
                self.advance();
                Ok(out)
            }
            Tok::EndMarker => Ok(out),
            _ => Err(self.err("expected end of statement")),
        }
    }

    fn small_stmt(&mut self) -> PResult<Stmt> {
        if let Tok::Name(n) = self.peek() {
            match n.as_str() {
                "pass" => {
                    self.advance();
                    return Ok(Stmt::Pass);
                }
                "break" => {
                    self.advance();
                    return Ok(Stmt::Break);
                }
                "continue" => {
                    self.advance();
                    return Ok(Stmt::Continue);
                }
                "return" => {
                    self.advance();
                    let value = if self.at_stmt_end() {
                        None
                    } else {
                        Some(self.star_expressions()?)
                    };
                    return Ok(Stmt::Return(value));
                }
                "raise" => {
                    self.advance();
                    if self.at_stmt_end() {
                        return Ok(Stmt::Raise {
                            exc: None,
                            cause: None,
                        });
                    }
                    let exc = self.expression()?;
                    let cause = if self.eat_kw("from") {
                        Some(self.expression()?)
                    } else {
                        None
                    };
                    return Ok(Stmt::Raise {
                        exc: Some(exc),
                        cause,
                    });
                }
                "global" | "nonlocal" => {
                    let global = n == "global";
                    self.advance();
                    let mut names = vec![self.expect_name()?];
                    while self.eat_op(",") {
                        names.push(self.expect_name()?);
                    }
                    return Ok(if global {
                        Stmt::Global(names)
                    } else {
                        Stmt::Nonlocal(names)
                    });
                }
                "del" => {
                    self.advance();
                    let mut targets = vec![self.target_item()?];
                    while self.eat_op(",") {
                        if self.at_stmt_end() {
                            break;
                        }
                        targets.push(self.target_item()?);
                    }
                    return Ok(Stmt::Delete(targets));
                }
                "assert" => {
                    self.advance();
                    let test = self.expression()?;
                    let msg = if self.eat_op(",") {
                        Some(self.expression()?)
                    } else {
                        None
                    };
                    return Ok(Stmt::Assert { test, msg });
                }
                "import" => {
                    self.advance();
                    return self.import_names();
                }
                "from" => {
                    self.advance();
                    return self.import_from();
                }
                _ => {}
            }
        }
        self.expr_stmt()
    }

    fn dotted_name(&mut self) -> PResult<String> {
        let mut name = self.expect_name()?;
        while self.eat_op(".") {
            name.push('.');
            name.push_str(&self.expect_name()?);
        }
        Ok(name)
    }

    fn import_names(&mut self) -> PResult<Stmt> {
        let mut names = Vec::new();
        loop {
            let name = self.dotted_name()?;
            let asname = if self.eat_kw("as") {
                Some(self.expect_name()?)
            } else {
                None
            };
            names.push(Alias { name, asname });
            if !self.eat_op(",") {
                break;
            }
        }
        Ok(Stmt::Import(names))
    }

    fn import_from(&mut self) -> PResult<Stmt> {
        let mut level = 0;
        loop {
            if self.eat_op(".") {
                level += 1;
            } else if self.eat_op("...") {
                level += 3;
            } else {
                break;
            }
        }
        let module = if self.is_kw("import") {
            if level == 0 {
                return Err(self.err("expected module name"));
            }
            None
        } else {
            Some(self.dotted_name()?)
        };
        self.expect_kw("import")?;
        if self.eat_op("*") {
            return Ok(Stmt::ImportFrom {
                module,
                names: vec![Alias {
                    name: "*".into(),
                    asname: None,
                }],
                level,
            });
        }
        let parens = self.eat_op("(");
        let mut names = Vec::new();
        loop {
            let name = self.expect_name()?;
            let asname = if self.eat_kw("as") {
                Some(self.expect_name()?)
            } else {
                None
            };
            names.push(Alias { name, asname });
            if !self.eat_op(",") {
                break;
            }
            if parens && self.is_op(")") {
                break;
            }
        }
        if parens {
            self.expect_op(")")?;
        }
        Ok(Stmt::ImportFrom {
            module,
            names,
            level,
        })
    }

    fn assign_value(&mut self) -> PResult<Expr> {
        if self.is_kw("yield") {
            self.yield_expr()
        } else {
            self.star_expressions()
        }
    }

    fn expr_stmt(&mut self) -> PResult<Stmt> {
        let first = self.assign_value()?;
        if let Tok::Op(op) = self.peek() {
            let op = *op;
            if op.len() >= 2 && op.ends_with('=') && !matches!(op, "==" | "!=" | "<=" | ">=") {
                let bin = BinOp::from_symbol(&op[..op.len() - 1])
                    .ok_or_else(|| self.err("bad augmented assignment"))?;
                check_target(&first, false).map_err(|m| self.err(m))?;
                self.advance();
                let value = self.assign_value()?;
                return Ok(Stmt::AugAssign {
                    target: first,
                    op: bin,
                    value,
                });
            }
        }
        if self.eat_op(":") {
            check_target(&first, false).map_err(|m| self.err(m))?;
            let annotation = self.expression()?;
            let value = if self.eat_op("=") {
                Some(self.assign_value()?)
            } else {
                None
            };
            return Ok(Stmt::AnnAssign {
                target: first,
                annotation,
                value,
            });
        }
        if self.is_op("=") {
            let mut exprs = vec![first];
            while self.eat_op("=") {
                exprs.push(self.assign_value()?);
            }
            let value = exprs.pop().expect("at least two");
            for t in &exprs {
                check_target(t, true).map_err(|m| self.err(m))?;
            }
            return Ok(Stmt::Assign {
                targets: exprs,
                value,
            });
        }
        Ok(Stmt::Expr(first))
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect_op(":")?;
        if !matches!(self.peek(), Tok::Newline) {
            return self.simple_stmts();
        }
        self.advance();
        if !matches!(self.peek(), Tok::Indent) {
            return Err(self.err("expected an indented block"));
        }
        self.advance();
        let mut body = Vec::new();
        loop {
            match self.peek() {
                Tok::Dedent => {
                    self.advance();
                    break;
                }
                Tok::EndMarker => break,
                Tok::Newline => {
                    self.advance();
                }
                _ => body.extend(self.statement()?),
            }
        }
        Ok(body)
    }

    fn if_stmt(&mut self) -> PResult<Stmt> {
        self.advance();
        let test = self.named_expression()?;
        let body = self.block()?;
        let orelse = if self.is_kw("elif") {
            vec![self.if_stmt()?]
        } else if self.eat_kw("else") {
            self.block()?
        } else {
            Vec::new()
        };
        Ok(Stmt::If { test, body, orelse })
    }

    fn while_stmt(&mut self) -> PResult<Stmt> {
        self.advance();
        let test = self.named_expression()?;
        let body = self.block()?;
        let orelse = if self.eat_kw("else") {
            self.block()?
        } else {
            Vec::new()
        };
        Ok(Stmt::While { test, body, orelse })
    }

    fn for_stmt(&mut self, is_async: bool) -> PResult<Stmt> {
        self.expect_kw("for")?;
        let target = self.target_list()?;
        self.expect_kw("in")?;
        let iter = self.star_expressions()?;
        let body = self.block()?;
        let orelse = if self.eat_kw("else") {
            self.block()?
        } else {
            Vec::new()
        };
        Ok(Stmt::For {
            is_async,
            target,
            iter,
            body,
            orelse,
        })
    }

    fn with_item(&mut self) -> PResult<WithItem> {
        let context = self.expression()?;
        let vars = if self.eat_kw("as") {
            let t = self.target_item()?;
            check_target(&t, true).map_err(|m| self.err(m))?;
            Some(t)
        } else {
            None
        };
        Ok(WithItem { context, vars })
    }

    fn with_stmt(&mut self, is_async: bool) -> PResult<Stmt> {
        self.expect_kw("with")?;
        // parenthesized item lists: `with (a as b, c as d):`
        if self.is_op("(") {
            let save = self.pos;
            let depth = self.depth;
            let attempt = (|| -> PResult<Vec<WithItem>> {
                self.advance();
                let mut items = vec![self.with_item()?];
                while self.eat_op(",") {
                    if self.is_op(")") {
                        break;
                    }
                    items.push(self.with_item()?);
                }
                self.expect_op(")")?;
                if !self.is_op(":") {
                    return Err(self.err("not a parenthesized with-item list"));
                }
                Ok(items)
            })();
            match attempt {
                Ok(items) => {
                    let body = self.block()?;
                    return Ok(Stmt::With {
                        is_async,
                        items,
                        body,
                    });
                }
                Err(_) => {
                    self.pos = save;
                    self.depth = depth;
                }
            }
        }
        let mut items = vec![self.with_item()?];
        while self.eat_op(",") {
            items.push(self.with_item()?);
        }
        let body = self.block()?;
        Ok(Stmt::With {
            is_async,
            items,
            body,
        })
    }

    fn try_stmt(&mut self) -> PResult<Stmt> {
        self.advance();
        let body = self.block()?;
        let mut handlers = Vec::new();
        let mut star = false;
        while self.eat_kw("except") {
            if self.eat_op("*") {
                star = true;
            }
            let (typ, name) = if self.is_op(":") {
                (None, None)
            } else {
                let t = self.expression()?;
                let t = if self.is_op(",") {
                    let mut items = vec![t];
                    while self.eat_op(",") {
                        items.push(self.expression()?);
                    }
                    Expr::Tuple(items)
                } else {
                    t
                };
                let name = if self.eat_kw("as") {
                    Some(self.expect_name()?)
                } else {
                    None
                };
                (Some(t), name)
            };
            let body = self.block()?;
            handlers.push(Handler { typ, name, body });
        }
        let orelse = if !handlers.is_empty() && self.eat_kw("else") {
            self.block()?
        } else {
            Vec::new()
        };
        let finalbody = if self.eat_kw("finally") {
            self.block()?
        } else {
            Vec::new()
        };
        if handlers.is_empty() && finalbody.is_empty() {
            return Err(self.err("try statement needs except or finally"));
        }
        Ok(Stmt::Try {
            body,
            handlers,
            orelse,
            finalbody,
            star,
        })
    }

    fn decorated(&mut self) -> PResult<Stmt> {
        let mut decorators = Vec::new();
        while self.eat_op("@") {
            decorators.push(self.named_expression()?);
            if !matches!(self.advance(), Tok::Newline) {
                return Err(self.err("expected newline after decorator"));
            }
        }
        if self.is_kw("def") {
            self.funcdef(decorators, false)
        } else if self.is_kw("async") && self.is_kw_at(1, "def") {
            self.advance();
            self.funcdef(decorators, true)
        } else if self.is_kw("class") {
            self.classdef(decorators)
        } else {
            Err(self.err("expected def or class after decorator"))
        }
    }

    fn funcdef(&mut self, decorators: Vec<Expr>, is_async: bool) -> PResult<Stmt> {
        self.expect_kw("def")?;
        let name = self.expect_name()?;
        self.expect_op("(")?;
        let params = self.parameters(")", true)?;
        self.expect_op(")")?;
        let returns = if self.eat_op("->") {
            Some(self.expression()?)
        } else {
            None
        };
        let body = self.block()?;
        Ok(Stmt::FunctionDef(Box::new(FunctionDef {
            is_async,
            decorators,
            name,
            params,
            returns,
            body,
        })))
    }

    fn classdef(&mut self, decorators: Vec<Expr>) -> PResult<Stmt> {
        self.expect_kw("class")?;
        let name = self.expect_name()?;
        let (bases, keywords) = if self.eat_op("(") {
            self.arguments()?
        } else {
            (Vec::new(), Vec::new())
        };
        let body = self.block()?;
        Ok(Stmt::ClassDef(Box::new(ClassDef {
            decorators,
            name,
            bases,
            keywords,
            body,
        })))
    }

    fn param(&mut self, annotations: bool) -> PResult<Param> {
        let name = self.expect_name()?;
        let annotation = if annotations && self.eat_op(":") {
            Some(self.expression()?)
        } else {
            None
        };
        Ok(Param {
            name,
            annotation,
            default: None,
        })
    }

    fn parameters(&mut self, close: &str, annotations: bool) -> PResult<Parameters> {
        let mut params = Parameters::default();
        let mut seen_star = false;
        while !self.is_op(close) {
            if self.eat_op("/") {
                if seen_star || !params.posonly.is_empty() {
                    return Err(self.err("misplaced '/'"));
                }
                params.posonly = std::mem::take(&mut params.args);
            } else if self.eat_op("**") {
                params.kwarg = Some(self.param(annotations)?);
            } else if self.eat_op("*") {
                if seen_star {
                    return Err(self.err("duplicate '*'"));
                }
                seen_star = true;
                if !self.is_op(",") && !self.is_op(close) {
                    params.vararg = Some(self.param(annotations)?);
                }
            } else {
                if params.kwarg.is_some() {
                    return Err(self.err("parameter after **kwargs"));
                }
                let mut p = self.param(annotations)?;
                if self.eat_op("=") {
                    p.default = Some(self.expression()?);
                }
                if seen_star {
                    params.kwonly.push(p);
                } else {
                    params.args.push(p);
                }
            }
            if !self.eat_op(",") {
                break;
            }
        }
        Ok(params)
    }

    // ---- expressions ---------------------------------------------------

    fn star_expressions(&mut self) -> PResult<Expr> {
        let first = self.star_expression()?;
        if !self.is_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if !self.starts_expression() {
                break;
            }
            items.push(self.star_expression()?);
        }
        Ok(Expr::Tuple(items))
    }

    fn star_expression(&mut self) -> PResult<Expr> {
        if self.eat_op("*") {
            Ok(Expr::Starred(Box::new(self.bitwise_or()?)))
        } else {
            self.expression()
        }
    }

    fn star_named_expression(&mut self) -> PResult<Expr> {
        if self.eat_op("*") {
            Ok(Expr::Starred(Box::new(self.bitwise_or()?)))
        } else {
            self.named_expression()
        }
    }

    fn named_expression(&mut self) -> PResult<Expr> {
        if matches!(self.peek(), Tok::Name(n) if !is_keyword(n)) && self.is_op_at(1, ":=") {
            let target = Expr::Name(self.expect_name()?);
            self.advance();
            let value = self.expression()?;
            return Ok(Expr::NamedExpr {
                target: Box::new(target),
                value: Box::new(value),
            });
        }
        self.expression()
    }

    fn expression(&mut self) -> PResult<Expr> {
        self.nested(|p| {
            if p.is_kw("lambda") {
                return p.lambdef();
            }
            let body = p.disjunction()?;
            if p.is_kw("if") {
                p.advance();
                let test = p.disjunction()?;
                p.expect_kw("else")?;
                let orelse = p.expression()?;
                return Ok(Expr::IfExp {
                    test: Box::new(test),
                    body: Box::new(body),
                    orelse: Box::new(orelse),
                });
            }
            Ok(body)
        })
    }

    fn lambdef(&mut self) -> PResult<Expr> {
        self.expect_kw("lambda")?;
        let params = self.parameters(":", false)?;
        self.expect_op(":")?;
        let body = self.expression()?;
        Ok(Expr::Lambda {
            params: Box::new(params),
            body: Box::new(body),
        })
    }

    fn disjunction(&mut self) -> PResult<Expr> {
        let first = self.conjunction()?;
        if !self.is_kw("or") {
            return Ok(first);
        }
        let mut values = vec![first];
        while self.eat_kw("or") {
            values.push(self.conjunction()?);
        }
        Ok(Expr::BoolOp {
            op: BoolOp::Or,
            values,
        })
    }

    fn conjunction(&mut self) -> PResult<Expr> {
        let first = self.inversion()?;
        if !self.is_kw("and") {
            return Ok(first);
        }
        let mut values = vec![first];
        while self.eat_kw("and") {
            values.push(self.inversion()?);
        }
        Ok(Expr::BoolOp {
            op: BoolOp::And,
            values,
        })
    }

    fn inversion(&mut self) -> PResult<Expr> {
        if self.eat_kw("not") {
            let operand = self.nested(|p| p.inversion())?;
            return Ok(Expr::UnaryOp {
                op: UnaryOp::Not,
                operand: Box::new(operand),
            });
        }
        self.comparison()
    }

    fn comp_op(&mut self) -> Option<CmpOp> {
        let op = match self.peek() {
            Tok::Op("==") => CmpOp::Eq,
            Tok::Op("!=") => CmpOp::NotEq,
            Tok::Op("<") => CmpOp::Lt,
            Tok::Op("<=") => CmpOp::LtE,
            Tok::Op(">") => CmpOp::Gt,
            Tok::Op(">=") => CmpOp::GtE,
            Tok::Name(n) if n == "in" => CmpOp::In,
            Tok::Name(n) if n == "not" && self.is_kw_at(1, "in") => {
                self.advance();
                CmpOp::NotIn
            }
            Tok::Name(n) if n == "is" => {
                if self.is_kw_at(1, "not") {
                    self.advance();
                    CmpOp::IsNot
                } else {
                    CmpOp::Is
                }
            }
            _ => return None,
        };
        self.advance();
        Some(op)
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let left = self.bitwise_or()?;
        let mut ops = Vec::new();
        let mut comparators = Vec::new();
        while let Some(op) = self.comp_op() {
            ops.push(op);
            comparators.push(self.bitwise_or()?);
        }
        if ops.is_empty() {
            Ok(left)
        } else {
            Ok(Expr::Compare {
                left: Box::new(left),
                ops,
                comparators,
            })
        }
    }

    fn binary_level(
        &mut self,
        ops: &[&str],
        next: fn(&mut Self) -> PResult<Expr>,
    ) -> PResult<Expr> {
        let mut left = next(self)?;
        while let Tok::Op(o) = self.peek() {
            let o = *o;
            if !ops.contains(&o) {
                break;
            }
            self.advance();
            let right = next(self)?;
            left = Expr::BinOp {
                left: Box::new(left),
                op: BinOp::from_symbol(o).expect("listed operator"),
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn bitwise_or(&mut self) -> PResult<Expr> {
        self.binary_level(&["|"], Self::bitwise_xor)
    }

    fn bitwise_xor(&mut self) -> PResult<Expr> {
        self.binary_level(&["^"], Self::bitwise_and)
    }

    fn bitwise_and(&mut self) -> PResult<Expr> {
        self.binary_level(&["&"], Self::shift_expr)
    }

    fn shift_expr(&mut self) -> PResult<Expr> {
        self.binary_level(&["<<", ">>"], Self::sum)
    }

    fn sum(&mut self) -> PResult<Expr> {
        self.binary_level(&["+", "-"], Self::term)
    }

    fn term(&mut self) -> PResult<Expr> {
        self.binary_level(&["*", "/", "//", "%", "@"], Self::factor)
    }

    fn factor(&mut self) -> PResult<Expr> {
        let op = match self.peek() {
            Tok::Op("+") => UnaryOp::UAdd,
            Tok::Op("-") => UnaryOp::USub,
            Tok::Op("~") => UnaryOp::Invert,
            _ => return self.power(),
        };
        self.advance();
        let operand = self.nested(|p| p.factor())?;
        Ok(Expr::UnaryOp {
            op,
            operand: Box::new(operand),
        })
    }

    fn power(&mut self) -> PResult<Expr> {
        let base = if self.eat_kw("await") {
            Expr::Await(Box::new(self.primary()?))
        } else {
            self.primary()?
        };
        if self.eat_op("**") {
            let exp = self.nested(|p| p.factor())?;
            return Ok(Expr::BinOp {
                left: Box::new(base),
                op: BinOp::Pow,
                right: Box::new(exp),
            });
        }
        Ok(base)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let mut e = self.atom()?;
        loop {
            if self.eat_op(".") {
                let attr = match self.advance() {
                    Tok::Name(n) => n,
                    _ => return Err(self.err("expected attribute name")),
                };
                e = Expr::Attribute {
                    value: Box::new(e),
                    attr,
                };
            } else if self.eat_op("(") {
                let (args, keywords) = self.nested(|p| p.arguments())?;
                e = Expr::Call {
                    func: Box::new(e),
                    args,
                    keywords,
                };
            } else if self.eat_op("[") {
                let index = self.nested(|p| p.slices())?;
                self.expect_op("]")?;
                e = Expr::Subscript {
                    value: Box::new(e),
                    index: Box::new(index),
                };
            } else {
                break;
            }
        }
        Ok(e)
    }

    /// Call arguments after the opening parenthesis, through `)`.
    fn arguments(&mut self) -> PResult<(Vec<Expr>, Vec<Keyword>)> {
        let mut args = Vec::new();
        let mut keywords = Vec::new();
        while !self.is_op(")") {
            if self.eat_op("*") {
                args.push(Expr::Starred(Box::new(self.expression()?)));
            } else if self.eat_op("**") {
                keywords.push(Keyword {
                    arg: None,
                    value: self.expression()?,
                });
            } else if matches!(self.peek(), Tok::Name(n) if !is_keyword(n)) && self.is_op_at(1, "=")
            {
                let arg = self.expect_name()?;
                self.advance();
                keywords.push(Keyword {
                    arg: Some(arg),
                    value: self.expression()?,
                });
            } else {
                let e = self.named_expression()?;
                if self.is_kw("for") || (self.is_kw("async") && self.is_kw_at(1, "for")) {
                    let generators = self.comprehension_clauses()?;
                    args.push(Expr::GeneratorExp {
                        elt: Box::new(e),
                        generators,
                    });
                } else {
                    args.push(e);
                }
            }
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        Ok((args, keywords))
    }

    fn slices(&mut self) -> PResult<Expr> {
        let first = self.slice_item()?;
        if !self.is_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.is_op("]") {
                break;
            }
            items.push(self.slice_item()?);
        }
        Ok(Expr::Tuple(items))
    }

    fn slice_item(&mut self) -> PResult<Expr> {
        let lower = if self.is_op(":") {
            None
        } else {
            Some(self.star_named_expression()?)
        };
        if !self.eat_op(":") {
            return lower.ok_or_else(|| self.err("empty subscript"));
        }
        let bound_end = |p: &Self| p.is_op(":") || p.is_op("]") || p.is_op(",");
        let upper = if bound_end(self) {
            None
        } else {
            Some(Box::new(self.expression()?))
        };
        let step = if self.eat_op(":") {
            if self.is_op("]") || self.is_op(",") {
                None
            } else {
                Some(Box::new(self.expression()?))
            }
        } else {
            None
        };
        Ok(Expr::Slice {
            lower: lower.map(Box::new),
            upper,
            step,
        })
    }

    fn comprehension_clauses(&mut self) -> PResult<Vec<Comprehension>> {
        let mut out = Vec::new();
        loop {
            let is_async = if self.is_kw("async") && self.is_kw_at(1, "for") {
                self.advance();
                true
            } else {
                false
            };
            if !self.eat_kw("for") {
                break;
            }
            let target = self.target_list()?;
            self.expect_kw("in")?;
            let iter = self.disjunction()?;
            let mut ifs = Vec::new();
            while self.eat_kw("if") {
                ifs.push(self.disjunction()?);
            }
            out.push(Comprehension {
                is_async,
                target,
                iter,
                ifs,
            });
        }
        if out.is_empty() {
            return Err(self.err("expected comprehension"));
        }
        Ok(out)
    }

    fn target_item(&mut self) -> PResult<Expr> {
        if self.eat_op("*") {
            Ok(Expr::Starred(Box::new(self.bitwise_or()?)))
        } else {
            self.bitwise_or()
        }
    }

    /// Assignment targets of `for` loops and comprehensions, up to `in`.
    fn target_list(&mut self) -> PResult<Expr> {
        let first = self.target_item()?;
        let target = if self.is_op(",") {
            let mut items = vec![first];
            while self.eat_op(",") {
                if self.is_kw("in") {
                    break;
                }
                items.push(self.target_item()?);
            }
            Expr::Tuple(items)
        } else {
            first
        };
        check_target(&target, true).map_err(|m| self.err(m))?;
        Ok(target)
    }

    fn yield_expr(&mut self) -> PResult<Expr> {
        self.expect_kw("yield")?;
        if self.eat_kw("from") {
            return Ok(Expr::YieldFrom(Box::new(self.expression()?)));
        }
        if self.starts_expression() {
            Ok(Expr::Yield(Some(Box::new(self.star_expressions()?))))
        } else {
            Ok(Expr::Yield(None))
        }
    }

    fn atom(&mut self) -> PResult<Expr> {
        self.nested(|p| p.atom_inner())
    }

    fn atom_inner(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Name(n) => {
                let e = match n.as_str() {
                    "None" => Expr::Constant(Constant::None),
                    "True" => Expr::Constant(Constant::True),
                    "False" => Expr::Constant(Constant::False),
                    _ if is_keyword(&n) => return Err(self.err("unexpected keyword")),
                    _ => Expr::Name(n),
                };
                self.advance();
                Ok(e)
            }
            Tok::Number(text) => {
                self.advance();
                parse_number(&text).map_err(|m| self.err(m))
            }
            Tok::Str(_) => {
                let mut pieces = Vec::new();
                while let Tok::Str(s) = self.peek() {
                    pieces.push(s.clone());
                    self.advance();
                }
                self.strings(&pieces)
            }
            Tok::Op("...") => {
                self.advance();
                Ok(Expr::Constant(Constant::Ellipsis))
            }
            Tok::Op("(") => {
                self.advance();
                if self.eat_op(")") {
                    return Ok(Expr::Tuple(Vec::new()));
                }
                if self.is_kw("yield") {
                    let y = self.yield_expr()?;
                    self.expect_op(")")?;
                    return Ok(y);
                }
                let first = self.star_named_expression()?;
                if self.is_kw("for") || (self.is_kw("async") && self.is_kw_at(1, "for")) {
                    let generators = self.comprehension_clauses()?;
                    self.expect_op(")")?;
                    return Ok(Expr::GeneratorExp {
                        elt: Box::new(first),
                        generators,
                    });
                }
                if self.is_op(",") {
                    let mut items = vec![first];
                    while self.eat_op(",") {
                        if self.is_op(")") {
                            break;
                        }
                        items.push(self.star_named_expression()?);
                    }
                    self.expect_op(")")?;
                    return Ok(Expr::Tuple(items));
                }
                self.expect_op(")")?;
                if matches!(first, Expr::Starred(_)) {
                    return Err(self.err("cannot use starred expression here"));
                }
                Ok(first)
            }
            Tok::Op("[") => {
                self.advance();
                if self.eat_op("]") {
                    return Ok(Expr::List(Vec::new()));
                }
                let first = self.star_named_expression()?;
                if self.is_kw("for") || (self.is_kw("async") && self.is_kw_at(1, "for")) {
                    let generators = self.comprehension_clauses()?;
                    self.expect_op("]")?;
                    return Ok(Expr::ListComp {
                        elt: Box::new(first),
                        generators,
                    });
                }
                let mut items = vec![first];
                while self.eat_op(",") {
                    if self.is_op("]") {
                        break;
                    }
                    items.push(self.star_named_expression()?);
                }
                self.expect_op("]")?;
                Ok(Expr::List(items))
            }
            Tok::Op("{") => {
                self.advance();
                self.brace_atom()
            }
            _ => Err(self.err("expected expression")),
        }
    }

    fn brace_atom(&mut self) -> PResult<Expr> {
        if self.eat_op("}") {
            return Ok(Expr::Dict(Vec::new()));
        }
        let first_entry: (Option<Expr>, Expr) = if self.eat_op("**") {
            (None, self.bitwise_or()?)
        } else {
            let e = self.star_named_expression()?;
            if !self.eat_op(":") {
                // set display or set comprehension
                if self.is_kw("for") || (self.is_kw("async") && self.is_kw_at(1, "for")) {
                    let generators = self.comprehension_clauses()?;
                    self.expect_op("}")?;
                    return Ok(Expr::SetComp {
                        elt: Box::new(e),
                        generators,
                    });
                }
                let mut items = vec![e];
                while self.eat_op(",") {
                    if self.is_op("}") {
                        break;
                    }
                    items.push(self.star_named_expression()?);
                }
                self.expect_op("}")?;
                return Ok(Expr::Set(items));
            }
            let value = self.expression()?;
            if self.is_kw("for") || (self.is_kw("async") && self.is_kw_at(1, "for")) {
                let generators = self.comprehension_clauses()?;
                self.expect_op("}")?;
                return Ok(Expr::DictComp {
                    key: Box::new(e),
                    value: Box::new(value),
                    generators,
                });
            }
            (Some(e), value)
        };
        let mut entries = vec![first_entry];
        while self.eat_op(",") {
            if self.is_op("}") {
                break;
            }
            if self.eat_op("**") {
                entries.push((None, self.bitwise_or()?));
            } else {
                let k = self.expression()?;
                self.expect_op(":")?;
                let v = self.expression()?;
                entries.push((Some(k), v));
            }
        }
        self.expect_op("}")?;
        Ok(Expr::Dict(entries))
    }

    fn strings(&mut self, pieces: &[StrToken]) -> PResult<Expr> {
        let bytes = pieces[0].is_bytes();
        if pieces.iter().any(|p| p.is_bytes() != bytes) {
            return Err(self.err("cannot mix bytes and nonbytes literals"));
        }
        if bytes {
            let mut out = Vec::new();
            for p in pieces {
                out.extend(decode_bytes(&p.body, p.is_raw()).map_err(|m| self.err(m))?);
            }
            return Ok(Expr::Constant(Constant::Bytes(out)));
        }
        let mut parts: Vec<FPart> = Vec::new();
        for p in pieces {
            if p.is_fstring() {
                let fparts = parse_fstring(&p.body, p.is_raw(), self.depth + 1).map_err(|mut e| {
                    e.line = self.toks[self.pos.saturating_sub(1)].line;
                    e
                })?;
                for fp in fparts {
                    push_fpart(&mut parts, fp);
                }
            } else {
                let s = decode_str(&p.body, p.is_raw()).map_err(|m| self.err(m))?;
                push_fpart(&mut parts, FPart::Literal(s));
            }
        }
        Ok(collapse_fparts(parts))
    }
}

fn push_fpart(parts: &mut Vec<FPart>, part: FPart) {
    match (parts.last_mut(), part) {
        (_, FPart::Literal(s)) if s.is_empty() => {}
        (Some(FPart::Literal(prev)), FPart::Literal(s)) => prev.push_str(&s),
        (_, p) => parts.push(p),
    }
}

/// An f-string without replacement fields is an ordinary string constant.
fn collapse_fparts(parts: Vec<FPart>) -> Expr {
    if parts.iter().all(|p| matches!(p, FPart::Literal(_))) {
        let s: String = parts
            .into_iter()
            .map(|p| match p {
                FPart::Literal(s) => s,
                FPart::Field { .. } => unreachable!(),
            })
            .collect();
        Expr::Constant(Constant::Str(s))
    } else {
        Expr::FString(parts)
    }
}

fn check_target(e: &Expr, allow_multi: bool) -> Result<(), String> {
    match e {
        Expr::Name(_) | Expr::Attribute { .. } | Expr::Subscript { .. } => Ok(()),
        Expr::Tuple(items) | Expr::List(items) if allow_multi => {
            items.iter().try_for_each(|i| check_target(i, true))
        }
        Expr::Starred(inner) if allow_multi => check_target(inner, true),
        _ => Err("invalid assignment target".into()),
    }
}

fn parse_number(text: &str) -> Result<Expr, String> {
    let clean: String = text.chars().filter(|c| *c != '_').collect();
    let lower = clean.to_ascii_lowercase();
    if let Some(body) = lower.strip_suffix('j') {
        let v: f64 = body.parse().map_err(|_| format!("invalid imaginary literal {text}"))?;
        return Ok(Expr::Constant(Constant::Imag(v)));
    }
    let radix = match lower.get(..2) {
        Some("0x") => Some(16),
        Some("0o") => Some(8),
        Some("0b") => Some(2),
        _ => None,
    };
    if let Some(radix) = radix {
        let digits = &lower[2..];
        return Ok(Expr::Constant(Constant::Int(
            u128::from_str_radix(digits, radix)
                .map(|v| v.to_string())
                .unwrap_or(lower),
        )));
    }
    if lower.contains(['.', 'e']) {
        let v: f64 = lower.parse().map_err(|_| format!("invalid float literal {text}"))?;
        return Ok(Expr::Constant(Constant::Float(v)));
    }
    if !lower.bytes().all(|b| b.is_ascii_digit()) {
        return Err(format!("invalid integer literal {text}"));
    }
    let trimmed = lower.trim_start_matches('0');
    if trimmed.is_empty() {
        return Ok(Expr::Constant(Constant::Int("0".into())));
    }
    if trimmed.len() != lower.len() {
        return Err(format!("leading zeros in decimal integer literal {text}"));
    }
    Ok(Expr::Constant(Constant::Int(lower)))
}

fn hex_value(chars: &[char]) -> Option<u32> {
    let s: String = chars.iter().collect();
    if s.chars().all(|c| c.is_ascii_hexdigit()) {
        u32::from_str_radix(&s, 16).ok()
    } else {
        None
    }
}

/// Processes backslash escapes of a str literal body.
pub(crate) fn decode_str(body: &str, raw: bool) -> Result<String, String> {
    if raw || !body.contains('\\') {
        return Ok(body.to_string());
    }
    let chars: Vec<char> = body.chars().collect();
    let mut out = String::with_capacity(body.len());
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c != '\\' || i + 1 >= chars.len() {
            out.push(c);
            i += 1;
            continue;
        }
        let e = chars[i + 1];
        i += 2;
        match e {
            '\n' => {}
            '\r' => {
                if chars.get(i) == Some(&'\n') {
                    i += 1;
                }
            }
            '\\' => out.push('\\'),
            '\'' => out.push('\''),
            '"' => out.push('"'),
            'a' => out.push('\x07'),
            'b' => out.push('\x08'),
            'f' => out.push('\x0c'),
            'n' => out.push('\n'),
            'r' => out.push('\r'),
            't' => out.push('\t'),
            'v' => out.push('\x0b'),
            '0'..='7' => {
                let mut v = e.to_digit(8).expect("octal digit");
                let mut n = 1;
                while n < 3 && chars.get(i).is_some_and(|c| c.is_digit(8)) {
                    v = v * 8 + chars[i].to_digit(8).expect("octal digit");
                    i += 1;
                    n += 1;
                }
                out.push(char::from_u32(v).ok_or("invalid octal escape")?);
            }
            'x' | 'u' | 'U' => {
                let len = match e {
                    'x' => 2,
                    'u' => 4,
                    _ => 8,
                };
                let digits = chars.get(i..i + len).ok_or("truncated escape")?;
                let v = hex_value(digits).ok_or("invalid hex escape")?;
                i += len;
                match char::from_u32(v) {
                    Some(ch) => out.push(ch),
                    // lone surrogates stay spelled out
                    None => {
                        out.push('\\');
                        out.push(e);
                        out.extend(digits);
                    }
                }
            }
            'N' if chars.get(i) == Some(&'{') => {
                // named escapes are kept verbatim; no Unicode name table
                let end = chars[i..]
                    .iter()
                    .position(|c| *c == '}')
                    .ok_or("malformed \\N escape")?;
                out.push('\\');
                out.push('N');
                out.extend(&chars[i..=i + end]);
                i += end + 1;
            }
            other => {
                out.push('\\');
                out.push(other);
            }
        }
    }
    Ok(out)
}

pub(crate) fn decode_bytes(body: &str, raw: bool) -> Result<Vec<u8>, String> {
    if !body.is_ascii() {
        return Err("bytes can only contain ASCII literal characters".into());
    }
    if raw {
        return Ok(body.as_bytes().to_vec());
    }
    let b = body.as_bytes();
    let mut out = Vec::with_capacity(b.len());
    let mut i = 0;
    while i < b.len() {
        if b[i] != b'\\' || i + 1 >= b.len() {
            out.push(b[i]);
            i += 1;
            continue;
        }
        let e = b[i + 1];
        i += 2;
        match e {
            b'\n' => {}
            b'\\' => out.push(b'\\'),
            b'\'' => out.push(b'\''),
            b'"' => out.push(b'"'),
            b'a' => out.push(7),
            b'b' => out.push(8),
            b'f' => out.push(12),
            b'n' => out.push(b'\n'),
            b'r' => out.push(b'\r'),
            b't' => out.push(b'\t'),
            b'v' => out.push(11),
            b'0'..=b'7' => {
                let mut v = (e - b'0') as u32;
                let mut n = 1;
                while n < 3 && i < b.len() && (b'0'..=b'7').contains(&b[i]) {
                    v = v * 8 + (b[i] - b'0') as u32;
                    i += 1;
                    n += 1;
                }
                out.push((v & 0xff) as u8);
            }
            b'x' => {
                let hex = body.get(i..i + 2).ok_or("truncated \\x escape")?;
                let v = u8::from_str_radix(hex, 16).map_err(|_| "invalid \\x escape")?;
                out.push(v);
                i += 2;
            }
            other => {
                out.push(b'\\');
                out.push(other);
            }
        }
    }
    Ok(out)
}

/// Splits an f-string body into literal text and replacement fields.
fn parse_fstring(body: &str, raw: bool, depth: usize) -> Result<Vec<FPart>, ParseError> {
    if depth > MAX_DEPTH {
        return Err(fstring_err("too deeply nested"));
    }
    let chars: Vec<char> = body.chars().collect();
    let mut parts = Vec::new();
    let mut lit = String::new();
    let mut i = 0;
    let flush = |lit: &mut String, parts: &mut Vec<FPart>| -> Result<(), ParseError> {
        if !lit.is_empty() {
            let s = decode_str(lit, raw).map_err(fstring_err)?;
            push_fpart(parts, FPart::Literal(s));
            lit.clear();
        }
        Ok(())
    };
    while i < chars.len() {
        let c = chars[i];
        match c {
            '{' if chars.get(i + 1) == Some(&'{') => {
                lit.push('{');
                i += 2;
            }
            '}' if chars.get(i + 1) == Some(&'}') => {
                lit.push('}');
                i += 2;
            }
            '}' => return Err(fstring_err("single '}' is not allowed")),
            '{' => {
                flush(&mut lit, &mut parts)?;
                let (fparts, next) = parse_field(&chars, i + 1, raw, depth)?;
                for p in fparts {
                    push_fpart(&mut parts, p);
                }
                i = next;
            }
            '\\' if !raw && chars.get(i + 1) == Some(&'N') && chars.get(i + 2) == Some(&'{') => {
                let end = chars[i..]
                    .iter()
                    .position(|c| *c == '}')
                    .ok_or_else(|| fstring_err("malformed \\N escape"))?;
                lit.extend(&chars[i..=i + end]);
                i += end + 1;
            }
            '\\' if i + 1 < chars.len() && chars[i + 1] != '{' && chars[i + 1] != '}' => {
                lit.push(c);
                lit.push(chars[i + 1]);
                i += 2;
            }
            _ => {
                lit.push(c);
                i += 1;
            }
        }
    }
    flush(&mut lit, &mut parts)?;
    Ok(parts)
}

fn fstring_err(message: impl Into<String>) -> ParseError {
    ParseError {
        line: 0,
        col: 0,
        message: format!("f-string: {}", message.into()),
    }
}

/// Parses one replacement field starting just after `{`. Returns the parts
/// it expands to and the index after the closing `}`.
fn parse_field(
    chars: &[char],
    start: usize,
    raw: bool,
    depth: usize,
) -> Result<(Vec<FPart>, usize), ParseError> {
    let mut i = start;
    let mut nest = 0usize;
    let mut debug_end = None;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '\'' | '"' => {
                let q = c;
                i += 1;
                while i < chars.len() && chars[i] != q {
                    if chars[i] == '\\' {
                        i += 1;
                    }
                    i += 1;
                }
                if i >= chars.len() {
                    return Err(fstring_err("unterminated string in expression"));
                }
            }
            '(' | '[' | '{' => nest += 1,
            ')' | ']' => nest = nest.saturating_sub(1),
            '}' if nest > 0 => nest -= 1,
            '}' | ':' if nest == 0 => break,
            '!' if nest == 0 && chars.get(i + 1) != Some(&'=') => break,
            '=' if nest == 0 => {
                let prev = if i > start { chars[i - 1] } else { ' ' };
                let next = chars.get(i + 1).copied();
                if !"=!<>".contains(prev) && next != Some('=') {
                    let mut j = i + 1;
                    while chars.get(j).is_some_and(|c| c.is_whitespace()) {
                        j += 1;
                    }
                    if matches!(chars.get(j), Some('}' | '!' | ':')) {
                        debug_end = Some(i);
                        i = j;
                        break;
                    }
                }
            }
            _ => {}
        }
        i += 1;
    }
    if i >= chars.len() {
        return Err(fstring_err("expecting '}'"));
    }
    let expr_end = debug_end.unwrap_or(i);
    let expr_text: String = chars[start..expr_end].iter().collect();
    if expr_text.trim().is_empty() {
        return Err(fstring_err("empty expression not allowed"));
    }
    let expr = parse_fragment(&expr_text, depth + 1).map_err(|e| fstring_err(e.message))?;

    let mut conversion = None;
    if chars[i] == '!' {
        let conv = *chars.get(i + 1).ok_or_else(|| fstring_err("missing conversion"))?;
        if !matches!(conv, 's' | 'r' | 'a') {
            return Err(fstring_err("invalid conversion character"));
        }
        conversion = Some(conv);
        i += 2;
    }
    let mut spec = Vec::new();
    let mut has_spec = false;
    if chars.get(i) == Some(&':') {
        has_spec = true;
        let spec_start = i + 1;
        let mut j = spec_start;
        let mut nest = 0usize;
        while j < chars.len() {
            match chars[j] {
                '{' => nest += 1,
                '}' if nest == 0 => break,
                '}' => nest -= 1,
                _ => {}
            }
            j += 1;
        }
        let spec_text: String = chars[spec_start..j.min(chars.len())].iter().collect();
        spec = parse_fstring(&spec_text, raw, depth + 1)?;
        i = j;
    }
    if chars.get(i) != Some(&'}') {
        return Err(fstring_err("expecting '}'"));
    }
    let mut out = Vec::new();
    if let Some(end) = debug_end {
        // `{x=}` expands to the literal text plus the (repr of the) value
        let text: String = chars[start..=end].iter().collect();
        let ws: String = chars[end + 1..]
            .iter()
            .take_while(|c| c.is_whitespace())
            .collect();
        out.push(FPart::Literal(text + &ws));
        if conversion.is_none() && !has_spec {
            conversion = Some('r');
        }
    }
    out.push(FPart::Field {
        expr: Box::new(expr),
        conversion,
        spec,
    });
    Ok((out, i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn expr(src: &str) -> Expr {
        parse_expression(src).unwrap()
    }

    #[test]
    fn precedence() {
        let e = expr("a + b * c ** -d");
        let Expr::BinOp { op: BinOp::Add, right, .. } = e else { panic!() };
        let Expr::BinOp { op: BinOp::Mult, right, .. } = *right else { panic!() };
        assert!(matches!(*right, Expr::BinOp { op: BinOp::Pow, .. }));
    }

    #[test]
    fn calls_with_keywords_and_comprehensions() {
        let e = expr("f(a, *b, c=1, **d)");
        let Expr::Call { args, keywords, .. } = e else { panic!() };
        assert_eq!(args.len(), 2);
        assert_eq!(keywords.len(), 2);
        assert_eq!(keywords[0].arg.as_deref(), Some("c"));
        assert!(keywords[1].arg.is_none());
        assert!(matches!(expr("sum(x for x in y if x)"), Expr::Call { .. }));
        assert!(matches!(expr("{k: v for k, v in d.items()}"), Expr::DictComp { .. }));
        assert!(matches!(expr("{1, 2}"), Expr::Set(_)));
        assert!(matches!(expr("{**a, 'b': 1}"), Expr::Dict(_)));
    }

    #[test]
    fn slices() {
        let e = expr("x[1:2, ::3, y]");
        let Expr::Subscript { index, .. } = e else { panic!() };
        let Expr::Tuple(items) = *index else { panic!() };
        assert_eq!(items.len(), 3);
        assert!(matches!(items[1], Expr::Slice { lower: None, upper: None, step: Some(_) }));
    }

    #[test]
    fn fstrings() {
        let e = expr(r#"f"rmse={score:.4f} {name!r} {x=}""#);
        let Expr::FString(parts) = e else { panic!() };
        assert_eq!(parts[0], FPart::Literal("rmse=".into()));
        assert!(matches!(&parts[1], FPart::Field { spec, .. } if spec == &[FPart::Literal(".4f".into())]));
        assert!(matches!(&parts[3], FPart::Field { conversion: Some('r'), .. }));
        assert_eq!(parts[4], FPart::Literal(" x=".into()));
        assert_eq!(expr("f'plain' 'text'"), Expr::Constant(Constant::Str("plaintext".into())));
    }

    #[test]
    fn string_escapes() {
        assert_eq!(
            expr(r#"'a\n\x41é' "b""#),
            Expr::Constant(Constant::Str("a\nAéb".into()))
        );
        assert_eq!(expr(r"r'\n'"), Expr::Constant(Constant::Str("\\n".into())));
        assert_eq!(expr(r"b'\x00a'"), Expr::Constant(Constant::Bytes(vec![0, b'a'])));
    }

    #[test]
    fn numbers_are_canonical() {
        assert_eq!(expr("1_000"), Expr::Constant(Constant::Int("1000".into())));
        assert_eq!(expr("0x10"), Expr::Constant(Constant::Int("16".into())));
        assert_eq!(expr("1e-3"), Expr::Constant(Constant::Float(0.001)));
        assert_eq!(expr("2j"), Expr::Constant(Constant::Imag(2.0)));
        assert!(parse_expression("012").is_err());
    }

    #[test]
    fn statements() {
        let src = r#"
import numpy as np, os.path
from sklearn.ensemble import (RandomForestRegressor,
    GradientBoostingRegressor as GBR)
from . import utils

@decorator(1)
class Model(Base, metaclass=Meta):
    x: int = 3

    async def fit(self, X, /, y=None, *args, alpha: float = 0.1, **kw) -> "Model":
        for i, (a, b) in enumerate(zip(X, y)):
            if a > b and not i:
                continue
            elif a is not None:
                break
            else:
                pass
        while True:
            try:
                value = yield from gen()
            except (ValueError, KeyError) as err:
                raise RuntimeError("bad") from err
            except* TypeError:
                ...
            else:
                del self.cache[0], tmp
            finally:
                x += 1
        with open(path) as fh, lock:
            data = fh.read()
        lam = lambda a, *b, c=1: a + c
        global counter
        assert x, "msg"
        return [v async for v in stream if v] if x else {**kw}
"#;
        let m = parse_module(src).unwrap();
        assert_eq!(m.body.len(), 4);
        let Stmt::ClassDef(c) = &m.body[3] else { panic!() };
        assert_eq!(c.keywords.len(), 1);
        let Stmt::FunctionDef(f) = &c.body[1] else { panic!() };
        assert!(f.is_async);
        assert_eq!(f.params.posonly.len(), 2);
        assert_eq!(f.params.args.len(), 1);
        assert_eq!(f.params.kwonly.len(), 1);
        assert!(f.params.vararg.is_some() && f.params.kwarg.is_some());
    }

    #[test]
    fn parenthesized_with_items() {
        let m = parse_module("with (open(a) as f, open(b) as g):\n    pass\n").unwrap();
        let Stmt::With { items, .. } = &m.body[0] else { panic!() };
        assert_eq!(items.len(), 2);
        // a bare parenthesized pair is two items, as in CPython
        let m = parse_module("with (a, b):\n    pass\n").unwrap();
        let Stmt::With { items, .. } = &m.body[0] else { panic!() };
        assert_eq!(items.len(), 2);
        let m = parse_module("with (a, b) as c:\n    pass\n").unwrap();
        let Stmt::With { items, .. } = &m.body[0] else { panic!() };
        assert!(matches!(items[0].context, Expr::Tuple(_)));
    }

    #[test]
    fn syntax_errors() {
        for bad in [
            "def f(:\n  pass\n",
            "x = = 1\n",
            "if x\n    y\n",
            "1 = x\n",
            "f(**)\n",
            "class\n",
            "try:\n    x\n",
            "x = (1,\n",
            "f'{'\n",
            "f'{}'\n",
        ] {
            assert!(parse_module(bad).is_err(), "{bad:?} should fail");
        }
    }

    #[test]
    fn deep_nesting_is_rejected_not_overflowed() {
        let src = format!("x = {}1{}\n", "(".repeat(5000), ")".repeat(5000));
        assert!(parse_module(&src).is_err());
        let src = format!("x = {}1\n", "-".repeat(5000));
        assert!(parse_module(&src).is_err());
    }
}
