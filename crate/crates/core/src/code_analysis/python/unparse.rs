//! Deterministic source printer for the AST. Output reparses to an equal
//! tree.

use super::ast::*;

// binding strength, weakest first
const TUPLE: u8 = 0;
const TEST: u8 = 2;
const OR: u8 = 3;
const AND: u8 = 4;
const NOT: u8 = 5;
const CMP: u8 = 6;
const BOR: u8 = 7;
const BXOR: u8 = 8;
const BAND: u8 = 9;
const SHIFT: u8 = 10;
const ARITH: u8 = 11;
const TERM: u8 = 12;
const FACTOR: u8 = 13;
const POWER: u8 = 14;
const AWAIT: u8 = 15;
const ATOM: u8 = 16;

pub fn unparse_module(m: &Module) -> String {
    let mut p = Printer::default();
    p.block(&m.body, 0);
    p.out
}

pub fn unparse_expr(e: &Expr) -> String {
    let mut p = Printer::default();
    p.expr(e, TUPLE)
}

#[derive(Default)]
struct Printer {
    out: String,
    /// Quote character of the enclosing f-string, if any.
    fquote: Option<char>,
}

fn binop_prec(op: BinOp) -> u8 {
    match op {
        BinOp::BitOr => BOR,
        BinOp::BitXor => BXOR,
        BinOp::BitAnd => BAND,
        BinOp::LShift | BinOp::RShift => SHIFT,
        BinOp::Add | BinOp::Sub => ARITH,
        BinOp::Mult | BinOp::MatMult | BinOp::Div | BinOp::FloorDiv | BinOp::Mod => TERM,
        BinOp::Pow => POWER,
    }
}

fn format_float(v: f64) -> String {
    if v.is_infinite() {
        "1e999".into()
    } else {
        format!("{v:?}")
    }
}

fn push_escaped(out: &mut String, c: char, quote: char) {
    match c {
        '\\' => out.push_str("\\\\"),
        '\n' => out.push_str("\\n"),
        '\r' => out.push_str("\\r"),
        '\t' => out.push_str("\\t"),
        c if c == quote => {
            out.push('\\');
            out.push(c);
        }
        c if (c as u32) < 0x20 || c as u32 == 0x7f => {
            out.push_str(&format!("\\x{:02x}", c as u32));
        }
        c => out.push(c),
    }
}

fn pick_quote(text: &str) -> char {
    if text.contains('\'') && !text.contains('"') {
        '"'
    } else {
        '\''
    }
}

fn other_quote(q: char) -> char {
    if q == '\'' {
        '"'
    } else {
        '\''
    }
}

fn quote_str(s: &str, quote: char) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push(quote);
    for c in s.chars() {
        push_escaped(&mut out, c, quote);
    }
    out.push(quote);
    out
}

fn quote_bytes(b: &[u8]) -> String {
    let quote = if b.contains(&b'\'') && !b.contains(&b'"') {
        '"'
    } else {
        '\''
    };
    let mut out = String::from("b");
    out.push(quote);
    for &byte in b {
        match byte {
            0x20..=0x7e => push_escaped(&mut out, byte as char, quote),
            b'\n' => out.push_str("\\n"),
            b'\r' => out.push_str("\\r"),
            b'\t' => out.push_str("\\t"),
            _ => out.push_str(&format!("\\x{byte:02x}")),
        }
    }
    out.push(quote);
    out
}

impl Printer {
    fn line(&mut self, indent: usize, text: &str) {
        for _ in 0..indent {
            self.out.push_str("    ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn block(&mut self, body: &[Stmt], indent: usize) {
        if body.is_empty() {
            self.line(indent, "pass");
        }
        for s in body {
            self.stmt(s, indent);
        }
    }

    fn stmt(&mut self, s: &Stmt, indent: usize) {
        match s {
            Stmt::Expr(e) => {
                let t = self.expr(e, TUPLE);
                self.line(indent, &t);
            }
            Stmt::Assign { targets, value } => {
                let mut t: Vec<String> = targets.iter().map(|t| self.expr(t, TUPLE)).collect();
                t.push(self.expr(value, TUPLE));
                self.line(indent, &t.join(" = "));
            }
            Stmt::AugAssign { target, op, value } => {
                let t = format!(
                    "{} {}= {}",
                    self.expr(target, TUPLE),
                    op.symbol(),
                    self.expr(value, TUPLE)
                );
                self.line(indent, &t);
            }
            Stmt::AnnAssign {
                target,
                annotation,
                value,
            } => {
                let mut t = format!("{}: {}", self.expr(target, TUPLE), self.expr(annotation, TEST));
                if let Some(v) = value {
                    t.push_str(" = ");
                    t.push_str(&self.expr(v, TUPLE));
                }
                self.line(indent, &t);
            }
            Stmt::Pass => self.line(indent, "pass"),
            Stmt::Break => self.line(indent, "break"),
            Stmt::Continue => self.line(indent, "continue"),
            Stmt::Return(v) => {
                let t = match v {
                    Some(v) => format!("return {}", self.expr(v, TUPLE)),
                    None => "return".into(),
                };
                self.line(indent, &t);
            }
            Stmt::Raise { exc, cause } => {
                let mut t = String::from("raise");
                if let Some(e) = exc {
                    t.push(' ');
                    t.push_str(&self.expr(e, TEST));
                }
                if let Some(c) = cause {
                    t.push_str(" from ");
                    t.push_str(&self.expr(c, TEST));
                }
                self.line(indent, &t);
            }
            Stmt::Global(names) => self.line(indent, &format!("global {}", names.join(", "))),
            Stmt::Nonlocal(names) => self.line(indent, &format!("nonlocal {}", names.join(", "))),
            Stmt::Delete(targets) => {
                let t: Vec<String> = targets.iter().map(|t| self.expr(t, TEST)).collect();
                self.line(indent, &format!("del {}", t.join(", ")));
            }
            Stmt::Assert { test, msg } => {
                let mut t = format!("assert {}", self.expr(test, TEST));
                if let Some(m) = msg {
                    t.push_str(", ");
                    t.push_str(&self.expr(m, TEST));
                }
                self.line(indent, &t);
            }
            Stmt::Import(names) => {
                self.line(indent, &format!("import {}", aliases(names)));
            }
            Stmt::ImportFrom {
                module,
                names,
                level,
            } => {
                let t = format!(
                    "from {}{} import {}",
                    ".".repeat(*level),
                    module.as_deref().unwrap_or(""),
                    aliases(names)
                );
                self.line(indent, &t);
            }
            Stmt::If { test, body, orelse } => {
                let t = format!("if {}:", self.expr(test, TEST));
                self.line(indent, &t);
                self.block(body, indent + 1);
                self.orelse(orelse, indent);
            }
            Stmt::While { test, body, orelse } => {
                let t = format!("while {}:", self.expr(test, TEST));
                self.line(indent, &t);
                self.block(body, indent + 1);
                if !orelse.is_empty() {
                    self.line(indent, "else:");
                    self.block(orelse, indent + 1);
                }
            }
            Stmt::For {
                is_async,
                target,
                iter,
                body,
                orelse,
            } => {
                let t = format!(
                    "{}for {} in {}:",
                    if *is_async { "async " } else { "" },
                    self.expr(target, TUPLE),
                    self.expr(iter, TUPLE)
                );
                self.line(indent, &t);
                self.block(body, indent + 1);
                if !orelse.is_empty() {
                    self.line(indent, "else:");
                    self.block(orelse, indent + 1);
                }
            }
            Stmt::With {
                is_async,
                items,
                body,
            } => {
                let items: Vec<String> = items
                    .iter()
                    .map(|i| {
                        let mut t = self.expr(&i.context, TEST);
                        if let Some(v) = &i.vars {
                            t.push_str(" as ");
                            t.push_str(&self.expr(v, TUPLE));
                        }
                        t
                    })
                    .collect();
                let t = format!("{}with {}:", if *is_async { "async " } else { "" }, items.join(", "));
                self.line(indent, &t);
                self.block(body, indent + 1);
            }
            Stmt::Try {
                body,
                handlers,
                orelse,
                finalbody,
                star,
            } => {
                self.line(indent, "try:");
                self.block(body, indent + 1);
                for h in handlers {
                    let mut t = String::from(if *star { "except*" } else { "except" });
                    if let Some(typ) = &h.typ {
                        t.push(' ');
                        t.push_str(&self.expr(typ, TEST));
                    }
                    if let Some(n) = &h.name {
                        t.push_str(" as ");
                        t.push_str(n);
                    }
                    t.push(':');
                    self.line(indent, &t);
                    self.block(&h.body, indent + 1);
                }
                if !orelse.is_empty() {
                    self.line(indent, "else:");
                    self.block(orelse, indent + 1);
                }
                if !finalbody.is_empty() {
                    self.line(indent, "finally:");
                    self.block(finalbody, indent + 1);
                }
            }
            Stmt::FunctionDef(f) => {
                for d in &f.decorators {
                    let t = format!("@{}", self.expr(d, TEST));
                    self.line(indent, &t);
                }
                let mut t = format!(
                    "{}def {}({})",
                    if f.is_async { "async " } else { "" },
                    f.name,
                    self.params(&f.params, true)
                );
                if let Some(r) = &f.returns {
                    t.push_str(" -> ");
                    t.push_str(&self.expr(r, TEST));
                }
                t.push(':');
                self.line(indent, &t);
                self.block(&f.body, indent + 1);
            }
            Stmt::ClassDef(c) => {
                for d in &c.decorators {
                    let t = format!("@{}", self.expr(d, TEST));
                    self.line(indent, &t);
                }
                let mut t = format!("class {}", c.name);
                if !c.bases.is_empty() || !c.keywords.is_empty() {
                    t.push('(');
                    t.push_str(&self.call_args(&c.bases, &c.keywords));
                    t.push(')');
                }
                t.push(':');
                self.line(indent, &t);
                self.block(&c.body, indent + 1);
            }
        }
    }

    fn orelse(&mut self, orelse: &[Stmt], indent: usize) {
        match orelse {
            [] => {}
            [Stmt::If { test, body, orelse }] => {
                let t = format!("elif {}:", self.expr(test, TEST));
                self.line(indent, &t);
                self.block(body, indent + 1);
                self.orelse(orelse, indent);
            }
            _ => {
                self.line(indent, "else:");
                self.block(orelse, indent + 1);
            }
        }
    }

    fn param(&mut self, p: &Param, annotations: bool) -> String {
        let mut t = p.name.clone();
        let annotated = annotations && p.annotation.is_some();
        if let (true, Some(a)) = (annotations, &p.annotation) {
            t.push_str(": ");
            t.push_str(&self.expr(a, TEST));
        }
        if let Some(d) = &p.default {
            t.push_str(if annotated { " = " } else { "=" });
            t.push_str(&self.expr(d, TEST));
        }
        t
    }

    fn params(&mut self, ps: &Parameters, annotations: bool) -> String {
        let mut parts = Vec::new();
        for p in &ps.posonly {
            parts.push(self.param(p, annotations));
        }
        if !ps.posonly.is_empty() {
            parts.push("/".into());
        }
        for p in &ps.args {
            parts.push(self.param(p, annotations));
        }
        if let Some(v) = &ps.vararg {
            parts.push(format!("*{}", self.param(v, annotations)));
        } else if !ps.kwonly.is_empty() {
            parts.push("*".into());
        }
        for p in &ps.kwonly {
            parts.push(self.param(p, annotations));
        }
        if let Some(k) = &ps.kwarg {
            parts.push(format!("**{}", self.param(k, annotations)));
        }
        parts.join(", ")
    }

    fn call_args(&mut self, args: &[Expr], keywords: &[Keyword]) -> String {
        let mut parts = Vec::new();
        if let [g @ Expr::GeneratorExp { .. }] = args {
            if keywords.is_empty() {
                let inner = self.comprehension_body(g);
                return inner;
            }
        }
        for a in args {
            parts.push(self.expr(a, TEST));
        }
        for k in keywords {
            parts.push(match &k.arg {
                Some(name) => format!("{name}={}", self.expr(&k.value, TEST)),
                None => format!("**{}", self.expr(&k.value, TEST)),
            });
        }
        parts.join(", ")
    }

    fn comprehensions(&mut self, gens: &[Comprehension]) -> String {
        let mut t = String::new();
        for g in gens {
            t.push_str(if g.is_async { " async for " } else { " for " });
            t.push_str(&self.expr(&g.target, TUPLE));
            t.push_str(" in ");
            t.push_str(&self.expr(&g.iter, OR));
            for cond in &g.ifs {
                t.push_str(" if ");
                t.push_str(&self.expr(cond, OR));
            }
        }
        t
    }

    /// `elt for ...` without the surrounding brackets.
    fn comprehension_body(&mut self, e: &Expr) -> String {
        match e {
            Expr::GeneratorExp { elt, generators }
            | Expr::ListComp { elt, generators }
            | Expr::SetComp { elt, generators } => {
                let head = self.expr(elt, TEST);
                head + &self.comprehensions(generators)
            }
            _ => unreachable!("not a comprehension"),
        }
    }

    fn str_const(&self, s: &str) -> String {
        let q = match self.fquote {
            Some(outer) => other_quote(outer),
            None => pick_quote(s),
        };
        quote_str(s, q)
    }

    fn fstring(&mut self, parts: &[FPart]) -> String {
        let literal_text: String = parts
            .iter()
            .filter_map(|p| match p {
                FPart::Literal(s) => Some(s.as_str()),
                FPart::Field { .. } => None,
            })
            .collect();
        let quote = match self.fquote {
            Some(outer) => other_quote(outer),
            None => pick_quote(&literal_text),
        };
        let saved = self.fquote.replace(quote);
        let mut body = String::new();
        self.fstring_parts(parts, quote, &mut body);
        self.fquote = saved;
        format!("f{quote}{body}{quote}")
    }

    fn fstring_parts(&mut self, parts: &[FPart], quote: char, body: &mut String) {
        for p in parts {
            match p {
                FPart::Literal(s) => {
                    for c in s.chars() {
                        match c {
                            '{' => body.push_str("{{"),
                            '}' => body.push_str("}}"),
                            c => push_escaped(body, c, quote),
                        }
                    }
                }
                FPart::Field {
                    expr,
                    conversion,
                    spec,
                } => {
                    let text = self.expr(expr, TEST + 1);
                    body.push('{');
                    if text.starts_with('{') {
                        body.push(' ');
                    }
                    body.push_str(&text);
                    if let Some(c) = conversion {
                        body.push('!');
                        body.push(*c);
                    }
                    if !spec.is_empty() {
                        body.push(':');
                        self.fstring_parts(spec, quote, body);
                    }
                    body.push('}');
                }
            }
        }
    }

    fn wrap(text: String, prec: u8, ctx: u8) -> String {
        if prec < ctx {
            format!("({text})")
        } else {
            text
        }
    }

    fn expr(&mut self, e: &Expr, ctx: u8) -> String {
        match e {
            Expr::Name(n) => n.clone(),
            Expr::Constant(c) => match c {
                Constant::None => "None".into(),
                Constant::True => "True".into(),
                Constant::False => "False".into(),
                Constant::Ellipsis => "...".into(),
                Constant::Int(digits) => digits.clone(),
                Constant::Float(v) => format_float(*v),
                Constant::Imag(v) => format!("{}j", format_float(*v)),
                Constant::Str(s) => self.str_const(s),
                Constant::Bytes(b) => quote_bytes(b),
            },
            Expr::FString(parts) => self.fstring(parts),
            Expr::Attribute { value, attr } => {
                let v = match value.as_ref() {
                    Expr::Constant(Constant::Int(d)) => format!("({d})"),
                    v => self.expr(v, ATOM),
                };
                format!("{v}.{attr}")
            }
            Expr::Subscript { value, index } => {
                let v = self.expr(value, ATOM);
                let i = match index.as_ref() {
                    Expr::Tuple(items) if !items.is_empty() => {
                        let parts: Vec<String> = items.iter().map(|i| self.expr(i, TEST)).collect();
                        if parts.len() == 1 {
                            format!("{},", parts[0])
                        } else {
                            parts.join(", ")
                        }
                    }
                    i => self.expr(i, TEST),
                };
                format!("{v}[{i}]")
            }
            Expr::Slice { lower, upper, step } => {
                let mut t = String::new();
                if let Some(l) = lower {
                    t.push_str(&self.expr(l, TEST));
                }
                t.push(':');
                if let Some(u) = upper {
                    t.push_str(&self.expr(u, TEST));
                }
                if let Some(s) = step {
                    t.push(':');
                    t.push_str(&self.expr(s, TEST));
                }
                t
            }
            Expr::Call {
                func,
                args,
                keywords,
            } => {
                let f = self.expr(func, ATOM);
                format!("{f}({})", self.call_args(args, keywords))
            }
            Expr::BinOp { left, op, right } => {
                let prec = binop_prec(*op);
                let (lctx, rctx) = if *op == BinOp::Pow {
                    (prec + 1, FACTOR)
                } else {
                    (prec, prec + 1)
                };
                let t = format!(
                    "{} {} {}",
                    self.expr(left, lctx),
                    op.symbol(),
                    self.expr(right, rctx)
                );
                Self::wrap(t, prec, ctx)
            }
            Expr::UnaryOp { op, operand } => {
                let (t, prec) = match op {
                    UnaryOp::Not => (format!("not {}", self.expr(operand, NOT)), NOT),
                    UnaryOp::Invert => (format!("~{}", self.expr(operand, FACTOR)), FACTOR),
                    UnaryOp::UAdd => (format!("+{}", self.expr(operand, FACTOR)), FACTOR),
                    UnaryOp::USub => (format!("-{}", self.expr(operand, FACTOR)), FACTOR),
                };
                Self::wrap(t, prec, ctx)
            }
            Expr::BoolOp { op, values } => {
                let (word, prec) = match op {
                    BoolOp::And => (" and ", AND),
                    BoolOp::Or => (" or ", OR),
                };
                let parts: Vec<String> = values.iter().map(|v| self.expr(v, prec + 1)).collect();
                Self::wrap(parts.join(word), prec, ctx)
            }
            Expr::Compare {
                left,
                ops,
                comparators,
            } => {
                let mut t = self.expr(left, CMP + 1);
                for (op, c) in ops.iter().zip(comparators) {
                    t.push(' ');
                    t.push_str(op.symbol());
                    t.push(' ');
                    t.push_str(&self.expr(c, CMP + 1));
                }
                Self::wrap(t, CMP, ctx)
            }
            Expr::IfExp { test, body, orelse } => {
                let t = format!(
                    "{} if {} else {}",
                    self.expr(body, TEST + 1),
                    self.expr(test, TEST + 1),
                    self.expr(orelse, TEST)
                );
                Self::wrap(t, TEST, ctx)
            }
            Expr::Lambda { params, body } => {
                let ps = self.params(params, false);
                let head = if ps.is_empty() {
                    "lambda".to_string()
                } else {
                    format!("lambda {ps}")
                };
                let t = format!("{head}: {}", self.expr(body, TEST));
                Self::wrap(t, TEST, ctx)
            }
            Expr::NamedExpr { target, value } => {
                format!("({} := {})", self.expr(target, ATOM), self.expr(value, TEST))
            }
            Expr::Tuple(items) => {
                let parts: Vec<String> = items.iter().map(|i| self.expr(i, TEST)).collect();
                match parts.len() {
                    1 => format!("({},)", parts[0]),
                    _ => format!("({})", parts.join(", ")),
                }
            }
            Expr::List(items) => {
                let parts: Vec<String> = items.iter().map(|i| self.expr(i, TEST)).collect();
                format!("[{}]", parts.join(", "))
            }
            Expr::Set(items) => {
                let parts: Vec<String> = items.iter().map(|i| self.expr(i, TEST)).collect();
                format!("{{{}}}", parts.join(", "))
            }
            Expr::Dict(entries) => {
                let parts: Vec<String> = entries
                    .iter()
                    .map(|(k, v)| match k {
                        Some(k) => format!("{}: {}", self.expr(k, TEST), self.expr(v, TEST)),
                        None => format!("**{}", self.expr(v, BOR)),
                    })
                    .collect();
                format!("{{{}}}", parts.join(", "))
            }
            Expr::ListComp { .. } => format!("[{}]", self.comprehension_body(e)),
            Expr::SetComp { .. } => format!("{{{}}}", self.comprehension_body(e)),
            Expr::GeneratorExp { .. } => format!("({})", self.comprehension_body(e)),
            Expr::DictComp {
                key,
                value,
                generators,
            } => {
                let t = format!(
                    "{}: {}{}",
                    self.expr(key, TEST),
                    self.expr(value, TEST),
                    self.comprehensions(generators)
                );
                format!("{{{t}}}")
            }
            Expr::Starred(inner) => format!("*{}", self.expr(inner, BOR)),
            Expr::Await(inner) => {
                let t = format!("await {}", self.expr(inner, ATOM));
                Self::wrap(t, AWAIT, ctx)
            }
            Expr::Yield(v) => match v {
                Some(v) => format!("(yield {})", self.expr(v, TUPLE)),
                None => "(yield)".into(),
            },
            Expr::YieldFrom(v) => format!("(yield from {})", self.expr(v, TEST)),
        }
    }
}

fn aliases(names: &[Alias]) -> String {
    names
        .iter()
        .map(|a| match &a.asname {
            Some(asname) => format!("{} as {asname}", a.name),
            None => a.name.clone(),
        })
        .collect::<Vec<_>>()
        .join(", ")
}
