//! AST normalization: print pruning, keyword and dict-key sorting, and
//! consistent identifier renaming, followed by serialization to tokens.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use super::python::ast::*;
use super::python::lexer::{tokenize, Tok};
use super::python::{parse_module, unparse_expr, unparse_module, ParseError};

/// Normalized code: the printed canonical source and its token sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CanonicalForm {
    pub tokens: Vec<String>,
    pub source: String,
}

pub fn normalize(code: &str) -> Result<CanonicalForm, ParseError> {
    Ok(normalize_module(parse_module(code)?))
}

pub fn normalize_module(mut module: Module) -> CanonicalForm {
    PrunePrints.block(&mut module.body);
    SortArguments.block(&mut module.body);
    rename_identifiers(&mut module);
    let source = unparse_module(&module);
    let tokens = serialize_tokens(&source);
    CanonicalForm { tokens, source }
}

fn serialize_tokens(source: &str) -> Vec<String> {
    match tokenize(source) {
        Ok(toks) => toks
            .into_iter()
            .filter_map(|t| match t.tok {
                Tok::Name(n) => Some(n),
                Tok::Number(n) => Some(n),
                Tok::Str(s) => Some(s.source_text()),
                Tok::Op(o) => Some(o.to_string()),
                Tok::Newline => Some("<NL>".into()),
                Tok::Indent => Some("<INDENT>".into()),
                Tok::Dedent => Some("<DEDENT>".into()),
                Tok::EndMarker => None,
            })
            .collect(),
        Err(e) => {
            debug_assert!(false, "printed source failed to tokenize: {e}");
            source.split_whitespace().map(str::to_string).collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Var,
    Func,
    Class,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Bind(Kind),
    Use,
    Import,
}

/// Mutable traversal in print order. Identifier positions are reported to
/// `ident` with their role.
trait VisitMut {
    fn block(&mut self, body: &mut Vec<Stmt>) {
        for s in body.iter_mut() {
            self.stmt(s);
        }
    }

    fn stmt(&mut self, s: &mut Stmt) {
        walk_stmt(self, s);
    }

    fn expr(&mut self, e: &mut Expr) {
        walk_expr(self, e);
    }

    fn ident(&mut self, _name: &mut String, _role: Role) {}
}

fn walk_target<V: VisitMut + ?Sized>(v: &mut V, e: &mut Expr) {
    match e {
        Expr::Name(n) => v.ident(n, Role::Bind(Kind::Var)),
        Expr::Tuple(items) | Expr::List(items) => {
            for i in items {
                walk_target(v, i);
            }
        }
        Expr::Starred(inner) => walk_target(v, inner),
        other => v.expr(other),
    }
}

fn walk_params<V: VisitMut + ?Sized>(v: &mut V, ps: &mut Parameters) {
    let Parameters {
        posonly,
        args,
        vararg,
        kwonly,
        kwarg,
    } = ps;
    let ordered = posonly
        .iter_mut()
        .chain(args.iter_mut())
        .chain(vararg.iter_mut())
        .chain(kwonly.iter_mut())
        .chain(kwarg.iter_mut());
    for p in ordered {
        v.ident(&mut p.name, Role::Bind(Kind::Var));
        if let Some(a) = &mut p.annotation {
            v.expr(a);
        }
        if let Some(d) = &mut p.default {
            v.expr(d);
        }
    }
}

fn walk_alias<V: VisitMut + ?Sized>(v: &mut V, a: &Alias) {
    let bound = match &a.asname {
        Some(asname) => asname.clone(),
        None => a.name.split('.').next().unwrap_or_default().to_string(),
    };
    if bound != "*" {
        v.ident(&mut bound.clone(), Role::Import);
    }
}

fn walk_stmt<V: VisitMut + ?Sized>(v: &mut V, s: &mut Stmt) {
    match s {
        Stmt::Expr(e) => v.expr(e),
        Stmt::Assign { targets, value } => {
            for t in targets {
                walk_target(v, t);
            }
            v.expr(value);
        }
        Stmt::AugAssign { target, value, .. } => {
            walk_target(v, target);
            v.expr(value);
        }
        Stmt::AnnAssign {
            target,
            annotation,
            value,
        } => {
            walk_target(v, target);
            v.expr(annotation);
            if let Some(val) = value {
                v.expr(val);
            }
        }
        Stmt::Pass | Stmt::Break | Stmt::Continue => {}
        Stmt::Return(e) => {
            if let Some(e) = e {
                v.expr(e);
            }
        }
        Stmt::Raise { exc, cause } => {
            for e in [exc, cause].into_iter().flatten() {
                v.expr(e);
            }
        }
        Stmt::Global(names) | Stmt::Nonlocal(names) => {
            for n in names {
                v.ident(n, Role::Bind(Kind::Var));
            }
        }
        Stmt::Delete(targets) => {
            for t in targets {
                v.expr(t);
            }
        }
        Stmt::Assert { test, msg } => {
            v.expr(test);
            if let Some(m) = msg {
                v.expr(m);
            }
        }
        Stmt::Import(names) | Stmt::ImportFrom { names, .. } => {
            for a in names.iter() {
                walk_alias(v, a);
            }
        }
        Stmt::If { test, body, orelse } | Stmt::While { test, body, orelse } => {
            v.expr(test);
            v.block(body);
            v.block(orelse);
        }
        Stmt::For {
            target,
            iter,
            body,
            orelse,
            ..
        } => {
            walk_target(v, target);
            v.expr(iter);
            v.block(body);
            v.block(orelse);
        }
        Stmt::With { items, body, .. } => {
            for i in items {
                v.expr(&mut i.context);
                if let Some(t) = &mut i.vars {
                    walk_target(v, t);
                }
            }
            v.block(body);
        }
        Stmt::Try {
            body,
            handlers,
            orelse,
            finalbody,
            ..
        } => {
            v.block(body);
            for h in handlers {
                if let Some(t) = &mut h.typ {
                    v.expr(t);
                }
                if let Some(n) = &mut h.name {
                    v.ident(n, Role::Bind(Kind::Var));
                }
                v.block(&mut h.body);
            }
            v.block(orelse);
            v.block(finalbody);
        }
        Stmt::FunctionDef(f) => {
            for d in &mut f.decorators {
                v.expr(d);
            }
            v.ident(&mut f.name, Role::Bind(Kind::Func));
            walk_params(v, &mut f.params);
            if let Some(r) = &mut f.returns {
                v.expr(r);
            }
            v.block(&mut f.body);
        }
        Stmt::ClassDef(c) => {
            for d in &mut c.decorators {
                v.expr(d);
            }
            v.ident(&mut c.name, Role::Bind(Kind::Class));
            for b in &mut c.bases {
                v.expr(b);
            }
            for k in &mut c.keywords {
                v.expr(&mut k.value);
            }
            v.block(&mut c.body);
        }
    }
}

fn walk_fparts<V: VisitMut + ?Sized>(v: &mut V, parts: &mut [FPart]) {
    for p in parts {
        if let FPart::Field { expr, spec, .. } = p {
            v.expr(expr);
            walk_fparts(v, spec);
        }
    }
}

fn walk_generators<V: VisitMut + ?Sized>(v: &mut V, gens: &mut [Comprehension]) {
    for g in gens {
        walk_target(v, &mut g.target);
        v.expr(&mut g.iter);
        for c in &mut g.ifs {
            v.expr(c);
        }
    }
}

fn walk_expr<V: VisitMut + ?Sized>(v: &mut V, e: &mut Expr) {
    match e {
        Expr::Name(n) => v.ident(n, Role::Use),
        Expr::Constant(_) => {}
        Expr::FString(parts) => walk_fparts(v, parts),
        Expr::Attribute { value, .. } => v.expr(value),
        Expr::Subscript { value, index } => {
            v.expr(value);
            v.expr(index);
        }
        Expr::Slice { lower, upper, step } => {
            for b in [lower, upper, step].into_iter().flatten() {
                v.expr(b);
            }
        }
        Expr::Call {
            func,
            args,
            keywords,
        } => {
            v.expr(func);
            for a in args {
                v.expr(a);
            }
            for k in keywords {
                v.expr(&mut k.value);
            }
        }
        Expr::BinOp { left, right, .. } => {
            v.expr(left);
            v.expr(right);
        }
        Expr::UnaryOp { operand, .. } => v.expr(operand),
        Expr::BoolOp { values, .. } => {
            for x in values {
                v.expr(x);
            }
        }
        Expr::Compare {
            left, comparators, ..
        } => {
            v.expr(left);
            for c in comparators {
                v.expr(c);
            }
        }
        Expr::IfExp { test, body, orelse } => {
            v.expr(body);
            v.expr(test);
            v.expr(orelse);
        }
        Expr::Lambda { params, body } => {
            walk_params(v, params);
            v.expr(body);
        }
        Expr::NamedExpr { target, value } => {
            walk_target(v, target);
            v.expr(value);
        }
        Expr::Tuple(items) | Expr::List(items) | Expr::Set(items) => {
            for i in items {
                v.expr(i);
            }
        }
        Expr::Dict(entries) => {
            for (k, val) in entries {
                if let Some(k) = k {
                    v.expr(k);
                }
                v.expr(val);
            }
        }
        Expr::ListComp { elt, generators }
        | Expr::SetComp { elt, generators }
        | Expr::GeneratorExp { elt, generators } => {
            v.expr(elt);
            walk_generators(v, generators);
        }
        Expr::DictComp {
            key,
            value,
            generators,
        } => {
            v.expr(key);
            v.expr(value);
            walk_generators(v, generators);
        }
        Expr::Starred(inner) | Expr::Await(inner) | Expr::YieldFrom(inner) => v.expr(inner),
        Expr::Yield(inner) => {
            if let Some(i) = inner {
                v.expr(i);
            }
        }
    }
}

fn is_print_call(e: &Expr) -> bool {
    e.call_name() == Some("print")
}

/// Drops `print(...)` statements; nested print calls become `None`.
struct PrunePrints;

impl VisitMut for PrunePrints {
    fn block(&mut self, body: &mut Vec<Stmt>) {
        let had_statements = !body.is_empty();
        body.retain(|s| !matches!(s, Stmt::Expr(e) if is_print_call(e)));
        for s in body.iter_mut() {
            self.stmt(s);
        }
        if had_statements && body.is_empty() {
            body.push(Stmt::Pass);
        }
    }

    fn expr(&mut self, e: &mut Expr) {
        if is_print_call(e) {
            *e = Expr::none();
            return;
        }
        walk_expr(self, e);
    }
}

/// Sorts keyword arguments by name and literal-keyed dicts by key text.
struct SortArguments;

impl VisitMut for SortArguments {
    fn expr(&mut self, e: &mut Expr) {
        walk_expr(self, e);
        match e {
            Expr::Call { keywords, .. } => {
                // stable: `**mapping` entries keep their relative order, last
                keywords.sort_by(|a, b| match (&a.arg, &b.arg) {
                    (Some(x), Some(y)) => x.cmp(y),
                    (Some(_), None) => std::cmp::Ordering::Less,
                    (None, Some(_)) => std::cmp::Ordering::Greater,
                    (None, None) => std::cmp::Ordering::Equal,
                });
            }
            Expr::Dict(entries) if entries.iter().all(|(k, _)| matches!(k, Some(Expr::Constant(_)))) => {
                let mut keyed: Vec<(String, (Option<Expr>, Expr))> = std::mem::take(entries)
                    .into_iter()
                    .map(|entry| {
                        let text = entry.0.as_ref().map(unparse_expr).unwrap_or_default();
                        (text, entry)
                    })
                    .collect();
                keyed.sort_by(|a, b| a.0.cmp(&b.0));
                *entries = keyed.into_iter().map(|(_, entry)| entry).collect();
            }
            _ => {}
        }
    }
}

#[derive(Default)]
struct CollectBindings {
    bound: HashMap<String, Kind>,
    imported: HashSet<String>,
}

impl VisitMut for CollectBindings {
    fn ident(&mut self, name: &mut String, role: Role) {
        match role {
            Role::Bind(kind) => {
                self.bound.entry(name.clone()).or_insert(kind);
            }
            Role::Import => {
                self.imported.insert(name.clone());
            }
            Role::Use => {}
        }
    }
}

struct Rename {
    renamable: HashMap<String, Kind>,
    assigned: HashMap<String, String>,
    counters: [usize; 3],
}

impl VisitMut for Rename {
    fn ident(&mut self, name: &mut String, role: Role) {
        if role == Role::Import {
            return;
        }
        let Some(&kind) = self.renamable.get(name.as_str()) else {
            return;
        };
        let counters = &mut self.counters;
        let canonical = self.assigned.entry(name.clone()).or_insert_with(|| {
            let (prefix, slot) = match kind {
                Kind::Var => ("var", 0),
                Kind::Func => ("func", 1),
                Kind::Class => ("class", 2),
            };
            counters[slot] += 1;
            format!("{prefix}{}", counters[slot])
        });
        *name = canonical.clone();
    }
}

/// Renames every name bound in the code (and not imported) to var1..,
/// func1.., class1.. in first-occurrence order. Builtins, imported names,
/// attributes and keyword-argument names are left alone. Method names
/// reached through attributes therefore keep their spelling while their
/// `def` is renamed, and keyword arguments that name a renamed parameter
/// are not updated.
fn rename_identifiers(module: &mut Module) {
    let mut collect = CollectBindings::default();
    collect.block(&mut module.body);
    let renamable = collect
        .bound
        .into_iter()
        .filter(|(n, _)| !collect.imported.contains(n))
        .collect();
    let mut rename = Rename {
        renamable,
        assigned: HashMap::new(),
        counters: [0; 3],
    };
    rename.block(&mut module.body);
}
