//! Text-level rewrites that must not change a snippet's canonical form.
//!
//! They operate on source lines, not on the library's AST, and assume the
//! seed style of `tests/fixtures/seeds`: one logical statement per line,
//! assignments written `name = value`, keyword arguments written `k=v`.

use regex::Regex;

use super::SplitMix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Transform {
    Rename,
    Kwargs,
    DictKeys,
    Print,
    Comment,
    Reformat,
}

pub const ALL: [Transform; 6] = [
    Transform::Rename,
    Transform::Kwargs,
    Transform::DictKeys,
    Transform::Print,
    Transform::Comment,
    Transform::Reformat,
];

fn below(rng: &mut SplitMix, n: usize) -> usize {
    (rng.next_u64() % n as u64) as usize
}

fn shuffle<T>(rng: &mut SplitMix, xs: &mut [T]) {
    for i in (1..xs.len()).rev() {
        xs.swap(i, below(rng, i + 1));
    }
}

/// Splits a line into (is_string, text) runs on single and double quotes.
fn segments(line: &str) -> Vec<(bool, String)> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quote: Option<char> = None;
    for c in line.chars() {
        match quote {
            None if c == '\'' || c == '"' => {
                out.push((false, std::mem::take(&mut cur)));
                cur.push(c);
                quote = Some(c);
            }
            Some(q) if c == q => {
                cur.push(c);
                out.push((true, std::mem::take(&mut cur)));
                quote = None;
            }
            _ => cur.push(c),
        }
    }
    out.push((quote.is_some(), cur));
    out
}

fn map_code(line: &str, mut f: impl FnMut(&str) -> String) -> String {
    segments(line)
        .into_iter()
        .map(|(is_str, s)| if is_str { s } else { f(&s) })
        .collect()
}

fn indent_of(line: &str) -> &str {
    &line[..line.len() - line.trim_start().len()]
}

fn rename_candidates(code: &str) -> Vec<String> {
    let target = Regex::new(r"^\s*(?:for )?([A-Za-z_]\w*)(?: = | in )").unwrap();
    let mut names: Vec<String> = Vec::new();
    for line in code.lines() {
        if let Some(c) = target.captures(line) {
            if !names.contains(&c[1].to_string()) {
                names.push(c[1].to_string());
            }
        }
    }
    names.retain(|name| {
        let attr = Regex::new(&format!(r"\.{name}\b")).unwrap();
        let kwarg = Regex::new(&format!(r"\b{name}=[^=]")).unwrap();
        code.lines().all(|l| {
            segments(l)
                .iter()
                .all(|(s, t)| *s || (!attr.is_match(t) && !kwarg.is_match(t)))
        })
    });
    names
}

fn kwarg_re() -> Regex {
    Regex::new(r"\(((?:[A-Za-z_]\w*=[^,()=\[\]{}]+, )+[A-Za-z_]\w*=[^,()=\[\]{}]+)\)").unwrap()
}

fn dict_re() -> Regex {
    Regex::new(r"\{((?:'[^']*': [^,{}\[\]]+, )+'[^']*': [^,{}\[\]]+)\}").unwrap()
}

fn insert_points(lines: &[String]) -> Vec<usize> {
    (1..=lines.len())
        .filter(|&i| {
            lines.get(i).is_none_or(|l| {
                let t = l.trim_start();
                !["else", "elif", "except", "finally"].iter().any(|k| t.starts_with(k))
            })
        })
        .collect()
}

pub fn applicable(code: &str, t: Transform) -> bool {
    match t {
        Transform::Rename => !rename_candidates(code).is_empty(),
        Transform::Kwargs => kwarg_re().is_match(code),
        Transform::DictKeys => dict_re().is_match(code),
        _ => true,
    }
}

/// Permutes a ", "-separated list so that the order actually changes.
fn permute_list(rng: &mut SplitMix, inner: &str) -> String {
    let mut parts: Vec<&str> = inner.split(", ").collect();
    let original = parts.clone();
    while parts == original {
        shuffle(rng, &mut parts);
    }
    parts.join(", ")
}

fn permute_match(rng: &mut SplitMix, code: &str, re: &Regex) -> String {
    let spans: Vec<(usize, usize, String)> = re
        .captures_iter(code)
        .map(|c| {
            let m = c.get(1).unwrap();
            (m.start(), m.end(), m.as_str().to_string())
        })
        .collect();
    let (start, end, inner) = &spans[below(rng, spans.len())];
    format!("{}{}{}", &code[..*start], permute_list(rng, inner), &code[*end..])
}

pub fn apply(code: &str, t: Transform, rng: &mut SplitMix) -> String {
    let mut lines: Vec<String> = code.lines().map(str::to_string).collect();
    match t {
        Transform::Rename => {
            let names = rename_candidates(code);
            let name = &names[below(rng, names.len())];
            let re = Regex::new(&format!(r"\b{name}\b")).unwrap();
            let fresh = format!("zz_{name}_{}", below(rng, 1000));
            lines = lines
                .iter()
                .map(|l| map_code(l, |s| re.replace_all(s, fresh.as_str()).into_owned()))
                .collect();
        }
        Transform::Kwargs => return permute_match(rng, code, &kwarg_re()),
        Transform::DictKeys => return permute_match(rng, code, &dict_re()),
        Transform::Print => {
            for _ in 0..1 + below(rng, 3) {
                let points = insert_points(&lines);
                let at = points[below(rng, points.len())];
                let indent = lines.get(at).map_or("", |l| indent_of(l)).to_string();
                let stmt = match below(rng, 3) {
                    0 => format!("{indent}print('checkpoint')"),
                    1 => format!("{indent}print('step', {})", below(rng, 100)),
                    _ => format!("{indent}print(len('done'), sep=' ')"),
                };
                lines.insert(at, stmt);
            }
        }
        Transform::Comment => {
            for _ in 0..1 + below(rng, 3) {
                let at = below(rng, lines.len() + 1);
                if below(rng, 2) == 0 {
                    let indent = lines.get(at).map_or("", |l| indent_of(l)).to_string();
                    lines.insert(at, format!("{indent}# note {}", below(rng, 100)));
                } else if at < lines.len() {
                    lines[at].push_str("  # trailing remark");
                } else {
                    lines.push("# end of script".into());
                }
            }
        }
        Transform::Reformat => {
            let mut out = Vec::new();
            for l in &lines {
                let indent = indent_of(l).to_string();
                let body = &l[indent.len()..];
                let how = below(rng, 4);
                let body = map_code(body, |s| match how {
                    0 => s.replace(", ", ","),
                    1 => s.replace(" = ", "="),
                    2 => s.replace('(', "( ").replace(')', " )"),
                    _ => s.replace(" * ", "*").replace(" + ", "+"),
                });
                out.push(format!("{indent}{body}"));
                if below(rng, 4) == 0 {
                    out.push(String::new());
                }
                if below(rng, 5) == 0 {
                    let last = out.len() - 1;
                    out[last].push_str("   ");
                }
            }
            lines = out;
        }
    }
    let mut s = lines.join("\n");
    s.push('\n');
    s
}

/// One to three distinct applicable transforms, applied in a fixed order
/// (renaming first, reformatting last, so later patterns still match).
pub fn random_variant(code: &str, rng: &mut SplitMix) -> (String, Vec<Transform>) {
    loop {
        let mut kinds: Vec<Transform> = ALL.iter().copied().filter(|&t| applicable(code, t)).collect();
        shuffle(rng, &mut kinds);
        kinds.truncate(1 + below(rng, 3));
        kinds.sort();
        let mut out = code.to_string();
        for &t in &kinds {
            if applicable(&out, t) {
                out = apply(&out, t, rng);
            }
        }
        if out != code {
            return (out, kinds);
        }
    }
}
