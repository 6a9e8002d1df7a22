//! Built-in deterministic code embedder: signed feature hashing of code
//! tokens with log-scaled term frequencies.

use std::collections::BTreeMap;
use std::hash::Hasher;
use std::sync::LazyLock;

use fnv::FnvHasher;
use regex::Regex;

pub const EMBEDDING_DIM: usize = 300;

// strings and comments are consumed and dropped, as are numeric literals
static TOKEN: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r#"(?x)
        (?P<skip>\#[^\n]*
          | [rRbBuUfF]{0,2}(?:'''(?s:.*?)'''|"""(?s:.*?)"""|'(?:\\.|[^'\\\n])*'|"(?:\\.|[^"\\\n])*")
          | \d[\d_]*(?:\.\d*)?(?:[eE][+-]?\d+)?[jJ]?)
        | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
        | (?P<op>\*\*=?|//=?|<<=?|>>=?|->|:=|==|!=|<=|>=|[-+*/%&|^@]=|[-+*/%&|^~<>=.,:;@()\[\]{}!])
        "#,
    )
    .expect("token regex")
});

/// Identifier, keyword and operator tokens of `code`, in order.
pub fn code_tokens(code: &str) -> Vec<&str> {
    TOKEN
        .captures_iter(code)
        .filter_map(|c| c.name("word").or_else(|| c.name("op")).map(|m| m.as_str()))
        .collect()
}

/// FNV-1a (64-bit) of the token's UTF-8 bytes.
pub fn token_hash(token: &str) -> u64 {
    let mut h = FnvHasher::default();
    h.write(token.as_bytes());
    h.finish()
}

/// Embeds code into `dim` bins. Each distinct token `t` with count `tf`
/// adds `±ln(1 + tf)` to bin `hash(t) mod dim`, with sign `+` when the top
/// hash bit is clear. The result is scaled to unit length; code without
/// tokens maps to the zero vector.
pub fn embed_code_dim(code: &str, dim: usize) -> Vec<f64> {
    assert!(dim > 0, "embedding dimension must be positive");
    let mut tf: BTreeMap<&str, u32> = BTreeMap::new();
    for t in code_tokens(code) {
        *tf.entry(t).or_default() += 1;
    }
    let mut v = vec![0.0; dim];
    for (token, count) in tf {
        let h = token_hash(token);
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        v[(h % dim as u64) as usize] += sign * (1.0 + count as f64).ln();
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in &mut v {
            *x /= norm;
        }
    }
    v
}

pub fn embed_code(code: &str) -> Vec<f64> {
    embed_code_dim(code, EMBEDDING_DIM)
}
