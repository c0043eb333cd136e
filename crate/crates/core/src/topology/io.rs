//! Text formats for topologies.
//!
//! Watts–Strogatz graphs are edge lists, one `i j` pair per line with 1-based
//! indices, preceded by a header comment:
//!
//! ```text
//! # watts-strogatz N=501 k=2 p=0.08733 seed=7 rewired=89
//! 1 2
//! ...
//! ```
//!
//! Distance-dependent profiles are a weight-vector CSV:
//!
//! ```text
//! # distance-dependent N=501 alpha=1.76923
//! d,weight
//! 1,0.3453...
//! ```
//!
//! Floats are written in Rust's shortest round-trip form, so both formats
//! reload bit-exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::{DistanceDependentProfile, WattsStrogatzGraph};

const WS_TAG: &str = "watts-strogatz";
const DD_TAG: &str = "distance-dependent";

pub fn ws_to_string(g: &WattsStrogatzGraph) -> String {
    let mut out = String::with_capacity(g.edges().len() * 10 + 80);
    let _ = writeln!(
        out,
        "# {WS_TAG} N={} k={} p={} seed={} rewired={}",
        g.n(),
        g.k(),
        g.p(),
        g.seed(),
        g.rewired()
    );
    for &(a, b) in g.edges() {
        let _ = writeln!(out, "{} {}", a + 1, b + 1);
    }
    out
}

fn parse_err(context: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        context: context.to_string(),
        line,
        message: message.into(),
    }
}

/// Parses `key=value` pairs from a header comment after the family tag.
fn header_fields<'a>(
    context: &str,
    header: Option<&'a str>,
    tag: &str,
) -> Result<Vec<(&'a str, &'a str)>> {
    let header = header.ok_or_else(|| parse_err(context, 1, "missing header"))?;
    let rest = header
        .strip_prefix('#')
        .map(str::trim)
        .and_then(|h| h.strip_prefix(tag))
        .ok_or_else(|| parse_err(context, 1, format!("expected '# {tag} ...' header")))?;
    rest.split_whitespace()
        .map(|kv| {
            kv.split_once('=')
                .ok_or_else(|| parse_err(context, 1, format!("malformed header field '{kv}'")))
        })
        .collect()
}

fn field<T: std::str::FromStr>(
    context: &str,
    fields: &[(&str, &str)],
    key: &str,
) -> Result<Option<T>> {
    match fields.iter().find(|(k, _)| *k == key) {
        None => Ok(None),
        Some((_, v)) => v
            .parse()
            .map(Some)
            .map_err(|_| parse_err(context, 1, format!("bad value '{v}' for {key}"))),
    }
}

fn required<T: std::str::FromStr>(context: &str, fields: &[(&str, &str)], key: &str) -> Result<T> {
    field(context, fields, key)?.ok_or_else(|| parse_err(context, 1, format!("header lacks {key}")))
}

pub fn ws_from_str(text: &str) -> Result<WattsStrogatzGraph> {
    let ctx = "edge list";
    let mut lines = text.lines();
    let fields = header_fields(ctx, lines.next(), WS_TAG)?;
    let n: usize = required(ctx, &fields, "N")?;
    let k: usize = required(ctx, &fields, "k")?;
    let p: f64 = required(ctx, &fields, "p")?;
    let seed: u64 = required(ctx, &fields, "seed")?;
    let rewired: Option<usize> = field(ctx, &fields, "rewired")?;

    let mut edges = Vec::with_capacity(k * n);
    for (idx, line) in lines.enumerate() {
        let lineno = idx + 2;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let mut node = || -> Result<u32> {
            let tok = parts
                .next()
                .ok_or_else(|| parse_err(ctx, lineno, "expected two node indices"))?;
            let v: usize = tok
                .parse()
                .map_err(|_| parse_err(ctx, lineno, format!("bad node index '{tok}'")))?;
            if v == 0 || v > n {
                return Err(parse_err(ctx, lineno, format!("node {v} outside [1, {n}]")));
            }
            Ok((v - 1) as u32)
        };
        let a = node()?;
        let b = node()?;
        if parts.next().is_some() {
            return Err(parse_err(ctx, lineno, "trailing tokens"));
        }
        edges.push((a, b));
    }
    WattsStrogatzGraph::from_edges(n, k, p, seed, edges, rewired)
}

pub fn dd_to_string(profile: &DistanceDependentProfile) -> String {
    let mut out = String::with_capacity(profile.half() * 24 + 64);
    let _ = writeln!(out, "# {DD_TAG} N={} alpha={}", profile.n(), profile.alpha());
    out.push_str("d,weight\n");
    for (d, w) in profile.weights().iter().enumerate() {
        let _ = writeln!(out, "{},{}", d + 1, w);
    }
    out
}

pub fn dd_from_str(text: &str) -> Result<DistanceDependentProfile> {
    let ctx = "weight csv";
    let mut lines = text.lines();
    let fields = header_fields(ctx, lines.next(), DD_TAG)?;
    let n: usize = required(ctx, &fields, "N")?;
    let alpha: f64 = required(ctx, &fields, "alpha")?;
    match lines.next().map(str::trim) {
        Some("d,weight") => {}
        _ => return Err(parse_err(ctx, 2, "expected 'd,weight' column header")),
    }
    let mut weights = Vec::new();
    for (idx, line) in lines.enumerate() {
        let lineno = idx + 3;
        if line.trim().is_empty() {
            continue;
        }
        let (d, w) = line
            .split_once(',')
            .ok_or_else(|| parse_err(ctx, lineno, "expected 'd,weight'"))?;
        let d: usize = d
            .trim()
            .parse()
            .map_err(|_| parse_err(ctx, lineno, format!("bad distance '{d}'")))?;
        if d != weights.len() + 1 {
            return Err(parse_err(ctx, lineno, format!("distance {d} out of sequence")));
        }
        let w: f64 = w
            .trim()
            .parse()
            .map_err(|_| parse_err(ctx, lineno, format!("bad weight '{w}'")))?;
        weights.push(w);
    }
    DistanceDependentProfile::from_weights(n, alpha, weights)
}

pub fn write_ws(path: &Path, g: &WattsStrogatzGraph) -> Result<()> {
    std::fs::write(path, ws_to_string(g)).map_err(|e| Error::io(path, e))
}

pub fn read_ws(path: &Path) -> Result<WattsStrogatzGraph> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ws_from_str(&text)
}

pub fn write_dd(path: &Path, profile: &DistanceDependentProfile) -> Result<()> {
    std::fs::write(path, dd_to_string(profile)).map_err(|e| Error::io(path, e))
}

pub fn read_dd(path: &Path) -> Result<DistanceDependentProfile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    dd_from_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::generate_ws;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn ws_round_trip(n in 7usize..200, k in 1usize..3, p in 0.0f64..=1.0, seed: u64) {
            let g = generate_ws(n, k, p, seed).unwrap();
            let back = ws_from_str(&ws_to_string(&g)).unwrap();
            prop_assert_eq!(back, g);
        }

        #[test]
        fn dd_round_trip(half in 1usize..300, alpha in 0.0f64..5.0) {
            let prof = DistanceDependentProfile::new(2 * half + 1, alpha).unwrap();
            let back = dd_from_str(&dd_to_string(&prof)).unwrap();
            prop_assert_eq!(back, prof);
        }
    }

    #[test]
    fn header_records_parameters_one_based() {
        let g = generate_ws(7, 1, 0.0, 5).unwrap();
        let text = ws_to_string(&g);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "# watts-strogatz N=7 k=1 p=0 seed=5 rewired=0");
        assert_eq!(lines.next().unwrap(), "1 2");
        assert_eq!(text.lines().last().unwrap(), "1 7");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = "# watts-strogatz N=5 k=1 p=0 seed=1\n1 2\n2 x\n";
        match ws_from_str(bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(ws_from_str("1 2\n").is_err());
        let tampered = "# distance-dependent N=5 alpha=1\nd,weight\n1,0.5\n2,0.25\n";
        assert!(dd_from_str(tampered).is_err());
    }
}
