//! Parameter file format. One record per line, probabilities in linear space:
//!
//! ```text
//! slg1 sub NP alpha2 0.5
//! slg1 adj VP STOP 0.8
//! slg2 sub alpha1 1 alpha2 0.5
//! slg2 adj alpha1 2 STOP 0.8
//! slg2 root alpha1 1
//! slg3 root alpha1 1
//! slg3 expand alpha1 {1>alpha2; 2>[beta]; 2.2>alpha3} 0.7
//! slg4 frag (S A! (B "b")) 0.25
//! ```
//!
//! `#` starts a comment line. All records of a file share one level.

use std::fmt::Write as _;

use thiserror::Error;

use crate::address::NodeAddress;
use crate::events::{MetaProduction, Outcome};

use super::{Distribution, Fragment, Params, Slg1Params, Slg2Params, Slg3Params, Slg4Params};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {msg}")]
pub struct ParamsError {
    pub line: usize,
    pub msg: String,
}

/// Decimal rendering with 12 significant digits.
pub fn format_prob(p: f64) -> String {
    if p == 0.0 || !p.is_finite() {
        return format!("{p}");
    }
    let rounded: f64 = format!("{p:.11e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

fn insert<O: Ord>(d: &mut Distribution<O>, o: O, p: f64, line: usize) -> Result<(), ParamsError> {
    if d.probs.insert(o, p).is_some() {
        return Err(ParamsError { line, msg: "duplicate record".into() });
    }
    Ok(())
}

pub fn parse_params(text: &str) -> Result<Params, ParamsError> {
    let mut level: Option<u8> = None;
    let mut p1 = Slg1Params::default();
    let mut p2 = Slg2Params::default();
    let mut p3 = Slg3Params::default();
    let mut p4 = Slg4Params::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let err = |msg: &str| ParamsError { line, msg: msg.to_string() };
        let (head, rest) = t.split_once(char::is_whitespace).ok_or_else(|| err("incomplete record"))?;
        let this_level = match head {
            "slg1" => 1,
            "slg2" => 2,
            "slg3" => 3,
            "slg4" => 4,
            _ => return Err(err(&format!("unknown record type `{head}`"))),
        };
        if *level.get_or_insert(this_level) != this_level {
            return Err(err("records of different levels in one file"));
        }
        let (body, prob) = rest.trim().rsplit_once(char::is_whitespace).ok_or_else(|| err("missing probability"))?;
        let prob: f64 = prob.parse().map_err(|_| err(&format!("bad probability `{prob}`")))?;
        let body = body.trim();
        let words: Vec<&str> = body.split_whitespace().collect();
        let addr = |s: &str| s.parse::<NodeAddress>().map_err(|e| err(&e.to_string()));
        match (this_level, words.as_slice()) {
            (1, ["sub", label, outcome]) => {
                insert(p1.sub.entry(label.to_string()).or_default(), outcome.parse().unwrap(), prob, line)?
            }
            (1, ["adj", label, outcome]) => {
                insert(p1.adj.entry(label.to_string()).or_default(), outcome.parse().unwrap(), prob, line)?
            }
            (2, ["sub", host, a, outcome]) => {
                let key = (host.to_string(), addr(a)?);
                insert(p2.sub.entry(key).or_default(), outcome.parse().unwrap(), prob, line)?
            }
            (2, ["adj", host, a, outcome]) => {
                let key = (host.to_string(), addr(a)?);
                insert(p2.adj.entry(key).or_default(), outcome.parse().unwrap(), prob, line)?
            }
            (2, ["root", tree]) => insert(&mut p2.root, Outcome::tree(*tree), prob, line)?,
            (3, ["root", tree]) => insert(&mut p3.root, Outcome::tree(*tree), prob, line)?,
            (3, ["expand", mother, ..]) => {
                let expansion = body
                    .strip_prefix("expand")
                    .map(str::trim_start)
                    .and_then(|s| s.strip_prefix(mother))
                    .ok_or_else(|| err("bad expand record"))?;
                let m = MetaProduction::parse_expansion(mother, expansion).map_err(|e| err(&e.msg))?;
                insert(p3.expand.entry(mother.to_string()).or_default(), m, prob, line)?
            }
            (4, ["frag", ..]) => {
                let frag = Fragment::parse(body.strip_prefix("frag").unwrap_or(body))
                    .map_err(|e| err(&format!("bad fragment: {}", e.msg)))?;
                if p4.fragments.insert(frag, prob).is_some() {
                    return Err(err("duplicate record"));
                }
            }
            _ => return Err(err(&format!("malformed record `{t}`"))),
        }
    }
    match level {
        Some(1) => Ok(Params::Slg1(p1)),
        Some(2) => Ok(Params::Slg2(p2)),
        Some(3) => Ok(Params::Slg3(p3)),
        Some(4) => Ok(Params::Slg4(p4)),
        _ => Err(ParamsError { line: 0, msg: "no parameter records".into() }),
    }
}

pub fn render_params(params: &Params) -> String {
    let mut out = String::new();
    match params {
        Params::Slg1(p) => {
            for (op, table) in [("sub", &p.sub), ("adj", &p.adj)] {
                for (label, d) in table {
                    for (o, pr) in d.iter() {
                        let _ = writeln!(out, "slg1 {op} {label} {o} {}", format_prob(pr));
                    }
                }
            }
        }
        Params::Slg2(p) => {
            for (o, pr) in p.root.iter() {
                let _ = writeln!(out, "slg2 root {o} {}", format_prob(pr));
            }
            for (op, table) in [("sub", &p.sub), ("adj", &p.adj)] {
                for ((host, addr), d) in table {
                    for (o, pr) in d.iter() {
                        let _ = writeln!(out, "slg2 {op} {host} {addr} {o} {}", format_prob(pr));
                    }
                }
            }
        }
        Params::Slg3(p) => {
            for (o, pr) in p.root.iter() {
                let _ = writeln!(out, "slg3 root {o} {}", format_prob(pr));
            }
            for (mother, d) in &p.expand {
                for (m, pr) in d.iter() {
                    let _ = writeln!(out, "slg3 expand {mother} {} {}", m.expansion_string(), format_prob(pr));
                }
            }
        }
        Params::Slg4(p) => {
            for (f, pr) in &p.fragments {
                let _ = writeln!(out, "slg4 frag {f} {}", format_prob(*pr));
            }
        }
    }
    out
}
