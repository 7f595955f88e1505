//! Line-oriented update-stream format.
//!
//! ```text
//! problem pnorm n=3 mmax=4 p=2 F=1.5 eps=0.01
//! demand 1 -1
//! demand 3 1
//! edge 1 2 g=0 r=1 w=1
//! start
//! add 2 3 r=2
//! ```
//!
//! Vertices are 1-based in the text and 0-based in memory.

use std::fmt::{self, Write as _};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub msg: String,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Problem {
    PNorm { p: u32, threshold: f64, eps: f64 },
    Maxflow { s: usize, t: usize, eps: f64 },
    EffRes { s: usize, t: usize, theta: f64, eps: f64 },
}

impl Problem {
    pub fn name(&self) -> &'static str {
        match self {
            Problem::PNorm { .. } => "pnorm",
            Problem::Maxflow { .. } => "maxflow",
            Problem::EffRes { .. } => "effres",
        }
    }

    fn edge_keys(&self) -> &'static [&'static str] {
        match self {
            Problem::PNorm { .. } => &["g", "r", "w"],
            Problem::Maxflow { .. } => &["cap"],
            Problem::EffRes { .. } => &["r"],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Header {
    pub problem: Problem,
    pub n: usize,
    pub m_hat: usize,
}

/// An edge line. Attributes keep the form they were written in so printing
/// reproduces the input.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EdgeSpec {
    pub u: usize,
    pub v: usize,
    pub g: Option<f64>,
    pub r: Option<f64>,
    pub w: Option<f64>,
    pub cap: Option<u64>,
}

impl EdgeSpec {
    pub fn new(u: usize, v: usize) -> Self {
        Self {
            u,
            v,
            ..Default::default()
        }
    }

    /// p-norm attributes with defaults `g = 0`, `r = 1`, `w = 1`.
    pub fn attrs(&self) -> incflow::EdgeAttrs {
        incflow::EdgeAttrs::new(self.g.unwrap_or(0.0), self.r.unwrap_or(1.0), self.w.unwrap_or(1.0))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UpdateStream {
    pub header: Header,
    /// `(vertex, amount)` in the order given; only for p-norm streams.
    pub demand: Vec<(usize, f64)>,
    pub initial: Vec<EdgeSpec>,
    pub events: Vec<EdgeSpec>,
}

impl UpdateStream {
    /// The dense demand vector of a p-norm stream (unit s-t demand otherwise).
    pub fn demand_vector(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.header.n];
        match self.header.problem {
            Problem::PNorm { .. } => {
                for &(v, x) in &self.demand {
                    d[v] += x;
                }
            }
            Problem::Maxflow { s, t, .. } | Problem::EffRes { s, t, .. } => {
                d[s] = -1.0;
                d[t] = 1.0;
            }
        }
        d
    }

    pub fn edges(&self) -> impl Iterator<Item = &EdgeSpec> {
        self.initial.iter().chain(&self.events)
    }
}

fn err(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError { line, msg: msg.into() }
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, val: &str) -> Result<T, ParseError> {
    val.parse().map_err(|_| err(line, format!("bad value {val:?} for {key}")))
}

fn parse_real(line: usize, key: &str, val: &str) -> Result<f64, ParseError> {
    let x: f64 = parse_num(line, key, val)?;
    if !x.is_finite() {
        return Err(err(line, format!("{key} must be finite")));
    }
    Ok(x)
}

/// `key=value` pairs; each key at most once and only from `allowed`.
fn pairs<'a>(line: usize, tokens: &[&'a str], allowed: &[&str]) -> Result<Vec<(&'a str, &'a str)>, ParseError> {
    let mut out: Vec<(&str, &str)> = Vec::new();
    for tok in tokens {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected key=value, got {tok:?}")))?;
        if !allowed.contains(&k) {
            return Err(err(line, format!("unknown key {k:?}")));
        }
        if out.iter().any(|(seen, _)| *seen == k) {
            return Err(err(line, format!("duplicate key {k:?}")));
        }
        out.push((k, v));
    }
    Ok(out)
}

fn required<'a>(line: usize, kv: &[(&str, &'a str)], key: &str) -> Result<&'a str, ParseError> {
    kv.iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| err(line, format!("missing {key}")))
}

fn parse_header(line: usize, tokens: &[&str]) -> Result<Header, ParseError> {
    let kind = *tokens.first().ok_or_else(|| err(line, "missing problem kind"))?;
    let rest = &tokens[1..];
    let allowed: &[&str] = match kind {
        "pnorm" => &["n", "mmax", "p", "F", "eps"],
        "maxflow" => &["n", "mmax", "s", "t", "eps"],
        "effres" => &["n", "mmax", "s", "t", "theta", "eps"],
        _ => return Err(err(line, format!("unknown problem {kind:?}"))),
    };
    let kv = pairs(line, rest, allowed)?;
    let n: usize = parse_num(line, "n", required(line, &kv, "n")?)?;
    let m_hat: usize = parse_num(line, "mmax", required(line, &kv, "mmax")?)?;
    if n < 2 {
        return Err(err(line, "need at least 2 vertices"));
    }
    if m_hat == 0 {
        return Err(err(line, "mmax must be positive"));
    }
    let eps = parse_real(line, "eps", required(line, &kv, "eps")?)?;
    if !(eps > 0.0) {
        return Err(err(line, "eps must be positive"));
    }
    let vertex = |key: &str| -> Result<usize, ParseError> {
        let v: usize = parse_num(line, key, required(line, &kv, key)?)?;
        if v == 0 || v > n {
            return Err(err(line, format!("{key}={v} out of range 1..={n}")));
        }
        Ok(v - 1)
    };
    let problem = match kind {
        "pnorm" => {
            let p: u32 = parse_num(line, "p", required(line, &kv, "p")?)?;
            if p < 2 {
                return Err(err(line, "p must be at least 2"));
            }
            Problem::PNorm {
                p,
                threshold: parse_real(line, "F", required(line, &kv, "F")?)?,
                eps,
            }
        }
        _ => {
            let (s, t) = (vertex("s")?, vertex("t")?);
            if s == t {
                return Err(err(line, "s and t coincide"));
            }
            if kind == "maxflow" {
                if eps > 0.5 {
                    return Err(err(line, "eps must be at most 0.5"));
                }
                Problem::Maxflow { s, t, eps }
            } else {
                let theta = parse_real(line, "theta", required(line, &kv, "theta")?)?;
                if !(theta > 0.0) {
                    return Err(err(line, "theta must be positive"));
                }
                Problem::EffRes { s, t, theta, eps }
            }
        }
    };
    Ok(Header { problem, n, m_hat })
}

fn parse_edge(line: usize, header: &Header, tokens: &[&str]) -> Result<EdgeSpec, ParseError> {
    if tokens.len() < 2 {
        return Err(err(line, "edge needs two endpoints"));
    }
    let vertex = |tok: &str| -> Result<usize, ParseError> {
        let v: usize = parse_num(line, "vertex", tok)?;
        if v == 0 || v > header.n {
            return Err(err(line, format!("vertex {v} out of range 1..={}", header.n)));
        }
        Ok(v - 1)
    };
    let (u, v) = (vertex(tokens[0])?, vertex(tokens[1])?);
    if u == v {
        return Err(err(line, format!("self-loop at vertex {}", u + 1)));
    }
    let mut e = EdgeSpec::new(u, v);
    for (k, val) in pairs(line, &tokens[2..], header.problem.edge_keys())? {
        match k {
            "g" => e.g = Some(parse_real(line, k, val)?),
            "r" | "w" => {
                let x = parse_real(line, k, val)?;
                if !(x > 0.0) {
                    return Err(err(line, format!("{k} must be positive")));
                }
                if k == "r" {
                    e.r = Some(x);
                } else {
                    e.w = Some(x);
                }
            }
            "cap" => {
                let c: u64 = parse_num(line, k, val)?;
                if c == 0 {
                    return Err(err(line, "cap must be a positive integer"));
                }
                e.cap = Some(c);
            }
            _ => unreachable!("filtered by pairs"),
        }
    }
    match header.problem {
        Problem::Maxflow { .. } if e.cap.is_none() => Err(err(line, "missing cap")),
        Problem::EffRes { .. } if e.r.is_none() => Err(err(line, "missing r")),
        _ => Ok(e),
    }
}

pub fn parse_stream(text: &str) -> Result<UpdateStream, ParseError> {
    let mut header: Option<Header> = None;
    let mut demand = Vec::new();
    let mut initial = Vec::new();
    let mut events = Vec::new();
    let mut started = false;
    let mut last = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        last = line;
        let body = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = body.split_whitespace().collect();
        let Some((&cmd, rest)) = tokens.split_first() else {
            continue;
        };
        if cmd == "problem" {
            if header.is_some() {
                return Err(err(line, "second problem line"));
            }
            header = Some(parse_header(line, rest)?);
            continue;
        }
        let h = header.as_ref().ok_or_else(|| err(line, "header must come first"))?;
        match cmd {
            "demand" => {
                if !matches!(h.problem, Problem::PNorm { .. }) {
                    return Err(err(line, "demand lines are only for pnorm streams"));
                }
                if started {
                    return Err(err(line, "demand after start"));
                }
                if rest.len() != 2 {
                    return Err(err(line, "demand needs a vertex and an amount"));
                }
                let v: usize = parse_num(line, "vertex", rest[0])?;
                if v == 0 || v > h.n {
                    return Err(err(line, format!("vertex {v} out of range 1..={}", h.n)));
                }
                demand.push((v - 1, parse_real(line, "demand", rest[1])?));
            }
            "edge" | "add" => {
                if (cmd == "edge") == started {
                    return Err(err(line, if started { "edge after start; use add" } else { "add before start; use edge" }));
                }
                if initial.len() + events.len() >= h.m_hat {
                    return Err(err(line, format!("more than mmax={} edges", h.m_hat)));
                }
                let e = parse_edge(line, h, rest)?;
                if started {
                    events.push(e);
                } else {
                    initial.push(e);
                }
            }
            "start" => {
                if started || !rest.is_empty() {
                    return Err(err(line, "malformed start"));
                }
                started = true;
            }
            _ => return Err(err(line, format!("unknown directive {cmd:?}"))),
        }
    }
    let header = header.ok_or_else(|| err(last.max(1), "missing problem line"))?;
    let sum: f64 = demand.iter().map(|(_, x)| x).sum();
    let scale: f64 = demand.iter().map(|(_, x)| x.abs()).sum::<f64>().max(1.0);
    if sum.abs() > 1e-9 * scale {
        return Err(err(last.max(1), format!("demands sum to {sum}, not 0")));
    }
    Ok(UpdateStream {
        header,
        demand,
        initial,
        events,
    })
}

fn write_edge(out: &mut String, kw: &str, e: &EdgeSpec) {
    let _ = write!(out, "{kw} {} {}", e.u + 1, e.v + 1);
    for (k, v) in [("g", e.g), ("r", e.r), ("w", e.w)] {
        if let Some(x) = v {
            let _ = write!(out, " {k}={x}");
        }
    }
    if let Some(c) = e.cap {
        let _ = write!(out, " cap={c}");
    }
    out.push('\n');
}

impl fmt::Display for UpdateStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let Header { problem, n, m_hat } = self.header;
        let mut out = String::new();
        let _ = match problem {
            Problem::PNorm { p, threshold, eps } => writeln!(out, "problem pnorm n={n} mmax={m_hat} p={p} F={threshold} eps={eps}"),
            Problem::Maxflow { s, t, eps } => writeln!(out, "problem maxflow n={n} mmax={m_hat} s={} t={} eps={eps}", s + 1, t + 1),
            Problem::EffRes { s, t, theta, eps } => {
                writeln!(out, "problem effres n={n} mmax={m_hat} s={} t={} theta={theta} eps={eps}", s + 1, t + 1)
            }
        };
        for &(v, x) in &self.demand {
            let _ = writeln!(out, "demand {} {x}", v + 1);
        }
        for e in &self.initial {
            write_edge(&mut out, "edge", e);
        }
        out.push_str("start\n");
        for e in &self.events {
            write_edge(&mut out, "add", e);
        }
        f.write_str(&out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_event_effres_stream() {
        let s = parse_stream("problem effres n=2 mmax=2 s=1 t=2 theta=0.6 eps=0.1\nstart\nadd 1 2 r=1\n").unwrap();
        assert_eq!(
            s.header.problem,
            Problem::EffRes {
                s: 0,
                t: 1,
                theta: 0.6,
                eps: 0.1
            }
        );
        assert!(s.initial.is_empty());
        assert_eq!(s.events.len(), 1);
        assert_eq!(s.events[0].r, Some(1.0));
    }

    #[test]
    fn unbalanced_demand_is_rejected() {
        let text = "problem pnorm n=3 mmax=2 p=2 F=1 eps=0.1\ndemand 1 -1\ndemand 2 1\ndemand 3 0.5\nstart\n";
        let e = parse_stream(text).unwrap_err();
        assert!(e.msg.contains("sum"), "{e}");
    }

    #[test]
    fn self_loop_is_rejected_with_its_line() {
        let text = "problem effres n=2 mmax=2 s=1 t=2 theta=1 eps=0.1\nstart\nadd 1 1 r=1\n";
        assert_eq!(parse_stream(text).unwrap_err().line, 3);
    }

    #[test]
    fn malformed_lines() {
        let bad = [
            "problem pnorm n=3 mmax=2 p=2 F=1 eps=0.1 foo=2\n",
            "edge 1 2\n",
            "problem maxflow n=2 mmax=1 s=1 t=2 eps=0.1\nstart\nadd 1 2 cap=1\nadd 1 2 cap=1\n",
            "problem maxflow n=2 mmax=3 s=1 t=2 eps=0.1\nedge 1 2 r=1\n",
            "problem maxflow n=2 mmax=3 s=1 t=2 eps=0.1\nedge 1 2 cap=1.5\n",
            "problem effres n=2 mmax=3 s=1 t=2 theta=1 eps=0.1\nstart\nedge 1 2 r=1\n",
            "problem pnorm n=2 mmax=3 p=2 F=1 eps=0.1\nedge 1 3\n",
            "problem pnorm n=2 mmax=3 p=2 F=1 eps=0.1\nedge 1 2 r=0\n",
            "problem pnorm n=2 mmax=3 p=2 F=1 eps=0.1\nedge 1 2 g=1 g=2\n",
            "problem pnorm n=2 mmax=3 p=1 F=1 eps=0.1\n",
            "# nothing\n",
        ];
        for text in bad {
            assert!(parse_stream(text).is_err(), "{text}");
        }
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# header next\nproblem pnorm n=2 mmax=1 p=3 F=-0.5 eps=0.01 # trailing\n\ndemand 1 -2\ndemand 2 2\nedge 2 1 g=0.25 w=3\n";
        let s = parse_stream(text).unwrap();
        assert_eq!(s.demand_vector(), vec![-2.0, 2.0]);
        assert_eq!(s.initial[0].attrs(), incflow::EdgeAttrs::new(0.25, 1.0, 3.0));
        assert!(s.events.is_empty());
    }

    #[test]
    fn print_then_parse_is_identity() {
        let text = "problem pnorm n=4 mmax=5 p=4 F=0.1 eps=0.001\ndemand 1 -0.3\ndemand 4 0.3\nedge 1 2 g=-0.1 r=0.7\nedge 2 4 w=0.0000001\nstart\nadd 1 3 g=0.3333333333333333 r=2 w=0.5\nadd 3 4\n";
        let s = parse_stream(text).unwrap();
        let again = parse_stream(&s.to_string()).unwrap();
        assert_eq!(s, again);
        assert_eq!(s.to_string(), text);
    }
}
