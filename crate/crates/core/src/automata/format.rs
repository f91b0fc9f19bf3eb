//! Text format for reward machines.
//!
//! ```text
//! props: a b c d m o
//! init: v0
//! default: self / 0
//! v0 -- c / 0 --> v1
//! v1 -- o / 1 --> v2
//! ```
//!
//! Guards are expanded to every satisfying label. Pairs left unspecified take
//! the `default` rule (a self-loop with the given reward); without one, every
//! pair must be covered. An optional `states: n` line declares states that no
//! transition mentions. Lines starting with `#` are comments.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::guard::{expand_guard, guard_for_labels, parse_guard};
use super::label::{Label, PropSet};
use super::machine::{reward_key, Reward, RewardMachine};
use crate::error::{Error, Result};

pub fn parse_machine(text: &str) -> Result<RewardMachine> {
    let mut props: Option<PropSet> = None;
    let mut init: Option<usize> = None;
    let mut default: Option<Reward> = None;
    let mut declared = 0usize;
    // (line, column of guard, source, guard, reward, target)
    let mut edges = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let col_of = |s: &str| s.as_ptr() as usize - raw.as_ptr() as usize + 1;
        if let Some(rest) = line.strip_prefix("props:") {
            if props.is_some() {
                return Err(Error::parse(line_no, 1, "duplicate `props:` line"));
            }
            props = Some(
                PropSet::new(rest.split_whitespace())
                    .map_err(|e| Error::parse(line_no, col_of(rest), e.to_string()))?,
            );
        } else if let Some(rest) = line.strip_prefix("init:") {
            init = Some(parse_state(rest.trim(), line_no, col_of(rest))?);
        } else if let Some(rest) = line.strip_prefix("states:") {
            declared = rest
                .trim()
                .parse()
                .map_err(|_| Error::parse(line_no, col_of(rest), "expected a state count"))?;
        } else if let Some(rest) = line.strip_prefix("default:") {
            let (kind, r) = rest
                .split_once('/')
                .ok_or_else(|| Error::parse(line_no, col_of(rest), "expected `self / <reward>`"))?;
            if kind.trim() != "self" {
                return Err(Error::parse(
                    line_no,
                    col_of(kind),
                    "only `self` defaults are supported",
                ));
            }
            default = Some(parse_reward(r.trim(), line_no, col_of(r))?);
        } else {
            let (lhs, target) = line
                .rsplit_once("-->")
                .ok_or_else(|| Error::parse(line_no, 1, "expected `vi -- guard / r --> vj`"))?;
            let (source, label_part) = lhs
                .split_once("--")
                .ok_or_else(|| Error::parse(line_no, 1, "expected `--` after source state"))?;
            let (guard, reward) = label_part.rsplit_once('/').ok_or_else(|| {
                Error::parse(line_no, col_of(label_part), "expected `guard / reward`")
            })?;
            let src = parse_state(source.trim(), line_no, col_of(source))?;
            let dst = parse_state(target.trim(), line_no, col_of(target))?;
            let r = parse_reward(reward.trim(), line_no, col_of(reward))?;
            let g = parse_guard(guard).map_err(|e| match e {
                Error::Parse {
                    column, message, ..
                } => Error::parse(line_no, col_of(guard) + column - 1, message),
                other => other,
            })?;
            edges.push((line_no, col_of(guard), src, g, r, dst));
        }
    }

    let props = props.ok_or_else(|| Error::parse(1, 1, "missing `props:` line"))?;
    let init = init.ok_or_else(|| Error::parse(1, 1, "missing `init:` line"))?;
    let states = edges
        .iter()
        .flat_map(|e| [e.2, e.5])
        .chain([init])
        .max()
        .unwrap_or(0)
        .max(declared.saturating_sub(1))
        + 1;
    let labels = props.label_count();
    let mut table: Vec<Option<(usize, Reward)>> = vec![None; states * labels];
    for (line_no, col, src, g, r, dst) in &edges {
        let ls =
            expand_guard(g, &props).map_err(|e| Error::parse(*line_no, *col, e.to_string()))?;
        for l in ls {
            let slot = &mut table[src * labels + l.index()];
            if slot.is_some() {
                return Err(Error::parse(
                    *line_no,
                    *col,
                    format!(
                        "guard overlaps an earlier transition from v{src} on label {}",
                        props.format_label(l)
                    ),
                ));
            }
            *slot = Some((*dst, *r));
        }
    }
    let mut next = Vec::with_capacity(table.len());
    let mut output = Vec::with_capacity(table.len());
    for (i, entry) in table.into_iter().enumerate() {
        let v = i / labels;
        let (t, r) = match (entry, default) {
            (Some(e), _) => e,
            (None, Some(d)) => (v, d),
            (None, None) => {
                return Err(Error::input(format!(
                    "no transition from v{v} on label {} and no `default:` line",
                    props.format_label(Label((i % labels) as u32))
                )))
            }
        };
        next.push(t);
        output.push(r);
    }
    RewardMachine::new(props, init, next, output)
}

fn parse_state(s: &str, line: usize, col: usize) -> Result<usize> {
    s.strip_prefix('v')
        .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
        .and_then(|d| d.parse().ok())
        .ok_or_else(|| {
            Error::parse(
                line,
                col,
                format!("expected a state name like `v0`, found `{s}`"),
            )
        })
}

fn parse_reward(s: &str, line: usize, col: usize) -> Result<Reward> {
    s.parse::<f64>()
        .ok()
        .filter(|r| r.is_finite())
        .ok_or_else(|| Error::parse(line, col, format!("invalid reward `{s}`")))
}

/// Serializes a machine. Zero-reward self-loops are left to the `default`
/// line; remaining transitions are grouped per (source, target, reward) and
/// written with a minimized guard.
pub fn write_machine(m: &RewardMachine) -> String {
    let props = m.props();
    let mut out = String::new();
    let _ = writeln!(out, "props: {props}");
    let _ = writeln!(out, "states: {}", m.num_states());
    let _ = writeln!(out, "init: v{}", m.initial());
    let _ = writeln!(out, "default: self / 0");
    for v in 0..m.num_states() {
        let mut groups: BTreeMap<(usize, u64), (Reward, Vec<Label>)> = BTreeMap::new();
        for l in props.labels() {
            let (t, r) = m.step(v, l);
            if t == v && r == 0.0 {
                continue;
            }
            groups
                .entry((t, reward_key(r)))
                .or_insert_with(|| (r, Vec::new()))
                .1
                .push(l);
        }
        for ((t, _), (r, ls)) in groups {
            let _ = writeln!(
                out,
                "v{v} -- {} / {r} --> v{t}",
                guard_for_labels(&ls, props)
            );
        }
    }
    out
}

pub fn load_machine(path: impl AsRef<Path>) -> Result<RewardMachine> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    parse_machine(&text)
}

pub fn save_machine(m: &RewardMachine, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_machine(m)).map_err(|e| Error::file(path, e))
}
