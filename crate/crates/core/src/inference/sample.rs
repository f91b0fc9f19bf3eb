use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::automata::machine::reward_key;
use crate::automata::{Label, PropSet, Reward, Trace};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Insert {
    Added,
    Duplicate,
    /// The trace disagrees with a stored trace on the rewards of a shared
    /// label prefix; no deterministic machine can explain both.
    Conflict,
}

/// A deduplicated, prefix-consistent set of traces.
#[derive(Clone, Debug)]
pub struct Sample {
    props: PropSet,
    traces: Vec<Trace>,
    keys: HashSet<(Vec<u32>, Vec<u64>)>,
    /// Prefix trie: per node, children by label with the reward on the edge.
    trie: Vec<BTreeMap<Label, (usize, Reward)>>,
}

impl Sample {
    pub fn new(props: PropSet) -> Self {
        Sample {
            props,
            traces: Vec::new(),
            keys: HashSet::new(),
            trie: vec![BTreeMap::new()],
        }
    }

    pub fn props(&self) -> &PropSet {
        &self.props
    }

    pub fn traces(&self) -> &[Trace] {
        &self.traces
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    /// Number of distinct label prefixes, including the empty one.
    pub fn prefix_count(&self) -> usize {
        self.trie.len()
    }

    pub(crate) fn trie(&self) -> &[BTreeMap<Label, (usize, Reward)>] {
        &self.trie
    }

    /// Adds a trace. The empty trace carries no information and is reported
    /// as a duplicate.
    pub fn insert(&mut self, trace: Trace) -> Result<Insert> {
        if trace.labels.len() != trace.rewards.len() {
            return Err(Error::input("trace labels and rewards differ in length"));
        }
        for &l in &trace.labels {
            self.props.check_label(l)?;
        }
        if trace.is_empty() {
            return Ok(Insert::Duplicate);
        }
        let key = (
            trace.labels.iter().map(|l| l.bits()).collect::<Vec<_>>(),
            trace
                .rewards
                .iter()
                .map(|&r| reward_key(r))
                .collect::<Vec<_>>(),
        );
        if self.keys.contains(&key) {
            return Ok(Insert::Duplicate);
        }
        // Check compatibility before touching the trie.
        let mut node = Some(0);
        for (&l, &r) in trace.labels.iter().zip(&trace.rewards) {
            let Some(n) = node else { break };
            node = match self.trie[n].get(&l) {
                Some(&(_, stored)) if reward_key(stored) != reward_key(r) => {
                    return Ok(Insert::Conflict)
                }
                Some(&(child, _)) => Some(child),
                None => None,
            };
        }
        let mut n = 0;
        for (&l, &r) in trace.labels.iter().zip(&trace.rewards) {
            n = match self.trie[n].get(&l) {
                Some(&(child, _)) => child,
                None => {
                    let child = self.trie.len();
                    self.trie.push(BTreeMap::new());
                    self.trie[n].insert(l, (child, r));
                    child
                }
            };
        }
        self.keys.insert(key);
        self.traces.push(trace);
        Ok(Insert::Added)
    }

    /// Serializes as a `props:` line followed by one `l1;l2 / r1;r2` line per
    /// trace.
    pub fn to_text(&self) -> String {
        let mut out = format!("props: {}\n", self.props);
        for t in &self.traces {
            let ls: Vec<String> = t
                .labels
                .iter()
                .map(|&l| self.props.format_label(l))
                .collect();
            let rs: Vec<String> = t.rewards.iter().map(|r| r.to_string()).collect();
            let _ = writeln!(out, "{} / {}", ls.join(";"), rs.join(";"));
        }
        out
    }

    /// Parses the format written by [`Sample::to_text`]. Conflicting traces
    /// are an error.
    pub fn parse(text: &str) -> Result<Self> {
        let mut sample: Option<Sample> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("props:") {
                let props = PropSet::new(rest.split_whitespace())
                    .map_err(|e| Error::parse(i + 1, 1, e.to_string()))?;
                sample = Some(Sample::new(props));
                continue;
            }
            let s = sample
                .as_mut()
                .ok_or_else(|| Error::parse(i + 1, 1, "sample must start with a `props:` line"))?;
            let (ls, rs) = line
                .rsplit_once('/')
                .ok_or_else(|| Error::parse(i + 1, 1, "expected `labels / rewards`"))?;
            let labels = ls
                .split(';')
                .map(|l| s.props.parse_label(l))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::parse(i + 1, 1, e.to_string()))?;
            let rewards = rs
                .split(';')
                .map(|r| r.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(i + 1, ls.len() + 2, e.to_string()))?;
            let trace =
                Trace::new(labels, rewards).map_err(|e| Error::parse(i + 1, 1, e.to_string()))?;
            if s.insert(trace)? == Insert::Conflict {
                return Err(Error::Conflict(format!(
                    "line {} contradicts an earlier trace",
                    i + 1
                )));
            }
        }
        sample.ok_or_else(|| Error::parse(1, 1, "empty sample file"))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::parse(&text)
    }
}

/// Free-function form of [`Sample::insert`].
pub fn sample_insert(x: &mut Sample, t: Trace) -> Result<Insert> {
    x.insert(t)
}
