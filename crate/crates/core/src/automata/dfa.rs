//! Deterministic finite automata, the Mealy-to-DFA encoding of reward
//! machines, and shortest inequivalence witnesses.

use std::collections::{HashMap, VecDeque};
use std::hash::{Hash, Hasher};

use rand::Rng;

use super::label::Label;
use super::machine::{reward_key, Reward, RewardMachine};
use crate::error::{Error, Result};

/// A total DFA over an explicit, ordered alphabet.
#[derive(Clone, Debug)]
pub struct Dfa<S> {
    alphabet: Vec<S>,
    index: HashMap<S, usize>,
    initial: usize,
    delta: Vec<usize>,
    accepting: Vec<bool>,
}

impl<S: Clone + Eq + Hash> Dfa<S> {
    /// `delta[q * |Σ| + i]` is the successor of `q` on `alphabet[i]`.
    pub fn new(
        alphabet: Vec<S>,
        initial: usize,
        delta: Vec<usize>,
        accepting: Vec<bool>,
    ) -> Result<Self> {
        let mut index = HashMap::with_capacity(alphabet.len());
        for (i, a) in alphabet.iter().enumerate() {
            if index.insert(a.clone(), i).is_some() {
                return Err(Error::input("duplicate symbol in DFA alphabet"));
            }
        }
        let n = accepting.len();
        if n == 0
            || initial >= n
            || delta.len() != n * alphabet.len()
            || delta.iter().any(|&q| q >= n)
        {
            return Err(Error::input("malformed DFA transition table"));
        }
        Ok(Dfa {
            alphabet,
            index,
            initial,
            delta,
            accepting,
        })
    }

    /// Uniformly random DFA; used by tests.
    pub fn random<R: Rng + ?Sized>(alphabet: Vec<S>, states: usize, rng: &mut R) -> Self {
        let delta = (0..states * alphabet.len())
            .map(|_| rng.gen_range(0..states))
            .collect();
        let accepting = (0..states).map(|_| rng.gen_bool(0.5)).collect();
        Self::new(alphabet, 0, delta, accepting).expect("random DFA is well formed")
    }

    pub fn alphabet(&self) -> &[S] {
        &self.alphabet
    }

    pub fn num_states(&self) -> usize {
        self.accepting.len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn is_accepting(&self, q: usize) -> bool {
        self.accepting[q]
    }

    pub fn symbol_index(&self, a: &S) -> Option<usize> {
        self.index.get(a).copied()
    }

    pub fn step_index(&self, q: usize, i: usize) -> usize {
        self.delta[q * self.alphabet.len() + i]
    }

    pub fn step(&self, q: usize, a: &S) -> Result<usize> {
        let i = self
            .symbol_index(a)
            .ok_or_else(|| Error::input("symbol outside DFA alphabet"))?;
        Ok(self.step_index(q, i))
    }

    pub fn accepts(&self, word: &[S]) -> Result<bool> {
        let mut q = self.initial;
        for a in word {
            q = self.step(q, a)?;
        }
        Ok(self.accepting[q])
    }
}

/// Shortest word accepted by exactly one of the two automata, or `None` when
/// their languages coincide. Breadth-first search over the product.
pub fn dfa_inequivalence_witness<S: Clone + Eq + Hash>(
    d1: &Dfa<S>,
    d2: &Dfa<S>,
) -> Result<Option<Vec<S>>> {
    if d1.alphabet.len() != d2.alphabet.len()
        || d1.alphabet.iter().any(|a| !d2.index.contains_key(a))
    {
        return Err(Error::AlphabetMismatch);
    }
    // Position in d2's alphabet for each symbol index of d1.
    let remap: Vec<usize> = d1.alphabet.iter().map(|a| d2.index[a]).collect();
    let n2 = d2.num_states();
    let start = (d1.initial, d2.initial);
    let mut parent: HashMap<usize, (usize, usize)> = HashMap::new();
    let key = |(a, b): (usize, usize)| a * n2 + b;
    let mut seen = vec![false; d1.num_states() * n2];
    seen[key(start)] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(pair @ (q1, q2)) = queue.pop_front() {
        if d1.accepting[q1] != d2.accepting[q2] {
            let mut word = Vec::new();
            let mut k = key(pair);
            while let Some(&(prev, sym)) = parent.get(&k) {
                word.push(d1.alphabet[sym].clone());
                k = prev;
            }
            word.reverse();
            return Ok(Some(word));
        }
        for (i, &j) in remap.iter().enumerate() {
            let next = (d1.step_index(q1, i), d2.step_index(q2, j));
            let nk = key(next);
            if !seen[nk] {
                seen[nk] = true;
                parent.insert(nk, (key(pair), i));
                queue.push_back(next);
            }
        }
    }
    Ok(None)
}

/// A (label, reward) letter of the encoded reward-machine language.
#[derive(Clone, Copy, Debug)]
pub struct IoSymbol {
    pub label: Label,
    pub reward: Reward,
}

impl PartialEq for IoSymbol {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label && reward_key(self.reward) == reward_key(other.reward)
    }
}

impl Eq for IoSymbol {}

impl Hash for IoSymbol {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.label.hash(state);
        reward_key(self.reward).hash(state);
    }
}

/// Encodes a reward machine as a DFA over `labels × R` where `R` is the set of
/// rewards occurring in the machine plus `extra_rewards`. Accepts exactly the
/// words `(ℓ1, r1)…(ℓk, rk)` on which the machine outputs `r1…rk`. State
/// `|V|` is the rejecting sink.
pub fn machine_to_dfa(m: &RewardMachine, extra_rewards: &[Reward]) -> Dfa<IoSymbol> {
    let mut rewards = m.reward_values();
    rewards.extend_from_slice(extra_rewards);
    rewards.sort_by(f64::total_cmp);
    rewards.dedup_by(|a, b| reward_key(*a) == reward_key(*b));
    let alphabet: Vec<IoSymbol> = m
        .props()
        .labels()
        .flat_map(|label| {
            rewards
                .iter()
                .map(move |&reward| IoSymbol { label, reward })
        })
        .collect();
    let n = m.num_states();
    let sink = n;
    let mut delta = Vec::with_capacity((n + 1) * alphabet.len());
    for q in 0..=n {
        for a in &alphabet {
            delta.push(if q == sink {
                sink
            } else {
                let (t, r) = m.step(q, a.label);
                if reward_key(r) == reward_key(a.reward) {
                    t
                } else {
                    sink
                }
            });
        }
    }
    let mut accepting = vec![true; n + 1];
    accepting[sink] = false;
    Dfa::new(alphabet, m.initial(), delta, accepting).expect("encoded machine is a well-formed DFA")
}
