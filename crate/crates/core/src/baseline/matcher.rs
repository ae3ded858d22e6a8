//! Aho–Corasick automaton over whole tokens.
//!
//! Patterns are token sequences; a match is a contiguous run of document
//! tokens equal to the pattern. Every (pattern, start position) pair is
//! reported once, so distinct patterns may overlap freely.

use std::collections::{HashMap, VecDeque};

const ROOT: usize = 0;

#[derive(Debug, Clone, Default)]
struct State {
    next: HashMap<u32, usize>,
    fail: usize,
    /// Patterns ending here, including those inherited through fail links.
    outputs: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct PhraseAutomaton {
    symbols: HashMap<String, u32>,
    states: Vec<State>,
    n_patterns: usize,
}

impl PhraseAutomaton {
    /// Builds the automaton. Empty patterns are accepted but never match.
    pub fn new<P: AsRef<[String]>>(patterns: &[P]) -> Self {
        let mut symbols: HashMap<String, u32> = HashMap::new();
        let mut states = vec![State::default()];
        for (pid, pattern) in patterns.iter().enumerate() {
            let pattern = pattern.as_ref();
            if pattern.is_empty() {
                continue;
            }
            let mut cur = ROOT;
            for tok in pattern {
                let next_sym = symbols.len() as u32;
                let sym = *symbols.entry(tok.clone()).or_insert(next_sym);
                cur = match states[cur].next.get(&sym) {
                    Some(&s) => s,
                    None => {
                        states.push(State::default());
                        let s = states.len() - 1;
                        states[cur].next.insert(sym, s);
                        s
                    }
                };
            }
            states[cur].outputs.push(pid);
        }

        // breadth-first fail links
        let mut queue: VecDeque<usize> = states[ROOT].next.values().copied().collect();
        while let Some(s) = queue.pop_front() {
            let mut edges: Vec<(u32, usize)> = states[s].next.iter().map(|(&k, &v)| (k, v)).collect();
            edges.sort_unstable();
            for (sym, child) in edges {
                let mut f = states[s].fail;
                let target = loop {
                    if let Some(&t) = states[f].next.get(&sym) {
                        if t != child {
                            break t;
                        }
                    }
                    if f == ROOT {
                        break ROOT;
                    }
                    f = states[f].fail;
                };
                states[child].fail = target;
                let inherited = states[target].outputs.clone();
                states[child].outputs.extend(inherited);
                queue.push_back(child);
            }
        }

        Self {
            symbols,
            states,
            n_patterns: patterns.len(),
        }
    }

    pub fn n_patterns(&self) -> usize {
        self.n_patterns
    }

    fn step(&self, mut state: usize, sym: Option<u32>) -> usize {
        let Some(sym) = sym else { return ROOT };
        loop {
            if let Some(&t) = self.states[state].next.get(&sym) {
                return t;
            }
            if state == ROOT {
                return ROOT;
            }
            state = self.states[state].fail;
        }
    }

    /// Occurrence count per pattern.
    pub fn count<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        let mut counts = vec![0; self.n_patterns];
        let mut state = ROOT;
        for tok in tokens {
            state = self.step(state, self.symbols.get(tok.as_ref()).copied());
            for &p in &self.states[state].outputs {
                counts[p] += 1;
            }
        }
        counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn overlapping_patterns_all_count() {
        let ac = PhraseAutomaton::new(&[seq("a b"), seq("b c"), seq("b"), seq("a b c d")]);
        assert_eq!(ac.count(&seq("a b c d")), vec![1, 1, 1, 1]);
    }

    #[test]
    fn self_overlap_counts_each_start() {
        let ac = PhraseAutomaton::new(&[seq("x x")]);
        assert_eq!(ac.count(&seq("x x x")), vec![2]);
    }

    #[test]
    fn whole_tokens_only() {
        let ac = PhraseAutomaton::new(&[seq("tort")]);
        assert_eq!(ac.count(&seq("torts tort tortious")), vec![1]);
    }

    #[test]
    fn unknown_token_resets() {
        let ac = PhraseAutomaton::new(&[seq("duty care")]);
        assert_eq!(ac.count(&seq("duty zz care duty care")), vec![1]);
    }

    #[test]
    fn empty_pattern_never_matches() {
        let ac = PhraseAutomaton::new(&[Vec::<String>::new(), seq("a")]);
        assert_eq!(ac.count(&seq("a a")), vec![0, 2]);
    }
}
