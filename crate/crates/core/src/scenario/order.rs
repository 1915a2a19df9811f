//! Partial orders over delegation step labels, and matching of observed step
//! sequences against them.

use std::collections::BTreeMap;

use crate::delegation::step_labels;

/// A set of steps that must each occur exactly once, with required
/// before/after pairs. Steps not related by an edge may occur in any order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepOrder {
    pub steps: Vec<&'static str>,
    pub edges: Vec<(&'static str, &'static str)>,
}

impl StepOrder {
    fn chain(steps: &[&'static str]) -> Vec<(&'static str, &'static str)> {
        steps.windows(2).map(|w| (w[0], w[1])).collect()
    }

    /// Check `observed` against this order: same multiset of steps, each
    /// once, with every edge respected.
    pub fn check<S: AsRef<str>>(&self, observed: &[S]) -> Result<(), String> {
        let mut pos: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, s) in observed.iter().enumerate() {
            let s = s.as_ref();
            let Some(known) = self.steps.iter().find(|k| **k == s) else {
                return Err(format!("unexpected step {s}"));
            };
            if pos.insert(known, i).is_some() {
                return Err(format!("step {s} occurs more than once"));
            }
        }
        if let Some(missing) = self.steps.iter().find(|s| !pos.contains_key(*s)) {
            return Err(format!("step {missing} is missing"));
        }
        for (a, b) in &self.edges {
            if pos[a] > pos[b] {
                return Err(format!("step {b} occurs before step {a}"));
            }
        }
        Ok(())
    }

    /// Whether `a` must precede `b` (transitively).
    pub fn precedes(&self, a: &str, b: &str) -> bool {
        let mut stack = vec![a];
        let mut seen = Vec::new();
        while let Some(x) = stack.pop() {
            for (p, q) in &self.edges {
                if *p == x && !seen.contains(q) {
                    if *q == b {
                        return true;
                    }
                    seen.push(*q);
                    stack.push(q);
                }
            }
        }
        false
    }
}

/// The step order of a successful delegation. The session-sender's close may
/// happen at any point after the DSACK is sent.
pub fn step_order(secure: bool) -> StepOrder {
    let l = step_labels(secure);
    let mut main = Vec::new();
    main.extend(l.make_cred);
    main.extend([l.start, l.open_port, l.port, l.ds, l.dsack, l.passive_close, l.connect]);
    main.extend(l.cred);
    main.extend(l.check);
    main.extend(l.pass_receiver);
    main.extend(l.pass_passive);
    main.push(l.lm);
    let mut edges = StepOrder::chain(&main);
    edges.push((l.dsack, l.sender_close));
    let mut steps = main;
    steps.push(l.sender_close);
    StepOrder { steps, edges }
}
