//! Synthetic inputs for the benchmarks.

use xat_core::{AbsolutePath, AllPaths, AuthRule, Mode, PathExpr, RuleDocument, Scope};

/// A complete tree with `fanout` children per node, `depth` levels deep.
/// Child names cycle through a small alphabet so `//` patterns match widely.
pub fn tree_universe(depth: usize, fanout: usize) -> AllPaths {
    const NAMES: [&str; 6] = ["a", "b", "c", "d", "e", "f"];
    let mut frontier = vec!["/root".to_string()];
    let mut all = AllPaths::new();
    for _ in 0..depth {
        let mut next = Vec::with_capacity(frontier.len() * fanout);
        for parent in &frontier {
            for (i, name) in NAMES.iter().cycle().take(fanout).enumerate() {
                next.push(format!("{parent}/{name}{i}"));
            }
        }
        frontier = next;
    }
    for p in frontier {
        all.insert(p.parse::<AbsolutePath>().expect("generated path"));
    }
    all
}

/// Alternating grants and denies over descendant patterns with numeric conditions.
pub fn rule_mix(count: usize) -> RuleDocument {
    let rules = (0..count)
        .map(|i| {
            let object = format!("//a0//b{}[. < {}]", i % 3 + 1, 10 * (i % 7 + 1));
            let mode = if i % 3 == 2 { Mode::Deny } else { Mode::Grant };
            let scope = if i % 4 == 0 { Scope::Recursive } else { Scope::Local };
            AuthRule::new(format!("role{}", i % 4), PathExpr::parse(&object).expect("object"), scope, mode)
        })
        .collect();
    RuleDocument { rules }
}
