//! Taxonomy reachability over the subclass hierarchy.
//!
//! The subclass graph is collapsed to strongly connected components, so
//! cycle members share one ancestor set, and queries run on the resulting
//! DAG. Ancestor sets are computed on demand rather than materialized: the
//! full closure of a deep hierarchy is quadratic in size, while validation
//! only ever needs one reverse reachability sweep per constraint.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::model::{Dump, LiteralKind};

use super::RoleConfig;

/// Subclass reachability plus the direct instance map.
///
/// Logically this is the reflexive-transitive closure of the subclass
/// property: `subclass_star(c)` always contains `c` itself, and is
/// transitively closed. Physically the closure is stored as an
/// SCC-collapsed DAG and each query walks it.
pub struct ClosureIndex {
    /// Class name to dense node id, for classes on any subclass edge.
    node_ids: HashMap<String, u32>,
    node_names: Vec<String>,
    /// Node id to SCC representative id.
    node_repr: Vec<u32>,
    /// SCC representative to member node ids.
    members: Vec<Vec<u32>>,
    /// Upward edges (child SCC to parent SCCs) and their reverse.
    parents: Vec<Vec<u32>>,
    children: Vec<Vec<u32>>,
    /// Subject to direct classes via the instance property.
    instance_of: HashMap<String, BTreeSet<String>>,
    /// Number of collapsed nontrivial cycles.
    pub cycle_count: usize,
}

/// Build the closure index from a dump's taxonomy statements.
pub fn build_closure(dump: &Dump, config: &RoleConfig) -> ClosureIndex {
    let mut node_ids: HashMap<String, u32> = HashMap::new();
    let mut node_names: Vec<String> = Vec::new();
    let intern = |name: &str, ids: &mut HashMap<String, u32>, names: &mut Vec<String>| {
        if let Some(&id) = ids.get(name) {
            return id;
        }
        let id = names.len() as u32;
        ids.insert(name.to_string(), id);
        names.push(name.to_string());
        id
    };

    let mut edges: Vec<(u32, u32)> = Vec::new();
    let mut instance_of: HashMap<String, BTreeSet<String>> = HashMap::new();
    for stmt in &dump.statements {
        if stmt.property == config.subclass_property && stmt.object.kind() == LiteralKind::Entity {
            let child = intern(&stmt.subject, &mut node_ids, &mut node_names);
            let parent = intern(stmt.object.canonical(), &mut node_ids, &mut node_names);
            edges.push((child, parent));
        } else if stmt.property == config.instance_property
            && stmt.object.kind() == LiteralKind::Entity
        {
            instance_of
                .entry(stmt.subject.clone())
                .or_default()
                .insert(stmt.object.canonical().to_string());
        }
    }

    let n = node_names.len();
    let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (child, parent) in edges {
        adjacency[child as usize].push(parent);
    }
    for list in &mut adjacency {
        list.sort_unstable();
        list.dedup();
    }

    let (node_repr, scc_count) = tarjan_scc(&adjacency);
    let mut members: Vec<Vec<u32>> = vec![Vec::new(); scc_count];
    for (node, &repr) in node_repr.iter().enumerate() {
        members[repr as usize].push(node as u32);
    }
    let cycle_count = members.iter().filter(|m| m.len() > 1).count()
        + members
            .iter()
            .filter(|m| m.len() == 1 && adjacency[m[0] as usize].contains(&m[0]))
            .count();

    let mut parents: Vec<Vec<u32>> = vec![Vec::new(); scc_count];
    let mut children: Vec<Vec<u32>> = vec![Vec::new(); scc_count];
    for (node, targets) in adjacency.iter().enumerate() {
        let from = node_repr[node];
        for &target in targets {
            let to = node_repr[target as usize];
            if from != to {
                parents[from as usize].push(to);
                children[to as usize].push(from);
            }
        }
    }
    for list in parents.iter_mut().chain(children.iter_mut()) {
        list.sort_unstable();
        list.dedup();
    }

    ClosureIndex {
        node_ids,
        node_names,
        node_repr,
        members,
        parents,
        children,
        instance_of,
        cycle_count,
    }
}

/// Iterative Tarjan strongly-connected components. Returns each node's
/// component id and the component count.
fn tarjan_scc(adjacency: &[Vec<u32>]) -> (Vec<u32>, usize) {
    let n = adjacency.len();
    const UNSET: u32 = u32::MAX;
    let mut index = vec![UNSET; n];
    let mut lowlink = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNSET; n];
    let mut stack: Vec<u32> = Vec::new();
    let mut next_index = 0u32;
    let mut comp_count = 0usize;
    // Explicit DFS frames: (node, next child position).
    let mut frames: Vec<(u32, usize)> = Vec::new();

    for start in 0..n as u32 {
        if index[start as usize] != UNSET {
            continue;
        }
        frames.push((start, 0));
        index[start as usize] = next_index;
        lowlink[start as usize] = next_index;
        next_index += 1;
        stack.push(start);
        on_stack[start as usize] = true;

        while let Some(&mut (node, ref mut child_pos)) = frames.last_mut() {
            if let Some(&child) = adjacency[node as usize].get(*child_pos) {
                *child_pos += 1;
                if index[child as usize] == UNSET {
                    index[child as usize] = next_index;
                    lowlink[child as usize] = next_index;
                    next_index += 1;
                    stack.push(child);
                    on_stack[child as usize] = true;
                    frames.push((child, 0));
                } else if on_stack[child as usize] {
                    lowlink[node as usize] = lowlink[node as usize].min(index[child as usize]);
                }
            } else {
                frames.pop();
                if let Some(&(parent, _)) = frames.last() {
                    lowlink[parent as usize] = lowlink[parent as usize].min(lowlink[node as usize]);
                }
                if lowlink[node as usize] == index[node as usize] {
                    loop {
                        let member = stack.pop().expect("SCC stack underflow");
                        on_stack[member as usize] = false;
                        comp[member as usize] = comp_count as u32;
                        if member == node {
                            break;
                        }
                    }
                    comp_count += 1;
                }
            }
        }
    }
    (comp, comp_count)
}

impl ClosureIndex {
    /// Direct classes of a subject, or None when it has no typing
    /// statement.
    pub fn classes_of(&self, subject: &str) -> Option<&BTreeSet<String>> {
        self.instance_of.get(subject)
    }

    /// Subject to direct classes, in deterministic order.
    pub fn instance_index(&self) -> BTreeMap<String, BTreeSet<String>> {
        self.instance_of
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }

    /// The reflexive-transitive ancestor set of a class. A class absent
    /// from the subclass graph is its own sole ancestor.
    pub fn subclass_star(&self, class: &str) -> BTreeSet<String> {
        let Some(&node) = self.node_ids.get(class) else {
            return std::iter::once(class.to_string()).collect();
        };
        let start = self.node_repr[node as usize];
        let mut seen: HashSet<u32> = HashSet::new();
        let mut queue = vec![start];
        seen.insert(start);
        let mut out = BTreeSet::new();
        while let Some(repr) = queue.pop() {
            for &member in &self.members[repr as usize] {
                out.insert(self.node_names[member as usize].clone());
            }
            for &parent in &self.parents[repr as usize] {
                if seen.insert(parent) {
                    queue.push(parent);
                }
            }
        }
        out
    }

    /// Membership test for "reaches one of `targets` through zero or more
    /// subclass steps", precomputed for a whole target set in one reverse
    /// sweep. Validators call this once per constraint, then test each
    /// statement in constant time.
    pub fn class_test(&self, targets: &BTreeSet<String>) -> ClassTest<'_> {
        let mut good_reprs: HashSet<u32> = HashSet::new();
        let mut queue: Vec<u32> = Vec::new();
        let mut loose_targets: HashSet<String> = HashSet::new();
        for target in targets {
            match self.node_ids.get(target) {
                Some(&node) => {
                    let repr = self.node_repr[node as usize];
                    if good_reprs.insert(repr) {
                        queue.push(repr);
                    }
                }
                None => {
                    // Not on any subclass edge: reachable only from itself.
                    loose_targets.insert(target.clone());
                }
            }
        }
        while let Some(repr) = queue.pop() {
            for &child in &self.children[repr as usize] {
                if good_reprs.insert(child) {
                    queue.push(child);
                }
            }
        }
        ClassTest {
            index: self,
            good_reprs,
            loose_targets,
        }
    }
}

/// Precomputed reverse-reachability set for one target class set.
pub struct ClassTest<'a> {
    index: &'a ClosureIndex,
    good_reprs: HashSet<u32>,
    loose_targets: HashSet<String>,
}

impl ClassTest<'_> {
    /// True iff `subclass_star(class)` intersects the target set.
    pub fn contains(&self, class: &str) -> bool {
        match self.index.node_ids.get(class) {
            Some(&node) => self
                .good_reprs
                .contains(&self.index.node_repr[node as usize]),
            None => self.loose_targets.contains(class),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{IdentityMode, Statement};
    use proptest::prelude::*;

    fn taxonomy(edges: &[(&str, &str)], instances: &[(&str, &str)]) -> ClosureIndex {
        let mut dump = Dump::new("t", IdentityMode::Content);
        for (i, (child, parent)) in edges.iter().enumerate() {
            dump.statements
                .push(Statement::new(&format!("E{i}"), child, "P279", parent));
        }
        for (i, (subject, class)) in instances.iter().enumerate() {
            dump.statements
                .push(Statement::new(&format!("I{i}"), subject, "P31", class));
        }
        build_closure(&dump, &RoleConfig::default())
    }

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn chain_closure_is_reflexive_and_transitive() {
        let index = taxonomy(&[("Q1", "Q2"), ("Q2", "Q3")], &[]);
        assert_eq!(index.subclass_star("Q1"), set(&["Q1", "Q2", "Q3"]));
        assert_eq!(index.subclass_star("Q2"), set(&["Q2", "Q3"]));
        assert_eq!(index.subclass_star("Q3"), set(&["Q3"]));
    }

    #[test]
    fn unknown_class_is_its_own_ancestor() {
        let index = taxonomy(&[], &[]);
        assert_eq!(index.subclass_star("Q99"), set(&["Q99"]));
    }

    #[test]
    fn cycle_members_share_one_ancestor_set() {
        let index = taxonomy(&[("Q1", "Q2"), ("Q2", "Q1")], &[]);
        assert_eq!(index.subclass_star("Q1"), set(&["Q1", "Q2"]));
        assert_eq!(index.subclass_star("Q2"), set(&["Q1", "Q2"]));
        assert_eq!(index.cycle_count, 1);
    }

    #[test]
    fn cycle_with_tail_reaches_past_the_cycle() {
        let index = taxonomy(&[("Q1", "Q2"), ("Q2", "Q1"), ("Q2", "Q3")], &[]);
        assert_eq!(index.subclass_star("Q1"), set(&["Q1", "Q2", "Q3"]));
    }

    #[test]
    fn class_test_matches_subclass_star() {
        let index = taxonomy(&[("Q1", "Q2"), ("Q2", "Q3"), ("Q8", "Q3")], &[]);
        let test = index.class_test(&set(&["Q2"]));
        assert!(test.contains("Q1"));
        assert!(test.contains("Q2"));
        assert!(!test.contains("Q3"));
        assert!(!test.contains("Q8"));
        // A target absent from the subclass graph matches only itself.
        let loose = index.class_test(&set(&["Q404"]));
        assert!(loose.contains("Q404"));
        assert!(!loose.contains("Q1"));
    }

    #[test]
    fn instance_map_collects_direct_classes() {
        let index = taxonomy(&[], &[("Q1", "Q5"), ("Q1", "Q6"), ("Q2", "Q5")]);
        assert_eq!(index.classes_of("Q1").unwrap(), &set(&["Q5", "Q6"]));
        assert!(index.classes_of("Q9").is_none());
    }

    /// Boolean reachability by repeated squaring of the adjacency matrix.
    fn reachability_oracle(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
        let mut reach = vec![vec![false; n]; n];
        for i in 0..n {
            reach[i][i] = true;
        }
        for &(a, b) in edges {
            reach[a][b] = true;
        }
        loop {
            let mut next = reach.clone();
            for i in 0..n {
                for k in 0..n {
                    if reach[i][k] {
                        for j in 0..n {
                            if reach[k][j] {
                                next[i][j] = true;
                            }
                        }
                    }
                }
            }
            if next == reach {
                return reach;
            }
            reach = next;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn closure_matches_matrix_reachability(
            edges in proptest::collection::vec((0usize..30, 0usize..30), 0..80),
        ) {
            let n = 30;
            // Entity ids start at 1, so node k is named Q{k+1}.
            let named: Vec<(String, String)> = edges
                .iter()
                .map(|(a, b)| (format!("Q{}", a + 1), format!("Q{}", b + 1)))
                .collect();
            let edge_refs: Vec<(&str, &str)> = named
                .iter()
                .map(|(a, b)| (a.as_str(), b.as_str()))
                .collect();
            let index = taxonomy(&edge_refs, &[]);
            let oracle = reachability_oracle(n, &edges);
            for a in 0..n {
                let name = format!("Q{}", a + 1);
                let star = index.subclass_star(&name);
                for b in 0..n {
                    let target = format!("Q{}", b + 1);
                    let in_graph = edges.iter().any(|&(x, y)| x == b || y == b);
                    // Nodes never mentioned on an edge are absent from the
                    // index; the oracle still tracks them via the identity
                    // diagonal, so compare only mentioned nodes.
                    if !in_graph && a != b {
                        continue;
                    }
                    let mentioned_a = edges.iter().any(|&(x, y)| x == a || y == a);
                    if !mentioned_a {
                        continue;
                    }
                    prop_assert_eq!(
                        star.contains(&target),
                        oracle[a][b],
                        "a={} b={}", a, b
                    );
                }
            }
        }

        #[test]
        fn class_test_agrees_with_subclass_star(
            edges in proptest::collection::vec((0usize..15, 0usize..15), 0..40),
            targets in proptest::collection::btree_set(0usize..15, 0..5),
        ) {
            let named: Vec<(String, String)> = edges
                .iter()
                .map(|(a, b)| (format!("Q{}", a + 1), format!("Q{}", b + 1)))
                .collect();
            let edge_refs: Vec<(&str, &str)> = named
                .iter()
                .map(|(a, b)| (a.as_str(), b.as_str()))
                .collect();
            let index = taxonomy(&edge_refs, &[]);
            let target_names: BTreeSet<String> =
                targets.iter().map(|t| format!("Q{}", t + 1)).collect();
            let test = index.class_test(&target_names);
            for a in 0..15 {
                let name = format!("Q{}", a + 1);
                let expected = !index
                    .subclass_star(&name)
                    .is_disjoint(&target_names);
                prop_assert_eq!(test.contains(&name), expected, "class {}", a);
            }
        }
    }
}
