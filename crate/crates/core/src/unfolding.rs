//! Run-tree unfolding `U` and the `unf` morphism back to the unfolded system.

use std::collections::{BTreeMap, BTreeSet};

use crate::lts::{check_morphism, is_open_away_from, Action, Lts, LtsMorphism, MorphismReport, OpenVerdict, Run, StateId, Symbol, Transition};

/// A tree whose states are runs, written `"s0 -a1-> s1 ..."`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunTree<A: Action = Symbol> {
    pub lts: Lts<A>,
    /// `None` when the tree holds every run; otherwise the truncation depth.
    pub depth_bound: Option<usize>,
    /// Truncated runs: length equal to the bound, with successors left out.
    pub frontier: BTreeSet<StateId>,
}

impl<A: Action> RunTree<A> {
    pub fn is_complete(&self) -> bool {
        self.frontier.is_empty()
    }
}

/// Canonical state id of a run.
pub fn run_id<A: Action>(run: &Run<A>) -> StateId {
    run.to_string()
}

/// All runs of `t` of length at most `depth`, with `unf` sending each to its end state.
pub fn unfold<A: Action>(t: &Lts<A>, depth: usize) -> (RunTree<A>, LtsMorphism<A>) {
    let root = Run::empty(t.initial().to_string());
    let mut states = BTreeSet::from([run_id(&root)]);
    let mut map = BTreeMap::from([(run_id(&root), root.end().to_string())]);
    let mut transitions = BTreeSet::new();
    let mut frontier = BTreeSet::new();
    let mut layer = vec![root];
    for level in 0..=depth {
        let mut next = Vec::new();
        for run in &layer {
            let id = run_id(run);
            let successors = t.successors(run.end());
            if level == depth {
                if !successors.is_empty() {
                    frontier.insert(id);
                }
                continue;
            }
            for (a, dst) in successors {
                let child = run.extended(a.clone(), dst.clone());
                let child_id = run_id(&child);
                states.insert(child_id.clone());
                map.insert(child_id.clone(), dst.clone());
                transitions.insert(Transition::new(id.clone(), a.clone(), child_id));
                next.push(child);
            }
        }
        layer = next;
    }
    let lts = Lts::new(states, run_id(&Run::<A>::empty(t.initial().to_string())), transitions)
        .expect("run tree is well formed");
    let unf = LtsMorphism::new(lts.clone(), t.clone(), map).expect("every run ends in a state of t");
    let depth_bound = (!frontier.is_empty()).then_some(depth);
    (RunTree { lts, depth_bound, frontier }, unf)
}

/// Every state is reached by exactly one run.
pub fn is_tree<A: Action>(t: &Lts<A>) -> bool {
    if t.reachable().len() != t.states().len() {
        return false;
    }
    let mut in_degree: BTreeMap<&str, usize> = t.states().iter().map(|s| (s.as_str(), 0)).collect();
    for tr in t.transitions() {
        *in_degree.get_mut(tr.dst.as_str()).expect("declared state") += 1;
    }
    in_degree.iter().all(|(s, &d)| if *s == t.initial() { d == 0 } else { d == 1 })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UnfOpenness<A: Action = Symbol> {
    /// Open on every run off the frontier; `exact` when the frontier is empty.
    Open { exact: bool },
    NotOpen(crate::lts::LiftingCounterexample<A>),
    /// The map is not a morphism at all; openness was not examined.
    NotAMorphism(MorphismReport<A>),
}

pub fn unf_is_open_check<A: Action>(t: &Lts<A>, depth: usize) -> UnfOpenness<A> {
    let (tree, unf) = unfold(t, depth);
    check_unf(&tree, &unf)
}

/// Openness of a given `unf` away from the tree's frontier.
pub fn check_unf<A: Action>(tree: &RunTree<A>, unf: &LtsMorphism<A>) -> UnfOpenness<A> {
    let report = check_morphism(unf);
    if !report.is_valid() {
        return UnfOpenness::NotAMorphism(report);
    }
    match is_open_away_from(unf, &tree.frontier).expect("checked above") {
        OpenVerdict::Open => UnfOpenness::Open { exact: tree.is_complete() },
        OpenVerdict::NotOpen(cx) => UnfOpenness::NotOpen(cx),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::lts::{strong_bisimilarity, LinearPath};

    fn word(w: &[&str]) -> LinearPath {
        LinearPath::new(w.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn linear_system_is_its_own_unfolding() {
        let ab = word(&["a", "b"]).to_lts();
        let (tree, unf) = unfold(&ab, 2);
        assert!(tree.is_complete());
        assert_eq!(tree.depth_bound, None);
        assert!(unf.is_isomorphism());
    }

    #[test]
    fn runs_of_t_d() {
        let (tree, unf) = unfold(&catalog::t_d(), 2);
        let ids: Vec<&str> = tree.lts.states().iter().map(String::as_str).collect();
        assert_eq!(ids, ["q1'", "q1' -a-> q2'", "q1' -a-> q2' -b-> q3'", "q1' -a-> q2' -c-> q5'"]);
        assert_eq!(unf.apply("q1' -a-> q2' -b-> q3'"), "q3'");
    }

    #[test]
    fn self_loop_gives_a_chain() {
        let t = Lts::from_triples(&["s"], "s", &[("s", "a", "s")]).unwrap();
        let (tree, _) = unfold(&t, 3);
        assert_eq!(tree.lts.states().len(), 4);
        assert_eq!(tree.lts.transitions().len(), 3);
        assert_eq!(tree.depth_bound, Some(3));
        assert_eq!(tree.frontier, BTreeSet::from(["s -a-> s -a-> s -a-> s".to_string()]));
        assert!(is_tree(&tree.lts));
    }

    #[test]
    fn tree_shapes() {
        assert!(is_tree(&word(&["a", "b", "c"]).to_lts()));
        assert!(is_tree(&catalog::t_u()));
        assert!(!is_tree(&Lts::from_triples(&["s"], "s", &[("s", "a", "s")]).unwrap()));
        let diamond = Lts::from_triples(
            &["0", "1", "2", "3"],
            "0",
            &[("0", "a", "1"), ("0", "b", "2"), ("1", "c", "3"), ("2", "c", "3")],
        )
        .unwrap();
        assert!(!is_tree(&diamond));
    }

    #[test]
    fn unf_is_open() {
        assert_eq!(unf_is_open_check(&catalog::t_u(), 5), UnfOpenness::Open { exact: true });
        let loop_ = Lts::from_triples(&["s"], "s", &[("s", "a", "s")]).unwrap();
        assert_eq!(unf_is_open_check(&loop_, 3), UnfOpenness::Open { exact: false });
    }

    #[test]
    fn corrupted_unf_is_caught_as_non_morphism() {
        let t = catalog::t_d();
        let (tree, unf) = unfold(&t, 2);
        let mut map = unf.map().clone();
        map.insert("q1' -a-> q2'".into(), "q3'".into());
        let bad = LtsMorphism::new(tree.lts.clone(), t, map).unwrap();
        assert!(matches!(check_unf(&tree, &bad), UnfOpenness::NotAMorphism(_)));
    }

    #[test]
    fn bisimilarity_transfers_through_unfolding() {
        let (tu, td) = (catalog::t_u(), catalog::t_d());
        let (uu, _) = unfold(&tu, 4);
        let (ud, _) = unfold(&td, 4);
        assert_eq!(strong_bisimilarity(&tu, &td).is_some(), strong_bisimilarity(&uu.lts, &ud.lts).is_some());
        assert!(strong_bisimilarity(&td, &ud.lts).is_some());
    }
}
