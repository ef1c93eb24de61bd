//! Compilation of patterns into constraint automata.
//!
//! An automaton has one initial state, a set of final states, and
//! transitions carrying `(label, constraint, inverse flag)`; there are no
//! silent transitions. The construction follows the usual regex-to-NFA
//! recipe: concatenation copies every transition that enters a left-side
//! final over to the right-side initial, alternation re-sources both
//! sub-initials onto a fresh initial, and Kleene star routes word
//! completions through a fresh state that is both initial and final.
//! Keeping the copied transitions alongside the originals (rather than
//! moving them) is what keeps languages intact when sub-automata re-enter
//! their own initial or leave a final state; unreachable leftovers are
//! pruned afterwards.
//!
//! Inversion is elementwise: it flips the inverse flag of every transition
//! and leaves the structure alone, matching how paths interpret
//! inverse-labeled elements in place.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use crate::constraints::{instantiate, tighten_all, Assignment, BoundStore, Ground};
use crate::model::AttrMap;
use crate::oracle::{FeasibilityOracle, OracleError};
use crate::query::{render_constraint, Constraint, Pregex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub u32);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub from: StateId,
    pub label: u32,
    pub constraint: u32,
    pub inverse: bool,
    pub to: StateId,
}

#[derive(Debug, Clone)]
pub struct ParametricAutomaton {
    n_states: u32,
    initial: StateId,
    finals: BTreeSet<StateId>,
    labels: Vec<String>,
    constraints: Vec<Constraint>,
    transitions: Vec<Transition>,
    outgoing: Vec<Vec<u32>>,
}

impl ParametricAutomaton {
    pub fn state_count(&self) -> u32 {
        self.n_states
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn is_final(&self, state: StateId) -> bool {
        self.finals.contains(&state)
    }

    pub fn finals(&self) -> impl Iterator<Item = StateId> + '_ {
        self.finals.iter().copied()
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn outgoing(&self, state: StateId) -> &[u32] {
        &self.outgoing[state.0 as usize]
    }

    pub fn transition(&self, idx: u32) -> &Transition {
        &self.transitions[idx as usize]
    }

    pub fn label_name(&self, label: u32) -> &str {
        &self.labels[label as usize]
    }

    pub fn constraint(&self, id: u32) -> &Constraint {
        &self.constraints[id as usize]
    }

    /// Stable text listing for golden tests and debugging.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        writeln!(out, "states: {}", self.n_states).unwrap();
        writeln!(out, "initial: {}", self.initial.0).unwrap();
        let finals: Vec<String> = self.finals.iter().map(|s| s.0.to_string()).collect();
        writeln!(out, "finals: {}", finals.join(" ")).unwrap();
        for t in &self.transitions {
            let constraint = self.constraint(t.constraint);
            let phi = if constraint.is_top() {
                String::new()
            } else {
                format!(", {}", render_constraint(constraint))
            };
            writeln!(
                out,
                "{} -{}[{}{}]-> {}",
                t.from.0,
                if t.inverse { "^" } else { "" },
                self.label_name(t.label),
                phi,
                t.to.0
            )
            .unwrap();
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

type TransKey = (u32, u32, u32, bool, u32); // from, label, constraint, inverse, to

struct Frag {
    initial: u32,
    finals: BTreeSet<u32>,
    trans: BTreeSet<TransKey>,
}

struct Builder {
    labels: Vec<String>,
    label_ids: BTreeMap<String, u32>,
    constraints: Vec<Constraint>,
    next_state: u32,
}

impl Builder {
    fn fresh(&mut self) -> u32 {
        let s = self.next_state;
        self.next_state += 1;
        s
    }

    fn label(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.label_ids.get(name) {
            return id;
        }
        let id = self.labels.len() as u32;
        self.labels.push(name.to_string());
        self.label_ids.insert(name.to_string(), id);
        id
    }

    fn constraint(&mut self, c: &Constraint) -> u32 {
        // Interned by structural equality to keep copies cheap to compare.
        if let Some(pos) = self.constraints.iter().position(|x| x == c) {
            return pos as u32;
        }
        self.constraints.push(c.clone());
        (self.constraints.len() - 1) as u32
    }

    fn go(&mut self, ast: &Pregex) -> Frag {
        match ast {
            Pregex::Atom { label, constraint } => {
                let (s0, s1) = (self.fresh(), self.fresh());
                let l = self.label(label);
                let c = self.constraint(constraint);
                Frag {
                    initial: s0,
                    finals: BTreeSet::from([s1]),
                    trans: BTreeSet::from([(s0, l, c, false, s1)]),
                }
            }
            Pregex::Epsilon => {
                let s = self.fresh();
                Frag {
                    initial: s,
                    finals: BTreeSet::from([s]),
                    trans: BTreeSet::new(),
                }
            }
            Pregex::Inverse(inner) => {
                let frag = self.go(inner);
                let trans = frag
                    .trans
                    .into_iter()
                    .map(|(q, l, c, inv, q2)| (q, l, c, !inv, q2))
                    .collect();
                Frag { trans, ..frag }
            }
            Pregex::Concat(a, b) => {
                let fa = self.go(a);
                let fb = self.go(b);
                let mut trans = fa.trans.clone();
                trans.extend(fb.trans.iter().copied());
                // Entering a left final also enters the right initial.
                for &(q, l, c, inv, to) in &fa.trans {
                    if fa.finals.contains(&to) {
                        trans.insert((q, l, c, inv, fb.initial));
                    }
                }
                let left_eps = fa.finals.contains(&fa.initial);
                if left_eps {
                    for &(q, l, c, inv, to) in &fb.trans {
                        if q == fb.initial {
                            trans.insert((fa.initial, l, c, inv, to));
                        }
                    }
                }
                let mut finals = fb.finals.clone();
                if left_eps && fb.finals.contains(&fb.initial) {
                    finals.insert(fa.initial);
                }
                Frag {
                    initial: fa.initial,
                    finals,
                    trans,
                }
            }
            Pregex::Alt(a, b) => {
                let fa = self.go(a);
                let fb = self.go(b);
                let fresh = self.fresh();
                let mut trans = fa.trans.clone();
                trans.extend(fb.trans.iter().copied());
                for frag in [&fa, &fb] {
                    for &(q, l, c, inv, to) in &frag.trans {
                        if q == frag.initial {
                            trans.insert((fresh, l, c, inv, to));
                        }
                    }
                }
                let mut finals: BTreeSet<u32> = fa.finals.union(&fb.finals).copied().collect();
                if fa.finals.contains(&fa.initial) || fb.finals.contains(&fb.initial) {
                    finals.insert(fresh);
                }
                Frag {
                    initial: fresh,
                    finals,
                    trans,
                }
            }
            Pregex::Star(inner) => {
                let f = self.go(inner);
                let hub = self.fresh();
                let mut trans = f.trans.clone();
                for &(q, l, c, inv, to) in &f.trans {
                    if f.finals.contains(&to) {
                        trans.insert((q, l, c, inv, hub));
                    }
                    if q == f.initial {
                        trans.insert((hub, l, c, inv, to));
                        if f.finals.contains(&to) {
                            trans.insert((hub, l, c, inv, hub));
                        }
                    }
                }
                Frag {
                    initial: hub,
                    finals: BTreeSet::from([hub]),
                    trans,
                }
            }
            Pregex::Plus(inner) => {
                // Like star, but the first word runs from the child's own
                // initial, so at least one iteration is required.
                let f = self.go(inner);
                let hub = self.fresh();
                let mut trans = f.trans.clone();
                for &(q, l, c, inv, to) in &f.trans {
                    if f.finals.contains(&to) {
                        trans.insert((q, l, c, inv, hub));
                    }
                    if q == f.initial {
                        trans.insert((hub, l, c, inv, to));
                        if f.finals.contains(&to) {
                            trans.insert((hub, l, c, inv, hub));
                        }
                    }
                }
                let mut finals = BTreeSet::from([hub]);
                if f.finals.contains(&f.initial) {
                    // The child accepts the empty word, so one iteration may
                    // consume nothing.
                    finals.insert(f.initial);
                }
                Frag {
                    initial: f.initial,
                    finals,
                    trans,
                }
            }
            Pregex::Opt(inner) => {
                let desugared = Pregex::Alt(inner.clone(), Box::new(Pregex::Epsilon));
                self.go(&desugared)
            }
        }
    }
}

/// Compiles a pattern; unreachable and dead states are pruned.
pub fn compile(ast: &Pregex) -> ParametricAutomaton {
    let mut builder = Builder {
        labels: Vec::new(),
        label_ids: BTreeMap::new(),
        constraints: Vec::new(),
        next_state: 0,
    };
    let frag = builder.go(ast);

    // Forward reachability from the initial state.
    let mut fwd: BTreeMap<u32, Vec<(u32, u32, u32, bool)>> = BTreeMap::new();
    let mut bwd: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for &(q, l, c, inv, to) in &frag.trans {
        fwd.entry(q).or_default().push((l, c, to, inv));
        bwd.entry(to).or_default().push(q);
    }
    let mut reachable = BTreeSet::from([frag.initial]);
    let mut queue = VecDeque::from([frag.initial]);
    while let Some(q) = queue.pop_front() {
        for &(_, _, to, _) in fwd.get(&q).into_iter().flatten() {
            if reachable.insert(to) {
                queue.push_back(to);
            }
        }
    }
    // Backward reachability from the finals.
    let mut alive: BTreeSet<u32> = frag.finals.iter().copied().collect();
    let mut queue: VecDeque<u32> = frag.finals.iter().copied().collect();
    while let Some(q) = queue.pop_front() {
        for &from in bwd.get(&q).into_iter().flatten() {
            if alive.insert(from) {
                queue.push_back(from);
            }
        }
    }
    let mut keep: BTreeSet<u32> = reachable.intersection(&alive).copied().collect();
    keep.insert(frag.initial);

    let renumber: BTreeMap<u32, u32> = keep
        .iter()
        .enumerate()
        .map(|(i, &old)| (old, i as u32))
        .collect();
    let transitions: Vec<Transition> = frag
        .trans
        .iter()
        .filter(|(q, _, _, _, to)| keep.contains(q) && keep.contains(to))
        .map(|&(q, l, c, inv, to)| Transition {
            from: StateId(renumber[&q]),
            label: l,
            constraint: c,
            inverse: inv,
            to: StateId(renumber[&to]),
        })
        .collect();
    let n_states = keep.len() as u32;
    let mut outgoing = vec![Vec::new(); n_states as usize];
    for (idx, t) in transitions.iter().enumerate() {
        outgoing[t.from.0 as usize].push(idx as u32);
    }
    ParametricAutomaton {
        n_states,
        initial: StateId(renumber[&frag.initial]),
        finals: frag
            .finals
            .iter()
            .filter(|s| keep.contains(s))
            .map(|s| StateId(renumber[s]))
            .collect(),
        labels: builder.labels,
        constraints: builder.constraints,
        transitions,
        outgoing,
    }
}

// ---------------------------------------------------------------------------
// Sequence membership
// ---------------------------------------------------------------------------

/// One element of an input sequence: label, whether it is inverse-marked,
/// and its attributes.
#[derive(Debug, Clone)]
pub struct SeqItem<'a> {
    pub label: &'a str,
    pub inverse: bool,
    pub attrs: &'a AttrMap,
}

/// Decides whether the automaton accepts the element sequence under some
/// parameter assignment, returning a witness assignment. Depth-first search
/// over (state, position, bound store) with oracle pruning.
pub fn accepts_sequence(
    aut: &ParametricAutomaton,
    seq: &[SeqItem<'_>],
    oracle: &mut dyn FeasibilityOracle,
) -> Result<Option<Assignment>, OracleError> {
    let mut visited: BTreeSet<(u32, usize, String)> = BTreeSet::new();
    let mut stack: Vec<(StateId, usize, BoundStore)> = vec![(aut.initial(), 0, BoundStore::new())];
    while let Some((state, pos, store)) = stack.pop() {
        if pos == seq.len() {
            if aut.is_final(state) {
                return oracle.get_model(&store).map(Some);
            }
            continue;
        }
        let item = &seq[pos];
        for &tidx in aut.outgoing(state) {
            let t = aut.transition(tidx);
            if t.inverse != item.inverse || aut.label_name(t.label) != item.label {
                continue;
            }
            let Ground::Atoms(atoms) = instantiate(aut.constraint(t.constraint), item.attrs) else {
                continue;
            };
            let next = tighten_all(&store, &atoms);
            if !oracle.check_feasible(&next)? {
                continue;
            }
            if visited.insert((t.to.0, pos + 1, next.digest())) {
                stack.push((t.to, pos + 1, next));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Value;
    use crate::oracle::BuiltinOracle;
    use crate::query::parse_pattern;
    use crate::rat::{rat_int, Rat};

    fn item<'a>(label: &'a str, attrs: &'a AttrMap) -> SeqItem<'a> {
        SeqItem {
            label,
            inverse: false,
            attrs,
        }
    }

    fn accepts(aut: &ParametricAutomaton, seq: &[SeqItem<'_>]) -> Option<Assignment> {
        accepts_sequence(aut, seq, &mut BuiltinOracle).unwrap()
    }

    #[test]
    fn atom_compiles_to_two_states() {
        let aut = compile(&parse_pattern("[Person, ?p <= age]").unwrap());
        assert_eq!(aut.state_count(), 2);
        assert_eq!(aut.transitions().len(), 1);
        assert_eq!(aut.finals().count(), 1);
        assert!(!aut.is_final(aut.initial()));
    }

    #[test]
    fn star_of_atom_is_a_self_loop() {
        let aut = compile(&parse_pattern("[a]*").unwrap());
        assert_eq!(aut.state_count(), 1);
        assert!(aut.is_final(aut.initial()));
        assert_eq!(aut.transitions().len(), 1);
        let t = aut.transition(0);
        assert_eq!(t.from, aut.initial());
        assert_eq!(t.to, aut.initial());
    }

    #[test]
    fn no_silent_transitions_and_single_initial() {
        for text in ["[a]?", "([a]/[b])*", "[a]+|[b]", "^([a]/[b])", "()|[a]"] {
            let aut = compile(&parse_pattern(text).unwrap());
            // Every transition consumes one element; there is nothing to
            // check beyond their existence, plus the single initial.
            assert!(aut.initial().0 < aut.state_count());
            for t in aut.transitions() {
                assert!(t.from.0 < aut.state_count() && t.to.0 < aut.state_count());
            }
        }
    }

    #[test]
    fn running_example_shape() {
        let person = "[Person, ?p <= age && ?q >= age && ?q - ?p <= 7]";
        let pattern = format!("({person}/[follow, since > 2019])*/{person}");
        let aut = compile(&parse_pattern(&pattern).unwrap());
        assert_eq!(aut.finals().count(), 1, "one final state");
        // Every transition out of the initial state reads a Person node.
        let initial_outgoing = aut.outgoing(aut.initial());
        assert!(!initial_outgoing.is_empty());
        for &t in initial_outgoing {
            assert_eq!(aut.label_name(aut.transition(t).label), "Person");
        }
        // There is a follow transition that loops back to the initial state.
        assert!(aut
            .transitions()
            .iter()
            .any(|t| aut.label_name(t.label) == "follow" && t.to == aut.initial()));
        assert!(aut.state_count() <= 7);
    }

    #[test]
    fn dump_is_stable() {
        let aut = compile(&parse_pattern("[a]/[b]").unwrap());
        let dump = aut.dump();
        assert_eq!(dump, compile(&parse_pattern("[a]/[b]").unwrap()).dump());
        assert!(dump.starts_with("states: "));
        assert!(dump.contains("-[a]->"));
    }

    #[test]
    fn dump_golden() {
        let aut = compile(&parse_pattern("([a, ?p <= v]/^[b])*").unwrap());
        assert_eq!(
            aut.dump(),
            "states: 2\n\
             initial: 1\n\
             finals: 1\n\
             0 -^[b]-> 1\n\
             1 -[a, ?p <= v]-> 0\n"
        );
    }

    fn person(age: i64) -> AttrMap {
        AttrMap::from([("age".to_string(), Value::Num(rat_int(age)))])
    }

    fn since(year: i64) -> AttrMap {
        AttrMap::from([("since".to_string(), Value::Num(rat_int(year)))])
    }

    #[test]
    fn accepts_running_example_sequence() {
        let person_atom = "[Person, ?p <= age && ?q >= age && ?q - ?p <= 7]";
        let pattern = format!("({person_atom}/[follow, since > 2019])*/{person_atom}");
        let aut = compile(&parse_pattern(&pattern).unwrap());
        let (alice, bob) = (person(25), person(30));
        let follow = since(2020);
        let seq = [
            item("Person", &alice),
            item("follow", &follow),
            item("Person", &bob),
        ];
        let model = accepts(&aut, &seq).expect("accepted");
        let p = model.get("p").unwrap();
        let q = model.get("q").unwrap();
        assert!(*p <= rat_int(25));
        assert!(*q >= rat_int(30));
        assert!(q - p <= rat_int(7));
    }

    #[test]
    fn rejects_on_label_mismatch() {
        let aut = compile(&parse_pattern("[a]/[b]").unwrap());
        let empty = AttrMap::new();
        assert!(accepts(&aut, &[item("a", &empty), item("c", &empty)]).is_none());
    }

    #[test]
    fn empty_sequence_needs_a_nullable_pattern() {
        let star = compile(&parse_pattern("([a]/[b])*").unwrap());
        let model = accepts(&star, &[]).expect("epsilon accepted");
        assert!(model.is_empty());
        let plain = compile(&parse_pattern("[a]").unwrap());
        assert!(accepts(&plain, &[]).is_none());
    }

    #[test]
    fn infeasible_constraint_combinations_reject() {
        // Ages 25 then 40 cannot fit a gap of 7.
        let person_atom = "[Person, ?p <= age && ?q >= age && ?q - ?p <= 7]";
        let pattern = format!("({person_atom}/[follow])*/{person_atom}");
        let aut = compile(&parse_pattern(&pattern).unwrap());
        let (a, b) = (person(25), person(40));
        let f = AttrMap::new();
        let seq = [item("Person", &a), item("follow", &f), item("Person", &b)];
        assert!(accepts(&aut, &seq).is_none());
    }

    #[test]
    fn inverse_flag_must_match() {
        let aut = compile(&parse_pattern("^[follow]").unwrap());
        let empty = AttrMap::new();
        let backward = [SeqItem {
            label: "follow",
            inverse: true,
            attrs: &empty,
        }];
        let forward = [SeqItem {
            label: "follow",
            inverse: false,
            attrs: &empty,
        }];
        assert!(accepts(&aut, &backward).is_some());
        assert!(accepts(&aut, &forward).is_none());
        // Double inversion cancels.
        let aut2 = compile(&parse_pattern("^^[follow]").unwrap());
        assert!(accepts(&aut2, &forward).is_some());
        assert!(accepts(&aut2, &backward).is_none());
    }

    #[test]
    fn concat_of_stars_keeps_left_words() {
        let aut = compile(&parse_pattern("[a]*/[b]").unwrap());
        let empty = AttrMap::new();
        let a = || item("a", &empty);
        let b = || item("b", &empty);
        assert!(accepts(&aut, &[b()]).is_some());
        assert!(accepts(&aut, &[a(), b()]).is_some());
        assert!(accepts(&aut, &[a(), a(), a(), b()]).is_some());
        assert!(accepts(&aut, &[a()]).is_none());
        assert!(accepts(&aut, &[b(), a()]).is_none());
    }

    #[test]
    fn star_of_concat_with_optional_tail() {
        // (a/b?)*: words where every b is preceded by an a.
        let aut = compile(&parse_pattern("([a]/[b]?)*").unwrap());
        let empty = AttrMap::new();
        let a = || item("a", &empty);
        let b = || item("b", &empty);
        assert!(accepts(&aut, &[]).is_some());
        assert!(accepts(&aut, &[a()]).is_some());
        assert!(accepts(&aut, &[a(), b()]).is_some());
        assert!(accepts(&aut, &[a(), b(), a()]).is_some());
        assert!(accepts(&aut, &[a(), a(), b()]).is_some());
        assert!(accepts(&aut, &[b()]).is_none());
        assert!(accepts(&aut, &[b(), a()]).is_none());
    }

    #[test]
    fn nested_star_chain() {
        // ((a*/b)*) over a, b.
        let aut = compile(&parse_pattern("([a]*/[b])*").unwrap());
        let empty = AttrMap::new();
        let a = || item("a", &empty);
        let b = || item("b", &empty);
        assert!(accepts(&aut, &[]).is_some());
        assert!(accepts(&aut, &[b()]).is_some());
        assert!(accepts(&aut, &[a(), b()]).is_some());
        assert!(accepts(&aut, &[a(), a(), b(), b()]).is_some());
        assert!(
            accepts(&aut, &[a()]).is_none(),
            "a alone never completes a*b"
        );
        assert!(accepts(&aut, &[b(), a()]).is_none());
    }

    #[test]
    fn state_count_bound_on_samples() {
        for text in [
            "[a]",
            "[a]/[b]",
            "[a]|[b]",
            "([a]|[b])*",
            "[a]+",
            "[a]?",
            "([a]/[b])*/[c]",
            "^[a]/([b]|[c])+",
            "([a]?/[b]?)*",
        ] {
            let ast = parse_pattern(text).unwrap();
            let aut = compile(&ast);
            let bound = 2 * ast.count_atoms() + ast.count_alts() + 1;
            assert!(
                (aut.state_count() as usize) <= bound,
                "{text}: {} states > bound {bound}",
                aut.state_count()
            );
        }
    }

    #[test]
    fn unifiable_assignment_across_branches() {
        // Alternation shares globals: ?p must satisfy both sides of the
        // concatenation even though the branches instantiate it separately.
        let aut = compile(&parse_pattern("([a, ?p <= v]|[b, ?p <= v])/[c, ?p >= v]").unwrap());
        let lo = AttrMap::from([("v".to_string(), Value::Num(rat_int(2)))]);
        let hi = AttrMap::from([("v".to_string(), Value::Num(rat_int(5)))]);
        let seq = [item("a", &lo), item("c", &hi)];
        assert!(accepts(&aut, &seq).is_none(), "p <= 2 and p >= 5 clash");
        let seq = [item("a", &hi), item("c", &lo)];
        let model = accepts(&aut, &seq).expect("p in [2, 5]");
        let p = model.get("p").unwrap();
        assert!(*p <= rat_int(5) && *p >= rat_int(2));
        let _ = Rat::from_integer(0.into());
    }
}
