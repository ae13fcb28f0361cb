//! Acceptance suite. Prints one line per criterion and fails if any
//! criterion fails. Every comparison is exact.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use num_traits::Zero;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use termbound::bounds::{bound_g, find_nondescent, BoundConfig, BoundError, SequenceFn};
use termbound::erdos::{embed, f_star, Point};
use termbound::ktree::{height_nil, height_tree, LabelledTree};
use termbound::nat::Nat;
use termbound::ordinals::Ordinal;
use termbound::prcompile::{compile, corpus, eval_pr, CompiledUnit, PRTerm};
use termbound::termlang::{
    check_invariant, phi_values, run_trace, step_bound, Atom, Program, RankedRelation, Term, TransitionInvariant,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

fn nats(xs: &[u64]) -> Vec<Nat> {
    xs.iter().map(|&x| Nat::from(x)).collect()
}

// ---------------------------------------------------------------------------
// 1. Closed form against exhaustive search.

/// Finite-label k-ary trees, independent of the library representation.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
enum Tree {
    Empty,
    Node(u64, Vec<Tree>),
}

impl Tree {
    fn canonical(&self) -> Tree {
        match self {
            Tree::Empty => Tree::Empty,
            Tree::Node(l, cs) => {
                let mut cs: Vec<Tree> = cs.iter().map(Tree::canonical).collect();
                cs.sort();
                Tree::Node(*l, cs)
            }
        }
    }

    /// All one-node extensions.
    fn extensions(&self, k: usize, bound: u64) -> Vec<Tree> {
        match self {
            Tree::Empty => (0..bound).map(|l| Tree::Node(l, vec![Tree::Empty; k])).collect(),
            Tree::Node(l, cs) => {
                let mut out = Vec::new();
                for (i, c) in cs.iter().enumerate() {
                    for e in c.extensions(k, *l) {
                        let mut cs2 = cs.clone();
                        cs2[i] = e;
                        out.push(Tree::Node(*l, cs2));
                    }
                }
                out
            }
        }
    }

    /// Reverses every child list, giving a non-canonical member of the same
    /// permutation class.
    fn mirrored(&self) -> Tree {
        match self {
            Tree::Empty => Tree::Empty,
            Tree::Node(l, cs) => Tree::Node(*l, cs.iter().rev().map(Tree::mirrored).collect()),
        }
    }

    fn text(&self) -> String {
        match self {
            Tree::Empty => "_".into(),
            Tree::Node(l, cs) => {
                let inner: Vec<String> = cs.iter().map(Tree::text).collect();
                format!("({l} {})", inner.join(" "))
            }
        }
    }
}

/// Longest chain of one-node extensions starting at `t`.
fn poset_height(t: &Tree, k: usize, m: u64, memo: &mut HashMap<Tree, u64>) -> u64 {
    let key = t.canonical();
    if let Some(&h) = memo.get(&key) {
        return h;
    }
    let h = t
        .extensions(k, m)
        .iter()
        .map(|e| 1 + poset_height(e, k, m, memo))
        .max()
        .unwrap_or(0);
    memo.insert(key, h);
    h
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut trees = 0usize;
    for k in 1..=3usize {
        for m in 0..=4u64 {
            let mut memo = HashMap::new();
            let top = poset_height(&Tree::Empty, k, m, &mut memo);
            let closed = height_nil(k as u64, &Ordinal::from(m));
            if closed != Ordinal::from(top) {
                return Err(format!("k={k} m={m}: closed form {closed}, search {top}"));
            }
            let alpha = Ordinal::from(m);
            for (t, &h) in &memo {
                for variant in [t.clone(), t.mirrored()] {
                    let lt = LabelledTree::parse(&variant.text(), k).map_err(|e| e.to_string())?;
                    let got = height_tree(&lt, &alpha);
                    if got != Ordinal::from(h) {
                        return Err(format!("k={k} m={m} tree {}: closed form {got}, search {h}", variant.text()));
                    }
                }
            }
            trees += memo.len();
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(60) {
        return Err(format!("took {elapsed:?}, limit 60s"));
    }
    Ok(format!(
        "{trees} canonical trees, each also checked mirrored, k<=3 m<=4, {:.1}s",
        elapsed.as_secs_f64()
    ))
}

// ---------------------------------------------------------------------------
// 2. Reported constants.

fn criterion_2() -> Outcome {
    let o = |s: &str| Ordinal::parse(s).unwrap();
    let mut checks = 0;
    let mut expect = |what: String, got: Ordinal, want: Ordinal| -> Result<(), String> {
        checks += 1;
        if got == want {
            Ok(())
        } else {
            Err(format!("{what}: got {got}, expected {want}"))
        }
    };
    expect("h_2(nil, 3)".into(), height_nil(2, &o("3")), o("7"))?;
    for k in 1..=5 {
        expect(format!("h_{k}(nil, w)"), height_nil(k, &o("w")), o("w"))?;
    }
    expect("h_2(nil, w+1)".into(), height_nil(2, &o("w+1")), o("w*2+1"))?;
    let mut run = runner(50);
    let sampled = std::cell::RefCell::new(Vec::new());
    run.run(&any_ordinal(), |a| {
        sampled.borrow_mut().push(a);
        Ok(())
    })
    .map_err(|e| e.to_string())?;
    let sampled = sampled.into_inner();
    for a in &sampled {
        expect(format!("h_1(nil, {a})"), height_nil(1, a), a.clone())?;
    }
    for k in 1..=5u64 {
        expect(
            format!("2^(w*{k})"),
            Ordinal::exp_base(2, &Ordinal::omega_times(k)).map_err(|e| e.to_string())?,
            Ordinal::omega_pow(k),
        )?;
    }
    Ok(format!("{checks} exact equalities ({} sampled ordinals)", sampled.len()))
}

fn any_ordinal() -> impl Strategy<Value = Ordinal> {
    let leaf = (0u64..10).prop_map(Ordinal::from);
    leaf.prop_recursive(3, 16, 3, |inner| {
        proptest::collection::vec((inner, 1u64..5), 1..4).prop_map(|terms| {
            let mut terms: Vec<(Ordinal, u64)> = terms;
            terms.sort_by(|a, b| b.0.cmp(&a.0));
            terms.dedup_by(|a, b| a.0 == b.0);
            Ordinal::from_terms(terms.into_iter().map(|(e, c)| (e, Nat::from(c))).collect()).unwrap()
        })
    })
}

// ---------------------------------------------------------------------------
// 3. Natural sum algebra below w^4.

fn below_w4() -> impl Strategy<Value = Ordinal> {
    proptest::collection::vec(0u64..20, 4).prop_map(|v| Ordinal::from_vector(&nats(&v)))
}

fn criterion_3() -> Outcome {
    let mut run = runner(300);
    let cases = std::cell::Cell::new(0u32);
    run.run(&(below_w4(), below_w4(), below_w4()), |(a, b, c)| {
        cases.set(cases.get() + 1);
        prop_assert_eq!(a.nat_sum(&b), b.nat_sum(&a));
        prop_assert_eq!(a.nat_sum(&b).nat_sum(&c), a.nat_sum(&b.nat_sum(&c)));
        let (lo, hi) = if a < b { (&a, &b) } else { (&b, &a) };
        if lo < hi {
            prop_assert!(lo.nat_sum(&c) < hi.nat_sum(&c));
            prop_assert!(c.nat_sum(lo) < c.nat_sum(hi));
        }
        // Coefficientwise addition of the vector forms.
        let va = a.to_vector(4).unwrap();
        let vb = b.to_vector(4).unwrap();
        let sum: Vec<Nat> = va.iter().zip(&vb).map(|(x, y)| x + y).collect();
        prop_assert_eq!(a.nat_sum(&b).to_vector(4).unwrap(), sum);
        Ok(())
    })
    .map_err(|e| e.to_string())?;
    Ok(format!("{} random triples, 0 failures", cases.get()))
}

// ---------------------------------------------------------------------------
// 4. Erdos pipeline.

fn homogeneous() -> impl Strategy<Value = (usize, Vec<Point>)> {
    (2usize..=3).prop_flat_map(|k| {
        proptest::collection::vec(proptest::collection::vec(0u64..=8, k), 1..40).prop_map(move |cands| {
            let mut s: Vec<Point> = Vec::new();
            for c in cands {
                let y = Point::from(c);
                if s.len() < 10 && s.iter().all(|x| (1..=k).any(|h| y.below_in(h, x))) {
                    s.push(y);
                }
            }
            (k, s)
        })
    })
}

fn edges_decrease(t: &LabelledTree) -> bool {
    fn go(n: &termbound::ktree::Node) -> bool {
        n.children()
            .iter()
            .flatten()
            .all(|c| c.label() < n.label() && go(c))
    }
    t.root().is_none_or(go)
}

fn criterion_4() -> Outcome {
    let mut run = runner(250);
    let cases = std::cell::Cell::new(0u32);
    run.run(&homogeneous(), |(k, s)| {
        cases.set(cases.get() + 1);
        let top = Ordinal::omega_pow(k as u64);
        for n in 0..=s.len() {
            let e = embed(&s[..n], k).unwrap();
            let lt = e.to_labelled_tree().unwrap();
            prop_assert!(edges_decrease(&lt));
            prop_assert!(lt.validate(&Ordinal::omega_times(k as u64)).is_ok());
            if n == 0 {
                continue;
            }
            let fs = f_star(&s[..n], k).unwrap();
            prop_assert!(fs < top);
            if n < s.len() {
                // One more element adds exactly one node and keeps every
                // existing branch and its label.
                let bigger = embed(&s[..=n], k).unwrap();
                let (old, new) = (e.branches(), bigger.branches());
                prop_assert_eq!(new.len(), old.len() + 1);
                for b in old.iter().filter(|b| !b.is_empty()) {
                    prop_assert!(bigger.contains(b));
                    prop_assert_eq!(bigger.label_alpha(b).unwrap(), e.label_alpha(b).unwrap());
                }
                let added: Vec<_> = new.iter().filter(|b| !old.contains(b)).collect();
                prop_assert_eq!(added.len(), 1);
                prop_assert!(e.contains(&added[0].parent().unwrap()));
                prop_assert!(f_star(&s[..=n], k).unwrap() < fs);
            }
        }
        Ok(())
    })
    .map_err(|e| e.to_string())?;
    Ok(format!("{} random homogeneous sequences, 0 failures", cases.get()))
}

// ---------------------------------------------------------------------------
// 5. Descent bound.

fn countdown_program() -> (Program, TransitionInvariant) {
    let p = Program::parse("vars x\n0: if 0 < x goto 1 else 2\n1: x := x-1 goto 0\n2: end").unwrap();
    let inv = TransitionInvariant::new(vec![
        RankedRelation::constrained("forward", None, None, vec![Atom::parse("loc < loc'").unwrap()], Term::parse_rank("2 - loc").unwrap()),
        RankedRelation::constrained("descent", None, None, vec![Atom::parse("x' < x").unwrap()], Term::parse_rank("x").unwrap()),
    ])
    .unwrap();
    (p, inv)
}

fn bound_corpus() -> Vec<(String, SequenceFn)> {
    let mut out: Vec<(String, SequenceFn)> = Vec::new();
    for c in [&[0u64][..], &[3], &[7], &[0, 0], &[1, 2], &[0, 0, 0], &[1, 0, 1]] {
        out.push((format!("constant {c:?}"), SequenceFn::constant(nats(c))));
    }
    for top in [5u64, 9] {
        out.push((format!("countdown from {top}"), SequenceFn::scalar(move |n| Nat::from(top.saturating_sub(n)))));
    }
    out.push((
        "staircase 2x3".into(),
        SequenceFn::new(2, |n| {
            let left = 8u64.saturating_sub(n);
            nats(&[left / 3, left % 3])
        }),
    ));
    out.push((
        "interleaved pair".into(),
        SequenceFn::new(2, |n| if n % 2 == 0 { nats(&[3u64.saturating_sub(n / 2), 1]) } else { nats(&[3u64.saturating_sub(n / 2), 0]) }),
    ));
    out.push((
        "staircase 2x2x2".into(),
        SequenceFn::new(3, |n| {
            let left = 7u64.saturating_sub(n);
            nats(&[left / 4, (left / 2) % 2, left % 2])
        }),
    ));
    out.push((
        "reset staircase".into(),
        SequenceFn::from_values(vec![nats(&[1, 0]), nats(&[0, 6]), nats(&[0, 2]), nats(&[0, 1]), nats(&[0, 3])]),
    ));
    for (name, t, args) in [
        ("zero", PRTerm::zero(1), vec![4u64]),
        ("succ", PRTerm::Succ, vec![2]),
        ("proj(2,3)", PRTerm::proj(2, 3).unwrap(), vec![1, 5, 2]),
        ("zero(0)", PRTerm::zero(0), vec![]),
    ] {
        let u = compile(&t).unwrap();
        let s0 = u.initial_state(&nats(&args)).unwrap();
        let phi = phi_values(&u.program, &s0, &u.invariant, 100).unwrap();
        out.push((format!("phi of compiled {name}"), phi.sequence()));
    }
    let (p, inv) = countdown_program();
    for x in 0..4u64 {
        let s0 = p.initial_state(&[("x", Nat::from(x))]).unwrap();
        out.push((format!("phi of countdown({x})"), phi_values(&p, &s0, &inv, 100).unwrap().sequence()));
    }
    out
}

fn criterion_5() -> Outcome {
    let corpus = bound_corpus();
    let cfg = BoundConfig::default();
    let mut largest = Nat::zero();
    let mut max_k = 0;
    for (name, sigma) in &corpus {
        max_k = max_k.max(sigma.k());
        if sigma.k() > 3 {
            return Err(format!("{name}: k = {} > 3", sigma.k()));
        }
        for n in 0..=5u64 {
            let g = bound_g(sigma, n, &cfg).map_err(|e| format!("{name}, n={n}: {e}"))?;
            match find_nondescent(sigma, n, &cfg) {
                Ok(m) if n <= m && Nat::from(m) <= g => {}
                Ok(m) => return Err(format!("{name}, n={n}: witness {m} outside [{n}, {g}]")),
                Err(BoundError::LemmaViolated { .. }) => return Err(format!("{name}, n={n}: LemmaViolated")),
                Err(e) => return Err(format!("{name}, n={n}: {e}")),
            }
            largest = largest.max(g);
        }
    }
    if corpus.len() < 20 {
        return Err(format!("corpus has only {} sequences", corpus.len()));
    }
    Ok(format!(
        "{} sequences (k<={max_k}) x n in 0..=5, 0 LemmaViolated, largest bound {largest} < 10^9",
        corpus.len()
    ))
}

// ---------------------------------------------------------------------------
// 6. Compiler correctness.

fn inputs_up_to(arity: usize, max: u64) -> Vec<Vec<Nat>> {
    (0..arity).fold(vec![vec![]], |acc, _| {
        acc.into_iter()
            .flat_map(|v| {
                (0..=max).map(move |x| {
                    let mut v = v.clone();
                    v.push(Nat::from(x));
                    v
                })
            })
            .collect()
    })
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let mut runs = 0;
    for (name, t) in corpus::all() {
        let u = compile(&t).map_err(|e| e.to_string())?;
        for args in inputs_up_to(t.arity(), 5) {
            let want = eval_pr(&t, &args).map_err(|e| e.to_string())?;
            let (_, got) = u.run(&args, 1_000_000).map_err(|e| format!("{name}{args:?}: {e}"))?;
            if got != want {
                return Err(format!("{name}{args:?}: program gives {got}, evaluator {want}"));
            }
            runs += 1;
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(60) {
        return Err(format!("took {elapsed:?}, limit 60s"));
    }
    Ok(format!("add, mult, pred, sub on all {runs} inputs <= 5 agree, {:.1}s", elapsed.as_secs_f64()))
}

// ---------------------------------------------------------------------------
// 7. Invariant validity and mutation.

fn checked_units() -> Vec<(String, PRTerm)> {
    let mut out: Vec<(String, PRTerm)> = corpus::all().into_iter().map(|(n, t)| (n.to_string(), t)).collect();
    out.push(("zero".into(), PRTerm::zero(1)));
    out.push(("zero(0)".into(), PRTerm::zero(0)));
    out.push(("succ".into(), PRTerm::Succ));
    out.push(("proj(2,3)".into(), PRTerm::proj(2, 3).unwrap()));
    out
}

fn criterion_7() -> Outcome {
    let mut pairs = 0u64;
    let mut mutants = 0;
    for (name, t) in checked_units() {
        let u: CompiledUnit = compile(&t).map_err(|e| e.to_string())?;
        let inputs = inputs_up_to(t.arity(), 5);
        let states: Vec<_> = inputs.iter().map(|a| u.initial_state(a).unwrap()).collect();
        for (args, s0) in inputs.iter().zip(&states) {
            let r = check_invariant(&u.program, s0, &u.invariant, 1_000_000).map_err(|e| e.to_string())?;
            if !r.terminated || !r.passed() {
                return Err(format!("{name}{args:?}: {} violations, first {:?}", r.violation_count, r.violations.first()));
            }
            pairs += r.pairs_checked;
        }
        for (i, rel) in u.invariant.relations().iter().enumerate() {
            let broken = u.invariant.with_rank(i, Term::nat(0));
            let caught = states.iter().any(|s0| {
                !check_invariant(&u.program, s0, &broken, 1_000_000)
                    .map(|r| r.passed())
                    .unwrap_or(false)
            });
            if !caught {
                return Err(format!("{name}: constant rank for `{}` went unnoticed", rel.name));
            }
            mutants += 1;
        }
    }
    Ok(format!("{pairs} trace pairs, 0 violations; {mutants}/{mutants} rank mutations caught"))
}

// ---------------------------------------------------------------------------
// 8. Step bound.

fn criterion_8() -> Outcome {
    let cfg = BoundConfig {
        ceiling: Nat::from(10u32).pow(1_000_000),
        max_evaluations: 10_000_000,
    };
    let mut lines = Vec::new();
    for (name, t, args) in [("add", corpus::add(), [1u64, 1]), ("add", corpus::add(), [2, 1]), ("mult", corpus::mult(), [2, 2])] {
        let u = compile(&t).map_err(|e| e.to_string())?;
        let s0 = u.initial_state(&nats(&args)).unwrap();
        let steps = run_trace(&u.program, &s0, 100_000).map_err(|e| e.to_string())?.len() - 1;
        let bound = step_bound(&u.program, &s0, &u.invariant, 100_000, &cfg).map_err(|e| format!("{name}{args:?}: {e}"))?;
        if Nat::from(steps) > bound {
            return Err(format!("{name}{args:?}: {steps} steps exceed the bound {bound}"));
        }
        lines.push(format!("{name}{args:?}: {steps} <= bound of {} digits", bound.to_string().len()));
    }
    Ok(lines.join("; "))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("closed-form heights vs exhaustive search", criterion_1),
        ("reported constants", criterion_2),
        ("natural sum algebra", criterion_3),
        ("Erdos pipeline invariants", criterion_4),
        ("descent bound witnesses", criterion_5),
        ("compiler correctness", criterion_6),
        ("invariant validity and mutation", criterion_7),
        ("step bound covers termination", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
