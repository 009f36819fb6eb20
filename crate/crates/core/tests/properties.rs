use discrete_cover::cli::oracle_diff;
use discrete_cover::group::{Element, Family};
use discrete_cover::instances::{make_instance, InstanceConfig};
use discrete_cover::run::{execute, RunConfig};
use discrete_cover::verifier::predicates::Space;
use discrete_cover::verifier::{verify_text, VerifyOptions};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::One;
use proptest::prelude::*;

const FAMILIES: [Family; 3] = [Family::Integers, Family::Rationals, Family::Free];

/// ℚ in order: 0, then q₁ = 1, q_{k+1} = 1/(2⌊q_k⌋ − q_k + 1), each followed by −q_k.
fn rationals_oracle(n: usize) -> Vec<String> {
    let mut out = vec!["0/1".to_string()];
    let mut q = BigRational::one();
    while out.len() < n {
        out.push(format!("{}/{}", q.numer(), q.denom()));
        out.push(format!("{}/{}", -q.numer(), q.denom()));
        let two_floor = BigRational::from_integer(q.floor().to_integer() * 2);
        q = (two_floor - &q + BigRational::one()).recip();
    }
    out.truncate(n);
    out
}

/// Reduced words by length, then lexicographically with a < A < b < B.
fn words_oracle(n: usize) -> Vec<String> {
    let letters = ['a', 'A', 'b', 'B'];
    let inverse = |c: char| if c.is_ascii_lowercase() { c.to_ascii_uppercase() } else { c.to_ascii_lowercase() };
    let mut out = vec![String::new()];
    let mut layer = vec![String::new()];
    while out.len() < n {
        let mut next = Vec::new();
        for w in &layer {
            for c in letters {
                if w.chars().last().is_none_or(|l| l != inverse(c)) {
                    next.push(format!("{w}{c}"));
                }
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out.truncate(n);
    out
}

fn integers_oracle(n: usize) -> Vec<String> {
    (0..n as i64).map(|i| if i % 2 == 1 { (i + 1) / 2 } else { -i / 2 }.to_string()).collect()
}

#[test]
fn enumerations_round_trip() {
    let n = 10_000;
    for (family, want) in [
        (Family::Integers, integers_oracle(n)),
        (Family::Rationals, rationals_oracle(n)),
        (Family::Free, words_oracle(n)),
    ] {
        for (i, w) in want.iter().enumerate() {
            let e = family.element_at(i as u64);
            assert_eq!(e.to_string(), *w, "{family:?} index {i}");
            assert_eq!(family.index_of(&e), (i as u64).into(), "{family:?} {w}");
            assert_eq!(family.parse(w).unwrap(), e);
        }
    }
}

fn element(family: Family) -> BoxedStrategy<Element> {
    match family {
        Family::Integers => (-1_000_000i64..1_000_000).prop_map(Element::Int).boxed(),
        Family::Rationals => (-10_000i64..10_000, 1i64..10_000)
            .prop_map(|(n, d)| Element::Rat(BigRational::new(BigInt::from(n), BigInt::from(d))))
            .boxed(),
        Family::Free => proptest::collection::vec(0usize..4, 0..12)
            .prop_map(|ls| {
                let s: String = ls.iter().map(|i| ['a', 'A', 'b', 'B'][*i]).collect();
                let mut reduced = String::new();
                for c in s.chars() {
                    let cancels = reduced.chars().last().is_some_and(|l| l != c && l.eq_ignore_ascii_case(&c));
                    if cancels {
                        reduced.pop();
                    } else {
                        reduced.push(c);
                    }
                }
                Family::Free.parse(&reduced).unwrap()
            })
            .boxed(),
    }
}

fn family_and_three() -> impl Strategy<Value = (Family, Element, Element, Element)> {
    (0usize..3).prop_flat_map(|i| {
        let f = FAMILIES[i];
        (Just(f), element(f), element(f), element(f))
    })
}

proptest! {
    #[test]
    fn group_axioms((f, a, b, c) in family_and_three()) {
        let e = f.identity();
        prop_assert_eq!(f.compose(&f.compose(&a, &b), &c), f.compose(&a, &f.compose(&b, &c)));
        prop_assert_eq!(f.compose(&a, &e), a.clone());
        prop_assert_eq!(f.compose(&e, &a), a.clone());
        prop_assert_eq!(f.compose(&a, &f.inverse(&a)), e.clone());
        prop_assert_eq!(f.compose(&f.inverse(&a), &a), e);
        prop_assert_eq!(f.difference(&a, &b), f.compose(&a, &f.inverse(&b)));
        prop_assert_eq!(f.inverse(&f.compose(&a, &b)), f.compose(&f.inverse(&b), &f.inverse(&a)));
    }

    #[test]
    fn index_and_text_round_trip((f, a, _, _) in family_and_three()) {
        prop_assert_eq!(f.parse(&a.to_string()).unwrap(), a.clone());
        if let Some(i) = f.small_index_of(&a) {
            prop_assert_eq!(f.element_at(i), a);
        }
    }

    #[test]
    fn separation_separates(pick in 0usize..5, x in -5_000i64..5_000, y in -5_000i64..5_000,
                            n in -200i64..200, d in 1i64..200) {
        let (name, p) = [("z-in-zp", Some(2)), ("z-in-zp", Some(7)), ("golden-rotation", None),
                         ("q-usual", None), ("z-discrete", None)][pick];
        let inst = make_instance(&InstanceConfig::new(name, p)).unwrap();
        let (a, b) = if name == "q-usual" {
            let r = |v: i64| Element::Rat(BigRational::new(v.into(), d.into()));
            (r(x), r(n))
        } else {
            (Element::Int(x), Element::Int(y))
        };
        prop_assume!(a != b);
        let s = inst.separation(&a, &b).unwrap();
        let space = Space::of(inst.topology());
        prop_assert!(space.disjoint((&a, &s), (&b, &s)));
        prop_assert!(space.contains(&a, &s, &a));
        prop_assert!(!space.contains(&a, &s, &b) && !space.contains(&b, &s, &a));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn short_runs_verify(pick in 0usize..8, steps in 0u64..25, thin: bool) {
        let (name, p) = [("z-in-zp", Some(2)), ("z-in-zp", Some(3)), ("z-in-zp", Some(5)), ("z-in-zp", Some(97)),
                         ("golden-rotation", None), ("q-usual", None), ("z-discrete", None), ("f2-discrete", None)][pick];
        let config = RunConfig::new(name, p, steps, thin);
        let text = execute(&config).unwrap().text();
        let report = verify_text(&text, &VerifyOptions::default());
        let failures: Vec<String> = report.failures().map(ToString::to_string).collect();
        prop_assert!(report.passed(), "{} {:?}: {:?}", name, p, failures);
        prop_assert_eq!(oracle_diff(&config, None).unwrap(), None);
    }

    #[test]
    fn case1_points_are_distinct_and_budget_holds(p in prop::sample::select(vec![2u64, 3, 5, 7, 11]), steps in 1u64..30) {
        let run = execute(&RunConfig::new("z-in-zp", Some(p), steps, false)).unwrap();
        let pts = run.points();
        let mut sorted: Vec<_> = pts.to_vec();
        sorted.sort();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), pts.len());
        // cumulative measure from the last record, compared exactly
        let last: serde_json::Value = serde_json::from_str(run.lines.last().unwrap()).unwrap();
        let (n, d) = last["measures"]["cumulative"].as_str().unwrap().split_once('/').unwrap();
        let (n, d): (BigInt, BigInt) = (n.parse().unwrap(), d.parse().unwrap());
        prop_assert!(n.clone() * 8 <= d.clone() * 3, "{}/{}", n, d);
        prop_assert!(n.gcd(&d).is_one());
    }
}
