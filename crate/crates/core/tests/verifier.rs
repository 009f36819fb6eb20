use discrete_cover::group::{Element, Family};
use discrete_cover::run::{execute, RunConfig};
use discrete_cover::verifier::mutations::{mutate, Mutation};
use discrete_cover::verifier::{brute_difference_set, verify_text, Check, Report, VerifyOptions};

fn trace(instance: &str, p: Option<u64>, steps: u64, thin: bool) -> String {
    execute(&RunConfig::new(instance, p, steps, thin)).unwrap().text()
}

fn verify(text: &str) -> Report {
    verify_text(text, &VerifyOptions::default())
}

fn names(r: &Report) -> Vec<String> {
    r.certificates.iter().map(|c| format!("{c}")).collect()
}

#[test]
fn clean_traces_pass() {
    for (name, p, steps, thin) in [
        ("z-in-zp", Some(2), 20, false),
        ("z-in-zp", Some(5), 20, true),
        ("golden-rotation", None, 20, false),
        ("q-usual", None, 30, true),
        ("z-discrete", None, 30, false),
        ("f2-discrete", None, 30, true),
    ] {
        let r = verify(&trace(name, p, steps, thin));
        assert!(r.passed(), "{name}: {:#?}", names(&r));
        assert_eq!(r.exit_code(), 0);
    }
}

#[test]
fn empty_runs_pass() {
    for name in ["golden-rotation", "q-usual"] {
        let r = verify(&trace(name, None, 0, false));
        assert!(r.passed(), "{name}: {:#?}", names(&r));
    }
}

#[test]
fn selected_checks_only() {
    let text = trace("z-in-zp", Some(3), 10, false);
    let opts = VerifyOptions {
        checks: Some(vec![Check::Cover]),
        ..VerifyOptions::default()
    };
    let r = verify_text(&text, &opts);
    let checks: Vec<&str> = r.certificates.iter().map(|c| c.check.as_str()).collect();
    assert_eq!(checks, ["header", "records", "replay", "cover"]);
}

#[test]
fn every_mutation_is_rejected_at_its_stage() {
    let text = trace("z-in-zp", Some(2), 12, false);
    for m in Mutation::ALL {
        let bad = mutate(&text, m, 6).unwrap_or_else(|| panic!("{} not applicable", m.name()));
        let r = verify(&bad.text);
        assert!(!r.passed(), "{} accepted", m.name());
        assert!(
            r.failures().any(|c| c.stage == Some(bad.stage)),
            "{}: no failure names stage {}: {:#?}",
            m.name(),
            bad.stage,
            names(&r)
        );
    }
}

#[test]
fn mutations_are_caught_without_replay() {
    let text = trace("golden-rotation", None, 12, false);
    let opts = VerifyOptions {
        replay: false,
        ..VerifyOptions::default()
    };
    for m in Mutation::ALL {
        let bad = mutate(&text, m, 4).unwrap();
        let r = verify_text(&bad.text, &opts);
        assert!(
            r.failures().any(|c| c.stage == Some(bad.stage)),
            "{}: {:#?}",
            m.name(),
            names(&r)
        );
    }
}

#[test]
fn case2_mutations() {
    let text = trace("q-usual", None, 20, false);
    for m in Mutation::ALL {
        match mutate(&text, m, 5) {
            Some(bad) => {
                let r = verify(&bad.text);
                assert!(r.failures().any(|c| c.stage == Some(bad.stage)), "{}: {:#?}", m.name(), names(&r));
            }
            None => assert!(matches!(m, Mutation::Size | Mutation::Measure | Mutation::DropZ)),
        }
    }
}

#[test]
fn truncation_is_malformed() {
    let text = trace("z-discrete", None, 10, false);
    let bad = mutate(&text, Mutation::Truncate, 3).unwrap();
    let r = verify(&bad.text);
    assert_eq!(r.exit_code(), 2);
    assert_eq!(r.certificates[0].check, "parse");
    assert_eq!(r.certificates[0].stage, Some(3));
    assert!(r.certificates[0].witness.is_some());
    assert_eq!(verify("").exit_code(), 2);
    assert_eq!(verify("{\"format\":1}\n").exit_code(), 2);
}

#[test]
fn tampered_target_is_named() {
    // x_1 changed from 2 to 3: x − y = 2 no longer equals the target 1
    let text = trace("z-in-zp", Some(2), 3, false);
    let bad = text.replacen(r#""x":"2","y":"1""#, r#""x":"3","y":"1""#, 1);
    let r = verify(&bad);
    let cover = r.certificates.iter().find(|c| c.check == "cover").unwrap();
    assert!(!cover.passed());
    assert_eq!(cover.stage, Some(1));
}

#[test]
fn thin_check_flags_growth() {
    let thin = trace("z-discrete", None, 60, true);
    let plain = trace("z-discrete", None, 60, false);
    let opts = VerifyOptions {
        checks: Some(vec![Check::Thin]),
        replay: false,
        ..VerifyOptions::default()
    };
    assert!(verify_text(&thin, &opts).passed());
    assert!(!verify_text(&plain, &opts).passed());
}

#[test]
fn brute_difference_examples() {
    let ints = |v: &[i64]| v.iter().map(|n| Element::Int(*n)).collect::<Vec<_>>();
    let d = brute_difference_set(Family::Integers, &ints(&[0, 1, 2]));
    let mut got: Vec<i64> = d.iter().map(|e| e.as_int().unwrap()).collect();
    got.sort();
    assert_eq!(got, [-2, -1, 0, 1, 2]);
    assert_eq!(brute_difference_set(Family::Integers, &ints(&[0])).len(), 1);

    let f = Family::Free;
    let w = |s: &str| f.parse(s).unwrap();
    let d = brute_difference_set(f, &[w(""), w("a"), w("ab")]);
    let mut got: Vec<String> = d.iter().map(ToString::to_string).collect();
    got.sort();
    // a·(ab)⁻¹ = aBA and ab·a⁻¹ = abA; the three diagonal pairs give e
    let mut want: Vec<String> = ["", "a", "A", "ab", "BA", "abA", "aBA"].iter().map(|s| s.to_string()).collect();
    want.sort();
    assert_eq!(got, want);
}

