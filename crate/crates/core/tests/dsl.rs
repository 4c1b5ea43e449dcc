use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use noonsim::analytics::{build_cat, delta0_of, CatStateParams};
use noonsim::crosscheck::check_bundled;
use noonsim::dsl::{bundled, interpret, parse, InterpretMode, ParseErrorKind, BUNDLED, MAX_NESTING};
use noonsim::state::StateVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ALPHABET: &[u8] = b"modesparambspsdetectvacuumifelsediscard_ifunreachablepisym@{}()<>=-+*/.,#\n\n\n  0123456789_lrQN";

#[test]
fn parser_is_total_on_random_input() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let sources: Vec<&str> = BUNDLED.iter().map(|(_, s)| *s).collect();
    let (mut accepted, mut rejected) = (0usize, 0usize);
    for i in 0..100_000 {
        let len = rng.gen_range(0..120);
        let bytes: Vec<u8> = match i % 3 {
            // Arbitrary bytes.
            0 => (0..len).map(|_| rng.gen()).collect(),
            // Characters the lexer knows about.
            1 => (0..len).map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())]).collect(),
            // Small edits of a real program.
            _ => {
                let mut b = sources[rng.gen_range(0..sources.len())].as_bytes().to_vec();
                for _ in 0..rng.gen_range(1..4) {
                    let at = rng.gen_range(0..b.len());
                    match rng.gen_range(0..3) {
                        0 => b[at] = ALPHABET[rng.gen_range(0..ALPHABET.len())],
                        1 => {
                            b.remove(at);
                        }
                        _ => b.insert(at, rng.gen()),
                    }
                }
                b
            }
        };
        let text = String::from_utf8_lossy(&bytes);
        match parse(&text) {
            Ok(_) => accepted += 1,
            Err(e) => {
                assert!(e.span.offset <= text.len(), "span past end for {text:?}");
                assert!(!e.message.is_empty());
                rejected += 1;
            }
        }
    }
    assert_eq!(accepted + rejected, 100_000);
    assert!(accepted > 0, "mutations never produced a valid program");
}

#[test]
fn nesting_limit_is_a_parse_error() {
    let deep = format!("modes 1\nps 0 {}1{}\n", "(".repeat(MAX_NESTING + 5), ")".repeat(MAX_NESTING + 5));
    assert_eq!(parse(&deep).unwrap_err().kind, ParseErrorKind::Syntax);
    let blocks = format!("modes 1\n{}{}", "if 1 < 2 {\n".repeat(MAX_NESTING + 1), "}\n".repeat(MAX_NESTING + 1));
    assert!(parse(&blocks).is_err());
    let negations = format!("modes 1\nps 0 {}1\n", "-".repeat(100_000));
    assert!(parse(&negations).is_err());
}

#[test]
fn errors_carry_spans_and_kinds() {
    let e = parse("modes 2\nbs 0 1\n").unwrap_err();
    assert_eq!(e.kind, ParseErrorKind::Syntax);
    assert_eq!((e.span.line, e.span.column), (2, 7));
    assert!(e.render("modes 2\nbs 0 1\n").contains('^'));
    let e = parse("modes 2\nbs 0 5 pi\n").unwrap_err();
    assert_eq!(e.kind, ParseErrorKind::Validation);
    let e = parse("modes 2\nps 0 k\n").unwrap_err();
    assert_eq!(e.kind, ParseErrorKind::Validation);
}

#[test]
fn bundled_programs_round_trip() {
    for (name, source) in BUNDLED {
        let program = parse(source).unwrap_or_else(|e| panic!("{name}: {}", e.render(source)));
        assert_eq!(parse(&program.pretty()).unwrap(), program, "{name}");
    }
    assert!(bundled("missing.qoc").is_none());
}

fn expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (0u32..100).prop_map(|n| n.to_string()),
        (0.0f64..10.0).prop_map(|x| format!("{x:?}")),
        Just("pi".to_string()),
        Just("a".to_string()),
        Just("t".to_string()),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), prop::sample::select(vec!["+", "-", "*", "/"]), inner.clone())
                .prop_map(|(l, op, r)| format!("({l} {op} {r})")),
            inner.clone().prop_map(|e| format!("-{e}")),
            (prop::sample::select(vec!["sqrt", "cos", "sin", "arccos", "arcsin", "abs", "round"]), inner)
                .prop_map(|(f, e)| format!("{f}({e})")),
        ]
    })
}

fn statement() -> impl Strategy<Value = String> {
    prop_oneof![
        (0usize..3, 0usize..3, expr()).prop_map(|(i, j, g)| format!("bs {i} {} {g}", (i + j % 2 + 1) % 3)),
        (0usize..3, expr(), expr()).prop_map(|(i, g, c)| format!("bs {i} {} {g} ({c})", (i + 1) % 3)),
        (0usize..3).prop_map(|i| format!("bs {i} {} pi / 4 @sym", (i + 2) % 3)),
        (0usize..3, expr()).prop_map(|(i, c)| format!("ps {i} {c}")),
        (expr(), expr()).prop_map(|(x, y)| format!("discard_if {x} <= {y}")),
        (expr(), expr(), 0usize..3).prop_map(|(x, y, m)| format!("if {x} > {y} {{\n  ps {m} 1\n}} else {{\n  ps {m} 2\n}}")),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn pretty_print_round_trips(body in prop::collection::vec(statement(), 0..8)) {
        let source = format!("modes 3\nparam t = 0.25\ndetect 2 -> a\n{}\n", body.join("\n"));
        let program = parse(&source).unwrap();
        let printed = program.pretty();
        prop_assert_eq!(parse(&printed).unwrap(), program, "{}", printed);
    }
}

#[test]
fn interpreter_matches_generator_on_pipeline_and_circuit_one() {
    for n in 1..=6u32 {
        for f in [1.0 / 3.0, 0.5, 2.0 / 3.0] {
            let params = BTreeMap::from([("f".to_string(), f)]);
            for name in ["pipeline.qoc", "circuit1.qoc"] {
                let check = check_bundled(name, &StateVector::dual_fock(n), &params).unwrap();
                assert!(check.passed, "{name} N={n} f={f}: {check:?}");
            }
        }
    }
}

#[test]
fn interpreter_matches_generator_on_correction_circuits() {
    for (l, r) in [(1u32, 1u32), (1, 2), (2, 1), (3, 1), (2, 5), (4, 4)] {
        for total in [3u32, 6, 9] {
            let cat = build_cat(CatStateParams::new(total, delta0_of(l, r).unwrap(), f64::from(l) * PI).unwrap()).unwrap();
            let params = BTreeMap::from([("l".to_string(), f64::from(l)), ("r".to_string(), f64::from(r))]);
            let check = check_bundled("circuit2.qoc", &cat, &params).unwrap();
            assert!(check.passed, "l={l} r={r} S={total}: {check:?}");
        }
    }
    let cat = build_cat(CatStateParams::new(7, FRAC_PI_2, 0.3).unwrap()).unwrap();
    assert!(check_bundled("circuit3.qoc", &cat, &BTreeMap::new()).unwrap().passed);
}

#[test]
fn sampled_interpretation_is_seed_stable() {
    let program = parse(bundled("pipeline.qoc").unwrap()).unwrap();
    let params = BTreeMap::from([("N".to_string(), 4.0)]);
    let mode = InterpretMode::Sampled { seed: 11, shots: 200 };
    let a = interpret(&program, &StateVector::dual_fock(4), &params, mode).unwrap();
    let b = interpret(&program, &StateVector::dual_fock(4), &params, mode).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(a.len(), 200);
    assert!(a.iter().all(|b| b.shot.is_some()));
}

#[test]
fn runtime_errors_name_the_registers() {
    let program = parse("modes 2\ndetect 0 -> k\nbs 0 1 arccos(k + 2)\n").unwrap();
    let err = interpret(&program, &StateVector::basis(&[1, 0]).unwrap(), &BTreeMap::new(), InterpretMode::Exhaustive)
        .unwrap_err();
    assert!(err.to_string().contains("k"), "{err}");
}
