//! Parser and interpreter checked against a second, independent evaluator.

use hji_core::expr::{parse, sign};
use proptest::prelude::*;

/// Test-side tree with its own printer and evaluator.
#[derive(Clone, Debug)]
enum T {
    Num(f64),
    X(usize),
    U(usize),
    Neg(Box<T>),
    Bin(char, Box<T>, Box<T>),
    Call(&'static str, Vec<T>),
}

const N: usize = 3;
const M: usize = 2;

fn render(t: &T) -> String {
    match t {
        T::Num(v) => format!("{v:?}"),
        T::X(i) => format!("x{}", i + 1),
        T::U(i) => format!("u{}", i + 1),
        T::Neg(a) => format!("(-{})", render(a)),
        T::Bin(op, a, b) => format!("({} {op} {})", render(a), render(b)),
        T::Call(f, args) => format!("{f}({})", args.iter().map(render).collect::<Vec<_>>().join(", ")),
    }
}

fn eval(t: &T, x: &[f64], u: &[f64]) -> Option<f64> {
    Some(match t {
        T::Num(v) => *v,
        T::X(i) => x[*i],
        T::U(i) => u[*i],
        T::Neg(a) => -eval(a, x, u)?,
        T::Bin(op, a, b) => {
            let (a, b) = (eval(a, x, u)?, eval(b, x, u)?);
            match op {
                '+' => a + b,
                '-' => a - b,
                '*' => a * b,
                _ if b == 0.0 => return None,
                _ => a / b,
            }
        }
        T::Call(f, args) => {
            let a = eval(&args[0], x, u)?;
            let b = || eval(&args[1], x, u);
            match *f {
                "abs" => a.abs(),
                "sign" => {
                    if a > 0.0 {
                        1.0
                    } else if a < 0.0 {
                        -1.0
                    } else {
                        0.0
                    }
                }
                "sqrt" if a < 0.0 => return None,
                "sqrt" => a.sqrt(),
                "cbrt" => a.cbrt(),
                "min" => a.min(b()?),
                "max" => a.max(b()?),
                "pow" => a.abs().powf(b()?),
                "spow" => {
                    let m = a.abs().powf(b()?);
                    if a > 0.0 {
                        m
                    } else if a < 0.0 {
                        -m
                    } else {
                        0.0 * m
                    }
                }
                _ => unreachable!(),
            }
        }
    })
}

fn leaf() -> impl Strategy<Value = T> {
    prop_oneof![
        (0.0..10.0f64).prop_map(T::Num),
        prop::sample::select(vec![0.0, 0.5, 1.0, 2.0, 3.0]).prop_map(T::Num),
        (0..N).prop_map(T::X),
        (0..M).prop_map(T::U),
    ]
}

fn tree() -> impl Strategy<Value = T> {
    leaf().prop_recursive(5, 40, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| T::Neg(Box::new(a))),
            (prop::sample::select(vec!['+', '-', '*', '/']), inner.clone(), inner.clone())
                .prop_map(|(op, a, b)| T::Bin(op, Box::new(a), Box::new(b))),
            (prop::sample::select(vec!["abs", "sign", "sqrt", "cbrt"]), inner.clone()).prop_map(|(f, a)| T::Call(f, vec![a])),
            (prop::sample::select(vec!["min", "max", "pow", "spow"]), inner.clone(), inner)
                .prop_map(|(f, a, b)| T::Call(f, vec![a, b])),
        ]
    })
}

fn agree(a: f64, b: f64) -> bool {
    if a.is_finite() && b.is_finite() {
        (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
    } else {
        a.is_nan() && b.is_nan() || a == b
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn eval_matches_independent_interpreter(
        t in tree(),
        x in prop::collection::vec(-5.0..5.0f64, N),
        u in prop::collection::vec(-5.0..5.0f64, M),
    ) {
        let e = parse(&render(&t), N, M).unwrap();
        match (e.eval(&x, &u).ok(), eval(&t, &x, &u)) {
            (Some(a), Some(b)) => prop_assert!(agree(a, b), "{} -> {a} vs {b}", render(&t)),
            (None, None) => {}
            (a, b) => prop_assert!(false, "{}: {a:?} vs {b:?}", render(&t)),
        }
    }

    #[test]
    fn print_parse_round_trip(t in tree()) {
        let e = parse(&render(&t), N, M).unwrap();
        let again = parse(&e.to_string(), N, M).unwrap();
        prop_assert_eq!(e, again);
    }
}

proptest! {
    #[test]
    fn abs_is_homogeneous_on_rays(t in -1e3..1e3f64, x in -1e3..1e3f64) {
        let e = parse("abs(x1)", 1, 0).unwrap();
        let lhs = e.eval(&[t * x], &[]).unwrap();
        let rhs = t.abs() * e.eval(&[x], &[]).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn sign_matches_definition(v in -1e3..1e3f64) {
        prop_assert_eq!(sign(v), if v > 0.0 { 1.0 } else if v < 0.0 { -1.0 } else { 0.0 });
        prop_assert_eq!(sign(0.0), 0.0);
        prop_assert_eq!(sign(-0.0), 0.0);
    }
}
