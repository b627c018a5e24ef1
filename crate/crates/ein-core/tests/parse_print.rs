use ein_core::{parse_in, print::print, BinOp, Expr, SurfaceType, TypeEnv, UnOp};
use proptest::prelude::*;

fn env() -> TypeEnv {
    let mut env = TypeEnv::new();
    env.insert("F".into(), SurfaceType::Fld { dim: 3, shape: vec![] });
    env.insert("G".into(), SurfaceType::Fld { dim: 3, shape: vec![3] });
    env
}

fn index() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec!["i", "j", "k", "l", "1", "2", "3"])
}

fn indices(max: usize) -> impl Strategy<Value = Vec<&'static str>> {
    prop::collection::vec(index(), 0..=max)
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (-6i64..6).prop_map(Expr::int),
        (-6i64..6, 2i64..5).prop_map(|(n, d)| Expr::ratio(n, d)),
        (prop::sample::select(vec!["A", "T", "x"]), indices(2)).prop_map(|(n, a)| Expr::tensor(n, &a)),
        (prop::sample::select(vec!["F", "G"]), indices(1)).prop_map(|(n, a)| Expr::field(n, &a)),
        (index(), index()).prop_map(|(i, j)| Expr::delta(i, j)),
        prop::collection::vec(index(), 2..=3).prop_map(|a| Expr::eps(&a)),
        (indices(1), indices(1)).prop_map(|(a, b)| Expr::conv("V", &a, "H", &b)),
    ]
}

fn unop() -> impl Strategy<Value = UnOp> {
    prop_oneof![
        prop::sample::select(vec![
            UnOp::Neg,
            UnOp::Sqrt,
            UnOp::Exp,
            UnOp::Kappa,
            UnOp::Sin,
            UnOp::Cos,
            UnOp::Tan,
            UnOp::Asin,
            UnOp::Acos,
            UnOp::Atan,
        ]),
        (2u32..5).prop_map(UnOp::Pow),
    ]
}

fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(5, 48, 2, |inner| {
        prop_oneof![
            (unop(), inner.clone()).prop_map(|(op, e)| Expr::unary(op, e)),
            (prop::sample::select(vec![BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div]), inner.clone(), inner.clone())
                .prop_map(|(op, a, b)| Expr::bin(op, a, b)),
            (prop::sample::select(vec!["i", "j", "m"]), 1u32..4, inner.clone())
                .prop_map(|(v, n, e)| Expr::sum(v, n, e)),
            (prop::collection::vec(index(), 1..=2), inner.clone()).prop_map(|(nu, e)| Expr::partial(&nu, e)),
            (inner.clone(), inner.clone()).prop_map(|(f, x)| Expr::probe(f, x)),
            (2u32..4, inner).prop_map(|(d, e)| Expr::lift(d, e)),
        ]
    })
}

proptest! {
    #[test]
    fn printed_text_parses_back(e in expr()) {
        let text = print(&e);
        let back = parse_in(&text, &env());
        prop_assert_eq!(back.as_ref(), Ok(&e), "text: {}", text);
    }

    #[test]
    fn printing_is_a_fixed_point(e in expr()) {
        let text = print(&e);
        let again = print(&parse_in(&text, &env()).unwrap());
        prop_assert_eq!(text, again);
    }
}
