use proptest::prelude::*;

use streamcore::ast::Ident;
use streamcore::exec::corpus;
use streamcore::exec::{parse_value, read_csv};
use streamcore::relsem::Value;

fn number() -> impl Strategy<Value = f64> {
    prop_oneof![(-1000i32..1000).prop_map(f64::from), (-1e6f64..1e6f64)]
}

fn value() -> impl Strategy<Value = Value> {
    let leaf = prop_oneof![number().prop_map(Value::num), Just(Value::atom("S")), Just(Value::atom("H"))];
    leaf.prop_recursive(3, 12, 3, |inner| {
        prop::collection::vec(inner, 0..3).prop_map(|args| Value::cons("P", args))
    })
}

fn sah_input() -> impl Strategy<Value = Vec<Value>> {
    (number(), any::<bool>()).prop_map(|(x, s)| vec![Value::num(x), Value::atom(if s { "S" } else { "H" })])
}

proptest! {
    #[test]
    fn values_print_and_parse_back(v in value()) {
        prop_assert_eq!(parse_value(&v.to_string()).unwrap(), v);
    }

    #[test]
    fn unrolled_runs_equal_stepwise_runs(xs in prop::collection::vec(sah_input(), 0..40), n in 1usize..7) {
        let m = corpus::SAH.machine().unwrap();
        prop_assert_eq!(m.run_unrolled(n, &xs).unwrap(), m.run(&xs).unwrap());
    }

    #[test]
    fn accumulator_matches_prefix_sums(xs in prop::collection::vec(-100i32..100, 0..40), n in 1usize..7) {
        let m = corpus::ACCUM.machine().unwrap();
        let inputs: Vec<Vec<Value>> = xs.iter().map(|&x| vec![Value::num(x)]).collect();
        let ys: Vec<Value> = m.run_unrolled(n, &inputs).unwrap().outputs().into_iter().flatten().collect();
        let sums: Vec<Value> = xs.iter().scan(0i64, |acc, &x| { *acc += i64::from(x); Some(Value::num(*acc as f64)) }).collect();
        prop_assert_eq!(ys, sums);
    }

    #[test]
    fn csv_traces_read_back_as_inputs(xs in prop::collection::vec(sah_input(), 1..20)) {
        let m = corpus::SAH.machine().unwrap();
        let csv = m.run(&xs).unwrap().to_csv().unwrap();
        let back = read_csv(&csv, &[Ident::new("x"), Ident::new("t")]).unwrap();
        prop_assert_eq!(back, xs);
    }
}
