use eacomm::bounds::{inflated_deviations, DiscriminationRates};
use eacomm::dataio::{bin_outcomes, BinningSpec, ExperimentTable, ParseOptions, ValueKind};
use eacomm::facets::{builtin_facets, classical_bound, rxz, FacetInequality};
use eacomm::qcore::matrix::max_abs_diff;
use eacomm::stats::{azuma_pvalue, PValueInputs};
use proptest::prelude::*;

fn table_csv(rows: &[Vec<f64>]) -> String {
    let mut s = String::from("measurement,encoding,p1,p2,p3,p4,p5,p6,p7,p8\n");
    let mut it = rows.iter();
    for m in ["M1", "M2", "MP"] {
        for x in 1..=5 {
            let w = it.next().unwrap();
            let total: f64 = w.iter().sum();
            let vals: Vec<String> = w.iter().map(|v| (v / total).to_string()).collect();
            s.push_str(&format!("{m},U{x},{}\n", vals.join(",")));
        }
    }
    s
}

fn weights() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.01f64..1.0, 8), 15)
}

fn parse(text: &str) -> ExperimentTable {
    ExperimentTable::from_csv_str(text, ValueKind::Probabilities, "prop", ParseOptions::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn binning_preserves_row_mass(w in weights()) {
        let t = parse(&table_csv(&w));
        let corr = bin_outcomes(&t, &BinningSpec::standard()).unwrap();
        for m in 0..3 {
            for x in 0..5 {
                let row: f64 = t.values[m][x].iter().sum();
                let cls: f64 = corr.probs[m][x].iter().sum();
                prop_assert!((row - cls).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn parse_emit_parse_is_idempotent(w in weights()) {
        let t = parse(&table_csv(&w));
        let csv1 = t.to_csv_string().unwrap();
        let t2 = parse(&csv1);
        prop_assert_eq!(&t2.values, &t.values);
        prop_assert_eq!(t2.to_csv_string().unwrap(), csv1);
        let j = ExperimentTable::from_json_str(&t.to_json_string().unwrap(), ParseOptions::default()).unwrap();
        prop_assert_eq!(j.values, t.values);
    }

    #[test]
    fn mixtures_of_strategies_respect_classical_bound(
        which in 0usize..3,
        enc in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 4), 6),
        dec in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 6), 4),
    ) {
        let f = &builtin_facets()[which];
        // p(b|x) = Σ_m q(m|x) g(b|m) with stochastic encoder and decoder.
        let norm = |v: &Vec<f64>| { let s: f64 = v.iter().sum::<f64>() + 1e-12; v.iter().map(|a| a / s).collect::<Vec<_>>() };
        let q: Vec<Vec<f64>> = enc.iter().map(norm).collect();
        let g: Vec<Vec<f64>> = dec.iter().map(norm).collect();
        let p: Vec<Vec<f64>> = (0..6)
            .map(|x| (0..6).map(|b| (0..4).map(|m| q[x][m] * g[m][b]).sum()).collect())
            .collect();
        let c = classical_bound(f, 4).unwrap().value;
        prop_assert!(f.evaluate(&p) <= c + 1e-9);
    }

    #[test]
    fn classical_bound_is_affine_covariant(
        which in 0usize..3,
        scale in 0.1f64..5.0,
        shift in prop::collection::vec(-2.0f64..2.0, 6),
    ) {
        let f = &builtin_facets()[which];
        let c: Vec<Vec<f64>> = (0..6)
            .map(|b| (0..6).map(|x| scale * f.c[b][x] + shift[x]).collect())
            .collect();
        let g = FacetInequality::new(c, None, "affine").unwrap();
        for d in [2, 3] {
            let base = classical_bound(f, d).unwrap().value;
            let moved = classical_bound(&g, d).unwrap().value;
            let want = scale * base + shift.iter().sum::<f64>();
            prop_assert!((moved - want).abs() < 1e-9, "{} vs {}", moved, want);
        }
    }

    #[test]
    fn rotations_compose(a in -7.0f64..7.0, b in -7.0f64..7.0) {
        let ab = rxz(a).matrix() * rxz(b).matrix();
        prop_assert!(max_abs_diff(&ab, rxz(a + b).matrix()) < 1e-12);
    }

    #[test]
    fn pvalue_decreases_with_rounds(n in 1u64..1_000_000, mu in 1e-4f64..0.05) {
        let p = |n| azuma_pvalue(&PValueInputs { n, mu, c: 1.0, t: -0.09 }).unwrap().p;
        prop_assert!(p(2 * n) <= p(n));
        prop_assert!(p(n) <= 1.0);
    }

    #[test]
    fn inflation_is_monotone_in_k(k1 in 0.0f64..10.0, k2 in 0.0f64..10.0) {
        let r = DiscriminationRates::bundled();
        let (lo, hi) = if k1 <= k2 { (k1, k2) } else { (k2, k1) };
        let a = inflated_deviations(&r, lo).unwrap();
        let b = inflated_deviations(&r, hi).unwrap();
        prop_assert!(a.eps.iter().zip(&b.eps).all(|(x, y)| x <= y));
    }
}
