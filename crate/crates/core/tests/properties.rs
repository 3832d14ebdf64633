//! Property-based invariants: structural identities that must hold for
//! arbitrary data, not just the curated scenarios.

use num_complex::Complex64;
use proptest::prelude::*;

use phaselab::grid::weight_eval;
use phaselab::tensor::{permute_tp, read_tensor, write_tensor, Axis, Tensor4};

fn axis(tag: &str, points: usize) -> Axis {
    let spacing = 0.5;
    Axis {
        tag: tag.into(),
        origin: -(points as f64) / 2.0 * spacing,
        spacing,
        points,
    }
}

fn random_tensor(values: Vec<(f64, f64)>, n: usize) -> Tensor4 {
    let mut t = Tensor4::zeros([axis("x", n), axis("xi", n), axis("y", n), axis("eta", n)]);
    for (slot, (re, im)) in t.values.iter_mut().zip(values) {
        *slot = Complex64::new(re, im);
    }
    t
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // the partial-transpose permutation is an exact involution
    #[test]
    fn permute_tp_is_an_involution(
        vals in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 256)
    ) {
        let t = random_tensor(vals, 4);
        let back = permute_tp(&permute_tp(&t).unwrap()).unwrap();
        prop_assert!(t.sup_diff(&back) == 0.0);
    }

    // round trip through the binary tensor format is bit-exact
    #[test]
    fn tensor_io_round_trips(
        vals in proptest::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 16)
    ) {
        let t = random_tensor(vals, 2);
        let mut buf = Vec::new();
        write_tensor(&mut buf, &t, Some(serde_json::json!({"case": "prop"}))).unwrap();
        let (back, header) = read_tensor(&mut buf.as_slice()).unwrap();
        prop_assert_eq!(header.shape, vec![2, 2, 2, 2]);
        prop_assert!(t.sup_diff(&back) == 0.0);
    }

    // submultiplicativity of the polynomial weights:
    // v_s(z + w) <= 2^(|s|/2) v_s(z) v_|s|(w)
    #[test]
    fn weight_submultiplicativity(
        z in proptest::collection::vec(-50.0f64..50.0, 2),
        w in proptest::collection::vec(-50.0f64..50.0, 2),
        s in prop_oneof![Just(-4.0f64), Just(-2.0), Just(2.0)],
    ) {
        let zw: Vec<f64> = z.iter().zip(&w).map(|(a, b)| a + b).collect();
        let lhs = weight_eval(&zw, s);
        let rhs = 2.0f64.powf(s.abs() / 2.0) * weight_eval(&z, s) * weight_eval(&w, s.abs());
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }

    // the weight is radial and monotone in |z|
    #[test]
    fn weight_is_radial_and_monotone(
        x in -50.0f64..50.0,
        y in -50.0f64..50.0,
        scale in 1.0f64..3.0,
    ) {
        let v = weight_eval(&[x, y], -2.0);
        let swapped = weight_eval(&[y, x], -2.0);
        prop_assert!((v - swapped).abs() <= 1e-12 * v.max(swapped));
        let farther = weight_eval(&[x * scale, y * scale], -2.0);
        prop_assert!(farther <= v * (1.0 + 1e-12));
    }
}
