use hbl::numfmt::{csv, fmt_sig, to_json};
use hbl::perturb::Perturbation;
use proptest::prelude::*;

proptest! {
    #[test]
    fn seventeen_digits_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(fmt_sig(x, 17).parse::<f64>().unwrap(), x);
        let back: f64 = serde_json::from_str(&to_json(&x).unwrap()).unwrap();
        prop_assert_eq!(back, x);
    }

    #[test]
    fn csv_keeps_twelve_digits(x in -1e12f64..1e12) {
        let y: f64 = csv(x).parse().unwrap();
        prop_assert!((x - y).abs() <= 1e-11 * x.abs());
    }

    #[test]
    fn perturbations_round_trip(
        kind in 0..4u8,
        amp in -10.0f64..10.0,
        center in 0.0f64..5.0,
        width in 0.01f64..3.0,
        k in 0usize..20,
    ) {
        let p = match kind {
            0 => Perturbation::None,
            1 => Perturbation::Gauss { amp },
            2 => Perturbation::Eig { k },
            _ => Perturbation::Bump { amp, center, width },
        };
        prop_assert_eq!(p.to_string().parse::<Perturbation>().unwrap(), p);
    }

    #[test]
    fn accepted_strings_normalise(s in "(none|gauss|eig|bump|spike)(:[0-9.e-]{0,5}){0,4}") {
        if let Ok(p) = s.parse::<Perturbation>() {
            prop_assert_eq!(p.to_string().parse::<Perturbation>().unwrap(), p);
        }
    }
}

#[test]
fn malformed_perturbations_are_rejected() {
    for s in ["", "gauss", "gauss:x", "eig:-1", "bump:1:2", "bump:1:2:0", "spike:1", "none:1"] {
        assert!(s.parse::<Perturbation>().is_err(), "{s}");
    }
}

#[test]
fn non_finite_json_is_null() {
    assert_eq!(to_json(&f64::NAN).unwrap().trim(), "null");
    assert_eq!(csv(f64::NEG_INFINITY), "-inf");
}
