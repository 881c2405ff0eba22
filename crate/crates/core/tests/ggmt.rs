use approx::assert_relative_eq;
use hbl_core::ggmt::{appendix_g, prefactor, GgmtConvention};
use hbl_core::spectral::unstable_count;
use hbl_core::ModelParams;

// Reference values from an independent quadrature, frozen.
#[test]
fn frozen_values() {
    let a = Some(GgmtConvention::Appendix4DeltaPlus1);
    let t = Some(GgmtConvention::Theorem4AlphaPlus1);
    assert_relative_eq!(appendix_g(0.09, 1.0, 1.5, a).unwrap().g, 0.9450009495202092, max_relative = 1e-8);
    assert_relative_eq!(appendix_g(0.08, 1.0, 1.5, a).unwrap().g, 1.0623262143871093, max_relative = 1e-8);
    assert_relative_eq!(appendix_g(0.09, 1.0, 1.5, t).unwrap().g, 1.1812511869002615, max_relative = 1e-8);
    assert_relative_eq!(appendix_g(0.08, 1.0, 1.5, t).unwrap().g, 1.3279077679838867, max_relative = 1e-8);
}

#[test]
fn conventions_differ_by_the_base_ratio() {
    for (delta, kappa) in [(0.5, 1.5), (1.0, 2.0), (2.0, 3.5)] {
        let alpha = delta - 0.25;
        let ratio = prefactor(kappa, alpha, GgmtConvention::Theorem4AlphaPlus1)
            / prefactor(kappa, alpha, GgmtConvention::Appendix4DeltaPlus1);
        let expected = ((4.0 * alpha + 2.0) / (4.0 * alpha + 1.0)).powf(kappa - 0.5);
        assert_relative_eq!(ratio, expected, max_relative = 1e-12);
    }
}

#[test]
fn bound_dominates_the_count() {
    for c in [0.05, 0.08, 0.12, 0.2] {
        let n = unstable_count(&ModelParams::three_d(3, c).unwrap(), 1).unwrap().count as f64;
        for delta in [0.5, 1.0, 2.0] {
            for kappa in [1.5, 2.5] {
                for conv in GgmtConvention::BOTH {
                    let g = appendix_g(c, delta, kappa, Some(conv)).unwrap().g;
                    assert!(n <= g, "c = {c}, δ = {delta}, κ = {kappa}: {n} > {g}");
                }
            }
        }
    }
}

#[test]
fn strong_coupling_has_one_small_support_interval() {
    let res = appendix_g(0.3, 1.0, 1.5, Some(GgmtConvention::Appendix4DeltaPlus1)).unwrap();
    assert_eq!(res.support.len(), 1);
    assert!(res.g > 0.0 && res.g < 1.0);
}

#[test]
fn out_of_range_parameters_are_rejected() {
    assert!(appendix_g(0.09, 0.0, 1.5, Some(GgmtConvention::Appendix4DeltaPlus1)).is_err());
    assert!(appendix_g(0.09, 2.25, 1.5, Some(GgmtConvention::Appendix4DeltaPlus1)).is_err());
    assert!(appendix_g(0.09, 1.0, 7.0, Some(GgmtConvention::Appendix4DeltaPlus1)).is_err());
    assert!(appendix_g(0.4, 1.0, 1.5, Some(GgmtConvention::Appendix4DeltaPlus1)).is_err());
}
