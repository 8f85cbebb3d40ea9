use jmfar::cost::{bufar_report, cost, ram_estimate, CostAssumptions, MlpDims, RelativeCharging};
use jmfar::features::{FeatureId, FeatureMask};
use jmfar::Error;

fn total(mask: FeatureMask) -> u64 {
    cost(&CostAssumptions::for_mask(mask)).unwrap().total_ops_per_s
}

#[test]
fn full_mask_total() {
    let r = cost(&CostAssumptions::for_mask(FeatureMask::JMFAR)).unwrap();
    assert_eq!(r.per_second_ops, 37_506.0);
    assert_eq!(r.per_segment_ops, 3_881_604.0);
    assert_eq!(r.total_ops_per_s, 50_445);
    assert_eq!(r.ram_bytes, 60_000);
}

#[test]
fn non_spectral_total() {
    assert_eq!(total(FeatureMask::jmfar_ns()), 37_645);
}

#[test]
fn selected_mask_total_as_computed() {
    assert_eq!(total(FeatureMask::jmfar_sel()), 43_715);
    let extra_only = CostAssumptions {
        relative_charging: RelativeCharging::ExtraOnly,
        ..CostAssumptions::for_mask(FeatureMask::jmfar_sel())
    };
    assert_eq!(cost(&extra_only).unwrap().total_ops_per_s, 43_715);
}

#[test]
#[ignore = "published selected-mask total is not reachable from the per-feature counts (43715 computed)"]
fn selected_mask_total_published() {
    assert_eq!(total(FeatureMask::jmfar_sel()), 43_736);
}

#[test]
fn bufar_fixture() {
    let r = bufar_report();
    assert_eq!(r.total_ops_per_s, 37_966);
    let itemized: f64 = r.stages.iter().map(|s| s.ops).sum();
    assert_eq!(itemized, 37_966.0);
}

#[test]
fn stages_sum_to_total() {
    let r = cost(&CostAssumptions::for_mask(FeatureMask::jmfar_sel())).unwrap();
    let exact = r.per_second_ops + r.per_segment_ops / r.segment_len_s;
    assert_eq!(exact, r.exact_ops_per_s);
    assert_eq!(exact.round() as u64, r.total_ops_per_s);
}

#[test]
fn shared_prerequisites_charged_once() {
    let both = FeatureMask::EMPTY.with(FeatureId::F7).with(FeatureId::F8);
    let r = cost(&CostAssumptions::for_mask(both)).unwrap();
    let shared = r.stages.iter().filter(|s| s.stage.contains("shared")).count();
    assert_eq!(shared, 2);
}

#[test]
fn mismatched_classifier_rejected() {
    let a = CostAssumptions {
        classifier: Some(MlpDims { input: 5, hidden: 20, output: 3 }),
        ..CostAssumptions::for_mask(FeatureMask::JMFAR)
    };
    assert!(matches!(cost(&a), Err(Error::Config(_))));
    let a = CostAssumptions {
        segment_len_s: 0.0,
        ..CostAssumptions::for_mask(FeatureMask::JMFAR)
    };
    assert!(matches!(cost(&a), Err(Error::Config(_))));
}

#[test]
fn ram_doubles_with_spectral_features() {
    assert_eq!(ram_estimate(&CostAssumptions::for_mask(FeatureMask::jmfar_ns())), 30_000);
    let f13 = FeatureMask::EMPTY.with(FeatureId::F13);
    assert_eq!(ram_estimate(&CostAssumptions::for_mask(f13)), 60_000);
}
