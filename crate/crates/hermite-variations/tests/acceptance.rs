//! End-to-end verification run: every release check at its stated
//! tolerance, one line per check. Slow (minutes); everything shares one
//! Monte Carlo context so the expensive runs happen once.

use hermite_variations::criteria::*;

#[test]
fn all_release_checks_pass() {
    let mut ctx = VerificationContext::new(0x5eed_cafe_f00d_0001);
    let reports = vec![
        criterion_gaussian_engine(&ctx).unwrap(),
        criterion_increment_law(&ctx).unwrap(),
        criterion_consistency(&mut ctx).unwrap(),
        criterion_variance_scaling(&mut ctx).unwrap(),
        criterion_chaos_dominance().unwrap(),
        criterion_rosenblatt_limit(&mut ctx).unwrap(),
        criterion_estimator_limit(&mut ctx).unwrap(),
        criterion_gaussian_regime(&mut ctx).unwrap(),
        criterion_fourth_moment(&mut ctx).unwrap(),
        criterion_algebraic_identity(&mut ctx).unwrap(),
    ];
    for r in &reports {
        println!("{}", r.line());
    }
    assert!(reports.iter().all(|r| r.passed), "at least one release check failed");
}
