use flipqh::verify::{criterion, random_points, VerifyConfig};

#[test]
fn atiyah_printed_sign_is_rejected() {
    let c = criterion(1, &VerifyConfig::default());
    let atiyah = &c.reports[1];
    assert!(atiyah.passed());
    assert_eq!(atiyah.detail["printed_sign_rejected_by_oracle_and_flatness"], true);
}

#[test]
fn g_table_erratum_is_reported() {
    let c = criterion(4, &VerifyConfig::default());
    let errata = c.reports[0].detail["errata"].as_array().unwrap();
    assert_eq!(errata.len(), 1);
    assert_eq!(errata[0]["computed"], "-4320");
}

#[test]
fn insufficient_truncation_fails_loudly() {
    let cfg = VerifyConfig { border_caps: [3, 1, 2], ..VerifyConfig::default() };
    let c = criterion(4, &cfg);
    assert!(!c.passed());
    assert!(c.line().starts_with("[FAIL]"));
}

#[test]
fn small_ranges_pass_and_unknown_ids_fail() {
    let cfg = VerifyConfig { n_max: 4, d_max: 3, ..VerifyConfig::default() };
    assert!(criterion(8, &cfg).passed());
    let c = criterion(11, &cfg);
    assert!(!c.passed());
}

#[test]
fn random_points_are_seeded() {
    let cfg = VerifyConfig::default();
    assert_eq!(random_points(&cfg, 7), random_points(&cfg, 7));
    assert_ne!(random_points(&cfg, 7), random_points(&VerifyConfig { seed: 1, ..cfg.clone() }, 7));
    assert!(random_points(&cfg, 3).iter().all(|(a, _)| *a != flipqh_series::qi(1)));
}
