use cmt_core::{
    analyze, cases, classify_1d, eigen_split, linear_part, parse_system, reduce, solve_centre_manifold,
    to_eigenbasis, AnalysisOptions, BasisSource, Status, VerdictKind,
};

#[test]
fn protein_by_hand_matches_analyze() {
    let spec = parse_system(cases::PROTEIN).unwrap();
    let report = analyze(&spec, &AnalysisOptions::default()).unwrap();
    assert_eq!(report.basis_source, BasisSource::Input);
    assert_eq!(report.status(), Status::Ok);

    // computed basis: the manifold is rescaled but the verdict is the same
    let split = eigen_split(&linear_part(&spec).unwrap(), 1e-9).unwrap();
    let sys = to_eigenbasis(&spec, &split).unwrap();
    let h = solve_centre_manifold(&sys, 2).unwrap();
    let verdict = classify_1d(&reduce(&sys, &h)).unwrap();
    assert_eq!(verdict.kind, VerdictKind::Unstable);
    assert_eq!(verdict.kind, report.verdict.kind);
    assert_eq!(verdict.leading_degree, 2);
}

#[test]
fn report_json_parses_back() {
    for (name, text) in cases::ALL {
        let spec = parse_system(text).unwrap();
        let json = analyze(&spec, &AnalysisOptions::default()).unwrap().to_json();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["status"], "OK", "{name}");
        assert_eq!(v["schema_version"], 1);
        assert!(v["input"]["sha256"].as_str().unwrap().len() == 64);
        let checks = v["diagnostics"]["checks"].as_array().unwrap();
        assert!(checks.iter().all(|c| c["pass"] == true), "{name}");
    }
}
