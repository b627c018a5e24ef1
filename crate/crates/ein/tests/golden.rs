mod common;

#[test]
fn traces_match_golden_files() {
    let failed: Vec<String> =
        common::check_all().into_iter().filter_map(|(name, r)| r.err().map(|e| format!("{name}: {e}"))).collect();
    assert!(failed.is_empty(), "{}", failed.join("\n"));
}
