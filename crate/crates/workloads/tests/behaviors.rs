use odin_workloads::behaviors::{check, presets, run_preset};

#[test]
fn all_predicates_hold() {
    let mut failed = Vec::new();
    for p in presets() {
        let t = run_preset(&p).unwrap();
        if let Err(e) = check(&p, &t) {
            failed.push(format!("{:>2} {}: {e} (packets {:?})", p.id, p.name, t.packets));
        }
    }
    assert!(failed.is_empty(), "\n{}", failed.join("\n"));
}

#[test]
fn runs_are_deterministic() {
    for p in presets() {
        assert_eq!(run_preset(&p).unwrap(), run_preset(&p).unwrap());
    }
}
