use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pjbsvd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pjbsvd")).args(args).output().unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty(), "data must go to files, got stdout {:?}", String::from_utf8_lossy(&out.stdout));
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_then_solve_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let prob = dir.path().join("prob");
    ok(&pjbsvd(&["generate", "--n2", "30", "--N", "3", "--partition", "2,2", "--eta", "0.1", "--seed", "4", "--out", s(&prob)]));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(prob.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["n1"], 33);
    assert_eq!(manifest["partition"], serde_json::json!([2, 2]));
    assert_eq!(manifest["generator"]["N"], 3);

    let sol = dir.path().join("sol");
    ok(&pjbsvd(&["solve", "--problem", s(&prob), "--updating", "jac", "--accel", "locg", "--out", s(&sol)]));
    for f in ["U.pjbd", "V.pjbd", "trace.csv", "manifest.json"] {
        assert!(sol.join(f).exists(), "missing {f}");
    }
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(sol.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(summary["converged"], true);
    assert!(summary["final_kkt"].as_f64().unwrap() <= 1e-8);
    let trace = fs::read_to_string(sol.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count() - 1, summary["iterations"].as_u64().unwrap() as usize);
    let u: pjbsvd::Mat<f64> = pjbsvd::io::read_matrix(&sol.join("U.pjbd")).unwrap();
    assert_eq!(u.shape(), (33, 4));
}

#[test]
fn heatmap_grid_is_k_by_k() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("grid.csv");
    ok(&pjbsvd(&["heatmap", "--n2", "40", "--N", "4", "--partition", "5", "--pjsvd", "--eta", "1e-4", "--field", "complex", "--index", "2", "--out", s(&out)]));
    let text = fs::read_to_string(&out).unwrap();
    let rows: Vec<Vec<f64>> = text.lines().map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.len() == 5));
    assert!(dir.path().join("grid.csv.manifest.json").exists());
}

#[test]
fn bench_is_deterministic_apart_from_timing() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        ok(&pjbsvd(&["bench", "--n2", "20,24", "--eta", "1,0.01", "--N", "3", "--partition", "3", "--pjsvd", "--seeds", "2", "--out", s(&out)]));
        fs::read_to_string(out.join("results.csv")).unwrap()
    };
    let strip = |csv: &str| -> Vec<String> {
        csv.lines()
            .map(|l| {
                let mut cells: Vec<&str> = l.split(',').collect();
                cells[5] = "";
                cells[10] = "";
                cells.join(",")
            })
            .collect()
    };
    let a = run("a");
    let b = run("b");
    assert_eq!(a.lines().count(), 1 + 4 * 2 * 2 * 2);
    assert_eq!(strip(&a), strip(&b));
    assert!(a.starts_with("method,n2,n1,eta,seed,wall_seconds,iterations,kkt_final,objective_final,converged,speedup"));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["rng"], pjbsvd::generator::RNG_ID);
    assert_eq!(manifest["library_version"], pjbsvd::VERSION);
}

#[test]
fn failures_exit_nonzero_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let cases: Vec<Vec<String>> = vec![
        vec!["generate".into(), "--n2".into(), "5".into(), "--partition".into(), "10".into(), "--out".into(), s(dir.path()).into()],
        vec!["solve".into(), "--problem".into(), "/no/such/problem".into(), "--out".into(), s(dir.path()).into()],
        vec!["bench".into(), "--methods".into(), "npdo-xyz".into(), "--out".into(), s(dir.path()).into()],
        vec!["solve".into(), "--updating".into(), "sideways".into(), "--out".into(), s(dir.path()).into()],
        vec!["generate".into(), "--n2".into(), "10,20".into(), "--out".into(), s(dir.path()).into()],
    ];
    for args in cases {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = pjbsvd(&refs);
        assert!(!out.status.success(), "{args:?} should fail");
        assert!(!out.stderr.is_empty());
        assert!(out.stdout.is_empty());
    }
}
