use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use paulient::io::write_matrix_file;
use paulient::CliffordTableau;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn paulient(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_paulient"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

/// CSV text with the trailing wall_time cell cut from every data row.
fn without_wall_time(csv: &str) -> String {
    csv.lines()
        .map(|l| match l.starts_with('#') {
            true => l.to_string(),
            false => l.rsplit_once(',').map(|(head, _)| head.to_string()).unwrap_or_default(),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn header_value(csv: &str, key: &str) -> Option<String> {
    csv.lines()
        .find_map(|l| l.strip_prefix(&format!("# {key}=")).map(str::to_string))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn typical_value_is_printed() {
    let o = paulient(&["pe", "typical", "--d", "16", "--d-a", "4"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("0.875347925"), "{}", stdout(&o));
}

#[test]
fn stored_clifford_is_product_preserving() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let u = CliffordTableau::random(3, &mut rng).unwrap().to_dense().unwrap();
    let path = dir.path().join("clifford.txt");
    write_matrix_file(&path, &u).unwrap();
    let o = paulient(&["thm1", "check", "--unitary", path_str(&path), "--n-a", "1"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("product-preserving: true"), "{}", stdout(&o));

    let factors = dir.path().join("factors.txt");
    let o = paulient(&["thm1", "factorize", "--unitary", path_str(&path), "--factors", path_str(&factors)]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&factors).unwrap();
    assert!(text.contains("# config_digest=") && text.contains("TABLEAU 3"));
}

#[test]
fn haar_unitary_is_not_product_preserving() {
    let o = paulient(&["thm1", "check", "--haar", "3", "--seed", "4"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("product-preserving: false"));
    // Factorizing it is a computation failure.
    let o = paulient(&["thm1", "factorize", "--haar", "3", "--seed", "4"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn selftest_is_green() {
    let o = paulient(&["selftest"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write(dir.path(), "a.toml", "command = \"pe-typical\"\n[params]\nd = 16\ndA = 4\n");
    let top = write(dir.path(), "b.toml", "command = \"pe-typical\"\nsed = 1\n");
    let wrong = write(dir.path(), "c.toml", "command = \"haar-mc\"\n");
    let missing = dir.path().join("missing.txt");
    let cases: Vec<Vec<&str>> = vec![
        vec!["run", "--config", path_str(&unknown)],
        vec!["run", "--config", path_str(&top)],
        vec!["pe", "typical", "--config", path_str(&wrong)],
        vec!["pe", "typical", "--d", "16", "--d-a", "3"],
        vec!["pe", "exact", "--unitary", path_str(&missing)],
        vec!["pe", "exact"],
        vec!["pe", "exact", "--haar", "2", "--n-a", "2"],
        vec!["spinchain", "run", "--model", "xyz", "--sweep", "h=0,1", "--n", "4"],
        vec!["pe", "exact", "--no-such-flag"],
    ];
    for args in cases {
        let o = paulient(&args);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn outputs_repeat_byte_for_byte_apart_from_wall_time() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let base = ["spinchain", "run", "--model", "tfim", "--sweep", "h=0,0.5", "--n", "4", "--mode", "sampled"];
    let extra = ["--samples", "12", "--n-min", "4", "--max-steps", "30", "--seed", "77"];
    for (out, workers) in [(&a, "1"), (&b, "3")] {
        let mut args: Vec<&str> = base.iter().chain(extra.iter()).copied().collect();
        args.extend(["--out", path_str(out), "--workers", workers]);
        assert_eq!(code(&paulient(&args)), 0);
    }
    let (a, b) = (std::fs::read_to_string(&a).unwrap(), std::fs::read_to_string(&b).unwrap());
    assert_eq!(without_wall_time(&a), without_wall_time(&b));
    assert_eq!(a.lines().filter(|l| !l.starts_with('#')).count(), 3);
    assert!(a.lines().nth(3).unwrap().ends_with(",wall_time"));
}

#[test]
fn files_embed_seed_and_digest_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let cfg = write(
        dir.path(),
        "s.toml",
        &format!(
            "command = \"pe-sample\"\nseed = 12\nout = {:?}\n[params]\nhaar = 3\nsamples = 10\n",
            path_str(&out)
        ),
    );
    assert_eq!(code(&paulient(&["run", "--config", path_str(&cfg)])), 0);
    let from_file = std::fs::read_to_string(&out).unwrap();
    assert_eq!(header_value(&from_file, "seed").as_deref(), Some("12"));
    let digest = header_value(&from_file, "config_digest").unwrap();
    assert_eq!(digest.len(), 64);
    assert!(from_file.lines().last().unwrap().contains(",10,"));

    // The same run spelled as flags has the same digest and the same numbers.
    let flags = dir.path().join("f.csv");
    let args = ["pe", "sample", "--haar", "3", "--samples", "10", "--seed", "12", "--out", path_str(&flags)];
    assert_eq!(code(&paulient(&args)), 0);
    let from_flags = std::fs::read_to_string(&flags).unwrap();
    assert_eq!(without_wall_time(&from_file), without_wall_time(&from_flags));

    // A flag next to the file overrides it and changes the digest.
    let args = ["pe", "sample", "--config", path_str(&cfg), "--samples", "20"];
    assert_eq!(code(&paulient(&args)), 0);
    let overridden = std::fs::read_to_string(&out).unwrap();
    assert!(overridden.lines().last().unwrap().contains(",20,"));
    assert_ne!(header_value(&overridden, "config_digest").unwrap(), digest);
    assert_eq!(header_value(&overridden, "seed").as_deref(), Some("12"));
}

#[test]
fn mpu_examples_run() {
    let o = paulient(&["mpu", "pe", "--example", "t-layer", "--mode", "thermodynamic"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("0.683593750"), "{}", stdout(&o));
    let o = paulient(&["mpu", "pe", "--example", "shift"]);
    assert_eq!(code(&o), 2);
}
