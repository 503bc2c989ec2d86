use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use convamp::ensembles::{MatrixContainer, MatvecPath};
use convamp::experiment::{read_se_csv, read_sweep_csv};

fn convamp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_convamp")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("convamp-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const SMALL: &str = r#"{
    "layers": [{"matrix": {"kind": "mcc", "D": 8, "P": 16, "q": 6, "k": 3}}],
    "prior": {"type": "gauss_bernoulli", "rho": 0.25},
    "output_channel": {"type": "awgn", "sigma2": 1e-4},
    "sweep": {"beta_values": [0.5, 0.8]},
    "trials": 2,
    "seed": 5,
    "paired_dense": true,
    "amp": {"max_iter": 12, "tol": 1e-8, "damping": 0.0},
    "se": {"max_iter": 12, "tol": 1e-10, "quadrature_nodes": 41}
}"#;

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn verify_permutation_examples() {
    let out = convamp(&["verify-permutation", "4", "3", "3", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("PASS"));
    assert!(text.contains("[A1 A2 0]\n  [0 A1 A2]\n  [A2 0 A1]"), "{text}");
    for dims in [["1", "1", "9", "4"], ["3", "5", "7", "7"]] {
        let out = convamp(&["verify-permutation", dims[0], dims[1], dims[2], dims[3], "--seed", "3"]);
        assert!(out.status.success(), "{dims:?}");
    }
    assert_eq!(convamp(&["verify-permutation", "2", "2", "3", "4"]).status.code(), Some(2));
}

#[test]
fn bench_matvec_reports() {
    let out = convamp(&["bench-matvec", "2", "2", "16", "16", "--reps", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("saves nothing"), "{text}");
    let out = convamp(&["bench-matvec", "1", "1", "1024", "3", "--reps", "1"]);
    assert!(String::from_utf8(out.stdout).unwrap().contains("k/q^2 = 2.861e-6"));
}

#[test]
fn run_sweep_is_deterministic_and_writes_artifacts() {
    let dir = scratch("sweep");
    let cfg = write_config(&dir, SMALL);
    let (a, b) = (dir.join("a.csv"), dir.join("b.csv"));
    for (out, threads) in [(&a, "1"), (&b, "2")] {
        let res = convamp(&["--threads", threads, "run-sweep", "--config", &cfg, "--out", path_str(out), "--svg"]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(std::fs::read(dir.join("a.dense.csv")).unwrap(), std::fs::read(dir.join("b.dense.csv")).unwrap());
    assert!(std::fs::read_to_string(dir.join("a.iterations.svg")).unwrap().starts_with("<svg"));
    assert!(dir.join("a.beta.svg").exists());

    let rows = read_sweep_csv(std::fs::File::open(&a).unwrap()).unwrap();
    assert!(rows.iter().all(|r| r.n_trials == 2 && r.mse_amp_stderr >= 0.0));
    assert_eq!(rows.iter().filter(|r| r.iter == 1).count(), 2);

    let c = dir.join("c.csv");
    assert!(convamp(&["run-sweep", "--config", &cfg, "--out", path_str(&c), "--seed", "6"]).status.success());
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn single_iteration_gives_one_row_per_point() {
    let dir = scratch("one");
    let body = SMALL.replace("\"max_iter\": 12, \"tol\": 1e-8", "\"max_iter\": 1, \"tol\": 1e-8").replace("\"trials\": 2", "\"trials\": 1");
    let cfg = write_config(&dir, &body);
    let out = dir.join("r.csv");
    assert!(convamp(&["run-sweep", "--config", &cfg, "--out", path_str(&out)]).status.success());
    let rows = read_sweep_csv(std::fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.iter == 1 && r.n_trials == 1));
}

#[test]
fn run_se_starts_at_prior_power() {
    let dir = scratch("se");
    let cfg = write_config(&dir, SMALL);
    let out = dir.join("se.csv");
    assert!(convamp(&["run-se", "--config", &cfg, "--out", path_str(&out), "--svg"]).status.success());
    let rows = read_se_csv(std::fs::File::open(&out).unwrap()).unwrap();
    assert!(rows.len() > 2);
    assert_eq!(rows[0].iter, 0);
    assert_eq!(rows[0].mse_se, 0.25);
    assert!(dir.join("se.se.svg").exists());

    let zero = write_config(&dir, &SMALL.replace("\"max_iter\": 12, \"tol\": 1e-10", "\"max_iter\": 0, \"tol\": 1e-10"));
    assert_eq!(convamp(&["run-se", "--config", &zero, "--out", path_str(&out)]).status.code(), Some(2));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = scratch("bad");
    let out = dir.join("x.csv");
    let unknown = write_config(&dir, &SMALL.replace("\"trials\": 2", "\"trials\": 2, \"trails\": 3"));
    let res = convamp(&["run-sweep", "--config", &unknown, "--out", path_str(&out)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("trails"));
    let missing = dir.join("nope.json");
    assert_eq!(convamp(&["run-se", "--config", path_str(&missing), "--out", path_str(&out)]).status.code(), Some(2));
    assert_eq!(convamp(&["run-sweep", "--config"]).status.code(), Some(2));
}

#[test]
fn run_amp_prints_trace() {
    let dir = scratch("amp");
    let cfg = write_config(&dir, SMALL);
    let out = convamp(&["run-amp", "--config", &cfg]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("iter,mse_amp,mse_se"));
    assert_eq!(lines.count(), 12);
}

#[test]
fn gen_matrix_writes_loadable_containers() {
    let dir = scratch("gen");
    let m = dir.join("m.json");
    assert!(convamp(&["gen-matrix", "--mcc", "2,3,5,2", "--seed", "4", "--out", path_str(&m)]).status.success());
    let c = MatrixContainer::load(&m).unwrap();
    assert_eq!(c.rng_seed(), Some(4));
    let op = c.to_operator(MatvecPath::Fft).unwrap();
    assert_eq!((op.rows(), op.cols()), (10, 15));

    let s = dir.join("s.json");
    assert!(convamp(&["gen-matrix", "--mcc", "2,2,6,3", "--profile", "0.5,0.3,0.2", "--out", path_str(&s)]).status.success());
    assert!(std::fs::read_to_string(&s).unwrap().contains("mcc-structured"));

    let d = dir.join("d.json");
    assert!(convamp(&["gen-matrix", "--dense", "4,3", "--out", path_str(&d)]).status.success());
    assert_eq!(MatrixContainer::load(&d).unwrap().to_operator(MatvecPath::Sparse).unwrap().rows(), 4);

    let cfg = write_config(&dir, SMALL);
    let l = dir.join("l.json");
    assert!(convamp(&["gen-matrix", "--config", &cfg, "--out", path_str(&l)]).status.success());
    assert_eq!(MatrixContainer::load(&l).unwrap().to_operator(MatvecPath::Sparse).unwrap().rows(), 48);

    assert_eq!(convamp(&["gen-matrix", "--mcc", "2,3,5", "--out", path_str(&m)]).status.code(), Some(2));
    assert_eq!(convamp(&["gen-matrix", "--mcc", "2,3,5,2", "--dense", "2,2", "--out", path_str(&m)]).status.code(), Some(2));
}
