use std::fs;
use std::path::Path;
use std::process::Command;

use banditlb_cli::run;

const MINIMAL: &str = "[plan]\nreplications = 4\nt_grid = 16\n\n[env]\nfamily = bernoulli_null\nk = 2\nalpha = 0.5\n\n[policy]\nkind = uniform\n";

fn args(dir: &Path, rest: &[&str]) -> Vec<String> {
    let mut v = vec!["banditlb".to_string(), "--out".into(), dir.display().to_string()];
    v.extend(rest.iter().map(|s| s.to_string()));
    v
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("plan.cfg");
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn simulate_minimal_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), MINIMAL);
    assert_eq!(run(args(dir.path(), &["simulate", "--config", &cfg])), 0);
    let text = fs::read_to_string(dir.path().join("regret.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "env_family,env_params,target_arm,policy,T,replications,mean_regret,stderr,q50,q90,q_delta,tail_threshold,tail_freq,seed"
    );
    assert_eq!(lines.len(), 2);
}

#[test]
fn simulate_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let text = MINIMAL.replace("bernoulli_null", "bernoulli").replace("t_grid = 16", "t_grid = 64, 128");
    let cfg = write_config(dir.path(), &format!("{text}\n[policy]\nkind = exp3\n"));
    let mut outputs = Vec::new();
    for workers in ["1", "1", "3"] {
        assert_eq!(run(args(dir.path(), &["--workers", workers, "simulate", "--config", &cfg])), 0);
        outputs.push(fs::read(dir.path().join("regret.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
    assert_eq!(run(args(dir.path(), &["--seed", "99", "simulate", "--config", &cfg])), 0);
    assert_ne!(fs::read(dir.path().join("regret.csv")).unwrap(), outputs[0]);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &MINIMAL.replace("family = bernoulli_null\n", ""));
    assert_eq!(run(args(dir.path(), &["simulate", "--config", &cfg])), 2);
    assert!(!dir.path().join("regret.csv").exists());
    assert_eq!(run(args(dir.path(), &["simulate", "--config", "/nonexistent.cfg"])), 2);
    assert_eq!(run(args(dir.path(), &["frobnicate"])), 2);
}

#[test]
fn capacity_ceiling_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &MINIMAL.replace("t_grid = 16", "t_grid = 16\nmax_total_rounds = 10"));
    assert_eq!(run(args(dir.path(), &["simulate", "--config", &cfg])), 3);
    assert!(!dir.path().join("regret.csv").exists());
}

#[test]
fn bounds_command() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(args(dir.path(), &["bounds", "--bound", "thm4_lower", "alpha=0.5", "T=1024", "K=4"])), 0);
    let text = fs::read_to_string(dir.path().join("bounds.csv")).unwrap();
    assert!(text.starts_with("bound,params,value,hypotheses_ok,violated_conditions\n"));
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "thm4_lower");
    assert!((row[2].parse::<f64>().unwrap() - 1.676_104_962_812_557_1).abs() < 1e-14);
    assert_eq!(row[3], "true");

    assert_eq!(run(args(dir.path(), &["bounds", "--bound", "thm1_lower", "K=2", "T=40", "delta=0.15"])), 0);
    let text = fs::read_to_string(dir.path().join("bounds.csv")).unwrap();
    let row = text.lines().nth(1).unwrap();
    assert!(row.contains(",false,") && row.ends_with("T ≥ 32(K−1) log(2/δ)"), "{row}");

    assert_eq!(run(args(dir.path(), &["bounds", "--bound", "cor7_lower", "K=2", "T=8192", "rho=0.5"])), 0);
    let text = fs::read_to_string(dir.path().join("bounds.csv")).unwrap();
    let v: f64 = text.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!((v - 0.179_582_674_587_059_69).abs() < 1e-15);

    assert_eq!(run(args(dir.path(), &["bounds", "--bound", "thm9_lower", "K=2"])), 2);
    assert_eq!(run(args(dir.path(), &["bounds", "--bound", "thm1_lower", "K=2", "T=100"])), 2);
    assert_eq!(run(args(dir.path(), &["bounds", "--bound", "thm1_lower", "X=2"])), 2);
}

#[test]
fn bounds_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("b.cfg");
    fs::write(&p, "[bound]\nname = cor8_lower\nK = 2\nT = 8192\n\n[bound]\nname = eq1_upper\nK = 2\nT = 8192\ndelta = 0.15\n").unwrap();
    assert_eq!(run(args(dir.path(), &["bounds", "--config", &p.display().to_string()])), 0);
    assert_eq!(fs::read_to_string(dir.path().join("bounds.csv")).unwrap().lines().count(), 3);
}

#[test]
fn verify_suites() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(args(dir.path(), &["verify", "oracle"])), 0);
    let text = fs::read_to_string(dir.path().join("verify.csv")).unwrap();
    assert!(text.lines().skip(1).all(|l| l.contains(",true,")));
    assert_eq!(run(args(dir.path(), &["verify", "inequalities"])), 0);
    assert_eq!(run(args(dir.path(), &["verify", "scaling", "--replications", "20"])), 3);
    assert_eq!(run(args(dir.path(), &["verify", "unheard_of"])), 2);
}

#[test]
fn verify_exit_code_matches_failed_checks() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(args(dir.path(), &["verify", "lower_bounds", "--replications", "1"]));
    let text = fs::read_to_string(dir.path().join("verify.csv")).unwrap();
    let failed = text.lines().skip(1).filter(|l| l.contains(",false,")).count();
    assert_eq!(code, if failed > 0 { 1 } else { 0 });
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_banditlb"))
        .args(["bounds", "--bound", "cor8_lower", "K=2", "T=8192"])
        .env("BANDITLB_OUT", dir.path())
        .current_dir(dir.path().parent().unwrap())
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.path().join("bounds.csv").exists());

    let missing = Command::new(env!("CARGO_BIN_EXE_banditlb"))
        .args(["bounds", "--bound", "nope"])
        .env("BANDITLB_OUT", dir.path())
        .status()
        .unwrap();
    assert_eq!(missing.code(), Some(2));
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&root).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        if text.contains("[bound]") {
            let dir = tempfile::tempdir().unwrap();
            assert_eq!(run(args(dir.path(), &["bounds", "--config", &path.display().to_string()])), 0);
        } else {
            banditlb_cli::config::parse_plan(&text, &[]).unwrap();
        }
        seen += 1;
    }
    assert!(seen >= 4);
}
