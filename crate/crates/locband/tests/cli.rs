use std::path::Path;
use std::process::{Command, Output};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use locband_core::AnalyticDensity;

fn locband(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_locband"))
        .args(args)
        .env_remove("LOCBAND_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write_sample(dir: &Path, n: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let xs = AnalyticDensity::peak_triangular().sample(n, &mut rng).unwrap();
    let text: String = xs.iter().map(|x| format!("{x}\n")).collect();
    let path = dir.join("data.txt");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn csv_rows(s: &str) -> Vec<Vec<String>> {
    s.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn halfwidths(csv: &str) -> Vec<f64> {
    csv_rows(csv)
        .iter()
        .map(|r| (r[5].parse::<f64>().unwrap() - r[4].parse::<f64>().unwrap()) / 2.0)
        .collect()
}

#[test]
fn band_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_sample(dir.path(), 2048);
    let a = locband(&["band", "--input", &input]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    let csv = stdout(&a);
    assert!(csv.starts_with("k,t_lo,t_hi,center,lo,hi,h_loc,j_hat_left,j_hat_right\n"));
    let mesh: usize = stderr(&a)
        .lines()
        .find_map(|l| l.strip_prefix("plan.mesh_count="))
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(csv_rows(&csv).len(), mesh);
    // no randomness in fitting
    let b = locband(&["band", "--input", &input]);
    assert_eq!(a.stdout, b.stdout);
    let narrow = locband(&["band", "--input", &input, "--alpha", "0.1"]);
    let wide = locband(&["band", "--input", &input, "--alpha", "0.01"]);
    let (hn, hw) = (halfwidths(&stdout(&narrow)), halfwidths(&stdout(&wide)));
    assert!(hn.iter().zip(&hw).all(|(n, w)| w > n));
}

#[test]
fn band_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "0.1\n0.2\nabc\n0.4\n").unwrap();
    let o = locband(&["band", "--input", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
    std::fs::write(&bad, "0.1\n0.2\n0.3\ninf\n").unwrap();
    let o = locband(&["band", "--input", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 4"));
    let input = write_sample(dir.path(), 2048);
    let o = locband(&["band", "--input", &input, "--mode", "theory"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn out_writes_sidecar_with_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_sample(dir.path(), 512);
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "alpha=0.2\nc2=0.9\n").unwrap();
    let out = dir.path().join("band.csv");
    let o = locband(&[
        "band",
        "--input",
        &input,
        "--config",
        cfg.to_str().unwrap(),
        "--c2",
        "0.7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let meta = std::fs::read_to_string(dir.path().join("band.csv.meta")).unwrap();
    assert!(meta.contains("config.alpha=0.2\n"));
    assert!(meta.contains("plan.c2=0.7\n"), "{meta}");
    assert!(std::fs::read_to_string(&out).unwrap().starts_with("k,"));
}

#[test]
fn unknown_config_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "alpha=0.2\nbandwidth=3\n").unwrap();
    let o = locband(&["plan", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bandwidth"));
}

#[test]
fn plan_output_reads_back_as_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = locband(&["plan", "--n", "5000", "--c2", "0.4"]);
    assert_eq!(o.status.code(), Some(0));
    let cfg = dir.path().join("plan.cfg");
    std::fs::write(&cfg, stdout(&o)).unwrap();
    let again = locband(&["plan", "--config", cfg.to_str().unwrap()]);
    assert_eq!(again.status.code(), Some(0), "{}", stderr(&again));
    assert_eq!(again.stdout, o.stdout);
}

#[test]
fn simulate_kinds() {
    let o = locband(&["simulate", "gumbel", "--m", "256", "--reps", "200"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("summary.ks_distance="));
    let o = locband(&["simulate", "coverage", "--reps", "1", "--n", "1024"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(csv_rows(&stdout(&o)).len(), 1);
    let o = locband(&["simulate", "bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).to_lowercase().contains("usage"));
}

#[test]
fn seed_flag_beats_environment() {
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_locband"));
        c.args(["simulate", "gumbel", "--m", "64", "--reps", "20"]);
        c.env_remove("LOCBAND_SEED");
        if let Some(e) = env {
            c.env("LOCBAND_SEED", e);
        }
        if let Some(f) = flag {
            c.args(["--seed", f]);
        }
        c.output().unwrap().stdout
    };
    assert_eq!(run(Some("5"), None), run(None, Some("5")));
    assert_eq!(run(Some("5"), Some("6")), run(None, Some("6")));
    assert_ne!(run(Some("5"), None), run(Some("6"), None));
}

#[test]
fn verify_filtering_and_fault_injection() {
    let o = locband(&["verify", "--suite", "a3"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "a3");
    let o = locband(&["verify", "--suite", "kernel", "--fault", "kernel-order"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("kernel:order"), "{}", stderr(&o));
    let o = locband(&["verify", "--suite", "nope"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn curves_for_the_peak() {
    let o = locband(&["curves", "--density", "peak", "--n", "16384"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = stdout(&o);
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    assert_eq!(header, ["k", "t", "density", "local_lo", "local_hi", "global_lo", "global_hi", "h_loc", "j_hat"]);
    let rows: Vec<Vec<f64>> =
        csv_rows(&csv).iter().map(|r| r.iter().map(|v| v.parse().unwrap()).collect()).collect();
    let at = |t: f64| rows.iter().find(|r| r[1] >= t).unwrap().clone();
    let smooth = at(0.9);
    assert!(smooth[5] < smooth[3] && smooth[4] < smooth[6], "{smooth:?}");
    let kink = at(0.5);
    assert!(smooth[4] - smooth[3] < kink[4] - kink[3]);
    let o = locband(&["curves", "--density", "nonesuch"]);
    assert_eq!(o.status.code(), Some(2));
}
