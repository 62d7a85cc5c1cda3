use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use semflow::krylov::PreconditionerKind;
use semflow_cli::{parse_config, RunConfig};

fn repo_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn semflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semflow")).args(args).output().unwrap()
}

const CHANNEL: &str = r#"
case = "channel"
order = 4

[mesh]
elements = [2, 2, 1]
lower = [0.0, -1.0, 0.0]
upper = [1.0, 1.0, 1.0]
periodic = [true, false, true]

[time]
dt = 0.05
steps = 6

[flow]
forcing = [2.0, 0.0, 0.0]

[solver.pressure]
tolerance = 1e-8
preconditioner = "schwarz"
"#;

#[test]
fn shipped_poiseuille_config_parses_to_documented_values() {
    let cfg = parse_config(&repo_file("configs/poiseuille.toml")).unwrap();
    assert_eq!(cfg.case, "poiseuille");
    assert_eq!(cfg.order, 7);
    assert_eq!(cfg.mesh.elements, [4, 4, 4]);
    assert_eq!(cfg.mesh.periodic, [true, false, true]);
    assert_eq!((cfg.time.order, cfg.time.dt, cfg.time.steps), (2, 0.01, 2000));
    assert_eq!(cfg.flow.forcing, [2.0, 0.0, 0.0]);
    assert_eq!(cfg.solver.pressure.preconditioner, PreconditionerKind::Schwarz);
    assert_eq!(cfg.solver.pressure.projection_depth, 8);
    let again = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
    assert_eq!(again, cfg);
    for name in ["forced_box.toml"] {
        parse_config(&repo_file(&format!("configs/{name}"))).unwrap();
    }
}

#[test]
fn missing_config_is_an_error() {
    let out = semflow(&["solve", "/nonexistent/run.toml"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/run.toml"));
}

#[test]
fn unknown_key_fails_with_its_name() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, format!("{CHANNEL}\n[output]\nformat = \"hdf5\"\n")).unwrap();
    let out = semflow(&["solve", path.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("format"));
}

#[test]
fn zero_steps_writes_only_the_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, CHANNEL.replace("steps = 6", "steps = 0")).unwrap();
    let out_dir = dir.path().join("out");
    let out = semflow(&["solve", path.to_str().unwrap(), "--output-dir", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("final.chk").exists());
    assert!(!out_dir.join("telemetry.csv").exists());
}

fn without_wall_time(csv: &str) -> Vec<String> {
    csv.lines()
        .map(|l| l.rsplit_once(',').map(|(head, _)| head.to_string()).unwrap())
        .collect()
}

#[test]
fn telemetry_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, CHANNEL).unwrap();
    let mut runs = Vec::new();
    for i in 0..2 {
        let out_dir = dir.path().join(format!("run{i}"));
        let out = semflow(&[
            "--workers",
            "1",
            "solve",
            path.to_str().unwrap(),
            "--output-dir",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let stdout = String::from_utf8_lossy(&out.stdout).to_string();
        assert!(stdout.contains("steps: 6") && stdout.contains("final divergence"));
        runs.push((
            std::fs::read_to_string(out_dir.join("telemetry.csv")).unwrap(),
            std::fs::read(out_dir.join("final.chk")).unwrap(),
        ));
    }
    let lines = without_wall_time(&runs[0].0);
    assert_eq!(lines.len(), 7);
    assert_eq!(lines[0], "step,time,iterations_v,iterations_p,residual_v,residual_p,divergence,cfl");
    assert_eq!(lines, without_wall_time(&runs[1].0));
    assert_eq!(runs[0].1, runs[1].1);
}

#[test]
fn blow_up_fails_and_keeps_partial_telemetry() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    let text = CHANNEL
        .replace("forcing = [2.0, 0.0, 0.0]", "forcing = [1e300, 1e300, 0.0]\nre = 1e6")
        .replace("steps = 6", "steps = 50");
    std::fs::write(&path, text).unwrap();
    let out_dir = dir.path().join("out");
    let out = semflow(&["solve", path.to_str().unwrap(), "--output-dir", out_dir.to_str().unwrap()]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("telemetry so far"), "{stderr}");
    let telemetry = std::fs::read_to_string(out_dir.join("telemetry.csv")).unwrap();
    assert!(telemetry.starts_with("step,time"));
}

#[test]
fn validate_passes_on_a_clean_build() {
    let out = semflow(&["validate"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8_lossy(&out.stdout);
    for suite in ["basis exactness", "axhelm dense oracle", "xxt oracle", "divergence bound", "temporal order"] {
        assert!(stdout.contains(suite), "{stdout}");
    }
    assert!(!stdout.contains("FAIL"));
}

#[test]
fn commsim_writes_the_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let out = semflow(&[
        "commsim",
        repo_file("configs/commsim.toml").to_str().unwrap(),
        "--output-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("commsim.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "n,intra_msgs,inter_msgs,intra_volume,inter_volume");
    // periodic ring of 8 ranks: 8 cut faces of 64 nodes
    assert_eq!(lines[1], "1,0,8,0,512");
    assert_eq!(lines[2], "2,4,4,256,256");
    assert_eq!(lines[3], "4,6,2,384,128");
    assert_eq!(lines[4], "8,8,0,512,0");
}

#[test]
fn commsim_reads_a_dump_and_partition_file() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = semflow::build_box_mesh(&semflow::BoxSpec::unit([2, 2, 1])).unwrap();
    mesh.write_dump(std::fs::File::create(dir.path().join("mesh.txt")).unwrap()).unwrap();
    std::fs::write(dir.path().join("ranks.txt"), "0\n0\n1\n1\n").unwrap();
    let cfg = dir.path().join("comm.toml");
    std::fs::write(&cfg, "order = 3\nsizes = [1, 2]\nmesh_dump = \"mesh.txt\"\npartition_file = \"ranks.txt\"\n").unwrap();
    let out = semflow(&["commsim", cfg.to_str().unwrap(), "--output-dir", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // the y = 1/2 plane is cut by two faces of 16 nodes
    assert!(String::from_utf8_lossy(&out.stdout).contains("edge cuts: 2  volume: 32  messages: 1"));
}

#[test]
fn bench_with_no_elements_writes_a_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bench.toml");
    std::fs::write(&cfg, "kernels = [\"axhelm\"]\nelements = []\norders = [7]\nworkers = [1]\n").unwrap();
    let out = semflow(&["bench", cfg.to_str().unwrap(), "--output-dir", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("bench.csv")).unwrap();
    assert_eq!(
        csv.trim_end(),
        "kernel,E,N,workers,reps,min_s,median_s,dof_per_s,gflops,elements_per_worker,status"
    );
}

#[test]
fn bench_small_sweep_and_skips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bench.toml");
    std::fs::write(
        &cfg,
        "kernels = [\"axhelm\", \"gs_sum\"]\nelements = [1, 8, 100000]\norders = [3]\nworkers = [1]\nmemory_budget_bytes = 100000000\n",
    )
    .unwrap();
    let out = semflow(&["bench", cfg.to_str().unwrap(), "--output-dir", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("bench.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 6);
    assert!(rows[0].starts_with("axhelm,1,3,1,5,") && rows[0].ends_with(",ok"));
    assert!(rows[2].contains("skipped"));
    assert!(rows[3].starts_with("gs_sum,1,3,"));
}

#[test]
fn bench_rejects_too_few_reps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bench.toml");
    std::fs::write(&cfg, "kernels = [\"axhelm\"]\nelements = [1]\norders = [3]\nworkers = [1]\nreps = 2\n").unwrap();
    let out = semflow(&["bench", cfg.to_str().unwrap(), "--output-dir", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("reps"));
}
