//! End-to-end checks of the command-line interface and the file formats:
//! exit codes, certificate round-trips, and plot output.

use nalgebra::DMatrix;
use polylyap::cli::{run, EXIT_FAILED, EXIT_INPUT, EXIT_OK};
use polylyap::contraction::contraction_gap;
use polylyap::files::{
    load_certificate, matrix_to_columns, save_certificate, CertificateFile, ConfigEcho,
    ToleranceEcho, TraceSummary,
};
use polylyap::polytope::VPolytope;
use polylyap::search::SearchConfig;
use std::fs;
use std::path::{Path, PathBuf};
use tempfile::tempdir;

fn write_model(dir: &Path, name: &str, json: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, json).unwrap();
    path
}

fn cli(args: &[&str]) -> i32 {
    run(std::iter::once("polylyap").chain(args.iter().copied()))
}

const NEG_IDENTITY_MODEL: &str = r#"{"kind":"single","a":[[-1.0,0.0],[0.0,-1.0]]}"#;
const ROTATION_MODEL: &str = r#"{"kind":"single","a":[[0.0,-1.0],[1.0,0.0]]}"#;

/// Certificate file for the cross-polytope under ẋ = −x, built from the
/// gap LP directly.
fn cross_certificate(dir: &Path) -> PathBuf {
    let cross = VPolytope::from_columns(2, &[1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0]).unwrap();
    let a = -DMatrix::identity(2, 2);
    let cert = contraction_gap(&cross, &[a]).unwrap();
    let file = CertificateFile {
        v: matrix_to_columns(cert.v.vertices()),
        m_list: cert.m_list.iter().map(matrix_to_columns).collect(),
        eta: cert.eta,
        k: None,
        model: serde_json::from_str(NEG_IDENTITY_MODEL).unwrap(),
        tolerances: ToleranceEcho::default(),
        config: ConfigEcho::from_config(&SearchConfig::new(4)),
        trace_summary: TraceSummary {
            status: "certified".into(),
            iterations: 0,
            restart_index: 0,
            restarts_used: 1,
            final_eta: cert.eta,
        },
    };
    let path = dir.join("cross.json");
    save_certificate(&path, &file).unwrap();
    path
}

#[test]
fn search_writes_certificate_and_exits_zero() {
    let dir = tempdir().unwrap();
    let model = write_model(dir.path(), "model.json", NEG_IDENTITY_MODEL);
    let out = dir.path().join("cert.json");
    let code = cli(&[
        "verify",
        model.to_str().unwrap(),
        "--vertices",
        "4",
        "--max-iter",
        "50",
        "--restarts",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let cert = load_certificate(&out).unwrap();
    assert!(cert.eta >= 1.0 - 1e-6, "η = {}", cert.eta);
    assert_eq!(cert.trace_summary.status, "certified");

    // Round trip: the stored certificate re-verifies through the CLI.
    let code = cli(&[
        "verify",
        model.to_str().unwrap(),
        "--certificate",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);

    // And through the library, with the identical rate.
    let (parsed, model) = cert.to_certificate().unwrap();
    let closed = model.closed_loop(None).unwrap();
    assert!(polylyap::verify_certificate(&parsed, &closed));
    assert_eq!(parsed.eta.to_bits(), cert.eta.to_bits());
}

#[test]
fn rotation_search_fails_with_exit_one() {
    let dir = tempdir().unwrap();
    let model = write_model(dir.path(), "rot.json", ROTATION_MODEL);
    let out = dir.path().join("cert.json");
    let code = cli(&[
        "verify",
        model.to_str().unwrap(),
        "--vertices",
        "4",
        "--max-iter",
        "10",
        "--restarts",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_FAILED);
    assert!(!out.exists(), "no certificate should be written on failure");
}

#[test]
fn input_errors_exit_two() {
    let dir = tempdir().unwrap();
    // Missing file.
    assert_eq!(cli(&["verify", "no-such-file.json"]), EXIT_INPUT);
    // Unparseable model.
    let bad = write_model(dir.path(), "bad.json", r#"{"kind":"single"}"#);
    assert_eq!(cli(&["verify", bad.to_str().unwrap()]), EXIT_INPUT);
    // Ragged matrix.
    let ragged = write_model(
        dir.path(),
        "ragged.json",
        r#"{"kind":"single","a":[[1.0,2.0],[3.0]]}"#,
    );
    assert_eq!(cli(&["verify", ragged.to_str().unwrap()]), EXIT_INPUT);
    // --gamma on a non-motor model.
    let single = write_model(dir.path(), "single.json", NEG_IDENTITY_MODEL);
    assert_eq!(
        cli(&["verify", single.to_str().unwrap(), "--gamma", "2"]),
        EXIT_INPUT
    );
    // Searching directly on a synthesis model.
    let syn = write_model(
        dir.path(),
        "syn.json",
        r#"{"kind":"synthesis","a_list":[[[-1.0,0.0],[0.0,-1.0]]],"b_list":[[[0.0,1.0]]],"c":[[1.0],[0.0]]}"#,
    );
    assert_eq!(cli(&["verify", syn.to_str().unwrap()]), EXIT_INPUT);
}

#[test]
fn eval_reports_gauge_and_margins() {
    let dir = tempdir().unwrap();
    let cert = cross_certificate(dir.path());
    let points = dir.path().join("points.json");
    fs::write(&points, "[[0.0, 0.0], [1.0, 0.0], [0.3, -0.2]]").unwrap();
    assert_eq!(
        cli(&["eval", cert.to_str().unwrap(), points.to_str().unwrap()]),
        EXIT_OK
    );

    // Dimension mismatch in the points file is an input error.
    fs::write(&points, "[[1.0, 0.0, 0.0]]").unwrap();
    assert_eq!(
        cli(&["eval", cert.to_str().unwrap(), points.to_str().unwrap()]),
        EXIT_INPUT
    );
}

#[test]
fn eval_rejects_tampered_certificate() {
    let dir = tempdir().unwrap();
    let path = cross_certificate(dir.path());
    let mut file = load_certificate(&path).unwrap();
    file.eta += 0.5;
    save_certificate(&path, &file).unwrap();
    let points = dir.path().join("points.json");
    fs::write(&points, "[[1.0, 0.0]]").unwrap();
    assert_eq!(
        cli(&["eval", path.to_str().unwrap(), points.to_str().unwrap()]),
        EXIT_FAILED
    );
}

#[test]
fn plot_two_dimensional_certificate() {
    let dir = tempdir().unwrap();
    let cert = cross_certificate(dir.path());
    let out = dir.path().join("plot.csv");
    assert_eq!(
        cli(&["plot", cert.to_str().unwrap(), "--out", out.to_str().unwrap()]),
        EXIT_OK
    );
    let csv = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "x,y");
    assert_eq!(lines.len(), 5, "header + one row per vertex");
    let parse = |line: &str| -> (f64, f64) {
        let mut it = line.split(',').map(|t| t.parse::<f64>().unwrap());
        (it.next().unwrap(), it.next().unwrap())
    };
    // Counter-clockwise angular order starting at angle 0.
    assert_eq!(parse(lines[1]), (1.0, 0.0));
    assert_eq!(parse(lines[2]), (0.0, 1.0));
    assert_eq!(parse(lines[3]), (-1.0, 0.0));
    assert_eq!(parse(lines[4]), (0.0, -1.0));
}

#[test]
fn plot_three_dimensional_certificate() {
    let dir = tempdir().unwrap();
    // Octahedron under ẋ = −x.
    let v = VPolytope::from_columns(
        3,
        &[
            1.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0, 0.0,
            0.0, -1.0,
        ],
    )
    .unwrap();
    let a = -DMatrix::identity(3, 3);
    let cert = contraction_gap(&v, &[a]).unwrap();
    let file = CertificateFile {
        v: matrix_to_columns(cert.v.vertices()),
        m_list: cert.m_list.iter().map(matrix_to_columns).collect(),
        eta: cert.eta,
        k: None,
        model: serde_json::from_str(
            r#"{"kind":"single","a":[[-1.0,0.0,0.0],[0.0,-1.0,0.0],[0.0,0.0,-1.0]]}"#,
        )
        .unwrap(),
        tolerances: ToleranceEcho::default(),
        config: ConfigEcho::from_config(&SearchConfig::new(6)),
        trace_summary: TraceSummary {
            status: "certified".into(),
            iterations: 0,
            restart_index: 0,
            restarts_used: 1,
            final_eta: cert.eta,
        },
    };
    let path = dir.path().join("octa.json");
    save_certificate(&path, &file).unwrap();
    let out = dir.path().join("plot.csv");
    assert_eq!(
        cli(&["plot", path.to_str().unwrap(), "--out", out.to_str().unwrap()]),
        EXIT_OK
    );
    let csv = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "kind,a,b,c");
    let vertices = lines.iter().filter(|l| l.starts_with("vertex,")).count();
    assert_eq!(vertices, 6);
    let facets: Vec<Vec<usize>> = lines
        .iter()
        .filter(|l| l.starts_with("facet,"))
        .map(|l| l.split(',').skip(1).map(|t| t.parse().unwrap()).collect())
        .collect();
    assert_eq!(facets.len(), 8, "octahedron has 8 facets");
    let mut covered = vec![false; 6];
    for f in &facets {
        for &i in f {
            covered[i] = true;
        }
    }
    assert!(covered.iter().all(|&c| c), "facets must cover all vertices");
}

#[test]
fn plot_rejects_unsupported_dimension() {
    let dir = tempdir().unwrap();
    let file = CertificateFile {
        v: vec![vec![1.0], vec![-1.0]],
        m_list: vec![vec![vec![-1.0, 0.0], vec![0.0, -1.0]]],
        eta: 1.0,
        k: None,
        model: serde_json::from_str(r#"{"kind":"single","a":[[-1.0]]}"#).unwrap(),
        tolerances: ToleranceEcho::default(),
        config: ConfigEcho::from_config(&SearchConfig::new(2)),
        trace_summary: TraceSummary {
            status: "certified".into(),
            iterations: 0,
            restart_index: 0,
            restarts_used: 1,
            final_eta: 1.0,
        },
    };
    let path = dir.path().join("one-dim.json");
    save_certificate(&path, &file).unwrap();
    let out = dir.path().join("plot.csv");
    assert_eq!(
        cli(&["plot", path.to_str().unwrap(), "--out", out.to_str().unwrap()]),
        EXIT_INPUT
    );
}

#[test]
fn synthesize_nominal_position_model() {
    let dir = tempdir().unwrap();
    let model = write_model(
        dir.path(),
        "position.json",
        r#"{"kind":"motor-position","gamma":1.0}"#,
    );
    let out = dir.path().join("cert.json");
    let code = cli(&[
        "synthesize",
        model.to_str().unwrap(),
        "--vertices",
        "9",
        "--max-iter",
        "150",
        "--restarts",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let cert = load_certificate(&out).unwrap();
    assert!(cert.eta > 0.0);
    assert!(cert.k.is_some(), "synthesis certificate must store the gain");
    let (parsed, model) = cert.to_certificate().unwrap();
    let closed = model.closed_loop(parsed.gain.as_ref()).unwrap();
    assert!(polylyap::verify_certificate(&parsed, &closed));
}

#[test]
fn synthesize_unstabilizable_model_fails() {
    let dir = tempdir().unwrap();
    // Unstable plant with zero input matrix: nothing to synthesize.
    let model = write_model(
        dir.path(),
        "hopeless.json",
        r#"{"kind":"synthesis","a_list":[[[1.0,0.0],[0.0,1.0]]],"b_list":[[[0.0,0.0]]],"c":[[1.0,0.0],[0.0,1.0]]}"#,
    );
    let out = dir.path().join("cert.json");
    let code = cli(&[
        "synthesize",
        model.to_str().unwrap(),
        "--vertices",
        "4",
        "--max-iter",
        "10",
        "--restarts",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_FAILED);
}

#[test]
fn synthesize_rejects_analysis_model() {
    let dir = tempdir().unwrap();
    let model = write_model(dir.path(), "single.json", NEG_IDENTITY_MODEL);
    assert_eq!(cli(&["synthesize", model.to_str().unwrap()]), EXIT_INPUT);
}

#[test]
fn binary_prints_rate_matching_certificate_file() {
    let dir = tempdir().unwrap();
    let model = write_model(dir.path(), "model.json", NEG_IDENTITY_MODEL);
    let out = dir.path().join("cert.json");
    let output = std::process::Command::new(env!("CARGO_BIN_EXE_polylyap"))
        .args([
            "verify",
            model.to_str().unwrap(),
            "--vertices",
            "4",
            "--max-iter",
            "50",
            "--restarts",
            "3",
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let stdout = String::from_utf8(output.stdout).unwrap();
    let printed: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("eta = "))
        .expect("missing eta line")
        .trim()
        .parse()
        .unwrap();
    let stored = load_certificate(&out).unwrap().eta;
    assert!(
        (printed - stored).abs() <= 1e-12,
        "printed {printed} vs stored {stored}"
    );
}

#[test]
fn motor_speed_cli_at_nominal_gamma() {
    let dir = tempdir().unwrap();
    let model = write_model(dir.path(), "speed.json", r#"{"kind":"motor-speed"}"#);
    let out = dir.path().join("cert.json");
    // γ = 1 collapses the hull to the nominal plant, which certifies fast.
    let code = cli(&[
        "verify",
        model.to_str().unwrap(),
        "--gamma",
        "1",
        "--vertices",
        "5",
        "--max-iter",
        "100",
        "--restarts",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let cert = load_certificate(&out).unwrap();
    assert!(cert.eta > 0.0);
}
