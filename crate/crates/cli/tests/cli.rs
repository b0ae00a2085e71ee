use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn gsbv(args: &[&str], stdin: Option<&[u8]>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_gsbv"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn gsbv");
    {
        let mut pipe = child.stdin.take().unwrap();
        if let Some(bytes) = stdin {
            pipe.write_all(bytes).unwrap();
        }
    }
    child.wait_with_output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn runaway_manifest(dir: &Path) -> String {
    for n in ["10", "100", "1000"] {
        let out = dir.join(format!("r{n}.json"));
        let o = gsbv(
            &[
                "fixture",
                "runaway",
                "--n",
                n,
                "--out",
                out.to_str().unwrap(),
            ],
            None,
        );
        assert!(o.status.success());
    }
    let zero = gsbv(&["fixture", "runaway", "--n", "0"], None);
    fs::write(dir.join("zero.json"), &zero.stdout).unwrap();
    let m = dir.join("manifest.json");
    fs::write(
        &m,
        r#"{"functions":["r10.json","r100.json","r1000.json"],"limit":"zero.json","eps":[0.1]}"#,
    )
    .unwrap();
    m.to_str().unwrap().to_owned()
}

#[test]
fn staircase_fixture_piped_into_energy() {
    let fixture = gsbv(&["fixture", "staircase", "--n", "16"], None);
    assert!(fixture.status.success());
    let e = gsbv(&["energy"], Some(&fixture.stdout));
    assert_eq!(e.status.code(), Some(0));
    assert_eq!(json(&e)["jump"], 2.9375);
}

#[test]
fn verify_runaway_manifest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let m = runaway_manifest(dir.path());
    let o = gsbv(&["verify", &m], None);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let r = json(&o);
    assert_eq!(r["pass"], true);
    let l = &r["ladder"][0];
    for block in [
        "conclusion_1",
        "conclusion_2",
        "conclusion_4",
        "conclusion_5",
    ] {
        assert_eq!(l[block]["conclusion"]["pass"], true, "{block}");
    }
    assert_eq!(l["conclusion_3"]["holds"], true);
    assert_eq!(l["conclusion_3"]["margin"], 1.0);
}

#[test]
fn malformed_json_exits_1_without_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.json");
    let svg = dir.path().join("out.svg");
    let o = gsbv(
        &[
            "profile",
            "--out",
            out.to_str().unwrap(),
            "--svg",
            svg.to_str().unwrap(),
        ],
        Some(b"{\"version\": 1, \"dim\": "),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stdout.is_empty());
    assert!(!out.exists() && !svg.exists());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn unsupported_version_exits_1() {
    let fixture = gsbv(&["fixture", "runaway", "--n", "1"], None);
    let text = String::from_utf8(fixture.stdout)
        .unwrap()
        .replace("\"version\": 1", "\"version\": 7");
    let o = gsbv(&["energy"], Some(text.as_bytes()));
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("version 7"));
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let m = runaway_manifest(dir.path());
    let a = gsbv(&["verify", &m], None);
    let b = gsbv(&["verify", &m], None);
    assert_eq!(a.stdout, b.stdout);
    let f = gsbv(&["fixture", "staircase", "--n", "8"], None);
    let p1 = gsbv(&["partition"], Some(&f.stdout));
    let p2 = gsbv(&["partition"], Some(&f.stdout));
    assert_eq!(p1.stdout, p2.stdout);
}

#[test]
fn profile_views() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("f.svg");
    let f = gsbv(&["fixture", "staircase", "--n", "4"], None);
    let o = gsbv(
        &["profile", "--format", "csv", "--svg", svg.to_str().unwrap()],
        Some(&f.stdout),
    );
    assert!(o.status.success());
    let csv = String::from_utf8(o.stdout).unwrap();
    assert!(csv.starts_with("t,value\n"));
    assert!(fs::read_to_string(svg).unwrap().starts_with("<svg"));
}

#[test]
fn partition_labels_and_renormalized_function() {
    let f = gsbv(
        &["fixture", "staircase", "--n", "8", "--cells-per-step", "2"],
        None,
    );
    let p = gsbv(&["partition"], Some(&f.stdout));
    assert!(p.status.success());
    let r = json(&p);
    assert_eq!(r["stats"]["v_eps_volume"], 0.125);
    let w = gsbv(&["renormalize"], Some(&f.stdout));
    assert!(w.status.success());
    let values = json(&w)["values"].as_array().unwrap().clone();
    assert!(values.iter().all(|v| v.as_f64() == Some(0.0)));
}

#[test]
fn vanishing_hypothesis_failure_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let f = gsbv(
        &["fixture", "runaway", "--n", "3", "--resolution", "4"],
        None,
    );
    let mask = dir.path().join("all.json");
    fs::write(
        &mask,
        r#"{"version":1,"dim":2,"origin":[-1,0],"spacing":0.5,"shape":[4,2],"mask":[1,1,1,1,1,1,1,1]}"#,
    )
    .unwrap();
    let o = gsbv(
        &[
            "vanishing",
            "--region",
            mask.to_str().unwrap(),
            "--eps",
            "0.01",
        ],
        Some(&f.stdout),
    );
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["violations"].as_array().unwrap().len(), 1);
}

#[test]
fn slice_lsc_on_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let m = runaway_manifest(dir.path());
    let o = gsbv(&["slice-lsc", &m, "--box", "0,0,8,4"], None);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(json(&o)["margin"], 1.0);
}
