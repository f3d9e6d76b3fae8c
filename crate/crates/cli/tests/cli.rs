use std::path::{Path, PathBuf};
use std::process::Command as Proc;

use aggrahull::report::{Command, Mode, Report, RunOptions};
use aggrahull::{execute_text, parse, replay, SystemFile};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture(name: &str) -> (String, String) {
    let p = root().join("fixtures").join(format!("{name}.json"));
    (std::fs::read_to_string(&p).unwrap(), p.display().to_string())
}

fn fixtures() -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(root().join("fixtures"))
        .unwrap()
        .map(|e| e.unwrap().path().file_stem().unwrap().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

fn quick() -> RunOptions {
    RunOptions { samples: 2_000, trials: 20, ..RunOptions::default() }
}

fn run(cmd: Command, name: &str, opts: RunOptions) -> Report {
    let (text, path) = fixture(name);
    execute_text(cmd, &text, Some(path), opts).unwrap()
}

#[test]
fn round_trip_is_identity_on_numbers() {
    for name in fixtures() {
        let file = parse(&fixture(&name).0).unwrap();
        let sys = file.to_system().unwrap();
        let again = parse(&serde_json::to_string(&SystemFile::from_system(&sys)).unwrap()).unwrap();
        let sys2 = again.to_system().unwrap();
        assert_eq!(sys.labels(), sys2.labels(), "{name}");
        for (f, g) in sys.constraints().iter().zip(sys2.constraints()) {
            assert_eq!(f.a(), g.a(), "{name}");
            assert_eq!(f.b(), g.b(), "{name}");
            assert_eq!(f.c(), g.c(), "{name}");
            assert_eq!(f.is_strict(), g.is_strict(), "{name}");
        }
        // Serializing the parsed form is a fixed point.
        assert_eq!(SystemFile::from_system(&sys2), SystemFile::from_system(&sys));
    }
}

#[test]
fn reports_match_the_schema() {
    let schema: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(root().join("reports/schema.json")).unwrap()).unwrap();
    let compiled = jsonschema::JSONSchema::compile(&schema).unwrap();
    let reports = [
        run(Command::Check, "three_spheres", quick()),
        run(Command::Check, "empty_ball", quick()),
        run(Command::Hull, "four_aggregations_2d", RunOptions { verify: true, ..quick() }),
        run(Command::Hull, "tangent_closed", RunOptions { verify: true, ..quick() }),
        run(Command::Hull, "unit_disk_diagonal", quick()),
        run(Command::FalsifyHhc, "separable_triple", RunOptions { hyperplanes: vec![vec![1.0, 1.0, -1.0]], ..quick() }),
    ];
    for r in &reports {
        let v = serde_json::to_value(r).unwrap();
        let msgs: Vec<String> = match compiled.validate(&v) {
            Ok(()) => vec![],
            Err(errors) => errors.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
        };
        assert!(msgs.is_empty(), "{:?}: {msgs:?}", r.command);
    }
}

#[test]
fn replay_reproduces_reports() {
    let cases = [
        run(Command::Hull, "four_aggregations_2d", RunOptions { verify: true, seed: 9, ..quick() }),
        run(Command::Hull, "three_spheres", RunOptions { verify: true, ..quick() }),
        run(Command::FalsifyHhc, "separable_triple", RunOptions { seed: 4, ..quick() }),
        run(Command::Check, "parallelogram", RunOptions { falsify: true, ..quick() }),
    ];
    for original in cases {
        // Through text, as the replay command sees it.
        let text = serde_json::to_string_pretty(&original).unwrap();
        let loaded: Report = serde_json::from_str(&text).unwrap();
        let (_, diffs) = replay(&loaded).unwrap();
        assert!(diffs.is_empty(), "{:?}: {diffs:?}", original.command);
    }
}

#[test]
fn modes_route_as_documented() {
    let mode = |name: &str| run(Command::Hull, name, quick()).verdicts["mode"].clone();
    assert_eq!(mode("tangent_closed"), "closed");
    assert_eq!(mode("unit_disk_diagonal"), "diagonal");
    assert_eq!(mode("three_spheres"), "sphere");
    assert_eq!(mode("four_aggregations_3d"), "pairwise");
    let r = run(Command::Hull, "parallelogram", quick());
    assert!(r.warnings.iter().any(|w| w.starts_with("PDLC absent")));
    let r = run(Command::Hull, "unit_disk_diagonal", RunOptions { mode: Mode::Diagonal, ..quick() });
    assert_eq!(r.verdicts["aggregations"], 1);
}

#[test]
fn check_reports_certificates() {
    let r = run(Command::Check, "three_spheres", quick());
    assert_eq!(r.verdicts["pdlc"], true);
    assert_eq!(r.verdicts["s"], "nonempty");
    assert_eq!(r.verdicts["hull_is_rn"], "not-rn");
    let r = run(Command::Check, "empty_ball", quick());
    assert_eq!(r.verdicts["s"], "empty");
    assert!(r.certificates["emptiness"]["margin"].as_f64().unwrap() > 0.0);
    let r = run(Command::Check, "parallelogram", quick());
    assert_eq!(r.verdicts["pdlc"], false);
    assert_eq!(r.verdicts["hhc"], "unknown");
}

#[test]
fn falsifier_outcomes() {
    let none = |name: &str| run(Command::FalsifyHhc, name, quick());
    assert_eq!(none("two_balls").verdicts["hhc"], "holds");
    assert_eq!(none("two_balls").exit_code, 0);
    let r = none("common_factor_family");
    assert_eq!(r.verdicts["structural"], "holds-structural");
    assert!(r.witnesses.is_empty());
    let r = run(Command::FalsifyHhc, "separable_triple", RunOptions { hyperplanes: vec![vec![1.0, 1.0, -1.0]], ..quick() });
    assert_eq!(r.verdicts["hhc"], "falsified");
    assert_eq!(r.witnesses[0]["normal"], serde_json::json!([1.0, 1.0, -1.0, 0.0]));
    assert_eq!(r.exit_code, 1);
}

fn bin(args: &[&str]) -> (i32, String) {
    let out = Proc::new(env!("CARGO_BIN_EXE_aggrahull"))
        .args(args)
        .env("AGGRAHULL_THREADS", "2")
        .current_dir(root())
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn exit_codes() {
    let dir = std::env::temp_dir().join(format!("aggrahull-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, "{\"n\": 2,\n \"constraints\": [{\"A\": [[1, 0], [0, 1]], \"linear\": [1]}]}").unwrap();
    let (code, err) = bin(&["check", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("constraints[0].linear"), "{err}");
    let garbled = dir.join("garbled.json");
    std::fs::write(&garbled, "{\"n\": 2,\n \"constraints\": [\n  {\"A\": [[1, 0], [0, 1]], \"c\": \"one\"}]}").unwrap();
    let (code, err) = bin(&["check", garbled.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("line 3") && err.contains("constraints[0].c"), "{err}");

    let (code, err) = bin(&["hull", "fixtures/parallelogram.json", "--mode", "sphere"]);
    assert_eq!(code, 3, "{err}");
    assert!(err.contains("sphere type"), "{err}");
    let (code, _) = bin(&["hull", "fixtures/three_spheres.json", "--mode", "closed", "--samples", "500"]);
    assert_eq!(code, 3);

    let report = dir.join("hull.json");
    let (code, _) =
        bin(&["hull", "fixtures/parallelogram.json", "--verify", "--samples", "2000", "--out", report.to_str().unwrap()]);
    assert_eq!(code, 1);
    let (code, _) = bin(&["hull", "fixtures/two_balls.json", "--verify", "--samples", "2000", "--seed", "5", "--out", report.to_str().unwrap()]);
    assert_eq!(code, 0);
    let saved: Report = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(saved.options.seed, 5);
    assert_eq!(saved.input.sha256.len(), 64);
    let (code, err) = bin(&["replay", report.to_str().unwrap(), "--out", dir.join("again.json").to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let (code, _) = bin(&["hull", "--mode", "nonsense", "fixtures/two_balls.json"]);
    assert_eq!(code, 2);
}
