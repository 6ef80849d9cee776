use std::process::{Command, Output};

fn ctgen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctgen")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn sample_is_reproducible_and_valid() {
    let args = ["sample", "--rows", "2,2", "--cols", "2,2", "--samples", "3", "--seed", "7"];
    let a = ctgen(&args);
    let b = ctgen(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let blocks: Vec<&str> = text.split("\n\n").collect();
    assert_eq!(blocks.len(), 3);
    for block in blocks {
        let rows: Vec<Vec<u32>> = block
            .lines()
            .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
            .collect();
        assert!(rows.iter().all(|r| r.iter().sum::<u32>() == 2));
        assert!((0..2).all(|j| rows.iter().map(|r| r[j]).sum::<u32>() == 2));
    }
}

#[test]
fn count_prints_a_decimal() {
    let o = ctgen(&["count", "--rows", "2,2", "--cols", "2,2", "--t", "4"]);
    assert_eq!(stdout(&o), "2\n");
    let o = ctgen(&["count", "--rows", "2,2", "--cols", "2,2", "--format", "json", "--memo", "16"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["format"], 1);
    assert_eq!(v["counts"][4]["count"], "2");
    assert_eq!(v["counts"][0]["count"], "1");
}

#[test]
fn errors_have_distinct_codes() {
    let o = ctgen(&["sample", "--rows", "2,1", "--cols", "2"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("UnequalSums"));
    let o = ctgen(&["sample", "--rows", "2,1", "--cols", "3"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("NotBigraphical"));
    let o = ctgen(&["multigraph", "--degrees", "3,1"]);
    assert_eq!(o.status.code(), Some(5));
    let o = ctgen(&["sample", "--rows", "2,2"]);
    assert_eq!(o.status.code(), Some(1));
    let o = ctgen(&["sample", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn input_files() {
    let dir = std::env::temp_dir().join(format!("ctgen-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let json = dir.join("m.json");
    std::fs::write(&json, r#"{"rows": [1, 1], "cols": [1, 1]}"#).unwrap();
    let text = dir.join("m.txt");
    std::fs::write(&text, "1 1\n1 1\n").unwrap();
    let a = ctgen(&["sample", "--input", json.to_str().unwrap(), "--seed", "3", "--samples", "4"]);
    let b = ctgen(&["sample", "--input", text.to_str().unwrap(), "--seed", "3", "--samples", "4"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let out = dir.join("out.json");
    let o = ctgen(&[
        "multigraph", "--degrees", "1,1,1,1", "--samples", "5", "--format", "json", "--output",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["samples"].as_array().unwrap().len(), 5);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn jobs_are_reproducible_and_cells_match_dense() {
    let base = ["sample", "--rows", "2,2,2,1,1", "--cols", "2,2,2,1,1", "--samples", "20", "--seed", "5"];
    let with = |extra: &[&str]| {
        let mut v: Vec<&str> = base.to_vec();
        v.extend_from_slice(extra);
        ctgen(&v)
    };
    let a = with(&["--jobs", "3"]);
    let b = with(&["--jobs", "3"]);
    assert_eq!(a.stdout, b.stdout);
    let dense: serde_json::Value = serde_json::from_slice(&with(&["--format", "json"]).stdout).unwrap();
    let cells: serde_json::Value = serde_json::from_slice(&with(&["--format", "json", "--cells"]).stdout).unwrap();
    for (d, c) in dense["samples"].as_array().unwrap().iter().zip(cells["samples"].as_array().unwrap()) {
        let mut from_dense = Vec::new();
        for (i, row) in d.as_array().unwrap().iter().enumerate() {
            for (j, v) in row.as_array().unwrap().iter().enumerate() {
                let v = v.as_u64().unwrap();
                if v > 0 {
                    from_dense.push(serde_json::json!([i, j, v]));
                }
            }
        }
        assert_eq!(&serde_json::Value::Array(from_dense), c);
    }
}

#[test]
fn stats_go_to_stderr_as_json() {
    let o = ctgen(&["sample", "--rows", "2,2", "--cols", "2,2", "--samples", "4", "--stats"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["outputs"], 4);
    assert_eq!(v["params"]["t0"], 0);
}

#[test]
fn bench_reports_every_size() {
    let o = ctgen(&["bench", "--sizes", "8,16", "--samples", "10"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["sizes"].as_array().unwrap().len(), 2);
    assert_eq!(v["ratios"].as_array().unwrap().len(), 1);
}
