//! End-to-end checks of the rastervec binary: exit codes, stream
//! discipline, output formats, and agreement with library behavior.

use rastervec_core::raster::{encode_png_rgb, RgbImage};
use rastervec_core::synth::synthetic_islands;
use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

fn rastervec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rastervec"))
        .args(args)
        .output()
        .expect("binary spawns")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr_str(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is UTF-8")
}

fn write_islands_png(path: &Path, size: u32, seed: u64) {
    let img = synthetic_islands(size, size, seed);
    std::fs::write(path, encode_png_rgb(&img)).unwrap();
}

fn dir_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        out.insert(
            entry.file_name().into_string().unwrap(),
            std::fs::read(entry.path()).unwrap(),
        );
    }
    out
}

#[test]
fn help_exits_zero_on_stdout() {
    let out = rastervec(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_str(&out);
    for sub in ["bundle-create", "bundle-list", "cull", "vectorize", "run", "worker", "bench"] {
        assert!(text.contains(sub), "help must list {sub}");
    }
    assert!(out.stderr.is_empty());
}

#[test]
fn usage_errors_exit_one_on_stderr() {
    let cases: &[&[&str]] = &[
        &[],
        &["no-such-subcommand"],
        &["bundle-list"],
        &["vectorize", "-i", "x.png", "-o", "y.json", "--no-such-flag"],
        &["run", "--bundle", "b.svb", "--out", "d"],
        &["run", "--bundle", "b.svb", "--out", "d", "--workers", "1", "--endpoints", "h:1"],
        &["vectorize", "-i", "x.png", "-o", "y.json", "--connectivity", "6"],
        &["vectorize", "-i", "x.png", "-o", "y.json", "--se-size", "4"],
    ];
    for args in cases {
        let out = rastervec(args);
        assert_eq!(out.status.code(), Some(1), "args {args:?}");
        assert!(!out.stderr.is_empty(), "diagnostic expected for {args:?}");
        assert!(out.stdout.is_empty(), "stdout must stay clean for {args:?}");
    }
}

#[test]
fn runtime_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("missing.svb").display().to_string();
    let out = rastervec(&["bundle-list", &missing]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_str(&out).contains("error:"));

    // A readable file that is not a bundle is also a runtime failure.
    let junk = tmp.path().join("junk.svb");
    std::fs::write(&junk, b"not a bundle at all").unwrap();
    let out = rastervec(&["bundle-list", &junk.display().to_string()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bundle_list_prints_the_pinned_line_format() {
    let tmp = tempfile::tempdir().unwrap();
    let mut inputs = Vec::new();
    for (i, size) in [12u32, 20, 16].iter().enumerate() {
        let path = tmp.path().join(format!("img_{i}.png"));
        write_islands_png(&path, *size, 100 + i as u64);
        inputs.push(path.display().to_string());
    }
    let bundle = tmp.path().join("set.svb").display().to_string();
    let out = rastervec(&["bundle-create", "-o", &bundle, &inputs[0], &inputs[1], &inputs[2]]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_str(&out));

    let out = rastervec(&["bundle-list", &bundle]);
    assert_eq!(out.status.code(), Some(0));
    let lines: Vec<String> = stdout_str(&out).lines().map(str::to_owned).collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], format!("0\t{}\t12x12\tpng", inputs[0]));
    assert_eq!(lines[1], format!("1\t{}\t20x20\tpng", inputs[1]));
    assert_eq!(lines[2], format!("2\t{}\t16x16\tpng", inputs[2]));
}

#[test]
fn cull_prints_matching_indices() {
    let tmp = tempfile::tempdir().unwrap();
    let mut inputs = Vec::new();
    for (i, size) in [8u32, 24, 16].iter().enumerate() {
        let path = tmp.path().join(format!("img_{i}.png"));
        write_islands_png(&path, *size, 200 + i as u64);
        inputs.push(path.display().to_string());
    }
    let bundle = tmp.path().join("set.svb").display().to_string();
    rastervec(&["bundle-create", "-o", &bundle, &inputs[0], &inputs[1], &inputs[2]]);

    let out = rastervec(&["cull", &bundle, "--min-width", "16"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_str(&out), "1\n2\n");

    let out = rastervec(&["cull", &bundle, "--formats", "jpeg"]);
    assert_eq!(stdout_str(&out), "");
}

#[test]
fn vectorize_all_black_emits_empty_collection_on_stdout() {
    let tmp = tempfile::tempdir().unwrap();
    let img_path = tmp.path().join("black.png");
    let black = RgbImage::new(8, 8, vec![0; 8 * 8 * 3]).unwrap();
    std::fs::write(&img_path, encode_png_rgb(&black)).unwrap();

    let out = rastervec(&["vectorize", "-i", &img_path.display().to_string(), "-o", "-"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_str(&out));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["type"], "FeatureCollection");
    assert_eq!(doc["features"].as_array().unwrap().len(), 0);
    assert_eq!(doc["properties"]["width"], 8);
}

#[test]
fn vectorize_equals_single_entry_run() {
    let tmp = tempfile::tempdir().unwrap();
    let img_path = tmp.path().join("scene.png");
    write_islands_png(&img_path, 64, 4242);

    let geojson_path = tmp.path().join("direct.geojson");
    let out = rastervec(&[
        "vectorize",
        "-i",
        &img_path.display().to_string(),
        "-o",
        &geojson_path.display().to_string(),
        "--auto-scale-areas",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_str(&out));

    let bundle = tmp.path().join("one.svb").display().to_string();
    rastervec(&["bundle-create", "-o", &bundle, &img_path.display().to_string()]);
    let run_dir = tmp.path().join("run_out");
    let out = rastervec(&[
        "run",
        "--bundle",
        &bundle,
        "--out",
        &run_dir.display().to_string(),
        "--workers",
        "1",
        "--auto-scale-areas",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_str(&out));

    let direct = std::fs::read(&geojson_path).unwrap();
    let via_run = std::fs::read(run_dir.join("entry_0.geojson")).unwrap();
    assert_eq!(direct, via_run, "vectorize and run agree byte for byte");
    assert!(!direct.is_empty());
}

#[test]
fn run_twice_produces_identical_trees() {
    let tmp = tempfile::tempdir().unwrap();
    let mut inputs = Vec::new();
    for i in 0..5u64 {
        let path = tmp.path().join(format!("img_{i}.png"));
        write_islands_png(&path, 48, 7000 + i);
        inputs.push(path.display().to_string());
    }
    let bundle = tmp.path().join("five.svb").display().to_string();
    let mut args = vec!["bundle-create", "-o", &bundle];
    args.extend(inputs.iter().map(String::as_str));
    rastervec(&args);

    let dir_a = tmp.path().join("a");
    let dir_b = tmp.path().join("b");
    for dir in [&dir_a, &dir_b] {
        let out = rastervec(&[
            "run",
            "--bundle",
            &bundle,
            "--out",
            &dir.display().to_string(),
            "--workers",
            "3",
            "--emit-render",
            "--auto-scale-areas",
        ]);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_str(&out));
        assert!(out.stdout.is_empty(), "run keeps stdout clean");
    }
    let tree_a = dir_tree(&dir_a);
    assert_eq!(tree_a, dir_tree(&dir_b));
    assert_eq!(tree_a.len(), 10, "geojson plus render per entry");
}

#[test]
fn bench_csv_to_stdout_has_header_and_rows() {
    let out = rastervec(&[
        "bench", "--counts", "1,2", "--size", "24", "--workers", "1", "--reps", "2", "--csv", "-",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_str(&out));
    let text = stdout_str(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n_images,image_size,workers,repetition,wall_seconds");
    assert_eq!(lines.len(), 1 + 2 * 2, "two counts, one worker count, two reps");
}
