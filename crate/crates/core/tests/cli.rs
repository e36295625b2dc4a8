//! End-to-end runs of the `depth-rescale` binary on generated datasets.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin(args: &[&str], paths: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_depth-rescale"));
    cmd.args(args);
    for (flag, p) in paths {
        cmd.arg(flag).arg(p);
    }
    cmd.output().unwrap()
}

fn synth(dir: &Path, images: usize) -> PathBuf {
    let out = dir.join("data");
    let o = bin(
        &["synth", "--images", &images.to_string(), "--seed", "4"],
        &[("--out", &out)],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out.join("manifest.toml")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn rescale_recovers_generated_scales() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = synth(tmp.path(), 2);
    let out = tmp.path().join("out");
    let o = bin(
        &["rescale", "--png"],
        &[("--manifest", &manifest), ("--out", &out)],
    );
    assert_eq!(o.status.code(), Some(0));

    let truth = json(&tmp.path().join("data/truth.json"));
    for t in truth.as_array().unwrap() {
        let name = t["name"].as_str().unwrap();
        let fit = json(&out.join(format!("{name}_scale.json")));
        let (a, a0) = (
            fit["alpha"].as_f64().unwrap(),
            t["alpha0"].as_f64().unwrap(),
        );
        // ground truth is stored as 16-bit PNG, so the fit sees quantised depth
        assert!((a - a0).abs() / a0 < 1e-3, "{name}: {a} vs {a0}");
        assert!(out.join(format!("{name}_depth.pfm")).exists());
        assert!(out.join(format!("{name}_depth.png")).exists());
    }
    let summary = json(&out.join("rescale_summary.json"));
    assert_eq!(summary["succeeded"], 2);
    assert_eq!(summary["failed"], 0);
}

#[test]
fn eval_and_ablate_write_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = synth(tmp.path(), 2);
    let out = tmp.path().join("out");
    assert_eq!(
        bin(&["eval"], &[("--manifest", &manifest), ("--out", &out)])
            .status
            .code(),
        Some(0)
    );
    let report = json(&out.join("eval_report.json"));
    assert!(report["delta1"].as_f64().unwrap() > 0.99);
    assert_eq!(report["per_image"].as_array().unwrap().len(), 2);
    assert!(std::fs::read_to_string(out.join("eval_table.txt"))
        .unwrap()
        .contains("AbsRel"));

    let o = bin(
        &["ablate", "--provider", "external"],
        &[("--manifest", &manifest), ("--out", &out)],
    );
    assert_eq!(o.status.code(), Some(0));
    let ablation = json(&out.join("ablation.json"));
    let d1 = |v: &str| {
        let row = ablation
            .as_array()
            .unwrap()
            .iter()
            .find(|r| r["variant"] == v)
            .unwrap();
        row["report"]["delta1"].as_f64().unwrap()
    };
    assert!(d1("ransac") > d1("least_squares"), "{ablation}");
}

#[test]
fn reference_point_commands_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = synth(tmp.path(), 1);
    for (cmd, provider) in [
        ("simulate", "lidar:4"),
        ("sgm", "stereo"),
        ("triangulate", "sfm"),
    ] {
        let out = tmp.path().join(cmd);
        let o = bin(
            &[cmd, "--provider", provider, "--max-disparity", "48"],
            &[("--manifest", &manifest), ("--out", &out)],
        );
        assert_eq!(
            o.status.code(),
            Some(0),
            "{cmd}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        let refs = depth_rescale::io::load_refpoints(&out.join("scene_000_refpoints.txt")).unwrap();
        assert!(!refs.is_empty(), "{cmd}");
    }
    let rows: Vec<f64> =
        depth_rescale::io::load_refpoints(&tmp.path().join("simulate/scene_000_refpoints.txt"))
            .unwrap()
            .iter()
            .map(|r| r.v)
            .collect();
    // 4 beams over 64 rows
    assert!(rows.iter().all(|v| [8.0, 24.0, 40.0, 56.0].contains(v)));
}

#[test]
fn bad_configuration_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = synth(tmp.path(), 1);
    let out = tmp.path().join("out");
    assert_eq!(
        bin(
            &["rescale", "--provider", "radar"],
            &[("--manifest", &manifest), ("--out", &out)]
        )
        .status
        .code(),
        Some(1)
    );
    assert_eq!(
        bin(
            &["rescale", "--inlier-frac=-1"],
            &[("--manifest", &manifest), ("--out", &out)]
        )
        .status
        .code(),
        Some(1)
    );
    assert_eq!(
        bin(&["rescale", "--no-such-flag"], &[("--manifest", &manifest)])
            .status
            .code(),
        Some(1)
    );

    let missing = tmp.path().join("missing.toml");
    std::fs::write(
        &missing,
        "profile = \"outdoor\"\n[[record]]\nname = \"a\"\ndisparity = \"nope.pfm\"\n",
    )
    .unwrap();
    assert_eq!(
        bin(&["rescale"], &[("--manifest", &missing), ("--out", &out)])
            .status
            .code(),
        Some(1)
    );

    // sfm needs poses and matches on every record; checked before anything runs
    let text = std::fs::read_to_string(&manifest).unwrap();
    let no_pose = tmp.path().join("data/no_pose.toml");
    std::fs::write(
        &no_pose,
        text.lines()
            .filter(|l| !l.starts_with("pose_"))
            .collect::<Vec<_>>()
            .join("\n"),
    )
    .unwrap();
    let out2 = tmp.path().join("out2");
    assert_eq!(
        bin(
            &["rescale", "--provider", "sfm"],
            &[("--manifest", &no_pose), ("--out", &out2)]
        )
        .status
        .code(),
        Some(1)
    );
    assert!(!out2.join("scene_000_depth.pfm").exists());
}

#[test]
fn one_broken_record_is_a_partial_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = synth(tmp.path(), 3);
    std::fs::write(tmp.path().join("data/scene_001_disp.pfm"), b"Pf\n4 4\n-1\n").unwrap();
    let out = tmp.path().join("out");
    let o = bin(&["rescale"], &[("--manifest", &manifest), ("--out", &out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(out.join("scene_000_depth.pfm").exists());
    assert!(!out.join("scene_001_depth.pfm").exists());
    assert!(out.join("scene_002_depth.pfm").exists());
    let summary = json(&out.join("rescale_summary.json"));
    assert_eq!(summary["failed"], 1);
}

#[test]
fn every_record_broken_is_a_total_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = synth(tmp.path(), 2);
    for i in 0..2 {
        std::fs::write(
            tmp.path().join(format!("data/scene_00{i}_refs.txt")),
            "# empty\n",
        )
        .unwrap();
    }
    let out = tmp.path().join("out");
    let o = bin(
        &["rescale", "--provider", "external"],
        &[("--manifest", &manifest), ("--out", &out)],
    );
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn shipped_templates_load() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../templates");
    for name in ["kitti_eigen.toml", "nyu_v2.toml"] {
        let text = std::fs::read_to_string(root.join(name)).unwrap();
        let tmp = tempfile::tempdir().unwrap();
        // placeholder files for every referenced path
        let v: toml::Value = toml::from_str(&text).unwrap();
        for rec in v["record"].as_array().unwrap() {
            for (key, val) in rec.as_table().unwrap() {
                if let (false, Some(rel)) = (key == "name", val.as_str()) {
                    let p = tmp.path().join(rel);
                    std::fs::create_dir_all(p.parent().unwrap()).unwrap();
                    std::fs::write(p, b"").unwrap();
                }
            }
        }
        let path = tmp.path().join(name);
        std::fs::write(&path, &text).unwrap();
        let m = depth_rescale::io::load_manifest(&path).unwrap();
        assert_eq!(m.records.len(), 1);
        assert!(m.records[0].intrinsics.is_some());

        // the commented-out custom profile is valid too
        let block: Vec<&str> = text
            .lines()
            .skip_while(|l| *l != "# [custom]")
            .skip(1)
            .map(|l| l.trim_start_matches("# "))
            .collect();
        if !block.is_empty() {
            let (head, rest) = text.split_once("[[record]]").unwrap();
            let head = head.replace("profile = \"indoor\"", "profile = \"custom\"");
            std::fs::write(
                &path,
                format!("{head}[custom]\n{}\n\n[[record]]{rest}", block.join("\n")),
            )
            .unwrap();
            let m = depth_rescale::io::load_manifest(&path).unwrap();
            assert_eq!(m.eval_config(None).unwrap().depth_range.max_m, 10.0);
        }
    }
}
