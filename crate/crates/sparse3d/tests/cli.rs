//! CLI surface contract: exit codes, required flags, and byte-identical
//! outputs for identical invocations.

use std::path::PathBuf;

fn run(args: &[&str]) -> i32 {
    sparse3d::cli::run(args.iter().map(|s| s.to_string()))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sparse3d-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_cube_off(path: &PathBuf) {
    std::fs::write(
        path,
        "OFF\n8 12 0\n\
         -0.5 -0.5 -0.5\n0.5 -0.5 -0.5\n0.5 0.5 -0.5\n-0.5 0.5 -0.5\n\
         -0.5 -0.5 0.5\n0.5 -0.5 0.5\n0.5 0.5 0.5\n-0.5 0.5 0.5\n\
         3 0 2 1\n3 0 3 2\n3 4 5 6\n3 4 6 7\n3 0 1 5\n3 0 5 4\n\
         3 2 3 7\n3 2 7 6\n3 0 4 7\n3 0 7 3\n3 1 2 6\n3 1 6 5\n",
    )
    .unwrap();
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["sparse3d"]), 1);
    assert_eq!(run(&["sparse3d", "no-such-command"]), 1);
    assert_eq!(run(&["sparse3d", "extract", "--unknown-flag", "3"]), 1);
}

#[test]
fn help_is_available_everywhere() {
    assert_eq!(run(&["sparse3d", "--help"]), 0);
    for sub in [
        "extract",
        "train",
        "eval",
        "retrieve",
        "reconstruct",
        "ablation",
        "sweep",
        "gradcheck",
        "selftest",
    ] {
        assert_eq!(run(&["sparse3d", sub, "--help"]), 0, "{sub}");
    }
}

#[test]
fn extract_two_point_cloud_with_triplet_kind_exits_two() {
    let dir = temp_dir("extract2pt");
    let input = dir.join("cube.off");
    write_cube_off(&input);
    let out = dir.join("out.spd");
    let code = run(&[
        "sparse3d",
        "extract",
        "--input",
        input.to_str().unwrap(),
        "--kind",
        "b",
        "--k",
        "2",
        "--nd",
        "8",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
    assert!(!out.exists());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn extract_is_byte_deterministic_and_loadable() {
    let dir = temp_dir("extractdet");
    let input = dir.join("cube.off");
    write_cube_off(&input);
    let run_extract = |name: &str| -> Vec<u8> {
        let out = dir.join(name);
        let code = run(&[
            "sparse3d",
            "extract",
            "--input",
            input.to_str().unwrap(),
            "--kind",
            "c",
            "--k",
            "16",
            "--nd",
            "64",
            "--scale-norm",
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        std::fs::read(&out).unwrap()
    };
    let a = run_extract("a.spd");
    let b = run_extract("b.spd");
    assert_eq!(a, b, "identical argv+seed must give identical bytes");
    let set = sparse3d::descriptor::cache::read_spd1(&mut a.as_slice()).unwrap();
    assert_eq!(set.n_rows, 64);
    assert_eq!(set.width, 18);
    assert!(set.scale_normalized);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn extract_directory_mode_writes_per_file_caches() {
    let dir = temp_dir("extractdir");
    let input_dir = dir.join("meshes");
    std::fs::create_dir_all(&input_dir).unwrap();
    write_cube_off(&input_dir.join("one.off"));
    write_cube_off(&input_dir.join("two.off"));
    let out_dir = dir.join("caches");
    let code = run(&[
        "sparse3d",
        "extract",
        "--input",
        input_dir.to_str().unwrap(),
        "--kind",
        "a",
        "--k",
        "8",
        "--nd",
        "16",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(out_dir.join("one.spd").exists());
    assert!(out_dir.join("two.spd").exists());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn train_eval_retrieve_reconstruct_cycle() {
    let dir = temp_dir("cycle");
    let config = dir.join("run.cfg");
    std::fs::write(
        &config,
        "dataset = synth4\nk = 12\nkind = c\nn_d = 48\nepochs = 2\n\
         train_per_class = 4\ntest_per_class = 6\nshared_widths = 12,16\n\
         classifier_widths = 12\ndecoder_widths = 16\nvoxel_resolution = 4\n\
         lambda_rec = 1.0\nseed = 5\n",
    )
    .unwrap();
    let ckpt = dir.join("model.spn");
    assert_eq!(
        run(&[
            "sparse3d",
            "train",
            "--config",
            config.to_str().unwrap(),
            "--out",
            ckpt.to_str().unwrap(),
        ]),
        0
    );
    assert!(ckpt.exists());
    let metrics: PathBuf = {
        let mut p = ckpt.as_os_str().to_owned();
        p.push(".metrics.csv");
        p.into()
    };
    let metrics_text = std::fs::read_to_string(&metrics).unwrap();
    assert!(metrics_text.starts_with("epoch,train_loss,class_loss,recon_loss,train_accuracy"));
    assert_eq!(metrics_text.lines().count(), 3);

    let per_class = dir.join("per_class.csv");
    assert_eq!(
        run(&[
            "sparse3d",
            "eval",
            "--ckpt",
            ckpt.to_str().unwrap(),
            "--config",
            config.to_str().unwrap(),
            "--per-class",
            per_class.to_str().unwrap(),
        ]),
        0
    );
    let per_class_text = std::fs::read_to_string(&per_class).unwrap();
    assert!(per_class_text.contains("sphere"));
    assert!(per_class_text.contains("overall"));

    assert_eq!(
        run(&[
            "sparse3d",
            "retrieve",
            "--ckpt",
            ckpt.to_str().unwrap(),
            "--config",
            config.to_str().unwrap(),
            "--topk",
            "5,10",
        ]),
        0
    );

    let recon_dir = dir.join("recon");
    assert_eq!(
        run(&[
            "sparse3d",
            "reconstruct",
            "--ckpt",
            ckpt.to_str().unwrap(),
            "--config",
            config.to_str().unwrap(),
            "--ids",
            "0,5",
            "--out-dir",
            recon_dir.to_str().unwrap(),
        ]),
        0
    );
    for name in [
        "pred_0000.spv",
        "target_0000.spv",
        "pred_0005.spv",
        "target_0005.spv",
    ] {
        let grid = sparse3d::geom::voxel::VoxelGrid::load(&recon_dir.join(name)).unwrap();
        assert_eq!(grid.resolution(), 4);
    }

    // A checkpoint trained on a different architecture must be rejected.
    assert_eq!(
        run(&[
            "sparse3d",
            "eval",
            "--ckpt",
            ckpt.to_str().unwrap(),
            "--config",
            config.to_str().unwrap(),
            "--set",
            "shared_widths=8,8",
        ]),
        2
    );
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn sweep_and_config_overrides() {
    let dir = temp_dir("sweep");
    let config = dir.join("run.cfg");
    std::fs::write(
        &config,
        "dataset = synth4\nk = 8\nkind = a\nn_d = 24\nepochs = 1\n\
         train_per_class = 3\ntest_per_class = 2\nshared_widths = 8\n\
         classifier_widths = 8\ndecoder_widths = 8\nseed = 11\n",
    )
    .unwrap();
    let out = dir.join("sweep.csv");
    assert_eq!(
        run(&[
            "sparse3d",
            "sweep",
            "--config",
            config.to_str().unwrap(),
            "--ks",
            "8,12",
            "--out",
            out.to_str().unwrap(),
        ]),
        0
    );
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 3, "{text}");
    assert!(text.starts_with("k,accuracy"));

    // Bad override key is a runtime error (exit 2), not a crash.
    assert_eq!(
        run(&[
            "sparse3d",
            "sweep",
            "--config",
            config.to_str().unwrap(),
            "--ks",
            "8",
            "--set",
            "bogus=1",
        ]),
        2
    );
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn gradcheck_and_selftest_exit_zero() {
    assert_eq!(run(&["sparse3d", "gradcheck"]), 0);
    assert_eq!(run(&["sparse3d", "selftest"]), 0);
}
