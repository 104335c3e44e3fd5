//! Exit-code and output contract of the command-line binary.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_portpress"))
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .display()
        .to_string()
}

#[test]
fn analyze_matched_kernel_exits_zero() {
    let out = bin()
        .args(["analyze", "--arch", "skl", &fixture("triad_skl_o3.s")])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("Total throughput: 2.00 cy per assembly iteration"));
    assert!(stdout.contains("bottleneck: P2, P3"));
}

#[test]
fn analyze_is_deterministic() {
    let run = || {
        bin()
            .args(["analyze", "--arch", "zen", &fixture("triad_zen_o3.s")])
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run(), run());
}

#[test]
fn analyze_unmatched_form_exits_two_and_writes_kernels() {
    let dir = tempfile::tempdir().unwrap();
    let asm = dir.path().join("unknown.s");
    std::fs::write(
        &asm,
        "\tmovl\t$111, %ebx\n\t.byte\t100,103,144\n\tfrobnicate\t%xmm1, %xmm2\n\tmovl\t$222, %ebx\n\t.byte\t100,103,144\n",
    )
    .unwrap();
    let out = bin()
        .args([
            "analyze",
            "--arch",
            "skl",
            "--out-dir",
            dir.path().to_str().unwrap(),
            asm.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("frobnicate-xmm_xmm"));
    assert!(stdout.contains("no entry"));
    assert!(dir.path().join("frobnicate-xmm_xmm-lat-1.s").exists());
    assert!(dir.path().join("frobnicate-xmm_xmm-tp-10.s").exists());

    // suppressed generation still exits 2
    let dir2 = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "analyze",
            "--arch",
            "skl",
            "--no-benchgen",
            "--out-dir",
            dir2.path().to_str().unwrap(),
            asm.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir2.path().join("frobnicate-xmm_xmm-lat-1.s").exists());
}

#[test]
fn unknown_arch_exits_one() {
    let out = bin()
        .args(["analyze", "--arch", "p6", &fixture("triad_skl_o3.s")])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8(out.stderr).unwrap().contains("unknown arch"));
}

#[test]
fn simulate_prints_value_only() {
    let out = bin()
        .args(["simulate", "--arch", "skl", &fixture("pi_skl_o2.s")])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "4.25\n");
}

#[test]
fn machine_readable_uses_exact_values() {
    let out = bin()
        .args([
            "analyze",
            "--arch",
            "skl",
            "--machine-readable",
            &fixture("pi_skl_o3.s"),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("bottleneck_cycles 16"));
    assert!(stdout.contains("53/6"), "P0 total kept as an exact rational");
}

#[test]
fn ingest_reports_inferred_parameters() {
    let out = bin()
        .args(["ingest", &fixture("logs/zen_fmadd.log")])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("form vfmadd132pd-xmm_xmm_mem"));
    assert!(stdout.contains("latency 5"));
    assert!(stdout.contains("reciprocal_throughput 0.5"));
    assert!(stdout.contains("conflicts vmulpd"));
    assert!(stdout.contains("non_conflicts vaddpd"));
}

#[test]
fn benchgen_writes_named_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "benchgen",
            "vfmadd132pd-xmm_xmm_mem",
            "--mode",
            "lat",
            "--out-dir",
            dir.path().to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let path = dir.path().join("vfmadd132pd-xmm_xmm_mem-lat-1.s");
    assert!(path.exists());
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.contains("\tvfmadd132pd\t(%rax), %xmm0, %xmm0"));
    assert!(text.contains("$TRIP_COUNT"));
}
