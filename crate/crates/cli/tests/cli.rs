use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Output};
use std::thread;
use std::time::Duration;

use rand::{RngCore, SeedableRng};

const KEY: &str = "00:A0:C9:14:C8:29";
// Same key with bit 47 flipped.
const KEY_ONE_BIT_OFF: &str = "00:A0:C9:14:C8:28";

fn maccrypt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maccrypt"))
        .args(args)
        .output()
        .expect("spawn maccrypt")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn random_file(path: &Path, len: usize, seed: u64) -> Vec<u8> {
    let mut data = vec![0u8; len];
    rand::rngs::StdRng::seed_from_u64(seed).fill_bytes(&mut data);
    std::fs::write(path, &data).unwrap();
    data
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn report_field(report: &str, field: &str) -> f64 {
    let prefix = format!("\"{field}\": ");
    report
        .lines()
        .find_map(|l| l.trim().strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("field {field} missing from {report}"))
        .trim_end_matches(',')
        .parse()
        .unwrap()
}

#[test]
fn keyinfo_prints_canonical_form() {
    let out = maccrypt(&["keyinfo", "--key", "00-a0-c9-14-c8-29"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "00:A0:C9:14:C8:29\nkeyspace: 48 bits\n");
}

#[test]
fn encrypt_decrypt_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let plain = dir.path().join("plain.bin");
    let data = random_file(&plain, 12_345, 1);
    for raw in [false, true] {
        let sealed = dir.path().join(format!("sealed-{raw}"));
        let opened = dir.path().join(format!("opened-{raw}"));
        let mut enc = vec!["encrypt", "--key", KEY, s(&plain), s(&sealed)];
        let mut dec = vec!["decrypt", "--key", KEY, s(&sealed), s(&opened)];
        if raw {
            enc.insert(1, "--raw");
            dec.insert(1, "--raw");
        }
        assert_eq!(maccrypt(&enc).status.code(), Some(0));
        assert_eq!(maccrypt(&dec).status.code(), Some(0));
        let sealed_len = std::fs::metadata(&sealed).unwrap().len() as usize;
        let expected_len = if raw { data.len() } else { 16 + 12_348 };
        assert_eq!(sealed_len, expected_len);
        assert_eq!(std::fs::read(&opened).unwrap(), data);
    }
}

#[test]
fn one_bit_wrong_key_gives_unrelated_output() {
    let dir = tempfile::tempdir().unwrap();
    let plain = dir.path().join("plain.bin");
    let sealed = dir.path().join("sealed.bin");
    let wrong = dir.path().join("wrong.bin");
    random_file(&plain, 10 * 1024, 2);

    assert_eq!(
        maccrypt(&["encrypt", "--key", KEY, s(&plain), s(&sealed)])
            .status
            .code(),
        Some(0)
    );
    let dec = maccrypt(&["decrypt", "--key", KEY_ONE_BIT_OFF, s(&sealed), s(&wrong)]);
    assert_eq!(dec.status.code(), Some(0));

    let out = maccrypt(&["analyze", "--source", s(&plain), "--encrypted", s(&wrong)]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout(&out);
    assert!(report_field(&report, "diff_ratio") >= 0.95, "{report}");
    assert!(report.contains("\"corr_horizontal\": null"));
}

#[test]
fn bmp_commands_and_image_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("src.bmp");
    let enc = dir.path().join("enc.bmp");
    let dec = dir.path().join("dec.bmp");
    let img = maccrypt::BmpImage::from_fn(40, 30, |x, y| [(x * 6) as u8, (y * 8) as u8, 100]);
    std::fs::write(&src, maccrypt::write_bmp(&img)).unwrap();

    assert_eq!(
        maccrypt(&["encrypt-bmp", "--key", KEY, s(&src), s(&enc)])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        maccrypt(&["decrypt-bmp", "--key", KEY, s(&enc), s(&dec)])
            .status
            .code(),
        Some(0)
    );
    let original = std::fs::read(&src).unwrap();
    let encrypted = std::fs::read(&enc).unwrap();
    assert_eq!(encrypted.len(), original.len());
    assert_eq!(&encrypted[..54], &original[..54]);
    assert_eq!(std::fs::read(&dec).unwrap(), original);

    let args = [
        "analyze",
        "--bmp",
        "--source",
        s(&src),
        "--encrypted",
        s(&enc),
    ];
    let first = maccrypt(&args);
    assert_eq!(first.status.code(), Some(0));
    let report = stdout(&first);
    assert!(
        report_field(&report, "source_corr_horizontal") > 0.9,
        "{report}"
    );
    assert!(report_field(&report, "snr") > 0.0);
    for field in ["corr_horizontal", "corr_vertical", "corr_diagonal"] {
        assert!(report_field(&report, field).abs() <= 1.0);
    }
    assert_eq!(
        stdout(&maccrypt(&args)),
        report,
        "analyze must be deterministic"
    );
}

#[test]
fn histogram_csv() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("f");
    std::fs::write(&file, [0u8, 0, 255]).unwrap();
    let out = maccrypt(&["histogram", s(&file)]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 256);
    assert_eq!(lines[0], "0,2");
    assert_eq!(lines[128], "128,0");
    assert_eq!(lines[255], "255,1");
}

#[test]
fn exit_codes_and_no_output_on_error() {
    let dir = tempfile::tempdir().unwrap();
    let plain = dir.path().join("plain.bin");
    let out = dir.path().join("out.bin");
    random_file(&plain, 100, 3);

    let usage = maccrypt(&["encrypt", s(&plain), s(&out)]);
    assert_eq!(usage.status.code(), Some(2));
    let usage = maccrypt(&[
        "encrypt",
        "--key",
        KEY,
        "--iface",
        "eth0",
        s(&plain),
        s(&out),
    ]);
    assert_eq!(usage.status.code(), Some(2));

    let missing = maccrypt(&[
        "encrypt",
        "--key",
        KEY,
        s(&dir.path().join("nope")),
        s(&out),
    ]);
    assert_eq!(missing.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));

    let bad_env = maccrypt(&["decrypt", "--key", KEY, s(&plain), s(&out)]);
    assert_eq!(bad_env.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&bad_env.stderr).starts_with("error:"));

    let bad_bmp = maccrypt(&["encrypt-bmp", "--key", KEY, s(&plain), s(&out)]);
    assert_eq!(bad_bmp.status.code(), Some(4));

    let bad_key = maccrypt(&["encrypt", "--key", "00:A0:C9", s(&plain), s(&out)]);
    assert_eq!(bad_key.status.code(), Some(5));
    let bad_iface = maccrypt(&["encrypt", "--iface", "no-such-iface0", s(&plain), s(&out)]);
    assert_eq!(bad_iface.status.code(), Some(5));

    let mismatch = maccrypt(&[
        "analyze",
        "--source",
        s(&plain),
        "--encrypted",
        s(&dir.path().join("nope")),
    ]);
    assert_eq!(mismatch.status.code(), Some(3));

    assert!(!out.exists());
}

#[test]
fn send_and_recv_over_loopback() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("payload.bin");
    let output = dir.path().join("received.bin");
    let data = random_file(&input, 4096 + 7, 4);

    let port = TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let port_s = port.to_string();
    let out_s = s(&output).to_string();
    let receiver = thread::spawn(move || {
        maccrypt(&["recv", "--port", &port_s, "--key", KEY, "--out", &out_s])
    });

    // Retry until the receiver is listening; a refused connect is exit 3.
    let mut sent = None;
    for _ in 0..100 {
        let out = maccrypt(&[
            "send",
            "--host",
            "127.0.0.1",
            "--port",
            &port.to_string(),
            s(&input),
        ]);
        if out.status.code() == Some(0) {
            sent = Some(out);
            break;
        }
        assert_eq!(
            out.status.code(),
            Some(3),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        thread::sleep(Duration::from_millis(50));
    }
    assert!(sent.is_some(), "receiver never came up");
    let recv = receiver.join().unwrap();
    assert_eq!(
        recv.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&recv.stderr)
    );
    assert_eq!(std::fs::read(&output).unwrap(), data);
}
