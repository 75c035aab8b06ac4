//! Acceptance suite: runs `verify --seed 42` twice through the binary and
//! prints one PASS/FAIL line per criterion.

use std::path::Path;
use std::process::Command;

const CRITERION_1_LIMIT_MS: u128 = 30_000;
const CRITERION_2_LIMIT_MS: u128 = 600_000;

struct Line {
    id: u32,
    passed: bool,
    ms: u128,
    text: String,
}

fn verify(out: &Path) -> (Option<i32>, Vec<Line>) {
    let o = Command::new(env!("CARGO_BIN_EXE_nearherm"))
        .args(["verify", "--seed", "42", "--out", out.to_str().unwrap()])
        .output()
        .expect("binary runs");
    assert!(o.status.code() != Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    let lines = stdout
        .lines()
        .filter_map(|l| {
            let rest = l.strip_prefix("criterion ")?;
            let mut it = rest.split_whitespace();
            let id = it.next()?.parse().ok()?;
            let passed = it.next()? == "PASS";
            let ms = it.next()?.parse().ok()?;
            let text = rest.split_once(" ms  ")?.1.to_string();
            Some(Line { id, passed, ms, text })
        })
        .collect();
    (o.status.code(), lines)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

#[test]
fn acceptance() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (code, first) = verify(a.path());
    let (_, second) = verify(b.path());
    assert_eq!(first.len(), 10, "expected ten criterion lines");

    let mut results = Vec::new();
    for l in &first {
        let mut ok = l.passed;
        let mut note = String::new();
        let limit = match l.id {
            1 => Some(CRITERION_1_LIMIT_MS),
            2 => Some(CRITERION_2_LIMIT_MS),
            _ => None,
        };
        if let Some(limit) = limit {
            ok &= l.ms < limit;
            note = format!(" [runtime {} ms, limit {} ms]", l.ms, limit);
        }
        println!("[{}] criterion {:>2}: {}{}", verdict(ok), l.id, l.text, note);
        results.push(ok);
    }

    let ra = std::fs::read(a.path().join("verify_report.json")).unwrap();
    let rb = std::fs::read(b.path().join("verify_report.json")).unwrap();
    let identical = ra == rb && first.iter().zip(&second).all(|(x, y)| x.text == y.text);
    println!("[{}] criterion 11: two verify runs at seed 42 give byte-identical reports ({} bytes)", verdict(identical), ra.len());
    results.push(identical);

    let passed = results.iter().filter(|&&r| r).count();
    println!("{passed}/{} acceptance criteria passed", results.len());
    assert_eq!(code == Some(0), first.iter().all(|l| l.passed));
    assert!(results.iter().all(|&r| r), "{} acceptance criteria failed", results.len() - passed);
}
