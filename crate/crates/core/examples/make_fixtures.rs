//! Regenerates the bundled prediction-log fixtures.
//!
//! ```text
//! cargo run -p synthforge --example make_fixtures -- crates/core/fixtures
//! ```

use std::path::PathBuf;

use synthforge::evalkit::{construct_log, write_prediction_log, LogShape};

/// (file stem, confident, confident correct, correct overall) on 150 records.
pub const TESTSET2_LOGS: [(&str, usize, usize, usize); 3] = [
    ("realmodel_testset2", 89, 87, 131),
    ("synthmodel_testset2", 88, 84, 127),
    ("synthtuned_testset2", 107, 103, 131),
];

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "crates/core/fixtures".into()));
    std::fs::create_dir_all(&dir).expect("create fixture dir");
    for (k, (stem, confident, confident_correct, correct)) in TESTSET2_LOGS.into_iter().enumerate() {
        let shape = LogShape { n: 150, num_classes: 5, threshold: 0.70, confident, confident_correct, correct };
        let log = construct_log(&shape, 2021 + k as u64).expect("valid shape");
        write_prediction_log(dir.join(format!("{stem}.jsonl")), &log).expect("write fixture");
    }
    // 125 of 150 correct, no gate target.
    let shape = LogShape { n: 150, num_classes: 5, threshold: 0.70, confident: 75, confident_correct: 70, correct: 125 };
    let mut log = construct_log(&shape, 7).expect("valid shape");
    for r in &mut log {
        r.path = r.path.replacen("testset2", "testset", 1);
    }
    write_prediction_log(dir.join("realmodel_testset.jsonl"), &log).expect("write fixture");

    // Zoom probe: one record per (object, zoom) with accuracy falling off at small scale.
    let mut probe = Vec::new();
    for (z, correct) in [(0.5, 14), (1.0, 28), (1.5, 29)] {
        let shape = LogShape { n: 30, num_classes: 5, threshold: 0.70, confident: correct / 2, confident_correct: correct / 2, correct };
        for mut r in construct_log(&shape, (z * 10.0) as u64).expect("valid shape") {
            r.zoom = Some(z);
            r.path = r.path.replace("testset2", &format!("zoom{z}"));
            probe.push(r);
        }
    }
    write_prediction_log(dir.join("zoom_probe.jsonl"), &probe).expect("write fixture");
    println!("fixtures written to {}", dir.display());
}
