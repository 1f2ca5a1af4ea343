//! Pose-threshold selection: a record is routed to frontalization when
//! any |Euler angle| strictly exceeds its threshold. Shows a fixed
//! 30-degree rule and one derived from the high-quality set.

use faceq::geometry::{pose_exceeds, select_for_frontalization, PoseAngles, PoseThresholds};
use faceq::manifest::ManifestRecord;

fn main() {
    let poses = [
        ("frontal", PoseAngles { roll: 0.02, pitch: -0.05, yaw: 0.01 }),
        ("slight-turn", PoseAngles { roll: 0.10, pitch: 0.12, yaw: 0.40 }),
        ("profile", PoseAngles { roll: 0.05, pitch: 0.20, yaw: 1.30 }),
        ("tilted", PoseAngles { roll: 0.90, pitch: 0.00, yaw: 0.10 }),
    ];

    let uniform = PoseThresholds::uniform_degrees(30.0).unwrap();
    println!("uniform 30-degree rule:");
    for (name, p) in &poses {
        println!("  {name:<12} roll {:+.2} pitch {:+.2} yaw {:+.2} -> {}", p.roll, p.pitch, p.yaw,
            if pose_exceeds(p, &uniform) { "frontalize" } else { "keep" });
    }

    // per-angle thresholds derived as mean absolute pose of a "high" set
    let high_poses =
        [(0.08, 0.10, 0.12), (0.12, 0.16, 0.18), (0.09, 0.12, 0.13)].map(|(r, p, y)| PoseAngles {
            roll: r,
            pitch: p,
            yaw: y,
        });
    let n = high_poses.len() as f64;
    let derived = PoseThresholds::new(
        high_poses.iter().map(|p| p.roll.abs()).sum::<f64>() / n,
        high_poses.iter().map(|p| p.pitch.abs()).sum::<f64>() / n,
        high_poses.iter().map(|p| p.yaw.abs()).sum::<f64>() / n,
    )
    .unwrap();
    println!(
        "\nderived thresholds: roll {:.4} pitch {:.4} yaw {:.4}",
        derived.roll_max, derived.pitch_max, derived.yaw_max
    );

    let records: Vec<ManifestRecord> = poses
        .iter()
        .map(|(name, p)| {
            let mut r = ManifestRecord::new(*name, format!("/tmp/{name}.pgm"), "s0");
            r.pose = Some(*p);
            r
        })
        .collect();
    let (selected, remaining) = select_for_frontalization(&records, &derived).unwrap();
    println!(
        "derived rule selects {:?}, keeps {:?}",
        selected.iter().map(|r| r.record_id.as_str()).collect::<Vec<_>>(),
        remaining.iter().map(|r| r.record_id.as_str()).collect::<Vec<_>>()
    );
}
