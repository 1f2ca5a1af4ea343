//! Landmarks, similarity alignment/cropping, and Euler-angle pose
//! selection rules.
//!
//! Faces are aligned by a least-squares similarity transform from six
//! eye/mouth landmarks onto a fixed canonical template, then cropped to
//! 128x128 by bilinear warping. Pose records are roll/pitch/yaw in
//! radians on \[-pi, pi\]; threshold selection is strict (`>`) per angle.

use crate::error::{Error, Result};
use crate::manifest::ManifestRecord;
use crate::raster::GrayImage;

/// Side length of the canonical aligned crop.
pub const CROP_SIZE: usize = 128;

/// Indices of the six alignment landmarks within the 68-point layout:
/// eye corners (outer/inner, left then right) and mouth corners.
pub const SIX_POINT_INDICES: [usize; 6] = [36, 39, 42, 45, 48, 54];

/// Ordered landmark list; either the full 68-point layout or the 6-point
/// alignment subset (left-eye outer/inner, right-eye inner/outer, mouth
/// left/right).
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet {
    points: Vec<(f64, f64)>,
}

impl LandmarkSet {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() != 68 && points.len() != 6 {
            return Err(Error::validation(format!(
                "landmark set must have 68 or 6 points, got {}",
                points.len()
            )));
        }
        Ok(LandmarkSet { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// True when every point lies inside a width x height raster.
    pub fn within_bounds(&self, width: usize, height: usize) -> bool {
        self.points
            .iter()
            .all(|&(x, y)| x >= 0.0 && y >= 0.0 && x <= (width - 1) as f64 && y <= (height - 1) as f64)
    }
}

/// The 6-point alignment subset of a 68-point landmark set.
pub fn six_from_68(lm: &LandmarkSet) -> Result<LandmarkSet> {
    if lm.len() != 68 {
        return Err(Error::validation(format!(
            "six_from_68 needs a 68-point set, got {}",
            lm.len()
        )));
    }
    let points = SIX_POINT_INDICES.iter().map(|&i| lm.points[i]).collect();
    Ok(LandmarkSet { points })
}

/// Canonical 6-point target layout for the 128x128 crop: eyes on the
/// line y=48, mouth corners at y=89.6. Fixed constants so crops are
/// reproducible bit for bit.
pub fn canonical_template() -> LandmarkSet {
    LandmarkSet {
        points: vec![
            (40.96, 48.0),
            (54.4, 48.0),
            (73.6, 48.0),
            (87.04, 48.0),
            (46.08, 89.6),
            (81.92, 89.6),
        ],
    }
}

/// Head orientation in radians; each angle lies in \[-pi, pi\].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseAngles {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl PoseAngles {
    pub fn new(roll: f64, pitch: f64, yaw: f64) -> Result<Self> {
        let pi = std::f64::consts::PI;
        for (name, v) in [("roll", roll), ("pitch", pitch), ("yaw", yaw)] {
            if !v.is_finite() || v < -pi || v > pi {
                return Err(Error::validation(format!(
                    "{name} angle {v} outside [-pi, pi]"
                )));
            }
        }
        Ok(PoseAngles { roll, pitch, yaw })
    }
}

/// Per-angle absolute-value thresholds, all positive, in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseThresholds {
    pub roll_max: f64,
    pub pitch_max: f64,
    pub yaw_max: f64,
}

impl PoseThresholds {
    pub fn new(roll_max: f64, pitch_max: f64, yaw_max: f64) -> Result<Self> {
        if !(roll_max > 0.0 && pitch_max > 0.0 && yaw_max > 0.0) {
            return Err(Error::validation("pose thresholds must be positive"));
        }
        Ok(PoseThresholds { roll_max, pitch_max, yaw_max })
    }

    pub fn uniform_degrees(deg: f64) -> Result<Self> {
        let r = deg.to_radians();
        PoseThresholds::new(r, r, r)
    }
}

/// True iff any |angle| strictly exceeds its threshold.
pub fn pose_exceeds(p: &PoseAngles, t: &PoseThresholds) -> bool {
    p.roll.abs() > t.roll_max || p.pitch.abs() > t.pitch_max || p.yaw.abs() > t.yaw_max
}

/// Stable partition of records by `pose_exceeds`: (selected, remaining).
/// Every record must carry pose angles.
pub fn select_for_frontalization(
    records: &[ManifestRecord],
    t: &PoseThresholds,
) -> Result<(Vec<ManifestRecord>, Vec<ManifestRecord>)> {
    let mut selected = Vec::new();
    let mut remaining = Vec::new();
    for r in records {
        let pose = r.pose.ok_or_else(|| {
            Error::validation(format!("record {} has no pose angles", r.record_id))
        })?;
        if pose_exceeds(&pose, t) {
            selected.push(r.clone());
        } else {
            remaining.push(r.clone());
        }
    }
    Ok((selected, remaining))
}

/// Similarity transform p -> scale * R(rotation) * p + translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityTransform {
    pub scale: f64,
    pub rotation: f64,
    pub translation: (f64, f64),
}

impl SimilarityTransform {
    pub fn identity() -> Self {
        SimilarityTransform { scale: 1.0, rotation: 0.0, translation: (0.0, 0.0) }
    }

    pub fn apply(&self, p: (f64, f64)) -> (f64, f64) {
        let (c, s) = (self.rotation.cos(), self.rotation.sin());
        (
            self.scale * (c * p.0 - s * p.1) + self.translation.0,
            self.scale * (s * p.0 + c * p.1) + self.translation.1,
        )
    }

    pub fn inverse(&self) -> SimilarityTransform {
        let inv_scale = 1.0 / self.scale;
        let (c, s) = ((-self.rotation).cos(), (-self.rotation).sin());
        let (tx, ty) = self.translation;
        SimilarityTransform {
            scale: inv_scale,
            rotation: -self.rotation,
            translation: (
                -inv_scale * (c * tx - s * ty),
                -inv_scale * (s * tx + c * ty),
            ),
        }
    }
}

/// Least-squares similarity (rotation + uniform scale + translation, no
/// reflection) mapping `src` onto `template`.
///
/// Points are treated as complex numbers z; the closed-form solution of
/// min sum |a*z_i + t - w_i|^2 over (a, t) gives scale = |a| and
/// rotation = arg(a).
pub fn estimate_similarity(
    src: &LandmarkSet,
    template: &LandmarkSet,
) -> Result<SimilarityTransform> {
    if src.len() != template.len() {
        return Err(Error::validation(format!(
            "point count mismatch: {} vs {}",
            src.len(),
            template.len()
        )));
    }
    let n = src.len() as f64;
    let mean = |pts: &[(f64, f64)]| {
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
        (sx / n, sy / n)
    };
    let (zc_x, zc_y) = mean(src.points());
    let (wc_x, wc_y) = mean(template.points());

    // a = sum(w' * conj(z')) / sum(|z'|^2) on centered points
    let mut num_re = 0.0;
    let mut num_im = 0.0;
    let mut den = 0.0;
    for (z, w) in src.points().iter().zip(template.points()) {
        let (zx, zy) = (z.0 - zc_x, z.1 - zc_y);
        let (wx, wy) = (w.0 - wc_x, w.1 - wc_y);
        num_re += wx * zx + wy * zy;
        num_im += wy * zx - wx * zy;
        den += zx * zx + zy * zy;
    }
    if den < 1e-12 {
        return Err(Error::numeric("degenerate source landmarks (zero variance)"));
    }
    let a_re = num_re / den;
    let a_im = num_im / den;
    let scale = (a_re * a_re + a_im * a_im).sqrt();
    if scale < 1e-12 {
        return Err(Error::numeric("degenerate correspondence (zero similarity scale)"));
    }
    let rotation = a_im.atan2(a_re);
    // t = mean_w - a * mean_z
    let translation = (wc_x - (a_re * zc_x - a_im * zc_y), wc_y - (a_im * zc_x + a_re * zc_y));
    Ok(SimilarityTransform { scale, rotation, translation })
}

/// Resample `img` through the inverse of `t` onto an out_size x out_size
/// grid, bilinear, edge-replicated.
pub fn warp_crop(img: &GrayImage, t: &SimilarityTransform, out_size: usize) -> Result<GrayImage> {
    if out_size < 16 {
        return Err(Error::validation(format!("crop size {out_size} below minimum 16")));
    }
    let inv = t.inverse();
    let mut data = Vec::with_capacity(out_size * out_size);
    for y in 0..out_size {
        for x in 0..out_size {
            let (sx, sy) = inv.apply((x as f64, y as f64));
            data.push(img.sample_bilinear(sx, sy));
        }
    }
    GrayImage::from_vec(out_size, out_size, data)
}

/// Align a face to the canonical template and crop to CROP_SIZE.
/// Accepts a 68- or 6-point landmark set.
pub fn align_crop(img: &GrayImage, landmarks: &LandmarkSet) -> Result<GrayImage> {
    let six = if landmarks.len() == 68 { six_from_68(landmarks)? } else { landmarks.clone() };
    let t = estimate_similarity(&six, &canonical_template())?;
    warp_crop(img, &t, CROP_SIZE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use proptest::prelude::*;

    fn grid68() -> LandmarkSet {
        LandmarkSet::new((0..68).map(|i| (i as f64, i as f64)).collect()).unwrap()
    }

    #[test]
    fn six_from_68_selects_expected_indices() {
        let mut pts: Vec<(f64, f64)> = (0..68).map(|i| (i as f64 * 2.0, 100.0)).collect();
        pts[36] = (10.0, 20.0);
        let lm = LandmarkSet::new(pts).unwrap();
        let six = six_from_68(&lm).unwrap();
        assert_eq!(six.points()[0], (10.0, 20.0));
    }

    #[test]
    fn six_from_68_identity_layout() {
        let six = six_from_68(&grid68()).unwrap();
        let expected: Vec<(f64, f64)> =
            SIX_POINT_INDICES.iter().map(|&i| (i as f64, i as f64)).collect();
        assert_eq!(six.points(), expected.as_slice());
    }

    #[test]
    fn six_from_68_rejects_wrong_count() {
        let lm = LandmarkSet::new(canonical_template().points().to_vec()).unwrap();
        assert!(six_from_68(&lm).is_err());
    }

    #[test]
    fn landmark_count_validated() {
        assert!(LandmarkSet::new(vec![(0.0, 0.0); 7]).is_err());
        assert!(LandmarkSet::new(vec![(0.0, 0.0); 6]).is_ok());
        assert!(LandmarkSet::new(vec![(0.0, 0.0); 68]).is_ok());
    }

    #[test]
    fn similarity_fixed_point_is_identity() {
        let t = canonical_template();
        let est = estimate_similarity(&t, &t).unwrap();
        assert!((est.scale - 1.0).abs() < 1e-9);
        assert!(est.rotation.abs() < 1e-9);
        assert!(est.translation.0.abs() < 1e-9);
        assert!(est.translation.1.abs() < 1e-9);
    }

    #[test]
    fn similarity_recovers_pure_translation() {
        let template = canonical_template();
        let src = LandmarkSet::new(
            template.points().iter().map(|&(x, y)| (x + 5.0, y)).collect(),
        )
        .unwrap();
        let est = estimate_similarity(&src, &template).unwrap();
        assert!((est.scale - 1.0).abs() < 1e-9);
        assert!(est.rotation.abs() < 1e-9);
        assert!((est.translation.0 + 5.0).abs() < 1e-9);
        assert!(est.translation.1.abs() < 1e-9);
    }

    #[test]
    fn similarity_inverts_rotation_and_scale() {
        let template = canonical_template();
        let ang = 30f64.to_radians();
        let (c, s) = (ang.cos(), ang.sin());
        let src = LandmarkSet::new(
            template
                .points()
                .iter()
                .map(|&(x, y)| (2.0 * (c * x - s * y), 2.0 * (s * x + c * y)))
                .collect(),
        )
        .unwrap();
        let est = estimate_similarity(&src, &template).unwrap();
        assert!((est.scale - 0.5).abs() < 1e-6);
        assert!((est.rotation + ang).abs() < 1e-6);
    }

    #[test]
    fn similarity_rejects_degenerate_source() {
        let src = LandmarkSet::new(vec![(3.0, 4.0); 6]).unwrap();
        assert!(estimate_similarity(&src, &canonical_template()).is_err());
    }

    #[test]
    fn similarity_beats_random_transforms() {
        // least-squares optimality spot check
        let mut rng = SplitMix64::new(17);
        let template = canonical_template();
        let src = LandmarkSet::new(
            template
                .points()
                .iter()
                .map(|&(x, y)| (1.3 * x + rng.next_range(-1.0, 1.0), 1.3 * y + 4.0 + rng.next_range(-1.0, 1.0)))
                .collect(),
        )
        .unwrap();
        let est = estimate_similarity(&src, &template).unwrap();
        let residual = |t: &SimilarityTransform| {
            src.points()
                .iter()
                .zip(template.points())
                .map(|(&p, &q)| {
                    let m = t.apply(p);
                    (m.0 - q.0).powi(2) + (m.1 - q.1).powi(2)
                })
                .sum::<f64>()
        };
        let best = residual(&est);
        for _ in 0..1000 {
            let cand = SimilarityTransform {
                scale: est.scale * rng.next_range(0.8, 1.2),
                rotation: est.rotation + rng.next_range(-0.3, 0.3),
                translation: (
                    est.translation.0 + rng.next_range(-3.0, 3.0),
                    est.translation.1 + rng.next_range(-3.0, 3.0),
                ),
            };
            assert!(residual(&cand) >= best - 1e-9);
        }
    }

    #[test]
    fn transform_inverse_round_trip() {
        let t = SimilarityTransform { scale: 1.7, rotation: 0.4, translation: (3.0, -2.0) };
        let inv = t.inverse();
        for p in [(0.0, 0.0), (10.0, 5.0), (-4.0, 8.0)] {
            let back = inv.apply(t.apply(p));
            assert!((back.0 - p.0).abs() < 1e-9);
            assert!((back.1 - p.1).abs() < 1e-9);
        }
    }

    #[test]
    fn warp_identity_is_identity() {
        let mut rng = SplitMix64::new(8);
        let img =
            GrayImage::from_vec(20, 20, (0..400).map(|_| rng.next_f64()).collect()).unwrap();
        let out = warp_crop(&img, &SimilarityTransform::identity(), 20).unwrap();
        for (a, b) in img.data().iter().zip(out.data()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn warp_integer_translation_is_pixel_exact() {
        let mut rng = SplitMix64::new(4);
        let img =
            GrayImage::from_vec(24, 24, (0..576).map(|_| rng.next_f64()).collect()).unwrap();
        // T maps source -> output: shift right/down by (3, 2)
        let t = SimilarityTransform { scale: 1.0, rotation: 0.0, translation: (3.0, 2.0) };
        let out = warp_crop(&img, &t, 16).unwrap();
        for y in 2..16 {
            for x in 3..16 {
                assert!((out.get(x, y) - img.get(x - 3, y - 2)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn warp_90_degree_rotation_hand_enumerated() {
        // asymmetric pattern rotated 90 degrees about the grid center
        // (7.5, 7.5): output(x, y) = input(y, 15 - x)
        let data: Vec<f64> = (0..256).map(|i| i as f64 / 255.0).collect();
        let img = GrayImage::from_vec(16, 16, data).unwrap();
        let ang = std::f64::consts::FRAC_PI_2;
        let c = 7.5;
        // t(p) = R90*(p - c) + c  ->  translation = c - R90*c = (2c, 0)
        let t = SimilarityTransform { scale: 1.0, rotation: ang, translation: (2.0 * c, 0.0) };
        let out = warp_crop(&img, &t, 16).unwrap();
        for y in 0..16usize {
            for x in 0..16usize {
                let expected = img.get(y, 15 - x);
                assert!(
                    (out.get(x, y) - expected).abs() < 1e-9,
                    "({x},{y}): {} vs {expected}",
                    out.get(x, y)
                );
            }
        }
    }

    #[test]
    fn warp_rejects_tiny_output() {
        let img = GrayImage::constant(8, 8, 0.5).unwrap();
        assert!(warp_crop(&img, &SimilarityTransform::identity(), 4).is_err());
    }

    #[test]
    fn pose_exceeds_frontal_false() {
        let p = PoseAngles::new(0.0, 0.0, 0.0).unwrap();
        let t = PoseThresholds::uniform_degrees(30.0).unwrap();
        assert!(!pose_exceeds(&p, &t));
    }

    #[test]
    #[allow(clippy::approx_constant)] // 0.5236 is the enumerated expected value
    fn pose_exceeds_thirty_degree_threshold() {
        let t = PoseThresholds::uniform_degrees(30.0).unwrap();
        assert!((t.yaw_max - 0.5236).abs() < 1e-4);
        let p = PoseAngles::new(0.0, 0.0, 0.6).unwrap();
        assert!(pose_exceeds(&p, &t));
    }

    #[test]
    fn pose_exceeds_all_below_is_false() {
        let t = PoseThresholds::new(0.0947, 0.1263, 0.1432).unwrap();
        let p = PoseAngles::new(0.09, 0.12, 0.14).unwrap();
        assert!(!pose_exceeds(&p, &t));
    }

    #[test]
    fn pose_angles_validated() {
        assert!(PoseAngles::new(4.0, 0.0, 0.0).is_err());
        assert!(PoseAngles::new(0.0, f64::NAN, 0.0).is_err());
    }

    fn pose_record(id: &str, roll: f64, pitch: f64, yaw: f64) -> crate::manifest::ManifestRecord {
        let mut r = crate::manifest::ManifestRecord::new(id, format!("/tmp/{id}.pgm"), "s0");
        r.pose = Some(PoseAngles::new(roll, pitch, yaw).unwrap());
        r
    }

    #[test]
    fn select_all_frontal_keeps_everything() {
        let records: Vec<_> = (0..5).map(|i| pose_record(&format!("r{i}"), 0.01, 0.0, 0.02)).collect();
        let t = PoseThresholds::uniform_degrees(30.0).unwrap();
        let (selected, remaining) = select_for_frontalization(&records, &t).unwrap();
        assert!(selected.is_empty());
        assert_eq!(remaining.len(), 5);
    }

    #[test]
    fn select_splits_one_each_way() {
        let records = vec![pose_record("keep", 0.0, 0.0, 0.1), pose_record("front", 0.0, 0.0, 1.0)];
        let t = PoseThresholds::uniform_degrees(30.0).unwrap();
        let (selected, remaining) = select_for_frontalization(&records, &t).unwrap();
        assert_eq!(selected.len(), 1);
        assert_eq!(selected[0].record_id, "front");
        assert_eq!(remaining.len(), 1);
    }

    #[test]
    fn select_matches_brute_force_and_partitions_losslessly() {
        let mut rng = SplitMix64::new(55);
        let records: Vec<_> = (0..100)
            .map(|i| {
                pose_record(
                    &format!("r{i:03}"),
                    rng.next_range(-1.0, 1.0),
                    rng.next_range(-1.0, 1.0),
                    rng.next_range(-1.0, 1.0),
                )
            })
            .collect();
        let t = PoseThresholds::new(0.4, 0.5, 0.6).unwrap();
        let (selected, remaining) = select_for_frontalization(&records, &t).unwrap();
        let expected = records
            .iter()
            .filter(|r| {
                let p = r.pose.unwrap();
                p.roll.abs() > 0.4 || p.pitch.abs() > 0.5 || p.yaw.abs() > 0.6
            })
            .count();
        assert_eq!(selected.len(), expected);
        assert_eq!(selected.len() + remaining.len(), 100);
        // disjoint and order-preserving
        let mut seen = std::collections::BTreeSet::new();
        for r in selected.iter().chain(&remaining) {
            assert!(seen.insert(r.record_id.clone()));
        }
        let sel_ids: Vec<&str> = selected.iter().map(|r| r.record_id.as_str()).collect();
        let mut sorted = sel_ids.clone();
        sorted.sort();
        assert_eq!(sel_ids, sorted, "stable order preserved on sorted input");
    }

    #[test]
    fn select_requires_pose() {
        let mut r = crate::manifest::ManifestRecord::new("x", "/tmp/x.pgm", "s0");
        r.pose = None;
        let t = PoseThresholds::uniform_degrees(30.0).unwrap();
        assert!(select_for_frontalization(&[r], &t).is_err());
    }

    proptest! {
        // enlarging any threshold never flips false -> true
        #[test]
        fn pose_exceeds_monotone(
            roll in -3.0f64..3.0, pitch in -3.0f64..3.0, yaw in -3.0f64..3.0,
            tr in 0.01f64..2.0, tp in 0.01f64..2.0, ty in 0.01f64..2.0,
            grow in 0.0f64..1.0,
        ) {
            let p = PoseAngles::new(roll, pitch, yaw).unwrap();
            let t1 = PoseThresholds::new(tr, tp, ty).unwrap();
            let t2 = PoseThresholds::new(tr + grow, tp + grow, ty + grow).unwrap();
            prop_assert!(!(!pose_exceeds(&p, &t1) && pose_exceeds(&p, &t2)));
        }
    }
}
