mod common;

use std::sync::atomic::{AtomicU32, Ordering};

use common::rect_instance;
use majutsu_core::geometry::{extrude_footprint, fit_placement, render_iso_silhouette, silhouette_iou, Mesh};
use majutsu_core::math::Aabb;
use majutsu_providers::builtin::tree_mesh;
use majutsu_providers::{
    constrained_refine_loop, request_asset, AssetGenerator, AssetRequest, OfflineAssetGenerator, ProviderConfig,
    ProviderError, ShapeJudge, SilhouetteIouJudge,
};
use proptest::prelude::*;

fn request(cfg: &ProviderConfig) -> AssetRequest {
    let inst = rect_instance("bldg_0003", 120.0, 80.0, 18.0, 42.0, 0.7, 27.0);
    AssetRequest::from_instance(&inst, "modern office", cfg).unwrap()
}

/// Returns a fixed mesh and counts calls.
struct Fixed(Mesh, AtomicU32);

impl AssetGenerator for Fixed {
    fn generate(&self, _req: &AssetRequest, attempt: u32) -> Result<Mesh, ProviderError> {
        assert_eq!(attempt, self.1.fetch_add(1, Ordering::SeqCst) + 1);
        Ok(self.0.clone())
    }
}

/// Scores from a fixed script.
struct Scripted(Vec<f64>);

impl ShapeJudge for Scripted {
    fn score(&self, _req: &AssetRequest, _candidate: &Mesh) -> Result<f64, ProviderError> {
        Ok(self.0[0])
    }
}

struct ByAttempt(Vec<f64>, AtomicU32);

impl ShapeJudge for ByAttempt {
    fn score(&self, _req: &AssetRequest, _candidate: &Mesh) -> Result<f64, ProviderError> {
        let i = self.1.fetch_add(1, Ordering::SeqCst) as usize;
        Ok(self.0[i.min(self.0.len() - 1)])
    }
}

#[test]
fn faithful_candidate_is_accepted_first_time() {
    let cfg = ProviderConfig::offline(5);
    let req = request(&cfg);
    let out = constrained_refine_loop(&req, &OfflineAssetGenerator, &SilhouetteIouJudge, &cfg).unwrap();
    assert_eq!(out.trace.steps.len(), 1);
    assert_eq!(out.trace.steps[0].iteration, 1);
    assert_eq!(out.trace.steps[0].score, 1.0);
    assert!(out.trace.accepted());
}

#[test]
fn zero_scores_exhaust_after_three_iterations() {
    let cfg = ProviderConfig::offline(5);
    let req = request(&cfg);
    let generator = Fixed(req.coarse_mesh.clone(), AtomicU32::new(0));
    let err = constrained_refine_loop(&req, &generator, &Scripted(vec![0.0]), &cfg).unwrap_err();
    let ProviderError::RefineExhausted { best_score, trace } = err else {
        panic!("expected RefineExhausted, got {err:?}")
    };
    assert_eq!(best_score, 0.0);
    assert_eq!(trace.steps.len(), 3);
    assert!(trace.steps.iter().all(|s| !s.accepted));
    assert_eq!(generator.1.load(Ordering::SeqCst), 3);
}

#[test]
fn zero_threshold_accepts_any_candidate() {
    let cfg = ProviderConfig {
        iou_threshold: 0.0,
        ..ProviderConfig::offline(5)
    };
    let req = request(&cfg);
    let generator = Fixed(tree_mesh("conifer"), AtomicU32::new(0));
    let out = constrained_refine_loop(&req, &generator, &SilhouetteIouJudge, &cfg).unwrap();
    assert_eq!(out.trace.steps.len(), 1);
    assert!(out.trace.steps[0].score < 0.85);
    assert_eq!(out.mesh, tree_mesh("conifer"));
}

#[test]
fn late_acceptance_and_threshold_checks() {
    let cfg = ProviderConfig::offline(5);
    let req = request(&cfg);
    let judge = ByAttempt(vec![0.2, 0.6, 0.9], AtomicU32::new(0));
    let out = constrained_refine_loop(&req, &OfflineAssetGenerator, &judge, &cfg).unwrap();
    let scores: Vec<f64> = out.trace.steps.iter().map(|s| s.score).collect();
    assert_eq!(scores, [0.2, 0.6, 0.9]);
    let bad = ProviderConfig {
        iou_threshold: 1.5,
        ..cfg
    };
    assert!(matches!(
        constrained_refine_loop(&req, &OfflineAssetGenerator, &judge, &bad),
        Err(ProviderError::InvalidConfig(_))
    ));
}

#[test]
fn offline_asset_matches_coarse_geometry() {
    let cfg = ProviderConfig::offline(9);
    let req = request(&cfg);
    let mesh = request_asset(&req, &cfg).unwrap();
    assert_eq!(mesh.aabb(), req.coarse_mesh.aabb());
    let sil = render_iso_silhouette(&mesh, cfg.silhouette_resolution).unwrap();
    assert_eq!(silhouette_iou(&sil, &req.iso_silhouette).unwrap(), 1.0);
    assert!(mesh.uvs.is_some());
    assert_eq!(req.point_cloud.len(), cfg.point_cloud_size);
    // Every constraint sample lies on or inside the coarse box.
    let b = req.coarse_mesh.aabb().unwrap();
    for p in &req.point_cloud.points {
        assert!(p.x >= b.min.x - 1e-9 && p.x <= b.max.x + 1e-9 && p.z >= -1e-9 && p.z <= b.max.z + 1e-9);
    }
}

#[test]
fn local_frame_fits_back_with_unit_scale() {
    let cfg = ProviderConfig::offline(9);
    for (i, yaw) in [0.0, 0.4, 1.3, 2.9].into_iter().enumerate() {
        let inst = rect_instance(&format!("bldg_{i:04}"), 300.0, -40.0, 14.0, 33.0, yaw, 45.0);
        let req = AssetRequest::from_instance(&inst, "", &cfg).unwrap();
        let local = req.coarse_mesh.aabb().unwrap();
        assert!((local.center().x).abs() < 1e-9 && (local.center().y).abs() < 1e-9);
        let p = fit_placement(&local, &inst).unwrap();
        assert!((p.xy_scale - 1.0).abs() < 1e-9, "yaw {yaw}: scale {}", p.xy_scale);
        assert!((p.z_scale - 1.0).abs() < 1e-9);
        let world = extrude_footprint(&inst.footprint, inst.target_height).unwrap().aabb().unwrap();
        let placed = Aabb::from_points(req.coarse_mesh.vertices.iter().map(|&v| p.apply(v))).unwrap();
        assert!(placed.approx_eq(&world, 1e-6), "yaw {yaw}: {placed:?} vs {world:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trace_is_bounded_and_acceptance_is_sound(
        scores in proptest::collection::vec(0.0f64..=1.0, 1..6),
        theta in 0.0f64..=1.0,
        iters in 1u32..6,
    ) {
        let cfg = ProviderConfig { iou_threshold: theta, max_refine_iters: iters, ..ProviderConfig::offline(1) };
        let req = request(&cfg);
        let judge = ByAttempt(scores.clone(), AtomicU32::new(0));
        match constrained_refine_loop(&req, &OfflineAssetGenerator, &judge, &cfg) {
            Ok(out) => {
                prop_assert!(out.trace.steps.len() <= iters as usize);
                let last = out.trace.steps.last().unwrap();
                prop_assert!(last.accepted && last.score >= theta);
                prop_assert!(out.trace.steps[..out.trace.steps.len() - 1].iter().all(|s| s.score < theta));
            }
            Err(ProviderError::RefineExhausted { best_score, trace }) => {
                prop_assert_eq!(trace.steps.len(), iters as usize);
                prop_assert!(trace.steps.iter().all(|s| s.score < theta && !s.accepted));
                prop_assert_eq!(Some(best_score), trace.best_score());
            }
            Err(e) => prop_assert!(false, "unexpected {e:?}"),
        }
    }
}
