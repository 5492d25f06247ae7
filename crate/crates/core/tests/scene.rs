mod common;

use common::{asset, box_mesh, fixture};
use majutsu_core::scene::{
    export_gltf, inspect_glb, load_document, load_document_from_path, save_document, save_document_to_dir,
    validate_glb, AssetCategory, SceneError, EXTERNAL_MESH_BYTES,
};
use serde_json::Value;

#[test]
fn assembled_document_shape() {
    let f = fixture();
    let doc = &f.doc;
    assert_eq!(doc.layers.len(), 4);
    assert_eq!(doc.revision, 1);
    let buildings = doc.instances.iter().filter(|i| i.category == AssetCategory::Building).count();
    assert_eq!(buildings, 4);
    assert!(doc.instances.iter().any(|i| i.category == AssetCategory::Tree));
    assert!(doc.instances.iter().any(|i| i.category == AssetCategory::Streetlight));
    let mut ids: Vec<&str> = doc.instances.iter().map(|i| i.id.as_str()).collect();
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), doc.instances.len());
    for inst in &doc.instances {
        assert!(inst.placement.is_valid());
        assert!(doc.metadata.contains(inst.placement.translation.xy()));
    }
}

#[test]
fn save_load_round_trip_is_byte_stable() {
    let doc = fixture().doc;
    let a = save_document(&doc).unwrap();
    let loaded = load_document(&a).unwrap();
    assert_eq!(loaded, doc);
    assert_eq!(save_document(&loaded).unwrap(), a);
}

#[test]
fn unknown_version_is_rejected() {
    let bytes = save_document(&fixture().doc).unwrap();
    let mut v: Value = serde_json::from_slice(&bytes).unwrap();
    v["version"] = Value::String("2".into());
    let err = load_document(&serde_json::to_vec(&v).unwrap()).unwrap_err();
    assert_eq!(err, SceneError::UnknownVersion("2".into()));
}

#[test]
fn schema_violation_reports_path() {
    let bytes = save_document(&fixture().doc).unwrap();
    let mut v: Value = serde_json::from_slice(&bytes).unwrap();
    v["instances"][3].as_object_mut().unwrap().remove("placement");
    match load_document(&serde_json::to_vec(&v).unwrap()) {
        Err(SceneError::SchemaViolation { path, .. }) => assert_eq!(path, "instances[3].placement"),
        other => panic!("unexpected {other:?}"),
    }
    let mut v: Value = serde_json::from_slice(&bytes).unwrap();
    v["instances"][1]["placement"]["yaw"] = Value::String("north".into());
    match load_document(&serde_json::to_vec(&v).unwrap()) {
        Err(SceneError::SchemaViolation { path, .. }) => assert_eq!(path, "instances[1].placement.yaw"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn large_meshes_are_stored_beside_the_document() {
    let mut doc = fixture().doc;
    let mut big = box_mesh(4.0, 4.0, 4.0);
    while big.vertices.len() * 48 <= EXTERNAL_MESH_BYTES {
        let copy = big.clone();
        big.append(&copy);
    }
    doc.assets
        .insert("big".into(), asset("big", AssetCategory::Building, big, None));
    let dir = tempfile::tempdir().unwrap();
    save_document_to_dir(&doc, dir.path(), "scene.json").unwrap();
    let text = std::fs::read_to_string(dir.path().join("scene.json")).unwrap();
    assert!(text.contains("\"uri\":\"meshes/"));
    let files: Vec<_> = std::fs::read_dir(dir.path().join("meshes")).unwrap().collect();
    assert_eq!(files.len(), 1);
    let loaded = load_document_from_path(&dir.path().join("scene.json")).unwrap();
    assert_eq!(loaded, doc);
}

#[test]
fn glb_node_count_and_counts_survive_reimport() {
    let doc = fixture().doc;
    let glb = export_gltf(&doc).unwrap();
    validate_glb(&glb).unwrap();
    let summary = inspect_glb(&glb).unwrap();
    assert_eq!(summary.node_count, 4 + doc.instances.len() + 1);
    let (v, t) = doc.vertex_and_triangle_counts();
    let nodes = &summary.nodes[..summary.node_count - 1];
    assert_eq!(nodes.iter().map(|n| n.vertex_count).sum::<usize>(), v);
    assert_eq!(nodes.iter().map(|n| n.triangle_count).sum::<usize>(), t);
    assert_eq!(summary.nodes.last().unwrap().name, "sky");
    for (node, inst) in summary.nodes[4..summary.node_count - 1].iter().zip(&doc.instances) {
        assert_eq!(node.extras["id"], inst.id.as_str());
        assert_eq!(node.extras["asset_ref"], inst.asset_ref.as_str());
    }
    assert_eq!(export_gltf(&doc).unwrap(), glb);
}

#[test]
fn building_nodes_reach_their_target_heights() {
    let f = fixture();
    let instances = majutsu_core::layout::extract_building_instances(&f.layout, &f.hmap).unwrap();
    let summary = inspect_glb(&export_gltf(&f.doc).unwrap()).unwrap();
    for b in &instances {
        let node = summary.nodes.iter().find(|n| n.name == b.id).unwrap();
        let bb = node.world_aabb.unwrap();
        let tol = 1e-3 * b.target_height.max(1.0);
        assert!((bb.size().z - b.target_height).abs() <= tol, "{}: {} vs {}", b.id, bb.size().z, b.target_height);
        assert!(bb.min.z.abs() <= 1e-3);
        // Planar bounds stay within the footprint box's axis-aligned extent.
        let obb_box = majutsu_core::math::Aabb::from_points(b.obb.corners().into_iter().map(|p| p.extend(0.0))).unwrap();
        assert!(bb.min.x >= obb_box.min.x - 1e-3 && bb.max.x <= obb_box.max.x + 1e-3);
        assert!(bb.min.y >= obb_box.min.y - 1e-3 && bb.max.y <= obb_box.max.y + 1e-3);
    }
}

#[test]
fn node_bounds_match_document_bounds() {
    let doc = fixture().doc;
    let summary = inspect_glb(&export_gltf(&doc).unwrap()).unwrap();
    for (node, inst) in summary.nodes[4..].iter().zip(&doc.instances) {
        let expect = doc.instance_world_aabb(inst).unwrap();
        assert!(node.world_aabb.unwrap().approx_eq(&expect, 1e-3), "{}", inst.id);
    }
}

#[test]
fn corrupted_glb_is_rejected() {
    let glb = export_gltf(&fixture().doc).unwrap();
    assert!(validate_glb(&glb[..glb.len() - 4]).is_err());
    let mut bad = glb.clone();
    bad[0] = b'x';
    assert!(validate_glb(&bad).is_err());
}

#[test]
fn glb_mesh_reimport_preserves_world_geometry() {
    let mut doc = fixture().doc;
    doc.instances.truncate(1);
    let expected = doc.instance_world_aabb(&doc.instances[0]).unwrap();
    let glb = export_gltf(&doc).unwrap();
    let mesh = majutsu_core::scene::glb_to_mesh(&glb).unwrap();
    let (v, t) = doc.vertex_and_triangle_counts();
    let sky = majutsu_core::scene::uv_sphere(1.0, 48, 24);
    assert_eq!(mesh.vertices.len(), v + sky.vertices.len());
    assert_eq!(mesh.triangles.len(), t + sky.triangles.len());
    let n_layers: usize = doc.layers.iter().map(|l| l.mesh.vertices.len()).sum();
    let asset_n = doc.assets[&doc.instances[0].asset_ref].mesh.vertices.len();
    let inst = majutsu_core::math::Aabb::from_points(mesh.vertices[n_layers..n_layers + asset_n].iter().copied()).unwrap();
    assert!(inst.approx_eq(&expected, 1e-3));
}

#[test]
fn published_palette_matches_code() {
    let doc = include_str!("../../../docs/palette.json");
    assert_eq!(doc, majutsu_core::layout::palette_json());
}
