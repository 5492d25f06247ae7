mod common;

use std::collections::BTreeMap;

use common::fixture;
use majutsu_core::edit::{
    apply_command, apply_in_place, diff_documents, parse_command, redo, redo_in_place, replay, undo, undo_in_place,
    EditCommand, EditError, ReplaceTarget,
};
use majutsu_core::math::{Vec2, Vec3};
use majutsu_core::scene::{export_gltf, inspect_glb, AssetCategory, LayerKind, SceneDocument};
use proptest::prelude::*;

fn cmd(text: &str) -> EditCommand {
    parse_command(text).unwrap()
}

#[test]
fn apply_then_undo_restores_content() {
    let base = fixture().doc;
    for text in [
        "delete bldg_0001",
        "move bldg_0002 by (10,0) rotate 0.5",
        "move tree_0000 by (1,-2,0.5) scale 2",
        "replace road with asphalt_02",
        "replace bldg_0000.roof with slate",
        "replace bldg_0000 with slate",
        "edit bldg_0003 set height=45, tint=#ff8800",
        "add tree_oak at (20, 20) yaw 1",
    ] {
        let (after, diff) = apply_command(&base, &cmd(text)).unwrap();
        assert_eq!(after.revision, base.revision + 1, "{text}");
        assert_eq!(diff.revision, after.revision);
        assert!(!after.content_eq(&base), "{text}");
        let (restored, _) = undo(&after).unwrap();
        assert!(restored.content_eq(&base), "{text}");
        assert_eq!(restored.revision, base.revision + 2);
        let (again, _) = redo(&restored).unwrap();
        assert!(again.content_eq(&after), "{text}");
    }
}

#[test]
fn delete_undo_keeps_position() {
    let base = fixture().doc;
    let (after, diff) = apply_command(&base, &cmd("delete bldg_0001")).unwrap();
    assert_eq!(diff.removed, vec!["bldg_0001".to_string()]);
    assert!(after.instance("bldg_0001").is_none());
    let (restored, diff) = undo(&after).unwrap();
    assert_eq!(diff.added, vec!["bldg_0001".to_string()]);
    assert_eq!(restored.instances, base.instances);
}

#[test]
fn move_by_offset_and_rotation() {
    let base = fixture().doc;
    let before = base.instance("bldg_0002").unwrap().placement;
    let (after, _) = apply_command(&base, &cmd("move bldg_0002 by (10,0) rotate 0.5")).unwrap();
    let p = after.instance("bldg_0002").unwrap().placement;
    assert!((p.translation - before.translation - Vec3::new(10.0, 0.0, 0.0)).length() < 1e-12);
    let dyaw = (p.yaw - before.yaw).rem_euclid(std::f64::consts::TAU);
    assert!((dyaw - 0.5).abs() < 1e-12);
    assert_eq!(p.xy_scale, before.xy_scale);
}

#[test]
fn moves_compose_additively() {
    let base = fixture().doc;
    let mut a = base.clone();
    apply_in_place(&mut a, &cmd("move bldg_0000 by (3,4) rotate 0.25")).unwrap();
    apply_in_place(&mut a, &cmd("move bldg_0000 by (-1,2) rotate 0.5")).unwrap();
    let (b, _) = apply_command(&base, &cmd("move bldg_0000 by (2,6) rotate 0.75")).unwrap();
    let (pa, pb) = (a.instance("bldg_0000").unwrap().placement, b.instance("bldg_0000").unwrap().placement);
    assert!((pa.translation - pb.translation).length() < 1e-9);
    assert!((pa.yaw - pb.yaw).abs() < 1e-9);
}

#[test]
fn errors_leave_document_untouched() {
    let base = fixture().doc;
    let cases = [
        ("delete bldg_9999", EditError::UnknownInstance { id: "bldg_9999".into() }),
        (
            "replace road with chrome",
            EditError::UnknownMaterial { id: "chrome".into() },
        ),
        ("move bldg_0000 by (100000,0)", EditError::OutOfBounds { x: 0.0, y: 0.0 }),
        ("add tree_oak at (-5, 3)", EditError::OutOfBounds { x: -5.0, y: 3.0 }),
        ("add castle at (5, 3)", EditError::UnknownAsset { id: "castle".into() }),
        ("edit bldg_0000 set height=-3", EditError::InvalidPatch { key: "height".into() }),
        ("edit bldg_0000 set colour=red", EditError::InvalidPatch { key: "colour".into() }),
    ];
    for (text, expected) in cases {
        let mut doc = base.clone();
        let err = apply_in_place(&mut doc, &cmd(text)).unwrap_err();
        match (&err, &expected) {
            (EditError::OutOfBounds { .. }, EditError::OutOfBounds { .. }) => {}
            _ => assert_eq!(err, expected, "{text}"),
        }
        assert_eq!(doc, base, "{text}");
    }
    assert_eq!(undo(&base).unwrap_err(), EditError::NothingToUndo);
    assert_eq!(redo(&base).unwrap_err(), EditError::NothingToRedo);
}

#[test]
fn new_instance_ids_fill_gaps() {
    let mut doc = fixture().doc;
    apply_in_place(&mut doc, &cmd("delete tree_0001")).unwrap();
    let d = apply_in_place(&mut doc, &cmd("add tree_oak at (20, 20)")).unwrap();
    assert_eq!(d.added, vec!["tree_0001".to_string()]);
    let d = apply_in_place(&mut doc, &cmd("add office at (20, 20)")).unwrap();
    assert_eq!(d.added, vec!["bldg_0004".to_string()]);
    assert_eq!(doc.instance("bldg_0004").unwrap().category, AssetCategory::Building);
}

#[test]
fn height_override_changes_exported_height() {
    let mut doc = fixture().doc;
    apply_in_place(&mut doc, &cmd("edit bldg_0001 set height=45")).unwrap();
    let summary = inspect_glb(&export_gltf(&doc).unwrap()).unwrap();
    let node = summary.nodes.iter().find(|n| n.name == "bldg_0001").unwrap();
    let bb = node.world_aabb.unwrap();
    assert!((bb.size().z - 45.0).abs() < 1e-3);
    assert!(bb.min.z.abs() < 1e-3);
}

#[test]
fn replace_layer_changes_only_that_layer() {
    let base = fixture().doc;
    let (after, diff) = apply_command(&base, &cmd("replace road with asphalt_02")).unwrap();
    assert_eq!(diff.layers_changed, vec![LayerKind::Road]);
    assert_eq!(after.layer(LayerKind::Road).unwrap().material, "asphalt_02");
    assert_eq!(diff_documents(&base, &after).layers_changed, vec![LayerKind::Road]);
    assert!(diff_documents(&base, &after).modified.is_empty());
}

#[test]
fn replace_instance_surface_sets_override() {
    let base = fixture().doc;
    let (after, _) = apply_command(
        &base,
        &EditCommand::Replace {
            target: ReplaceTarget::Instance {
                id: "bldg_0000".into(),
                surface: Some("roof".into()),
            },
            material_id: "slate".into(),
        },
    )
    .unwrap();
    let inst = after.instance("bldg_0000").unwrap();
    assert_eq!(inst.attribute_overrides.get("material.roof").map(String::as_str), Some("slate"));
}

#[test]
fn log_entries_serialise() {
    let mut doc = fixture().doc;
    apply_in_place(&mut doc, &cmd("move bldg_0000 by (1,1)")).unwrap();
    undo_in_place(&mut doc).unwrap();
    let json = serde_json::to_string(&doc.edit_log).unwrap();
    let back: Vec<majutsu_core::edit::LogEntry> = serde_json::from_str(&json).unwrap();
    assert_eq!(back, doc.edit_log);
}

#[derive(Clone, Debug)]
enum Op {
    Apply(EditCommand),
    Undo,
    Redo,
}

fn op_strategy(doc: &SceneDocument) -> impl Strategy<Value = Op> {
    let ids: Vec<String> = doc.instances.iter().map(|i| i.id.clone()).collect();
    let ext = doc.metadata.extent();
    let id = proptest::sample::select(ids);
    let mats = proptest::sample::select(vec!["asphalt_02", "slate", "brick", "grass"]);
    let layer = proptest::sample::select(LayerKind::ALL.to_vec());
    prop_oneof![
        id.clone().prop_map(|id| Op::Apply(EditCommand::Delete { id })),
        (id.clone(), -20.0..20.0f64, -20.0..20.0f64, -3.0..3.0f64, 0.5..2.0f64).prop_map(|(id, dx, dy, r, s)| {
            Op::Apply(EditCommand::Move {
                id,
                d_translation: Vec3::new(dx, dy, 0.0),
                d_yaw: r,
                d_scale: s,
                restore: None,
            })
        }),
        (id.clone(), 1.0..80.0f64).prop_map(|(id, h)| Op::Apply(EditCommand::Edit {
            id,
            patch: BTreeMap::from([("height".to_string(), Some(format!("{h}")))]),
        })),
        (0.0..ext.x, 0.0..ext.y).prop_map(|(x, y)| Op::Apply(EditCommand::Add {
            asset_ref: "tree_oak".into(),
            category: None,
            placement: majutsu_core::geometry::SimilarityPlacement::at(Vec2::new(x, y), 0.0),
            id: None,
            attributes: BTreeMap::new(),
            index: None,
        })),
        (layer, mats.clone()).prop_map(|(kind, m)| Op::Apply(EditCommand::Replace {
            target: ReplaceTarget::Layer { kind },
            material_id: m.into(),
        })),
        (id, mats).prop_map(|(id, m)| Op::Apply(EditCommand::Replace {
            target: ReplaceTarget::Instance { id, surface: None },
            material_id: m.into(),
        })),
        Just(Op::Undo),
        Just(Op::Redo),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn history_laws(ops in proptest::collection::vec(op_strategy(&fixture().doc), 1..24)) {
        let base = fixture().doc;
        let mut doc = base.clone();
        let mut applied = 0u64;
        for op in &ops {
            let before = doc.clone();
            let r = match op {
                Op::Apply(c) => apply_in_place(&mut doc, c),
                Op::Undo => undo_in_place(&mut doc),
                Op::Redo => redo_in_place(&mut doc),
            };
            match r {
                Ok(diff) => {
                    applied += 1;
                    prop_assert_eq!(diff.revision, doc.revision);
                }
                Err(_) => prop_assert_eq!(&doc, &before),
            }
        }
        prop_assert_eq!(doc.revision, base.revision + applied);
        prop_assert_eq!(doc.edit_log.len() as u64, applied);

        let replayed = replay(&base, &doc.edit_log).unwrap();
        prop_assert_eq!(&replayed, &doc);

        let mut unwound = doc.clone();
        while undo_in_place(&mut unwound).is_ok() {}
        prop_assert!(unwound.content_eq(&base));
    }
}
