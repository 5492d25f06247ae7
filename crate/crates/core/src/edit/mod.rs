//! The five atomic scene operations (Add, Delete, Edit, Move, Replace)
//! with computed inverses, undo/redo stacks and a replayable log.

mod parse;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parse::parse_command;

use crate::geometry::SimilarityPlacement;
use crate::math::{wrap_angle, Vec3};
use crate::scene::{AssetCategory, AssetInstance, LayerKind, SceneDocument};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ReplaceTarget {
    Layer {
        kind: LayerKind,
    },
    Instance {
        id: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        surface: Option<String>,
    },
}

fn zero3() -> Vec3 {
    Vec3::ZERO
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum EditCommand {
    Add {
        asset_ref: String,
        /// Defaults to the category of the referenced asset.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        category: Option<AssetCategory>,
        placement: SimilarityPlacement,
        /// Explicit id; otherwise the smallest unused `<prefix>_NNNN`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<String>,
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        attributes: BTreeMap<String, String>,
        /// Insertion position; used when restoring a deleted instance.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        index: Option<usize>,
    },
    Delete {
        id: String,
    },
    Edit {
        id: String,
        /// `None` removes the override.
        patch: BTreeMap<String, Option<String>>,
    },
    Move {
        id: String,
        #[serde(default = "zero3")]
        d_translation: Vec3,
        #[serde(default)]
        d_yaw: f64,
        #[serde(default = "one")]
        d_scale: f64,
        /// Exact placement to restore; set on computed inverses so undo
        /// does not accumulate rounding error.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        restore: Option<SimilarityPlacement>,
    },
    Replace {
        target: ReplaceTarget,
        material_id: String,
    },
}

impl EditCommand {
    pub fn kind(&self) -> &'static str {
        match self {
            EditCommand::Add { .. } => "add",
            EditCommand::Delete { .. } => "delete",
            EditCommand::Edit { .. } => "edit",
            EditCommand::Move { .. } => "move",
            EditCommand::Replace { .. } => "replace",
        }
    }
}

fn fmt_num(v: f64) -> String {
    format!("{v:?}")
}

impl fmt::Display for EditCommand {
    /// Canonical text form. Fields the grammar cannot express (explicit
    /// ids, restore placements, z scale differing from xy scale) are omitted.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EditCommand::Add { asset_ref, placement, .. } => {
                let t = placement.translation;
                write!(f, "add {asset_ref} at ({},{})", fmt_num(t.x), fmt_num(t.y))?;
                if placement.yaw != 0.0 {
                    write!(f, " yaw {}", fmt_num(placement.yaw))?;
                }
                if placement.xy_scale != 1.0 {
                    write!(f, " scale {}", fmt_num(placement.xy_scale))?;
                }
                Ok(())
            }
            EditCommand::Delete { id } => write!(f, "delete {id}"),
            EditCommand::Edit { id, patch } => {
                let parts: Vec<String> = patch
                    .iter()
                    .map(|(k, v)| format!("{k}={}", v.as_deref().unwrap_or("")))
                    .collect();
                write!(f, "edit {id} set {}", parts.join(", "))
            }
            EditCommand::Move {
                id,
                d_translation: d,
                d_yaw,
                d_scale,
                ..
            } => {
                write!(f, "move {id} by ({},{}", fmt_num(d.x), fmt_num(d.y))?;
                if d.z != 0.0 {
                    write!(f, ",{}", fmt_num(d.z))?;
                }
                f.write_str(")")?;
                if *d_yaw != 0.0 {
                    write!(f, " rotate {}", fmt_num(*d_yaw))?;
                }
                if *d_scale != 1.0 {
                    write!(f, " scale {}", fmt_num(*d_scale))?;
                }
                Ok(())
            }
            EditCommand::Replace { target, material_id } => match target {
                ReplaceTarget::Layer { kind } => write!(f, "replace {kind} with {material_id}"),
                ReplaceTarget::Instance { id, surface: None } => write!(f, "replace {id} with {material_id}"),
                ReplaceTarget::Instance { id, surface: Some(s) } => {
                    write!(f, "replace {id}.{s} with {material_id}")
                }
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogAction {
    Apply,
    Undo,
    Redo,
}

/// A command together with the inverse computed when it was applied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EditRecord {
    pub command: EditCommand,
    pub inverse: EditCommand,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub action: LogAction,
    pub command: EditCommand,
    pub inverse: EditCommand,
    /// Document revision after this entry.
    pub revision: u64,
}

/// Structural change produced by one operation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diff {
    pub added: Vec<String>,
    pub removed: Vec<String>,
    pub modified: Vec<String>,
    pub layers_changed: Vec<LayerKind>,
    pub revision: u64,
}

#[derive(Debug, Error, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "error", rename_all = "snake_case")]
pub enum EditError {
    #[error("unknown instance {id:?}")]
    UnknownInstance { id: String },
    #[error("unknown material {id:?}")]
    UnknownMaterial { id: String },
    #[error("unknown asset {id:?}")]
    UnknownAsset { id: String },
    #[error("position ({x}, {y}) lies outside the map")]
    OutOfBounds { x: f64, y: f64 },
    #[error("invalid patch key or value for {key:?}")]
    InvalidPatch { key: String },
    #[error("invalid command: {reason}")]
    InvalidCommand { reason: String },
    #[error("parse error at {position}: expected {expected}")]
    ParseError { position: usize, expected: String },
    #[error("nothing to undo")]
    NothingToUndo,
    #[error("nothing to redo")]
    NothingToRedo,
}

fn unknown_instance(id: &str) -> EditError {
    EditError::UnknownInstance { id: id.to_string() }
}

fn check_bounds(doc: &SceneDocument, t: Vec3) -> Result<(), EditError> {
    if doc.metadata.contains(t.xy()) {
        Ok(())
    } else {
        Err(EditError::OutOfBounds { x: t.x, y: t.y })
    }
}

fn check_material(doc: &SceneDocument, id: &str) -> Result<(), EditError> {
    if doc.materials.contains_key(id) {
        Ok(())
    } else {
        Err(EditError::UnknownMaterial { id: id.to_string() })
    }
}

fn is_tint(v: &str) -> bool {
    v.len() == 7 && v.starts_with('#') && v[1..].chars().all(|c| c.is_ascii_hexdigit())
}

fn validate_patch(doc: &SceneDocument, patch: &BTreeMap<String, Option<String>>) -> Result<(), EditError> {
    if patch.is_empty() {
        return Err(EditError::InvalidCommand {
            reason: "empty patch".into(),
        });
    }
    for (key, value) in patch {
        let bad = || EditError::InvalidPatch { key: key.clone() };
        match (key.as_str(), value.as_deref()) {
            ("height", Some(v)) => {
                let h: f64 = v.parse().map_err(|_| bad())?;
                if !(h > 0.0 && h.is_finite()) {
                    return Err(bad());
                }
            }
            ("tint", Some(v)) if !is_tint(v) => return Err(bad()),
            ("asset_ref", None) => return Err(bad()),
            ("asset_ref", Some(a)) => {
                if !doc.assets.contains_key(a) {
                    return Err(EditError::UnknownAsset { id: a.to_string() });
                }
            }
            (k, v) if k == "material" || k.starts_with("material.") => {
                if k.len() == "material.".len() {
                    return Err(bad());
                }
                if let Some(m) = v {
                    check_material(doc, m)?;
                }
            }
            ("height" | "tint", _) => {}
            _ => return Err(bad()),
        }
    }
    Ok(())
}

fn next_free_id(doc: &SceneDocument, category: AssetCategory) -> String {
    let prefix = category.id_prefix();
    (0..)
        .map(|n| format!("{prefix}_{n:04}"))
        .find(|id| doc.instance(id).is_none())
        .expect("unbounded id space")
}

fn warn_overlaps(doc: &SceneDocument, id: &str) {
    let Some(inst) = doc.instance(id) else { return };
    let Some(b) = doc.instance_world_aabb(inst) else { return };
    let hits = doc
        .instances
        .iter()
        .filter(|o| o.id != id)
        .filter_map(|o| doc.instance_world_aabb(o))
        .filter(|o| o.min.x < b.max.x && b.min.x < o.max.x && o.min.y < b.max.y && b.min.y < o.max.y)
        .count();
    if hits > 0 {
        log::warn!("instance {id} overlaps {hits} other instance(s)");
    }
}

/// Validates and performs one command, returning its inverse and diff.
/// The document is left untouched when an error is returned.
fn execute(doc: &mut SceneDocument, cmd: &EditCommand) -> Result<(EditCommand, Diff), EditError> {
    let mut diff = Diff::default();
    let inverse = match cmd {
        EditCommand::Add {
            asset_ref,
            category,
            placement,
            id,
            attributes,
            index,
        } => {
            let asset = doc.assets.get(asset_ref).ok_or_else(|| EditError::UnknownAsset {
                id: asset_ref.clone(),
            })?;
            let category = category.unwrap_or(asset.category);
            if !placement.is_valid() {
                return Err(EditError::InvalidCommand {
                    reason: "placement scales must be finite and positive".into(),
                });
            }
            if index.is_none() {
                check_bounds(doc, placement.translation)?;
            }
            let new_id = match id {
                Some(i) if doc.instance(i).is_some() => {
                    return Err(EditError::InvalidCommand {
                        reason: format!("instance id {i:?} already exists"),
                    })
                }
                Some(i) if i.is_empty() => {
                    return Err(EditError::InvalidCommand {
                        reason: "empty instance id".into(),
                    })
                }
                Some(i) => i.clone(),
                None => next_free_id(doc, category),
            };
            let at = index.unwrap_or(doc.instances.len()).min(doc.instances.len());
            doc.instances.insert(
                at,
                AssetInstance {
                    id: new_id.clone(),
                    asset_ref: asset_ref.clone(),
                    category,
                    placement: *placement,
                    attribute_overrides: attributes.clone(),
                },
            );
            warn_overlaps(doc, &new_id);
            diff.added.push(new_id.clone());
            EditCommand::Delete { id: new_id }
        }
        EditCommand::Delete { id } => {
            let at = doc.instance_index(id).ok_or_else(|| unknown_instance(id))?;
            let removed = doc.instances.remove(at);
            diff.removed.push(id.clone());
            EditCommand::Add {
                asset_ref: removed.asset_ref,
                category: Some(removed.category),
                placement: removed.placement,
                id: Some(removed.id),
                attributes: removed.attribute_overrides,
                index: Some(at),
            }
        }
        EditCommand::Edit { id, patch } => {
            let at = doc.instance_index(id).ok_or_else(|| unknown_instance(id))?;
            validate_patch(doc, patch)?;
            let inst = &mut doc.instances[at];
            let mut undo = BTreeMap::new();
            for (key, value) in patch {
                if key == "asset_ref" {
                    undo.insert(key.clone(), Some(inst.asset_ref.clone()));
                    inst.asset_ref = value.clone().expect("validated");
                    continue;
                }
                undo.insert(key.clone(), inst.attribute_overrides.get(key).cloned());
                match value {
                    Some(v) => inst.attribute_overrides.insert(key.clone(), v.clone()),
                    None => inst.attribute_overrides.remove(key),
                };
            }
            diff.modified.push(id.clone());
            EditCommand::Edit {
                id: id.clone(),
                patch: undo,
            }
        }
        EditCommand::Move {
            id,
            d_translation,
            d_yaw,
            d_scale,
            restore,
        } => {
            let at = doc.instance_index(id).ok_or_else(|| unknown_instance(id))?;
            if !(*d_scale > 0.0 && d_scale.is_finite()) {
                return Err(EditError::InvalidCommand {
                    reason: "move scale must be finite and positive".into(),
                });
            }
            let old = doc.instances[at].placement;
            let new = match restore {
                Some(p) => *p,
                None => {
                    let p = SimilarityPlacement {
                        translation: old.translation + *d_translation,
                        yaw: wrap_angle(old.yaw + d_yaw, std::f64::consts::TAU),
                        xy_scale: old.xy_scale * d_scale,
                        z_scale: old.z_scale * d_scale,
                    };
                    check_bounds(doc, p.translation)?;
                    p
                }
            };
            if !new.is_valid() {
                return Err(EditError::InvalidCommand {
                    reason: "resulting placement is not finite".into(),
                });
            }
            doc.instances[at].placement = new;
            warn_overlaps(doc, id);
            diff.modified.push(id.clone());
            EditCommand::Move {
                id: id.clone(),
                d_translation: -*d_translation,
                d_yaw: -d_yaw,
                d_scale: 1.0 / d_scale,
                restore: Some(old),
            }
        }
        EditCommand::Replace { target, material_id } => {
            check_material(doc, material_id)?;
            match target {
                ReplaceTarget::Layer { kind } => {
                    let layer = doc
                        .layers
                        .iter_mut()
                        .find(|l| l.kind == *kind)
                        .ok_or_else(|| EditError::InvalidCommand {
                            reason: format!("document has no {kind} layer"),
                        })?;
                    let old = std::mem::replace(&mut layer.material, material_id.clone());
                    diff.layers_changed.push(*kind);
                    EditCommand::Replace {
                        target: target.clone(),
                        material_id: old,
                    }
                }
                ReplaceTarget::Instance { id, surface } => {
                    let at = doc.instance_index(id).ok_or_else(|| unknown_instance(id))?;
                    let key = match surface {
                        Some(s) if !s.is_empty() => format!("material.{s}"),
                        _ => "material".to_string(),
                    };
                    let overrides = &mut doc.instances[at].attribute_overrides;
                    let old = overrides.insert(key.clone(), material_id.clone());
                    diff.modified.push(id.clone());
                    EditCommand::Edit {
                        id: id.clone(),
                        patch: BTreeMap::from([(key, old)]),
                    }
                }
            }
        }
    };
    Ok((inverse, diff))
}

/// Applies a command in place: revision + 1, log entry appended, undo
/// stack pushed and redo stack cleared.
pub fn apply_in_place(doc: &mut SceneDocument, cmd: &EditCommand) -> Result<Diff, EditError> {
    let (inverse, mut diff) = execute(doc, cmd)?;
    doc.revision += 1;
    diff.revision = doc.revision;
    doc.edit_log.push(LogEntry {
        action: LogAction::Apply,
        command: cmd.clone(),
        inverse: inverse.clone(),
        revision: doc.revision,
    });
    doc.undo_stack.push(EditRecord {
        command: cmd.clone(),
        inverse,
    });
    doc.redo_stack.clear();
    Ok(diff)
}

pub fn apply_command(doc: &SceneDocument, cmd: &EditCommand) -> Result<(SceneDocument, Diff), EditError> {
    let mut next = doc.clone();
    let diff = apply_in_place(&mut next, cmd)?;
    Ok((next, diff))
}

pub fn undo_in_place(doc: &mut SceneDocument) -> Result<Diff, EditError> {
    let record = doc.undo_stack.last().cloned().ok_or(EditError::NothingToUndo)?;
    let (_, mut diff) = execute(doc, &record.inverse)?;
    doc.undo_stack.pop();
    doc.revision += 1;
    diff.revision = doc.revision;
    doc.edit_log.push(LogEntry {
        action: LogAction::Undo,
        command: record.command.clone(),
        inverse: record.inverse.clone(),
        revision: doc.revision,
    });
    doc.redo_stack.push(record);
    Ok(diff)
}

pub fn redo_in_place(doc: &mut SceneDocument) -> Result<Diff, EditError> {
    let record = doc.redo_stack.last().cloned().ok_or(EditError::NothingToRedo)?;
    let (inverse, mut diff) = execute(doc, &record.command)?;
    doc.redo_stack.pop();
    doc.revision += 1;
    diff.revision = doc.revision;
    doc.edit_log.push(LogEntry {
        action: LogAction::Redo,
        command: record.command.clone(),
        inverse: inverse.clone(),
        revision: doc.revision,
    });
    doc.undo_stack.push(EditRecord {
        command: record.command,
        inverse,
    });
    Ok(diff)
}

pub fn undo(doc: &SceneDocument) -> Result<(SceneDocument, Diff), EditError> {
    let mut next = doc.clone();
    let diff = undo_in_place(&mut next)?;
    Ok((next, diff))
}

pub fn redo(doc: &SceneDocument) -> Result<(SceneDocument, Diff), EditError> {
    let mut next = doc.clone();
    let diff = redo_in_place(&mut next)?;
    Ok((next, diff))
}

/// Folds a log over a base document (normally the freshly assembled one).
pub fn replay(base: &SceneDocument, log: &[LogEntry]) -> Result<SceneDocument, EditError> {
    let mut doc = base.clone();
    for entry in log {
        match entry.action {
            LogAction::Apply => apply_in_place(&mut doc, &entry.command)?,
            LogAction::Undo => undo_in_place(&mut doc)?,
            LogAction::Redo => redo_in_place(&mut doc)?,
        };
    }
    Ok(doc)
}

/// Instance-level difference between two documents.
pub fn diff_documents(before: &SceneDocument, after: &SceneDocument) -> Diff {
    let mut d = Diff {
        revision: after.revision,
        ..Diff::default()
    };
    for inst in &after.instances {
        match before.instance(&inst.id) {
            None => d.added.push(inst.id.clone()),
            Some(old) if old != inst => d.modified.push(inst.id.clone()),
            _ => {}
        }
    }
    for inst in &before.instances {
        if after.instance(&inst.id).is_none() {
            d.removed.push(inst.id.clone());
        }
    }
    for l in &after.layers {
        if before.layer(l.kind) != Some(l) {
            d.layers_changed.push(l.kind);
        }
    }
    d
}
