//! Text grammar for edit commands:
//!
//! ```text
//! add <asset_ref> at (x,y) [yaw r] [scale s]
//! delete <id>
//! edit <id> set <key>=<value>[, <key>=<value>]*
//! move <id> by (dx,dy[,dz]) [rotate r] [scale s]
//! replace <layer|id>[.<surface>] with <material_id>
//! ```
//!
//! Keywords are case-insensitive. Errors carry the byte offset where the
//! parser stopped and a description of what it expected there.

use std::collections::BTreeMap;

use super::{EditCommand, EditError, ReplaceTarget};
use crate::geometry::SimilarityPlacement;
use crate::math::{Vec2, Vec3};
use crate::scene::LayerKind;

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '/' | ':')
}

impl<'a> Cursor<'a> {
    fn error(&self, expected: &str) -> EditError {
        EditError::ParseError {
            position: self.pos,
            expected: expected.to_string(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos == self.src.len()
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> &'a str {
        let start = self.pos;
        let len = self.rest().find(|c: char| !f(c)).unwrap_or(self.rest().len());
        self.pos += len;
        &self.src[start..start + len]
    }

    fn peek_word(&mut self) -> &'a str {
        self.skip_ws();
        let len = self
            .rest()
            .find(|c: char| !c.is_ascii_alphabetic())
            .unwrap_or(self.rest().len());
        &self.rest()[..len]
    }

    fn keyword(&mut self, kw: &str) -> Result<(), EditError> {
        if self.peek_word().eq_ignore_ascii_case(kw) {
            self.pos += kw.len();
            Ok(())
        } else {
            Err(self.error(&format!("'{kw}'")))
        }
    }

    fn try_keyword(&mut self, kw: &str) -> bool {
        self.keyword(kw).is_ok()
    }

    fn punct(&mut self, c: char) -> Result<(), EditError> {
        self.skip_ws();
        if self.rest().starts_with(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.error(&format!("'{c}'")))
        }
    }

    fn try_punct(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.rest().starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn ident(&mut self, what: &str) -> Result<&'a str, EditError> {
        self.skip_ws();
        let s = self.take_while(is_ident_char);
        if s.is_empty() {
            Err(self.error(what))
        } else {
            Ok(s)
        }
    }

    fn number(&mut self) -> Result<f64, EditError> {
        self.skip_ws();
        let start = self.pos;
        let s = self.take_while(|c| c.is_ascii_digit() || matches!(c, '+' | '-' | '.' | 'e' | 'E'));
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => {
                self.pos = start;
                Err(self.error("number"))
            }
        }
    }

    fn tuple(&mut self, min: usize, max: usize) -> Result<Vec<f64>, EditError> {
        self.punct('(')?;
        let mut out = vec![self.number()?];
        while out.len() < max && self.try_punct(',') {
            out.push(self.number()?);
        }
        if out.len() < min {
            return Err(self.error("','"));
        }
        self.punct(')')?;
        Ok(out)
    }

    fn end(&mut self) -> Result<(), EditError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.error("end of command"))
        }
    }
}

pub fn parse_command(text: &str) -> Result<EditCommand, EditError> {
    let mut c = Cursor { src: text, pos: 0 };
    let verb = c.peek_word().to_ascii_lowercase();
    let cmd = match verb.as_str() {
        "add" => {
            c.keyword("add")?;
            let asset_ref = c.ident("asset reference")?.to_string();
            c.keyword("at")?;
            let xy = c.tuple(2, 2)?;
            let mut placement = SimilarityPlacement::at(Vec2::new(xy[0], xy[1]), 0.0);
            if c.try_keyword("yaw") {
                placement.yaw = c.number()?;
            }
            if c.try_keyword("scale") {
                let s = c.number()?;
                placement.xy_scale = s;
                placement.z_scale = s;
            }
            EditCommand::Add {
                asset_ref,
                category: None,
                placement,
                id: None,
                attributes: BTreeMap::new(),
                index: None,
            }
        }
        "delete" => {
            c.keyword("delete")?;
            EditCommand::Delete {
                id: c.ident("instance id")?.to_string(),
            }
        }
        "edit" => {
            c.keyword("edit")?;
            let id = c.ident("instance id")?.to_string();
            c.keyword("set")?;
            let mut patch = BTreeMap::new();
            loop {
                c.skip_ws();
                let key = c.take_while(|ch| is_ident_char(ch) || ch == '.');
                if key.is_empty() {
                    return Err(c.error("attribute key"));
                }
                c.punct('=')?;
                c.skip_ws();
                let value = c.take_while(|ch| !ch.is_whitespace() && ch != ',');
                if value.is_empty() {
                    return Err(c.error("attribute value"));
                }
                patch.insert(key.to_string(), Some(value.to_string()));
                if !c.try_punct(',') {
                    break;
                }
            }
            EditCommand::Edit { id, patch }
        }
        "move" => {
            c.keyword("move")?;
            let id = c.ident("instance id")?.to_string();
            c.keyword("by")?;
            let d = c.tuple(2, 3)?;
            let d_translation = Vec3::new(d[0], d[1], d.get(2).copied().unwrap_or(0.0));
            let mut d_yaw = 0.0;
            let mut d_scale = 1.0;
            if c.try_keyword("rotate") {
                d_yaw = c.number()?;
            }
            if c.try_keyword("scale") {
                let at = c.pos;
                d_scale = c.number()?;
                if d_scale <= 0.0 {
                    return Err(EditError::ParseError {
                        position: at,
                        expected: "positive scale".into(),
                    });
                }
            }
            EditCommand::Move {
                id,
                d_translation,
                d_yaw,
                d_scale,
                restore: None,
            }
        }
        "replace" => {
            c.keyword("replace")?;
            let name = c.ident("layer or instance id")?.to_string();
            let surface = if c.try_punct('.') {
                Some(c.ident("surface name")?.to_string())
            } else {
                None
            };
            c.keyword("with")?;
            let material_id = c.ident("material id")?.to_string();
            let target = match LayerKind::from_name(&name.to_ascii_lowercase()) {
                Some(kind) => ReplaceTarget::Layer { kind },
                None => ReplaceTarget::Instance { id: name, surface },
            };
            EditCommand::Replace { target, material_id }
        }
        _ => return Err(c.error("one of add, delete, edit, move, replace")),
    };
    c.end()?;
    Ok(cmd)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delete() {
        assert_eq!(
            parse_command("delete bldg_0007").unwrap(),
            EditCommand::Delete { id: "bldg_0007".into() }
        );
    }

    #[test]
    fn move_with_rotation() {
        assert_eq!(
            parse_command("move bldg_0007 by (10,0) rotate 0.5").unwrap(),
            EditCommand::Move {
                id: "bldg_0007".into(),
                d_translation: Vec3::new(10.0, 0.0, 0.0),
                d_yaw: 0.5,
                d_scale: 1.0,
                restore: None,
            }
        );
        let m = parse_command("MOVE x by ( 1 , -2, 3.5 ) scale 2").unwrap();
        let EditCommand::Move { d_translation, d_scale, .. } = m else { panic!() };
        assert_eq!(d_translation, Vec3::new(1.0, -2.0, 3.5));
        assert_eq!(d_scale, 2.0);
    }

    #[test]
    fn replace_layer_and_surface() {
        assert_eq!(
            parse_command("replace road with asphalt_02").unwrap(),
            EditCommand::Replace {
                target: ReplaceTarget::Layer { kind: LayerKind::Road },
                material_id: "asphalt_02".into(),
            }
        );
        assert_eq!(
            parse_command("replace bldg_0001.roof with slate").unwrap(),
            EditCommand::Replace {
                target: ReplaceTarget::Instance {
                    id: "bldg_0001".into(),
                    surface: Some("roof".into()),
                },
                material_id: "slate".into(),
            }
        );
    }

    #[test]
    fn add_and_edit() {
        let EditCommand::Add { asset_ref, placement, .. } = parse_command("add tree_oak at (12.5, 40) yaw 1 scale 0.5").unwrap() else {
            panic!()
        };
        assert_eq!(asset_ref, "tree_oak");
        assert_eq!(placement.translation, Vec3::new(12.5, 40.0, 0.0));
        assert_eq!((placement.yaw, placement.xy_scale, placement.z_scale), (1.0, 0.5, 0.5));
        let EditCommand::Edit { patch, .. } = parse_command("edit bldg_0002 set height=45, tint=#ff8800").unwrap() else {
            panic!()
        };
        assert_eq!(patch["height"].as_deref(), Some("45"));
        assert_eq!(patch["tint"].as_deref(), Some("#ff8800"));
    }

    #[test]
    fn errors_report_position() {
        assert_eq!(
            parse_command("move bldg_1 to (1,2)"),
            Err(EditError::ParseError {
                position: 12,
                expected: "'by'".into()
            })
        );
        assert!(matches!(
            parse_command("teleport x"),
            Err(EditError::ParseError { position: 0, .. })
        ));
        assert!(matches!(
            parse_command("delete a b"),
            Err(EditError::ParseError { position: 9, .. })
        ));
        assert!(matches!(
            parse_command("move a by (1) "),
            Err(EditError::ParseError { .. })
        ));
    }

    #[test]
    fn display_round_trips() {
        for text in [
            "delete bldg_0007",
            "move bldg_0007 by (10.0,0.0) rotate 0.5",
            "replace road with asphalt_02",
            "add tree_oak at (1.0,2.0) yaw 0.25 scale 2.0",
            "edit bldg_0001 set height=40",
        ] {
            let cmd = parse_command(text).unwrap();
            assert_eq!(parse_command(&cmd.to_string()).unwrap(), cmd);
        }
    }
}
