#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::time::Duration;

use majutsu_core::edit::parse_command;
use majutsu_core::scene::{load_document_from_path, save_document};
use majutsu_orchestrator::{Mutation, SessionError, SessionStore};
use proptest::prelude::*;

#[derive(Clone, Debug)]
enum Step {
    Command(&'static str),
    Undo,
    Redo,
}

fn step() -> impl Strategy<Value = (Step, Option<i64>)> {
    let s = prop_oneof![
        proptest::sample::select(vec![
            "delete bldg_0001",
            "delete bldg_0002",
            "move bldg_0000 by (3,-2) rotate 0.4",
            "edit bldg_0003 set height=40",
            "replace road with asphalt_02",
            "replace bldg_0000 with slate",
            "add tree_oak at (30, 30)",
            "delete ghost",
        ])
        .prop_map(Step::Command),
        Just(Step::Undo),
        Just(Step::Redo),
    ];
    // Base revision: none, current, or off by a small amount.
    (s, prop_oneof![Just(None), (-2i64..=2).prop_map(Some)])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Revisions only grow, stale writers are refused, and the file on disk
    /// always equals the live document.
    #[test]
    fn persisted_sessions_track_the_live_document(steps in proptest::collection::vec(step(), 1..12)) {
        let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
        rt.block_on(async {
            let dir = tempfile::tempdir().unwrap();
            let store = SessionStore::open(dir.path()).unwrap();
            let s = store.create(common::fixture().doc).await.unwrap();
            let file = dir.path().join(&s.id).join("scene.majutsu.json");
            let mut last = s.revision();
            for (st, offset) in steps {
                let base = offset.map(|o| (s.revision() as i64 + o).max(0) as u64);
                let m = match st {
                    Step::Command(t) => Mutation::Apply(parse_command(t).unwrap()),
                    Step::Undo => Mutation::Undo,
                    Step::Redo => Mutation::Redo,
                };
                match s.mutate(m, base).await {
                    Ok(out) => {
                        prop_assert_eq!(out.revision, last + 1);
                        prop_assert!(base.is_none_or(|b| b == last));
                    }
                    Err(SessionError::Conflict { expected, current }) => {
                        prop_assert_ne!(expected, current);
                        prop_assert_eq!(current, last);
                    }
                    Err(SessionError::Edit(_)) => {}
                    Err(SessionError::Persist(m)) => prop_assert!(false, "persist failed: {}", m),
                }
                prop_assert!(s.revision() >= last);
                last = s.revision();
                let on_disk = load_document_from_path(&file).unwrap();
                let live = s.read(|d| save_document(d).unwrap()).await;
                prop_assert_eq!(save_document(&on_disk).unwrap(), live);
            }
            let events = s.events_since(0, Duration::ZERO).await;
            let revs: Vec<u64> = events.iter().map(|e| e.revision).collect();
            prop_assert_eq!(revs, (1..=last).collect::<Vec<u64>>());
            Ok(())
        })?;
    }
}
