//! Manual tidying sessions: keyboard edit events, replay, and effort totals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::world::{normalize_angle, Scene};

/// Translation of one move event, meters.
pub const MOVE_STEP_M: f64 = 0.01;
/// Rotation of one rotate event, degrees.
pub const ROTATE_STEP_DEG: f64 = 10.0;
pub const TLX_MAX: u8 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EditOp {
    MoveUp,
    MoveDown,
    MoveLeft,
    MoveRight,
    RotateCw,
    RotateCcw,
    Select,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EditEvent {
    pub op: EditOp,
    pub object_id: u32,
    /// Client clock, milliseconds.
    pub timestamp: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TlxResponse {
    pub mental_demand: u8,
    pub performance: u8,
    pub frustration: u8,
}

impl TlxResponse {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mental_demand", self.mental_demand), ("performance", self.performance), ("frustration", self.frustration)] {
            if v > TLX_MAX {
                return Err(Error::InvalidConfig(format!("{name} must be in 0..={TLX_MAX}, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditSessionLog {
    pub session_id: String,
    pub scene_id: String,
    pub participant: String,
    pub events: Vec<EditEvent>,
    pub final_scene: Scene,
    pub tlx: Option<TlxResponse>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SessionTotals {
    pub distance_cm: f64,
    pub rotation_deg: f64,
    /// Moves and rotations; selecting an object is not an operation.
    pub op_count: usize,
}

impl SessionTotals {
    fn add(&mut self, op: EditOp) {
        match op {
            EditOp::MoveUp | EditOp::MoveDown | EditOp::MoveLeft | EditOp::MoveRight => {
                self.distance_cm += MOVE_STEP_M * 100.0;
                self.op_count += 1;
            }
            EditOp::RotateCw | EditOp::RotateCcw => {
                self.rotation_deg += ROTATE_STEP_DEG;
                self.op_count += 1;
            }
            EditOp::Select => {}
        }
    }
}

/// Replays edit events one at a time, tracking the selected object.
#[derive(Debug, Clone, PartialEq)]
pub struct EditReplay {
    pub scene: Scene,
    pub selected: Option<u32>,
    pub totals: SessionTotals,
    applied: usize,
}

impl EditReplay {
    pub fn new(initial: Scene) -> EditReplay {
        EditReplay {
            scene: initial,
            selected: None,
            totals: SessionTotals::default(),
            applied: 0,
        }
    }

    /// Number of events applied so far.
    pub fn len(&self) -> usize {
        self.applied
    }

    pub fn is_empty(&self) -> bool {
        self.applied == 0
    }

    /// Applies one event. A rejected event leaves the state untouched.
    pub fn apply(&mut self, event: &EditEvent) -> Result<()> {
        let malformed = |reason: String| Error::MalformedEvent {
            index: self.applied,
            reason,
        };
        let Some(idx) = self.scene.index_of(event.object_id) else {
            return Err(malformed(format!("unknown object {}", event.object_id)));
        };
        if event.op == EditOp::Select {
            self.selected = Some(event.object_id);
        } else {
            if self.selected != Some(event.object_id) {
                return Err(malformed(format!("object {} is not selected", event.object_id)));
            }
            let pose = &mut self.scene.objects[idx].pose;
            let mut next = *pose;
            match event.op {
                EditOp::MoveUp => next.y += MOVE_STEP_M,
                EditOp::MoveDown => next.y -= MOVE_STEP_M,
                EditOp::MoveLeft => next.x -= MOVE_STEP_M,
                EditOp::MoveRight => next.x += MOVE_STEP_M,
                EditOp::RotateCw => next.theta = normalize_angle(next.theta - ROTATE_STEP_DEG),
                EditOp::RotateCcw => next.theta = normalize_angle(next.theta + ROTATE_STEP_DEG),
                EditOp::Select => unreachable!(),
            }
            if !(next.x.is_finite() && next.y.is_finite() && next.theta.is_finite()) {
                return Err(malformed("non-finite pose".into()));
            }
            *pose = next;
        }
        self.totals.add(event.op);
        self.applied += 1;
        Ok(())
    }
}

/// Applies `events` in order to `initial`.
pub fn replay(initial: &Scene, events: &[EditEvent]) -> Result<EditReplay> {
    let mut r = EditReplay::new(initial.clone());
    for e in events {
        r.apply(e)?;
    }
    Ok(r)
}

/// Effort totals of a logged session. Events are checked for well-formedness
/// against the object set of the final scene.
pub fn recount_session(log: &EditSessionLog) -> Result<SessionTotals> {
    let mut totals = SessionTotals::default();
    let mut selected = None;
    for (index, e) in log.events.iter().enumerate() {
        if log.final_scene.object(e.object_id).is_none() {
            return Err(Error::MalformedEvent {
                index,
                reason: format!("unknown object {}", e.object_id),
            });
        }
        if e.op == EditOp::Select {
            selected = Some(e.object_id);
        } else if selected != Some(e.object_id) {
            return Err(Error::MalformedEvent {
                index,
                reason: format!("object {} is not selected", e.object_id),
            });
        }
        totals.add(e.op);
    }
    Ok(totals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{EnvironmentTag, ObjectInstance, Pose, Workspace};
    use crate::Category;
    use proptest::prelude::*;

    fn scene() -> Scene {
        Scene::new(
            Workspace::default(),
            EnvironmentTag::Coffee,
            vec![
                ObjectInstance::from_category(0, Category::Cup, Pose::new(0.3, 0.3, 0.0)),
                ObjectInstance::from_category(1, Category::Book, Pose::new(0.7, 0.4, 45.0)),
            ],
        )
        .unwrap()
    }

    fn ev(op: EditOp, object_id: u32) -> EditEvent {
        EditEvent { op, object_id, timestamp: 0 }
    }

    fn log(events: Vec<EditEvent>) -> EditSessionLog {
        let r = replay(&scene(), &events).unwrap();
        EditSessionLog {
            session_id: "s".into(),
            scene_id: "c".into(),
            participant: String::new(),
            events,
            final_scene: r.scene,
            tlx: None,
        }
    }

    #[test]
    fn twelve_moves_three_rotations() {
        let mut events = vec![ev(EditOp::Select, 1)];
        events.extend((0..12).map(|i| ev([EditOp::MoveUp, EditOp::MoveLeft, EditOp::MoveRight][i % 3], 1)));
        events.extend((0..3).map(|_| ev(EditOp::RotateCw, 1)));
        let t = recount_session(&log(events)).unwrap();
        assert_eq!(t, SessionTotals { distance_cm: 12.0, rotation_deg: 30.0, op_count: 15 });
    }

    #[test]
    fn empty_log_counts_nothing() {
        assert_eq!(recount_session(&log(vec![])).unwrap(), SessionTotals::default());
    }

    #[test]
    fn moves_shift_by_one_centimeter() {
        let r = replay(&scene(), &[ev(EditOp::Select, 0), ev(EditOp::MoveRight, 0), ev(EditOp::MoveUp, 0), ev(EditOp::RotateCcw, 0)]).unwrap();
        let p = r.scene.objects[0].pose;
        assert!((p.x - 0.31).abs() < 1e-12 && (p.y - 0.31).abs() < 1e-12);
        assert_eq!(p.theta, 10.0);
        let r = replay(&scene(), &[ev(EditOp::Select, 0), ev(EditOp::RotateCw, 0)]).unwrap();
        assert_eq!(r.scene.objects[0].pose.theta, 350.0);
    }

    #[test]
    fn unselected_or_unknown_objects_are_rejected() {
        let err = replay(&scene(), &[ev(EditOp::MoveUp, 0)]).unwrap_err();
        assert!(matches!(err, Error::MalformedEvent { index: 0, .. }));
        let err = replay(&scene(), &[ev(EditOp::Select, 0), ev(EditOp::MoveUp, 1)]).unwrap_err();
        assert!(matches!(err, Error::MalformedEvent { index: 1, .. }));
        let err = replay(&scene(), &[ev(EditOp::Select, 9)]).unwrap_err();
        assert!(matches!(err, Error::MalformedEvent { index: 0, .. }));
        let mut bad = log(vec![ev(EditOp::Select, 0)]);
        bad.events.push(ev(EditOp::MoveDown, 1));
        assert!(matches!(recount_session(&bad), Err(Error::MalformedEvent { index: 1, .. })));
    }

    #[test]
    fn rejected_event_leaves_state_untouched() {
        let mut r = EditReplay::new(scene());
        r.apply(&ev(EditOp::Select, 0)).unwrap();
        let before = r.clone();
        assert!(r.apply(&ev(EditOp::MoveUp, 1)).is_err());
        assert_eq!(r, before);
    }

    #[test]
    fn tlx_range_is_checked() {
        assert!(TlxResponse { mental_demand: 0, performance: 20, frustration: 7 }.validate().is_ok());
        assert!(TlxResponse { mental_demand: 21, performance: 0, frustration: 0 }.validate().is_err());
    }

    #[test]
    fn ops_serialize_kebab_case() {
        assert_eq!(serde_json::to_string(&EditOp::RotateCcw).unwrap(), "\"rotate-ccw\"");
        let e: EditEvent = serde_json::from_str(r#"{"op":"move-left","object_id":3,"timestamp":12}"#).unwrap();
        assert_eq!(e, EditEvent { op: EditOp::MoveLeft, object_id: 3, timestamp: 12 });
    }

    fn op_strategy() -> impl Strategy<Value = EditOp> {
        prop_oneof![
            Just(EditOp::MoveUp),
            Just(EditOp::MoveDown),
            Just(EditOp::MoveLeft),
            Just(EditOp::MoveRight),
            Just(EditOp::RotateCw),
            Just(EditOp::RotateCcw),
            Just(EditOp::Select),
        ]
    }

    proptest! {
        #[test]
        fn replay_totals_match_recount(ops in prop::collection::vec((op_strategy(), 0u32..2), 0..60)) {
            let mut events = vec![ev(EditOp::Select, 0)];
            let mut selected = 0;
            for (op, id) in ops {
                if op == EditOp::Select {
                    selected = id;
                }
                events.push(ev(op, selected));
            }
            let r = replay(&scene(), &events).unwrap();
            let l = log(events.clone());
            prop_assert_eq!(recount_session(&l).unwrap(), r.totals);
            let moves = events.iter().filter(|e| matches!(e.op, EditOp::MoveUp | EditOp::MoveDown | EditOp::MoveLeft | EditOp::MoveRight)).count();
            let rots = events.iter().filter(|e| matches!(e.op, EditOp::RotateCw | EditOp::RotateCcw)).count();
            prop_assert_eq!(r.totals.op_count, moves + rots);
            prop_assert!((r.totals.distance_cm - moves as f64).abs() < 1e-9);
            // replaying in two halves gives the same scene
            let mid = events.len() / 2;
            let mut half = replay(&scene(), &events[..mid]).unwrap();
            for e in &events[mid..] {
                half.apply(e).unwrap();
            }
            prop_assert_eq!(half.scene, r.scene);
        }
    }
}
