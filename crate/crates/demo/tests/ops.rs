use serde_json::Value;
use tidyplan::{ActionSpec, Scene};
use tidyplan_demo::{fit_outline_json, messy_scene_json, place_json};

#[test]
fn messy_scenes_are_valid_and_seeded() {
    for env in ["coffee", "dining", "office", "bathroom", "mixed"] {
        let a = messy_scene_json(env, 7).unwrap();
        assert_eq!(a, messy_scene_json(env, 7).unwrap());
        assert!(Scene::from_json(&a).unwrap().is_valid());
    }
    assert!(messy_scene_json("garage", 0).is_err());
}

#[test]
fn placement_moves_one_object_or_refuses() {
    let scene = Scene::from_json(&messy_scene_json("office", 1).unwrap()).unwrap();
    let ws = scene.workspace;
    let id = scene.objects[0].id;
    let mut placed = 0;
    for x in 0..ws.grid_w {
        for y in 0..ws.grid_h {
            match place_json(&scene.to_json(), id, x, y, 0) {
                Ok(next) => {
                    let next = Scene::from_json(&next).unwrap();
                    assert!(next.is_valid());
                    assert_eq!(next.object(id).unwrap().pose, ActionSpec::new(id, x, y, 0).target_pose(&ws));
                    assert_eq!(next.objects[1..], scene.objects[1..]);
                    placed += 1;
                }
                Err(e) => assert!(!e.is_empty()),
            }
        }
    }
    assert!(placed > 0);
    assert!(place_json(&scene.to_json(), 999, 0, 0, 0).is_err());
    assert!(place_json(&scene.to_json(), id, ws.grid_w, 0, 0).is_err());
}

#[test]
fn outline_fit_reports_angle_and_alignment() {
    let pts: Vec<[f64; 2]> = (0..60)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / 60.0;
            let (x, y) = (2.0 * t.cos(), t.sin());
            let (s, c) = 30f64.to_radians().sin_cos();
            [c * x - s * y, s * x + c * y]
        })
        .collect();
    let v: Value = serde_json::from_str(&fit_outline_json(&serde_json::to_string(&pts).unwrap()).unwrap()).unwrap();
    assert!((v["angle"].as_f64().unwrap() - 30.0).abs() < 1e-9);
    assert!((v["alignment"].as_f64().unwrap().abs() - 30.0).abs() < 1e-9);
    assert!(fit_outline_json("[[0,0],[1,1]]").is_err());
    assert!(fit_outline_json("nope").is_err());
}
