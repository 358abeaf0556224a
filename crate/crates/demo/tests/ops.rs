use groundbridge_demo::{ground_curve_json, ms_loss_json, train_index_json};
use serde_json::{json, Value};

fn loss_at(angles: &[f64], labels: &[usize]) -> Value {
    let req = json!({ "angles": angles, "labels": labels, "epsilon": 0.5 });
    serde_json::from_str(&ms_loss_json(&req.to_string()).unwrap()).unwrap()
}

#[test]
fn angle_gradient_matches_finite_differences() {
    let angles = [0.1, 0.5, 2.0, 2.4, 4.0, 4.3];
    let labels = [0, 0, 1, 1, 2, 2];
    let got = loss_at(&angles, &labels);
    let grad: Vec<f64> = serde_json::from_value(got["angle_gradient"].clone()).unwrap();
    let h = 1e-6;
    for i in 0..angles.len() {
        let (mut up, mut down) = (angles, angles);
        up[i] += h;
        down[i] -= h;
        let numeric = (loss_at(&up, &labels)["loss"].as_f64().unwrap() - loss_at(&down, &labels)["loss"].as_f64().unwrap()) / (2.0 * h);
        assert!((grad[i] - numeric).abs() < 1e-6, "angle {i}: {} vs {numeric}", grad[i]);
    }
}

#[test]
fn loss_request_errors_are_reported() {
    assert!(ms_loss_json(r#"{"angles":[0.0],"labels":[]}"#).is_err());
    assert!(ms_loss_json(r#"{"angles":[0.0],"labels":[0],"alpha":-1}"#).is_err());
    assert!(ms_loss_json(r#"{"angels":[]}"#).is_err());
}

#[test]
fn grounding_needs_an_index() {
    let err = ground_curve_json("{}").unwrap_err();
    assert!(err.contains("index"));
}

#[test]
fn train_then_ground() {
    let index: Value = serde_json::from_str(&train_index_json(r#"{"samples_per_class":20,"epochs":1}"#).unwrap()).unwrap();
    assert_eq!(index["points"].as_array().unwrap().len(), 4 * 11);
    let acc = index["accuracy"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));

    let stages: Value = serde_json::from_str(&ground_curve_json(r#"{"dim":32}"#).unwrap()).unwrap();
    let stages = stages.as_array().unwrap();
    assert_eq!(stages.len(), 10);
    assert!(stages.iter().all(|s| s["pairs"].as_array().unwrap().len() == 5));
    let again: Value = serde_json::from_str(&ground_curve_json(r#"{"dim":32}"#).unwrap()).unwrap();
    assert_eq!(&again.as_array().unwrap()[..], stages);

    let cf: Value = serde_json::from_str(&ground_curve_json(r#"{"dim":32,"preset":"concepts-first","hints":false}"#).unwrap()).unwrap();
    assert_eq!(cf.as_array().unwrap().len(), 4);
}
