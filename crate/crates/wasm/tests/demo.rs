use cskit_wasm::*;
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn align_reports_ops_and_rates() {
    let r = parse(align_texts("我 想 喝 COFFEE", "我 想 喝 咖 啡").unwrap());
    assert_eq!(r["n_ref"], 4);
    assert_eq!(r["sub"], 1);
    assert_eq!(r["ins"], 1);
    assert_eq!(r["del"], 0);
    assert!((r["mer"].as_f64().unwrap() - 50.0).abs() < 1e-9);
    let ops = r["ops"].as_array().unwrap();
    assert_eq!(ops.len(), 5);
    assert_eq!(ops[0]["kind"], "match");
    assert_eq!(ops[0]["ref"]["lang"], "mandarin");
    let english = r["per_lang"]
        .as_array()
        .unwrap()
        .iter()
        .find(|l| l["lang"] == "english")
        .unwrap();
    assert_eq!(english["rate"], 100.0);
}

#[test]
fn empty_reference_has_no_rate() {
    let r = parse(align_texts("", "OK").unwrap());
    assert!(r["mer"].is_null());
    assert_eq!(r["ins"], 1);
}

#[test]
fn english_weight_flips_slot() {
    let systems = "我 要 OK\n我 要 欧\n我 欧";
    let flat = parse(rover_vote(systems, 1.0, 1.0).unwrap());
    assert_eq!(flat["fused"], "我要欧");
    let boosted = parse(rover_vote(systems, 4.0, 1.0).unwrap());
    assert_eq!(boosted["fused"], "我要OK");
    for slot in boosted["slots"].as_array().unwrap() {
        let votes = slot["votes"].as_array().unwrap();
        let total: u64 = votes.iter().map(|v| v["count"].as_u64().unwrap()).sum();
        assert_eq!(total, 3);
        assert_eq!(votes.iter().filter(|v| v["winner"] == true).count(), 1);
    }
}

#[test]
fn vote_needs_input() {
    assert!(rover_vote("  \n", 1.0, 1.0).is_err());
    assert!(rover_vote("OK", -1.0, 1.0).is_err());
}

#[test]
fn sweep_curve() {
    let r = parse(rover_sweep(0, 200, 1.0, 5.0, 1.0).unwrap());
    let rows = r["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    assert_eq!(r["best"], 4.0);
    assert_eq!(r["systems"].as_array().unwrap().len(), 8);
    assert!(rover_sweep(0, 10, 1.0, 5.0, 0.0).is_err());
}

#[test]
fn augment_shapes_and_determinism() {
    let cfg = DemoAugment {
        speed: 0.9,
        freq_masks: 2,
        max_freq_width: 10,
        time_masks: 2,
        max_time_width: 20,
        warp_window: 5,
        mean_fill: false,
        seed: 7,
    };
    let a = augment_demo(&cfg).unwrap();
    assert_eq!(a, augment_demo(&cfg).unwrap());
    let r = parse(a);
    assert_eq!(r["samples"], 15999 * 10 / 9 + 1);
    assert_eq!(r["clean"]["dims"], 80);
    assert_eq!(r["clean"]["frames"], r["augmented"]["frames"]);
    let frames = r["clean"]["frames"].as_u64().unwrap() as usize;
    assert_eq!(
        r["augmented"]["values"].as_array().unwrap().len(),
        frames * 80
    );
    assert_eq!(r["freq_masks"].as_array().unwrap().len(), 2);

    let too_wide = DemoAugment {
        max_freq_width: 81,
        ..cfg
    };
    assert!(augment_demo(&too_wide).is_err());
}

#[test]
fn demo_signal_is_bounded() {
    let w = demo_signal(3);
    assert_eq!(w.len(), 16000);
    assert!(w.samples.iter().all(|s| s.abs() < 1.0));
}
