use dren_web::{memory_costs, stride_check, Demo};

fn rotate(v: &[f32], s: usize, turns: usize) -> Vec<f32> {
    let mut cur = v.to_vec();
    for _ in 0..turns {
        cur = (0..s * s).map(|p| cur[(p % s) * s + (s - 1 - p / s)]).collect();
    }
    cur
}

#[test]
fn feature_maps_rotate_and_cycle() {
    let demo = Demo::new(3);
    let (s, m) = (demo.map_size(), demo.map_count());
    let base = demo.feature_maps(0);
    let turned = demo.feature_maps(1);
    assert_eq!(base.len(), m * s * s);
    for group in 0..m / 4 {
        for slot in 0..4 {
            let dst = group * 4 + (slot + 1) % 4;
            let want = rotate(&base[(group * 4 + slot) * s * s..][..s * s], s, 1);
            let got = &turned[dst * s * s..][..s * s];
            let diff = want.iter().zip(got).map(|(a, b)| (a - b).abs()).fold(0.0f32, f32::max);
            assert!(diff < 1e-5, "group {group} slot {slot}: {diff}");
        }
    }
}

#[test]
fn logits_ignore_rotation() {
    let mut demo = Demo::new(1);
    demo.draw(4, 9);
    let l0 = demo.logits(0);
    assert_eq!(l0.len(), 10);
    for k in 1..4 {
        let d = demo.logits(k).iter().zip(&l0).map(|(a, b)| (a - b).abs()).fold(0.0f32, f32::max);
        assert!(d < 1e-5);
    }
    assert_eq!(demo.input(4), demo.input(0));
}

#[test]
fn costs_and_stride() {
    assert_eq!(memory_costs(64, 1, 20, 3, 28, 28), vec![720.0, 50176.0, 451584.0, 180.0, 200704.0, 1806336.0]);
    let ok = stride_check(9, 2, 3, 1);
    assert_eq!(ok[0], 1.0);
    assert!(ok[1] < 1e-12);
    let bad = stride_check(8, 2, 3, 1);
    assert_eq!(bad[0], 0.0);
    assert!(bad[1] > 1e-3);
    assert!(stride_check(2, 2, 3, 1)[0].is_nan());
}
