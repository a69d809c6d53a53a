use dren::network::{presets, LayerSpec, Model};
use dren_cli::checkpoint::{decode, encode, MAGIC, VERSION};
use dren_cli::config::{Precision, RunConfig};
use dren_cli::error::CliError;
use dren_cli::sweep::{parse_depths, sweep_spec};

fn bits(m: &Model<f32>) -> Vec<Vec<u32>> {
    m.layers().iter().map(|l| l.blob().iter().map(|v| v.to_bits()).collect()).collect()
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    for spec in [presets::z2cnn_dren(2, 10), presets::z2cnn_plain(4, 10), presets::nin_dren(10)] {
        let m = Model::<f32>::build(spec, 9).unwrap();
        let back = decode(&encode(&m)).unwrap();
        assert_eq!(back.spec(), m.spec());
        assert_eq!(bits(&back), bits(&m));
        assert_eq!(encode(&back), encode(&m));
    }
}

#[test]
fn checkpoint_header_layout() {
    let m = Model::<f32>::build(presets::dren_small([1, 16, 16], 2, 3), 1).unwrap();
    let bytes = encode(&m);
    assert_eq!(&bytes[..4], MAGIC);
    assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), VERSION);
    let dims: Vec<u32> = (0..3).map(|i| u32::from_le_bytes(bytes[8 + 4 * i..12 + 4 * i].try_into().unwrap())).collect();
    assert_eq!(dims, [1, 16, 16]);
    // first layer record: cycle code 0, kernel 3, stride 1, pad 0, width 2
    assert_eq!(bytes[24], 0);
    assert_eq!(u32::from_le_bytes(bytes[25..29].try_into().unwrap()), 3);
    assert_eq!(u32::from_le_bytes(bytes[37..41].try_into().unwrap()), 2);
}

#[test]
fn checkpoint_rejects_bad_input() {
    let m = Model::<f32>::build(presets::dren_small([1, 16, 16], 2, 3), 1).unwrap();
    let mut bytes = encode(&m);
    assert!(decode(&bytes[..bytes.len() - 1]).is_err());
    bytes[4] = 9;
    let err = decode(&bytes).unwrap_err();
    assert!(err.to_string().contains("version 9"), "{err}");
    assert!(decode(b"NOPE").is_err());
}

#[test]
fn config_parses_and_names_bad_lines() {
    let cfg = RunConfig::parse("# comment\nlr = 0.1\n\nlayer = cycle w=2 k=3\nlayer = global_avg_pool\nprecision = double\n").unwrap();
    assert_eq!(cfg.lr, 0.1);
    assert_eq!(cfg.layers, vec![LayerSpec::cycle(2, 3), LayerSpec::global_avg_pool()]);
    assert_eq!(cfg.precision, Precision::Double);
    assert_eq!(RunConfig::parse(&cfg.to_string()).unwrap(), cfg);

    match RunConfig::parse("lr = 0.1\nlearning_rate = 3\n") {
        Err(CliError::Config { line, key, .. }) => assert_eq!((line, key.as_str()), (2, "learning_rate")),
        other => panic!("{other:?}"),
    }
    assert!(matches!(RunConfig::parse("epochs = many"), Err(CliError::Config { line: 1, .. })));
    assert!(RunConfig::parse("just words").is_err());
}

#[test]
fn overrides_win() {
    let mut cfg = RunConfig::parse("epochs = 4\n").unwrap();
    cfg.set("epochs", "7").unwrap();
    assert_eq!(cfg.train_config().epochs, 7);
}

#[test]
fn sweep_stacks_build() {
    for d in 1..=7 {
        let spec = sweep_spec(d, [1, 16, 16], 2, 10);
        let tied = spec.layers.iter().filter(|l| l.kind.is_tied()).count();
        assert_eq!(tied, d);
        let m = Model::<f32>::build(spec, 0).unwrap();
        assert_eq!(m.classes(), Some(10));
        assert!(m.warnings().is_empty());
    }
    assert_eq!(parse_depths("2..4"), Some(vec![2, 3, 4]));
    assert_eq!(parse_depths("5"), Some(vec![5]));
    assert_eq!(parse_depths("0..3"), None);
}
