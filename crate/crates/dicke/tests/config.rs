use dicke::config::{RunConfig, ZeemanSpec};
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6..1e6f64, (-300i32..300).prop_map(|e| 1.234_567_890_123_456_7 * 10f64.powi(e))]
}

fn config() -> impl Strategy<Value = RunConfig> {
    (
        0..=i64::MAX as u64,
        "[a-z/_.]{1,12}",
        prop_oneof![
            prop::sample::select(vec!["K2", "K3", "K4", "K5"]).prop_map(|s| ZeemanSpec::Preset(s.into())),
            prop::collection::vec(finite(), 1..6).prop_map(ZeemanSpec::Values),
        ],
        (finite(), finite(), finite()),
        (prop::sample::select(vec!["delta", "epsilon", "drive_ratio"]), [finite(), finite()], 0usize..1000, [finite(), finite()], 0usize..1000),
        (finite(), proptest::option::of(finite()), any::<bool>()),
    )
        .prop_map(|(seed, output, zeeman, (delta, nu, ratio), (axis, xr, nx, nr, ny), (tol, hint, jumps))| {
            let mut c = RunConfig::default();
            c.seed = seed;
            c.output = output;
            c.model.zeeman = zeeman;
            c.model.delta = delta;
            c.model.nu = nu;
            c.drive.ratio = ratio;
            c.scan.x_axis = axis.into();
            c.scan.x_range = xr;
            c.scan.nx = nx;
            c.scan.nu_range = nr;
            c.scan.ny = ny;
            c.scan.exhaustive_jumps = jumps;
            c.critical.tol = tol;
            c.fit.nu_c_hint = hint;
            c
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn toml_round_trip_is_exact(c in config()) {
        let text = c.to_toml().unwrap();
        let back = RunConfig::from_toml(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.to_toml().unwrap(), text);
    }
}

#[test]
fn example_configs_parse() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = RunConfig::load(&path).unwrap();
        cfg.plane().unwrap();
    }
}
