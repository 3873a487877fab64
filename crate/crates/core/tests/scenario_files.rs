use sfcsim::scenario::{builtin_case, load_scenario, load_scenario_with_base, to_toml};
use std::path::PathBuf;

fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

#[test]
fn shipped_files_match_builtin_cases() {
    for n in 1..=4 {
        let path = scenario_dir().join(format!("case{n}.toml"));
        let text = std::fs::read_to_string(&path).unwrap();
        let sc = load_scenario(&text).unwrap();
        let builtin = builtin_case(n).unwrap();
        // percent leakages parse to within one ulp of the builtin values
        assert_eq!(sc.faults, builtin.faults, "{}", path.display());
        assert_eq!(sc.load, builtin.load);
        assert_eq!(sc.feeder, builtin.feeder);
        assert_eq!(sc.gains, builtin.gains);
        assert_eq!(sc.config, builtin.config);
        assert!((sc.x_t().unwrap() - builtin.x_t().unwrap()).abs() < 1e-15);
        let (a, b) = (sc.rfc().unwrap(), builtin.rfc().unwrap());
        assert!((a.xq_m - b.xq_m).abs() < 1e-15 && (a.xq_g - b.xq_g).abs() < 1e-15);
    }
}

#[test]
fn empty_overlay_keeps_base() {
    let base = builtin_case(1).unwrap();
    assert_eq!(load_scenario_with_base("", base.clone()).unwrap(), base);
    assert_eq!(load_scenario("base_case = 1").unwrap(), base);
}

#[test]
fn single_field_override() {
    let sc = load_scenario_with_base("[control]\ni_max = \"1.5 pu\"\n", builtin_case(2).unwrap()).unwrap();
    assert_eq!(sc.gains.i_max, 1.5);
    let mut expect = builtin_case(2).unwrap();
    expect.gains.i_max = 1.5;
    assert_eq!(sc, expect);
}

#[test]
fn duplicate_key_is_named() {
    let e = load_scenario("[load]\np = \"1 MW\"\np = \"2 MW\"\n").unwrap_err().to_string();
    assert!(e.contains("duplicate") && e.contains('p'), "{e}");
}

#[test]
fn serialization_round_trip_with_modifications() {
    let mut sc = builtin_case(4).unwrap();
    sc.name = "custom".into();
    sc.gains.anti_windup_voltage = true;
    sc.load.q_mvar = -0.3;
    sc.theta_50 = 0.125;
    sc.measured = Some("recording.csv".into());
    sc.faults.push(sfcsim::scenario::FaultSpec {
        start_s: 2.0,
        ..sc.faults[0]
    });
    sc.config.t_end = 5.0;
    assert_eq!(load_scenario(&to_toml(&sc)).unwrap(), sc);
}

#[test]
fn invariant_violations_reported_before_simulation() {
    for text in [
        "[simulation]\nt_end = \"0 s\"\n",
        "[control]\nt_c = \"-1 ms\"\n",
        "[feeder]\nload_position = \"-3 km\"\n",
        "base_case = 1\n[[fault]]\nimpedance = \"0.1j pu\"\nposition = \"5 km\"\nduration = \"10 s\"\n[simulation]\nt_end = \"4 s\"\n",
        "[rfc]\nxq_motor = \"0 pu\"\ninclude_transformer_leakage = false\n",
    ] {
        assert!(load_scenario(text).is_err(), "{text}");
    }
}
