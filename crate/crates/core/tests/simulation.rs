use sfcsim::harness::{read_trace, write_trace};
use sfcsim::scenario::builtin_case;
use sfcsim::simulator::{Event, EventKind, SimConfig, Simulator};
use sfcsim::{Error, SimResult};

fn run(n: usize) -> SimResult {
    let sc = builtin_case(n).unwrap();
    sc.run_with_stats(&sc.config).unwrap()
}

#[test]
fn fault_window_is_hit_exactly() {
    let r = run(4);
    let tr = &r.trace;
    let first = tr.fault.iter().position(|&f| f).unwrap();
    let last = tr.fault.iter().rposition(|&f| f).unwrap();
    // the sample at an event time holds the state just before the event
    assert!((tr.time[first] - 1.001).abs() < 1e-12, "{}", tr.time[first]);
    assert!((tr.time[last] - 1.270).abs() < 1e-12, "{}", tr.time[last]);
    assert!((tr.time[tr.len() - 1] - 3.27).abs() < 1e-12);
}

#[test]
fn limiter_switches_are_located() {
    let r = run(3);
    let sw = &r.stats.mode_switches;
    assert!(sw.len() >= 2, "{sw:?}");
    assert_eq!(sw[0], 1.0);
    assert!((sw[sw.len() - 1] - 1.12).abs() < 1e-12);
    assert_eq!(run(1).stats.mode_switches, Vec::<f64>::new());
}

#[test]
fn trace_csv_round_trip() {
    let r = run(3);
    let mut buf = Vec::new();
    write_trace(&r.trace, &mut buf).unwrap();
    let back = read_trace(buf.as_slice()).unwrap();
    assert_eq!(back.len(), r.trace.len());
    for (a, b) in [(&back.u_mag, &r.trace.u_mag), (&back.i_mag, &r.trace.i_mag), (&back.delta, &r.trace.delta)] {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= 1e-12);
        }
    }
    assert_eq!(back.limiting, r.trace.limiting);
    assert_eq!(back.fault, r.trace.fault);
}

#[test]
fn post_fault_recovery() {
    for n in 1..=4 {
        let r = run(n);
        let tr = &r.trace;
        let u0 = tr.u_mag[0];
        let last = tr.u_mag[tr.len() - 1];
        assert!((last - u0).abs() < 0.02, "case {n}: {u0} -> {last}");
        assert!(!tr.limiting[tr.len() - 1]);
    }
}

#[test]
fn bolted_fault_event_is_rejected() {
    let sc = builtin_case(1).unwrap();
    let lf = sc.loadflow().unwrap();
    let feeder = lf.feeder(&sc.feeder_template().unwrap());
    let events = vec![Event {
        time: 0.5,
        kind: EventKind::ApplyFault {
            z_fault: num_complex::Complex64::new(0.0, 0.0),
            pos_km: 10.0,
        },
    }];
    let cfg = SimConfig {
        t_end: 1.0,
        ..SimConfig::default()
    };
    let res = Simulator::new(sc.plant().unwrap(), feeder, lf.controller_init, events, cfg).and_then(|s| s.run());
    assert_eq!(res.unwrap_err(), Error::BoltedFault);
}
