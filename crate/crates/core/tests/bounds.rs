use std::path::PathBuf;

use interbound::abstraction::{abstract_system, AbstractOptions, EventSpec};
use interbound::bounds::{compute_bound, BoundOptions, Requirement, RequirementKind};
use interbound::explorer::{Extremum, Mode};
use interbound::rts::RtsSpec;

fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(rel)
}

fn load(dir: &str) -> (RtsSpec, EventSpec) {
    let r = RtsSpec::from_json(&std::fs::read_to_string(fixture(&format!("{dir}/rts.json"))).unwrap()).unwrap();
    let e = EventSpec::from_json(&std::fs::read_to_string(fixture(&format!("{dir}/events.json"))).unwrap()).unwrap();
    (r, e)
}

fn bound(dir: &str, coarse: bool, req: &Requirement) -> Extremum {
    let (r, e) = load(dir);
    let a = abstract_system(
        &r,
        &e,
        &AbstractOptions {
            coarse,
            ..Default::default()
        },
    )
    .unwrap();
    compute_bound(&a.network, req, &BoundOptions::default()).unwrap().bound
}

#[test]
fn hole_phenomenon() {
    let req =
        Requirement::from_json(&std::fs::read_to_string(fixture("example1/simplemax.req.json")).unwrap()).unwrap();
    assert_eq!(bound("example1", false, &req).value(), Some(18));
    assert_eq!(bound("example1", true, &req).value(), Some(23));
}

#[test]
fn lf_never_exceeds_ff() {
    for mode in [Mode::Max, Mode::Min] {
        let ff = bound(
            "example3",
            false,
            &Requirement::chain(RequirementKind::Ff, "e4", "e3", "e1", mode),
        );
        let lf = bound(
            "example3",
            false,
            &Requirement::chain(RequirementKind::Lf, "e4", "e3", "e1", mode),
        );
        let (Some(f), Some(l)) = (ff.value(), lf.value()) else {
            panic!("{ff:?} {lf:?}")
        };
        if mode == Mode::Max {
            assert!(l <= f, "lf {l} ff {f}");
        } else {
            assert!(l >= 0 && f >= 0);
        }
    }
}

#[test]
fn chain_on_silent_event_is_unsatisfied() {
    let (r, mut e) = load("example1");
    e.events.push("ghost".into());
    let a = abstract_system(&r, &e, &AbstractOptions::default()).unwrap();
    let res = compute_bound(
        &a.network,
        &Requirement::chain(RequirementKind::Ff, "e1", "ghost", "e2", Mode::Max),
        &BoundOptions::default(),
    )
    .unwrap();
    assert_eq!(res.bound, Extremum::Unsatisfied);
    assert!(res.hint.is_some());
}

#[test]
fn chain_that_may_never_complete_hits_the_ceiling() {
    let (r, e) = load("example3");
    let a = abstract_system(&r, &e, &AbstractOptions::default()).unwrap();
    let err = compute_bound(
        &a.network,
        &Requirement::chain(RequirementKind::Ff, "e4", "e3", "e2", Mode::Max),
        &BoundOptions::default(),
    )
    .unwrap_err();
    assert!(err.to_string().contains("ceiling"), "{err}");
}
