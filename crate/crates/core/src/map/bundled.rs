//! Built-in scenarios addressable by id.

use super::generators::*;
use super::MapError;

type Entry = (&'static str, fn() -> Result<GeneratedScenario, MapError>);

fn straight_entries() -> Vec<Entry> {
    vec![
        ("straight_empty", || {
            make_straight_scenario("straight_empty", 200.0, StraightTraffic::Empty)
        }),
        ("straight_oncoming", || {
            make_straight_scenario("straight_oncoming", 200.0, StraightTraffic::Oncoming)
        }),
        ("straight_lead", || {
            make_straight_scenario("straight_lead", 200.0, StraightTraffic::FasterLead)
        }),
        ("curve_left_gentle", || {
            make_curve_scenario("curve_left_gentle", 250.0, 0.35, StraightTraffic::Empty)
        }),
        ("curve_right_gentle", || {
            make_curve_scenario(
                "curve_right_gentle",
                250.0,
                -0.35,
                StraightTraffic::Oncoming,
            )
        }),
        ("s_bend_gentle", || {
            make_s_bend_scenario("s_bend_gentle", 300.0, 20f64.to_radians())
        }),
    ]
}

fn turn_entries() -> Vec<Entry> {
    vec![
        ("roundabout_n4_exit0_r15", || {
            make_roundabout_scenario(4, 0, 15.0)
        }),
        ("roundabout_n4_exit1_r15", || {
            make_roundabout_scenario(4, 1, 15.0)
        }),
        ("roundabout_n4_exit2_r15", || {
            make_roundabout_scenario(4, 2, 15.0)
        }),
        ("roundabout_n4_exit3_r15", || {
            make_roundabout_scenario(4, 3, 15.0)
        }),
        ("roundabout_n3_exit0_r15", || {
            make_roundabout_scenario(3, 0, 15.0)
        }),
        ("roundabout_n3_exit1_r15", || {
            make_roundabout_scenario(3, 1, 15.0)
        }),
        ("roundabout_n5_exit2_r15", || {
            make_roundabout_scenario(5, 2, 15.0)
        }),
        ("cross_right", || make_intersection_scenario(4, 0)),
        ("cross_straight", || make_intersection_scenario(4, 1)),
        ("cross_left", || make_intersection_scenario(4, 2)),
        ("tee_right", || make_intersection_scenario(3, 0)),
        ("tee_left", || make_intersection_scenario(3, 1)),
    ]
}

fn extra_entries() -> Vec<Entry> {
    vec![
        ("bvr_lane_change_100", || {
            make_bvr_lane_change_scenario(100.0)
        }),
        ("parked_bypass", || {
            make_parked_bypass_scenario("parked_bypass")
        }),
    ]
}

const MULTI_EXIT: [&str; 6] = [
    "cross_right",
    "cross_straight",
    "cross_left",
    "tee_right",
    "tee_left",
    "roundabout_n4_exit1_r15",
];

/// Ids of every bundled scenario, suites first.
pub fn bundled_ids() -> Vec<&'static str> {
    turn_entries()
        .into_iter()
        .chain(straight_entries())
        .chain(extra_entries())
        .map(|(id, _)| id)
        .collect()
}

/// Builds a bundled scenario by id; `None` for unknown ids.
pub fn bundled(id: &str) -> Option<GeneratedScenario> {
    turn_entries()
        .into_iter()
        .chain(straight_entries())
        .chain(extra_entries())
        .find(|(k, _)| *k == id)
        .map(|(_, f)| f().expect("bundled scenario parameters are valid"))
}

fn collect(ids: &[&str]) -> Vec<GeneratedScenario> {
    ids.iter()
        .map(|id| bundled(id).expect("known id"))
        .collect()
}

/// The 12 junction scenarios: seven roundabout exits, five intersection turns.
pub fn turn_suite() -> Vec<GeneratedScenario> {
    let ids: Vec<&str> = turn_entries().into_iter().map(|(k, _)| k).collect();
    collect(&ids)
}

/// Six straight or gently curved roads with and without traffic.
pub fn straight_suite() -> Vec<GeneratedScenario> {
    let ids: Vec<&str> = straight_entries().into_iter().map(|(k, _)| k).collect();
    collect(&ids)
}

/// Six scenarios with a junction offering several exits.
pub fn multi_exit_suite() -> Vec<GeneratedScenario> {
    collect(&MULTI_EXIT)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_unique_and_match() {
        let ids = bundled_ids();
        let set: std::collections::BTreeSet<_> = ids.iter().collect();
        assert_eq!(set.len(), ids.len());
        for id in ids {
            let g = bundled(id).unwrap();
            assert_eq!(g.scenario.id, id);
            assert!(g.scenario.graph.is_connected(), "{id}");
            g.scenario.validate().unwrap();
        }
        assert!(bundled("nope").is_none());
    }

    #[test]
    fn suite_sizes() {
        assert_eq!(turn_suite().len(), 12);
        assert_eq!(straight_suite().len(), 6);
        assert_eq!(multi_exit_suite().len(), 6);
    }
}
