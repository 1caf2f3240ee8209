use sngbench::geometry::Point2;
use sngbench::harness::*;
use sngbench::map::{bundled, turn_suite};
use sngbench::metrics::MetricReport;

fn turn_ids() -> Vec<String> {
    turn_suite().into_iter().map(|g| g.scenario.id).collect()
}

#[test]
fn smallest_spec_gives_one_row() {
    let spec = ExperimentSpec::from_json(
        r#"{"scenario_ids":["straight_empty"],"arms":[{"planner":"expert","nav":"none"}],"seeds":[7]}"#,
    )
    .unwrap();
    let t = run_ablation(&spec, Some(1)).unwrap();
    assert_eq!(t.rows.len(), 1);
    let m = t.rows[0].outcome.as_ref().unwrap();
    assert_eq!(m.scenario_id, "straight_empty");
    assert!(m.pdms > 0.9);
    assert_eq!(t.aggregates.len(), 1);
    assert_eq!(t.aggregates[0].episodes, 1);
}

#[test]
fn representation_grid_is_deterministic_across_worker_counts() {
    let spec = ExperimentSpec::representation_grid(turn_ids(), vec![0]);
    let one = run_ablation(&spec, Some(1)).unwrap();
    let many = run_ablation(&spec, Some(4)).unwrap();
    assert_eq!(one, many);
    assert_eq!(
        emit_table(&one, TableFormat::Csv),
        emit_table(&many, TableFormat::Csv)
    );
    assert_eq!(
        emit_table(&one, TableFormat::Jsonl),
        emit_table(&many, TableFormat::Jsonl)
    );
    assert_eq!(emit_rows_csv(&one), emit_rows_csv(&many));

    let labels: Vec<&str> = one.aggregates.iter().map(|a| a.arm.as_str()).collect();
    assert_eq!(
        labels,
        ["no-nav", "command", "tbt", "2x20", "2x20+tbt", "4x10", "4x10+tbt", "8x5", "8x5+tbt"]
    );
    for (i, a) in one.aggregates.iter().enumerate() {
        assert_eq!(a.arm_index, i);
        assert_eq!(a.episodes + a.failed, 12);
        let pdms: Vec<f64> = one
            .rows
            .iter()
            .filter(|r| r.arm_index == i)
            .filter_map(|r| r.outcome.as_ref().ok().map(|m| m.pdms))
            .collect();
        let mean = pdms.iter().sum::<f64>() / pdms.len() as f64;
        assert!((mean - a.pdms).abs() < 1e-12);
    }
    assert_eq!(one.rows.len(), 9 * 12);
}

#[test]
fn jsonl_round_trips_into_reports() {
    let spec = ExperimentSpec::corruption_grid(
        vec!["straight_lead".into(), "curve_left_gentle".into()],
        vec![0, 1],
    );
    let t = run_ablation(&spec, None).unwrap();
    let text = emit_table(&t, TableFormat::Jsonl);
    let parsed: Vec<MetricReport> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let original: Vec<&MetricReport> = t
        .rows
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok())
        .collect();
    assert_eq!(parsed.len(), original.len());
    for (a, b) in parsed.iter().zip(original) {
        assert_eq!(a, b);
    }
    assert!(parsed.iter().all(|m| m.corruption.is_some()));
}

#[test]
fn table_shapes() {
    let spec = ExperimentSpec::corruption_grid(vec!["straight_empty".into()], vec![0]);
    let t = run_ablation(&spec, Some(2)).unwrap();
    let csv = emit_table(&t, TableFormat::Csv);
    assert_eq!(csv.lines().count(), 7);
    assert_eq!(
        csv.lines().next().unwrap(),
        "arm,nc,dac,ttc,comf,ep,pdms,ds,sr,eff,comfness"
    );

    let none = t.filter_aggregates(|_| false);
    assert_eq!(emit_table(&none, TableFormat::Csv).lines().count(), 1);
    assert_eq!(emit_table(&none, TableFormat::Markdown).lines().count(), 2);

    let one = t.filter_aggregates(|a| a.arm == "original");
    assert_eq!(emit_table(&one, TableFormat::Csv).lines().count(), 2);
    assert_eq!(emit_table(&one, TableFormat::Markdown).lines().count(), 3);
}

#[test]
fn invalid_specs_are_rejected() {
    let cases = [
        r#"{"scenario_ids":[],"arms":[{"planner":"expert","nav":"none"}],"seeds":[0]}"#,
        r#"{"scenario_ids":["straight_empty"],"arms":[{"planner":"expert","nav":"none"}],"seeds":[]}"#,
        r#"{"scenario_ids":["straight_empty"],"arms":[{"planner":"sng","nav":"sng","corruption":"left","tbt":true}],"seeds":[0]}"#,
        r#"{"scenario_ids":["straight_empty"],"arms":[{"planner":"command","nav":"command","sampling":"4x10"}],"seeds":[0]}"#,
        r#"{"scenario_ids":["straight_empty"],"arms":[{"planner":"command","nav":"sng","tbt":true}],"seeds":[0]}"#,
        r#"{"scenario_ids":["straight_empty"],"arms":[{"planner":"expert","nav":"none","label":"a"},{"planner":"expert","nav":"none","label":"a"}],"seeds":[0]}"#,
        r#"{"scenario_ids":["straight_empty"],"arms":[{"planner":"expert","nav":"none"}],"seeds":[0],"extra":1}"#,
        r#"{"scenario_ids":["straight_empty"],"arms":[{"planner":"expert","nav":"none"}],"seeds":[0],"replan_period":0}"#,
    ];
    for text in cases {
        let res = ExperimentSpec::from_json(text).and_then(|s| run_ablation(&s, Some(1)));
        assert!(
            matches!(res, Err(HarnessError::InvalidSpec(_))),
            "{text}: {res:?}"
        );
    }
    let spec = ExperimentSpec::from_json(
        r#"{"scenario_ids":["no_such_place"],"arms":[{"planner":"expert","nav":"none"}],"seeds":[0]}"#,
    )
    .unwrap();
    assert!(matches!(
        run_ablation(&spec, Some(1)),
        Err(HarnessError::UnknownScenario(_))
    ));
}

#[test]
fn episode_seeds_are_decorrelated() {
    let a = episode_seed(0, "cross_left", "4x10");
    assert_eq!(a, episode_seed(0, "cross_left", "4x10"));
    assert_ne!(a, episode_seed(0, "cross_left", "8x5"));
    assert_ne!(a, episode_seed(1, "cross_left", "4x10"));
    assert_ne!(a, episode_seed(0, "cross_right", "4x10"));
}

fn parse(svg: &str) -> roxmltree::Document<'_> {
    roxmltree::Document::parse(svg).expect("well-formed XML")
}

#[test]
fn map_only_svg_is_well_formed() {
    for id in ["straight_empty", "roundabout_n5_exit2_r15", "cross_left"] {
        let s = bundled(id).unwrap().scenario;
        let svg = render_svg(&s, &Overlays::default());
        let doc = parse(&svg);
        let root = doc.root_element();
        assert_eq!(root.tag_name().name(), "svg");
        assert_eq!(
            root.tag_name().namespace(),
            Some("http://www.w3.org/2000/svg")
        );
        assert_eq!(root.attribute("version"), Some("1.1"));
        for attr in ["width", "height", "viewBox"] {
            assert!(root.attribute(attr).is_some(), "{attr}");
        }
        let count = |class: &str| {
            doc.descendants()
                .filter(|n| n.attribute("class") == Some(class))
                .count()
        };
        assert_eq!(count("centerline"), s.graph.edge_count());
        assert_eq!(count("corridor"), s.corridor.len());
        assert_eq!(count("agent"), s.agents.len());
        assert_eq!(count("ego"), 1);
        assert_eq!(count("nav-point"), 0);
        for n in doc
            .descendants()
            .filter(|n| n.has_tag_name("polygon") || n.has_tag_name("polyline"))
        {
            let pts = n.attribute("points").unwrap();
            for pair in pts.split_whitespace() {
                let (x, y) = pair.split_once(',').unwrap();
                assert!(
                    x.parse::<f64>().unwrap().is_finite() && y.parse::<f64>().unwrap().is_finite()
                );
            }
        }
    }
}

#[test]
fn overlays_render_layers_and_markers() {
    let s = bundled("tee_right").unwrap().scenario;
    let path: Vec<Point2> = (1..=8)
        .map(|k| s.ego_start.position + Point2::new(10.0 * k as f64, 0.0))
        .collect();
    let overlays = Overlays {
        expert: Some(vec![
            s.ego_start.position,
            s.ego_start.position + Point2::new(30.0, 0.0),
        ]),
        planned: Some(vec![
            s.ego_start.position,
            s.ego_start.position + Point2::new(20.0, 1.0),
        ]),
        nav_path: Some(path),
        tbt_text: Some("Turn right in 80 m <now>".into()),
    };
    let svg = render_svg(&s, &overlays);
    let doc = parse(&svg);
    let circles = doc
        .descendants()
        .filter(|n| n.has_tag_name("circle") && n.attribute("class") == Some("nav-point"))
        .count();
    assert_eq!(circles, 8);
    for id in ["expert", "planned", "nav-path", "legend"] {
        assert!(
            doc.descendants().any(|n| n.attribute("id") == Some(id)),
            "{id}"
        );
    }
    let tbt = doc
        .descendants()
        .find(|n| n.attribute("class") == Some("tbt"))
        .unwrap();
    assert_eq!(tbt.text(), Some("Turn right in 80 m <now>"));
    assert_eq!(svg, render_svg(&s, &overlays));
}
