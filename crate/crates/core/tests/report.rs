mod common;

use common::{check_golden, eo_result, golden_result, hand_result, summary};
use stance_audit::attribute::Attribute;
use stance_audit::metrics::Metric;
use stance_audit::report::{
    emit_all_plots, emit_eo_plot, emit_tables, f1_grid, mean_abs_eo_grid, neutral_grid,
    ReportError,
};
use stance_audit::Direction;

/// The `<g class="mark">` blocks of an SVG, in document order.
fn marks(svg: &str) -> Vec<&str> {
    svg.split(r#"<g class="mark""#)
        .skip(1)
        .map(|s| &s[..s.find("</g>").unwrap()])
        .collect()
}

#[test]
fn whisker_spans_mean_plus_minus_sd() {
    let result = eo_result("d", "T", &["m"], |_, g, _| {
        if g == "AAE" {
            (0.3, 0.05)
        } else {
            (-0.3, 0.05)
        }
    });
    let svg = emit_eo_plot(&result, "T", Metric::EqualOpportunity).unwrap();
    let m = marks(&svg);
    assert_eq!(m.len(), 4);
    let aae = m
        .iter()
        .find(|s| s.contains(r#"data-group="AAE""#) && s.contains(r#"data-direction="favor""#))
        .unwrap();
    assert!(aae.contains(r#"data-lo="0.2500""#), "{aae}");
    assert!(aae.contains(r#"data-hi="0.3500""#), "{aae}");
    assert!(aae.contains("<line"));
    assert!(aae.contains(">0.30</text>"));
}

#[test]
fn zero_sd_draws_no_whisker() {
    let result = eo_result("d", "T", &["m"], |_, _, _| (0.1, 0.0));
    let svg = emit_eo_plot(&result, "T", Metric::EqualOpportunity).unwrap();
    for mark in marks(&svg) {
        assert!(!mark.contains("<line"), "{mark}");
        assert!(mark.contains("<circle"));
    }
}

#[test]
fn all_zero_means_sit_on_the_zero_line() {
    let result = eo_result("d", "T", &["m1", "m2"], |_, _, _| (0.0, 0.0));
    let svg = emit_eo_plot(&result, "T", Metric::EqualOpportunity).unwrap();
    assert_eq!(marks(&svg).len(), 8);
    assert_eq!(svg.matches(r#"class="panel""#).count(), 2);
    // Every circle lies on one of the two dashed zero lines.
    let zero_ys: Vec<&str> = svg
        .lines()
        .filter(|l| l.contains("stroke-dasharray"))
        .map(|l| l.split(r#"y1=""#).nth(1).unwrap().split('"').next().unwrap())
        .collect();
    for line in svg.lines().filter(|l| l.starts_with("<circle")) {
        let cy = line.split(r#"cy=""#).nth(1).unwrap().split('"').next().unwrap();
        assert!(zero_ys.contains(&cy), "{line}");
    }
    // Favor half above Against half.
    let favor = svg.find(r#"data-direction="favor""#).unwrap();
    let against = svg.find(r#"data-direction="against""#).unwrap();
    assert!(favor < against);
}

#[test]
fn missing_cells_are_reported() {
    let mut result = eo_result("d", "T", &["m"], |_, _, _| (0.1, 0.02));
    result
        .cells
        .retain(|c| !(c.group == "SAE" && c.direction == Direction::AgainstAsPositive));
    result.cells[0].mean = None;
    match emit_eo_plot(&result, "T", Metric::EqualOpportunity) {
        Err(ReportError::MissingCells { missing, .. }) => {
            assert_eq!(missing.len(), 2, "{missing:?}");
            assert!(missing.contains(&"m/SAE/against".to_string()));
            assert!(missing.contains(&"m/AAE/favor".to_string()));
        }
        other => panic!("expected missing cells, got {other:?}"),
    }
    assert!(matches!(
        emit_eo_plot(&result, "nope", Metric::EqualOpportunity),
        Err(ReportError::MissingCells { .. })
    ));
}

#[test]
fn f1_table_has_one_column_per_model() {
    let result = hand_result(
        "pstance",
        Attribute::Dialect,
        &["AAE", "SAE"],
        &["T"],
        vec![summary("m1", 0.8123456, 1.5), summary("m2", 0.7, 0.0)],
        vec![],
    );
    let grid = f1_grid(std::slice::from_ref(&result));
    assert_eq!(grid.to_csv(), "dataset,m1,m2\npstance,0.8123,0.7000\n");
    assert_eq!(
        neutral_grid(&[result]).to_csv(),
        "dataset,m1,m2\npstance,1.5000,0.0000\n"
    );
}

#[test]
fn mean_abs_eo_grid_is_attribute_by_model() {
    let dialect = eo_result("d", "T", &["m1", "m2"], |m, g, _| match (m, g) {
        ("m1", "AAE") => (0.2, 0.0),
        ("m1", _) => (-0.4, 0.0),
        _ => (0.0, 0.0),
    });
    let mut readability = eo_result("d", "T", &["m1"], |_, _, _| (0.1, 0.0));
    readability.metadata.attribute = Attribute::Readability;
    let grid = mean_abs_eo_grid(&[dialect, readability]);
    assert_eq!(grid.rows, vec!["dialect", "readability"]);
    assert_eq!(grid.columns, vec!["m1", "m2"]);
    assert!((grid.get("dialect", "m1").unwrap() - 0.3).abs() < 1e-12);
    assert_eq!(grid.get("dialect", "m2"), Some(0.0));
    assert!((grid.get("readability", "m1").unwrap() - 0.1).abs() < 1e-12);
    assert_eq!(grid.get("readability", "m2"), None);
    assert!(grid.to_csv().ends_with("readability,0.1000,\n"));
}

#[test]
fn empty_results_are_an_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(emit_tables(&[], dir.path()), Err(ReportError::Empty)));
}

#[test]
fn every_family_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let result = eo_result("d", "Some Target", &["m1", "m2"], |_, _, _| (0.05, 0.01));
    let tables = emit_tables(std::slice::from_ref(&result), dir.path().join("tables")).unwrap();
    let names: Vec<String> = tables
        .files
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    for stem in ["f1", "neutral", "mean_abs_eo", "fairness"] {
        for ext in ["csv", "json"] {
            assert!(names.contains(&format!("{stem}.{ext}")), "{names:?}");
        }
    }
    let (plots, skipped) = emit_all_plots(&[result], dir.path().join("plots")).unwrap();
    assert!(skipped.is_empty());
    assert_eq!(plots.len(), 1);
    assert!(plots[0].ends_with("d_dialect_some_target_eo.svg"));
}

#[test]
fn outputs_match_golden_bytes() {
    let result = golden_result();
    check_golden(
        "eo_plot.svg",
        &emit_eo_plot(&result, "T", Metric::EqualOpportunity).unwrap(),
    );
    let dir = tempfile::tempdir().unwrap();
    emit_tables(std::slice::from_ref(&result), dir.path()).unwrap();
    for name in ["f1.csv", "mean_abs_eo.csv", "fairness.csv"] {
        check_golden(name, &std::fs::read_to_string(dir.path().join(name)).unwrap());
    }
    // Rendering twice gives the same bytes.
    assert_eq!(
        emit_eo_plot(&result, "T", Metric::EqualOpportunity).unwrap(),
        emit_eo_plot(&golden_result(), "T", Metric::EqualOpportunity).unwrap()
    );
}
