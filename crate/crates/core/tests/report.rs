use std::path::Path;

use opfgap::formulation::Model;
use opfgap::ipm::SolveStatus;
use opfgap::report::{collect_series, emit_plot, render_svg, Metric, PlotSpec};
use opfgap::sweep::SweepRecord;
use proptest::prelude::*;

fn record(t: f64, model: Model, objective: Option<f64>) -> SweepRecord {
    SweepRecord {
        t,
        model,
        status: if objective.is_some() {
            SolveStatus::Optimal
        } else {
            SolveStatus::IterationLimit
        },
        objective: objective.unwrap_or(f64::NAN),
        gap_pct: None,
        iterations: 10,
        solve_time_s: None,
        pct_binding_vmag: None,
        pct_binding_flow: None,
        recovered_objective: None,
        recovered_gap_pct: None,
        recovery_dispatch_distance: None,
    }
}

#[test]
fn emitted_file_matches_rendering() {
    let dir = tempfile::tempdir().unwrap();
    let records: Vec<_> = (0..5).map(|i| record(1.0 + 0.1 * i as f64, Model::Ac, Some(100.0 + i as f64))).collect();
    let spec = PlotSpec::new(Metric::Cost, dir.path());
    let path = emit_plot(&records, &spec).unwrap();
    assert_eq!(path, dir.path().join("cost.svg"));
    assert_eq!(std::fs::read_to_string(&path).unwrap(), render_svg(&records, &spec).unwrap());
    assert!(emit_plot(&[], &spec).is_err());
}

proptest! {
    #[test]
    fn rendering_is_deterministic_and_breaks_at_failures(
        values in prop::collection::vec(prop::option::weighted(0.8, 1.0f64..1e4), 1..40),
    ) {
        let records: Vec<_> = values
            .iter()
            .enumerate()
            .map(|(i, v)| record(0.8 + 0.02 * i as f64, Model::Ac, *v))
            .collect();
        let spec = PlotSpec::new(Metric::Cost, Path::new("."));
        let series = collect_series(&records, &spec);
        let runs = values
            .split(|v| v.is_none())
            .filter(|run| !run.is_empty())
            .count();
        let segments: usize = series.iter().map(|s| s.segments.len()).sum();
        prop_assert_eq!(segments, runs);
        let points: usize = series.iter().flat_map(|s| &s.segments).map(Vec::len).sum();
        prop_assert_eq!(points, values.iter().flatten().count());
        match render_svg(&records, &spec) {
            Ok(a) => {
                prop_assert!(runs > 0);
                prop_assert_eq!(a, render_svg(&records, &spec).unwrap());
            }
            Err(_) => prop_assert_eq!(runs, 0),
        }
    }
}
