use proptest::prelude::*;
use xtree_core::data::{split_by_versions, ModuleRecord};
use xtree_core::discretize::{discretize_metric, SplitRules};
use xtree_core::experiment::{apply_plan, improvement, xtree_planner, PlannerParams};
use xtree_core::plan::{Change, Plan, Target};
use xtree_core::synthetic::{generate_project, retained_shapes};

fn ivy_split() -> xtree_core::data::TrainTestSplit {
    let shape = retained_shapes().into_iter().find(|s| s.name == "ivy").unwrap();
    let tables = generate_project(&shape, 11);
    split_by_versions(&tables, shape.test_version()).unwrap()
}

#[test]
fn applied_xtree_plans_reach_their_target_leaf() {
    let split = ivy_split();
    let tree = xtree_planner(&split.train, &PlannerParams::default()).unwrap();
    let mut planned = 0;
    for (i, module) in split.test.rows.iter().enumerate() {
        let plan = tree.plan_for_module(module);
        let Some(target) = plan.target_leaf else {
            assert!(plan.is_empty());
            continue;
        };
        let source = plan.source_leaf.unwrap();
        assert!(tree.node(target).defect_proneness <= 0.5 * tree.node(source).defect_proneness);
        let after = apply_plan(module, &plan, i as u64).unwrap();
        assert_eq!(tree.classify_to_leaf(&after), target, "module {i}");
        planned += 1;
    }
    assert!(planned > 0);
}

#[test]
fn modules_in_clean_leaves_get_no_plan() {
    let split = ivy_split();
    let tree = xtree_planner(&split.train, &PlannerParams::default()).unwrap();
    for module in &split.test.rows {
        let leaf = tree.classify_to_leaf(module);
        if tree.node(leaf).defect_proneness == 0.0 {
            assert!(tree.plan_for_module(module).is_empty());
        }
    }
}

proptest! {
    #[test]
    fn ranges_partition_the_column(
        cells in prop::collection::vec((0u32..60, 0u32..4), 8..120),
    ) {
        let values: Vec<f64> = cells.iter().map(|c| c.0 as f64).collect();
        let defects: Vec<u32> = cells.iter().map(|c| c.1).collect();
        let ranges = discretize_metric(&values, &defects, &SplitRules::default()).unwrap();
        prop_assert_eq!(ranges.iter().map(|r| r.count).sum::<usize>(), values.len());
        for pair in ranges.windows(2) {
            prop_assert_eq!(pair[0].high, pair[1].low);
        }
        for v in &values {
            prop_assert_eq!(ranges.iter().filter(|r| r.contains(*v)).count(), 1);
        }
    }

    #[test]
    fn applied_intervals_hold_and_other_metrics_stay(
        metrics in prop::collection::vec(-50.0f64..50.0, 3),
        low in -20.0f64..20.0,
        width in 0.001f64..10.0,
        seed in any::<u64>(),
    ) {
        let module = ModuleRecord { module_name: "m".into(), version: "1".into(), metrics: metrics.clone(), n_defects: 1 };
        let target = Target::Interval { low, high: low + width };
        let plan = Plan { changes: vec![Change::new(1, target, metrics[1])], ..Plan::default() };
        let after = apply_plan(&module, &plan, seed).unwrap();
        prop_assert!(after.metrics[1] > low && after.metrics[1] <= low + width);
        prop_assert_eq!(after.metrics[0], metrics[0]);
        prop_assert_eq!(after.metrics[2], metrics[2]);
    }

    #[test]
    fn improvement_never_exceeds_one_hundred(d_plus in 0usize..500, d_minus in 0usize..500) {
        match improvement(d_plus, d_minus) {
            None => prop_assert_eq!(d_plus, 0),
            Some(v) => prop_assert!(v <= 100.0),
        }
    }
}
