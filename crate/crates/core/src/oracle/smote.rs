use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{MetricTable, MinMax, ModuleRecord};
use crate::error::{Error, Result};

pub const DEFAULT_K: usize = 5;

/// Rebalances `table` so that minority/majority ≈ `target_ratio`, adding
/// interpolated minority rows and dropping random majority rows.
/// Kept rows stay in their original order; synthetic rows follow.
pub fn smote(table: &MetricTable, k: usize, target_ratio: f64, seed: u64) -> Result<MetricTable> {
    if k == 0 {
        return Err(Error::InvalidInput("smote needs k >= 1".into()));
    }
    if !(target_ratio > 0.0 && target_ratio <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "target ratio {target_ratio} outside (0, 1]"
        )));
    }
    let (pos, neg): (Vec<usize>, Vec<usize>) =
        (0..table.len()).partition(|&i| table.rows[i].is_defective());
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::SingleClass("smote"));
    }
    let minority_defective = pos.len() < neg.len();
    let (minority, majority) = if minority_defective { (pos, neg) } else { (neg, pos) };
    let (m, big) = (minority.len(), majority.len());

    let total = (m + big) as f64;
    let keep_major = ((total / (1.0 + target_ratio)).round() as usize).min(big);
    let want_minor = ((target_ratio * keep_major as f64).round() as usize).max(m);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kept: Vec<usize> = sample(&mut rng, big, keep_major)
        .into_iter()
        .map(|i| majority[i])
        .collect();
    kept.extend(&minority);
    kept.sort_unstable();

    let norm = MinMax::fit(table);
    let neighbors: Vec<Vec<usize>> = minority
        .iter()
        .map(|&a| {
            let mut d: Vec<(f64, usize)> = minority
                .iter()
                .filter(|&&b| b != a)
                .map(|&b| (norm.distance(&table.rows[a].metrics, &table.rows[b].metrics), b))
                .collect();
            d.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            d.truncate(k);
            d.into_iter().map(|(_, b)| b).collect()
        })
        .collect();

    let mut rows: Vec<ModuleRecord> = kept.iter().map(|&i| table.rows[i].clone()).collect();
    let label = u32::from(minority_defective);
    for s in 0..want_minor - m {
        let which = rng.random_range(0..m);
        let a = &table.rows[minority[which]];
        let b = match neighbors[which].as_slice() {
            [] => a,
            near => &table.rows[near[rng.random_range(0..near.len())]],
        };
        let u: f64 = rng.random();
        let metrics = a
            .metrics
            .iter()
            .zip(&b.metrics)
            .map(|(x, y)| x + u * (y - x))
            .collect();
        rows.push(ModuleRecord {
            module_name: format!("synthetic-{s}"),
            version: a.version.clone(),
            metrics,
            n_defects: label,
        });
    }
    Ok(MetricTable::new(table.schema.clone(), rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{MetricSchema, N_METRICS};

    fn table(defective: usize, clean: usize, seed: u64) -> MetricTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..defective + clean)
            .map(|i| ModuleRecord {
                module_name: format!("m{i}"),
                version: "1".into(),
                metrics: (0..N_METRICS).map(|_| rng.random_range(0.0..50.0)).collect(),
                n_defects: u32::from(i < defective) * 2,
            })
            .collect();
        MetricTable::new(MetricSchema::jureczko(), rows)
    }

    #[test]
    fn balances_classes() {
        let t = table(10, 90, 1);
        let s = smote(&t, 5, 1.0, 4).unwrap();
        assert_eq!(s.n_defective(), 50);
        assert_eq!(s.len(), 100);
        let flipped = smote(&table(80, 20, 2), 5, 1.0, 4).unwrap();
        assert_eq!(flipped.n_defective(), 50);
        assert_eq!(flipped.len() - flipped.n_defective(), 50);
    }

    #[test]
    fn synthetic_rows_lie_between_parents() {
        let t = table(10, 90, 3);
        let minority: Vec<&ModuleRecord> = t.rows.iter().filter(|r| r.is_defective()).collect();
        let s = smote(&t, 5, 1.0, 9).unwrap();
        for row in s.rows.iter().filter(|r| r.module_name.starts_with("synthetic")) {
            assert_eq!(row.n_defects, 1);
            // some pair of minority rows brackets every coordinate at one u
            let found = minority.iter().any(|a| {
                minority.iter().any(|b| {
                    let m = (0..N_METRICS)
                        .find(|&m| (b.metrics[m] - a.metrics[m]).abs() > 1e-9);
                    let Some(m) = m else {
                        return row.metrics == a.metrics;
                    };
                    let u = (row.metrics[m] - a.metrics[m]) / (b.metrics[m] - a.metrics[m]);
                    (0.0..1.0).contains(&u)
                        && (0..N_METRICS).all(|j| {
                            let want = a.metrics[j] + u * (b.metrics[j] - a.metrics[j]);
                            (row.metrics[j] - want).abs() < 1e-9
                        })
                })
            });
            assert!(found, "{row:?}");
        }
    }

    #[test]
    fn identical_parents_give_duplicates() {
        let mut t = table(2, 10, 5);
        let first = t.rows[0].metrics.clone();
        t.rows[1].metrics = first.clone();
        let s = smote(&t, 1, 1.0, 1).unwrap();
        let synthetic: Vec<_> = s.rows.iter().filter(|r| r.module_name.starts_with("synthetic")).collect();
        assert!(!synthetic.is_empty());
        assert!(synthetic.iter().all(|r| r.metrics == first));
    }

    #[test]
    fn rejects_single_class_and_bad_k() {
        assert!(smote(&table(0, 10, 1), 5, 1.0, 1).is_err());
        assert!(smote(&table(3, 10, 1), 0, 1.0, 1).is_err());
    }

    #[test]
    fn seeded() {
        let t = table(10, 90, 6);
        assert_eq!(smote(&t, 5, 1.0, 2).unwrap(), smote(&t, 5, 1.0, 2).unwrap());
    }
}
