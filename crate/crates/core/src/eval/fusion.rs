//! Combine two rankings of the same items by their mean reciprocal rank.

use std::collections::{HashMap, HashSet};
use std::hash::Hash;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FusionOrder {
    /// Larger mean reciprocal rank first (rank 1 in both inputs leads).
    #[default]
    Descending,
    /// Smaller mean reciprocal rank first.
    Ascending,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedItem<K> {
    pub key: K,
    pub rank_a: usize,
    pub rank_b: usize,
    /// (1/rank_a + 1/rank_b) / 2
    pub r_avg: f64,
}

/// 1-based ranks for `scores`; ascending puts the smallest score at rank 1.
/// Equal scores keep input order.
pub fn ranks_by_score(scores: &[f64], ascending: bool) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    if ascending {
        order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    } else {
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    }
    let mut ranks = vec![0; scores.len()];
    for (pos, &i) in order.iter().enumerate() {
        ranks[i] = pos + 1;
    }
    ranks
}

fn check_ranking<K: Eq + Hash>(name: &str, ranking: &[(K, usize)]) -> Result<()> {
    let mut seen = HashSet::new();
    for (_, r) in ranking {
        if *r == 0 || *r > ranking.len() || !seen.insert(*r) {
            return Err(Error::Coverage(format!(
                "ranking {name} must use distinct ranks 1..={}, found {r}",
                ranking.len()
            )));
        }
    }
    Ok(())
}

/// Re-rank items by `(1/i + 1/j) / 2`, where `i` and `j` are the item's ranks in
/// `rank_a` and `rank_b`. Ties are broken by `rank_a`.
pub fn fuse_ranks<K: Eq + Hash + Clone>(rank_a: &[(K, usize)], rank_b: &[(K, usize)], order: FusionOrder) -> Result<Vec<FusedItem<K>>> {
    if rank_a.len() != rank_b.len() {
        return Err(Error::Coverage(format!(
            "ranking sizes differ: {} vs {}",
            rank_a.len(),
            rank_b.len()
        )));
    }
    check_ranking("a", rank_a)?;
    check_ranking("b", rank_b)?;
    let b: HashMap<&K, usize> = rank_b.iter().map(|(k, r)| (k, *r)).collect();
    if b.len() != rank_b.len() {
        return Err(Error::Coverage("ranking b lists an item twice".into()));
    }

    let mut fused = rank_a
        .iter()
        .map(|(key, i)| {
            let j = *b
                .get(key)
                .ok_or_else(|| Error::Coverage("an item of ranking a is missing from ranking b".into()))?;
            Ok(FusedItem {
                key: key.clone(),
                rank_a: *i,
                rank_b: j,
                r_avg: (1.0 / *i as f64 + 1.0 / j as f64) / 2.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    // Compare (i + j) / 2ij exactly so equal averages from different rank
    // pairs (say 2,6 and 3,3) tie and fall through to rank_a.
    let exact = |x: &FusedItem<K>, y: &FusedItem<K>| {
        let (i1, j1, i2, j2) = (x.rank_a as u128, x.rank_b as u128, y.rank_a as u128, y.rank_b as u128);
        ((i1 + j1) * i2 * j2).cmp(&((i2 + j2) * i1 * j1))
    };
    fused.sort_by(|x, y| {
        let primary = match order {
            FusionOrder::Descending => exact(x, y).reverse(),
            FusionOrder::Ascending => exact(x, y),
        };
        primary.then(x.rank_a.cmp(&y.rank_a))
    });
    Ok(fused)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_values() {
        let f = fuse_ranks(&[("x", 1)], &[("x", 1)], FusionOrder::Descending).unwrap();
        assert_eq!(f[0].r_avg, 1.0);
        let f = fuse_ranks(&[("x", 2), ("y", 1), ("z", 3), ("w", 4)], &[("x", 4), ("y", 1), ("z", 2), ("w", 3)], FusionOrder::Descending).unwrap();
        let x = f.iter().find(|i| i.key == "x").unwrap();
        assert_eq!(x.r_avg, 0.375);
    }

    #[test]
    fn three_item_example() {
        // (1,3) -> 2/3, (2,1) -> 3/4, (3,2) -> 5/12
        let a = [("t1", 1), ("t2", 2), ("t3", 3)];
        let b = [("t1", 3), ("t2", 1), ("t3", 2)];
        let f = fuse_ranks(&a, &b, FusionOrder::Descending).unwrap();
        let keys: Vec<_> = f.iter().map(|i| i.key).collect();
        assert_eq!(keys, vec!["t2", "t1", "t3"]);
        assert_eq!(f[0].r_avg, 0.75);
        assert!((f[1].r_avg - 2.0 / 3.0).abs() < 1e-15);
        assert!((f[2].r_avg - 5.0 / 12.0).abs() < 1e-15);
        let asc = fuse_ranks(&a, &b, FusionOrder::Ascending).unwrap();
        assert_eq!(asc.iter().map(|i| i.key).collect::<Vec<_>>(), vec!["t3", "t1", "t2"]);
    }

    #[test]
    fn ties_break_on_first_ranking() {
        // (1,3) and (3,1) share r_avg
        let f = fuse_ranks(&[("p", 3), ("q", 1), ("r", 2)], &[("p", 1), ("q", 3), ("r", 2)], FusionOrder::Descending).unwrap();
        assert_eq!(f.iter().map(|i| i.key).collect::<Vec<_>>(), vec!["q", "p", "r"]);
    }

    #[test]
    fn equal_averages_from_different_pairs_tie() {
        // 1/2 + 1/6 and 1/3 + 1/3 are both 2/3.
        let f = fuse_ranks(&[("x", 3), ("y", 2), ("z", 1), ("w", 4), ("u", 5), ("v", 6)], &[("x", 3), ("y", 6), ("z", 1), ("w", 2), ("u", 4), ("v", 5)], FusionOrder::Descending).unwrap();
        let keys: Vec<_> = f.iter().map(|i| i.key).collect();
        assert_eq!(&keys[..4], &["z", "w", "y", "x"]);
    }

    #[test]
    fn coverage_errors() {
        assert!(matches!(fuse_ranks(&[("x", 1)], &[("y", 1)], FusionOrder::Descending), Err(Error::Coverage(_))));
        assert!(matches!(fuse_ranks(&[("x", 1), ("y", 1)], &[("x", 1), ("y", 2)], FusionOrder::Descending), Err(Error::Coverage(_))));
        assert!(matches!(fuse_ranks(&[("x", 1)], &[("x", 1), ("y", 2)], FusionOrder::Descending), Err(Error::Coverage(_))));
    }

    #[test]
    fn ranks_from_scores() {
        assert_eq!(ranks_by_score(&[0.3, 0.1, 0.2, 0.1], true), vec![4, 1, 3, 2]);
        assert_eq!(ranks_by_score(&[0.3, 0.1, 0.2], false), vec![1, 3, 2]);
    }
}
