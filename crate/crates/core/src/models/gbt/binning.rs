//! Candidate thresholds shared by both splitters.

/// Threshold between two adjacent observed values. Rows with `x < t` go left.
pub fn midpoint(lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) / 2.0
}

/// Sorted distinct values and their multiplicities.
pub fn distinct_counts(column: &[f64]) -> Vec<(f64, usize)> {
    let mut sorted = column.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out: Vec<(f64, usize)> = Vec::new();
    for v in sorted {
        match out.last_mut() {
            Some((last, n)) if *last == v => *n += 1,
            _ => out.push((v, 1)),
        }
    }
    out
}

/// Equal-frequency bin edges for one column, at most `n_bins - 1` of them.
///
/// When the column has no more than `n_bins` distinct values every value gets
/// its own bin and the edges are the midpoints between neighbours.
pub fn quantile_edges(column: &[f64], n_bins: usize) -> Vec<f64> {
    let distinct = distinct_counts(column);
    if distinct.len() <= n_bins {
        return distinct
            .windows(2)
            .map(|w| midpoint(w[0].0, w[1].0))
            .collect();
    }
    let n = column.len() as f64;
    let mut edges = Vec::with_capacity(n_bins - 1);
    let mut cumulative = 0usize;
    for i in 0..distinct.len() - 1 {
        cumulative += distinct[i].1;
        let quota = (edges.len() + 1) as f64 * n / n_bins as f64;
        if cumulative as f64 >= quota {
            edges.push(midpoint(distinct[i].0, distinct[i + 1].0));
            if edges.len() == n_bins - 1 {
                break;
            }
        }
    }
    edges
}

/// Bin index of `x`: the number of edges at or below it.
pub fn bin_of(edges: &[f64], x: f64) -> usize {
    edges.partition_point(|e| *e <= x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_bin_per_distinct_value() {
        let edges = quantile_edges(&[3.0, 1.0, 2.0, 2.0, 3.0], 8);
        assert_eq!(edges, vec![1.5, 2.5]);
        assert_eq!(bin_of(&edges, 1.0), 0);
        assert_eq!(bin_of(&edges, 2.0), 1);
        assert_eq!(bin_of(&edges, 3.0), 2);
    }

    #[test]
    fn equal_frequency_when_many_values() {
        let column: Vec<f64> = (0..100).map(f64::from).collect();
        let edges = quantile_edges(&column, 4);
        assert_eq!(edges, vec![24.5, 49.5, 74.5]);
        let mut counts = [0; 4];
        for &x in &column {
            counts[bin_of(&edges, x)] += 1;
        }
        assert_eq!(counts, [25; 4]);
    }

    #[test]
    fn heavy_ties_do_not_create_empty_edges() {
        let mut column = vec![0.0; 90];
        column.extend((1..=10).map(f64::from));
        let edges = quantile_edges(&column, 4);
        assert!(edges.len() <= 3);
        assert!(edges.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(edges[0], 0.5);
    }
}
