use std::cmp::Ordering;

use rayon::prelude::*;

use super::RowMatrix;
use crate::error::{Error, Result};

/// Majority vote among the `k` nearest training rows (Euclidean). Equal
/// distances go to the lower training row; tied votes to the smaller class.
pub fn knn_classify(
    train: &RowMatrix,
    train_labels: &[usize],
    test: &RowMatrix,
    k: usize,
) -> Result<Vec<usize>> {
    if train.rows() == 0 {
        return Err(Error::Contract("k-NN needs a non-empty training set".into()));
    }
    if train_labels.len() != train.rows() {
        return Err(Error::Contract(format!(
            "{} labels for {} training rows",
            train_labels.len(),
            train.rows()
        )));
    }
    if k == 0 || k > train.rows() {
        return Err(Error::Contract(format!(
            "k = {k} outside [1, {}]",
            train.rows()
        )));
    }
    if test.cols() != train.cols() {
        return Err(Error::Contract(format!(
            "test rows have {} features, training rows {}",
            test.cols(),
            train.cols()
        )));
    }
    let classes = train_labels.iter().copied().max().unwrap_or(0) + 1;

    let predictions = (0..test.rows())
        .into_par_iter()
        .map(|t| {
            let query = test.row(t);
            let mut dist: Vec<(f64, usize)> = (0..train.rows())
                .map(|i| (squared_distance(query, train.row(i)), i))
                .collect();
            let nearest = |a: &(f64, usize), b: &(f64, usize)| -> Ordering {
                a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
            };
            if k < dist.len() {
                dist.select_nth_unstable_by(k - 1, nearest);
                dist.truncate(k);
            }
            let mut votes = vec![0usize; classes];
            for &(_, i) in &dist {
                votes[train_labels[i]] += 1;
            }
            let mut best = 0;
            for (c, &v) in votes.iter().enumerate() {
                if v > votes[best] {
                    best = c;
                }
            }
            best
        })
        .collect();
    Ok(predictions)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::DetRng;

    /// Full sort of all distances; independent of the selection path above.
    fn brute_force(train: &[Vec<f64>], labels: &[usize], query: &[f64], k: usize) -> usize {
        let mut d: Vec<(f64, usize)> = train
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let s: f64 = r.iter().zip(query).map(|(a, b)| (a - b).powi(2)).sum();
                (s.sqrt(), i)
            })
            .collect();
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut votes = std::collections::BTreeMap::new();
        for &(_, i) in &d[..k] {
            *votes.entry(labels[i]).or_insert(0) += 1;
        }
        let top = *votes.values().max().unwrap();
        *votes.iter().find(|(_, &v)| v == top).unwrap().0
    }

    fn two_clusters(seed: u64, per_class: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = DetRng::new(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for class in 0..2 {
            let center = 10.0 * class as f64;
            for _ in 0..per_class {
                rows.push(vec![center + rng.normal(), rng.normal()]);
                labels.push(class);
            }
        }
        (rows, labels)
    }

    #[test]
    fn single_point_and_exact_match() {
        let train = RowMatrix::from_rows(&[vec![0.0, 0.0]]).unwrap();
        let test = RowMatrix::from_rows(&[vec![5.0, -3.0]]).unwrap();
        assert_eq!(knn_classify(&train, &[1], &test, 1).unwrap(), vec![1]);

        let train = RowMatrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let test = RowMatrix::from_rows(&[vec![1.0]]).unwrap();
        assert_eq!(knn_classify(&train, &[0, 2, 1], &test, 1).unwrap(), vec![2]);
    }

    #[test]
    fn ties() {
        // equidistant neighbours: lower training row wins
        let train = RowMatrix::from_rows(&[vec![-1.0], vec![1.0]]).unwrap();
        let test = RowMatrix::from_rows(&[vec![0.0]]).unwrap();
        assert_eq!(knn_classify(&train, &[1, 0], &test, 1).unwrap(), vec![1]);
        // split vote: smaller class wins
        assert_eq!(knn_classify(&train, &[1, 0], &test, 2).unwrap(), vec![0]);
    }

    #[test]
    fn contract_errors() {
        let empty = RowMatrix::new(0, 1, vec![]).unwrap();
        let test = RowMatrix::from_rows(&[vec![0.0]]).unwrap();
        assert!(knn_classify(&empty, &[], &test, 1).is_err());
        let train = RowMatrix::from_rows(&[vec![0.0]]).unwrap();
        assert!(knn_classify(&train, &[0], &test, 2).is_err());
        assert!(knn_classify(&train, &[0], &test, 0).is_err());
    }

    #[test]
    fn separable_clusters_match_brute_force() {
        let (train_rows, train_labels) = two_clusters(11, 20);
        let (test_rows, test_labels) = two_clusters(12, 20);
        let train = RowMatrix::from_rows(&train_rows).unwrap();
        let test = RowMatrix::from_rows(&test_rows).unwrap();
        let pred = knn_classify(&train, &train_labels, &test, 3).unwrap();
        for (t, row) in test_rows.iter().enumerate() {
            assert_eq!(pred[t], brute_force(&train_rows, &train_labels, row, 3));
        }
        assert_eq!(pred, test_labels);
    }

    #[test]
    fn one_nn_recovers_distinct_training_points() {
        let (rows, labels) = two_clusters(5, 15);
        let m = RowMatrix::from_rows(&rows).unwrap();
        assert_eq!(knn_classify(&m, &labels, &m, 1).unwrap(), labels);
    }
}
