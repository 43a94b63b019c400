//! Selection-quality measures: test accuracy, its chance-centered rescaling,
//! class coverage of a selection, and NMI between a clustering and labels.

use crate::error::{Error, Result};

/// Fraction of test indices where pred agrees with truth.
pub fn accuracy(pred: &[usize], truth: &[usize], test: &[usize]) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::Invalid("accuracy over an empty test set".into()));
    }
    assert_eq!(pred.len(), truth.len(), "prediction/label length mismatch");
    let hits = test.iter().filter(|&&i| pred[i] == truth[i]).count();
    Ok(hits as f64 / test.len() as f64)
}

/// Rescales accuracy so that coin-flip performance maps to 0 and perfect
/// performance to 1.
pub fn normalized_accuracy(acc: f64) -> f64 {
    2.0 * (acc - 0.5)
}

/// Fraction of the c classes holding at least one selected node.
pub fn label_coverage(reps: &[usize], labels: &[usize], num_classes: usize) -> f64 {
    assert!(num_classes > 0, "coverage needs at least one class");
    let mut hit = vec![false; num_classes];
    for &r in reps {
        hit[labels[r]] = true;
    }
    hit.iter().filter(|&&h| h).count() as f64 / num_classes as f64
}

fn entropy_from_counts(counts: &[usize], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Normalized mutual information I(A;Y) / sqrt(H(A) H(Y)), with the 0/0 case
/// (either side constant) defined as 0.
pub fn nmi(assign: &[usize], labels: &[usize]) -> f64 {
    assert_eq!(assign.len(), labels.len(), "assignment/label length mismatch");
    assert!(!assign.is_empty(), "nmi over empty sequences");
    let n = assign.len() as f64;
    let ka = assign.iter().max().unwrap() + 1;
    let ky = labels.iter().max().unwrap() + 1;
    let mut joint = vec![0usize; ka * ky];
    let mut ca = vec![0usize; ka];
    let mut cy = vec![0usize; ky];
    for (&a, &y) in assign.iter().zip(labels) {
        joint[a * ky + y] += 1;
        ca[a] += 1;
        cy[y] += 1;
    }
    let ha = entropy_from_counts(&ca, n);
    let hy = entropy_from_counts(&cy, n);
    if ha == 0.0 || hy == 0.0 {
        return 0.0;
    }
    let mut mi = 0.0;
    for a in 0..ka {
        for y in 0..ky {
            let c = joint[a * ky + y];
            if c == 0 {
                continue;
            }
            let p = c as f64 / n;
            mi += p * (n * c as f64 / (ca[a] as f64 * cy[y] as f64)).ln();
        }
    }
    (mi / (ha * hy).sqrt()).clamp(0.0, 1.0)
}
