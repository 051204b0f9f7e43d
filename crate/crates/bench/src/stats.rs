//! Summary statistics over replications.

use crate::runner::ReplicationOutcome;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard error of the mean (sample standard deviation over `√n`).
pub fn sem(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
}

/// Standard error of the difference of two independent means.
pub fn pooled_sem(a: &[f64], b: &[f64]) -> f64 {
    (sem(a).powi(2) + sem(b).powi(2)).sqrt()
}

/// Final log hypervolume gap of each successful replication.
pub fn final_log_gaps(outcomes: &[ReplicationOutcome]) -> Vec<f64> {
    outcomes
        .iter()
        .filter(|o| o.error.is_none())
        .filter_map(|o| o.final_record().map(|r| r.log_hv_diff))
        .collect()
}

/// Final in-sample hypervolume of each successful replication.
pub fn final_hypervolumes(outcomes: &[ReplicationOutcome]) -> Vec<f64> {
    outcomes
        .iter()
        .filter(|o| o.error.is_none())
        .filter_map(|o| o.final_record().map(|r| r.hv))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sem_of_known_sample() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert!((mean(&xs) - 2.5).abs() < 1e-15);
        // Sample variance 5/3 over n = 4.
        assert!((sem(&xs) - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert!((pooled_sem(&xs, &xs) - (2.0 * 5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }
}
