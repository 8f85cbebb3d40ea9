/// Population moments of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentStats {
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
    /// Non-excess kurtosis (a normal distribution gives 3).
    pub kurtosis: f64,
    /// Set when the sample is empty or has zero spread.
    pub degenerate: bool,
}

/// Mean, population standard deviation, skewness `m3 / σ³` and kurtosis `m4 / σ⁴`.
///
/// An empty sample gives all zeros; a sample with zero spread gives its mean
/// with zero std, skewness and kurtosis. Both cases are flagged as degenerate.
pub fn moment_stats(xs: &[f64]) -> MomentStats {
    let Some(&first) = xs.first() else {
        return MomentStats {
            mean: 0.0,
            std: 0.0,
            skewness: 0.0,
            kurtosis: 0.0,
            degenerate: true,
        };
    };
    if xs.iter().all(|&x| x == first) {
        return MomentStats {
            mean: first,
            std: 0.0,
            skewness: 0.0,
            kurtosis: 0.0,
            degenerate: true,
        };
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in xs {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let std = m2.sqrt();
    if std == 0.0 {
        return MomentStats {
            mean,
            std: 0.0,
            skewness: 0.0,
            kurtosis: 0.0,
            degenerate: true,
        };
    }
    MomentStats {
        mean,
        std,
        skewness: m3 / (std * std * std),
        kurtosis: m4 / (m2 * m2),
        degenerate: false,
    }
}

/// Population standard deviation; zero for fewer than one element.
pub(crate) fn population_std(xs: &[f64]) -> f64 {
    moment_stats(xs).std
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_sample() {
        let s = moment_stats(&[2.0, 2.0, 2.0]);
        assert_eq!((s.mean, s.std, s.skewness, s.kurtosis), (2.0, 0.0, 0.0, 0.0));
        assert!(s.degenerate);
    }

    #[test]
    fn constant_non_dyadic_sample_is_exact() {
        let s = moment_stats(&[0.1; 7]);
        assert_eq!(s.mean, 0.1);
        assert_eq!(s.std, 0.0);
        assert!(s.degenerate);
    }

    #[test]
    fn empty_sample() {
        let s = moment_stats(&[]);
        assert_eq!((s.mean, s.std, s.skewness, s.kurtosis), (0.0, 0.0, 0.0, 0.0));
        assert!(s.degenerate);
    }

    #[test]
    fn one_to_four() {
        // Deviations ±0.5, ±1.5: m2 = 1.25, m3 = 0, m4 = 2.5625.
        let s = moment_stats(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert_relative_eq!(s.std, 1.25f64.sqrt(), max_relative = 1e-15);
        assert_eq!(s.skewness, 0.0);
        assert_relative_eq!(s.kurtosis, 1.64, max_relative = 1e-14);
        assert!(!s.degenerate);
    }

    #[test]
    fn symmetric_sample_has_zero_skew() {
        let s = moment_stats(&[-3.0, -1.0, 0.0, 1.0, 3.0]);
        assert_eq!(s.skewness, 0.0);
    }
}
