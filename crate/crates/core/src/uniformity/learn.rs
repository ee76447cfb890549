//! Empirical learners: ℓ1 over the whole domain, ℓ1 over one interval, and ℓ∞ from a given tally.

use crate::constants::ceil_count;
use crate::error::{invalid, Error, Result};
use crate::model::{Distribution, Interval, Oracle};

fn check_accuracy(epsilon: f64, delta: f64) -> Result<()> {
    if !(epsilon > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("need epsilon > 0 and delta in (0, 1), got {epsilon}, {delta}")));
    }
    Ok(())
}

/// `ceil(factor * (n + ln(2/delta)) / (2 eps^2))`.
///
/// With `factor = 1` this is the folklore count. Hoeffding at deviation `eps/2` per set needs
/// `factor = 4` for the stated guarantee.
pub fn learn_l1_sample_count(n: usize, epsilon: f64, delta: f64, factor: f64) -> u64 {
    ceil_count(factor * (n as f64 + (2.0 / delta).ln()) / (2.0 * epsilon * epsilon))
}

/// `ceil(4 (|I| + ln(2/delta)) / (eps^2 gamma))`.
pub fn learn_restriction_sample_count(len: usize, gamma: f64, epsilon: f64, delta: f64) -> u64 {
    ceil_count(4.0 * (len as f64 + (2.0 / delta).ln()) / (epsilon * epsilon * gamma))
}

/// `ceil(ln(2 |S| / delta) / (2 eps^2))`.
pub fn learn_linf_sample_count(size: usize, epsilon: f64, delta: f64) -> u64 {
    ceil_count((2.0 * size as f64 / delta).ln() / (2.0 * epsilon * epsilon))
}

/// Empirical distribution of a tally, uniform when the tally is empty.
pub(crate) fn empirical(counts: &[u64]) -> Result<Distribution> {
    if counts.iter().all(|&c| c == 0) {
        return Distribution::uniform(counts.len());
    }
    Distribution::from_weights(counts.iter().map(|&c| c as f64).collect())
}

/// Empirical distribution of [`learn_l1_sample_count`] unconditional samples.
pub fn learn_l1(oracle: &mut Oracle<'_>, epsilon: f64, delta: f64, factor: f64) -> Result<Distribution> {
    check_accuracy(epsilon, delta)?;
    let t = learn_l1_sample_count(oracle.n(), epsilon, delta, factor);
    empirical(&oracle.unconditional_counts(t))
}

/// Learns `mu|I` from unconditional samples that land in `I`.
///
/// When `mu(I) >= gamma` the output is `epsilon`-close to the restriction with probability
/// `1 - delta`. If fewer than `t gamma / 2` samples land in `I` the result is uniform over `I`.
pub fn learn_restriction_l1(
    oracle: &mut Oracle<'_>,
    interval: Interval,
    gamma: f64,
    epsilon: f64,
    delta: f64,
) -> Result<Distribution> {
    check_accuracy(epsilon, delta)?;
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(invalid(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    let t = learn_restriction_sample_count(interval.len(), gamma, epsilon, delta);
    let counts = oracle.unconditional_counts_in(interval, t)?;
    let hits: u64 = counts.iter().sum();
    if (hits as f64) < t as f64 * gamma / 2.0 {
        return Distribution::uniform(interval.len());
    }
    empirical(&counts)
}

/// ℓ∞ learner over a set `S` from a caller-supplied tally (one count per member of `S`).
pub fn learn_linf(counts: &[u64], epsilon: f64, delta: f64) -> Result<Distribution> {
    check_accuracy(epsilon, delta)?;
    if counts.is_empty() {
        return Err(Error::EmptyQuerySet);
    }
    let needed = learn_linf_sample_count(counts.len(), epsilon, delta);
    let got: u64 = counts.iter().sum();
    if got < needed {
        return Err(Error::InsufficientSamples { needed, got });
    }
    empirical(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{l1_distance, linf_distance, restrict};

    #[test]
    fn sample_counts() {
        // (2 + ln 20) / 0.02 = 249.79
        assert_eq!(learn_l1_sample_count(2, 0.1, 0.1, 1.0), 250);
        assert_eq!(learn_l1_sample_count(2, 0.1, 0.1, 4.0), 1000);
        // 4 (10 + ln 10) / 0.00625 = 7873.6
        assert_eq!(learn_restriction_sample_count(10, 0.1, 0.25, 0.2), 7874);
        // ln 2000 / 0.005 = 1520.2
        assert_eq!(learn_linf_sample_count(100, 0.05, 0.1), 1521);
    }

    #[test]
    fn point_mass_is_recovered() {
        let d = Distribution::point_mass(6, 2).unwrap();
        let mut o = Oracle::new(&d, 3);
        assert_eq!(learn_l1(&mut o, 0.2, 0.1, 1.0).unwrap(), d);
        assert_eq!(o.counts().unconditional, learn_l1_sample_count(6, 0.2, 0.1, 1.0));
        let mut o = Oracle::new(&d, 3);
        let r = learn_restriction_l1(&mut o, d.whole(), 0.5, 0.2, 0.1).unwrap();
        assert_eq!(r, d);
    }

    #[test]
    fn restriction_learner_is_accurate() {
        let d = Distribution::uniform(64).unwrap();
        let iv = Interval::new(1, 16).unwrap();
        let truth = restrict(&d, iv).unwrap();
        let good = (0..100u64)
            .filter(|&s| {
                let mut o = Oracle::new(&d, s);
                let got = learn_restriction_l1(&mut o, iv, 0.25, 0.2, 0.1).unwrap();
                l1_distance(&got, &truth).unwrap() <= 0.2
            })
            .count();
        assert!(good >= 85, "{good}");
    }

    #[test]
    fn l1_learner_is_accurate() {
        let d = Distribution::uniform(32).unwrap();
        let good = (0..100u64)
            .filter(|&s| {
                let mut o = Oracle::new(&d, s);
                l1_distance(&learn_l1(&mut o, 0.3, 0.1, 4.0).unwrap(), &d).unwrap() <= 0.3
            })
            .count();
        assert!(good >= 85, "{good}");
    }

    #[test]
    fn linf_learner() {
        assert_eq!(learn_linf(&[0, 9999, 0], 0.05, 0.1).unwrap(), Distribution::point_mass(3, 2).unwrap());
        assert!(matches!(learn_linf(&[1, 1], 0.05, 0.1), Err(Error::InsufficientSamples { .. })));
        let d = Distribution::uniform(10).unwrap();
        let t = learn_linf_sample_count(10, 0.05, 0.1);
        let good = (0..100u64)
            .filter(|&s| {
                let mut o = Oracle::new(&d, s);
                let counts = o.unconditional_counts(t);
                linf_distance(&learn_linf(&counts, 0.05, 0.1).unwrap(), &d).unwrap() <= 0.05
            })
            .count();
        assert!(good >= 85, "{good}");
    }
}
