//! Decomposable properties: how to measure the distance to them and how to sample members.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constants::ceil_count;
use crate::error::{invalid, Error, Result};
use crate::model::{l1_to_uniform, Distribution};

/// A property `C` that is `L(gamma, n)`-decomposable.
pub trait PropertySpec: Send + Sync {
    fn name(&self) -> String;

    /// Decomposability length `L(gamma, n)`.
    fn l_fn(&self, gamma: f64, n: usize) -> usize;

    /// ℓ1 distance from `d` to `C`, exact or an upper bound. Deterministic.
    fn distance(&self, d: &Distribution) -> Result<f64>;

    /// A member of `C` over `[1, n]`, deterministic in `seed`.
    fn member(&self, n: usize, seed: u64) -> Result<Distribution>;
}

/// The shipped properties, parsed from `uniform`, `khist:<k>` or `monotone`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    Uniform,
    KHistogram(usize),
    /// Non-increasing over `[1, n]`.
    Monotone,
}

impl std::str::FromStr for Property {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Property::Uniform),
            "monotone" => Ok(Property::Monotone),
            _ => {
                let k = s
                    .strip_prefix("khist:")
                    .and_then(|k| k.parse::<usize>().ok())
                    .filter(|&k| k >= 1)
                    .ok_or_else(|| invalid(format!("unknown property '{s}' (expected uniform, khist:<k>, monotone)")))?;
                Ok(Property::KHistogram(k))
            }
        }
    }
}

impl PropertySpec for Property {
    fn name(&self) -> String {
        match self {
            Property::Uniform => "uniform".into(),
            Property::KHistogram(k) => format!("khist:{k}"),
            Property::Monotone => "monotone".into(),
        }
    }

    fn l_fn(&self, gamma: f64, n: usize) -> usize {
        match *self {
            Property::Uniform => 1,
            Property::KHistogram(k) => k,
            Property::Monotone => (ceil_count((n as f64).ln() * (1.0 + 1.0 / gamma)) as usize).max(1),
        }
    }

    fn distance(&self, d: &Distribution) -> Result<f64> {
        match *self {
            Property::Uniform => Ok(distance_to_uniform(d)),
            Property::KHistogram(k) => distance_to_k_histogram(d, k),
            Property::Monotone => distance_to_monotone(d),
        }
    }

    fn member(&self, n: usize, seed: u64) -> Result<Distribution> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match *self {
            Property::Uniform => Distribution::uniform(n),
            Property::KHistogram(k) => {
                if k == 0 || k > n {
                    return Err(invalid(format!("k = {k} must lie in [1, {n}]")));
                }
                let mut cuts: Vec<usize> = rand::seq::index::sample(&mut rng, n - 1, k - 1).into_iter().map(|c| c + 1).collect();
                cuts.sort_unstable();
                cuts.push(n);
                let mut w = Vec::with_capacity(n);
                let mut lo = 0;
                for &hi in &cuts {
                    let level = rng.random_range(0.1..1.0);
                    w.extend(std::iter::repeat_n(level, hi - lo));
                    lo = hi;
                }
                Distribution::from_weights(w)
            }
            Property::Monotone => {
                let mut w: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
                w.sort_by(|a, b| b.total_cmp(a));
                Distribution::from_weights(w)
            }
        }
    }
}

/// Exact ℓ1 distance to the uniform distribution.
pub fn distance_to_uniform(d: &Distribution) -> f64 {
    l1_to_uniform(d.probs())
}

/// Cumulative counts and sums over value ranks.
struct Fenwick {
    count: Vec<u64>,
    sum: Vec<f64>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Self { count: vec![0; n + 1], sum: vec![0.0; n + 1] }
    }

    fn clear(&mut self) {
        self.count.iter_mut().for_each(|c| *c = 0);
        self.sum.iter_mut().for_each(|s| *s = 0.0);
    }

    fn add(&mut self, rank: usize, v: f64) {
        let mut i = rank + 1;
        while i < self.count.len() {
            self.count[i] += 1;
            self.sum[i] += v;
            i += i & i.wrapping_neg();
        }
    }

    /// Count and sum of inserted values with rank below `r`.
    fn below(&self, r: usize) -> (u64, f64) {
        let (mut c, mut s) = (0, 0.0);
        let mut i = r;
        while i > 0 {
            c += self.count[i];
            s += self.sum[i];
            i -= i & i.wrapping_neg();
        }
        (c, s)
    }
}

/// ℓ1 distance from `d` to its best flattening over at most `k` intervals.
///
/// The result `D` brackets the true distance to `k`-histograms: the true value lies in `[D/2, D]`.
/// Dynamic program over interval starts with a Fenwick tree for the interval costs
/// `sum |d(i) - avg|`; `O(n^2 log n + k n^2)` time, `O(k n)` memory.
pub fn distance_to_k_histogram(d: &Distribution, k: usize) -> Result<f64> {
    let n = d.n();
    if k == 0 || k > n {
        return Err(invalid(format!("k = {k} must lie in [1, {n}]")));
    }
    if k == n {
        return Ok(0.0);
    }
    let p = d.probs();
    let mut sorted = p.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank: Vec<usize> = p.iter().map(|v| sorted.partition_point(|s| s < v)).collect();

    // dp[j][b]: best cost of covering the first b elements with exactly j intervals.
    let mut dp = vec![vec![f64::INFINITY; n + 1]; k + 1];
    dp[0][0] = 0.0;
    let mut tree = Fenwick::new(n);
    for a in 1..=n {
        if (0..k).all(|j| dp[j][a - 1].is_infinite()) {
            continue;
        }
        tree.clear();
        let (mut total, mut lo, mut hi) = (0.0, f64::INFINITY, f64::NEG_INFINITY);
        for b in a..=n {
            let v = p[b - 1];
            tree.add(rank[b - 1], v);
            total += v;
            lo = lo.min(v);
            hi = hi.max(v);
            let len = (b - a + 1) as f64;
            let cost = if lo == hi {
                0.0
            } else {
                let avg = total / len;
                let (c, s) = tree.below(sorted.partition_point(|&x| x <= avg));
                (avg * c as f64 - s) + ((total - s) - avg * (len - c as f64))
            };
            for j in 1..=k.min(b) {
                let base = dp[j - 1][a - 1];
                if base + cost < dp[j][b] {
                    dp[j][b] = base + cost;
                }
            }
        }
    }
    Ok((1..=k).map(|j| dp[j][n]).fold(f64::INFINITY, f64::min).max(0.0))
}

/// Exact ℓ1 distance to the non-increasing distributions, by linear programming.
///
/// Minimizes `sum t_i` subject to `t_i >= |x_i - d_i|`, `x_i >= x_{i+1}`, `x >= 0`, `sum x = 1`.
pub fn distance_to_monotone(d: &Distribution) -> Result<f64> {
    let p = d.probs();
    if p.windows(2).all(|w| w[0] >= w[1]) {
        return Ok(0.0);
    }
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let x: Vec<_> = p.iter().map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
    let t: Vec<_> = p.iter().map(|_| lp.add_var(1.0, (0.0, 2.0))).collect();
    for i in 0..p.len() {
        lp.add_constraint([(t[i], 1.0), (x[i], -1.0)], ComparisonOp::Ge, -p[i]);
        lp.add_constraint([(t[i], 1.0), (x[i], 1.0)], ComparisonOp::Ge, p[i]);
        if i + 1 < p.len() {
            lp.add_constraint([(x[i], 1.0), (x[i + 1], -1.0)], ComparisonOp::Ge, 0.0);
        }
    }
    lp.add_constraint(x.iter().map(|&v| (v, 1.0)).collect::<Vec<_>>(), ComparisonOp::Eq, 1.0);
    let sol = lp.solve().map_err(|e| Error::Solver(e.to_string()))?;
    Ok(sol.objective().max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{flatten, l1_distance, IntervalPartition};
    use proptest::prelude::*;

    fn dist(p: &[f64]) -> Distribution {
        Distribution::new(p.to_vec()).unwrap()
    }

    /// Best flattening over every partition into at most `k` intervals, by enumeration.
    fn brute_k_hist(d: &Distribution, k: usize) -> f64 {
        let n = d.n();
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << (n - 1)) {
            if mask.count_ones() as usize + 1 > k {
                continue;
            }
            let mut ends: Vec<usize> = (1..n).filter(|&i| mask >> (i - 1) & 1 == 1).collect();
            ends.push(n);
            let p = IntervalPartition::from_right_ends(n, &ends).unwrap();
            best = best.min(l1_distance(d, &flatten(d, &p).unwrap()).unwrap());
        }
        best
    }

    #[test]
    fn uniform_distance() {
        assert_eq!(distance_to_uniform(&Distribution::uniform(7).unwrap()), 0.0);
        assert!((distance_to_uniform(&dist(&[0.75, 0.25])) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn k_histogram_edges() {
        let d = dist(&[0.1, 0.4, 0.2, 0.3]);
        assert_eq!(distance_to_k_histogram(&d, 4).unwrap(), 0.0);
        assert!(distance_to_k_histogram(&d, 5).is_err());
        assert!(distance_to_k_histogram(&d, 0).is_err());
        assert!((distance_to_k_histogram(&d, 1).unwrap() - distance_to_uniform(&d)).abs() < 1e-12);
    }

    #[test]
    fn monotone_matches_grid_search() {
        let d = dist(&[0.1, 0.4, 0.5]);
        let lp = distance_to_monotone(&d).unwrap();
        let mut best = f64::INFINITY;
        let steps = 1000;
        for a in 0..=steps {
            for b in 0..=(steps - a) {
                let (x1, x2) = (a as f64 / steps as f64, b as f64 / steps as f64);
                let x3 = 1.0 - x1 - x2;
                if x1 >= x2 && x2 >= x3 && x3 >= -1e-12 {
                    best = best.min((x1 - 0.1).abs() + (x2 - 0.4).abs() + (x3 - 0.5).abs());
                }
            }
        }
        assert!((lp - best).abs() < 2e-3, "{lp} vs {best}");
        assert_eq!(distance_to_monotone(&dist(&[0.5, 0.3, 0.2])).unwrap(), 0.0);
    }

    #[test]
    fn members_have_zero_distance() {
        for seed in 0..5 {
            for prop in [Property::Uniform, Property::KHistogram(3), Property::Monotone] {
                let m = prop.member(40, seed).unwrap();
                assert!(prop.distance(&m).unwrap() < 1e-12, "{}", prop.name());
            }
        }
    }

    #[test]
    fn parses_names() {
        assert_eq!("khist:4".parse::<Property>().unwrap(), Property::KHistogram(4));
        assert_eq!("monotone".parse::<Property>().unwrap(), Property::Monotone);
        assert!("khist:0".parse::<Property>().is_err());
        assert!("logconcave".parse::<Property>().is_err());
        assert_eq!(Property::Monotone.l_fn(0.5, 100), 14);
    }

    proptest! {
        #[test]
        fn k_hist_dp_matches_enumeration(w in proptest::collection::vec(0.0f64..1.0, 2..9), k in 1usize..5) {
            prop_assume!(w.iter().sum::<f64>() > 0.0);
            let d = Distribution::from_weights(w).unwrap();
            prop_assume!(k <= d.n());
            let dp = distance_to_k_histogram(&d, k).unwrap();
            prop_assert!((dp - brute_k_hist(&d, k)).abs() < 1e-12);
        }

        #[test]
        fn distances_are_lipschitz(a in proptest::collection::vec(0.01f64..1.0, 6), b in proptest::collection::vec(0.01f64..1.0, 6)) {
            let a = Distribution::from_weights(a).unwrap();
            let b = Distribution::from_weights(b).unwrap();
            let gap = l1_distance(&a, &b).unwrap();
            let ua = distance_to_uniform(&a);
            let ub = distance_to_uniform(&b);
            prop_assert!((ua - ub).abs() <= gap + 1e-12);
            let ma = distance_to_monotone(&a).unwrap();
            let mb = distance_to_monotone(&b).unwrap();
            prop_assert!((ma - mb).abs() <= gap + 1e-7);
        }
    }
}
