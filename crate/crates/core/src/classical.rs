//! Fast paths for commuting (classical) pairs of states.
//!
//! A [`ClassicalPair`] stores a partition of the outcome space into classes
//! on which the likelihood ratio `p/q` is constant, keeping only each class's
//! total mass under both hypotheses. Neyman–Pearson tests, max-relative
//! entropies and the clipping candidates depend on nothing else, so n-fold
//! powers can be handled by enumerating types instead of sequences.

use crate::divergences::{max_min_by_threshold, min_max_by_threshold, SmoothInterval};
use crate::error::{Error, Result};
use crate::qmat::{DensityOperator, SUPPORT_TOL};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrClass {
    pub p: f64,
    pub q: f64,
}

impl LrClass {
    fn ratio(&self) -> f64 {
        if self.p <= 0.0 {
            0.0
        } else if self.q <= 0.0 {
            f64::INFINITY
        } else {
            self.p / self.q
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalPair {
    classes: Vec<LrClass>,
}

/// All compositions of `n` into `parts` non-negative integers.
pub fn compositions(n: usize, parts: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            prefix.push(n);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=n).rev() {
            prefix.push(k);
            go(n - k, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if parts > 0 {
        go(n, parts, &mut Vec::with_capacity(parts), &mut out);
    }
    out
}

/// `n! / Π kᵢ!` as a float.
pub fn multinomial(counts: &[usize]) -> f64 {
    let mut total = 0usize;
    let mut v = 1.0f64;
    for &k in counts {
        for j in 1..=k {
            total += 1;
            v = v * total as f64 / j as f64;
        }
    }
    v
}

impl ClassicalPair {
    /// One class per symbol.
    pub fn new(p: &[f64], q: &[f64]) -> Result<Self> {
        if p.len() != q.len() || p.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "distributions of length {} and {}",
                p.len(),
                q.len()
            )));
        }
        for dist in [p, q] {
            if dist.iter().any(|&x| !(x >= 0.0)) {
                return Err(Error::InvalidParameter("negative probability".into()));
            }
            let s: f64 = dist.iter().sum();
            if (s - 1.0).abs() > SUPPORT_TOL {
                return Err(Error::InvalidParameter(format!("probabilities sum to {s}")));
            }
        }
        Ok(Self {
            classes: p.iter().zip(q).map(|(&p, &q)| LrClass { p, q }).collect(),
        })
    }

    /// Diagonals of two states that are diagonal in the computational basis.
    pub fn from_states(rho: &DensityOperator, sigma: &DensityOperator) -> Result<Self> {
        rho.same_space(sigma)?;
        let mut p = Vec::with_capacity(rho.dim());
        let mut q = Vec::with_capacity(rho.dim());
        for (op, out) in [(rho, &mut p), (sigma, &mut q)] {
            let m = op.matrix();
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    if i != j && m[(i, j)].norm() > 1e-12 {
                        return Err(Error::InvalidParameter(
                            "state is not diagonal in the computational basis".into(),
                        ));
                    }
                }
                out.push(m[(i, i)].re.max(0.0));
            }
        }
        Self::new(&p, &q)
    }

    pub fn classes(&self) -> &[LrClass] {
        &self.classes
    }

    /// `(p, q)^{⊗n}` grouped by type.
    pub fn iid_power(&self, n: usize) -> Self {
        if n == 0 {
            return Self {
                classes: vec![LrClass { p: 1.0, q: 1.0 }],
            };
        }
        let classes = compositions(n, self.classes.len())
            .into_iter()
            .map(|k| {
                let c = multinomial(&k);
                let mut p = c;
                let mut q = c;
                for (cls, &kc) in self.classes.iter().zip(&k) {
                    p *= cls.p.powi(kc as i32);
                    q *= cls.q.powi(kc as i32);
                }
                LrClass { p, q }
            })
            .filter(|c| c.p > 0.0 || c.q > 0.0)
            .collect();
        Self { classes }
    }

    /// `(p ⊗ p', q ⊗ q')`.
    pub fn product(&self, other: &Self) -> Self {
        let mut classes = Vec::with_capacity(self.classes.len() * other.classes.len());
        for a in &self.classes {
            for b in &other.classes {
                let c = LrClass {
                    p: a.p * b.p,
                    q: a.q * b.q,
                };
                if c.p > 0.0 || c.q > 0.0 {
                    classes.push(c);
                }
            }
        }
        Self { classes }
    }

    fn active(&self) -> impl Iterator<Item = &LrClass> {
        self.classes.iter().filter(|c| c.p > 0.0)
    }

    pub fn relative_entropy(&self) -> f64 {
        let mut d = 0.0;
        for c in self.active() {
            if c.q <= 0.0 {
                return f64::INFINITY;
            }
            d += c.p * c.ratio().log2();
        }
        d
    }

    pub fn relative_entropy_variance(&self) -> Result<f64> {
        let d = self.relative_entropy();
        if !d.is_finite() {
            return Err(Error::SupportViolation(
                "variance needs supp p ⊆ supp q".into(),
            ));
        }
        Ok(self
            .active()
            .map(|c| c.p * (c.ratio().log2() - d).powi(2))
            .sum())
    }

    pub fn dmax(&self) -> f64 {
        self.active()
            .map(|c| c.ratio())
            .fold(0.0, f64::max)
            .log2()
    }

    /// Minimal type-II error subject to type-I error at most `eps`.
    pub fn optimal_type_ii(&self, eps: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&eps) {
            return Err(Error::InvalidParameter(format!(
                "type-I budget must lie in [0, 1), got {eps}"
            )));
        }
        let mut order: Vec<&LrClass> = self.active().collect();
        order.sort_by(|a, b| b.ratio().total_cmp(&a.ratio()));
        let need = 1.0 - eps;
        let (mut got, mut beta) = (0.0, 0.0);
        for c in order {
            if got >= need {
                break;
            }
            if got + c.p <= need {
                got += c.p;
                beta += c.q;
            } else {
                beta += c.q * (need - got) / c.p;
                got = need;
            }
        }
        Ok(beta)
    }

    pub fn dh_eps(&self, eps: f64) -> Result<f64> {
        let beta = self.optimal_type_ii(eps)?;
        Ok(if beta <= 0.0 { f64::INFINITY } else { -beta.log2() })
    }

    /// Same clipping construction as the general smoothing routine,
    /// evaluated on likelihood-ratio classes.
    pub fn dmax_smooth(&self, eps: f64) -> Result<SmoothInterval> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "smoothing radius must lie in (0, 1), got {eps}"
            )));
        }
        let upper = self.dmax();
        let usable: Vec<&LrClass> = self.active().filter(|c| c.q > 0.0).collect();
        let top = usable.iter().map(|c| c.ratio()).fold(0.0, f64::max);
        let bottom = usable
            .iter()
            .map(|c| c.ratio())
            .filter(|&r| r > SUPPORT_TOL)
            .fold(f64::INFINITY, f64::min);
        if top <= SUPPORT_TOL {
            return Ok(SmoothInterval { lower: upper, upper });
        }
        let candidate = |level: f64| -> Option<(f64, f64)> {
            let tr: f64 = usable
                .iter()
                .filter(|c| c.ratio() > SUPPORT_TOL)
                .map(|c| c.p.min(level * c.q))
                .sum();
            if tr <= SUPPORT_TOL {
                return None;
            }
            let f: f64 = usable
                .iter()
                .filter(|c| c.ratio() > SUPPORT_TOL)
                .map(|c| c.p * (1.0f64.min(level / c.ratio()) / tr).sqrt())
                .sum();
            let dist = (1.0 - f.min(1.0).powi(2)).max(0.0).sqrt();
            Some(((level.min(top) / tr).log2(), dist))
        };
        let Some((v_top, d_top)) = candidate(top) else {
            return Ok(SmoothInterval { lower: upper, upper });
        };
        if d_top > eps {
            return Ok(SmoothInterval { lower: upper, upper });
        }
        if let Some((v, d)) = candidate(bottom) {
            if d <= eps {
                return Ok(SmoothInterval {
                    lower: v.min(upper),
                    upper,
                });
            }
        }
        let (mut lo, mut hi) = (bottom.ln(), top.ln());
        let mut best = v_top;
        for _ in 0..400 {
            if hi - lo < 1e-13 {
                break;
            }
            let mid = 0.5 * (lo + hi);
            match candidate(mid.exp()) {
                Some((v, d)) if d <= eps => {
                    hi = mid;
                    best = v;
                }
                _ => lo = mid,
            }
        }
        Ok(SmoothInterval {
            lower: best.min(upper),
            upper,
        })
    }
}

/// Joint distribution `P_AB` (row-major, `|A| × |B|`) paired with the product
/// of its marginals.
pub fn mutual_information_pair(joint: &[Vec<f64>]) -> Result<ClassicalPair> {
    let na = joint.len();
    let nb = joint.first().map(Vec::len).unwrap_or(0);
    let pa: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
    let pb: Vec<f64> = (0..nb).map(|b| joint.iter().map(|r| r[b]).sum()).collect();
    let mut p = Vec::with_capacity(na * nb);
    let mut q = Vec::with_capacity(na * nb);
    for (a, row) in joint.iter().enumerate() {
        if row.len() != nb {
            return Err(Error::DimensionMismatch("ragged joint distribution".into()));
        }
        for (b, &v) in row.iter().enumerate() {
            p.push(v);
            q.push(pa[a] * pb[b]);
        }
    }
    ClassicalPair::new(&p, &q)
}

/// A commuting conditional state: for each `x`, the pair
/// `(P^x_AB, P^x_A ⊗ P^x_B)` (or any other per-symbol pair).
#[derive(Debug, Clone)]
pub struct ClassicalCqq {
    pub weights: Vec<f64>,
    pub pairs: Vec<ClassicalPair>,
}

/// Blocks of an n-fold power grouped by the type of `xⁿ`.
#[derive(Debug, Clone)]
pub struct TypeBlocks {
    pub counts: Vec<Vec<usize>>,
    pub weights: Vec<f64>,
    pub pairs: Vec<ClassicalPair>,
}

impl ClassicalCqq {
    pub fn new(weights: Vec<f64>, pairs: Vec<ClassicalPair>) -> Result<Self> {
        if weights.len() != pairs.len() || weights.is_empty() {
            return Err(Error::DimensionMismatch(
                "one pair per symbol is required".into(),
            ));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > SUPPORT_TOL || weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidParameter(format!("weights sum to {s}")));
        }
        Ok(Self { weights, pairs })
    }

    pub fn nfold(&self, n: usize) -> TypeBlocks {
        let counts = compositions(n, self.weights.len());
        let mut out = TypeBlocks {
            counts: Vec::new(),
            weights: Vec::new(),
            pairs: Vec::new(),
        };
        for k in counts {
            let mut w = multinomial(&k);
            for (x, &kx) in k.iter().enumerate() {
                w *= self.weights[x].powi(kx as i32);
            }
            if w <= 0.0 {
                continue;
            }
            let mut pair = ClassicalPair {
                classes: vec![LrClass { p: 1.0, q: 1.0 }],
            };
            for (x, &kx) in k.iter().enumerate() {
                if kx > 0 {
                    pair = pair.product(&self.pairs[x].iid_power(kx));
                }
            }
            out.counts.push(k);
            out.weights.push(w);
            out.pairs.push(pair);
        }
        out
    }

    /// Weighted average of the per-symbol relative entropies.
    pub fn average_relative_entropy(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.pairs)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, p)| w * p.relative_entropy())
            .sum()
    }
}

impl TypeBlocks {
    /// `max_S min_{x∈S} D_H^ε` of the blocks.
    pub fn cond_dh_eps(&self, eps: f64) -> Result<f64> {
        let vals = self
            .pairs
            .iter()
            .map(|p| p.dh_eps(eps))
            .collect::<Result<Vec<_>>>()?;
        Ok(max_min_by_threshold(&self.weights, &vals, eps))
    }

    /// `min_S max_{x∈S}` of the smoothed max-relative entropies, both ends.
    pub fn cond_dmax_smooth(&self, eps: f64) -> Result<SmoothInterval> {
        let vals = self
            .pairs
            .iter()
            .map(|p| p.dmax_smooth(eps))
            .collect::<Result<Vec<_>>>()?;
        let lower: Vec<f64> = vals.iter().map(|v| v.lower).collect();
        let upper: Vec<f64> = vals.iter().map(|v| v.upper).collect();
        Ok(SmoothInterval {
            lower: min_max_by_threshold(&self.weights, &lower, eps),
            upper: min_max_by_threshold(&self.weights, &upper, eps),
        })
    }

    /// `min_S max_{x∈S} D_max` of the blocks.
    pub fn cond_dmax(&self, eps: f64) -> f64 {
        let vals: Vec<f64> = self.pairs.iter().map(ClassicalPair::dmax).collect();
        min_max_by_threshold(&self.weights, &vals, eps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergences::{dh_eps, dmax, dmax_smooth, relative_entropy};

    #[test]
    fn compositions_count() {
        assert_eq!(compositions(3, 2).len(), 4);
        assert_eq!(compositions(12, 4).len(), 455);
        assert!(compositions(5, 3).iter().all(|c| c.iter().sum::<usize>() == 5));
    }

    #[test]
    fn multinomial_values() {
        assert_eq!(multinomial(&[2, 1]), 3.0);
        assert_eq!(multinomial(&[2, 2, 2]), 90.0);
    }

    #[test]
    fn iid_power_preserves_mass_and_additivity() {
        let pair = ClassicalPair::new(&[0.7, 0.2, 0.1], &[0.3, 0.3, 0.4]).unwrap();
        let p5 = pair.iid_power(5);
        let (sp, sq): (f64, f64) = p5
            .classes()
            .iter()
            .fold((0.0, 0.0), |(a, b), c| (a + c.p, b + c.q));
        assert!((sp - 1.0).abs() < 1e-12 && (sq - 1.0).abs() < 1e-12);
        assert!((p5.relative_entropy() - 5.0 * pair.relative_entropy()).abs() < 1e-12);
        assert!((p5.dmax() - 5.0 * pair.dmax()).abs() < 1e-12);
        let v1 = pair.relative_entropy_variance().unwrap();
        assert!((p5.relative_entropy_variance().unwrap() - 5.0 * v1).abs() < 1e-10);
    }

    #[test]
    fn matches_dense_computation_on_diagonal_states() {
        let p = [0.6, 0.3, 0.1];
        let q = [0.2, 0.5, 0.3];
        let rho = DensityOperator::diagonal("A", &p).unwrap();
        let sigma = DensityOperator::diagonal("A", &q).unwrap();
        let pair = ClassicalPair::from_states(&rho, &sigma).unwrap();
        assert!((pair.relative_entropy() - relative_entropy(&rho, &sigma).unwrap()).abs() < 1e-12);
        assert!((pair.dmax() - dmax(&rho, &sigma).unwrap()).abs() < 1e-12);
        for eps in [0.0, 0.05, 0.3, 0.7] {
            let a = pair.dh_eps(eps).unwrap();
            let b = dh_eps(&rho, &sigma, eps).unwrap();
            assert!((a - b).abs() < 1e-8, "eps {eps}: {a} vs {b}");
        }
        for eps in [0.05, 0.2, 0.5] {
            let a = pair.dmax_smooth(eps).unwrap();
            let b = dmax_smooth(&rho, &sigma, eps).unwrap();
            assert!((a.lower - b.lower).abs() < 1e-8, "eps {eps}: {a:?} vs {b:?}");
            assert!((a.upper - b.upper).abs() < 1e-12);
        }
    }

    #[test]
    fn type_blocks_cover_all_sequences() {
        let pair = ClassicalPair::new(&[0.5, 0.5], &[0.5, 0.5]).unwrap();
        let cqq = ClassicalCqq::new(vec![0.3, 0.7], vec![pair.clone(), pair]).unwrap();
        let blocks = cqq.nfold(4);
        assert_eq!(blocks.weights.len(), 5);
        assert!((blocks.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
