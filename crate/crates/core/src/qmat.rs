//! Dense complex linear algebra on labeled tensor-product spaces.
//!
//! Every operator carries an ordered list of [`SystemLabel`]s. The first
//! label is the most significant tensor factor, so `tensor(a, b)` has the
//! Kronecker layout `a ⊗ b`. Partial traces and permutations are resolved by
//! name and rearrange indices internally.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Tolerance for Hermiticity checks on input operators.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues at or below this magnitude are treated as outside the support.
pub const SUPPORT_TOL: f64 = 1e-10;
/// Composite dimension limit used when no override is configured.
pub const DEFAULT_DIM_CAP: usize = 4096;
/// Environment variable that overrides [`DEFAULT_DIM_CAP`].
pub const DIM_CAP_ENV: &str = "ONESHOT_QCAP_DIM_CAP";

/// Eigenvalues of a PSD input below this are zeroed before taking roots.
const ROOT_FLOOR: f64 = 1e-14;

static DIM_CAP: OnceLock<usize> = OnceLock::new();

/// Current composite dimension cap.
///
/// Resolved once per process from [`configure_dim_cap`], the
/// `ONESHOT_QCAP_DIM_CAP` environment variable, or the default.
pub fn dim_cap() -> usize {
    *DIM_CAP.get_or_init(|| {
        std::env::var(DIM_CAP_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&v| v > 0)
            .unwrap_or(DEFAULT_DIM_CAP)
    })
}

/// Fix the dimension cap for this process. Returns `false` if it was already
/// resolved.
pub fn configure_dim_cap(cap: usize) -> bool {
    DIM_CAP.set(cap.max(1)).is_ok()
}

pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A named tensor factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemLabel {
    pub name: String,
    pub dim: usize,
}

impl SystemLabel {
    pub fn new(name: impl Into<String>, dim: usize) -> Self {
        Self {
            name: name.into(),
            dim,
        }
    }
}

fn total_dim(systems: &[SystemLabel]) -> Result<usize> {
    let mut seen = std::collections::HashSet::new();
    let mut d: usize = 1;
    for s in systems {
        if s.dim == 0 {
            return Err(Error::DimensionMismatch(format!(
                "system `{}` has dimension 0",
                s.name
            )));
        }
        if !seen.insert(s.name.as_str()) {
            return Err(Error::LabelCollision(s.name.clone()));
        }
        d = d.checked_mul(s.dim).ok_or_else(|| {
            Error::BudgetExceeded("composite dimension overflows".into())
        })?;
    }
    Ok(d)
}

fn check_cap(d: usize) -> Result<()> {
    let cap = dim_cap();
    if d > cap {
        return Err(Error::BudgetExceeded(format!(
            "composite dimension {d} exceeds cap {cap}"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Plain matrix helpers

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl Eigh {
    /// `Σ f(λᵢ) |vᵢ⟩⟨vᵢ|`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMat {
        let mut w = self.vectors.clone();
        for (j, &l) in self.values.iter().enumerate() {
            let s = f(l);
            w.column_mut(j).scale_mut(s);
        }
        hermitize(&(w * self.vectors.adjoint()))
    }

    /// Projector onto the eigenvectors whose eigenvalue satisfies `keep`.
    pub fn projector(&self, keep: impl Fn(f64) -> bool) -> CMat {
        self.map(|l| if keep(l) { 1.0 } else { 0.0 })
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }
}

pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

pub fn hermiticity_defect(m: &CMat) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn eigh(m: &CMat) -> Eigh {
    let n = m.nrows();
    if n == 0 {
        return Eigh {
            values: vec![],
            vectors: CMat::zeros(0, 0),
        };
    }
    let se = SymmetricEigen::new(hermitize(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let values = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &se.eigenvectors.column(src));
    }
    Eigh { values, vectors }
}

pub fn eigvals(m: &CMat) -> Vec<f64> {
    eigh(m).values
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

pub fn trace(m: &CMat) -> Complex64 {
    m.trace()
}

/// `Re Tr(a b)` without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> f64 {
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            s += a[(i, k)] * b[(k, i)];
        }
    }
    s.re
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn diag(values: &[f64]) -> CMat {
    let n = values.len();
    let mut m = CMat::zeros(n, n);
    for (i, &v) in values.iter().enumerate() {
        m[(i, i)] = c64(v, 0.0);
    }
    m
}

pub fn outer(v: &CVec) -> CMat {
    v * v.adjoint()
}

/// Square root of a PSD matrix; negative rounding noise is clipped.
pub fn psd_sqrt(m: &CMat) -> CMat {
    eigh(m).map(|l| if l > ROOT_FLOOR { l.sqrt() } else { 0.0 })
}

/// `m^{-1/2}` restricted to the support of `m`.
pub fn inv_sqrt_on_support(m: &CMat) -> CMat {
    eigh(m).map(|l| if l > SUPPORT_TOL { 1.0 / l.sqrt() } else { 0.0 })
}

pub fn support_projector(m: &CMat) -> CMat {
    eigh(m).projector(|l| l > SUPPORT_TOL)
}

pub fn trace_norm(m: &CMat) -> f64 {
    eigvals(m).iter().map(|l| l.abs()).sum()
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Index bookkeeping

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Full index for each (kept multi-index, discarded multi-index) pair.
fn split_table(dims: &[usize], keep: &[usize]) -> (Vec<usize>, usize, usize) {
    let st = strides(dims);
    let discard: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let dk: usize = keep.iter().map(|&k| dims[k]).product();
    let dd: usize = discard.iter().map(|&k| dims[k]).product();
    let offsets = |sel: &[usize], count: usize| -> Vec<usize> {
        (0..count)
            .map(|mut idx| {
                let mut full = 0;
                for &k in sel.iter().rev() {
                    full += (idx % dims[k]) * st[k];
                    idx /= dims[k];
                }
                full
            })
            .collect()
    };
    let ka = offsets(keep, dk);
    let da = offsets(&discard, dd);
    let mut table = Vec::with_capacity(dk * dd);
    for a in &ka {
        for d in &da {
            table.push(a + d);
        }
    }
    (table, dk, dd)
}

fn positions(systems: &[SystemLabel], names: &[&str]) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(names.len());
    for n in names {
        let p = systems
            .iter()
            .position(|s| s.name == *n)
            .ok_or_else(|| Error::UnknownLabel((*n).to_string()))?;
        if out.contains(&p) {
            return Err(Error::LabelCollision((*n).to_string()));
        }
        out.push(p);
    }
    Ok(out)
}

fn permutation_map(dims: &[usize], perm: &[usize]) -> Vec<usize> {
    let st = strides(dims);
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let total: usize = dims.iter().product();
    (0..total)
        .map(|mut idx| {
            let mut old = 0;
            for (pos, &p) in perm.iter().enumerate().rev() {
                old += (idx % new_dims[pos]) * st[p];
                idx /= new_dims[pos];
            }
            old
        })
        .collect()
}

fn names_of(systems: &[SystemLabel]) -> String {
    systems
        .iter()
        .map(|s| format!("{}({})", s.name, s.dim))
        .collect::<Vec<_>>()
        .join("⊗")
}

// ---------------------------------------------------------------------------
// Labeled operators

/// A Hermitian operator on a labeled tensor-product space.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    systems: Vec<SystemLabel>,
    mat: CMat,
}

impl HermitianOperator {
    /// Validates shape, label uniqueness and Hermiticity within 1e-12.
    pub fn new(systems: Vec<SystemLabel>, mat: CMat) -> Result<Self> {
        let d = total_dim(&systems)?;
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{} but {} has dimension {d}",
                mat.nrows(),
                mat.ncols(),
                names_of(&systems)
            )));
        }
        let defect = hermiticity_defect(&mat);
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
        Ok(Self {
            systems,
            mat: hermitize(&mat),
        })
    }

    /// For results of arithmetic that is Hermitian up to rounding.
    pub(crate) fn from_parts(systems: Vec<SystemLabel>, mat: CMat) -> Self {
        debug_assert_eq!(
            systems.iter().map(|s| s.dim).product::<usize>(),
            mat.nrows()
        );
        Self {
            systems,
            mat: hermitize(&mat),
        }
    }

    pub fn single(name: &str, mat: CMat) -> Result<Self> {
        let d = mat.nrows();
        Self::new(vec![SystemLabel::new(name, d)], mat)
    }

    pub fn systems(&self) -> &[SystemLabel] {
        &self.systems
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn names(&self) -> Vec<&str> {
        self.systems.iter().map(|s| s.name.as_str()).collect()
    }

    pub fn system(&self, name: &str) -> Option<&SystemLabel> {
        self.systems.iter().find(|s| s.name == name)
    }

    pub fn eigh(&self) -> Eigh {
        eigh(&self.mat)
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let mut systems = self.systems.clone();
        systems.extend(other.systems.iter().cloned());
        let d = total_dim(&systems)?;
        check_cap(d)?;
        Ok(Self {
            systems,
            mat: kron(&self.mat, &other.mat),
        })
    }

    /// Trace out the named systems.
    pub fn partial_trace(&self, discard: &[&str]) -> Result<Self> {
        let drop = positions(&self.systems, discard)?;
        let keep: Vec<usize> = (0..self.systems.len())
            .filter(|k| !drop.contains(k))
            .collect();
        Ok(self.trace_to_positions(&keep))
    }

    /// Keep the named systems, in the given order, and trace out the rest.
    pub fn reduce_to(&self, keep: &[&str]) -> Result<Self> {
        let keep = positions(&self.systems, keep)?;
        Ok(self.trace_to_positions(&keep))
    }

    fn trace_to_positions(&self, keep: &[usize]) -> Self {
        let dims: Vec<usize> = self.systems.iter().map(|s| s.dim).collect();
        let (table, dk, dd) = split_table(&dims, keep);
        let mut out = CMat::zeros(dk, dk);
        for a in 0..dk {
            for b in 0..dk {
                let mut s = Complex64::new(0.0, 0.0);
                for d in 0..dd {
                    s += self.mat[(table[a * dd + d], table[b * dd + d])];
                }
                out[(a, b)] = s;
            }
        }
        let systems = keep.iter().map(|&k| self.systems[k].clone()).collect();
        Self::from_parts(systems, out)
    }

    /// Reorder tensor factors; `order` must name every system exactly once.
    pub fn permute(&self, order: &[&str]) -> Result<Self> {
        if order.len() != self.systems.len() {
            return Err(Error::LabelMismatch(format!(
                "permutation {:?} does not cover {}",
                order,
                names_of(&self.systems)
            )));
        }
        let perm = positions(&self.systems, order)?;
        let dims: Vec<usize> = self.systems.iter().map(|s| s.dim).collect();
        let map = permutation_map(&dims, &perm);
        let n = map.len();
        let mat = CMat::from_fn(n, n, |i, j| self.mat[(map[i], map[j])]);
        let systems = perm.iter().map(|&p| self.systems[p].clone()).collect();
        Ok(Self { systems, mat })
    }

    /// Reorder to match the factor order of `reference`.
    pub fn aligned_to(&self, reference: &[SystemLabel]) -> Result<Self> {
        let order: Vec<&str> = reference.iter().map(|s| s.name.as_str()).collect();
        let out = self.permute(&order)?;
        if out.systems != reference {
            return Err(Error::LabelMismatch(format!(
                "{} vs {}",
                names_of(&out.systems),
                names_of(reference)
            )));
        }
        Ok(out)
    }

    /// Rename the factors, keeping their order and dimensions.
    pub fn relabel(&self, names: &[&str]) -> Result<Self> {
        if names.len() != self.systems.len() {
            return Err(Error::LabelMismatch(format!("{names:?}")));
        }
        let systems: Vec<SystemLabel> = self
            .systems
            .iter()
            .zip(names)
            .map(|(s, n)| SystemLabel::new(*n, s.dim))
            .collect();
        total_dim(&systems)?;
        Ok(Self {
            systems,
            mat: self.mat.clone(),
        })
    }

    /// `I ⊗ self` on `systems`, placing identity on every factor not covered.
    pub fn embed(&self, systems: &[SystemLabel]) -> Result<Self> {
        let mut extra = Vec::new();
        for s in systems {
            match self.system(&s.name) {
                Some(own) if own.dim != s.dim => {
                    return Err(Error::DimensionMismatch(format!(
                        "system `{}` has dimension {} here and {} in the target",
                        s.name, own.dim, s.dim
                    )))
                }
                Some(_) => {}
                None => extra.push(s.clone()),
            }
        }
        if extra.len() + self.systems.len() != systems.len() {
            return Err(Error::LabelMismatch(format!(
                "cannot embed {} into {}",
                names_of(&self.systems),
                names_of(systems)
            )));
        }
        let d: usize = extra.iter().map(|s| s.dim).product();
        let id = Self::from_parts(extra, identity(d));
        self.tensor(&id)?.aligned_to(systems)
    }

    pub fn same_space(&self, other: &Self) -> Result<()> {
        if self.systems != other.systems {
            return Err(Error::LabelMismatch(format!(
                "{} vs {}",
                names_of(&self.systems),
                names_of(&other.systems)
            )));
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            systems: self.systems.clone(),
            mat: self.mat.scale(s),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        Ok(Self {
            systems: self.systems.clone(),
            mat: &self.mat + &other.mat,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        Ok(Self {
            systems: self.systems.clone(),
            mat: &self.mat - &other.mat,
        })
    }

    /// `Re Tr(self · other)`.
    pub fn expectation(&self, other: &Self) -> Result<f64> {
        self.same_space(other)?;
        Ok(trace_product(&self.mat, &other.mat))
    }

    /// `A self A†` with `A` acting on the same space.
    pub fn conjugate(&self, a: &CMat) -> Self {
        Self::from_parts(self.systems.clone(), a * &self.mat * a.adjoint())
    }
}

macro_rules! wrapper_common {
    ($t:ident) => {
        impl std::ops::Deref for $t {
            type Target = HermitianOperator;
            fn deref(&self) -> &HermitianOperator {
                &self.0
            }
        }

        impl $t {
            pub fn as_hermitian(&self) -> &HermitianOperator {
                &self.0
            }

            pub fn into_hermitian(self) -> HermitianOperator {
                self.0
            }

            pub fn permute(&self, order: &[&str]) -> Result<Self> {
                Ok(Self(self.0.permute(order)?))
            }

            pub fn aligned_to(&self, reference: &[SystemLabel]) -> Result<Self> {
                Ok(Self(self.0.aligned_to(reference)?))
            }

            pub fn relabel(&self, names: &[&str]) -> Result<Self> {
                Ok(Self(self.0.relabel(names)?))
            }
        }
    };
}

/// A density operator: PSD within 1e-10 and unit trace within 1e-10.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator(HermitianOperator);

wrapper_common!(DensityOperator);

impl DensityOperator {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let tr = op.trace();
        if (tr - 1.0).abs() > SUPPORT_TOL {
            return Err(Error::NotState(format!("trace {tr} differs from 1")));
        }
        let min = op.eigh().min();
        if min < -SUPPORT_TOL {
            return Err(Error::NotState(format!("minimum eigenvalue {min:.3e}")));
        }
        Ok(Self(op))
    }

    pub fn from_matrix(systems: Vec<SystemLabel>, mat: CMat) -> Result<Self> {
        Self::new(HermitianOperator::new(systems, mat)?)
    }

    pub fn single(name: &str, mat: CMat) -> Result<Self> {
        Self::new(HermitianOperator::single(name, mat)?)
    }

    pub(crate) fn trusted_parts(systems: Vec<SystemLabel>, mat: CMat) -> Self {
        Self(HermitianOperator::from_parts(systems, mat))
    }

    /// Normalize a PSD operator of positive trace.
    pub fn normalized(op: HermitianOperator) -> Result<Self> {
        let tr = op.trace();
        if tr <= SUPPORT_TOL {
            return Err(Error::NotState(format!("trace {tr} is not positive")));
        }
        Self::new(op.scaled(1.0 / tr))
    }

    pub fn diagonal(name: &str, probs: &[f64]) -> Result<Self> {
        Self::single(name, diag(probs))
    }

    pub fn maximally_mixed(name: &str, dim: usize) -> Self {
        Self::trusted_parts(
            vec![SystemLabel::new(name, dim)],
            identity(dim).scale(1.0 / dim as f64),
        )
    }

    /// Pure qubit state with the given Bloch vector, or a mixed one if its
    /// norm is below 1.
    pub fn from_bloch(name: &str, r: [f64; 3]) -> Result<Self> {
        let n = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        if n > 1.0 + SUPPORT_TOL {
            return Err(Error::NotState(format!("Bloch vector norm {n} exceeds 1")));
        }
        let m = CMat::from_row_slice(
            2,
            2,
            &[
                c64(0.5 * (1.0 + r[2]), 0.0),
                c64(0.5 * r[0], -0.5 * r[1]),
                c64(0.5 * r[0], 0.5 * r[1]),
                c64(0.5 * (1.0 - r[2]), 0.0),
            ],
        );
        Ok(Self::trusted_parts(vec![SystemLabel::new(name, 2)], m))
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        Ok(Self(self.0.tensor(&other.0)?))
    }

    pub fn partial_trace(&self, discard: &[&str]) -> Result<Self> {
        Ok(Self(self.0.partial_trace(discard)?))
    }

    pub fn reduce_to(&self, keep: &[&str]) -> Result<Self> {
        Ok(Self(self.0.reduce_to(keep)?))
    }

    /// Convex combination `Σ wᵢ ρᵢ`; all states must share one space.
    pub fn mixture(parts: &[(f64, &DensityOperator)]) -> Result<Self> {
        let (_, first) = parts
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty mixture".into()))?;
        let mut acc = CMat::zeros(first.dim(), first.dim());
        let mut total = 0.0;
        for (w, rho) in parts {
            first.same_space(rho)?;
            acc += rho.matrix().scale(*w);
            total += w;
        }
        if (total - 1.0).abs() > SUPPORT_TOL {
            return Err(Error::InvalidParameter(format!(
                "mixture weights sum to {total}"
            )));
        }
        Ok(Self::trusted_parts(first.systems().to_vec(), acc))
    }

    pub fn entropy(&self) -> f64 {
        self.eigh()
            .values
            .iter()
            .filter(|&&p| p > SUPPORT_TOL)
            .map(|&p| -p * p.log2())
            .sum()
    }
}

/// A measurement operator: eigenvalues in [0, 1] within 1e-10.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementOperator(HermitianOperator);

wrapper_common!(MeasurementOperator);

impl MeasurementOperator {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let e = op.eigh();
        if e.min() < -SUPPORT_TOL || e.max() > 1.0 + SUPPORT_TOL {
            return Err(Error::NotMeasurement(format!(
                "spectrum [{:.3e}, {:.3e}] leaves [0, 1]",
                e.min(),
                e.max()
            )));
        }
        Ok(Self(op))
    }

    pub(crate) fn trusted(op: HermitianOperator) -> Self {
        Self(op)
    }

    pub fn complement(&self) -> Self {
        let d = self.dim();
        Self(HermitianOperator::from_parts(
            self.systems().to_vec(),
            identity(d) - self.matrix(),
        ))
    }

    /// `Tr(Λρ)`.
    pub fn probability(&self, rho: &DensityOperator) -> Result<f64> {
        self.expectation(rho)
    }
}

/// A normalized pure state vector on labeled systems.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    systems: Vec<SystemLabel>,
    amps: CVec,
}

impl StateVector {
    pub fn new(systems: Vec<SystemLabel>, amps: CVec) -> Result<Self> {
        let d = total_dim(&systems)?;
        if amps.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "vector has length {} but {} has dimension {d}",
                amps.len(),
                names_of(&systems)
            )));
        }
        let n = amps.norm();
        if (n - 1.0).abs() > SUPPORT_TOL {
            return Err(Error::NotState(format!("vector norm {n} differs from 1")));
        }
        Ok(Self { systems, amps })
    }

    pub fn systems(&self) -> &[SystemLabel] {
        &self.systems
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amps
    }

    pub fn to_density(&self) -> DensityOperator {
        DensityOperator::trusted_parts(self.systems.clone(), outer(&self.amps))
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let mut systems = self.systems.clone();
        systems.extend(other.systems.iter().cloned());
        let d = total_dim(&systems)?;
        check_cap(d)?;
        Ok(Self {
            systems,
            amps: self.amps.kronecker(&other.amps),
        })
    }

    pub fn relabel(&self, names: &[&str]) -> Result<Self> {
        if names.len() != self.systems.len() {
            return Err(Error::LabelMismatch(format!("{names:?}")));
        }
        let systems: Vec<SystemLabel> = self
            .systems
            .iter()
            .zip(names)
            .map(|(s, n)| SystemLabel::new(*n, s.dim))
            .collect();
        total_dim(&systems)?;
        Ok(Self {
            systems,
            amps: self.amps.clone(),
        })
    }

    pub fn permute(&self, order: &[&str]) -> Result<Self> {
        if order.len() != self.systems.len() {
            return Err(Error::LabelMismatch(format!("{order:?}")));
        }
        let perm = positions(&self.systems, order)?;
        let dims: Vec<usize> = self.systems.iter().map(|s| s.dim).collect();
        let map = permutation_map(&dims, &perm);
        let amps = CVec::from_fn(map.len(), |i, _| self.amps[map[i]]);
        let systems = perm.iter().map(|&p| self.systems[p].clone()).collect();
        Ok(Self { systems, amps })
    }
}

// ---------------------------------------------------------------------------
// Distances and derived operators

pub fn trace_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    rho.same_space(sigma)?;
    Ok(0.5 * trace_norm(&(rho.matrix() - sigma.matrix())))
}

/// Root fidelity `‖√ρ √σ‖₁` of two PSD matrices.
pub fn fidelity_matrices(rho: &CMat, sigma: &CMat) -> f64 {
    let prod = psd_sqrt(rho) * psd_sqrt(sigma);
    let f: f64 = SVD::new(prod, false, false).singular_values.iter().sum();
    f.min(1.0)
}

pub fn fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    rho.same_space(sigma)?;
    Ok(fidelity_matrices(rho.matrix(), sigma.matrix()))
}

pub fn purified_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    let f = fidelity(rho, sigma)?;
    Ok((1.0 - f * f).max(0.0).sqrt())
}

/// Projector onto the strictly positive eigenspace (eigenvalue > 1e-10).
pub fn positive_part_projector(h: &HermitianOperator) -> MeasurementOperator {
    let p = h.eigh().projector(|l| l > SUPPORT_TOL);
    MeasurementOperator::trusted(HermitianOperator::from_parts(h.systems().to_vec(), p))
}

/// Canonical purification `Σ √pᵢ |vᵢ⟩ ⊗ |i⟩` with a reference of equal dimension.
pub fn purify_vector(rho: &DensityOperator, reference: &str) -> Result<StateVector> {
    let e = rho.eigh();
    let d = rho.dim();
    let mut amps = CVec::zeros(d * d);
    for i in 0..d {
        let p = e.values[i].max(0.0);
        if p <= 0.0 {
            continue;
        }
        let s = p.sqrt();
        for row in 0..d {
            amps[row * d + i] += e.vectors[(row, i)] * s;
        }
    }
    let n = amps.norm();
    amps.unscale_mut(n);
    let mut systems = rho.systems().to_vec();
    systems.push(SystemLabel::new(reference, d));
    StateVector::new(systems, amps)
}

pub fn purify(rho: &DensityOperator, reference: &str) -> Result<DensityOperator> {
    Ok(purify_vector(rho, reference)?.to_density())
}

// ---------------------------------------------------------------------------
// Wiretap channels

/// Which outputs of a wiretap channel to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChannelOutput {
    B,
    E,
    BE,
}

/// A channel from `input` to Bob's `B` and Eve's `E`, stored as a Stinespring
/// isometry `V: A → B ⊗ E`.
#[derive(Debug, Clone, PartialEq)]
pub struct WiretapChannel {
    input: SystemLabel,
    out_b: SystemLabel,
    out_e: SystemLabel,
    isometry: CMat,
}

impl WiretapChannel {
    pub fn new(
        input: SystemLabel,
        out_b: SystemLabel,
        out_e: SystemLabel,
        isometry: CMat,
    ) -> Result<Self> {
        total_dim(&[input.clone(), out_b.clone(), out_e.clone()])?;
        let rows = out_b.dim * out_e.dim;
        if isometry.nrows() != rows || isometry.ncols() != input.dim {
            return Err(Error::DimensionMismatch(format!(
                "isometry is {}x{} but needs {}x{}",
                isometry.nrows(),
                isometry.ncols(),
                rows,
                input.dim
            )));
        }
        let defect = max_abs_diff(&(isometry.adjoint() * &isometry), &identity(input.dim));
        if defect > SUPPORT_TOL {
            return Err(Error::NotIsometry(defect));
        }
        Ok(Self {
            input,
            out_b,
            out_e,
            isometry,
        })
    }

    /// Builds the isometry `Σⱼ Kⱼ ⊗ |j⟩_E` from Kraus operators.
    pub fn from_kraus(
        input: SystemLabel,
        out_b: SystemLabel,
        env_name: &str,
        kraus: &[CMat],
    ) -> Result<Self> {
        let de = kraus.len();
        if de == 0 {
            return Err(Error::InvalidParameter("no Kraus operators".into()));
        }
        let mut v = CMat::zeros(out_b.dim * de, input.dim);
        for (j, k) in kraus.iter().enumerate() {
            if k.nrows() != out_b.dim || k.ncols() != input.dim {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator {j} is {}x{}",
                    k.nrows(),
                    k.ncols()
                )));
            }
            for b in 0..out_b.dim {
                for a in 0..input.dim {
                    v[(b * de + j, a)] = k[(b, a)];
                }
            }
        }
        Self::new(input, out_b, SystemLabel::new(env_name, de), v)
    }

    /// Noiseless channel with a one-dimensional environment.
    pub fn identity(dim: usize) -> Self {
        Self {
            input: SystemLabel::new("A", dim),
            out_b: SystemLabel::new("B", dim),
            out_e: SystemLabel::new("E", 1),
            isometry: identity(dim),
        }
    }

    pub fn input(&self) -> &SystemLabel {
        &self.input
    }

    pub fn output_b(&self) -> &SystemLabel {
        &self.out_b
    }

    pub fn output_e(&self) -> &SystemLabel {
        &self.out_e
    }

    pub fn isometry(&self) -> &CMat {
        &self.isometry
    }

    /// Kraus operators of the `A → B` channel, one per environment basis state.
    pub fn kraus(&self) -> Vec<CMat> {
        let (db, de, da) = (self.out_b.dim, self.out_e.dim, self.input.dim);
        (0..de)
            .map(|j| CMat::from_fn(db, da, |b, a| self.isometry[(b * de + j, a)]))
            .collect()
    }

    /// Kraus operators of the complementary `A → E` channel.
    pub fn complementary_kraus(&self) -> Vec<CMat> {
        let (db, de, da) = (self.out_b.dim, self.out_e.dim, self.input.dim);
        (0..db)
            .map(|b| CMat::from_fn(de, da, |e, a| self.isometry[(b * de + e, a)]))
            .collect()
    }

    fn lifted(&self, others: usize) -> CMat {
        if others == 1 {
            self.isometry.clone()
        } else {
            kron(&identity(others), &self.isometry)
        }
    }

    fn out_systems(&self, rest: &[SystemLabel]) -> Result<Vec<SystemLabel>> {
        let mut systems = rest.to_vec();
        systems.push(self.out_b.clone());
        systems.push(self.out_e.clone());
        let d = total_dim(&systems)?;
        check_cap(d)?;
        Ok(systems)
    }

    fn split_input(&self, systems: &[SystemLabel]) -> Result<(Vec<String>, Vec<SystemLabel>)> {
        let own = systems
            .iter()
            .find(|s| s.name == self.input.name)
            .ok_or_else(|| Error::UnknownLabel(self.input.name.clone()))?;
        if own.dim != self.input.dim {
            return Err(Error::DimensionMismatch(format!(
                "input `{}` has dimension {} but the channel expects {}",
                own.name, own.dim, self.input.dim
            )));
        }
        let rest: Vec<SystemLabel> = systems
            .iter()
            .filter(|s| s.name != self.input.name)
            .cloned()
            .collect();
        let mut order: Vec<String> = rest.iter().map(|s| s.name.clone()).collect();
        order.push(self.input.name.clone());
        Ok((order, rest))
    }

    /// Pass a pure state through the isometry; the input factor is replaced by
    /// `B ⊗ E` at the end of the factor list.
    pub fn apply_vector(&self, psi: &StateVector) -> Result<StateVector> {
        let (order, rest) = self.split_input(psi.systems())?;
        let order: Vec<&str> = order.iter().map(String::as_str).collect();
        let psi = psi.permute(&order)?;
        let others: usize = rest.iter().map(|s| s.dim).product();
        let systems = self.out_systems(&rest)?;
        let amps = self.lifted(others) * psi.amplitudes();
        Ok(StateVector { systems, amps })
    }
}

/// Apply the channel to the input factor of `rho` and keep the requested
/// outputs. Other factors are carried through in their original order.
pub fn apply_channel(
    channel: &WiretapChannel,
    rho: &DensityOperator,
    keep: ChannelOutput,
) -> Result<DensityOperator> {
    let (order, rest) = channel.split_input(rho.systems())?;
    let order: Vec<&str> = order.iter().map(String::as_str).collect();
    let rho = rho.permute(&order)?;
    let others: usize = rest.iter().map(|s| s.dim).product();
    let systems = channel.out_systems(&rest)?;
    let w = channel.lifted(others);
    let full = DensityOperator::trusted_parts(systems, &w * rho.matrix() * w.adjoint());
    match keep {
        ChannelOutput::BE => Ok(full),
        ChannelOutput::B => full.partial_trace(&[channel.out_e.name.as_str()]),
        ChannelOutput::E => full.partial_trace(&[channel.out_b.name.as_str()]),
    }
}
