//! Spherical-harmonic bookkeeping on the sphere and on products of patch spheres.
//!
//! Kernel matrices are never assembled from explicit harmonics. The addition
//! theorem `Σ_l Y_kl(x) Y_kl(x') = N(d,k) P_k(x·x')` lets every Gram matrix be
//! written directly in terms of the normalized Legendre polynomials `P_k`.

use faer::Mat;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Input space: the unit sphere `S^{d-1}`, or `p` independent patch spheres
/// `S^{d0-1}` concatenated into vectors of length `p * d0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Geometry {
    Full { d: usize },
    Patched { d0: usize, p: usize },
}

impl Geometry {
    pub fn full(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::invalid(format!("sphere dimension d = {d} must be >= 2")));
        }
        Ok(Geometry::Full { d })
    }

    pub fn patched(d0: usize, p: usize) -> Result<Self> {
        if d0 < 2 {
            return Err(Error::invalid(format!("patch dimension d0 = {d0} must be >= 2")));
        }
        if p < 1 {
            return Err(Error::invalid("patch count p must be >= 1"));
        }
        Ok(Geometry::Patched { d0, p })
    }

    /// Length of an input vector.
    pub fn dim(&self) -> usize {
        match *self {
            Geometry::Full { d } => d,
            Geometry::Patched { d0, p } => d0 * p,
        }
    }

    /// Dimension of the sphere each zonal polynomial lives on.
    pub fn sphere_dim(&self) -> usize {
        match *self {
            Geometry::Full { d } => d,
            Geometry::Patched { d0, .. } => d0,
        }
    }

    pub fn patches(&self) -> usize {
        match *self {
            Geometry::Full { .. } => 1,
            Geometry::Patched { p, .. } => p,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Geometry::Full { d } => Geometry::full(d).map(|_| ()),
            Geometry::Patched { d0, p } => Geometry::patched(d0, p).map(|_| ()),
        }
    }
}

/// `m` points on a [`Geometry`], stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    geometry: Geometry,
    points: Vec<f64>,
    m: usize,
    seed: u64,
}

impl Dataset {
    /// Wraps caller-supplied points, checking the unit-norm invariant.
    pub fn from_rows(geometry: Geometry, points: Vec<f64>, seed: u64) -> Result<Self> {
        geometry.validate()?;
        let dim = geometry.dim();
        if points.is_empty() || points.len() % dim != 0 {
            return Err(Error::invalid(format!(
                "point buffer of length {} is not a nonempty multiple of {dim}",
                points.len()
            )));
        }
        let ds = Dataset {
            geometry,
            m: points.len() / dim,
            points,
            seed,
        };
        let block = geometry.sphere_dim();
        for (i, row) in ds.rows().enumerate() {
            for chunk in row.chunks(block) {
                let norm = chunk.iter().map(|v| v * v).sum::<f64>().sqrt();
                if (norm - 1.0).abs() > 1e-12 {
                    return Err(Error::invalid(format!("row {i} has block norm {norm}")));
                }
            }
        }
        Ok(ds)
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let dim = self.geometry.dim();
        &self.points[i * dim..(i + 1) * dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.points.chunks_exact(self.geometry.dim())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.points
    }
}

fn binomial(n: i64, r: i64) -> Result<u128> {
    if r < 0 || n < r {
        return Ok(0);
    }
    let r = r.min(n - r) as u128;
    let n = n as u128;
    let mut acc: u128 = 1;
    for i in 1..=r {
        // acc * (n - r + i) / i stays an exact binomial at every step
        acc = acc
            .checked_mul(n - r + i)
            .ok_or_else(|| Error::Overflow(format!("C({n}, {r})")))?
            / i;
    }
    Ok(acc)
}

/// Number of linearly independent degree-`k` harmonics, `N(d,k)` on the
/// sphere or `p N(d0,k)` on the patched space.
pub fn harmonic_dim(geometry: Geometry, k: usize) -> Result<u64> {
    geometry.validate()?;
    if k < 1 {
        return Err(Error::invalid("harmonic degree must be >= 1"));
    }
    let d = geometry.sphere_dim() as i64;
    let k = k as i64;
    let n = binomial(d + k - 1, k)? - binomial(d + k - 3, k - 2)?;
    let n = n
        .checked_mul(geometry.patches() as u128)
        .ok_or_else(|| Error::Overflow(format!("{} * N({d}, {k})", geometry.patches())))?;
    u64::try_from(n).map_err(|_| Error::Overflow(format!("N({d}, {k}) does not fit in u64")))
}

/// `Σ_{k=1}^{r} harmonic_dim(geometry, k)`.
pub fn harmonic_dim_upto(geometry: Geometry, r: usize) -> Result<u64> {
    (1..=r).try_fold(0u64, |acc, k| {
        acc.checked_add(harmonic_dim(geometry, k)?)
            .ok_or_else(|| Error::Overflow(format!("N(d, <= {r})")))
    })
}

/// Three-term recurrence coefficients for the Legendre polynomials of the
/// `d`-sphere, normalized so that `P_k(1) = 1`:
/// `(k + d - 2) P_{k+1} = (2k + d - 2) t P_k - k P_{k-1}`.
#[derive(Debug, Clone)]
pub struct LegendreTable {
    d: usize,
    // (a_k, b_k) with P_{k+1} = a_k t P_k - b_k P_{k-1}, for k = 1..
    coeffs: Vec<(f64, f64)>,
}

impl LegendreTable {
    pub fn new(d: usize, max_degree: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::invalid(format!("Legendre dimension d = {d} must be >= 2")));
        }
        let coeffs = (1..max_degree.max(1))
            .map(|k| {
                let denom = (k + d - 2) as f64;
                ((2 * k + d - 2) as f64 / denom, k as f64 / denom)
            })
            .collect();
        Ok(LegendreTable { d, coeffs })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn max_degree(&self) -> usize {
        self.coeffs.len() + 1
    }

    /// Writes `P_0(t), ..., P_K(t)` into `out` (length `K + 1 <= max_degree + 1`).
    pub fn eval_all(&self, t: f64, out: &mut [f64]) {
        let t = t.clamp(-1.0, 1.0);
        if out.is_empty() {
            return;
        }
        out[0] = 1.0;
        if out.len() == 1 {
            return;
        }
        out[1] = t;
        for k in 1..out.len() - 1 {
            let (a, b) = self.coeffs[k - 1];
            out[k + 1] = a * t * out[k] - b * out[k - 1];
        }
    }

    /// `Σ_k weights[k] P_k(t)`, with `weights[0]` the constant term.
    pub fn eval_series(&self, weights: &[f64], t: f64) -> f64 {
        let t = t.clamp(-1.0, 1.0);
        let Some((&w0, rest)) = weights.split_first() else {
            return 0.0;
        };
        let mut acc = w0;
        if rest.is_empty() {
            return acc;
        }
        let (mut prev, mut cur) = (1.0, t);
        acc += rest[0] * cur;
        for (k, &w) in rest.iter().enumerate().skip(1) {
            let (a, b) = self.coeffs[k - 1];
            let next = a * t * cur - b * prev;
            prev = cur;
            cur = next;
            acc += w * cur;
        }
        acc
    }
}

/// Normalized Legendre polynomial `P_k(t)` of the `d`-sphere.
pub fn legendre(d: usize, k: usize, t: f64) -> Result<f64> {
    let table = LegendreTable::new(d, k)?;
    let mut out = vec![0.0; k + 1];
    table.eval_all(t, &mut out);
    Ok(out[k])
}

/// Batched [`legendre`] over a slice of arguments.
pub fn legendre_batch(d: usize, k: usize, ts: &[f64]) -> Result<Vec<f64>> {
    let table = LegendreTable::new(d, k)?;
    let mut buf = vec![0.0; k + 1];
    Ok(ts
        .iter()
        .map(|&t| {
            table.eval_all(t, &mut buf);
            buf[k]
        })
        .collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four fixed lanes, so the rounding is the same on every call
    let mut acc = [0.0; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Zonal kernel matrix with entries `Σ_k weights[k] P_k(x_i · x'_j)`, patch
/// averaged on the patched geometry. Rows are independent, so the result does
/// not depend on how rayon schedules them.
pub fn zonal_gram(left: &Dataset, right: &Dataset, weights: &[f64]) -> Result<Mat<f64>> {
    let geometry = left.geometry();
    if right.geometry() != geometry {
        return Err(Error::invalid(format!(
            "geometry mismatch: {:?} vs {:?}",
            geometry,
            right.geometry()
        )));
    }
    let table = LegendreTable::new(geometry.sphere_dim(), weights.len().saturating_sub(1))?;
    let block = geometry.sphere_dim();
    let inv_p = 1.0 / geometry.patches() as f64;
    let (rows, cols) = (left.len(), right.len());

    let mut buf = vec![0.0; rows * cols];
    buf.par_chunks_mut(cols.max(1))
        .enumerate()
        .for_each(|(i, out)| {
            let xi = left.row(i);
            for (j, slot) in out.iter_mut().enumerate() {
                let xj = right.row(j);
                *slot = match geometry {
                    Geometry::Full { .. } => table.eval_series(weights, dot(xi, xj)),
                    Geometry::Patched { .. } => {
                        let s: f64 = xi
                            .chunks_exact(block)
                            .zip(xj.chunks_exact(block))
                            .map(|(a, b)| table.eval_series(weights, dot(a, b)))
                            .sum();
                        s * inv_p
                    }
                };
            }
        });
    Ok(Mat::from_fn(rows, cols, |i, j| buf[i * cols + j]))
}

/// Gram matrix of the single degree-`k` zonal polynomial.
pub fn legendre_gram(left: &Dataset, right: &Dataset, k: usize) -> Result<Mat<f64>> {
    let mut weights = vec![0.0; k + 1];
    weights[k] = 1.0;
    zonal_gram(left, right, &weights)
}

pub(crate) fn sample_sphere_with<R: Rng>(geometry: Geometry, m: usize, seed: u64, rng: &mut R) -> Result<Dataset> {
    geometry.validate()?;
    if m == 0 {
        return Err(Error::invalid("sample count m must be >= 1"));
    }
    let block = geometry.sphere_dim();
    let mut points = vec![0.0; m * geometry.dim()];
    for chunk in points.chunks_exact_mut(block) {
        loop {
            for v in chunk.iter_mut() {
                *v = StandardNormal.sample(rng);
            }
            let norm = chunk.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                chunk.iter_mut().for_each(|v| *v /= norm);
                break;
            }
        }
    }
    Ok(Dataset {
        geometry,
        points,
        m,
        seed,
    })
}

/// `m` i.i.d. uniform points from normalized Gaussian vectors, one per patch.
pub fn sample_sphere(geometry: Geometry, m: usize, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_sphere_with(geometry, m, seed, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_match_known_values() {
        let g = |d| Geometry::full(d).unwrap();
        for d in 2..30 {
            assert_eq!(harmonic_dim(g(d), 1).unwrap(), d as u64);
        }
        assert_eq!(harmonic_dim(g(3), 2).unwrap(), 5);
        assert_eq!(harmonic_dim(g(24), 3).unwrap(), 2576);
        assert_eq!(harmonic_dim(g(30), 2).unwrap(), 464);
        assert_eq!(harmonic_dim(Geometry::patched(20, 6).unwrap(), 1).unwrap(), 120);
        // 2k + 1 on the 2-sphere
        for k in 1..10 {
            assert_eq!(harmonic_dim(g(3), k).unwrap(), 2 * k as u64 + 1);
        }
        // circle: cos kθ, sin kθ
        for k in 1..10 {
            assert_eq!(harmonic_dim(g(2), k).unwrap(), 2);
        }
        assert_eq!(harmonic_dim_upto(g(24), 2).unwrap(), 24 + 299);
    }

    #[test]
    fn degree_zero_and_overflow_are_errors() {
        let g = Geometry::full(5).unwrap();
        assert!(matches!(harmonic_dim(g, 0), Err(Error::InvalidArgument(_))));
        let huge = Geometry::full(1 << 40).unwrap();
        assert!(matches!(harmonic_dim(huge, 6), Err(Error::Overflow(_))));
        // exceeds 32 bits but not 64
        let n = harmonic_dim(Geometry::full(400).unwrap(), 7).unwrap();
        assert!(n > u32::MAX as u64);
    }

    #[test]
    fn invalid_geometries_rejected() {
        assert!(Geometry::full(1).is_err());
        assert!(Geometry::patched(1, 3).is_err());
        assert!(Geometry::patched(4, 0).is_err());
    }

    #[test]
    fn legendre_closed_forms() {
        for d in 2..12 {
            for k in 0..9 {
                assert!((legendre(d, k, 1.0).unwrap() - 1.0).abs() < 1e-13);
            }
            for &t in &[-0.9, -0.3, 0.0, 0.41, 0.77] {
                assert_eq!(legendre(d, 1, t).unwrap(), t);
            }
        }
        assert!((legendre(3, 2, 0.5).unwrap() + 0.125).abs() < 1e-15);
        // classical P_3 on the 2-sphere and Chebyshev T_3 on the circle
        let t: f64 = 0.3;
        assert!((legendre(3, 3, t).unwrap() - 0.5 * (5.0 * t.powi(3) - 3.0 * t)).abs() < 1e-15);
        assert!((legendre(2, 3, t).unwrap() - (4.0 * t.powi(3) - 3.0 * t)).abs() < 1e-15);
        // out-of-domain rounding is clamped
        assert_eq!(legendre(7, 4, 1.0 + 1e-15).unwrap(), legendre(7, 4, 1.0).unwrap());
    }

    #[test]
    fn batch_matches_pointwise() {
        let ts: Vec<f64> = (0..21).map(|i| -1.0 + 0.1 * i as f64).collect();
        let batch = legendre_batch(9, 5, &ts).unwrap();
        for (t, v) in ts.iter().zip(batch) {
            assert_eq!(v, legendre(9, 5, *t).unwrap());
        }
    }

    #[test]
    fn series_matches_table() {
        let table = LegendreTable::new(11, 6).unwrap();
        let w = [0.0, 0.5, 0.25, 0.0, 0.1, 0.0, 0.03];
        let mut p = [0.0; 7];
        for &t in &[-1.0, -0.2, 0.35, 1.0] {
            table.eval_all(t, &mut p);
            let direct: f64 = w.iter().zip(&p).map(|(a, b)| a * b).sum();
            assert!((table.eval_series(&w, t) - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn sampling_contract() {
        let g = Geometry::full(8).unwrap();
        let a = sample_sphere(g, 5, 7).unwrap();
        let b = sample_sphere(g, 5, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        for row in a.rows() {
            assert_eq!(row.len(), 8);
            assert!((dot(row, row).sqrt() - 1.0).abs() < 1e-12);
        }
        assert_ne!(a, sample_sphere(g, 5, 8).unwrap());
        assert!(sample_sphere(g, 0, 7).is_err());

        let pg = Geometry::patched(4, 3).unwrap();
        let c = sample_sphere(pg, 2, 1).unwrap();
        assert_eq!(c.as_slice().len(), 24);
        for row in c.rows() {
            for blk in row.chunks(4) {
                assert!((dot(blk, blk).sqrt() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn from_rows_checks_norms() {
        let g = Geometry::full(2).unwrap();
        assert!(Dataset::from_rows(g, vec![1.0, 0.0, 0.6, 0.8], 0).is_ok());
        assert!(Dataset::from_rows(g, vec![1.0, 0.1], 0).is_err());
        assert!(Dataset::from_rows(g, vec![1.0, 0.0, 1.0], 0).is_err());
    }

    #[test]
    fn self_gram_structure() {
        let g = Geometry::full(6).unwrap();
        let x = sample_sphere(g, 9, 3).unwrap();
        let gram = legendre_gram(&x, &x, 3).unwrap();
        for i in 0..9 {
            assert!((gram[(i, i)] - 1.0).abs() < 1e-13);
            for j in 0..9 {
                assert_eq!(gram[(i, j)], gram[(j, i)]);
            }
        }
        let one = sample_sphere(g, 1, 3).unwrap();
        let g1 = legendre_gram(&one, &one, 4).unwrap();
        assert_eq!((g1.nrows(), g1.ncols()), (1, 1));
        assert!((g1[(0, 0)] - 1.0).abs() < 1e-14);

        let other = sample_sphere(Geometry::full(7).unwrap(), 3, 3).unwrap();
        assert!(legendre_gram(&x, &other, 1).is_err());
    }

    #[test]
    fn patched_single_patch_is_full() {
        let full = sample_sphere(Geometry::full(5).unwrap(), 6, 11).unwrap();
        let patched = Dataset::from_rows(Geometry::patched(5, 1).unwrap(), full.as_slice().to_vec(), 11).unwrap();
        let a = legendre_gram(&full, &full, 2).unwrap();
        let b = legendre_gram(&patched, &patched, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn patched_gram_is_patch_average() {
        let g = Geometry::patched(3, 4).unwrap();
        let x = sample_sphere(g, 3, 2).unwrap();
        let gram = legendre_gram(&x, &x, 2).unwrap();
        let expected: f64 = (0..4)
            .map(|a| {
                let u = &x.row(0)[3 * a..3 * a + 3];
                let v = &x.row(2)[3 * a..3 * a + 3];
                legendre(3, 2, dot(u, v)).unwrap()
            })
            .sum::<f64>()
            / 4.0;
        assert!((gram[(0, 2)] - expected).abs() < 1e-15);
    }
}
