//! Symmetric eigenvalue solvers, self-contained.
//!
//! Three layers, each O(n) in storage beyond the input:
//!
//! * [`SymTridiag`] — implicit-QL iteration for all eigenvalues
//!   (Bowdler–Martin–Reinsch–Wilkinson, eigenvalues only), and
//!   Sturm-sequence bisection for selected indices, which is the cheap
//!   path when only a few edge eigenvalues of a large matrix are needed.
//! * [`SymMat`] — dense symmetric matrices, reduced to tridiagonal form by
//!   Householder reflections and finished by QL.
//! * [`hermitian_eigenvalues`] — complex Hermitian `H = A + iB` through the
//!   real symmetric embedding `[[A, −B], [B, A]]`, whose spectrum is that
//!   of `H` doubled; the doubled eigenvalues are merged pairwise.
//!
//! The solvers are validated against the exact spectrum of the free
//! Laplacian (`2cos(kπ/(n+1))`) and against each other.

/// Symmetric tridiagonal matrix: `diag` has length `n`, `off` length `n-1`.
#[derive(Clone, Debug)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len(), "off-diagonal must have length n-1");
        SymTridiag { diag, off }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// All eigenvalues, ascending, by implicit QL with Wilkinson shifts.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let n = self.n();
        let mut d = self.diag.clone();
        let mut e = vec![0.0f64; n];
        e[..n - 1].copy_from_slice(&self.off);

        for l in 0..n {
            let mut iter = 0;
            loop {
                // Look for a negligible subdiagonal element to split at.
                let mut m = l;
                while m + 1 < n {
                    let dd = d[m].abs() + d[m + 1].abs();
                    if e[m].abs() <= f64::EPSILON * dd {
                        break;
                    }
                    m += 1;
                }
                if m == l {
                    break;
                }
                iter += 1;
                assert!(iter < 64, "QL failed to converge at row {l}");

                // Wilkinson shift from the leading 2x2 of the active block.
                let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                let mut r = g.hypot(1.0);
                g = d[m] - d[l] + e[l] / (g + r.copysign(g));
                let (mut s, mut c) = (1.0f64, 1.0f64);
                let mut p = 0.0f64;
                let mut underflow = false;
                for i in (l..m).rev() {
                    let f = s * e[i];
                    let b = c * e[i];
                    r = f.hypot(g);
                    e[i + 1] = r;
                    if r == 0.0 {
                        // Negligible rotation: deflate and retry.
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        underflow = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                }
                if underflow {
                    continue;
                }
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        }
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        d
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence count).
    pub fn count_below(&self, x: f64) -> usize {
        let n = self.n();
        let mut count = 0usize;
        let mut q = 1.0f64;
        for i in 0..n {
            let off2 = if i == 0 { 0.0 } else { self.off[i - 1] * self.off[i - 1] };
            q = (self.diag[i] - x) - off2 / q;
            if q == 0.0 {
                q = 1e-300;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.n();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            let r = (if i > 0 { self.off[i - 1].abs() } else { 0.0 })
                + (if i + 1 < n { self.off[i].abs() } else { 0.0 });
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// The `k`-th smallest eigenvalue (0-based), by bisection on the Sturm
    /// count, to near machine precision relative to the spectral span.
    pub fn eigenvalue_k(&self, k: usize) -> f64 {
        assert!(k < self.n());
        let (mut lo, mut hi) = self.gershgorin();
        let span = (hi - lo).max(1e-300);
        let tol = span * 1e-15;
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Eigenvalues at the given 0-based indices (each by bisection).
    pub fn eigenvalues_at(&self, indices: &[usize]) -> Vec<f64> {
        indices.iter().map(|&k| self.eigenvalue_k(k)).collect()
    }

    /// The `m` smallest eigenvalues, ascending.
    pub fn smallest(&self, m: usize) -> Vec<f64> {
        (0..m.min(self.n())).map(|k| self.eigenvalue_k(k)).collect()
    }
}

/// Dense symmetric matrix, row-major full storage. Only the lower triangle
/// is read by the solver; `set_sym` keeps both halves in sync.
#[derive(Clone, Debug)]
pub struct SymMat {
    pub n: usize,
    pub a: Vec<f64>,
}

impl SymMat {
    pub fn zeros(n: usize) -> Self {
        SymMat { n, a: vec![0.0; n * n] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
    }

    #[inline]
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
        self.a[j * self.n + i] = v;
    }

    /// Householder reduction to symmetric tridiagonal form (eigenvalues
    /// only; the matrix is consumed as scratch).
    fn tridiagonalize(mut self) -> SymTridiag {
        let n = self.n;
        let mut d = vec![0.0f64; n];
        let mut e = vec![0.0f64; n];
        for i in (1..n).rev() {
            let l = i - 1;
            let mut h = 0.0f64;
            if l > 0 {
                let mut scale = 0.0f64;
                for k in 0..=l {
                    scale += self.get(i, k).abs();
                }
                if scale == 0.0 {
                    e[i] = self.get(i, l);
                } else {
                    for k in 0..=l {
                        let v = self.get(i, k) / scale;
                        self.set(i, k, v);
                        h += v * v;
                    }
                    let f = self.get(i, l);
                    let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                    e[i] = scale * g;
                    h -= f * g;
                    self.set(i, l, f - g);
                    let mut fs = 0.0f64;
                    for j in 0..=l {
                        let mut g = 0.0f64;
                        for k in 0..=j {
                            g += self.get(j, k) * self.get(i, k);
                        }
                        for k in (j + 1)..=l {
                            g += self.get(k, j) * self.get(i, k);
                        }
                        e[j] = g / h;
                        fs += e[j] * self.get(i, j);
                    }
                    let hh = fs / (h + h);
                    for j in 0..=l {
                        let f = self.get(i, j);
                        let g = e[j] - hh * f;
                        e[j] = g;
                        for k in 0..=j {
                            let v = self.get(j, k) - f * e[k] - g * self.get(i, k);
                            self.set(j, k, v);
                        }
                    }
                }
            } else {
                e[i] = self.get(i, l);
            }
            d[i] = h;
        }
        for i in 0..n {
            d[i] = self.get(i, i);
        }
        SymTridiag::new(d, e[1..].to_vec())
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(self) -> Vec<f64> {
        if self.n == 0 {
            return Vec::new();
        }
        if self.n == 1 {
            return vec![self.get(0, 0)];
        }
        self.tridiagonalize().eigenvalues()
    }

    /// Cholesky factorization in place (lower triangle); `None` if the
    /// matrix is not numerically positive definite.
    pub fn cholesky(mut self) -> Option<CholeskyFactor> {
        let n = self.n;
        for j in 0..n {
            let mut s = self.get(j, j);
            for k in 0..j {
                s -= self.get(j, k) * self.get(j, k);
            }
            if s <= 0.0 {
                return None;
            }
            let ljj = s.sqrt();
            self.set(j, j, ljj);
            for i in (j + 1)..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= self.get(i, k) * self.get(j, k);
                }
                self.set(i, j, s / ljj);
            }
        }
        Some(CholeskyFactor { l: self })
    }
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
pub struct CholeskyFactor {
    l: SymMat,
}

impl CholeskyFactor {
    /// Solve `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.n;
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.l.get(i, k) * y[k];
            }
            y[i] /= self.l.get(i, i);
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                y[i] -= self.l.get(k, i) * y[k];
            }
            y[i] /= self.l.get(i, i);
        }
        y
    }
}

/// Eigenvalues of the complex Hermitian matrix `A + iB` (`A` symmetric, `B`
/// antisymmetric, both `n×n` row-major), via the `2n×2n` real symmetric
/// embedding `[[A, −B], [B, A]]`. The embedded spectrum is the Hermitian
/// spectrum doubled; adjacent sorted pairs are merged by averaging.
pub fn hermitian_eigenvalues(re: &[f64], im: &[f64], n: usize) -> Vec<f64> {
    assert_eq!(re.len(), n * n);
    assert_eq!(im.len(), n * n);
    let mut m = SymMat::zeros(2 * n);
    for i in 0..n {
        for j in 0..n {
            m.set(i, j, re[i * n + j]);
            m.set(n + i, n + j, re[i * n + j]);
            m.set(i, n + j, -im[i * n + j]);
            m.set(n + i, j, im[i * n + j]);
        }
    }
    let w = m.eigenvalues();
    (0..n).map(|k| 0.5 * (w[2 * k] + w[2 * k + 1])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> SymTridiag {
        SymTridiag::new(vec![0.0; n], vec![1.0; n - 1])
    }

    #[test]
    fn laplacian_spectrum_exact() {
        // Free Laplacian: eigenvalues 2cos(k pi/(n+1)), k = 1..n.
        let n = 50;
        let t = laplacian(n);
        let mut expect: Vec<f64> = (1..=n)
            .map(|k| 2.0 * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos())
            .collect();
        expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let got = t.eigenvalues();
        for (g, x) in got.iter().zip(&expect) {
            assert!((g - x).abs() < 1e-10, "QL: {g} vs {x}");
        }
        let gb = t.eigenvalues_at(&(0..n).collect::<Vec<_>>());
        for (g, x) in gb.iter().zip(&expect) {
            assert!((g - x).abs() < 1e-10, "bisection: {g} vs {x}");
        }
    }

    #[test]
    fn ql_matches_bisection_and_trace() {
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(11, 0);
        for trial in 0..25 {
            let n = 2 + (trial % 17);
            let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let off: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let t = SymTridiag::new(diag.clone(), off.clone());
            let eq = t.eigenvalues();
            let eb = t.eigenvalues_at(&(0..n).collect::<Vec<_>>());
            let scale: f64 = eq.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for (a, b) in eq.iter().zip(&eb) {
                assert!((a - b).abs() < 1e-11 * scale, "{a} vs {b}");
            }
            let tr: f64 = diag.iter().sum();
            let s: f64 = eq.iter().sum();
            assert!((tr - s).abs() < 1e-9 * scale.max(1.0) * n as f64);
            let fr: f64 = diag.iter().map(|d| d * d).sum::<f64>()
                + 2.0 * off.iter().map(|o| o * o).sum::<f64>();
            let s2: f64 = eq.iter().map(|v| v * v).sum();
            assert!((fr - s2).abs() < 1e-9 * fr.max(1.0));
        }
    }

    #[test]
    fn dense_matches_tridiagonal_and_closed_forms() {
        // 2x2 closed form.
        let mut m = SymMat::zeros(2);
        m.set_sym(0, 0, 1.0);
        m.set_sym(1, 1, 3.0);
        m.set_sym(0, 1, 2.0);
        let w = m.eigenvalues();
        let d = ((1.0f64 - 3.0) * (1.0 - 3.0) / 4.0 + 4.0).sqrt();
        assert!((w[0] - (2.0 - d)).abs() < 1e-12);
        assert!((w[1] - (2.0 + d)).abs() < 1e-12);

        // Dense copy of a random tridiagonal agrees with the tridiagonal path.
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(5, 1);
        let n = 24;
        let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let off: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut m = SymMat::zeros(n);
        for i in 0..n {
            m.set(i, i, diag[i]);
            if i + 1 < n {
                m.set_sym(i, i + 1, off[i]);
            }
        }
        let wd = m.eigenvalues();
        let wt = SymTridiag::new(diag, off).eigenvalues();
        for (a, b) in wd.iter().zip(&wt) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn hermitian_2x2_closed_form() {
        // H = [[1, 2-0.5i], [2+0.5i, -1]]; eigs = ± sqrt(1 + 4.25)
        let re = vec![1.0, 2.0, 2.0, -1.0];
        let im = vec![0.0, -0.5, 0.5, 0.0];
        let w = hermitian_eigenvalues(&re, &im, 2);
        let r = (1.0f64 + 4.25).sqrt();
        assert!((w[0] + r).abs() < 1e-12, "{}", w[0]);
        assert!((w[1] - r).abs() < 1e-12, "{}", w[1]);
    }

    #[test]
    fn cholesky_solves() {
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(3, 2);
        let n = 30;
        // A = G Gᵀ + n I is SPD.
        let g: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut a = SymMat::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = 0.0;
                for k in 0..n {
                    s += g[i * n + k] * g[j * n + k];
                }
                a.set_sym(i, j, s + if i == j { n as f64 } else { 0.0 });
            }
        }
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut b = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                b[i] += a.get(i, j) * x_true[j];
            }
        }
        let f = a.cholesky().expect("SPD");
        let x = f.solve(&b);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-9);
        }
    }
}
