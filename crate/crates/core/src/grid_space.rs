//! Discrete periodic function space: uniform mesh, forward differences with
//! periodic wrap, rectangle-rule norms and the subspace projections used by
//! the saddle-point searches.
//!
//! Node `t_M` is identified with `t_0`, so a grid function with `M` nodes and
//! `N` components carries exactly `M·N` unknowns.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use crate::error::{PlapError, Result};
use crate::real::Real;

/// Uniform periodic mesh on `[origin, origin + length)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mesh<S> {
    origin: S,
    length: S,
    nodes: usize,
    h: S,
}

impl<S: Real> Mesh<S> {
    pub const MIN_NODES: usize = 8;

    /// Uniform mesh on `[0, b)` with `m` nodes.
    pub fn new(b: S, m: usize) -> Result<Self> {
        Self::with_origin(S::zero(), b, m)
    }

    pub fn with_origin(origin: S, b: S, m: usize) -> Result<Self> {
        if !(b > S::zero()) || !b.is_finite() {
            return Err(PlapError::Domain(format!("period must be positive, got {b}")));
        }
        if m < Self::MIN_NODES {
            return Err(PlapError::Domain(format!(
                "mesh needs at least {} nodes, got {m}",
                Self::MIN_NODES
            )));
        }
        if !origin.is_finite() {
            return Err(PlapError::Domain("mesh origin must be finite".into()));
        }
        Ok(Mesh { origin, length: b, nodes: m, h: b / S::from_usize_lossy(m) })
    }

    /// The mesh of the window `[-n·b, n·b)` with `n·m_base` nodes, so every
    /// window shares the spacing `2b / m_base`.
    pub fn window(b: S, n: usize, m_base: usize) -> Result<Self> {
        if n == 0 {
            return Err(PlapError::Domain("window index must be at least 1".into()));
        }
        if !m_base.is_multiple_of(2) {
            return Err(PlapError::Domain("window base node count must be even".into()));
        }
        let nn = S::from_usize_lossy(n);
        Self::with_origin(-nn * b, S::lit(2.0) * nn * b, n * m_base)
    }

    pub fn period(&self) -> S {
        self.length
    }

    pub fn origin(&self) -> S {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.nodes
    }

    pub fn is_empty(&self) -> bool {
        self.nodes == 0
    }

    pub fn h(&self) -> S {
        self.h
    }

    #[inline]
    pub fn node(&self, i: usize) -> S {
        self.origin + S::from_usize_lossy(i) * self.h
    }

    pub fn nodes(&self) -> impl Iterator<Item = S> + '_ {
        (0..self.nodes).map(move |i| self.node(i))
    }

    /// Angular frequency `2π / period`.
    pub fn omega(&self) -> S {
        S::lit(2.0) * S::PI() / self.length
    }

    pub fn compatible(&self, other: &Mesh<S>) -> bool {
        let tol = S::lit(64.0) * S::epsilon() * (S::one() + self.length.abs());
        self.nodes == other.nodes
            && (self.length - other.length).abs() <= tol
            && (self.origin - other.origin).abs() <= tol
    }
}

/// A function on a [`Mesh`] with `N` real components per node, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFn<S> {
    mesh: Mesh<S>,
    dim: usize,
    values: Vec<S>,
}

impl<S: Real> GridFn<S> {
    pub fn new(mesh: Mesh<S>, dim: usize, values: Vec<S>) -> Result<Self> {
        if dim == 0 {
            return Err(PlapError::Domain("component dimension must be at least 1".into()));
        }
        if values.len() != mesh.len() * dim {
            return Err(PlapError::Domain(format!(
                "expected {} values, got {}",
                mesh.len() * dim,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(PlapError::Domain(format!("non-finite value at flat index {i}")));
        }
        Ok(GridFn { mesh, dim, values })
    }

    pub fn zeros(mesh: Mesh<S>, dim: usize) -> Self {
        GridFn { mesh, dim: dim.max(1), values: vec![S::zero(); mesh.len() * dim.max(1)] }
    }

    /// Samples a scalar function of time.
    pub fn from_scalar_fn(mesh: Mesh<S>, f: impl Fn(S) -> S) -> Self {
        let values = mesh.nodes().map(f).collect();
        GridFn { mesh, dim: 1, values }
    }

    /// Samples a vector-valued function; `f(t, out)` fills one row.
    pub fn from_fn(mesh: Mesh<S>, dim: usize, f: impl Fn(S, &mut [S])) -> Self {
        let mut g = Self::zeros(mesh, dim);
        for i in 0..mesh.len() {
            let t = mesh.node(i);
            f(t, g.row_mut(i));
        }
        g
    }

    /// A constant function whose every row equals `row`.
    pub fn constant(mesh: Mesh<S>, row: &[S]) -> Self {
        let mut values = Vec::with_capacity(mesh.len() * row.len());
        for _ in 0..mesh.len() {
            values.extend_from_slice(row);
        }
        GridFn { mesh, dim: row.len(), values }
    }

    pub fn mesh(&self) -> &Mesh<S> {
        &self.mesh
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.mesh.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [S] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<S> {
        self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[S] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [S] {
        &mut self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[S]> {
        self.values.chunks(self.dim)
    }

    /// Replaces the values, keeping mesh and dimension.
    pub fn with_values(&self, values: Vec<S>) -> Self {
        assert_eq!(values.len(), self.values.len());
        GridFn { mesh: self.mesh, dim: self.dim, values }
    }

    pub fn check_compatible(&self, other: &GridFn<S>) -> Result<()> {
        if self.dim != other.dim || !self.mesh.compatible(&other.mesh) {
            return Err(PlapError::MeshMismatch(format!(
                "({} nodes, N={}) vs ({} nodes, N={})",
                self.mesh.len(),
                self.dim,
                other.mesh.len(),
                other.dim
            )));
        }
        Ok(())
    }

    pub fn scaled(&self, a: S) -> Self {
        self.with_values(self.values.iter().map(|&v| a * v).collect())
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: S, other: &GridFn<S>) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.with_values(
            self.values.iter().zip(&other.values).map(|(&x, &y)| x + a * y).collect(),
        ))
    }

    pub fn add(&self, other: &GridFn<S>) -> Result<Self> {
        self.axpy(S::one(), other)
    }

    pub fn sub(&self, other: &GridFn<S>) -> Result<Self> {
        self.axpy(-S::one(), other)
    }

    /// Convex combination `(1-s)·self + s·other`.
    pub fn lerp(&self, other: &GridFn<S>, s: S) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.with_values(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&x, &y)| x + s * (y - x))
                .collect(),
        ))
    }

    /// Discrete L² inner product `h·Σ (x_i, y_i)`.
    pub fn inner(&self, other: &GridFn<S>) -> Result<S> {
        self.check_compatible(other)?;
        let s: S = self.values.iter().zip(&other.values).map(|(&x, &y)| x * y).sum();
        Ok(s * self.mesh.h())
    }

    /// Maximum over nodes of the Euclidean norm of a row.
    pub fn sup_norm(&self) -> S {
        self.rows().map(norm).fold(S::zero(), S::max)
    }

    /// Euclidean norm of the flat value vector (no quadrature weight).
    pub fn flat_norm(&self) -> S {
        self.values.iter().map(|&v| v * v).sum::<S>().sqrt()
    }

    /// Writes `t,x1,…,xN` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.dim).map(|k| format!("x{k}")));
        w.write_record(&header)?;
        for (i, row) in self.rows().enumerate() {
            let mut rec = vec![self.mesh.node(i).to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| PlapError::Io(e.to_string()))
    }

    /// Reads the CSV layout written by [`GridFn::write_csv`]. The period is
    /// inferred as `M·(t_1 - t_0)`.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(reader);
        let headers = rd.headers()?.clone();
        if headers.get(0) != Some("t") || headers.len() < 2 {
            return Err(PlapError::Io("expected header `t,x1,...`".into()));
        }
        let dim = headers.len() - 1;
        let mut ts = Vec::new();
        let mut values = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let parse = |s: &str| -> Result<S> {
                s.trim()
                    .parse::<f64>()
                    .map(S::lit)
                    .map_err(|e| PlapError::Io(format!("bad number `{s}`: {e}")))
            };
            ts.push(parse(&rec[0])?);
            for k in 1..=dim {
                values.push(parse(&rec[k])?);
            }
        }
        if ts.len() < Mesh::<S>::MIN_NODES {
            return Err(PlapError::Domain("CSV has too few rows for a mesh".into()));
        }
        let h = ts[1] - ts[0];
        let mesh = Mesh::with_origin(ts[0], h * S::from_usize_lossy(ts.len()), ts.len())?;
        GridFn::new(mesh, dim, values)
    }
}

#[inline]
pub(crate) fn norm<S: Real>(v: &[S]) -> S {
    v.iter().map(|&a| a * a).sum::<S>().sqrt()
}

#[inline]
pub(crate) fn dot<S: Real>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn make_mesh<S: Real>(b: S, m: usize) -> Result<Mesh<S>> {
    Mesh::new(b, m)
}

/// Forward difference with periodic wrap: `(x_{i+1 mod M} - x_i) / h`.
pub fn diff<S: Real>(x: &GridFn<S>) -> GridFn<S> {
    let m = x.len();
    let n = x.dim();
    let inv_h = S::one() / x.mesh().h();
    let mut out = vec![S::zero(); m * n];
    for i in 0..m {
        let j = (i + 1) % m;
        for k in 0..n {
            out[i * n + k] = (x.values[j * n + k] - x.values[i * n + k]) * inv_h;
        }
    }
    x.with_values(out)
}

fn check_p<S: Real>(p: S) -> Result<()> {
    if !(p > S::one()) || !p.is_finite() {
        return Err(PlapError::Domain(format!("exponent p must lie in (1, ∞), got {p}")));
    }
    Ok(())
}

/// Rectangle-rule `(Σ‖x_i‖ᵖ h)^{1/p}`.
pub fn lp_norm<S: Real>(x: &GridFn<S>, p: S) -> Result<S> {
    Ok(lp_norm_pow(x, p)?.powf(p.recip()))
}

fn lp_norm_pow<S: Real>(x: &GridFn<S>, p: S) -> Result<S> {
    check_p(p)?;
    let s: S = x.rows().map(|r| norm(r).powf(p)).sum();
    Ok(s * x.mesh().h())
}

/// `(‖x‖_p^p + ‖x'‖_p^p)^{1/p}`.
pub fn w1p_norm<S: Real>(x: &GridFn<S>, p: S) -> Result<S> {
    let total = lp_norm_pow(x, p)? + lp_norm_pow(&diff(x), p)?;
    Ok(total.powf(p.recip()))
}

/// Splits `x = mean + v` with `v` of zero discrete mean.
pub fn mean_zero_project<S: Real>(x: &GridFn<S>) -> (Vec<S>, GridFn<S>) {
    let n = x.dim();
    let m = S::from_usize_lossy(x.len());
    let mut mean = vec![S::zero(); n];
    for row in x.rows() {
        for k in 0..n {
            mean[k] += row[k];
        }
    }
    for v in mean.iter_mut() {
        *v /= m;
    }
    let mut v = x.clone();
    for i in 0..x.len() {
        for (a, &c) in v.row_mut(i).iter_mut().zip(&mean) {
            *a -= c;
        }
    }
    (mean, v)
}

/// Discrete Fourier coefficients `(a_k, b_k)` of a scalar grid function so
/// that the mode-`k` component is `a_k cos(kωτ) + b_k sin(kωτ)` with
/// `τ = t - origin`.
pub(crate) fn mode_coefficients<S: Real>(x: &GridFn<S>, k: usize) -> (S, S) {
    let m = x.len();
    let mf = S::from_usize_lossy(m);
    if k == 0 {
        return (x.values.iter().copied().sum::<S>() / mf, S::zero());
    }
    let two_pi_k = S::lit(2.0) * S::PI() * S::from_usize_lossy(k);
    let (mut a, mut b) = (S::zero(), S::zero());
    for (i, &v) in x.values.iter().enumerate() {
        let phase = two_pi_k * S::from_usize_lossy(i) / mf;
        a += v * phase.cos();
        b += v * phase.sin();
    }
    let w = S::lit(2.0) / mf;
    (a * w, b * w)
}

/// Orthogonal projection of a scalar grid function onto
/// `span{sin kωt, cos kωt : k ∈ modes}`.
pub fn fourier_project<S: Real>(x: &GridFn<S>, modes: &[usize]) -> Result<GridFn<S>> {
    if x.dim() != 1 {
        return Err(PlapError::Domain("Fourier projection needs a scalar grid function".into()));
    }
    let m = x.len();
    if !m.is_multiple_of(2) {
        return Err(PlapError::Domain("Fourier projection needs an even node count".into()));
    }
    let modes: BTreeSet<usize> = modes.iter().copied().collect();
    if let Some(&k) = modes.iter().next_back() {
        if k + 1 > m / 2 {
            return Err(PlapError::Domain(format!(
                "mode {k} aliases on {m} nodes (largest allowed {})",
                m / 2 - 1
            )));
        }
    }
    let mf = S::from_usize_lossy(m);
    let mut out = vec![S::zero(); m];
    for &k in &modes {
        let (a, b) = mode_coefficients(x, k);
        if k == 0 {
            out.iter_mut().for_each(|v| *v += a);
            continue;
        }
        let two_pi_k = S::lit(2.0) * S::PI() * S::from_usize_lossy(k);
        for (i, v) in out.iter_mut().enumerate() {
            let phase = two_pi_k * S::from_usize_lossy(i) / mf;
            *v += a * phase.cos() + b * phase.sin();
        }
    }
    Ok(x.with_values(out))
}

/// Solves `(I - D⁺D⁻) y = r` componentwise on the periodic mesh. This is the
/// discrete W^{1,2} Riesz map used to precondition gradient flows.
pub fn riesz_solve<S: Real>(r: &GridFn<S>) -> GridFn<S> {
    let m = r.len();
    let n = r.dim();
    let h2 = r.mesh().h() * r.mesh().h();
    let off = -S::one() / h2;
    let diag = S::one() + S::lit(2.0) / h2;
    let mut out = vec![S::zero(); m * n];
    let mut col = vec![S::zero(); m];
    for k in 0..n {
        for (i, c) in col.iter_mut().enumerate() {
            *c = r.values[i * n + k];
        }
        let y = cyclic_tridiagonal(off, diag, off, &col);
        for i in 0..m {
            out[i * n + k] = y[i];
        }
    }
    r.with_values(out)
}

/// Constant-coefficient cyclic tridiagonal solve (Sherman–Morrison).
fn cyclic_tridiagonal<S: Real>(sub: S, diag: S, sup: S, rhs: &[S]) -> Vec<S> {
    let n = rhs.len();
    let alpha = sup; // A[n-1][0]
    let beta = sub; // A[0][n-1]
    let gamma = -diag;
    let mut bb = vec![diag; n];
    bb[0] = diag - gamma;
    bb[n - 1] = diag - alpha * beta / gamma;
    let x = tridiagonal(sub, &bb, sup, rhs);
    let mut u = vec![S::zero(); n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = tridiagonal(sub, &bb, sup, &u);
    let fact = (x[0] + beta * x[n - 1] / gamma) / (S::one() + z[0] + beta * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(&xi, &zi)| xi - fact * zi).collect()
}

fn tridiagonal<S: Real>(sub: S, diag: &[S], sup: S, rhs: &[S]) -> Vec<S> {
    let n = rhs.len();
    let mut c = vec![S::zero(); n];
    let mut d = vec![S::zero(); n];
    c[0] = sup / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - sub * c[i - 1];
        c[i] = sup / denom;
        d[i] = (rhs[i] - sub * d[i - 1]) / denom;
    }
    let mut x = vec![S::zero(); n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine(m: usize) -> GridFn<f64> {
        GridFn::from_scalar_fn(Mesh::<f64>::new(2.0 * PI, m).unwrap(), f64::sin)
    }

    #[test]
    fn mesh_spacing_and_nodes() {
        let mesh = Mesh::<f64>::new(1.0, 8).unwrap();
        assert_eq!(mesh.h(), 0.125);
        let nodes: Vec<f64> = mesh.nodes().collect();
        assert_eq!(nodes, vec![0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875]);
        let m2 = Mesh::<f64>::new(2.0 * PI, 256).unwrap();
        assert_eq!(m2.h(), 2.0 * PI / 256.0);
        assert!((m2.h() * 256.0 - 2.0 * PI).abs() <= f64::EPSILON * 2.0 * PI);
    }

    #[test]
    fn mesh_rejects_bad_input() {
        assert!(matches!(Mesh::<f64>::new(0.0, 16), Err(PlapError::Domain(_))));
        assert!(matches!(Mesh::<f64>::new(-1.0, 16), Err(PlapError::Domain(_))));
        assert!(matches!(Mesh::<f64>::new(1.0, 7), Err(PlapError::Domain(_))));
    }

    #[test]
    fn window_mesh_keeps_spacing() {
        let w1 = Mesh::<f64>::window(5.0, 1, 128).unwrap();
        let w3 = Mesh::<f64>::window(5.0, 3, 128).unwrap();
        assert_eq!(w1.origin(), -5.0);
        assert_eq!(w3.origin(), -15.0);
        assert!((w1.h() - w3.h()).abs() < 1e-15);
    }

    #[test]
    fn diff_of_constant_is_zero_and_wraps() {
        let mesh = Mesh::<f64>::new(1.0, 16).unwrap();
        let c = GridFn::constant(mesh, &[3.0, -1.0]);
        assert!(diff(&c).values().iter().all(|&v| v == 0.0));

        let x = GridFn::from_scalar_fn(mesh, |t| t * t);
        let d = diff(&x);
        let last = (x.values()[0] - x.values()[15]) / mesh.h();
        assert_eq!(d.values()[15], last);
    }

    #[test]
    fn diff_of_sine_matches_midpoint_cosine() {
        let x = sine(256);
        let h = x.mesh().h();
        let d = diff(&x);
        let err = x
            .mesh()
            .nodes()
            .zip(d.values())
            .map(|(t, &v)| (v - (t + h / 2.0).cos()).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-3, "err = {err}");
    }

    #[test]
    fn lp_norm_examples() {
        let b = 3.0;
        let one = GridFn::constant(Mesh::<f64>::new(b, 16).unwrap(), &[1.0]);
        for p in [1.5, 2.0, 4.0] {
            assert!((lp_norm(&one, p).unwrap() - b.powf(1.0 / p)).abs() < 1e-12);
            assert!((w1p_norm(&one, p).unwrap() - b.powf(1.0 / p)).abs() < 1e-12);
        }
        let zero = GridFn::zeros(Mesh::<f64>::new(b, 16).unwrap(), 2);
        assert_eq!(lp_norm(&zero, 2.0).unwrap(), 0.0);
        assert_eq!(w1p_norm(&zero, 2.0).unwrap(), 0.0);
        assert!((lp_norm(&sine(256), 2.0).unwrap() - PI.sqrt()).abs() < 1e-3);
        assert!((w1p_norm(&sine(256), 2.0).unwrap() - (2.0 * PI).sqrt()).abs() < 2e-3);
        assert!(lp_norm(&one, 1.0).is_err());
    }

    #[test]
    fn mean_zero_examples() {
        let mesh = Mesh::<f64>::new(2.0 * PI, 128).unwrap();
        let five = GridFn::constant(mesh, &[5.0]);
        let (mean, v) = mean_zero_project(&five);
        assert!((mean[0] - 5.0).abs() < 1e-12);
        assert!(v.sup_norm() < 1e-12);

        let (mean, v) = mean_zero_project(&sine(128));
        assert!(mean[0].abs() < 1e-12);
        assert!(v.sub(&sine(128)).unwrap().sup_norm() < 1e-12);

        let x = GridFn::from_scalar_fn(mesh, |t| 2.0 + t.cos());
        let (mean, v) = mean_zero_project(&x);
        assert!((mean[0] - 2.0).abs() < 1e-12);
        let cos = GridFn::from_scalar_fn(mesh, f64::cos);
        assert!(v.sub(&cos).unwrap().sup_norm() < 1e-12);
        let s: f64 = v.values().iter().sum::<f64>() * mesh.h();
        assert!(s.abs() <= 1e-12 * 3.0);
    }

    #[test]
    fn fourier_projection_examples() {
        let b = 3.0;
        let mesh = Mesh::<f64>::new(b, 64).unwrap();
        let w = mesh.omega();
        let s2 = GridFn::from_scalar_fn(mesh, |t| (2.0 * w * t).sin());
        assert!(fourier_project(&s2, &[2]).unwrap().sub(&s2).unwrap().sup_norm() < 1e-10);
        assert!(fourier_project(&s2, &[1]).unwrap().sup_norm() < 1e-10);

        let x = GridFn::from_scalar_fn(mesh, |t| 1.0 + (w * t).sin() + (3.0 * w * t).cos());
        let want = GridFn::from_scalar_fn(mesh, |t| 1.0 + (w * t).sin());
        let got = fourier_project(&x, &[0, 1]).unwrap();
        assert!(got.sub(&want).unwrap().sup_norm() < 1e-10);
    }

    #[test]
    fn fourier_projection_rejects_aliasing_modes() {
        let x = sine(16);
        assert!(fourier_project(&x, &[8]).is_err());
        assert!(fourier_project(&x, &[7]).is_ok());
        let odd = GridFn::from_scalar_fn(Mesh::<f64>::new(1.0, 15).unwrap(), |t| t);
        assert!(fourier_project(&odd, &[1]).is_err());
    }

    #[test]
    fn riesz_solve_inverts_operator() {
        let mesh = Mesh::<f64>::new(2.0, 32).unwrap();
        let x = GridFn::from_fn(mesh, 2, |t, out| {
            out[0] = (t * 3.0).sin() + t;
            out[1] = t * t;
        });
        let y = riesz_solve(&x);
        // apply (I - D⁺D⁻) to y and compare with x
        let d = diff(&y);
        let m = mesh.len();
        let h = mesh.h();
        for i in 0..m {
            let im = (i + m - 1) % m;
            for k in 0..2 {
                let lap = (d.row(i)[k] - d.row(im)[k]) / h;
                let back = y.row(i)[k] - lap;
                assert!((back - x.row(i)[k]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn csv_round_trip() {
        let mesh = Mesh::<f64>::new(2.0, 8).unwrap();
        let x = GridFn::from_fn(mesh, 2, |t, out| {
            out[0] = t;
            out[1] = -t * 0.5;
        });
        let s = x.to_csv_string().unwrap();
        assert!(s.starts_with("t,x1,x2\n0,0,"));
        let back = GridFn::<f64>::read_csv(s.as_bytes()).unwrap();
        assert_eq!(back.values(), x.values());
        assert!(back.mesh().compatible(x.mesh()));
    }
}
