//! Iterative sparse symmetric solver for the generalized eigenproblem
//! (D_deg - W) x = lambda B x with B diagonal positive: shift-and-invert
//! Lanczos with full reorthogonalization in the B-whitened space, with the
//! trivial constant mode deflated exactly.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::spectral::MedialGraph;

const RESIDUAL_TOL: f64 = 1e-8;
const DENSE_SOLVE_LIMIT: usize = 2048;

/// The k smallest nonzero generalized eigenpairs, eigenvalues ascending,
/// eigenvectors B-orthonormal with a deterministic sign convention.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub values: Vec<f64>,
    /// vectors[p] is the p-th eigenvector over graph vertices.
    pub vectors: Vec<Vec<f64>>,
}

struct Whitened<'a> {
    graph: &'a MedialGraph,
    degrees: Vec<f64>,
    bsi: Vec<f64>,  // 1/sqrt(B)
    w: Vec<f64>,    // unit null vector of C = B^-1/2 L B^-1/2
    shift: f64,     // rank-one shift making C + shift*w*w^T positive definite
    scratch: std::cell::RefCell<(Vec<f64>, Vec<f64>)>,
}

impl<'a> Whitened<'a> {
    fn new(graph: &'a MedialGraph) -> Whitened<'a> {
        let n = graph.n;
        let degrees = graph.degrees();
        let bs: Vec<f64> = graph.d_sym.iter().map(|d| d.sqrt()).collect();
        let bsi: Vec<f64> = bs.iter().map(|s| 1.0 / s).collect();
        let norm = bs.iter().map(|s| s * s).sum::<f64>().sqrt();
        let w: Vec<f64> = bs.iter().map(|s| s / norm).collect();
        let trace: f64 = (0..n).map(|i| degrees[i] / graph.d_sym[i]).sum();
        Whitened {
            graph,
            degrees,
            bsi,
            w,
            shift: (trace / n as f64).max(1.0),
            scratch: std::cell::RefCell::new((vec![0.0; n], vec![0.0; n])),
        }
    }

    /// y = C x = B^-1/2 (D_deg - W) B^-1/2 x.
    fn apply_c(&self, x: &[f64], y: &mut [f64]) {
        let (ref mut t, ref mut u) = *self.scratch.borrow_mut();
        for i in 0..x.len() {
            t[i] = self.bsi[i] * x[i];
        }
        self.graph.laplacian_apply(&self.degrees, t, u);
        for i in 0..x.len() {
            y[i] = self.bsi[i] * u[i];
        }
    }

    /// y = (C + shift w w^T) x.
    fn apply_shifted(&self, x: &[f64], y: &mut [f64]) {
        self.apply_c(x, y);
        let proj: f64 = dot(&self.w, x) * self.shift;
        for i in 0..x.len() {
            y[i] += proj * self.w[i];
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

enum InnerSolver {
    Dense(Cholesky<f64, nalgebra::Dyn>),
    Cg,
}

fn build_inner(op: &Whitened) -> Result<InnerSolver> {
    let n = op.graph.n;
    if n > DENSE_SOLVE_LIMIT {
        return Ok(InnerSolver::Cg);
    }
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = op.degrees[i] / op.graph.d_sym[i] + op.shift * op.w[i] * op.w[i];
        for &(j, wt) in &op.graph.adj[i] {
            let j = j as usize;
            m[(i, j)] = -wt * op.bsi[i] * op.bsi[j] + op.shift * op.w[i] * op.w[j];
        }
        for j in 0..n {
            if m[(i, j)] == 0.0 && i != j {
                m[(i, j)] = op.shift * op.w[i] * op.w[j];
            }
        }
    }
    Cholesky::new(m)
        .map(InnerSolver::Dense)
        .ok_or_else(|| Error::Domain("shifted Laplacian is not positive definite".into()))
}

fn inner_solve(op: &Whitened, solver: &InnerSolver, rhs: &[f64]) -> Result<Vec<f64>> {
    match solver {
        InnerSolver::Dense(chol) => {
            let b = DVector::from_column_slice(rhs);
            Ok(chol.solve(&b).as_slice().to_vec())
        }
        InnerSolver::Cg => {
            // Jacobi-preconditioned conjugate gradients on the shifted
            // whitened operator.
            let n = rhs.len();
            let precond: Vec<f64> = (0..n)
                .map(|i| {
                    1.0 / (op.degrees[i] / op.graph.d_sym[i] + op.shift * op.w[i] * op.w[i])
                })
                .collect();
            let mut x = vec![0.0; n];
            let mut r = rhs.to_vec();
            let mut z: Vec<f64> = r.iter().zip(&precond).map(|(a, m)| a * m).collect();
            let mut p = z.clone();
            let mut rz = dot(&r, &z);
            let rhs_norm = norm(rhs).max(1e-300);
            let mut ap = vec![0.0; n];
            for _ in 0..10 * n {
                op.apply_shifted(&p, &mut ap);
                let alpha = rz / dot(&p, &ap);
                for i in 0..n {
                    x[i] += alpha * p[i];
                    r[i] -= alpha * ap[i];
                }
                if norm(&r) / rhs_norm < 1e-12 {
                    return Ok(x);
                }
                for i in 0..n {
                    z[i] = r[i] * precond[i];
                }
                let rz_new = dot(&r, &z);
                let beta = rz_new / rz;
                rz = rz_new;
                for i in 0..n {
                    p[i] = z[i] + beta * p[i];
                }
            }
            Err(Error::Convergence {
                residual: norm(&r) / rhs_norm,
                iterations: 10 * n,
            })
        }
    }
}

/// Smallest `k` nonzero eigenpairs of (D_deg - W) x = lambda B x.
pub fn solve_smallest(graph: &MedialGraph, k: usize, seed: u64) -> Result<EigenResult> {
    let n = graph.n;
    if k == 0 || k >= n {
        return Err(Error::Domain(format!(
            "requested {k} eigenpairs from a graph of {n} vertices"
        )));
    }
    for (i, &d) in graph.d_sym.iter().enumerate() {
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Validation {
                field: "d_sym".into(),
                msg: format!("mass entry {i} is {d}"),
            });
        }
    }
    let op = Whitened::new(graph);
    let solver = build_inner(&op)?;

    let mut steps = (2 * k + 20).max(20).min(n - 1);
    loop {
        match lanczos_attempt(&op, &solver, k, steps, seed) {
            Ok(res) => return Ok(res),
            Err(Error::Convergence { residual, .. }) => {
                if steps >= n - 1 {
                    return Err(Error::Convergence {
                        residual,
                        iterations: steps,
                    });
                }
                steps = (steps * 2).min(n - 1);
            }
            Err(e) => return Err(e),
        }
    }
}

fn lanczos_attempt(
    op: &Whitened,
    solver: &InnerSolver,
    k: usize,
    steps: usize,
    seed: u64,
) -> Result<EigenResult> {
    let n = op.graph.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    orthogonalize(&mut v0, std::slice::from_ref(&op.w));
    let nv = norm(&v0);
    if nv < 1e-14 {
        return Err(Error::Domain("degenerate start vector".into()));
    }
    for x in &mut v0 {
        *x /= nv;
    }

    // Krylov basis of the shift-inverted operator M with full Gram-Schmidt;
    // the projection coefficients are kept in full (not just the tridiagonal
    // pair) so the projected matrix stays exact when small betas amplify the
    // reorthogonalization corrections.
    let mut basis: Vec<Vec<f64>> = vec![v0];
    let mut h = DMatrix::<f64>::zeros(steps, steps);
    let mut scale = 1e-300f64;
    for j in 0..steps {
        let mut u = inner_solve(op, solver, &basis[j])?;
        orthogonalize(&mut u, std::slice::from_ref(&op.w));
        // Two Gram-Schmidt passes, accumulating the projection column.
        for _ in 0..2 {
            for (i, v) in basis.iter().enumerate() {
                let c = dot(&u, v);
                for (ut, vt) in u.iter_mut().zip(v) {
                    *ut -= c * vt;
                }
                h[(i, j)] += c;
                scale = scale.max(h[(i, j)].abs());
            }
        }
        let beta = norm(&u);
        if beta < 1e-10 * scale {
            // Invariant subspace found; restart with a fresh direction or
            // stop if the space is exhausted.
            if basis.len() >= n - 1 {
                break;
            }
            let mut fresh: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            orthogonalize(&mut fresh, std::slice::from_ref(&op.w));
            orthogonalize(&mut fresh, &basis);
            let fv = norm(&fresh);
            if fv < 1e-12 {
                break;
            }
            for x in &mut fresh {
                *x /= fv;
            }
            basis.push(fresh);
            continue;
        }
        for x in &mut u {
            *x /= beta;
        }
        if j + 1 < steps {
            h[(j + 1, j)] = beta;
        }
        basis.push(u);
    }

    // Ritz decomposition of the projected operator, symmetrized from the
    // recorded upper-triangular coefficients.
    let m = basis.len().min(steps);
    if m < k {
        return Err(Error::Convergence {
            residual: f64::INFINITY,
            iterations: m,
        });
    }
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = h[(i, i)];
        for j in i + 1..m {
            // Upper entry is the measured coefficient; the subdiagonal beta
            // is its transpose estimate.
            let v = if j == i + 1 && h[(i, j)] == 0.0 {
                h[(j, i)]
            } else {
                h[(i, j)]
            };
            t[(i, j)] = v;
            t[(j, i)] = v;
        }
    }
    let eig = t.symmetric_eigen();
    // Largest inverted eigenvalues correspond to the smallest originals.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());

    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    for &oi in order.iter().take(k) {
        let s = eig.eigenvectors.column(oi);
        let mut y = vec![0.0; n];
        for (j, base) in basis.iter().take(m).enumerate() {
            let c = s[j];
            for i in 0..n {
                y[i] += c * base[i];
            }
        }
        vectors.push(y);
    }

    // Interior Ritz pairs can lag behind the residual target; polish the
    // whole set with preconditioned Rayleigh-Ritz iterations using the
    // shift-inverted operator as the subspace expander.
    let (values, vectors) = refine_subspace(op, solver, vectors, k)?;

    let mut pairs: Vec<(f64, Vec<f64>)> = Vec::with_capacity(k);
    for (lambda, y) in values.into_iter().zip(vectors) {
        // Back to the generalized eigenvector x = B^-1/2 y (B-orthonormal).
        let mut x: Vec<f64> = (0..n).map(|i| op.bsi[i] * y[i]).collect();
        fix_sign(&mut x);
        pairs.push((lambda, x));
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(EigenResult {
        values: pairs.iter().map(|p| p.0).collect(),
        vectors: pairs.into_iter().map(|p| p.1).collect(),
    })
}

/// Rayleigh-Ritz refinement: expand the span of the current vectors with
/// their shift-inverted images, re-project the whitened operator, and keep
/// the k smallest eigenpairs; repeat until every residual meets the target.
fn refine_subspace(
    op: &Whitened,
    solver: &InnerSolver,
    mut vectors: Vec<Vec<f64>>,
    k: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = op.graph.n;
    let mut worst = f64::INFINITY;
    for round in 0..40 {
        // Orthonormalize against the deflated constant mode and each other.
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
        for mut v in vectors {
            orthogonalize(&mut v, std::slice::from_ref(&op.w));
            orthogonalize(&mut v, &basis);
            orthogonalize(&mut v, &basis);
            let nv = norm(&v);
            if nv > 1e-8 {
                for x in &mut v {
                    *x /= nv;
                }
                basis.push(v);
            }
        }
        if basis.len() < k {
            return Err(Error::Convergence {
                residual: worst,
                iterations: round,
            });
        }
        // Project C onto the subspace and take the k smallest eigenpairs.
        let b = basis.len();
        let mut cz: Vec<Vec<f64>> = vec![vec![0.0; n]; b];
        for (z, czz) in basis.iter().zip(cz.iter_mut()) {
            op.apply_c(z, czz);
        }
        let mut proj = DMatrix::<f64>::zeros(b, b);
        for r in 0..b {
            for c in r..b {
                let v = dot(&basis[r], &cz[c]);
                proj[(r, c)] = v;
                proj[(c, r)] = v;
            }
        }
        let eig = proj.symmetric_eigen();
        let mut order: Vec<usize> = (0..b).collect();
        order.sort_by(|&a, &c| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[c]).unwrap());

        let mut values = Vec::with_capacity(k);
        let mut ritz: Vec<Vec<f64>> = Vec::with_capacity(k);
        let mut residuals = Vec::with_capacity(k);
        let mut resid_vecs: Vec<Vec<f64>> = Vec::with_capacity(k);
        for &oi in order.iter().take(k) {
            let s = eig.eigenvectors.column(oi);
            let mut y = vec![0.0; n];
            let mut cy = vec![0.0; n];
            for j in 0..b {
                let c = s[j];
                for i in 0..n {
                    y[i] += c * basis[j][i];
                    cy[i] += c * cz[j][i];
                }
            }
            let lambda = eig.eigenvalues[oi];
            let mut resid = vec![0.0; n];
            let mut r2 = 0.0;
            for i in 0..n {
                let r = cy[i] - lambda * y[i];
                resid[i] = r;
                r2 += r * r;
            }
            values.push(lambda);
            residuals.push(r2.sqrt());
            resid_vecs.push(resid);
            ritz.push(y);
        }
        worst = residuals.iter().fold(0.0f64, |m, &r| m.max(r));
        if worst <= RESIDUAL_TOL {
            return Ok((values, ritz));
        }
        // Expand with shift-inverted residual corrections for the lagging
        // pairs (Jacobi-Davidson style preconditioning).
        let mut next = ritz.clone();
        for (p, r) in resid_vecs.iter().enumerate() {
            if residuals[p] > RESIDUAL_TOL {
                let rn = residuals[p];
                let unit: Vec<f64> = r.iter().map(|v| v / rn).collect();
                next.push(inner_solve(op, solver, &unit)?);
            }
        }
        vectors = next;
    }
    Err(Error::Convergence {
        residual: worst,
        iterations: 40,
    })
}

fn orthogonalize(v: &mut [f64], against: &[Vec<f64>]) {
    for u in against {
        let c = dot(v, u);
        for i in 0..v.len() {
            v[i] -= c * u[i];
        }
    }
}

/// Deterministic sign: the entry of largest magnitude (first on ties) is
/// made positive.
pub fn fix_sign(v: &mut [f64]) {
    let mut best = 0usize;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}
