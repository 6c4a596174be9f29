//! Integer lattice algebra on small dense matrices: Hermite and Smith normal
//! forms, integer kernels, saturation, and linear congruences over `Q/Z`.
//!
//! Matrices are row-major `Vec<Vec<i64>>`; a lattice is the row span.
//! Internal arithmetic runs in checked `i128`.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exact::{frac, q, Q};

pub type IntMat = Vec<Vec<i64>>;

fn to_wide(a: &IntMat) -> Vec<Vec<i128>> {
    a.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect()
}

fn to_narrow(a: Vec<Vec<i128>>) -> Result<IntMat> {
    a.into_iter()
        .map(|r| r.into_iter().map(|x| i64::try_from(x).map_err(|_| Error::Overflow)).collect())
        .collect()
}

fn cols_of(a: &IntMat, fallback: usize) -> usize {
    a.first().map(Vec::len).unwrap_or(fallback)
}

pub fn identity(n: usize) -> IntMat {
    (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect()
}

pub fn transpose(a: &IntMat, cols: usize) -> IntMat {
    let cols = cols_of(a, cols);
    (0..cols).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

pub fn mat_mul(a: &IntMat, b: &IntMat, b_cols: usize) -> Result<IntMat> {
    let b_cols = cols_of(b, b_cols);
    a.iter()
        .map(|row| {
            (0..b_cols)
                .map(|j| {
                    let mut acc: i128 = 0;
                    for (k, &x) in row.iter().enumerate() {
                        acc = acc.checked_add(x as i128 * b[k][j] as i128).ok_or(Error::Overflow)?;
                    }
                    i64::try_from(acc).map_err(|_| Error::Overflow)
                })
                .collect()
        })
        .collect()
}

pub fn mat_vec(a: &IntMat, x: &[i64]) -> Vec<i64> {
    a.iter().map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

pub fn vec_mat(x: &[i64], a: &IntMat, cols: usize) -> Vec<i64> {
    let cols = cols_of(a, cols);
    (0..cols).map(|j| x.iter().zip(a).map(|(xi, r)| xi * r[j]).sum()).collect()
}

fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    if a != 0 && b % a == 0 {
        return (a.abs(), a.signum(), 0);
    }
    if b == 0 {
        if a < 0 {
            (-a, -1, 0)
        } else {
            (a, 1, 0)
        }
    } else {
        let (g, x, y) = ext_gcd(b, a.rem_euclid(b));
        (g, y, x - a.div_euclid(b) * y)
    }
}

fn mul(a: i128, b: i128) -> Result<i128> {
    a.checked_mul(b).ok_or(Error::Overflow)
}

fn sub_mul(a: i128, c: i128, b: i128) -> Result<i128> {
    a.checked_sub(mul(c, b)?).ok_or(Error::Overflow)
}

/// Row-style Hermite normal form of the row lattice, zero rows dropped.
///
/// Pivots are positive and entries above a pivot lie in `[0, pivot)`.
pub fn hnf(a: &IntMat) -> Result<IntMat> {
    let cols = cols_of(a, 0);
    let (h, _) = row_echelon(a, cols, false)?;
    to_narrow(h.into_iter().filter(|r| r.iter().any(|&x| x != 0)).collect())
}

/// Echelon form `H = U A` with unimodular `U` (returned when `track`).
fn row_echelon(a: &IntMat, cols: usize, track: bool) -> Result<(Vec<Vec<i128>>, Vec<Vec<i128>>)> {
    let mut h = to_wide(a);
    let rows = h.len();
    let mut u: Vec<Vec<i128>> = if track { to_wide(&identity(rows)) } else { Vec::new() };
    let mut pivot_row = 0;
    for col in 0..cols {
        if pivot_row == rows {
            break;
        }
        // gcd-combine every lower row into the pivot row
        for r in pivot_row + 1..rows {
            if h[r][col] == 0 {
                continue;
            }
            let (a0, b0) = (h[pivot_row][col], h[r][col]);
            let (g, x, y) = ext_gcd(a0, b0);
            let (p, s) = (a0 / g, b0 / g);
            combine(&mut h, pivot_row, r, x, y, s, p)?;
            if track {
                combine(&mut u, pivot_row, r, x, y, s, p)?;
            }
        }
        if h[pivot_row][col] == 0 {
            continue;
        }
        if h[pivot_row][col] < 0 {
            negate(&mut h[pivot_row]);
            if track {
                negate(&mut u[pivot_row]);
            }
        }
        let piv = h[pivot_row][col];
        for r in 0..pivot_row {
            let c = h[r][col].div_euclid(piv);
            if c != 0 {
                row_sub(&mut h, r, pivot_row, c)?;
                if track {
                    row_sub(&mut u, r, pivot_row, c)?;
                }
            }
        }
        pivot_row += 1;
    }
    Ok((h, u))
}

/// Replaces rows (i, j) by (x*Ri + y*Rj, -s*Ri + p*Rj); determinant x*p + y*s = 1.
fn combine(m: &mut [Vec<i128>], i: usize, j: usize, x: i128, y: i128, s: i128, p: i128) -> Result<()> {
    for k in 0..m[i].len() {
        let (a, b) = (m[i][k], m[j][k]);
        m[i][k] = mul(x, a)?.checked_add(mul(y, b)?).ok_or(Error::Overflow)?;
        m[j][k] = mul(-s, a)?.checked_add(mul(p, b)?).ok_or(Error::Overflow)?;
    }
    Ok(())
}

fn negate(r: &mut [i128]) {
    r.iter_mut().for_each(|x| *x = -*x);
}

fn row_sub(m: &mut [Vec<i128>], target: usize, src: usize, c: i128) -> Result<()> {
    for k in 0..m[target].len() {
        m[target][k] = sub_mul(m[target][k], c, m[src][k])?;
    }
    Ok(())
}

/// Basis (in HNF) of the left integer kernel `{m : m A = 0}` of an
/// `rows x cols` matrix. The result is always a saturated lattice.
pub fn left_kernel(a: &IntMat, rows: usize, cols: usize) -> Result<IntMat> {
    if rows == 0 {
        return Ok(Vec::new());
    }
    if cols == 0 {
        return Ok(identity(rows));
    }
    let (h, u) = row_echelon(a, cols, true)?;
    let kernel: Vec<Vec<i128>> = h
        .iter()
        .zip(u)
        .filter(|(hr, _)| hr.iter().all(|&x| x == 0))
        .map(|(_, ur)| ur)
        .collect();
    hnf(&to_narrow(kernel)?)
}

/// Basis of the right integer kernel `{x : A x = 0}` as rows.
pub fn right_kernel(a: &IntMat, n: usize) -> Result<IntMat> {
    let at = transpose(a, n);
    left_kernel(&at, n, a.len())
}

/// `(span_Q L) ∩ Z^n`.
pub fn saturate(l: &IntMat, n: usize) -> Result<IntMat> {
    let k = right_kernel(l, n)?;
    right_kernel(&k, n)
}

pub fn rank(a: &IntMat) -> Result<usize> {
    Ok(hnf(a)?.len())
}

/// Smith normal form `U A V = D`, with `U`, `V` unimodular.
#[derive(Clone, Debug)]
pub struct Smith {
    pub u: IntMat,
    pub v: IntMat,
    /// Nonzero invariant factors `d_1 | d_2 | ...`, positive.
    pub diag: Vec<i64>,
    pub rows: usize,
    pub cols: usize,
}

impl Smith {
    pub fn rank(&self) -> usize {
        self.diag.len()
    }
}

pub fn smith(a: &IntMat, rows: usize, cols: usize) -> Result<Smith> {
    let mut d = to_wide(a);
    if d.is_empty() {
        d = vec![Vec::new(); rows];
    }
    let mut u = to_wide(&identity(rows));
    // columns transforms are tracked as rows of V^T
    let mut vt = to_wide(&identity(cols));
    let mut t = 0;
    while t < rows.min(cols) {
        // pick the smallest nonzero entry in the remaining block
        let mut best: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if d[i][j] != 0 && best.map(|(bi, bj)| d[i][j].abs() < d[bi][bj].abs()).unwrap_or(true) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        d.swap(t, pi);
        u.swap(t, pi);
        swap_cols(&mut d, t, pj);
        vt.swap(t, pj);
        loop {
            let mut dirty = false;
            for i in t + 1..rows {
                if d[i][t] != 0 {
                    let (g, x, y) = ext_gcd(d[t][t], d[i][t]);
                    let (p, s) = (d[t][t] / g, d[i][t] / g);
                    combine(&mut d, t, i, x, y, s, p)?;
                    combine(&mut u, t, i, x, y, s, p)?;
                    dirty = true;
                }
            }
            for j in t + 1..cols {
                if d[t][j] != 0 {
                    let (g, x, y) = ext_gcd(d[t][t], d[t][j]);
                    let (p, s) = (d[t][t] / g, d[t][j] / g);
                    let mut dt = transpose_wide(&d, cols);
                    combine(&mut dt, t, j, x, y, s, p)?;
                    d = transpose_wide(&dt, rows);
                    combine(&mut vt, t, j, x, y, s, p)?;
                    dirty = true;
                }
            }
            if !dirty {
                break;
            }
        }
        // divisibility: fold a non-divisible entry into the pivot row
        let piv = d[t][t];
        let bad = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| d[i][j] % piv != 0));
        if let Some(i) = bad {
            for k in 0..cols {
                d[t][k] = d[t][k].checked_add(d[i][k]).ok_or(Error::Overflow)?;
            }
            for k in 0..rows {
                u[t][k] = u[t][k].checked_add(u[i][k]).ok_or(Error::Overflow)?;
            }
            continue;
        }
        if d[t][t] < 0 {
            negate(&mut d[t]);
            negate(&mut u[t]);
        }
        t += 1;
    }
    let diag: Vec<i64> = (0..rows.min(cols))
        .map(|i| d[i][i])
        .take_while(|&x| x != 0)
        .map(|x| i64::try_from(x).map_err(|_| Error::Overflow))
        .collect::<Result<_>>()?;
    let v = transpose(&to_narrow(vt)?, cols);
    Ok(Smith { u: to_narrow(u)?, v, diag, rows, cols })
}

fn swap_cols(m: &mut [Vec<i128>], a: usize, b: usize) {
    for r in m.iter_mut() {
        r.swap(a, b);
    }
}

fn transpose_wide(a: &[Vec<i128>], cols: usize) -> Vec<Vec<i128>> {
    let cols = a.first().map(Vec::len).unwrap_or(cols);
    (0..cols).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

/// Exact determinant (fraction-free Bareiss).
pub fn det(a: &IntMat) -> Result<i64> {
    let n = a.len();
    if n == 0 {
        return Ok(1);
    }
    let mut m = to_wide(a);
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if m[k][k] == 0 {
            match (k + 1..n).find(|&i| m[i][k] != 0) {
                Some(i) => {
                    m.swap(k, i);
                    sign = -sign;
                }
                None => return Ok(0),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = mul(m[i][j], m[k][k])?.checked_sub(mul(m[i][k], m[k][j])?).ok_or(Error::Overflow)?;
                m[i][j] = num / prev;
            }
        }
        prev = m[k][k];
    }
    i64::try_from(sign * m[n - 1][n - 1]).map_err(|_| Error::Overflow)
}

/// Elementary symmetric functions `e_0..e_n` of the eigenvalues, i.e. sums
/// of principal minors; `e_q = tr Λ^q(A)`.
pub fn principal_minor_sums(a: &IntMat) -> Result<Vec<i64>> {
    let n = a.len();
    let mut out = vec![0i64; n + 1];
    out[0] = 1;
    for mask in 1u32..(1u32 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let sub: IntMat = idx.iter().map(|&i| idx.iter().map(|&j| a[i][j]).collect()).collect();
        let k = idx.len();
        out[k] = out[k].checked_add(det(&sub)?).ok_or(Error::Overflow)?;
    }
    Ok(out)
}

/// Integer `S` (`n x r`) with `L S = I_r` for a saturated full-row-rank `L`.
pub fn right_inverse(l: &IntMat, n: usize) -> Result<IntMat> {
    let r = l.len();
    if r == 0 {
        return Ok(vec![Vec::new(); n]);
    }
    let s = smith(l, r, n)?;
    if s.rank() != r || s.diag.iter().any(|&d| d != 1) {
        return Err(Error::Lattice("right inverse needs a saturated full-rank lattice".into()));
    }
    // L V = U^{-1} [I | 0]  =>  L (V[:, :r] U) = I
    let v_left: IntMat = s.v.iter().map(|row| row[..r].to_vec()).collect();
    mat_mul(&v_left, &s.u, r)
}

/// Solution set of `M x ≡ b (mod Z^rows)` for `x` in the torus `R^cols / Z^cols`.
#[derive(Clone, Debug)]
pub struct Congruence {
    /// Finitely many solutions modulo the free directions.
    pub solutions: Vec<Vec<Q>>,
    /// Integer directions along which solutions extend continuously.
    pub free_directions: IntMat,
}

impl Congruence {
    pub fn is_discrete(&self) -> bool {
        self.free_directions.is_empty()
    }
}

/// Solves `M x ≡ b` via Smith normal form; `None` when there is no solution.
///
/// `enumerate_limit` caps the number of torsion solutions listed.
pub fn solve_congruence(m: &IntMat, rows: usize, cols: usize, b: &[Q], enumerate_limit: usize) -> Result<Option<Congruence>> {
    let s = smith(m, rows, cols)?;
    let ub: Vec<Q> = s
        .u
        .iter()
        .map(|row| row.iter().zip(b).map(|(&c, bi)| q(c) * bi).sum())
        .collect();
    let r = s.rank();
    if ub[r..].iter().any(|x| !frac(x).is_zero()) {
        return Ok(None);
    }
    let count: u128 = s.diag.iter().map(|&d| d as u128).product();
    if count > enumerate_limit as u128 {
        return Err(Error::Lattice(format!("{count} congruence solutions exceed the enumeration limit")));
    }
    // y_i = (ub_i + t_i) / d_i; x = V y
    let mut ys: Vec<Vec<Q>> = vec![vec![Q::zero(); cols]];
    for (i, &d) in s.diag.iter().enumerate() {
        let mut next = Vec::with_capacity(ys.len() * d as usize);
        for y in &ys {
            for t in 0..d {
                let mut y2 = y.clone();
                y2[i] = (&ub[i] + q(t)) / q(d);
                next.push(y2);
            }
        }
        ys = next;
    }
    let solutions = ys
        .into_iter()
        .map(|y| {
            (0..cols)
                .map(|i| frac(&s.v[i].iter().zip(&y).map(|(&c, yi)| q(c) * yi).sum::<Q>()))
                .collect()
        })
        .collect();
    let free_directions = (r..cols).map(|j| s.v.iter().map(|row| row[j]).collect()).collect();
    Ok(Some(Congruence { solutions, free_directions }))
}

/// Least common multiple of denominators, as a positive integer.
pub fn common_denominator(xs: &[Q]) -> BigInt {
    use num_integer::Integer;
    xs.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
}
