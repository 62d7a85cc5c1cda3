use crate::linalg::DenseMatrix;

/// Applies `at ⊗ as ⊗ ar` to one element block `u` of shape
/// `ar.cols() x as.cols() x at.cols()` (first index fastest), writing a block
/// of shape `ar.rows() x as.rows() x at.rows()` into `out`.
pub(crate) fn tensor3(
    ar: &DenseMatrix,
    as_: &DenseMatrix,
    at: &DenseMatrix,
    u: &[f64],
    out: &mut [f64],
    work: &mut Vec<f64>,
) {
    let (mr, nr) = (ar.rows(), ar.cols());
    let (ms, ns) = (as_.rows(), as_.cols());
    let (mt, nt) = (at.rows(), at.cols());
    debug_assert_eq!(u.len(), nr * ns * nt);
    debug_assert_eq!(out.len(), mr * ms * mt);
    work.clear();
    work.resize(mr * ns * nt + mr * ms * nt, 0.0);
    let (t1, t2) = work.split_at_mut(mr * ns * nt);
    // r direction
    for jk in 0..ns * nt {
        let src = &u[jk * nr..(jk + 1) * nr];
        let dst = &mut t1[jk * mr..(jk + 1) * mr];
        for (i, d) in dst.iter_mut().enumerate() {
            *d = ar.row(i).iter().zip(src).map(|(a, b)| a * b).sum();
        }
    }
    // s direction
    for k in 0..nt {
        for j2 in 0..ms {
            let row = as_.row(j2);
            let dst = &mut t2[(j2 + ms * k) * mr..(j2 + ms * k + 1) * mr];
            dst.iter_mut().for_each(|v| *v = 0.0);
            for (j, &a) in row.iter().enumerate() {
                let src = &t1[(j + ns * k) * mr..(j + ns * k + 1) * mr];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
    }
    // t direction
    let plane = mr * ms;
    for k2 in 0..mt {
        let row = at.row(k2);
        let dst = &mut out[k2 * plane..(k2 + 1) * plane];
        dst.iter_mut().for_each(|v| *v = 0.0);
        for (k, &a) in row.iter().enumerate() {
            let src = &t2[k * plane..(k + 1) * plane];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += a * s;
            }
        }
    }
}

/// Reference-space derivatives `(u_r, u_s, u_t)` of one element block.
pub(crate) fn local_grad(d: &DenseMatrix, u: &[f64], ur: &mut [f64], us: &mut [f64], ut: &mut [f64]) {
    let n = d.rows();
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let (mut r, mut s, mut t) = (0.0, 0.0, 0.0);
                let drow_i = d.row(i);
                let drow_j = d.row(j);
                let drow_k = d.row(k);
                for l in 0..n {
                    r += drow_i[l] * u[l + n * (j + n * k)];
                    s += drow_j[l] * u[i + n * (l + n * k)];
                    t += drow_k[l] * u[i + n * (j + n * l)];
                }
                let idx = i + n * (j + n * k);
                ur[idx] = r;
                us[idx] = s;
                ut[idx] = t;
            }
        }
    }
}
