//! Exact squared Euclidean distance transform (Felzenszwalb & Huttenlocher),
//! separable over the two axes with anisotropic weights.

const FAR: f64 = 1e300;

/// Lower envelope of parabolas `f[q] + w (p - q)^2`, written into `out`.
fn envelope_1d(f: &[f64], w: f64, out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        if f[q] >= FAR {
            continue;
        }
        if f[v[0]] >= FAR {
            v[0] = q;
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + w * (q * q) as f64) - (f[p] + w * (p * p) as f64))
                / (2.0 * w * (q as f64 - p as f64));
            if s <= z[k] && k > 0 {
                k -= 1;
                continue;
            }
            if s <= z[k] {
                // k == 0 and the new parabola dominates everywhere
                v[0] = q;
                z[1] = f64::INFINITY;
                break;
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
            break;
        }
    }
    if f[v[0]] >= FAR {
        out.iter_mut().for_each(|o| *o = FAR);
        return;
    }
    let mut k = 0usize;
    for (p, o) in out.iter_mut().enumerate() {
        while z[k + 1] < p as f64 {
            k += 1;
        }
        let d = p as f64 - v[k] as f64;
        *o = w * d * d + f[v[k]];
    }
}

/// Squared distance from every cell centre of an `nx x ny` lattice to the
/// nearest cell flagged in `feature`, with cell spacings `hx`, `hy`.
///
/// Cells with no feature anywhere get `f64::INFINITY`.
pub fn squared_distance_transform(
    nx: usize,
    ny: usize,
    feature: &[bool],
    hx: f64,
    hy: f64,
) -> Vec<f64> {
    assert_eq!(feature.len(), nx * ny);
    let mut grid: Vec<f64> = feature.iter().map(|&b| if b { 0.0 } else { FAR }).collect();
    let n = nx.max(ny);
    let mut f = vec![0.0; n];
    let mut out = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];

    for j in 0..ny {
        let row = &mut grid[j * nx..(j + 1) * nx];
        f[..nx].copy_from_slice(row);
        envelope_1d(&f[..nx], hx * hx, &mut out[..nx], &mut v, &mut z);
        row.copy_from_slice(&out[..nx]);
    }
    if ny > 1 {
        for i in 0..nx {
            for j in 0..ny {
                f[j] = grid[j * nx + i];
            }
            envelope_1d(&f[..ny], hy * hy, &mut out[..ny], &mut v, &mut z);
            for j in 0..ny {
                grid[j * nx + i] = out[j];
            }
        }
    }
    grid.into_iter().map(|d| if d >= FAR * 0.5 { f64::INFINITY } else { d }).collect()
}
