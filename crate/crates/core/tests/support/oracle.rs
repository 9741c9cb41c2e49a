//! Brute-force lattice oracles over small integer boxes.

#![allow(dead_code)]

/// Rank over Q by fraction-free elimination.
pub fn rank(rows: &[Vec<i128>]) -> usize {
    let mut m: Vec<Vec<i128>> = rows.to_vec();
    let cols = m.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).find(|&i| m[i][c] != 0) else { continue };
        m.swap(r, p);
        for i in r + 1..m.len() {
            let (a, b) = (m[r][c], m[i][c]);
            if b == 0 {
                continue;
            }
            for j in c..cols {
                m[i][j] = m[i][j] * a - m[r][j] * b;
            }
            let g = m[i].iter().fold(0i128, |g, &x| gcd(g, x));
            if g > 1 {
                m[i].iter_mut().for_each(|x| *x /= g);
            }
        }
        r += 1;
    }
    r
}

pub fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn widen(v: &[i64]) -> Vec<i128> {
    v.iter().map(|&x| x as i128).collect()
}

/// Whether `v` lies in the rational span of `gens`.
pub fn in_span(gens: &[Vec<i64>], v: &[i64]) -> bool {
    let rows: Vec<Vec<i128>> = gens.iter().map(|g| widen(g)).collect();
    let mut with = rows.clone();
    with.push(widen(v));
    rank(&with) == rank(&rows)
}

pub fn annihilates(gens: &[Vec<i64>], v: &[i64]) -> bool {
    gens.iter().all(|g| g.iter().zip(v).map(|(a, b)| (*a as i128) * (*b as i128)).sum::<i128>() == 0)
}

/// `Σ k_i p_i/q_i == 0` exactly.
pub fn resonant(omega: &[(i64, i64)], k: &[i64]) -> bool {
    let l = omega.iter().fold(1i128, |l, &(_, q)| l / gcd(l, q as i128) * q as i128);
    omega.iter().zip(k).map(|(&(p, q), &ki)| p as i128 * (l / q as i128) * ki as i128).sum::<i128>() == 0
}

/// Every point of `[-b, b]^d`.
pub fn box_points(d: usize, b: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|p| {
                (-b..=b).map(move |x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out
}

/// Determinant by fraction-free elimination (Bareiss).
pub fn det(rows: &[Vec<i64>]) -> i128 {
    let n = rows.len();
    let mut m: Vec<Vec<i128>> = rows.iter().map(|r| widen(r)).collect();
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n {
        if m[k][k] == 0 {
            let Some(p) = (k + 1..n).find(|&i| m[i][k] != 0) else { return 0 };
            m.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
        }
        prev = m[k][k];
    }
    sign * m[n - 1][n - 1]
}
