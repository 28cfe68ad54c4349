//! Dense polynomial arithmetic over GF(p), little-endian coefficients.
//!
//! This is the substrate for extension-field construction: modulus search,
//! irreducibility testing, and the mul/rem kernels the field contexts reduce
//! through. Everything here is exact arithmetic on `u64` residues.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Characteristic cap. Products of two residues must fit in `u64`.
pub const MAX_CHAR: u64 = 1 << 31;

#[inline]
pub fn pow_mod_u64(mut base: u64, mut exp: u64, p: u64) -> u64 {
    base %= p;
    let mut acc = 1u64 % p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod(acc, base, p);
        }
        base = mulmod(base, base, p);
        exp >>= 1;
    }
    acc
}

#[inline]
fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    if p < MAX_CHAR {
        a * b % p
    } else {
        ((a as u128 * b as u128) % p as u128) as u64
    }
}

/// Inverse of `a` mod prime `p` via Fermat.
#[inline]
pub fn inv_mod(a: u64, p: u64) -> u64 {
    debug_assert!(a % p != 0);
    pow_mod_u64(a, p - 2, p)
}

pub fn trim(v: &mut Vec<u64>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

pub fn degree(v: &[u64]) -> Option<usize> {
    v.iter().rposition(|&c| c != 0)
}

pub fn sub(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let n = a.len().max(b.len());
    let mut out = vec![0u64; n];
    for (i, o) in out.iter_mut().enumerate() {
        let x = a.get(i).copied().unwrap_or(0);
        let y = b.get(i).copied().unwrap_or(0);
        *o = (x + p - y) % p;
    }
    trim(&mut out);
    out
}

/// Schoolbook product. Uses raw `u64` accumulation when the characteristic is
/// small enough that a full row of partial products cannot overflow.
pub fn mul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    let fast = p < (1 << 26) && a.len().min(b.len()) <= (1 << 11);
    if fast {
        for (i, &ai) in a.iter().enumerate() {
            if ai == 0 {
                continue;
            }
            for (j, &bj) in b.iter().enumerate() {
                out[i + j] += ai * bj;
            }
            // Partial sums stay below (p-1)^2 * min_len < 2^63; one pass of
            // reduction at the end is enough.
        }
        for o in out.iter_mut() {
            *o %= p;
        }
    } else {
        for (i, &ai) in a.iter().enumerate() {
            if ai == 0 {
                continue;
            }
            for (j, &bj) in b.iter().enumerate() {
                out[i + j] = (out[i + j] + mulmod(ai, bj, p)) % p;
            }
        }
    }
    trim(&mut out);
    out
}

/// Remainder of `a` divided by monic `f`.
pub fn rem(a: &[u64], f: &[u64], p: u64) -> Vec<u64> {
    let df = degree(f).expect("modulus must be nonzero");
    debug_assert_eq!(f[df], 1, "modulus must be monic");
    let mut r: Vec<u64> = a.to_vec();
    trim(&mut r);
    while let Some(dr) = degree(&r) {
        if dr < df {
            break;
        }
        let c = r[dr];
        let shift = dr - df;
        for (k, &fk) in f.iter().enumerate().take(df + 1) {
            let idx = k + shift;
            r[idx] = (r[idx] + p - mulmod(c, fk, p)) % p;
        }
        trim(&mut r);
    }
    r
}

pub fn mulrem(a: &[u64], b: &[u64], f: &[u64], p: u64) -> Vec<u64> {
    rem(&mul(a, b, p), f, p)
}

/// Quotient and remainder of `a` divided by nonzero `b` (any leading
/// coefficient).
pub fn divmod(a: &[u64], b: &[u64], p: u64) -> (Vec<u64>, Vec<u64>) {
    let db = degree(b).expect("division by zero polynomial");
    let lead_inv = inv_mod(b[db], p);
    let mut r: Vec<u64> = a.to_vec();
    trim(&mut r);
    let top = match degree(&r) {
        Some(d) if d >= db => d,
        _ => return (Vec::new(), r),
    };
    let mut q = vec![0u64; top - db + 1];
    while let Some(dr) = degree(&r) {
        if dr < db {
            break;
        }
        let c = mulmod(r[dr], lead_inv, p);
        let shift = dr - db;
        q[shift] = c;
        for (k, &bk) in b.iter().enumerate().take(db + 1) {
            let idx = k + shift;
            r[idx] = (r[idx] + p - mulmod(c, bk, p)) % p;
        }
        trim(&mut r);
    }
    trim(&mut q);
    (q, r)
}

/// Extended Euclid against a fixed modulus: returns (g, s) with
/// s * a = g (mod f). g is the gcd, not normalized to monic.
pub fn ext_gcd(a: &[u64], f: &[u64], p: u64) -> (Vec<u64>, Vec<u64>) {
    let mut r0: Vec<u64> = f.to_vec();
    let mut r1: Vec<u64> = a.to_vec();
    trim(&mut r0);
    trim(&mut r1);
    let mut s0: Vec<u64> = Vec::new();
    let mut s1: Vec<u64> = vec![1];
    while !r1.is_empty() {
        let (q, r) = divmod(&r0, &r1, p);
        let qs = mul(&q, &s1, p);
        let s = sub(&s0, &qs, p);
        r0 = std::mem::replace(&mut r1, r);
        s0 = std::mem::replace(&mut s1, s);
    }
    (r0, s0)
}

/// Monic gcd.
pub fn gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut x: Vec<u64> = a.to_vec();
    let mut y: Vec<u64> = b.to_vec();
    trim(&mut x);
    trim(&mut y);
    while !y.is_empty() {
        let dy = degree(&y).unwrap();
        let lead_inv = inv_mod(y[dy], p);
        let mut ym: Vec<u64> = y.iter().map(|&c| mulmod(c, lead_inv, p)).collect();
        let r = rem(&x, &ym, p);
        x = std::mem::take(&mut ym);
        y = r;
    }
    if let Some(dx) = degree(&x) {
        let lead_inv = inv_mod(x[dx], p);
        for c in x.iter_mut() {
            *c = mulmod(*c, lead_inv, p);
        }
    }
    x
}

pub fn eval(a: &[u64], x: u64, p: u64) -> u64 {
    let mut acc = 0u64;
    for &c in a.iter().rev() {
        acc = (mulmod(acc, x, p) + c) % p;
    }
    acc
}

fn powmod(a: &[u64], e: u64, f: &[u64], p: u64) -> Vec<u64> {
    let mut base = rem(a, f, p);
    let mut acc = vec![1u64];
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulrem(&acc, &base, f, p);
        }
        base = mulrem(&base, &base, f, p);
        e >>= 1;
    }
    acc
}

fn prime_factors_usize(mut n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Rabin irreducibility test for a monic degree-m polynomial over GF(p):
/// x^(p^m) == x mod f, and gcd(x^(p^(m/t)) - x, f) = 1 for every prime t | m.
/// Extra gcd probes at small Frobenius depths reject most reducible
/// candidates early (an irreducible f has trivial gcd at every depth < m).
pub fn is_irreducible(f: &[u64], p: u64) -> bool {
    let m = match degree(f) {
        Some(d) if f[d] == 1 => d,
        _ => return false,
    };
    if m == 0 {
        return false;
    }
    if m == 1 {
        return true;
    }
    // Root sieve: any root in GF(p) means a linear factor. Full coverage only
    // matters for small p; the main test below is what certifies.
    let sieve_cap = p.min(64);
    for a in 0..sieve_cap {
        if eval(f, a, p) == 0 {
            return false;
        }
    }
    let x = vec![0u64, 1];
    let required: Vec<usize> = prime_factors_usize(m).into_iter().map(|t| m / t).collect();
    let mut w = x.clone();
    for j in 1..=m {
        w = powmod(&w, p, f, p);
        if j == m {
            return w == x;
        }
        if j <= 8 || required.contains(&j) {
            let diff = sub(&w, &x, p);
            let g = gcd(&diff, f, p);
            if degree(&g) != Some(0) {
                return false;
            }
        }
    }
    unreachable!()
}

/// Deterministic seeded search for a monic irreducible polynomial of degree m.
pub fn find_irreducible(p: u64, m: usize, seed: u64) -> Vec<u64> {
    assert!(m >= 1);
    if m == 1 {
        // Canonical GF(p) modulus; elements are constants.
        return vec![0, 1];
    }
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&p.to_le_bytes());
    key[16..24].copy_from_slice(&(m as u64).to_le_bytes());
    key[24..32].copy_from_slice(b"irreduc.");
    let mut rng = ChaCha12Rng::from_seed(key);
    loop {
        let mut f: Vec<u64> = (0..m).map(|_| rng.gen_range(0..p)).collect();
        if f[0] == 0 {
            f[0] = 1 + rng.gen_range(0..p - 1);
        }
        f.push(1);
        if is_irreducible(&f, p) {
            return f;
        }
    }
}
