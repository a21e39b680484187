use alloc::vec::Vec;

/// All `k`-subsets of `0..n` in lexicographic order.
pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k == 0 || k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

pub(crate) fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

pub(crate) fn saturating_pow(base: u64, exp: u32) -> u64 {
    let mut acc: u64 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base);
    }
    acc
}

/// Non-increasing index tuples `i_0 >= i_1 >= ... >= i_{len-1}` over `0..m`,
/// in lexicographic order of the reversed tuple. Calls `f` once per tuple.
pub(crate) fn for_each_non_increasing(m: usize, len: usize, mut f: impl FnMut(&[usize])) {
    if m == 0 || len == 0 {
        return;
    }
    // Non-decreasing odometer over 0..m, reported reversed.
    let mut idx = alloc::vec![0usize; len];
    let mut rev = alloc::vec![0usize; len];
    loop {
        for (r, &v) in rev.iter_mut().zip(idx.iter().rev()) {
            *r = v;
        }
        f(&rev);
        let mut i = len;
        while i > 0 && idx[i - 1] == m - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        let v = idx[i - 1];
        for x in &mut idx[i..] {
            *x = v;
        }
    }
}
