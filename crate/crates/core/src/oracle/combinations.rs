//! Lexicographic ranking of `k`-subsets of `0..n`.

/// `C(n, k)`, saturating at `u64::MAX`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// The `rank`-th `k`-subset of `0..n` in lexicographic order.
pub fn unrank(n: usize, k: usize, mut rank: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut next = 0;
    for slot in 0..k {
        loop {
            // subsets that start with `next` at this slot
            let with = binomial(n - next - 1, k - slot - 1);
            if rank < with {
                break;
            }
            rank -= with;
            next += 1;
        }
        out.push(next);
        next += 1;
    }
    out
}

/// Advances `c` to the next `k`-subset of `0..n`; false after the last one.
pub fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(60, 30), 118264581564861424);
        assert_eq!(binomial(200, 100), u64::MAX);
    }

    #[test]
    fn unrank_walks_in_order() {
        for (n, k) in [(6, 3), (5, 0), (4, 4), (7, 1)] {
            let mut c: Vec<usize> = (0..k).collect();
            let total = binomial(n, k);
            for rank in 0..total {
                assert_eq!(unrank(n, k, rank), c);
                let more = next_combination(&mut c, n);
                assert_eq!(more, rank + 1 < total);
            }
        }
    }
}
