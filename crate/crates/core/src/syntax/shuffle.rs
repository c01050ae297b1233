//! Shuffles of sequences, used for context splitting.

/// All interleavings of `a` and `b` that preserve the order within each.
pub fn interleavings<T: Clone>(a: &[T], b: &[T]) -> Vec<Vec<T>> {
    if a.is_empty() {
        return vec![b.to_vec()];
    }
    if b.is_empty() {
        return vec![a.to_vec()];
    }
    let mut out = Vec::new();
    for mut rest in interleavings(&a[1..], b) {
        rest.insert(0, a[0].clone());
        out.push(rest);
    }
    for mut rest in interleavings(a, &b[1..]) {
        rest.insert(0, b[0].clone());
        out.push(rest);
    }
    out
}

/// All interleavings of any number of sequences.
pub fn enumerate_shuffles<T: Clone>(parts: &[Vec<T>]) -> Vec<Vec<T>> {
    parts.iter().fold(vec![vec![]], |acc, part| {
        acc.iter().flat_map(|prefix| interleavings(prefix, part)).collect()
    })
}

/// Whether `e` is a shuffle of `parts`.
pub fn is_shuffle<T: PartialEq>(e: &[T], parts: &[&[T]]) -> bool {
    fn go<T: PartialEq>(e: &[T], parts: &[&[T]], pos: &mut Vec<usize>) -> bool {
        let done: usize = pos.iter().sum();
        if done == e.len() {
            return parts.iter().zip(pos.iter()).all(|(p, &i)| i == p.len());
        }
        for k in 0..parts.len() {
            if pos[k] < parts[k].len() && parts[k][pos[k]] == e[done] {
                pos[k] += 1;
                if go(e, parts, pos) {
                    return true;
                }
                pos[k] -= 1;
            }
        }
        false
    }
    let total: usize = parts.iter().map(|p| p.len()).sum();
    total == e.len() && go(e, parts, &mut vec![0; parts.len()])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interleaving_count_is_binomial() {
        assert_eq!(interleavings(&[1, 2], &[3, 4, 5]).len(), 10);
        assert_eq!(interleavings::<u8>(&[], &[]).len(), 1);
        assert_eq!(enumerate_shuffles(&[vec![1], vec![2, 3], vec![4]]).len(), 12);
    }

    #[test]
    fn shuffle_membership() {
        assert!(is_shuffle(&[1, 3, 2, 4], &[&[1, 2], &[3, 4]]));
        assert!(!is_shuffle(&[2, 1, 3, 4], &[&[1, 2], &[3, 4]]));
        assert!(!is_shuffle(&[1, 2, 3], &[&[1, 2], &[3, 4]]));
    }
}
