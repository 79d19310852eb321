use super::ModelError;

/// A bijection on `{0, .., m-1}` stored as `map[i] = pi(i)`.
///
/// Throughout the crate a permutation pairs response `i` with covariate
/// `pi(i)`, i.e. `y_i` is measured on `x_{pi(i)}`. Its matrix `Pi` has
/// `Pi[i][pi(i)] = 1`, so `Pi^T y` lists the responses in covariate order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self, ModelError> {
        let m = map.len();
        let mut seen = vec![false; m];
        for &v in &map {
            if v >= m || std::mem::replace(&mut seen[v], true) {
                return Err(ModelError::Argument(format!(
                    "not a permutation of 0..{m}: {map:?}"
                )));
            }
        }
        Ok(Self { map })
    }

    pub fn identity(m: usize) -> Self {
        Self {
            map: (0..m).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.map
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (i, &p) in self.map.iter().enumerate() {
            inv[p] = i;
        }
        Self { map: inv }
    }

    /// `(self o other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "composing permutations of different sizes");
        Self {
            map: other.map.iter().map(|&i| self.map[i]).collect(),
        }
    }

    /// `Pi^T y`: entry `pi(i)` of the result is `y_i`.
    pub fn align<T: Clone>(&self, y: &[T]) -> Vec<T> {
        assert_eq!(self.len(), y.len(), "permutation and vector differ in length");
        let mut out = y.to_vec();
        for (i, v) in y.iter().enumerate() {
            out[self.map[i]] = v.clone();
        }
        out
    }

    /// Advances to the next permutation in lexicographic order; returns
    /// `false` (leaving `self` unchanged) at the last one.
    pub fn next_lexicographic(&mut self) -> bool {
        next_permutation(&mut self.map)
    }
}

pub(crate) fn next_permutation(a: &mut [usize]) -> bool {
    let n = a.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_bijections() {
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![0, 2]).is_err());
        assert!(Permutation::new(vec![]).is_ok());
    }

    #[test]
    fn align_and_inverse() {
        let p = Permutation::new(vec![2, 0, 1]).unwrap();
        assert_eq!(p.align(&['a', 'b', 'c']), vec!['b', 'c', 'a']);
        assert_eq!(p.compose(&p.inverse()), Permutation::identity(3));
    }

    #[test]
    fn lexicographic_walk_counts_factorial() {
        let mut p = Permutation::identity(4);
        let mut count = 1;
        let mut prev = p.clone().into_vec();
        while p.next_lexicographic() {
            assert!(p.as_slice() > prev.as_slice());
            prev = p.as_slice().to_vec();
            count += 1;
        }
        assert_eq!(count, 24);
        assert_eq!(p.as_slice(), &[3, 2, 1, 0]);
    }
}
