//! Exact span membership over the rationals by incremental elimination.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::symbolic::Rational;

/// Sparse vector keyed by basis labels.
pub type SparseVec<K> = BTreeMap<K, Rational>;

fn axpy<K: Ord + Clone>(y: &mut SparseVec<K>, a: &Rational, x: &SparseVec<K>) {
    for (k, v) in x {
        let e = y.entry(k.clone()).or_insert_with(Rational::zero);
        *e += a * v;
        if e.is_zero() {
            y.remove(k);
        }
    }
}

/// Echelon basis of the span of a list of columns, remembering how each
/// basis vector combines the columns.
pub struct SpanBasis<K: Ord + Clone> {
    columns: usize,
    rows: Vec<(K, SparseVec<K>, SparseVec<usize>)>,
}

/// Outcome of reducing a target against the span.
#[derive(Clone, Debug)]
pub struct Reduction<K: Ord + Clone> {
    /// What is left after subtracting the span part; zero iff the target
    /// lies in the span.
    pub remainder: SparseVec<K>,
    /// Coefficients on the original columns of the span part.
    pub coefficients: SparseVec<usize>,
}

impl<K: Ord + Clone> Reduction<K> {
    pub fn in_span(&self) -> bool {
        self.remainder.is_empty()
    }
}

impl<K: Ord + Clone> Default for SpanBasis<K> {
    fn default() -> Self {
        SpanBasis { columns: 0, rows: vec![] }
    }
}

impl<K: Ord + Clone> SpanBasis<K> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    fn reduce_with_combo(&self, mut v: SparseVec<K>, mut combo: SparseVec<usize>) -> (SparseVec<K>, SparseVec<usize>) {
        for (pivot, row, rc) in &self.rows {
            if let Some(c) = v.get(pivot).cloned() {
                let a = -(c / &row[pivot]);
                axpy(&mut v, &a, row);
                axpy(&mut combo, &a, rc);
            }
        }
        (v, combo)
    }

    /// Appends a column; returns its index.
    pub fn push(&mut self, column: SparseVec<K>) -> usize {
        let idx = self.columns;
        self.push_relation(column);
        idx
    }

    /// Appends a column. When it depends on the earlier ones, returns the
    /// relation `Σ r_i column_i = 0` (with `r_new = 1`).
    pub fn push_relation(&mut self, column: SparseVec<K>) -> Option<SparseVec<usize>> {
        let idx = self.columns;
        self.columns += 1;
        let mut combo = SparseVec::new();
        combo.insert(idx, Rational::from_integer(1.into()));
        let (v, combo) = self.reduce_with_combo(column, combo);
        if let Some(pivot) = v.keys().next().cloned() {
            // keep earlier rows reduced against the new pivot
            for (_, row, rc) in self.rows.iter_mut() {
                if let Some(c) = row.get(&pivot).cloned() {
                    let a = -(c / &v[&pivot]);
                    axpy(row, &a, &v);
                    axpy(rc, &a, &combo);
                }
            }
            self.rows.push((pivot, v, combo));
            None
        } else {
            Some(combo)
        }
    }

    /// Splits `target = Σ c_i column_i + remainder`.
    pub fn reduce(&self, target: &SparseVec<K>) -> Reduction<K> {
        let (remainder, combo) = self.reduce_with_combo(target.clone(), SparseVec::new());
        let coefficients = combo.into_iter().map(|(k, v)| (k, -v)).collect();
        Reduction { remainder, coefficients }
    }
}
