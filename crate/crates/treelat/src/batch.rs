//! Order-preserving data-parallel helpers.
//!
//! [`map`] and [`flat_map`] dispatch to rayon when the `parallel` feature is
//! enabled and to plain iterators otherwise. Both preserve input order, so
//! callers observe bit-identical results in either mode; the `_seq` variants
//! are always available for side-by-side benchmarking.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `items`, preserving order.
pub fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_seq(items, f)
    }
}

/// Sequential twin of [`map`].
pub fn map_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Flat-maps `f` over `items`, concatenating the per-item results in input
/// order.
pub fn flat_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Vec<U> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().flat_map_iter(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        flat_map_seq(items, f)
    }
}

/// Sequential twin of [`flat_map`].
pub fn flat_map_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> Vec<U>,
{
    items.iter().flat_map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_matches_sequential() {
        let xs: Vec<u64> = (0..1000).collect();
        let f = |x: &u64| x * x + 1;
        assert_eq!(map(&xs, f), map_seq(&xs, f));
    }

    #[test]
    fn flat_map_preserves_order() {
        let xs: Vec<u64> = (0..200).collect();
        let f = |x: &u64| vec![*x, x + 1_000_000];
        assert_eq!(flat_map(&xs, f), flat_map_seq(&xs, f));
    }
}
