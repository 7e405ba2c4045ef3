//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) batches run on rayon; without it
//! the same entry points run sequentially. Results are identical either
//! way: searches return the first hit in input order.

/// Applies `f` to every item and returns the first `Some` in input order.
#[cfg(feature = "parallel")]
pub fn find_first_map<T, R, F>(items: Vec<T>, f: F) -> Option<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> Option<R> + Sync + Send,
{
    use rayon::prelude::*;
    items.into_par_iter().find_map_first(f)
}

#[cfg(not(feature = "parallel"))]
pub fn find_first_map<T, R, F>(items: Vec<T>, f: F) -> Option<R>
where
    F: Fn(T) -> Option<R>,
{
    items.into_iter().find_map(f)
}

/// Sequential twin of [`find_first_map`], kept unconditionally so that
/// benchmarks can compare both code paths.
pub fn find_first_map_seq<T, R, F>(items: Vec<T>, f: F) -> Option<R>
where
    F: Fn(T) -> Option<R>,
{
    items.into_iter().find_map(f)
}

/// Maps a batch, preserving order.
#[cfg(feature = "parallel")]
pub fn map_batch<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_batch<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    F: Fn(T) -> R,
{
    items.into_iter().map(f).collect()
}

/// Sequential twin of [`map_batch`] for benchmarking.
pub fn map_batch_seq<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    F: Fn(T) -> R,
{
    items.into_iter().map(f).collect()
}

/// Caps the global rayon thread pool. A no-op without the feature, and
/// after the pool is already initialized.
pub fn limit_threads(n: usize) {
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_hit_in_input_order() {
        let items: Vec<u32> = (0..1000).collect();
        let hit = find_first_map(items.clone(), |x| if x % 7 == 3 { Some(x) } else { None });
        assert_eq!(hit, Some(3));
        assert_eq!(
            hit,
            find_first_map_seq(items, |x| if x % 7 == 3 { Some(x) } else { None })
        );
    }

    #[test]
    fn map_batch_preserves_order() {
        let items: Vec<u32> = (0..100).collect();
        assert_eq!(map_batch(items.clone(), |x| x * 2), map_batch_seq(items, |x| x * 2));
    }
}
