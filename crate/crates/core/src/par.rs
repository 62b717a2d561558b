//! Data-parallel helpers. With the `parallel` feature they run on rayon
//! unless [`set_sequential`] forced the sequential path; results are always
//! those of the sequential order.

use std::sync::atomic::{AtomicBool, Ordering};

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Forces every helper onto the sequential path (used by the benchmarks).
pub fn set_sequential(on: bool) {
    FORCE_SEQUENTIAL.store(on, Ordering::Relaxed);
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.load(Ordering::Relaxed)
}

/// First `Some` in slice order.
pub fn find_map_first<T, R, F>(items: &[T], f: F) -> Option<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Option<R> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() && items.len() > 1 {
        use rayon::prelude::*;
        return items.par_iter().find_map_first(f);
    }
    items.iter().find_map(f)
}

pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() && items.len() > 1 {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    items.iter().map(f).collect()
}

/// `Ok(true)` iff `f` holds on every item; the first error or failure in
/// slice order wins.
pub fn try_all<T, E, F>(items: &[T], f: F) -> Result<bool, E>
where
    T: Sync,
    E: Send,
    F: Fn(&T) -> Result<bool, E> + Sync + Send,
{
    let first_bad = find_map_first(items, |x| match f(x) {
        Ok(true) => None,
        Ok(false) => Some(Ok(false)),
        Err(e) => Some(Err(e)),
    });
    first_bad.unwrap_or(Ok(true))
}
