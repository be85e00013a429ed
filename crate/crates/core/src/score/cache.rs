use lru::LruCache;

/// Default number of `(node, parents)` entries kept per chain.
pub const DEFAULT_CACHE_CAPACITY: usize = 1 << 20;

/// Chain-private LRU cache of node scores keyed by `[node, parents...]`.
#[derive(Debug)]
pub struct ScoreCache {
    entries: LruCache<Vec<u32>, f64>,
    capacity: usize,
    key_buf: Vec<u32>,
    hits: u64,
    misses: u64,
}

impl Default for ScoreCache {
    fn default() -> Self {
        Self::with_capacity(DEFAULT_CACHE_CAPACITY)
    }
}

impl ScoreCache {
    /// A capacity of zero disables caching.
    pub fn with_capacity(capacity: usize) -> Self {
        Self { entries: LruCache::unbounded(), capacity, key_buf: Vec::new(), hits: 0, misses: 0 }
    }

    pub fn hits(&self) -> u64 {
        self.hits
    }

    pub fn misses(&self) -> u64 {
        self.misses
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Returns the cached score for `(node, parents)` or computes, stores and
    /// returns it. `parents` must be sorted ascending.
    pub fn get_or_insert_with<E>(
        &mut self,
        node: usize,
        parents: &[usize],
        compute: impl FnOnce() -> Result<f64, E>,
    ) -> Result<f64, E> {
        debug_assert!(parents.windows(2).all(|w| w[0] < w[1]));
        self.key_buf.clear();
        self.key_buf.push(node as u32);
        self.key_buf.extend(parents.iter().map(|&p| p as u32));
        if let Some(&v) = self.entries.get(self.key_buf.as_slice()) {
            self.hits += 1;
            return Ok(v);
        }
        self.misses += 1;
        let v = compute()?;
        if self.capacity > 0 {
            if self.entries.len() >= self.capacity {
                self.entries.pop_lru();
            }
            self.entries.put(self.key_buf.clone(), v);
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hits_and_misses_are_counted() {
        let mut cache = ScoreCache::with_capacity(4);
        let mut calls = 0;
        for _ in 0..3 {
            let v: Result<f64, ()> = cache.get_or_insert_with(1, &[0, 2], || {
                calls += 1;
                Ok(-1.5)
            });
            assert_eq!(v, Ok(-1.5));
        }
        assert_eq!((calls, cache.hits(), cache.misses()), (1, 2, 1));
    }

    #[test]
    fn evicts_least_recently_used() {
        let mut cache = ScoreCache::with_capacity(2);
        let f = |v: f64| move || Ok::<_, ()>(v);
        cache.get_or_insert_with(0, &[], f(0.0)).unwrap();
        cache.get_or_insert_with(1, &[], f(1.0)).unwrap();
        cache.get_or_insert_with(0, &[], f(0.0)).unwrap();
        cache.get_or_insert_with(2, &[], f(2.0)).unwrap();
        assert_eq!(cache.len(), 2);
        let misses = cache.misses();
        cache.get_or_insert_with(0, &[], f(0.0)).unwrap();
        assert_eq!(cache.misses(), misses);
        cache.get_or_insert_with(1, &[], f(1.0)).unwrap();
        assert_eq!(cache.misses(), misses + 1);
    }

    #[test]
    fn errors_are_not_cached() {
        let mut cache = ScoreCache::with_capacity(2);
        assert_eq!(cache.get_or_insert_with(0, &[], || Err::<f64, _>("bad")), Err("bad"));
        assert!(cache.is_empty());
    }
}
