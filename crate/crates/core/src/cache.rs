use std::sync::{Arc, Mutex};

const CAPACITY: usize = 4;

/// Small cache of factorizations keyed by the exact bit pattern of a step
/// parameter (γ or β). Adaptive solves only ever visit a handful of values, so
/// a linear scan over the most recent entries is enough.
pub(crate) struct StepCache<T> {
    entries: Mutex<Vec<(u64, Arc<T>)>>,
}

impl<T> StepCache<T> {
    pub(crate) fn new() -> Self {
        StepCache {
            entries: Mutex::new(Vec::with_capacity(CAPACITY)),
        }
    }

    pub(crate) fn get_or_try_insert<E>(
        &self,
        step: f64,
        build: impl FnOnce() -> Result<T, E>,
    ) -> Result<Arc<T>, E> {
        let key = step.to_bits();
        {
            let entries = self.entries.lock().expect("factorization cache poisoned");
            if let Some((_, value)) = entries.iter().find(|(k, _)| *k == key) {
                return Ok(Arc::clone(value));
            }
        }
        // Built outside the lock; a concurrent duplicate build is harmless.
        let value = Arc::new(build()?);
        let mut entries = self.entries.lock().expect("factorization cache poisoned");
        if entries.len() == CAPACITY {
            entries.remove(0);
        }
        entries.push((key, Arc::clone(&value)));
        Ok(value)
    }
}

impl<T> Default for StepCache<T> {
    fn default() -> Self {
        Self::new()
    }
}
