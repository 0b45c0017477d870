use std::collections::VecDeque;
use std::sync::Arc;

use rand::Rng;

use super::RlError;

/// Observations are shared: `s_next` of one step is `s` of the next.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub s: Arc<[f32]>,
    pub a: usize,
    pub r: f32,
    pub s_next: Arc<[f32]>,
    pub done: bool,
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "buffer capacity must be positive");
        Self { capacity, items: VecDeque::with_capacity(capacity.min(1 << 16)) }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    /// Oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// Uniform with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<&Transition>, RlError> {
        if self.items.len() < n || self.items.is_empty() {
            return Err(RlError::BufferTooSmall { requested: n, size: self.items.len() });
        }
        Ok((0..n).map(|_| &self.items[rng.random_range(0..self.items.len())]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn item(i: usize) -> Transition {
        let obs: Arc<[f32]> = Arc::from(vec![i as f32]);
        Transition { s: obs.clone(), a: i, r: 0.0, s_next: obs, done: false }
    }

    #[test]
    fn fifo_eviction() {
        let mut b = ReplayBuffer::new(3);
        for i in 1..=4 {
            b.push(item(i));
        }
        assert_eq!(b.iter().map(|t| t.a).collect::<Vec<_>>(), vec![2, 3, 4]);
    }

    #[test]
    fn sample_errors_and_determinism() {
        let mut b = ReplayBuffer::new(10);
        assert!(b.sample(1, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
        for i in 0..5 {
            b.push(item(i));
        }
        assert_eq!(b.sample(6, &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err(), RlError::BufferTooSmall { requested: 6, size: 5 });
        let draw = |seed| b.sample(5, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap().iter().map(|t| t.a).collect::<Vec<_>>();
        assert_eq!(draw(3), draw(3));
    }

    #[test]
    fn sampling_is_uniform() {
        let mut b = ReplayBuffer::new(10);
        for i in 0..10 {
            b.push(item(i));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let mut counts = [0usize; 10];
        for _ in 0..n / 10 {
            for t in b.sample(10, &mut rng).unwrap() {
                counts[t.a] += 1;
            }
        }
        let expected = n as f64 / 10.0;
        let sigma = (n as f64 * 0.1 * 0.9).sqrt();
        for c in counts {
            assert!((c as f64 - expected).abs() <= 3.0 * sigma, "{counts:?}");
        }
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 9 degrees of freedom, p = 0.001.
        assert!(chi2 < 27.88, "chi2 = {chi2}");
    }

    proptest! {
        #[test]
        fn size_bounded_and_order_fifo(capacity in 1usize..20, pushes in 0usize..60) {
            let mut b = ReplayBuffer::new(capacity);
            for i in 0..pushes {
                b.push(item(i));
                prop_assert!(b.len() <= capacity);
            }
            let kept: Vec<usize> = b.iter().map(|t| t.a).collect();
            let want: Vec<usize> = (pushes.saturating_sub(capacity)..pushes).collect();
            prop_assert_eq!(kept, want);
        }
    }
}
