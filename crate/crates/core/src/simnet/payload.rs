/// A value that can travel through the simulated network.
///
/// `words` is the number of machine words the value occupies on the wire.
/// Only payload is counted; message headers and lengths are free.
pub trait Payload: Send + 'static {
    fn words(&self) -> usize;
}

/// A payload whose size does not depend on its value.
///
/// `Option<T>` of a fixed-size type is encoded with a sentinel and costs the
/// same as `T`, so reductions over optional values keep a constant width.
pub trait FixedWords: Payload {
    const WORDS: usize;
}

macro_rules! one_word {
    ($($t:ty),*) => {$(
        impl Payload for $t {
            fn words(&self) -> usize {
                1
            }
        }
        impl FixedWords for $t {
            const WORDS: usize = 1;
        }
    )*};
}

one_word!(u8, u16, u32, u64, usize, i32, i64, f64, bool);

impl Payload for () {
    fn words(&self) -> usize {
        0
    }
}

impl FixedWords for () {
    const WORDS: usize = 0;
}

impl<A: Payload, B: Payload> Payload for (A, B) {
    fn words(&self) -> usize {
        self.0.words() + self.1.words()
    }
}

impl<A: FixedWords, B: FixedWords> FixedWords for (A, B) {
    const WORDS: usize = A::WORDS + B::WORDS;
}

impl<A: Payload, B: Payload, C: Payload> Payload for (A, B, C) {
    fn words(&self) -> usize {
        self.0.words() + self.1.words() + self.2.words()
    }
}

impl<A: FixedWords, B: FixedWords, C: FixedWords> FixedWords for (A, B, C) {
    const WORDS: usize = A::WORDS + B::WORDS + C::WORDS;
}

impl<T: Payload> Payload for Vec<T> {
    fn words(&self) -> usize {
        self.iter().map(Payload::words).sum()
    }
}

impl<T: FixedWords> Payload for Option<T> {
    fn words(&self) -> usize {
        T::WORDS
    }
}

impl<T: FixedWords> FixedWords for Option<T> {
    const WORDS: usize = T::WORDS;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn option_costs_like_its_content() {
        assert_eq!(None::<u64>.words(), 1);
        assert_eq!(Some((1u64, 2u64)).words(), 2);
        assert_eq!(vec![Some(1u64), None].words(), 2);
    }

    #[test]
    fn nested_vectors_count_leaves() {
        let v: Vec<Vec<(u64, f64)>> = vec![vec![(1, 1.0)], vec![], vec![(2, 2.0), (3, 3.0)]];
        assert_eq!(v.words(), 6);
    }
}
