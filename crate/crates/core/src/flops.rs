use std::ops::AddAssign;

/// Running count of complex multiply-accumulate operations.
///
/// One unit corresponds to one complex multiply-add; real scalings and
/// divisions of a complex entry also count as one unit.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Flops(pub u64);

impl Flops {
    #[inline]
    pub fn add(&mut self, n: usize) {
        self.0 += n as u64;
    }

    pub fn get(self) -> u64 {
        self.0
    }
}

impl AddAssign for Flops {
    fn add_assign(&mut self, rhs: Self) {
        self.0 += rhs.0;
    }
}
