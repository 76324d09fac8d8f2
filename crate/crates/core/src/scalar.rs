//! Scalar abstraction: the numeric core is generic over the element type.
//!
//! Implemented for `f32` and `f64`. The CLI and the serialized model format
//! use `f64`; `f32` is available for memory-constrained experimentation.

use std::fmt::{Debug, Display};

use num_traits::{Float, NumAssignOps};

pub trait Scalar: Float + NumAssignOps + Debug + Display + Send + Sync + 'static {
    fn from_f64(v: f64) -> Self;

    fn from_usize(v: usize) -> Self {
        Self::from_f64(v as f64)
    }

    fn as_f64(self) -> f64;

    /// `c = alpha * a.b + beta * c` for row-major buffers with explicit strides.
    ///
    /// # Safety
    /// `a`, `b`, `c` must describe valid `m x k`, `k x n` and `m x n` buffers
    /// under the given strides, and `c` must not overlap `a` or `b`.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );
}

impl Scalar for f32 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }

    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::sgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }

    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}
