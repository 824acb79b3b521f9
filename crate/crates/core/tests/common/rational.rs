//! Exact substitution oracle for single-patch reduction constants.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Exact rational with i128 parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Q(i128, i128);

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

impl Q {
    pub fn new(n: i128, d: i128) -> Self {
        assert!(d != 0);
        let g = gcd(n, d).max(1) * d.signum();
        Q(n / g, d / g)
    }
    pub fn int(n: i128) -> Self {
        Q(n, 1)
    }
    pub fn f(self) -> f64 {
        self.0 as f64 / self.1 as f64
    }
}

impl Add for Q {
    type Output = Q;
    fn add(self, o: Q) -> Q {
        Q::new(self.0 * o.1 + o.0 * self.1, self.1 * o.1)
    }
}
impl Sub for Q {
    type Output = Q;
    fn sub(self, o: Q) -> Q {
        self + (-o)
    }
}
impl Neg for Q {
    type Output = Q;
    fn neg(self) -> Q {
        Q(-self.0, self.1)
    }
}
impl Mul for Q {
    type Output = Q;
    fn mul(self, o: Q) -> Q {
        Q::new(self.0 * o.0, self.1 * o.1)
    }
}
impl Div for Q {
    type Output = Q;
    fn div(self, o: Q) -> Q {
        Q::new(self.0 * o.1, self.1 * o.0)
    }
}

pub struct ExactPatch {
    pub s: Q,
    pub i: Q,
    pub d: Q,
    pub a: [[Q; 2]; 2],
    pub phi: Q,
    pub psi: Q,
    pub speeds: [Q; 5],
}

/// Solves the single-strain SIDS balance equations and the left kernel of
/// the linearization directly, in exact arithmetic.
pub fn exact_patch(r: Q, beta: Q, gamma: Q, k: Q) -> ExactPatch {
    let half = Q::new(1, 2);
    let two = Q::int(2);
    let m = r + gamma;
    // dS = 0 with J = T gives beta*S = r + gamma.
    let s = m / beta;
    let t = Q::int(1) - s;
    // dI = beta*T*S - m*I - k*beta*T*I = 0
    let i = beta * t * s / (m + k * beta * t);
    // dD = k*beta*T*I - m*D = 0
    let d = k * beta * t * i / m;
    assert_eq!(s + i + d, Q::int(1));
    // Linearization of (I, D) along strain-frequency directions: total
    // force is I + D, per-strain force T*z; u = I^i, v = D^{i.} summed.
    let a = [
        [-(k * beta * t), beta * s],
        [half * k * beta * (t + i), half * k * beta * i - m],
    ];
    // Left kernel: phi*a00 + psi*a10 = 0, normalized so phi*I + psi*D = 1.
    let ratio = -(a[0][0] / a[1][0]);
    let phi = Q::int(1) / (i + ratio * d);
    let psi = ratio * phi;
    let pp = two * t * t - i * d;
    let speeds = [
        two * m * t * t / pp,
        gamma * i * (i + t) / pp,
        gamma * t * d / pp,
        two * m * t * d / pp,
        beta * i * t / pp,
    ];
    ExactPatch {
        s,
        i,
        d,
        a,
        phi,
        psi,
        speeds,
    }
}

pub fn exact_worked() -> ExactPatch {
    exact_patch(Q::int(1), Q::int(4), Q::int(1), Q::int(1))
}
