//! Truncated Taylor polynomials in up to three variables.
//!
//! A `Jet` stores the Taylor coefficients f^(α)(x0)/α! for |α| ≤ degree.
//! Arithmetic and composition with univariate functions are exact up to
//! truncation, so every partial derivative of a composite expression is
//! available at once.

use std::sync::OnceLock;

pub const MAX_DEGREE: usize = 6;

struct Layout {
    monos: Vec<[u8; 3]>,
    index: [[[usize; MAX_DEGREE + 1]; MAX_DEGREE + 1]; MAX_DEGREE + 1],
    // For each monomial a: list of (b, a+b) with |a|+|b| ≤ MAX_DEGREE.
    products: Vec<Vec<(usize, usize)>>,
    degree_end: [usize; MAX_DEGREE + 2],
}

fn layout() -> &'static Layout {
    static L: OnceLock<Layout> = OnceLock::new();
    L.get_or_init(|| {
        let mut monos = Vec::new();
        let mut degree_end = [0; MAX_DEGREE + 2];
        for d in 0..=MAX_DEGREE {
            for i in (0..=d).rev() {
                for j in (0..=d - i).rev() {
                    monos.push([i as u8, j as u8, (d - i - j) as u8]);
                }
            }
            degree_end[d] = monos.len();
        }
        degree_end[MAX_DEGREE + 1] = monos.len();
        let mut index = [[[usize::MAX; MAX_DEGREE + 1]; MAX_DEGREE + 1]; MAX_DEGREE + 1];
        for (k, m) in monos.iter().enumerate() {
            index[m[0] as usize][m[1] as usize][m[2] as usize] = k;
        }
        let mut products = vec![Vec::new(); monos.len()];
        for (a, ma) in monos.iter().enumerate() {
            for (b, mb) in monos.iter().enumerate() {
                let s = [ma[0] + mb[0], ma[1] + mb[1], ma[2] + mb[2]];
                if (s[0] + s[1] + s[2]) as usize <= MAX_DEGREE {
                    products[a].push((b, index[s[0] as usize][s[1] as usize][s[2] as usize]));
                }
            }
        }
        Layout { monos, index, products, degree_end }
    })
}

pub fn monomial_count(degree: usize) -> usize {
    layout().degree_end[degree]
}

#[derive(Clone, Debug)]
pub struct Jet {
    degree: usize,
    c: Vec<f64>,
}

impl Jet {
    pub fn constant(degree: usize, value: f64) -> Jet {
        assert!(degree <= MAX_DEGREE);
        let mut c = vec![0.0; monomial_count(degree)];
        c[0] = value;
        Jet { degree, c }
    }

    /// The coordinate function x_var expanded around `value`.
    pub fn variable(degree: usize, var: usize, value: f64) -> Jet {
        let mut j = Jet::constant(degree, value);
        if degree >= 1 {
            let mut e = [0usize; 3];
            e[var] = 1;
            j.c[layout().index[e[0]][e[1]][e[2]]] = 1.0;
        }
        j
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Taylor coefficient of (x − x0)^α.
    pub fn coeff(&self, alpha: [usize; 3]) -> f64 {
        if alpha.iter().sum::<usize>() > self.degree {
            return 0.0;
        }
        self.c[layout().index[alpha[0]][alpha[1]][alpha[2]]]
    }

    /// ∂^α evaluated at the expansion point.
    pub fn derivative(&self, alpha: [usize; 3]) -> f64 {
        let fact: f64 = alpha.iter().map(|&a| (1..=a).product::<usize>() as f64).product();
        self.coeff(alpha) * fact
    }

    pub fn add(&self, o: &Jet) -> Jet {
        let c = self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect();
        Jet { degree: self.degree, c }
    }

    pub fn sub(&self, o: &Jet) -> Jet {
        let c = self.c.iter().zip(&o.c).map(|(a, b)| a - b).collect();
        Jet { degree: self.degree, c }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet { degree: self.degree, c: self.c.iter().map(|a| a * s).collect() }
    }

    pub fn add_const(&self, s: f64) -> Jet {
        let mut r = self.clone();
        r.c[0] += s;
        r
    }

    pub fn mul(&self, o: &Jet) -> Jet {
        let l = layout();
        let n = self.c.len();
        let mut c = vec![0.0; n];
        for a in 0..n {
            let x = self.c[a];
            if x == 0.0 {
                continue;
            }
            for &(b, ab) in &l.products[a] {
                if ab < n && b < n {
                    c[ab] += x * o.c[b];
                }
            }
        }
        Jet { degree: self.degree, c }
    }

    /// g(self) where `derivs[k]` = g^(k)(self.value()) for k = 0..=degree.
    pub fn compose(&self, derivs: &[f64]) -> Jet {
        assert!(derivs.len() > self.degree);
        let mut h = self.clone();
        h.c[0] = 0.0;
        let mut out = Jet::constant(self.degree, derivs[0]);
        let mut power = Jet::constant(self.degree, 1.0);
        let mut fact = 1.0;
        for (k, d) in derivs.iter().enumerate().take(self.degree + 1).skip(1) {
            power = power.mul(&h);
            fact *= k as f64;
            let s = d / fact;
            if s != 0.0 {
                for (o, p) in out.c.iter_mut().zip(&power.c) {
                    *o += s * p;
                }
            }
        }
        out
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose(&vec![e; self.degree + 1])
    }

    pub fn ln(&self) -> Jet {
        let x = self.value();
        let mut d = vec![x.ln()];
        let mut f = 1.0;
        for k in 1..=self.degree {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            d.push(sign * f / x.powi(k as i32));
            f *= k as f64;
        }
        self.compose(&d)
    }

    pub fn powf(&self, p: f64) -> Jet {
        let x = self.value();
        let mut d = Vec::with_capacity(self.degree + 1);
        let mut coef = 1.0;
        for k in 0..=self.degree {
            d.push(coef * x.powf(p - k as f64));
            coef *= p - k as f64;
        }
        self.compose(&d)
    }

    pub fn monomials(&self) -> impl Iterator<Item = ([usize; 3], f64)> + '_ {
        let l = layout();
        self.c.iter().enumerate().map(move |(k, &v)| {
            let m = l.monos[k];
            ([m[0] as usize, m[1] as usize, m[2] as usize], v)
        })
    }
}
