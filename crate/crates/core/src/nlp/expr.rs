//! Smooth scalar expressions built from a small set of term shapes with
//! closed-form first and second derivatives.
//!
//! Every term is evaluated in a local "role" space (one slot per variable
//! occurrence); callers scatter the local gradient and Hessian to global
//! indices.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrigKind {
    Cos,
    Sin,
}

impl TrigKind {
    /// `(f(u), f'(u), f''(u))`
    fn eval3(self, u: f64) -> (f64, f64, f64) {
        let (s, c) = u.sin_cos();
        match self {
            TrigKind::Cos => (c, -s, -c),
            TrigKind::Sin => (s, c, -s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    /// `coef * x[var]`
    Linear { var: usize, coef: f64 },
    /// `coef * Π x[v]^p` over distinct variables.
    Monomial { coef: f64, factors: Vec<(usize, u32)> },
    /// `coef * x[a] * x[b] * trig(x[c] - x[d] + shift)`
    Trig {
        coef: f64,
        mag: [usize; 2],
        angle: [usize; 2],
        shift: f64,
        kind: TrigKind,
    },
    /// `coef * lhs(x) * rhs(x)`, evaluated in factored form.
    Product { coef: f64, lhs: Expr, rhs: Expr },
}

impl Term {
    pub fn monomial(coef: f64, factors: &[(usize, u32)]) -> Term {
        let mut merged: Vec<(usize, u32)> = Vec::with_capacity(factors.len());
        for &(v, p) in factors {
            if p == 0 {
                continue;
            }
            match merged.iter_mut().find(|(w, _)| *w == v) {
                Some(slot) => slot.1 += p,
                None => merged.push((v, p)),
            }
        }
        merged.sort_unstable();
        Term::Monomial {
            coef,
            factors: merged,
        }
    }

    /// Variable index of each role.
    pub fn roles(&self) -> Vec<usize> {
        match self {
            Term::Linear { var, .. } => vec![*var],
            Term::Monomial { factors, .. } => factors.iter().map(|f| f.0).collect(),
            Term::Trig { mag, angle, .. } => vec![mag[0], mag[1], angle[0], angle[1]],
            Term::Product { lhs, rhs, .. } => {
                let mut v: Vec<usize> = lhs
                    .terms
                    .iter()
                    .chain(&rhs.terms)
                    .flat_map(|t| t.roles())
                    .collect();
                v.sort_unstable();
                v.dedup();
                v
            }
        }
    }

    pub fn is_linear(&self) -> bool {
        match self {
            Term::Linear { .. } => true,
            Term::Monomial { factors, .. } => factors.len() == 1 && factors[0].1 == 1,
            Term::Trig { .. } | Term::Product { .. } => false,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Term::Linear { var, coef } => coef * x[*var],
            Term::Monomial { coef, factors } => {
                factors.iter().fold(*coef, |acc, &(v, p)| acc * x[v].powi(p as i32))
            }
            Term::Trig {
                coef,
                mag,
                angle,
                shift,
                kind,
            } => {
                let (t, _, _) = kind.eval3(x[angle[0]] - x[angle[1]] + shift);
                coef * x[mag[0]] * x[mag[1]] * t
            }
            Term::Product { coef, lhs, rhs } => coef * lhs.value(x) * rhs.value(x),
        }
    }

    /// Local gradient, one entry per role.
    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Term::Linear { coef, .. } => out[0] = *coef,
            Term::Monomial { coef, factors } => {
                for (r, &(vr, pr)) in factors.iter().enumerate() {
                    let mut g = coef * pr as f64 * x[vr].powi(pr as i32 - 1);
                    for (s, &(vs, ps)) in factors.iter().enumerate() {
                        if s != r {
                            g *= x[vs].powi(ps as i32);
                        }
                    }
                    out[r] = g;
                }
            }
            Term::Trig {
                coef,
                mag,
                angle,
                shift,
                kind,
            } => {
                let (t, t1, _) = kind.eval3(x[angle[0]] - x[angle[1]] + shift);
                let (xa, xb) = (x[mag[0]], x[mag[1]]);
                out[0] = coef * xb * t;
                out[1] = coef * xa * t;
                out[2] = coef * xa * xb * t1;
                out[3] = -out[2];
            }
            Term::Product { coef, lhs, rhs } => {
                let roles = self.roles();
                let (lv, lg, _) = lhs.local(x, &roles, false);
                let (rv, rg, _) = rhs.local(x, &roles, false);
                for r in 0..roles.len() {
                    out[r] = coef * (lv * rg[r] + rv * lg[r]);
                }
            }
        }
    }

    /// Local Hessian as a dense row-major `roles × roles` matrix.
    pub fn hessian(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Term::Linear { .. } => out[0] = 0.0,
            Term::Monomial { coef, factors } => {
                let k = factors.len();
                for r in 0..k {
                    for s in 0..k {
                        let (vr, pr) = factors[r];
                        let (vs, ps) = factors[s];
                        let mut h = *coef;
                        if r == s {
                            if pr < 2 {
                                out[r * k + s] = 0.0;
                                continue;
                            }
                            h *= (pr * (pr - 1)) as f64 * x[vr].powi(pr as i32 - 2);
                        } else {
                            h *= (pr * ps) as f64
                                * x[vr].powi(pr as i32 - 1)
                                * x[vs].powi(ps as i32 - 1);
                        }
                        for (t, &(vt, pt)) in factors.iter().enumerate() {
                            if t != r && t != s {
                                h *= x[vt].powi(pt as i32);
                            }
                        }
                        out[r * k + s] = h;
                    }
                }
            }
            Term::Trig {
                coef,
                mag,
                angle,
                shift,
                kind,
            } => {
                let (t, t1, t2) = kind.eval3(x[angle[0]] - x[angle[1]] + shift);
                let (xa, xb) = (x[mag[0]], x[mag[1]]);
                let k = *coef;
                let sym = [
                    (0, 0, 0.0),
                    (0, 1, k * t),
                    (0, 2, k * xb * t1),
                    (0, 3, -k * xb * t1),
                    (1, 1, 0.0),
                    (1, 2, k * xa * t1),
                    (1, 3, -k * xa * t1),
                    (2, 2, k * xa * xb * t2),
                    (2, 3, -k * xa * xb * t2),
                    (3, 3, k * xa * xb * t2),
                ];
                for (r, s, v) in sym {
                    out[r * 4 + s] = v;
                    out[s * 4 + r] = v;
                }
            }
            Term::Product { coef, lhs, rhs } => {
                let roles = self.roles();
                let k = roles.len();
                let (lv, lg, lh) = lhs.local(x, &roles, true);
                let (rv, rg, rh) = rhs.local(x, &roles, true);
                for r in 0..k {
                    for s in 0..k {
                        let e = r * k + s;
                        out[e] = coef * (lg[r] * rg[s] + rg[r] * lg[s] + lv * rh[e] + rv * lh[e]);
                    }
                }
            }
        }
    }
}

/// `constant + Σ terms`
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Expr {
    pub constant: f64,
    pub terms: Vec<Term>,
}

impl Expr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Expr {
            constant: c,
            terms: Vec::new(),
        }
    }

    pub fn var(v: usize) -> Self {
        Expr::new().linear(v, 1.0)
    }

    pub fn add_const(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn linear(mut self, var: usize, coef: f64) -> Self {
        if coef != 0.0 {
            self.terms.push(Term::Linear { var, coef });
        }
        self
    }

    pub fn product(mut self, coef: f64, a: usize, b: usize) -> Self {
        if coef != 0.0 {
            self.terms.push(Term::monomial(coef, &[(a, 1), (b, 1)]));
        }
        self
    }

    pub fn square(self, coef: f64, a: usize) -> Self {
        self.product(coef, a, a)
    }

    pub fn monomial(mut self, coef: f64, factors: &[(usize, u32)]) -> Self {
        if coef != 0.0 {
            self.terms.push(Term::monomial(coef, factors));
        }
        self
    }

    pub fn trig(
        mut self,
        coef: f64,
        mag: [usize; 2],
        angle: [usize; 2],
        shift: f64,
        kind: TrigKind,
    ) -> Self {
        if coef != 0.0 {
            self.terms.push(Term::Trig {
                coef,
                mag,
                angle,
                shift,
                kind,
            });
        }
        self
    }

    /// Adds `coef * lhs * rhs` as a single factored term.
    pub fn product_of(mut self, coef: f64, lhs: Expr, rhs: Expr) -> Self {
        if coef != 0.0 {
            self.terms.push(Term::Product { coef, lhs, rhs });
        }
        self
    }

    /// Value, dense gradient and (optionally) dense Hessian over `roles`,
    /// which must be sorted and cover every variable of the expression.
    fn local(&self, x: &[f64], roles: &[usize], hessian: bool) -> (f64, Vec<f64>, Vec<f64>) {
        let k = roles.len();
        let mut g = vec![0.0; k];
        let mut h = if hessian { vec![0.0; k * k] } else { Vec::new() };
        for t in &self.terms {
            let tr = t.roles();
            let at: Vec<usize> = tr
                .iter()
                .map(|v| roles.binary_search(v).expect("role present"))
                .collect();
            let q = tr.len();
            let mut tg = vec![0.0; q];
            t.gradient(x, &mut tg);
            for a in 0..q {
                g[at[a]] += tg[a];
            }
            if hessian {
                let mut th = vec![0.0; q * q];
                t.hessian(x, &mut th);
                for a in 0..q {
                    for b in 0..q {
                        h[at[a] * k + at[b]] += th[a * q + b];
                    }
                }
            }
        }
        (self.value(x), g, h)
    }

    pub fn extend(mut self, other: Expr) -> Self {
        self.constant += other.constant;
        self.terms.extend(other.terms);
        self
    }

    pub fn scaled(mut self, k: f64) -> Self {
        self.constant *= k;
        for t in &mut self.terms {
            match t {
                Term::Linear { coef, .. }
                | Term::Monomial { coef, .. }
                | Term::Trig { coef, .. }
                | Term::Product { coef, .. } => *coef *= k,
            }
        }
        self
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|t| t.value(x)).sum::<f64>()
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        self.terms.iter().flat_map(|t| t.roles()).max()
    }

    /// Dense gradient accumulated into `out`.
    pub fn add_gradient(&self, x: &[f64], scale: f64, out: &mut [f64]) {
        let mut buf = [0.0; 8];
        for t in &self.terms {
            let roles = t.roles();
            let mut heap;
            let local: &mut [f64] = if roles.len() <= buf.len() {
                &mut buf[..roles.len()]
            } else {
                heap = vec![0.0; roles.len()];
                &mut heap
            };
            t.gradient(x, local);
            for (r, &v) in roles.iter().enumerate() {
                out[v] += scale * local[r];
            }
        }
    }

    pub fn is_linear(&self) -> bool {
        self.terms.iter().all(Term::is_linear)
    }
}
