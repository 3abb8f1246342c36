use std::cmp::Ordering;

/// A power product `Π x_i^{e_i}` stored as sorted `(variable index, exponent)`
/// pairs with positive exponents. Ordered graded-lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Monomial(Vec<(u16, u16)>);

impl Monomial {
    pub fn one() -> Monomial {
        Monomial(Vec::new())
    }
    pub fn var(v: usize) -> Monomial {
        Monomial(vec![(v as u16, 1)])
    }
    pub fn from_exponents(pairs: &[(usize, u32)]) -> Monomial {
        let mut m = Monomial::one();
        for &(v, e) in pairs {
            for _ in 0..e {
                m = m.mul(&Monomial::var(v));
            }
        }
        m
    }
    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }
    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e as u32).sum()
    }
    pub fn exponent(&self, v: usize) -> u32 {
        self.0.iter().find(|&&(x, _)| x as usize == v).map(|&(_, e)| e as u32).unwrap_or(0)
    }
    pub fn factors(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.0.iter().map(|&(v, e)| (v as usize, e as u32))
    }
    /// The monomial with variable `v` removed, and the removed exponent.
    pub fn split(&self, v: usize) -> (Monomial, u32) {
        let mut rest = Vec::with_capacity(self.0.len());
        let mut e = 0;
        for &(x, k) in &self.0 {
            if x as usize == v {
                e = k as u32;
            } else {
                rest.push((x, k));
            }
        }
        (Monomial(rest), e)
    }
    pub fn mul(&self, o: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + o.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() || j < o.0.len() {
            if j == o.0.len() || (i < self.0.len() && self.0[i].0 < o.0[j].0) {
                out.push(self.0[i]);
                i += 1;
            } else if i == self.0.len() || o.0[j].0 < self.0[i].0 {
                out.push(o.0[j]);
                j += 1;
            } else {
                out.push((self.0[i].0, self.0[i].1 + o.0[j].1));
                i += 1;
                j += 1;
            }
        }
        Monomial(out)
    }
    /// True when every exponent is even, so the monomial is nonnegative everywhere.
    pub fn is_square(&self) -> bool {
        self.0.iter().all(|&(_, e)| e % 2 == 0)
    }
    pub fn vars(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|&(v, _)| v as usize)
    }

    /// Display form like `d*x^2`; the empty monomial prints as `1`.
    pub fn render(&self, names: &[String]) -> String {
        if self.0.is_empty() {
            return "1".into();
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|&(v, e)| {
                let n = names.get(v as usize).cloned().unwrap_or_else(|| format!("v{v}"));
                if e == 1 {
                    n
                } else {
                    format!("{n}^{e}")
                }
            })
            .collect();
        parts.join("*")
    }

    /// Identifier-safe form for LP variable names: `d.x.x` for `d*x^2`.
    pub fn ident(&self, names: &[String]) -> String {
        if self.0.is_empty() {
            return "1".into();
        }
        let mut parts = Vec::new();
        for &(v, e) in &self.0 {
            let n = names.get(v as usize).cloned().unwrap_or_else(|| format!("v{v}"));
            for _ in 0..e {
                parts.push(n.clone());
            }
        }
        parts.join(".")
    }

    /// All monomials over `vars` of degree at most `max_degree`, graded-lex ascending.
    pub fn all_up_to(vars: &[usize], max_degree: u32) -> Vec<Monomial> {
        let mut out = vec![Monomial::one()];
        let mut frontier = vec![(Monomial::one(), 0usize)];
        for _ in 0..max_degree {
            let mut next = Vec::new();
            for (m, start) in &frontier {
                for (k, &v) in vars.iter().enumerate().skip(*start) {
                    let nm = m.mul(&Monomial::var(v));
                    out.push(nm.clone());
                    next.push((nm, k));
                }
            }
            frontier = next;
        }
        out.sort();
        out
    }
}

impl Ord for Monomial {
    fn cmp(&self, o: &Self) -> Ordering {
        match self.degree().cmp(&o.degree()) {
            Ordering::Equal => {}
            other => return other,
        }
        // Lexicographic on dense exponent vectors, variable 0 most significant.
        let (mut i, mut j) = (0, 0);
        loop {
            match (self.0.get(i), o.0.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some(&(va, ea)), Some(&(vb, eb))) => {
                    if va < vb {
                        return Ordering::Greater;
                    }
                    if vb < va {
                        return Ordering::Less;
                    }
                    if ea != eb {
                        return ea.cmp(&eb);
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerates_templates() {
        let ms = Monomial::all_up_to(&[0, 1], 2);
        assert_eq!(ms.len(), 6);
        assert!(ms[0].is_one());
        assert_eq!(Monomial::all_up_to(&[0, 1, 2], 1).len(), 4);
        assert_eq!(Monomial::all_up_to(&[], 3).len(), 1);
    }

    #[test]
    fn graded_order() {
        let x = Monomial::var(0);
        let y = Monomial::var(1);
        assert!(x.mul(&y) > x);
        assert!(x > y);
        assert!(y.mul(&y) < x.mul(&x));
        assert_eq!(x.mul(&y).mul(&x).exponent(0), 2);
    }
}
