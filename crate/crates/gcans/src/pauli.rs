//! Pauli-string algebra and Hamiltonian representation.
//!
//! An observable is a weighted sum of Pauli strings,
//!
//! ```text
//!   A = Σ_k  c_k · P_k ,      c_k ∈ ℝ,
//! ```
//!
//! where each `P_k` is a tensor product of single-qubit operators from
//! {I, X, Y, Z}. The one-norm `Σ_k |c_k|` bounds every expectation value of
//! `A` and enters both the Lipschitz bound and the weighted-random sampling
//! estimator.
//!
//! Observables can be built programmatically ([`Observable::from_terms`],
//! [`Observable::tfim`]) or read from a plain-text file with one
//! `<coefficient> <letters>` term per line and `#` comments
//! ([`Observable::parse`]).
//!
//! ```
//! use gcans::Observable64;
//!
//! let h = Observable64::parse("1.0 ZZ\n1.5 XI\n1.5 IX").unwrap();
//! assert_eq!(h.n(), 2);
//! assert_eq!(h.len(), 3);
//! assert_eq!(h.one_norm(), 4.0);
//! ```

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::float::Float;

/// Single-qubit Pauli operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    fn to_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// A tensor product of single-qubit Paulis over a fixed qubit count.
///
/// `letters()[q]` acts on qubit `q`; qubit 0 is the least significant bit of
/// a computational-basis index and the leftmost letter in text form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    letters: Vec<Pauli>,
}

impl PauliString {
    /// Build from explicit letters. Errors on an empty sequence.
    pub fn new(letters: Vec<Pauli>) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::InvalidArgument(
                "Pauli string must act on at least one qubit".into(),
            ));
        }
        Ok(Self { letters })
    }

    /// Parse a text form such as `ZZIX`.
    pub fn parse(text: &str) -> Result<Self> {
        let letters = text
            .chars()
            .map(|c| {
                Pauli::from_char(c).ok_or_else(|| {
                    Error::InvalidArgument(format!("invalid Pauli letter '{c}' in \"{text}\""))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(letters)
    }

    /// Single non-identity letter `p` on `qubit` out of `n`.
    pub fn single(n: usize, qubit: usize, p: Pauli) -> Result<Self> {
        if qubit >= n {
            return Err(Error::InvalidArgument(format!(
                "qubit {qubit} out of range for {n} qubits"
            )));
        }
        let mut letters = vec![Pauli::I; n];
        letters[qubit] = p;
        Self::new(letters)
    }

    pub fn n(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    /// True when every letter is the identity.
    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&p| p == Pauli::I)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &p in &self.letters {
            write!(f, "{}", p.to_char())?;
        }
        Ok(())
    }
}

/// Boundary condition for the transverse-field Ising chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Open,
    Periodic,
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open" => Ok(Boundary::Open),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(Error::InvalidArgument(format!(
                "unknown boundary \"{other}\" (expected \"open\" or \"periodic\")"
            ))),
        }
    }
}

/// Weighted sum of Pauli strings on a common qubit register.
///
/// Construction merges duplicate strings, drops terms whose merged
/// coefficient is zero, and rejects mixed qubit counts, so a value of this
/// type always satisfies: all strings share `n`, no duplicates, no zero
/// coefficients, and `one_norm() > 0`. Term order follows first appearance.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable<T> {
    n: usize,
    terms: Vec<(T, PauliString)>,
}

impl<T: Float> Observable<T> {
    /// Merge and validate a term list.
    pub fn from_terms(terms: impl IntoIterator<Item = (T, PauliString)>) -> Result<Self> {
        let mut merged: Vec<(T, PauliString)> = Vec::new();
        let mut index: HashMap<PauliString, usize> = HashMap::new();
        let mut n = None;
        for (coeff, string) in terms {
            let expected = *n.get_or_insert(string.n());
            if string.n() != expected {
                return Err(Error::QubitMismatch {
                    expected,
                    got: string.n(),
                });
            }
            if !coeff.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "non-finite coefficient for term {string}"
                )));
            }
            match index.get(&string) {
                Some(&i) => merged[i].0 += coeff,
                None => {
                    index.insert(string.clone(), merged.len());
                    merged.push((coeff, string));
                }
            }
        }
        merged.retain(|(c, _)| *c != T::zero());
        let n = n.ok_or_else(|| Error::EmptyObservable("no terms given".into()))?;
        if merged.is_empty() {
            return Err(Error::EmptyObservable(
                "all terms cancelled during merging".into(),
            ));
        }
        Ok(Self { n, terms: merged })
    }

    /// Parse the plain-text Hamiltonian format: one `<coefficient> <letters>`
    /// term per line, `#` starts a comment, blank lines are skipped.
    ///
    /// Errors carry 1-based line numbers.
    pub fn parse(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let mut fields = content.split_whitespace();
            let coeff_text = fields.next().expect("non-empty line has a first field");
            let string_text = fields.next().ok_or_else(|| Error::Parse {
                line,
                message: "expected `<coefficient> <letters>`".into(),
            })?;
            if let Some(extra) = fields.next() {
                return Err(Error::Parse {
                    line,
                    message: format!("unexpected trailing field \"{extra}\""),
                });
            }
            let coeff: f64 = coeff_text.parse().map_err(|_| Error::Parse {
                line,
                message: format!("invalid coefficient \"{coeff_text}\""),
            })?;
            let coeff = T::from_f64(coeff).ok_or_else(|| Error::Parse {
                line,
                message: format!("coefficient \"{coeff_text}\" not representable"),
            })?;
            let string = PauliString::parse(string_text).map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?;
            if let Some((_, first)) = terms.first() {
                let first: &PauliString = first;
                if string.n() != first.n() {
                    return Err(Error::Parse {
                        line,
                        message: format!(
                            "string length {} differs from earlier length {}",
                            string.n(),
                            first.n()
                        ),
                    });
                }
            }
            terms.push((coeff, string));
        }
        if terms.is_empty() {
            return Err(Error::EmptyObservable("input has no terms".into()));
        }
        Self::from_terms(terms)
    }

    /// Serialize to the text format accepted by [`Observable::parse`].
    /// Coefficients carry 17 significant digits, enough to round-trip `f64`.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (coeff, string) in &self.terms {
            let c = coeff.to_f64().expect("coefficients are finite");
            out.push_str(&format!("{c:.16e} {string}\n"));
        }
        out
    }

    /// Transverse-field Ising chain `H = Σ_<i,j> Z_i Z_j + g Σ_i X_i` with
    /// unit couplings on nearest-neighbor pairs.
    ///
    /// Open boundaries give `n−1` ZZ terms, periodic boundaries `n` (the wrap
    /// pair coincides with the bulk pair for `n = 2` and merges). `g = 0`
    /// drops the field terms entirely.
    pub fn tfim(n: usize, g: T, boundary: Boundary) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "Ising chain needs at least 2 qubits, got {n}"
            )));
        }
        let mut terms = Vec::new();
        let pairs = match boundary {
            Boundary::Open => n - 1,
            Boundary::Periodic => n,
        };
        for i in 0..pairs {
            let mut letters = vec![Pauli::I; n];
            letters[i] = Pauli::Z;
            letters[(i + 1) % n] = Pauli::Z;
            terms.push((T::one(), PauliString::new(letters)?));
        }
        for i in 0..n {
            terms.push((g, PauliString::single(n, i, Pauli::X)?));
        }
        Self::from_terms(terms)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(T, PauliString)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Σ_k |c_k|`; bounds `|⟨A⟩|` for any normalized state.
    pub fn one_norm(&self) -> T {
        self.terms.iter().map(|(c, _)| c.abs()).sum()
    }

    /// Lipschitz bound `L = d · Σ_k |c_k|` on the gradient of a
    /// `d`-parameter expectation landscape.
    pub fn lipschitz_bound(&self, d: usize) -> T {
        T::from_usize(d).expect("parameter count fits the scalar") * self.one_norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn obs(text: &str) -> Observable<f64> {
        Observable::parse(text).unwrap()
    }

    #[test]
    fn parse_basic_and_one_norm() {
        let o = obs("1.0 ZZ\n1.5 XI\n1.5 IX");
        assert_eq!(o.n(), 2);
        assert_eq!(o.len(), 3);
        assert_relative_eq!(o.one_norm(), 4.0);
    }

    #[test]
    fn parse_merges_duplicates() {
        let o = obs("0.5 Z\n0.5 Z");
        assert_eq!(o.len(), 1);
        assert_relative_eq!(o.terms()[0].0, 1.0);
    }

    #[test]
    fn parse_rejects_inconsistent_lengths() {
        let err = Observable::<f64>::parse("1.0 ZZ\n1.0 Z").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn parse_reports_line_numbers_and_comments() {
        let o = obs("# a comment\n\n 0.5 ZZ # trailing\n-0.3 XX\n");
        assert_eq!(o.len(), 2);
        assert_relative_eq!(o.one_norm(), 0.8);

        let err = Observable::<f64>::parse("1.0 ZZ\nnope ZZ").unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                line: 2,
                message: "invalid coefficient \"nope\"".into()
            }
        );
        let err = Observable::<f64>::parse("1.0 ZQ").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = Observable::<f64>::parse("# only comments\n").unwrap_err();
        assert!(matches!(err, Error::EmptyObservable(_)));
    }

    #[test]
    fn cancelled_terms_are_rejected() {
        let err = Observable::<f64>::parse("0.5 Z\n-0.5 Z").unwrap_err();
        assert!(matches!(err, Error::EmptyObservable(_)));
    }

    #[test]
    fn identity_term_is_allowed() {
        let o = obs("2.0 II\n1.0 ZZ");
        assert_eq!(o.len(), 2);
        assert!(o.terms()[0].1.is_identity());
    }

    #[test]
    fn one_norm_examples() {
        let tfim = Observable::<f64>::tfim(4, 1.5, Boundary::Open).unwrap();
        assert_relative_eq!(tfim.one_norm(), 9.0);
        assert_relative_eq!(obs("-2.0 Z").one_norm(), 2.0);
        assert_relative_eq!(obs("0.5 ZZ\n-0.3 XX").one_norm(), 0.8);
    }

    #[test]
    fn tfim_structure() {
        let open = Observable::<f64>::tfim(4, 1.5, Boundary::Open).unwrap();
        assert_eq!(open.len(), 2 * 4 - 1);
        let zz = open.terms().iter().filter(|(c, _)| *c == 1.0).count();
        assert_eq!(zz, 3);

        let periodic = Observable::<f64>::tfim(4, 1.5, Boundary::Periodic).unwrap();
        assert_eq!(periodic.len(), 2 * 4);

        let classical = Observable::<f64>::tfim(2, 0.0, Boundary::Open).unwrap();
        assert_eq!(classical.len(), 1);
        assert_eq!(classical.terms()[0].1.to_string(), "ZZ");

        assert!(Observable::<f64>::tfim(1, 1.5, Boundary::Open).is_err());
    }

    #[test]
    fn tfim_two_site_ring_merges_wrap_pair() {
        // (0,1) and (1,0) are the same ZZ string on two sites.
        let ring = Observable::<f64>::tfim(2, 1.5, Boundary::Periodic).unwrap();
        assert_eq!(ring.len(), 3);
        assert_relative_eq!(ring.terms()[0].0, 2.0);
    }

    #[test]
    fn lipschitz_examples() {
        let tfim = Observable::<f64>::tfim(4, 1.5, Boundary::Open).unwrap();
        assert_relative_eq!(tfim.lipschitz_bound(48), 432.0);
        assert_relative_eq!(tfim.lipschitz_bound(1), tfim.one_norm());
        let o = obs("1.0 ZZ\n1.5 XI\n1.5 IX");
        assert_relative_eq!(o.lipschitz_bound(10), 40.0);
    }

    #[test]
    fn lipschitz_linear_in_d_and_scale() {
        let o = obs("0.25 XY\n-1.0 ZI");
        for d in [1usize, 3, 17] {
            assert_relative_eq!(o.lipschitz_bound(d), o.one_norm() * d as f64);
        }
        let scaled =
            Observable::from_terms(o.terms().iter().map(|(c, s)| (3.0 * c, s.clone()))).unwrap();
        assert_relative_eq!(scaled.lipschitz_bound(7), 3.0 * o.lipschitz_bound(7));
    }

    #[test]
    fn serialize_round_trips_exactly() {
        let o = obs("0.1 ZIX\n-2.75e-3 YYI\n0.30000000000000004 IIZ");
        let back = Observable::<f64>::parse(&o.serialize()).unwrap();
        assert_eq!(o, back);
    }

    fn arb_observable() -> impl Strategy<Value = Observable<f64>> {
        let letter = prop_oneof![
            Just(Pauli::I),
            Just(Pauli::X),
            Just(Pauli::Y),
            Just(Pauli::Z)
        ];
        let n = 1usize..4;
        n.prop_flat_map(move |n| {
            proptest::collection::vec(
                (
                    (-10.0f64..10.0).prop_filter("nonzero", |c| c.abs() > 1e-12),
                    proptest::collection::vec(letter.clone(), n..=n),
                ),
                1..6,
            )
            .prop_filter_map("merging may cancel everything", |terms| {
                Observable::from_terms(
                    terms
                        .into_iter()
                        .map(|(c, ls)| (c, PauliString::new(ls).unwrap())),
                )
                .ok()
            })
        })
    }

    proptest! {
        #[test]
        fn prop_parse_serialize_identity(o in arb_observable()) {
            let back = Observable::<f64>::parse(&o.serialize()).unwrap();
            prop_assert_eq!(o, back);
        }

        #[test]
        fn prop_tfim_term_counts(n in 2usize..8) {
            let open = Observable::<f64>::tfim(n, 1.5, Boundary::Open).unwrap();
            prop_assert_eq!(open.len(), 2 * n - 1);
            if n >= 3 {
                let periodic = Observable::<f64>::tfim(n, 1.5, Boundary::Periodic).unwrap();
                prop_assert_eq!(periodic.len(), 2 * n);
            }
        }
    }
}
