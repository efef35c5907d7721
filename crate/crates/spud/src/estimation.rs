//! Parameter estimation for the Polya urn models: the digamma function, the
//! Newton fixed point for the collection concentration m_c, the mu_prime
//! composition, and the closed-form per-document estimates.

use thiserror::Error;

use crate::index::{DocStats, InvertedIndex};

pub const DEFAULT_INIT: f64 = 200.0;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: u32 = 100;

#[derive(Debug, Error)]
pub enum EstimationError {
    #[error("digamma domain error: x={0} (requires x > 0)")]
    DigammaDomain(f64),
    #[error("omega={0} out of range: requires 0 < omega < 1")]
    OmegaDomain(f64),
    #[error("m_c={0} out of range: requires a positive finite value")]
    McDomain(f64),
    #[error("init={0} out of range: requires a positive finite value")]
    InitDomain(f64),
    #[error("cannot estimate from an index with no non-empty documents")]
    NoDocuments,
    #[error(
        "iteration diverged at step {iterations}: update produced {bad} from m={last}"
    )]
    Diverged { iterations: u32, bad: f64, last: f64 },
    #[error("document {doc_id} is empty; document-side estimates require tokens")]
    EmptyDocument { doc_id: String },
}

/// Result of the collection-level concentration estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub m_c: f64,
    pub iterations: u32,
    pub converged: bool,
    /// Relative change |m_new − m| / m at the last completed update.
    pub residual: f64,
    /// True when every non-empty document holds exactly one token. The
    /// update equation then holds identically for every m, so the estimate
    /// merely echoes the initializer and carries no information.
    pub uninformative: bool,
}

/// A smoothing configuration tying the interpolation weight omega and the
/// collection concentration together with the mass they imply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingHyper {
    pub omega: f64,
    pub m_c: f64,
    pub mu_prime: f64,
}

impl SmoothingHyper {
    pub fn new(omega: f64, m_c: f64) -> Result<Self, EstimationError> {
        Ok(SmoothingHyper { omega, m_c, mu_prime: derive_mu_prime(omega, m_c)? })
    }
}

/// Digamma (logarithmic derivative of the gamma function), accurate to
/// 1e-10 absolute on [1e-3, 1e9]: the argument is shifted up to at least 6
/// by the recurrence psi(x) = psi(x+1) − 1/x, then the asymptotic expansion
/// in inverse even powers is evaluated.
pub fn digamma(x: f64) -> Result<f64, EstimationError> {
    if !(x > 0.0) {
        return Err(EstimationError::DigammaDomain(x));
    }
    Ok(digamma_unchecked(x))
}

fn digamma_unchecked(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 6.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = x.ln()
        - 0.5 * inv
        - inv2
            * (1.0 / 12.0
                - inv2
                    * (1.0 / 120.0
                        - inv2
                            * (1.0 / 252.0
                                - inv2
                                    * (1.0 / 240.0
                                        - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0))))));
    acc + series
}

/// Estimates the collection concentration m_c by iterating
/// m ← Σ_j |d_vec_j| / (Σ_j psi(|d_j| + m) − n·psi(m)) over the non-empty
/// documents until the relative change drops below `tol` or `max_iter`
/// updates have run. Reasonable defaults are init=200, tol=1e-8,
/// max_iter=100; convergence typically takes well under twenty updates.
pub fn estimate_mc(
    idx: &InvertedIndex,
    init: f64,
    tol: f64,
    max_iter: u32,
) -> Result<McEstimate, EstimationError> {
    if !(init > 0.0 && init.is_finite()) {
        return Err(EstimationError::InitDomain(init));
    }
    let mut lengths: Vec<f64> = Vec::new();
    let mut sum_vec = 0.0f64;
    for (_, stats) in idx.docs() {
        if stats.length_tokens > 0 {
            lengths.push(stats.length_tokens as f64);
            sum_vec += stats.length_types as f64;
        }
    }
    if lengths.is_empty() {
        return Err(EstimationError::NoDocuments);
    }
    let n = lengths.len() as f64;
    let uninformative = lengths.iter().all(|&l| l == 1.0);

    let mut m = init;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let mut denom = 0.0f64;
        for &l in &lengths {
            denom += digamma_unchecked(l + m);
        }
        denom -= n * digamma_unchecked(m);
        let next = sum_vec / denom;
        if !(next > 0.0 && next.is_finite()) {
            return Err(EstimationError::Diverged { iterations: it, bad: next, last: m });
        }
        residual = (next - m).abs() / m;
        m = next;
        if residual < tol {
            return Ok(McEstimate { m_c: m, iterations: it, converged: true, residual, uninformative });
        }
    }
    Ok(McEstimate { m_c: m, iterations: max_iter, converged: false, residual, uninformative })
}

/// Convenience wrapper running [`estimate_mc`] at the default settings.
pub fn estimate_mc_default(idx: &InvertedIndex) -> Result<McEstimate, EstimationError> {
    estimate_mc(idx, DEFAULT_INIT, DEFAULT_TOL, DEFAULT_MAX_ITER)
}

/// Computes mu_prime = (omega / (1 − omega)) · m_c.
///
/// When omega carries an exact short decimal (the common case: a weight
/// someone typed, like 0.8), the odds omega/(1−omega) are reconstructed as a
/// reduced integer ratio from that decimal before touching floating point,
/// so the result equals what a reader would compute by hand — e.g.
/// omega=0.8 gives exactly 4·m_c rather than 4.0000000000000009·m_c, the
/// artifact of rounding 0.8 to binary. Weights with no short decimal fall
/// back to the plain floating-point quotient.
pub fn derive_mu_prime(omega: f64, m_c: f64) -> Result<f64, EstimationError> {
    if !(omega > 0.0 && omega < 1.0) {
        return Err(EstimationError::OmegaDomain(omega));
    }
    if !(m_c > 0.0 && m_c.is_finite()) {
        return Err(EstimationError::McDomain(m_c));
    }
    if let Some((num, den)) = decimal_odds(&format!("{}", omega)) {
        return Ok((num as f64 * m_c) / den as f64);
    }
    Ok(omega / (1.0 - omega) * m_c)
}

/// Parses the shortest round-trip decimal of a float in (0,1) as p/10^k and
/// returns the reduced ratio p : (10^k − p), or None when the exponent
/// overflows the integer reconstruction.
fn decimal_odds(text: &str) -> Option<(u128, u128)> {
    let mut digits = String::new();
    let mut frac_len: i32 = 0;
    let mut exponent: i32 = 0;
    let mut in_frac = false;
    let mut rest = text;
    if let Some(pos) = rest.find(['e', 'E']) {
        exponent = rest[pos + 1..].parse::<i32>().ok()?;
        rest = &rest[..pos];
    }
    for ch in rest.chars() {
        match ch {
            '0'..='9' => {
                digits.push(ch);
                if in_frac {
                    frac_len += 1;
                }
            }
            '.' => in_frac = true,
            _ => return None,
        }
    }
    // Value is digits · 10^(exponent − frac_len); we need it as p / 10^k.
    let k = frac_len.checked_sub(exponent)?;
    if !(0..=38).contains(&k) {
        return None;
    }
    let p: u128 = digits.parse().ok()?;
    let pow: u128 = 10u128.checked_pow(k as u32)?;
    if p == 0 || p >= pow {
        return None;
    }
    let q = pow - p;
    let g = gcd(p, q);
    Some((p / g, q / g))
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

/// Closed-form per-document estimates: the document concentration m_d is the
/// count of distinct terms, and the interpolation weight lambda is the
/// distinct-to-total token ratio |d_vec| / |d|, always in (0, 1].
pub fn doc_side_estimates(d: &DocStats) -> Result<(f64, f64), EstimationError> {
    if d.length_tokens == 0 {
        return Err(EstimationError::EmptyDocument { doc_id: d.doc_id.clone() });
    }
    let m_d = d.length_types as f64;
    let lambda = d.length_types as f64 / d.length_tokens as f64;
    Ok((m_d, lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::{build_index, DocumentRecord, IndexError};
    use crate::textprep::TokenPipelineConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    const EULER: f64 = 0.5772156649015328606065120900824024310421593359399235988;

    fn plain_cfg() -> TokenPipelineConfig {
        TokenPipelineConfig { lowercase: true, stopword_list: BTreeSet::new(), stem: false }
    }

    fn doc(id: &str, text: &str) -> Result<DocumentRecord, IndexError> {
        Ok(DocumentRecord { id: id.to_string(), text: text.to_string() })
    }

    /// Independent high-precision digamma: 5000 explicit series terms plus a
    /// tail correction from the Euler–Maclaurin expansion of the remainder.
    fn digamma_oracle(x: f64) -> f64 {
        let n = 5000.0f64;
        let mut sum = 0.0;
        for k in (0..5000).rev() {
            let kf = k as f64;
            sum += 1.0 / (kf + 1.0) - 1.0 / (kf + x);
        }
        let f = |t: f64| 1.0 / (t + 1.0) - 1.0 / (t + x);
        let fp = |t: f64| -1.0 / ((t + 1.0) * (t + 1.0)) + 1.0 / ((t + x) * (t + x));
        let fppp = |t: f64| -6.0 / (t + 1.0).powi(4) + 6.0 / (t + x).powi(4);
        let tail = ((n + x) / (n + 1.0)).ln() + f(n) / 2.0 - fp(n) / 12.0 + fppp(n) / 720.0;
        -EULER + sum + tail
    }

    /// Test-local log-gamma (Lanczos, g=7) for the grid-search oracle.
    fn ln_gamma(x: f64) -> f64 {
        const COEFFS: [f64; 8] = [
            676.5203681218851,
            -1259.1392167224028,
            771.32342877765313,
            -176.61502916214059,
            12.507343278686905,
            -0.13857109526572012,
            9.9843695780195716e-6,
            1.5056327351493116e-7,
        ];
        let z = x - 1.0;
        let mut acc = 0.99999999999980993;
        for (i, c) in COEFFS.iter().enumerate() {
            acc += c / (z + i as f64 + 1.0);
        }
        let t = z + 7.5;
        0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
    }

    #[test]
    fn digamma_matches_classical_values() {
        assert!((digamma(1.0).unwrap() + EULER).abs() < 1e-12);
        assert!((digamma(0.5).unwrap() - (-EULER - 2.0 * 2.0f64.ln())).abs() < 1e-10);
        assert!((digamma(2.0).unwrap() - (1.0 - EULER)).abs() < 1e-12);
    }

    #[test]
    fn digamma_rejects_nonpositive_arguments() {
        assert!(matches!(digamma(0.0), Err(EstimationError::DigammaDomain(_))));
        assert!(matches!(digamma(-3.5), Err(EstimationError::DigammaDomain(_))));
        assert!(matches!(digamma(f64::NAN), Err(EstimationError::DigammaDomain(_))));
    }

    #[test]
    fn digamma_satisfies_the_recurrence_on_a_log_grid() {
        for i in 0..=120 {
            let x = 10f64.powf(-3.0 + 12.0 * i as f64 / 120.0);
            let lhs = digamma(x + 1.0).unwrap() - digamma(x).unwrap();
            assert!(
                (lhs - 1.0 / x).abs() <= 1e-10 * (1.0 / x).max(1.0),
                "recurrence fails at x={}",
                x
            );
        }
    }

    #[test]
    fn digamma_matches_series_oracle_on_a_log_grid() {
        for i in 0..=240 {
            let x = 10f64.powf(-3.0 + 12.0 * i as f64 / 240.0);
            let got = digamma(x).unwrap();
            let want = digamma_oracle(x);
            assert!(
                (got - want).abs() <= 1e-10,
                "x={} got={} oracle={} diff={:e}",
                x,
                got,
                want,
                got - want
            );
        }
    }

    #[test]
    fn single_token_documents_are_flagged_uninformative() {
        let idx =
            build_index(vec![doc("a", "x"), doc("b", "y"), doc("c", "x")], &plain_cfg()).unwrap();
        let est = estimate_mc(&idx, 200.0, 1e-8, 100).unwrap();
        assert!(est.converged);
        assert!(est.uninformative);
        assert!((est.m_c - 200.0).abs() / 200.0 < 1e-8);
        assert_eq!(est.iterations, 1);
    }

    fn bursty_corpus(n_docs: usize, seed: u64) -> InvertedIndex {
        // Polya-urn sampling with a known concentration: each next token
        // repeats an already-drawn one with probability i/(m+i), otherwise
        // draws fresh from a uniform background over the vocabulary.
        let true_m = 50.0;
        let vocab: Vec<String> = (0..2000).map(|i| format!("w{:04}", i)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let docs: Vec<Result<DocumentRecord, IndexError>> = (0..n_docs)
            .map(|j| {
                let len = 100 + (j % 7) * 25;
                let mut tokens: Vec<usize> = Vec::with_capacity(len);
                for i in 0..len {
                    let reuse = rng.gen_range(0.0..1.0) < i as f64 / (true_m + i as f64);
                    if reuse {
                        let pick = tokens[rng.gen_range(0..tokens.len())];
                        tokens.push(pick);
                    } else {
                        tokens.push(rng.gen_range(0..vocab.len()));
                    }
                }
                let text =
                    tokens.iter().map(|&t| vocab[t].as_str()).collect::<Vec<_>>().join(" ");
                doc(&format!("d{:03}", j), &text)
            })
            .collect();
        build_index(docs, &plain_cfg()).unwrap()
    }

    #[test]
    fn fixed_point_satisfies_the_stationarity_equation() {
        let idx = bursty_corpus(50, 7);
        let est = estimate_mc(&idx, 200.0, 1e-8, 100).unwrap();
        assert!(est.converged, "did not converge: {:?}", est);
        assert!(est.iterations <= 100);
        assert!(!est.uninformative);

        let m = est.m_c;
        let mut denom = 0.0;
        let mut sum_vec = 0.0;
        let mut n = 0.0;
        for (_, stats) in idx.docs() {
            denom += digamma(stats.length_tokens as f64 + m).unwrap();
            sum_vec += stats.length_types as f64;
            n += 1.0;
        }
        denom -= n * digamma(m).unwrap();
        let update = sum_vec / denom;
        assert!(
            (update - m).abs() / m < 1e-6,
            "stationarity residual too large: m={} update={}",
            m,
            update
        );
        // The generator used concentration 50; the estimate should land in
        // its neighbourhood (deterministic under the fixed seed).
        assert!(est.m_c > 25.0 && est.m_c < 100.0, "m_c={}", est.m_c);
    }

    #[test]
    fn iterates_are_monotone_and_inits_agree() {
        let idx = bursty_corpus(40, 11);
        let avg_len = idx.stats().avg_length_tokens;
        let final_from: Vec<f64> = [10.0, 200.0, 10.0 * avg_len]
            .iter()
            .map(|&init| {
                // tol=0 never triggers, so max_iter=k exposes the k-th iterate.
                let mut prev = init;
                let mut direction: Option<bool> = None;
                for k in 1..=15 {
                    let m_k = estimate_mc(&idx, init, 0.0, k).unwrap().m_c;
                    if m_k != prev {
                        let increasing = m_k > prev;
                        match direction {
                            None => direction = Some(increasing),
                            Some(d) => assert_eq!(
                                d, increasing,
                                "iterate direction flipped from init={}",
                                init
                            ),
                        }
                    }
                    prev = m_k;
                }
                estimate_mc(&idx, init, 1e-8, 100).unwrap().m_c
            })
            .collect();
        for pair in final_from.windows(2) {
            assert!(
                (pair[0] - pair[1]).abs() / pair[0] < 1e-6,
                "fixed points disagree: {:?}",
                final_from
            );
        }
    }

    #[test]
    fn fixed_point_matches_grid_search_of_the_likelihood() {
        let idx = bursty_corpus(50, 13);
        let est = estimate_mc(&idx, 200.0, 1e-8, 100).unwrap();
        assert!(est.converged);

        let lengths: Vec<f64> =
            idx.docs().map(|(_, s)| s.length_tokens as f64).collect();
        let sum_vec: f64 = idx.docs().map(|(_, s)| s.length_types as f64).sum();
        let objective = |m: f64| {
            let mut ll = sum_vec * m.ln();
            for &l in &lengths {
                ll -= ln_gamma(m + l) - ln_gamma(m);
            }
            ll
        };
        // Coarse grid over (0, 10·avg|d|], then two refinements around the best.
        let mut lo = 1e-6;
        let mut hi = 10.0 * idx.stats().avg_length_tokens;
        let mut best = lo;
        for _ in 0..3 {
            let steps = 2000;
            let mut best_val = f64::NEG_INFINITY;
            for i in 0..=steps {
                let m = lo + (hi - lo) * i as f64 / steps as f64;
                if m <= 0.0 {
                    continue;
                }
                let v = objective(m);
                if v > best_val {
                    best_val = v;
                    best = m;
                }
            }
            let width = (hi - lo) / steps as f64;
            lo = (best - 4.0 * width).max(1e-9);
            hi = best + 4.0 * width;
        }
        assert!(
            (est.m_c - best).abs() / best < 0.01,
            "fixed point {} vs grid maximizer {}",
            est.m_c,
            best
        );
    }

    #[test]
    fn mu_prime_reconstructs_decimal_odds_exactly() {
        assert_eq!(derive_mu_prime(0.8, 258.0).unwrap(), 4.0 * 258.0);
        assert_eq!(derive_mu_prime(0.8, 100.0).unwrap(), 400.0);
        assert_eq!(derive_mu_prime(0.5, 137.25).unwrap(), 137.25);
        assert_eq!(derive_mu_prime(0.75, 8.0).unwrap(), 24.0);
        assert_eq!(derive_mu_prime(0.25, 9.0).unwrap(), 3.0);
        // Plain-quotient fallback agrees to rounding for an awkward weight.
        let omega = 1.0 / 3.0;
        let got = derive_mu_prime(omega, 10.0).unwrap();
        assert!((got - omega / (1.0 - omega) * 10.0).abs() < 1e-12);
    }

    #[test]
    fn mu_prime_rejects_degenerate_weights() {
        assert!(matches!(derive_mu_prime(0.0, 10.0), Err(EstimationError::OmegaDomain(_))));
        assert!(matches!(derive_mu_prime(1.0, 10.0), Err(EstimationError::OmegaDomain(_))));
        assert!(matches!(derive_mu_prime(-0.2, 10.0), Err(EstimationError::OmegaDomain(_))));
        assert!(matches!(derive_mu_prime(1.5, 10.0), Err(EstimationError::OmegaDomain(_))));
        assert!(matches!(derive_mu_prime(0.5, 0.0), Err(EstimationError::McDomain(_))));
    }

    #[test]
    fn mu_prime_is_linear_in_mc_and_increasing_in_omega() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let omega = rng.gen_range(0.01..0.99);
            let m: f64 = rng.gen_range(0.1..1e4);
            let one = derive_mu_prime(omega, m).unwrap();
            let twice = derive_mu_prime(omega, 2.0 * m).unwrap();
            assert_eq!(twice, 2.0 * one, "doubling m_c must exactly double mu_prime");
        }
        let mut prev = 0.0;
        for i in 1..100 {
            let omega = i as f64 / 100.0;
            let v = derive_mu_prime(omega, 50.0).unwrap();
            assert!(v > prev, "mu_prime not increasing at omega={}", omega);
            prev = v;
        }
    }

    #[test]
    fn smoothing_hyper_keeps_the_composition_invariant() {
        let h = SmoothingHyper::new(0.8, 258.0).unwrap();
        assert_eq!(h.mu_prime, 1032.0);
        let rel = (h.mu_prime - h.omega / (1.0 - h.omega) * h.m_c).abs() / h.mu_prime;
        assert!(rel < 1e-12);
    }

    #[test]
    fn document_side_estimates_follow_the_counts() {
        let idx = build_index(
            vec![
                doc("d1", "t1 t1 t1 t1 t1 t1 t1 t1 t2 t2"),
                doc("d2", "a b c d"),
                doc("d3", "p p q q r s t u v w"),
            ],
            &plain_cfg(),
        )
        .unwrap();
        let d1 = idx.doc(idx.doc_ordinal("d1").unwrap());
        assert_eq!(doc_side_estimates(d1).unwrap(), (2.0, 0.2));
        let d2 = idx.doc(idx.doc_ordinal("d2").unwrap());
        assert_eq!(doc_side_estimates(d2).unwrap(), (4.0, 1.0));
        let d3 = idx.doc(idx.doc_ordinal("d3").unwrap());
        assert_eq!(doc_side_estimates(d3).unwrap(), (8.0, 0.8));

        let empty = DocStats { doc_id: "e".to_string(), length_tokens: 0, length_types: 0 };
        assert!(matches!(
            doc_side_estimates(&empty),
            Err(EstimationError::EmptyDocument { .. })
        ));
    }

    #[test]
    fn estimation_rejects_bad_inputs() {
        let idx = bursty_corpus(5, 1);
        assert!(matches!(
            estimate_mc(&idx, 0.0, 1e-8, 100),
            Err(EstimationError::InitDomain(_))
        ));
        assert!(matches!(
            estimate_mc(&idx, f64::NAN, 1e-8, 100),
            Err(EstimationError::InitDomain(_))
        ));
    }
}
