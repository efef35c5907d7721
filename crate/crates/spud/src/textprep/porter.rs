//! Porter stemmer, the original five-step 1980 algorithm.
//!
//! This is the 1980 formulation, not Porter2/Snowball: the rule tables below
//! are the original ones, without the later revisions (no `logi` rule, `abli`
//! still maps to `able`, and so on). Stemming is not idempotent in general.

/// Stems a lowercase ASCII word. Words shorter than three letters, or
/// containing anything other than lowercase ASCII letters, are returned
/// unchanged; no rule applies to them.
pub fn stem(word: &str) -> String {
    let bytes = word.as_bytes();
    if bytes.len() < 3 || !bytes.iter().all(u8::is_ascii_lowercase) {
        return word.to_string();
    }
    let mut w = bytes.to_vec();
    step1a(&mut w);
    step1b(&mut w);
    step1c(&mut w);
    step2(&mut w);
    step3(&mut w);
    step4(&mut w);
    step5a(&mut w);
    step5b(&mut w);
    String::from_utf8(w).expect("stemming never leaves ASCII")
}

/// A letter is a consonant unless it is a/e/i/o/u, or a `y` preceded by a
/// consonant. A leading `y` counts as a consonant.
fn is_cons(w: &[u8], i: usize) -> bool {
    match w[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => false,
        b'y' => i == 0 || !is_cons(w, i - 1),
        _ => true,
    }
}

/// The measure m in [C](VC)^m[V]: the number of vowel-to-consonant
/// transitions in the word.
fn measure(w: &[u8]) -> usize {
    let mut m = 0;
    let mut prev_vowel = false;
    for i in 0..w.len() {
        let vowel = !is_cons(w, i);
        if prev_vowel && !vowel {
            m += 1;
        }
        prev_vowel = vowel;
    }
    m
}

fn has_vowel(w: &[u8]) -> bool {
    (0..w.len()).any(|i| !is_cons(w, i))
}

fn ends_double_cons(w: &[u8]) -> bool {
    let n = w.len();
    n >= 2 && w[n - 1] == w[n - 2] && is_cons(w, n - 1)
}

/// Ends consonant-vowel-consonant where the final consonant is not w, x, y.
fn ends_cvc(w: &[u8]) -> bool {
    let n = w.len();
    n >= 3
        && is_cons(w, n - 3)
        && !is_cons(w, n - 2)
        && is_cons(w, n - 1)
        && !matches!(w[n - 1], b'w' | b'x' | b'y')
}

fn ends(w: &[u8], suffix: &str) -> bool {
    w.ends_with(suffix.as_bytes())
}

fn step1a(w: &mut Vec<u8>) {
    if ends(w, "sses") {
        w.truncate(w.len() - 2);
    } else if ends(w, "ies") {
        w.truncate(w.len() - 2);
    } else if ends(w, "ss") {
        // unchanged
    } else if ends(w, "s") {
        w.truncate(w.len() - 1);
    }
}

fn step1b(w: &mut Vec<u8>) {
    if ends(w, "eed") {
        if measure(&w[..w.len() - 3]) > 0 {
            w.truncate(w.len() - 1);
        }
        return;
    }
    let cut = if ends(w, "ed") && has_vowel(&w[..w.len() - 2]) {
        2
    } else if ends(w, "ing") && has_vowel(&w[..w.len() - 3]) {
        3
    } else {
        return;
    };
    w.truncate(w.len() - cut);
    // Cleanup after a successful ed/ing removal.
    if ends(w, "at") || ends(w, "bl") || ends(w, "iz") {
        w.push(b'e');
    } else if ends_double_cons(w) && !matches!(w[w.len() - 1], b'l' | b's' | b'z') {
        w.truncate(w.len() - 1);
    } else if measure(w) == 1 && ends_cvc(w) {
        w.push(b'e');
    }
}

fn step1c(w: &mut [u8]) {
    let n = w.len();
    if n >= 2 && w[n - 1] == b'y' && has_vowel(&w[..n - 1]) {
        w[n - 1] = b'i';
    }
}

/// Applies the first rule whose suffix matches; the replacement happens only
/// if the stem's measure exceeds `min_m`. No fallthrough to shorter suffixes
/// once a suffix matches, so overlapping suffixes are listed longest first.
fn apply_rules(w: &mut Vec<u8>, rules: &[(&str, &str)], min_m: usize) {
    for (suffix, replacement) in rules {
        if ends(w, suffix) {
            let j = w.len() - suffix.len();
            if measure(&w[..j]) > min_m {
                w.truncate(j);
                w.extend_from_slice(replacement.as_bytes());
            }
            return;
        }
    }
}

fn step2(w: &mut Vec<u8>) {
    const RULES: &[(&str, &str)] = &[
        ("ational", "ate"),
        ("ization", "ize"),
        ("iveness", "ive"),
        ("fulness", "ful"),
        ("ousness", "ous"),
        ("tional", "tion"),
        ("biliti", "ble"),
        ("entli", "ent"),
        ("ousli", "ous"),
        ("ation", "ate"),
        ("alism", "al"),
        ("aliti", "al"),
        ("iviti", "ive"),
        ("enci", "ence"),
        ("anci", "ance"),
        ("izer", "ize"),
        ("abli", "able"),
        ("alli", "al"),
        ("ator", "ate"),
        ("eli", "e"),
    ];
    apply_rules(w, RULES, 0);
}

fn step3(w: &mut Vec<u8>) {
    const RULES: &[(&str, &str)] = &[
        ("icate", "ic"),
        ("ative", ""),
        ("alize", "al"),
        ("iciti", "ic"),
        ("ical", "ic"),
        ("ness", ""),
        ("ful", ""),
    ];
    apply_rules(w, RULES, 0);
}

fn step4(w: &mut Vec<u8>) {
    const SUFFIXES: &[&str] = &[
        "ement", "ance", "ence", "able", "ible", "ment", "ant", "ent", "ion", "ism", "ate",
        "iti", "ous", "ive", "ize", "er", "ic", "al", "ou",
    ];
    for suffix in SUFFIXES {
        if ends(w, suffix) {
            let j = w.len() - suffix.len();
            let allowed = measure(&w[..j]) > 1
                && (*suffix != "ion" || (j > 0 && matches!(w[j - 1], b's' | b't')));
            if allowed {
                w.truncate(j);
            }
            return;
        }
    }
}

fn step5a(w: &mut Vec<u8>) {
    let n = w.len();
    if n >= 2 && w[n - 1] == b'e' {
        let m = measure(&w[..n - 1]);
        if m > 1 || (m == 1 && !ends_cvc(&w[..n - 1])) {
            w.truncate(n - 1);
        }
    }
}

fn step5b(w: &mut Vec<u8>) {
    if ends_double_cons(w) && w[w.len() - 1] == b'l' && measure(w) > 1 {
        w.truncate(w.len() - 1);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(pairs: &[(&str, &str)]) {
        for (input, expected) in pairs {
            assert_eq!(stem(input), *expected, "stem({:?})", input);
        }
    }

    #[test]
    fn plurals_and_past_participles() {
        check(&[
            ("caresses", "caress"),
            ("ponies", "poni"),
            ("ties", "ti"),
            ("caress", "caress"),
            ("cats", "cat"),
            ("feed", "feed"),
            ("agreed", "agre"),
            ("plastered", "plaster"),
            ("bled", "bled"),
            ("motoring", "motor"),
            ("sing", "sing"),
        ]);
    }

    #[test]
    fn ed_ing_cleanup() {
        check(&[
            ("conflated", "conflat"),
            ("troubled", "troubl"),
            ("sized", "size"),
            ("hopping", "hop"),
            ("tanned", "tan"),
            ("falling", "fall"),
            ("hissing", "hiss"),
            ("fizzed", "fizz"),
            ("failing", "fail"),
            ("filing", "file"),
        ]);
    }

    #[test]
    fn terminal_y() {
        check(&[("happy", "happi"), ("sky", "sky"), ("enjoy", "enjoi")]);
    }

    #[test]
    fn double_suffix_reduction() {
        check(&[
            ("relational", "relat"),
            ("conditional", "condit"),
            ("rational", "ration"),
            ("valenci", "valenc"),
            ("hesitanci", "hesit"),
            ("digitizer", "digit"),
            ("conformabli", "conform"),
            ("radicalli", "radic"),
            ("differentli", "differ"),
            ("vileli", "vile"),
            ("analogousli", "analog"),
            ("vietnamization", "vietnam"),
            ("predication", "predic"),
            ("operator", "oper"),
            ("feudalism", "feudal"),
            ("decisiveness", "decis"),
            ("hopefulness", "hope"),
            ("callousness", "callous"),
            ("formaliti", "formal"),
            ("sensitiviti", "sensit"),
            ("sensibiliti", "sensibl"),
        ]);
    }

    #[test]
    fn ic_full_ness_removal() {
        check(&[
            ("triplicate", "triplic"),
            ("formative", "form"),
            ("formalize", "formal"),
            ("electriciti", "electr"),
            ("electrical", "electr"),
            ("hopeful", "hope"),
            ("goodness", "good"),
        ]);
    }

    #[test]
    fn latinate_endings() {
        check(&[
            ("revival", "reviv"),
            ("allowance", "allow"),
            ("inference", "infer"),
            ("airliner", "airlin"),
            ("gyroscopic", "gyroscop"),
            ("adjustable", "adjust"),
            ("defensible", "defens"),
            ("irritant", "irrit"),
            ("replacement", "replac"),
            ("adjustment", "adjust"),
            ("dependent", "depend"),
            ("adoption", "adopt"),
            ("homologou", "homolog"),
            ("communism", "commun"),
            ("activate", "activ"),
            ("angulariti", "angular"),
            ("effective", "effect"),
            ("bowdlerize", "bowdler"),
        ]);
    }

    #[test]
    fn final_e_and_double_l() {
        check(&[
            ("probate", "probat"),
            ("rate", "rate"),
            ("cease", "ceas"),
            ("controll", "control"),
            ("roll", "roll"),
        ]);
    }

    #[test]
    fn multi_step_chains() {
        check(&[
            ("generalizations", "gener"),
            ("oscillators", "oscil"),
            ("pavements", "pavement"),
            ("pavement", "pavement"),
        ]);
    }

    #[test]
    fn short_and_non_alphabetic_inputs_unchanged() {
        check(&[
            ("", ""),
            ("a", "a"),
            ("as", "as"),
            ("2024", "2024"),
            ("b52", "b52"),
            ("Mixed", "Mixed"),
        ]);
    }
}
