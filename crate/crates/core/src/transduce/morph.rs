//! Verb lemmatization for do-support.

const IRREGULAR: &[(&str, &str)] = &[
    ("is", "be"),
    ("are", "be"),
    ("am", "be"),
    ("was", "be"),
    ("were", "be"),
    ("has", "have"),
    ("had", "have"),
    ("does", "do"),
    ("did", "do"),
    ("goes", "go"),
    ("went", "go"),
    ("saw", "see"),
    ("made", "make"),
    ("took", "take"),
    ("gave", "give"),
    ("came", "come"),
    ("became", "become"),
    ("began", "begin"),
    ("grew", "grow"),
    ("held", "hold"),
    ("led", "lead"),
    ("left", "leave"),
    ("lay", "lie"),
    ("lies", "lie"),
    ("found", "find"),
    ("fell", "fall"),
    ("felt", "feel"),
    ("got", "get"),
    ("kept", "keep"),
    ("knew", "know"),
    ("lost", "lose"),
    ("met", "meet"),
    ("ran", "run"),
    ("rose", "rise"),
    ("said", "say"),
    ("sent", "send"),
    ("showed", "show"),
    ("shed", "shed"),
    ("spread", "spread"),
    ("spent", "spend"),
    ("stood", "stand"),
    ("struck", "strike"),
    ("told", "tell"),
    ("thought", "think"),
    ("underwent", "undergo"),
    ("undergoes", "undergo"),
    ("wore", "wear"),
    ("built", "build"),
    ("bled", "bleed"),
    ("fed", "feed"),
    ("bound", "bind"),
    ("arose", "arise"),
    ("needed", "need"),
    ("exceeded", "exceed"),
    ("agreed", "agree"),
    ("freed", "free"),
];

/// Base form of a finite verb (`VBZ`, `VBD` or `VBP`).
pub fn base_form(word: &str, tag: &str) -> String {
    let lower = word.to_lowercase();
    if let Some((_, base)) = IRREGULAR.iter().find(|(w, _)| *w == lower) {
        return (*base).to_string();
    }
    match tag {
        "VBZ" => strip_s(&lower),
        "VBD" => strip_ed(&lower),
        _ => lower,
    }
}

fn strip_s(w: &str) -> String {
    if let Some(stem) = w.strip_suffix("ies") {
        if stem.len() > 1 {
            return format!("{stem}y");
        }
    }
    for suffix in ["sses", "shes", "ches", "xes", "zes", "oes"] {
        if w.ends_with(suffix) {
            return w[..w.len() - 2].to_string();
        }
    }
    match w.strip_suffix('s') {
        Some(stem) if !stem.is_empty() && !stem.ends_with('s') => stem.to_string(),
        _ => w.to_string(),
    }
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

fn strip_ed(w: &str) -> String {
    if let Some(stem) = w.strip_suffix("ied") {
        if !stem.is_empty() {
            return format!("{stem}y");
        }
    }
    let Some(stem) = w.strip_suffix("ed") else {
        return w.to_string();
    };
    let chars: Vec<char> = stem.chars().collect();
    let n = chars.len();
    if n < 2 {
        return w.to_string();
    }
    let last = chars[n - 1];
    let prev = chars[n - 2];
    if matches!(last, 'e' | 'u') {
        return format!("{stem}e");
    }
    // doubled final consonant: "stopped", "occurred"
    if last == prev && !is_vowel(last) && !matches!(last, 'l' | 's' | 'z' | 'f') {
        return chars[..n - 1].iter().collect();
    }
    // vowel before the final vowel-consonant pair ("treat", "join"); the "u" of "qu" counts as a consonant
    let long_vowel = n > 2 && is_vowel(chars[n - 3]) && !(chars[n - 3] == 'u' && n > 3 && chars[n - 4] == 'q');
    let needs_e = match last {
        'v' | 'c' | 'g' => true,
        'z' => prev != 'z',
        's' => prev != 's',
        'l' => !is_vowel(prev) && prev != 'l',
        't' => matches!(prev, 'a' | 'u') && !long_vowel,
        'd' | 'm' => is_vowel(prev) && n > 2 && !long_vowel,
        'n' => prev == 'i' && !long_vowel,
        'r' => matches!(prev, 'u' | 'i' | 'a') && n > 2 && !long_vowel,
        _ => false,
    };
    if needs_e {
        format!("{stem}e")
    } else {
        stem.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn present_tense() {
        for (w, b) in [
            ("shows", "show"),
            ("contains", "contain"),
            ("reveals", "reveal"),
            ("consists", "consist"),
            ("causes", "cause"),
            ("increases", "increase"),
            ("carries", "carry"),
            ("reaches", "reach"),
            ("goes", "go"),
            ("has", "have"),
            ("Shows", "show"),
        ] {
            assert_eq!(base_form(w, "VBZ"), b, "{w}");
        }
        assert_eq!(base_form("show", "VBP"), "show");
    }

    #[test]
    fn past_tense() {
        for (w, b) in [
            ("showed", "show"),
            ("formed", "form"),
            ("contained", "contain"),
            ("revealed", "reveal"),
            ("demonstrated", "demonstrate"),
            ("produced", "produce"),
            ("involved", "involve"),
            ("caused", "cause"),
            ("characterized", "characterize"),
            ("enlarged", "enlarge"),
            ("stopped", "stop"),
            ("occurred", "occur"),
            ("filled", "fill"),
            ("pressed", "press"),
            ("carried", "carry"),
            ("resembled", "resemble"),
            ("required", "require"),
            ("measured", "measure"),
            ("compared", "compare"),
            ("appeared", "appear"),
            ("provided", "provide"),
            ("included", "include"),
            ("extended", "extend"),
            ("combined", "combine"),
            ("stained", "stain"),
            ("joined", "join"),
            ("assumed", "assume"),
            ("seemed", "seem"),
            ("distributed", "distribute"),
            ("continued", "continue"),
            ("infiltrated", "infiltrate"),
            ("rooted", "root"),
            ("needed", "need"),
            ("arose", "arise"),
        ] {
            assert_eq!(base_form(w, "VBD"), b, "{w}");
        }
    }
}
