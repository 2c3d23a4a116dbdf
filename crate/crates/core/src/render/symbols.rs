//! Built-in command → Unicode table.

use std::collections::HashMap;

use thiserror::Error;

#[rustfmt::skip]
const BUILTIN: &[(&str, &str)] = &[
    // Greek
    ("alpha", "α"), ("beta", "β"), ("gamma", "γ"), ("delta", "δ"), ("epsilon", "ϵ"),
    ("varepsilon", "ε"), ("zeta", "ζ"), ("eta", "η"), ("theta", "θ"), ("vartheta", "ϑ"),
    ("iota", "ι"), ("kappa", "κ"), ("varkappa", "ϰ"), ("lambda", "λ"), ("mu", "μ"),
    ("nu", "ν"), ("xi", "ξ"), ("omicron", "ο"), ("pi", "π"), ("varpi", "ϖ"), ("rho", "ρ"),
    ("varrho", "ϱ"), ("sigma", "σ"), ("varsigma", "ς"), ("tau", "τ"), ("upsilon", "υ"),
    ("phi", "ϕ"), ("varphi", "φ"), ("chi", "χ"), ("psi", "ψ"), ("omega", "ω"),
    ("digamma", "ϝ"), ("Gamma", "Γ"), ("Delta", "Δ"), ("Theta", "Θ"), ("Lambda", "Λ"),
    ("Xi", "Ξ"), ("Pi", "Π"), ("Sigma", "Σ"), ("Upsilon", "Υ"), ("Phi", "Φ"), ("Psi", "Ψ"),
    ("Omega", "Ω"), ("varGamma", "Γ"), ("varDelta", "Δ"), ("varLambda", "Λ"), ("varOmega", "Ω"),
    // relations
    ("leq", "≤"), ("le", "≤"), ("geq", "≥"), ("ge", "≥"), ("neq", "≠"), ("ne", "≠"),
    ("leqslant", "⩽"), ("geqslant", "⩾"), ("ll", "≪"), ("gg", "≫"), ("lll", "⋘"), ("ggg", "⋙"),
    ("equiv", "≡"), ("sim", "∼"), ("simeq", "≃"), ("approx", "≈"), ("cong", "≅"),
    ("propto", "∝"), ("prec", "≺"), ("succ", "≻"), ("preceq", "⪯"), ("succeq", "⪰"),
    ("preccurlyeq", "≼"), ("succcurlyeq", "≽"), ("subset", "⊂"), ("supset", "⊃"),
    ("subseteq", "⊆"), ("supseteq", "⊇"), ("subsetneq", "⊊"), ("supsetneq", "⊋"),
    ("nsubseteq", "⊈"), ("nsupseteq", "⊉"), ("Subset", "⋐"), ("Supset", "⋑"),
    ("sqsubset", "⊏"), ("sqsupset", "⊐"), ("sqsubseteq", "⊑"), ("sqsupseteq", "⊒"),
    ("in", "∈"), ("ni", "∋"), ("notin", "∉"), ("mid", "∣"), ("nmid", "∤"), ("parallel", "∥"),
    ("nparallel", "∦"), ("perp", "⊥"), ("models", "⊨"), ("vdash", "⊢"), ("dashv", "⊣"),
    ("vDash", "⊨"), ("Vdash", "⊩"), ("nvdash", "⊬"), ("asymp", "≍"), ("doteq", "≐"),
    ("triangleq", "≜"), ("coloneqq", "≔"), ("lhd", "◁"), ("rhd", "▷"), ("unlhd", "⊴"),
    ("unrhd", "⊵"), ("triangleleft", "◁"), ("triangleright", "▷"), ("trianglelefteq", "⊴"),
    ("trianglerighteq", "⊵"), ("nleq", "≰"), ("ngeq", "≱"), ("nless", "≮"), ("ngtr", "≯"),
    ("lneq", "⪇"), ("gneq", "⪈"), ("lesssim", "≲"), ("gtrsim", "≳"), ("lessgtr", "≶"),
    ("nsim", "≁"), ("ncong", "≇"), ("backsim", "∽"), ("eqsim", "≂"), ("between", "≬"),
    ("pitchfork", "⋔"), ("smile", "⌣"), ("frown", "⌢"), ("bowtie", "⋈"), ("Join", "⨝"),
    // binary operators
    ("times", "×"), ("div", "÷"), ("pm", "±"), ("mp", "∓"), ("cdot", "⋅"), ("cdotp", "·"),
    ("centerdot", "·"), ("ast", "∗"), ("star", "⋆"), ("circ", "∘"), ("bullet", "•"),
    ("oplus", "⊕"), ("ominus", "⊖"), ("otimes", "⊗"), ("oslash", "⊘"), ("odot", "⊙"),
    ("circledast", "⊛"), ("cap", "∩"), ("cup", "∪"), ("Cap", "⋒"), ("Cup", "⋓"),
    ("sqcap", "⊓"), ("sqcup", "⊔"), ("wedge", "∧"), ("land", "∧"), ("vee", "∨"), ("lor", "∨"),
    ("veebar", "⊻"), ("barwedge", "⊼"), ("setminus", "∖"), ("smallsetminus", "∖"),
    ("backslash", "\\"), ("wr", "≀"), ("uplus", "⊎"), ("amalg", "⨿"), ("ltimes", "⋉"),
    ("rtimes", "⋊"), ("boxplus", "⊞"), ("boxminus", "⊟"), ("boxtimes", "⊠"), ("boxdot", "⊡"),
    ("dotplus", "∔"), ("divideontimes", "⋇"), ("intercal", "⊺"), ("diamond", "⋄"),
    ("triangle", "△"), ("triangledown", "▽"), ("bigtriangleup", "△"), ("bigtriangledown", "▽"),
    ("multimap", "⊸"),
    // large operators
    ("sum", "∑"), ("prod", "∏"), ("coprod", "∐"), ("int", "∫"), ("iint", "∬"), ("iiint", "∭"),
    ("oint", "∮"), ("bigcap", "⋂"), ("bigcup", "⋃"), ("bigsqcup", "⨆"), ("bigvee", "⋁"),
    ("bigwedge", "⋀"), ("bigoplus", "⨁"), ("bigotimes", "⨂"), ("bigodot", "⨀"),
    ("biguplus", "⨄"),
    // named functions
    ("log", "log"), ("ln", "ln"), ("lg", "lg"), ("exp", "exp"), ("sin", "sin"), ("cos", "cos"),
    ("tan", "tan"), ("sec", "sec"), ("csc", "csc"), ("cot", "cot"), ("arcsin", "arcsin"),
    ("arccos", "arccos"), ("arctan", "arctan"), ("sinh", "sinh"), ("cosh", "cosh"),
    ("tanh", "tanh"), ("lim", "lim"), ("liminf", "lim inf"), ("limsup", "lim sup"),
    ("sup", "sup"), ("inf", "inf"), ("max", "max"), ("min", "min"), ("det", "det"),
    ("dim", "dim"), ("deg", "deg"), ("ker", "ker"), ("gcd", "gcd"), ("lcm", "lcm"),
    ("arg", "arg"), ("hom", "hom"), ("Pr", "Pr"), ("bmod", "mod"), ("mod", "mod"),
    // miscellaneous symbols
    ("infty", "∞"), ("emptyset", "∅"), ("varnothing", "∅"), ("nabla", "∇"), ("partial", "∂"),
    ("forall", "∀"), ("exists", "∃"), ("nexists", "∄"), ("neg", "¬"), ("lnot", "¬"),
    ("complement", "∁"), ("aleph", "ℵ"), ("beth", "ℶ"), ("gimel", "ℷ"), ("hbar", "ℏ"),
    ("hslash", "ℏ"), ("ell", "ℓ"), ("wp", "℘"), ("Re", "ℜ"), ("Im", "ℑ"), ("mho", "℧"),
    ("eth", "ð"), ("Bbbk", "𝕜"), ("top", "⊤"), ("bot", "⊥"), ("angle", "∠"), ("prime", "′"),
    ("surd", "√"), ("flat", "♭"), ("natural", "♮"), ("sharp", "♯"), ("clubsuit", "♣"),
    ("diamondsuit", "♢"), ("heartsuit", "♡"), ("spadesuit", "♠"), ("checkmark", "✓"),
    ("square", "□"), ("Box", "□"), ("blacksquare", "■"), ("Diamond", "◇"), ("lozenge", "◊"),
    ("therefore", "∴"), ("because", "∵"), ("imath", "ı"), ("jmath", "ȷ"),
    // dots
    ("ldots", "…"), ("dots", "…"), ("dotsc", "…"), ("dotsb", "⋯"), ("cdots", "⋯"),
    ("vdots", "⋮"), ("ddots", "⋱"), ("textellipsis", "…"),
    // arrows
    ("to", "→"), ("rightarrow", "→"), ("leftarrow", "←"), ("gets", "←"),
    ("leftrightarrow", "↔"), ("Rightarrow", "⇒"), ("Leftarrow", "⇐"), ("Leftrightarrow", "⇔"),
    ("iff", "⟺"), ("implies", "⟹"), ("impliedby", "⟸"), ("mapsto", "↦"), ("longmapsto", "⟼"),
    ("longrightarrow", "⟶"), ("longleftarrow", "⟵"), ("longleftrightarrow", "⟷"),
    ("Longrightarrow", "⟹"), ("Longleftarrow", "⟸"), ("Longleftrightarrow", "⟺"),
    ("uparrow", "↑"), ("downarrow", "↓"), ("updownarrow", "↕"), ("Uparrow", "⇑"),
    ("Downarrow", "⇓"), ("nearrow", "↗"), ("searrow", "↘"), ("swarrow", "↙"), ("nwarrow", "↖"),
    ("hookrightarrow", "↪"), ("hookleftarrow", "↩"), ("rightharpoonup", "⇀"),
    ("leftharpoonup", "↼"), ("rightleftharpoons", "⇌"), ("twoheadrightarrow", "↠"),
    ("rightsquigarrow", "⇝"), ("leadsto", "⇝"), ("nrightarrow", "↛"), ("nleftarrow", "↚"),
    ("leftrightarrows", "⇆"), ("circlearrowleft", "↺"), ("circlearrowright", "↻"),
    // delimiters
    ("langle", "⟨"), ("rangle", "⟩"), ("lceil", "⌈"), ("rceil", "⌉"), ("lfloor", "⌊"),
    ("rfloor", "⌋"), ("lvert", "|"), ("rvert", "|"), ("vert", "|"), ("lVert", "‖"),
    ("rVert", "‖"), ("Vert", "‖"), ("lbrace", "{"), ("rbrace", "}"), ("lbrack", "["),
    ("rbrack", "]"), ("colon", ":"),
    // text-mode symbols
    ("textendash", "–"), ("textemdash", "—"), ("textquoteleft", "‘"), ("textquoteright", "’"),
    ("textquotedblleft", "“"), ("textquotedblright", "”"), ("guillemotleft", "«"),
    ("guillemotright", "»"), ("textbullet", "•"), ("textasciitilde", "~"),
    ("textbackslash", "\\"), ("textbar", "|"), ("textless", "<"), ("textgreater", ">"),
    ("textregistered", "®"), ("texttrademark", "™"), ("textdegree", "°"), ("degree", "°"),
    ("textperiodcentered", "·"), ("textexclamdown", "¡"), ("textquestiondown", "¿"),
    ("textsection", "§"), ("S", "§"), ("textparagraph", "¶"), ("P", "¶"), ("dag", "†"),
    ("ddag", "‡"), ("dagger", "†"), ("ddagger", "‡"), ("textdagger", "†"),
    ("textdaggerdbl", "‡"), ("copyright", "©"), ("pounds", "£"), ("euro", "€"),
    ("LaTeX", "LaTeX"), ("TeX", "TeX"), ("ss", "ß"), ("SS", "SS"), ("o", "ø"), ("O", "Ø"),
    ("ae", "æ"), ("AE", "Æ"), ("oe", "œ"), ("OE", "Œ"), ("aa", "å"), ("AA", "Å"), ("l", "ł"),
    ("L", "Ł"), ("i", "ı"), ("j", "ȷ"),
    // spacing commands render as a plain space
    ("quad", " "), ("qquad", " "), ("enspace", " "), ("thinspace", " "), ("space", " "),
    ("medspace", " "), ("thickspace", " "),
];

#[derive(Debug, Error)]
pub enum SymbolTableError {
    #[error("symbol override file is not a JSON object of strings: {0}")]
    Json(#[from] serde_json::Error),
}

/// Command name (without backslash) → replacement text.
#[derive(Debug, Clone)]
pub struct SymbolTable {
    map: HashMap<String, String>,
}

impl Default for SymbolTable {
    fn default() -> Self {
        Self::builtin()
    }
}

impl SymbolTable {
    pub fn builtin() -> Self {
        Self {
            map: BUILTIN.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.map.get(name).map(String::as_str)
    }

    pub fn insert(&mut self, command: &str, replacement: impl Into<String>) {
        let name = command.strip_prefix('\\').unwrap_or(command);
        self.map.insert(name.to_string(), replacement.into());
    }

    /// Merges a `{"\\alpha": "α", ...}` JSON object over the current table.
    pub fn merge_json(&mut self, json: &str) -> Result<(), SymbolTableError> {
        let overrides: HashMap<String, String> = serde_json::from_str(json)?;
        let mut keys: Vec<_> = overrides.into_iter().collect();
        keys.sort();
        for (k, v) in keys {
            self.insert(&k, v);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_size_and_lookup() {
        let table = SymbolTable::builtin();
        assert!(table.len() >= 280, "table has {} entries", table.len());
        assert_eq!(table.get("alpha"), Some("α"));
        assert_eq!(table.get("leq"), Some("≤"));
        assert_eq!(table.get("nonexistent"), None);
    }

    #[test]
    fn no_multichar_whitespace_entries() {
        for (k, v) in BUILTIN {
            assert!(
                v.chars().count() == 1 || *v == v.trim(),
                "{k} maps to padded whitespace"
            );
        }
    }

    #[test]
    fn overrides_merge() {
        let mut table = SymbolTable::builtin();
        table.merge_json(r#"{"\\alpha": "a", "\\R": "ℝ"}"#).unwrap();
        assert_eq!(table.get("alpha"), Some("a"));
        assert_eq!(table.get("R"), Some("ℝ"));
        assert!(table.merge_json("[1,2]").is_err());
    }
}
