//! Constant pools that parameterize the format grammar.
//!
//! A format's separators, spaces, casing functions, and enumeration item
//! renderers are drawn from user-configurable pools. The defaults below are
//! the values observed in human-written prompt formats.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Casing transforms applied to descriptor strings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Casing {
    Identity,
    Title,
    Upper,
    Lower,
}

impl Casing {
    pub fn apply(self, s: &str) -> String {
        match self {
            Casing::Identity => s.to_string(),
            Casing::Upper => s.to_uppercase(),
            Casing::Lower => s.to_lowercase(),
            Casing::Title => title_case(s),
        }
    }
}

/// `str.title()` semantics: each alphabetic run starts uppercase, rest lowercase.
fn title_case(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut prev_alpha = false;
    for ch in s.chars() {
        if ch.is_alphabetic() {
            if prev_alpha {
                out.extend(ch.to_lowercase());
            } else {
                out.extend(ch.to_uppercase());
            }
            prev_alpha = true;
        } else {
            out.push(ch);
            prev_alpha = false;
        }
    }
    out
}

/// Wrappers applied around a rendered enumeration label, e.g. `(A)` or `[A]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ItemWrapper {
    #[serde(rename = "(x)")]
    Paren,
    #[serde(rename = "x.")]
    Dot,
    #[serde(rename = "x)")]
    CloseParen,
    #[serde(rename = "x )")]
    SpaceCloseParen,
    #[serde(rename = "[x]")]
    Bracket,
    #[serde(rename = "<x>")]
    Angle,
}

impl ItemWrapper {
    pub fn apply(self, label: &str) -> String {
        match self {
            ItemWrapper::Paren => format!("({label})"),
            ItemWrapper::Dot => format!("{label}."),
            ItemWrapper::CloseParen => format!("{label})"),
            ItemWrapper::SpaceCloseParen => format!("{label} )"),
            ItemWrapper::Bracket => format!("[{label}]"),
            ItemWrapper::Angle => format!("<{label}>"),
        }
    }
}

/// Numbering styles for enumeration items. Items are 0-indexed internally and
/// rendered starting from "1" / "A" / "i" / "Ⅰ".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ItemNumbering {
    #[serde(rename = "arabic-from-1")]
    Arabic,
    #[serde(rename = "uppercase-letter")]
    UpperLetter,
    #[serde(rename = "lowercase-letter")]
    LowerLetter,
    #[serde(rename = "unicode-roman")]
    UnicodeRoman,
    #[serde(rename = "ascii-roman-lower")]
    RomanLower,
    #[serde(rename = "ascii-roman-upper")]
    RomanUpper,
}

impl ItemNumbering {
    /// Render the label for 0-based item index `j`.
    pub fn apply(self, j: usize) -> String {
        match self {
            ItemNumbering::Arabic => (j + 1).to_string(),
            ItemNumbering::UpperLetter => letters(j, b'A'),
            ItemNumbering::LowerLetter => letters(j, b'a'),
            ItemNumbering::UnicodeRoman => {
                // U+2160..U+216B cover Ⅰ..Ⅻ; larger indices fall back to ASCII.
                if j < 12 {
                    char::from_u32(0x2160 + j as u32).unwrap().to_string()
                } else {
                    roman(j + 1)
                }
            }
            ItemNumbering::RomanLower => roman(j + 1).to_lowercase(),
            ItemNumbering::RomanUpper => roman(j + 1),
        }
    }
}

/// Excel-style letter labels: 0 -> A, 25 -> Z, 26 -> AA.
fn letters(mut j: usize, base: u8) -> String {
    let mut out = Vec::new();
    loop {
        out.push(base + (j % 26) as u8);
        if j < 26 {
            break;
        }
        j = j / 26 - 1;
    }
    out.reverse();
    String::from_utf8(out).unwrap()
}

fn roman(mut n: usize) -> String {
    const TABLE: &[(usize, &str)] = &[
        (1000, "M"),
        (900, "CM"),
        (500, "D"),
        (400, "CD"),
        (100, "C"),
        (90, "XC"),
        (50, "L"),
        (40, "XL"),
        (10, "X"),
        (9, "IX"),
        (5, "V"),
        (4, "IV"),
        (1, "I"),
    ];
    let mut out = String::new();
    for &(v, s) in TABLE {
        while n >= v {
            out.push_str(s);
            n -= v;
        }
    }
    out
}

/// Which constant pool a grammar slot draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pool {
    Separators1,
    Separators2,
    Spaces,
    Casings,
    ItemWrappers,
    ItemNumberings,
}

/// The user-configurable constant pools.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstantSets {
    pub separators1: Vec<String>,
    pub separators2: Vec<String>,
    pub spaces: Vec<String>,
    pub casings: Vec<Casing>,
    pub item_wrappers: Vec<ItemWrapper>,
    pub item_numberings: Vec<ItemNumbering>,
}

impl Default for ConstantSets {
    fn default() -> Self {
        ConstantSets {
            separators1: [
                "", " ", "\n", " \n", " -- ", "  ", "; \n", " || ", " <sep> ", ", ", " \n ",
                " , ", "\n ", ". ", " ,  ",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            separators2: ["", " ", "  ", "\t"].iter().map(|s| s.to_string()).collect(),
            spaces: [
                "", "::: ", ":: ", ": ", " \n\t", "\n   ", " : ", " - ", " ", "\n ", "\n\t",
                ":", "::", "- ", "\t",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            casings: vec![Casing::Identity, Casing::Title, Casing::Upper, Casing::Lower],
            item_wrappers: vec![
                ItemWrapper::Paren,
                ItemWrapper::Dot,
                ItemWrapper::CloseParen,
                ItemWrapper::SpaceCloseParen,
                ItemWrapper::Bracket,
                ItemWrapper::Angle,
            ],
            item_numberings: vec![
                ItemNumbering::Arabic,
                ItemNumbering::UpperLetter,
                ItemNumbering::LowerLetter,
                ItemNumbering::UnicodeRoman,
                ItemNumbering::RomanLower,
                ItemNumbering::RomanUpper,
            ],
        }
    }
}

impl ConstantSets {
    pub fn pool_len(&self, pool: Pool) -> usize {
        match pool {
            Pool::Separators1 => self.separators1.len(),
            Pool::Separators2 => self.separators2.len(),
            Pool::Spaces => self.spaces.len(),
            Pool::Casings => self.casings.len(),
            Pool::ItemWrappers => self.item_wrappers.len(),
            Pool::ItemNumberings => self.item_numberings.len(),
        }
    }

    /// Every pool must be non-empty and duplicate-free.
    pub fn validate(&self) -> Result<()> {
        fn check<T: PartialEq + std::fmt::Debug>(name: &str, xs: &[T]) -> Result<()> {
            if xs.is_empty() {
                return Err(Error::Config(format!("constant pool {name} is empty")));
            }
            for (i, x) in xs.iter().enumerate() {
                if xs[..i].contains(x) {
                    return Err(Error::Config(format!(
                        "constant pool {name} has duplicate value {x:?}"
                    )));
                }
            }
            Ok(())
        }
        check("separators1", &self.separators1)?;
        check("separators2", &self.separators2)?;
        check("spaces", &self.spaces)?;
        check("casings", &self.casings)?;
        check("item_wrappers", &self.item_wrappers)?;
        check("item_numberings", &self.item_numberings)
    }
}
