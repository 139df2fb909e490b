//! Label color schemes.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ColorEntry {
    pub name: String,
    pub rgba: [u8; 4],
}

/// Label id → name and RGBA. Label 0 is always present and transparent.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ColorScheme {
    entries: BTreeMap<u16, ColorEntry>,
}

impl Default for ColorScheme {
    fn default() -> Self {
        Self::empty()
    }
}

impl ColorScheme {
    /// Scheme holding only the transparent background.
    pub fn empty() -> Self {
        let mut entries = BTreeMap::new();
        entries.insert(
            0,
            ColorEntry {
                name: "background".to_string(),
                rgba: [0, 0, 0, 0],
            },
        );
        ColorScheme { entries }
    }

    /// A small general-purpose palette for labels 1..=8.
    pub fn standard() -> Self {
        const PALETTE: [(&str, [u8; 4]); 8] = [
            ("label1", [230, 25, 75, 160]),
            ("label2", [60, 180, 75, 160]),
            ("label3", [0, 130, 200, 160]),
            ("label4", [255, 225, 25, 160]),
            ("label5", [245, 130, 48, 160]),
            ("label6", [145, 30, 180, 160]),
            ("label7", [70, 240, 240, 160]),
            ("label8", [240, 50, 230, 160]),
        ];
        let mut s = Self::empty();
        for (i, (name, rgba)) in PALETTE.iter().enumerate() {
            s.insert(i as u16 + 1, name, *rgba);
        }
        s
    }

    /// Inserts or replaces an entry. Label 0 stays transparent.
    pub fn insert(&mut self, id: u16, name: &str, rgba: [u8; 4]) {
        let rgba = if id == 0 { [rgba[0], rgba[1], rgba[2], 0] } else { rgba };
        self.entries.insert(
            id,
            ColorEntry {
                name: name.to_string(),
                rgba,
            },
        );
    }

    pub fn get(&self, id: u16) -> Option<&ColorEntry> {
        self.entries.get(&id)
    }

    pub fn contains(&self, id: u16) -> bool {
        self.entries.contains_key(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u16, &ColorEntry)> {
        self.entries.iter().map(|(k, v)| (*k, v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Color for `id`, falling back to a deterministic hue for unknown labels.
    pub fn rgba(&self, id: u16) -> [u8; 4] {
        match self.entries.get(&id) {
            Some(e) => e.rgba,
            None => {
                let h = (id as u32).wrapping_mul(2654435761);
                [(h >> 24) as u8, (h >> 16) as u8, (h >> 8) as u8, 160]
            }
        }
    }
}
