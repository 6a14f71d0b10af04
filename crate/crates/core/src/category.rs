//! Closed object vocabulary and the parametric footprints that stand in for
//! object meshes.

use serde::{Deserialize, Serialize};

use crate::world::EnvironmentTag;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    Plate,
    Bowl,
    Cup,
    Mug,
    Fork,
    Knife,
    Spoon,
    Napkin,
    Saucer,
    Book,
    Remote,
    Coaster,
    Vase,
    Laptop,
    Keyboard,
    Mouse,
    Pen,
    Notebook,
    Tray,
    Toothbrush,
    Toothpaste,
    Soap,
    Towel,
    Razor,
}

/// Static description of a category: nominal footprint and support flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CategorySpec {
    pub half_extents: (f64, f64),
    pub is_support: bool,
}

impl Category {
    pub const ALL: [Category; 24] = [
        Category::Plate,
        Category::Bowl,
        Category::Cup,
        Category::Mug,
        Category::Fork,
        Category::Knife,
        Category::Spoon,
        Category::Napkin,
        Category::Saucer,
        Category::Book,
        Category::Remote,
        Category::Coaster,
        Category::Vase,
        Category::Laptop,
        Category::Keyboard,
        Category::Mouse,
        Category::Pen,
        Category::Notebook,
        Category::Tray,
        Category::Toothbrush,
        Category::Toothpaste,
        Category::Soap,
        Category::Towel,
        Category::Razor,
    ];

    pub const COUNT: usize = Self::ALL.len();

    /// Position in [`Category::ALL`]; used for one-hot encodings.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn spec(self) -> CategorySpec {
        use Category::*;
        let (hx, hy, is_support) = match self {
            Plate => (0.10, 0.10, true),
            Bowl => (0.07, 0.07, false),
            Cup => (0.04, 0.04, false),
            Mug => (0.045, 0.04, false),
            Fork => (0.012, 0.09, false),
            Knife => (0.012, 0.10, false),
            Spoon => (0.015, 0.08, false),
            Napkin => (0.07, 0.07, true),
            Saucer => (0.07, 0.07, true),
            Book => (0.08, 0.11, false),
            Remote => (0.025, 0.09, false),
            Coaster => (0.05, 0.05, true),
            Vase => (0.05, 0.05, false),
            Laptop => (0.16, 0.11, false),
            Keyboard => (0.20, 0.06, false),
            Mouse => (0.03, 0.05, false),
            Pen => (0.007, 0.07, false),
            Notebook => (0.07, 0.10, true),
            Tray => (0.15, 0.10, true),
            Toothbrush => (0.01, 0.09, false),
            Toothpaste => (0.02, 0.09, false),
            Soap => (0.04, 0.03, false),
            Towel => (0.10, 0.06, true),
            Razor => (0.015, 0.07, false),
        };
        CategorySpec {
            half_extents: (hx, hy),
            is_support,
        }
    }

    pub fn is_support(self) -> bool {
        self.spec().is_support
    }

    /// Environments whose templates typically use this category.
    pub fn environments(self) -> &'static [EnvironmentTag] {
        use Category::*;
        use EnvironmentTag::*;
        match self {
            Plate | Bowl | Fork | Knife | Spoon | Napkin => &[Dining],
            Cup => &[Dining, Coffee, Bathroom],
            Mug => &[Coffee, Office],
            Saucer | Remote | Coaster | Vase => &[Coffee],
            Book => &[Coffee, Office],
            Laptop | Keyboard | Mouse | Pen | Notebook => &[Office],
            Tray => &[Coffee, Bathroom],
            Toothbrush | Toothpaste | Soap | Towel | Razor => &[Bathroom],
        }
    }

    pub fn name(self) -> &'static str {
        use Category::*;
        match self {
            Plate => "plate",
            Bowl => "bowl",
            Cup => "cup",
            Mug => "mug",
            Fork => "fork",
            Knife => "knife",
            Spoon => "spoon",
            Napkin => "napkin",
            Saucer => "saucer",
            Book => "book",
            Remote => "remote",
            Coaster => "coaster",
            Vase => "vase",
            Laptop => "laptop",
            Keyboard => "keyboard",
            Mouse => "mouse",
            Pen => "pen",
            Notebook => "notebook",
            Tray => "tray",
            Toothbrush => "toothbrush",
            Toothpaste => "toothpaste",
            Soap => "soap",
            Towel => "towel",
            Razor => "razor",
        }
    }
}

impl std::fmt::Display for Category {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
