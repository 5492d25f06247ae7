//! The shipped architectural styles and prompt → style resolution.

pub struct Style {
    pub name: &'static str,
    pub tags: &'static [&'static str],
    /// Typical building height range in meters.
    pub heights: (f64, f64),
    pub facade_materials: [&'static str; 2],
    pub road_material: &'static str,
    pub ground_material: &'static str,
}

pub const STYLES: [Style; 10] = [
    Style {
        name: "modern",
        tags: &["glass", "steel", "contemporary", "office", "downtown", "skyscraper", "business", "city"],
        heights: (12.0, 90.0),
        facade_materials: ["glass_curtain", "white_render"],
        road_material: "asphalt_01",
        ground_material: "concrete_pavers",
    },
    Style {
        name: "classical",
        tags: &["columns", "marble", "civic", "historic", "european", "capital", "boulevard"],
        heights: (9.0, 30.0),
        facade_materials: ["limestone", "marble"],
        road_material: "cobblestone",
        ground_material: "grass",
    },
    Style {
        name: "gothic",
        tags: &["cathedral", "medieval", "spires", "stone", "dark", "castle", "old"],
        heights: (8.0, 40.0),
        facade_materials: ["dark_stone", "limestone"],
        road_material: "cobblestone",
        ground_material: "grass",
    },
    Style {
        name: "cyberpunk",
        tags: &["neon", "futuristic", "night", "megacity", "scifi", "dystopian", "hightech", "downtown"],
        heights: (20.0, 140.0),
        facade_materials: ["neon_panel", "dark_metal"],
        road_material: "asphalt_02",
        ground_material: "concrete_pavers",
    },
    Style {
        name: "mediterranean",
        tags: &["coastal", "seaside", "terracotta", "villa", "sunny", "harbor", "beach"],
        heights: (5.0, 18.0),
        facade_materials: ["white_render", "terracotta"],
        road_material: "cobblestone",
        ground_material: "dry_soil",
    },
    Style {
        name: "japanese",
        tags: &["temple", "pagoda", "zen", "tokyo", "edo", "kyoto", "shrine"],
        heights: (4.0, 24.0),
        facade_materials: ["dark_timber", "white_plaster"],
        road_material: "asphalt_01",
        ground_material: "gravel",
    },
    Style {
        name: "industrial",
        tags: &["factory", "warehouse", "brick", "port", "docks", "railway", "mill"],
        heights: (6.0, 25.0),
        facade_materials: ["red_brick", "corrugated_metal"],
        road_material: "asphalt_02",
        ground_material: "dry_soil",
    },
    Style {
        name: "colonial",
        tags: &["plantation", "town", "village", "small", "square", "church", "rural"],
        heights: (4.0, 14.0),
        facade_materials: ["white_plaster", "red_brick"],
        road_material: "asphalt_01",
        ground_material: "grass",
    },
    Style {
        name: "brutalist",
        tags: &["concrete", "soviet", "blocky", "monolithic", "housing", "estate", "tower"],
        heights: (15.0, 70.0),
        facade_materials: ["raw_concrete", "white_render"],
        road_material: "asphalt_02",
        ground_material: "concrete_pavers",
    },
    Style {
        name: "scandinavian",
        tags: &["nordic", "wooden", "fjord", "cozy", "riverside", "lake", "cabin"],
        heights: (4.0, 16.0),
        facade_materials: ["painted_wood", "white_plaster"],
        road_material: "asphalt_01",
        ground_material: "grass",
    },
];

pub fn style(name: &str) -> Option<&'static Style> {
    STYLES.iter().find(|s| s.name == name)
}

pub fn style_names() -> Vec<&'static str> {
    STYLES.iter().map(|s| s.name).collect()
}

/// Lower-case alphanumeric words of a text.
pub fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Tag-match score of each style for a text: 2 when the style's name
/// appears as a word, plus 1 per matching tag.
pub fn style_scores(text: &str) -> Vec<(&'static str, u32)> {
    let words = tokens(text);
    STYLES
        .iter()
        .map(|s| {
            let name = if words.iter().any(|w| w == s.name) { 2 } else { 0 };
            let tags = s.tags.iter().filter(|t| words.iter().any(|w| w == *t)).count() as u32;
            (s.name, name + tags)
        })
        .collect()
}

/// Highest-scoring style, earliest in the list on ties; `None` when no
/// style scores above zero.
pub fn match_style(text: &str) -> Option<&'static str> {
    let mut best: Option<(&'static str, u32)> = None;
    for (name, score) in style_scores(text) {
        if score > 0 && best.is_none_or(|(_, b)| score > b) {
            best = Some((name, score));
        }
    }
    best.map(|(n, _)| n)
}
