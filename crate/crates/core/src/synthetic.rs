//! A small generated world for offline experiments: an invented lexicon, a
//! raw-text corpus written from it, a rule-based "LLM" that knows the
//! lexicon, and held-out NER data over names the corpus never mentions.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::span::TokenRange;
use crate::synth::RuleBasedLlm;
use crate::tasks::{TaskItem, TaskTuple};
use crate::text::detokenize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    Person,
    City,
    Country,
    Organization,
    Date,
    Number,
    Food,
    Animal,
    Occupation,
    Event,
    Product,
}

impl Category {
    pub const ALL: [Category; 11] = [
        Category::Person,
        Category::City,
        Category::Country,
        Category::Organization,
        Category::Date,
        Category::Number,
        Category::Food,
        Category::Animal,
        Category::Occupation,
        Category::Event,
        Category::Product,
    ];

    fn slot(self) -> &'static str {
        match self {
            Category::Person => "{Person}",
            Category::City => "{City}",
            Category::Country => "{Country}",
            Category::Organization => "{Organization}",
            Category::Date => "{Date}",
            Category::Number => "{Number}",
            Category::Food => "{Food}",
            Category::Animal => "{Animal}",
            Category::Occupation => "{Occupation}",
            Category::Event => "{Event}",
            Category::Product => "{Product}",
        }
    }

    /// Labels the rule-based LLM may use for this category. Each lexicon
    /// entry is assigned one of them.
    fn llm_labels(self) -> &'static [&'static str] {
        match self {
            Category::Person => &["Person", "Person", "Name"],
            Category::City => &["City", "Location"],
            Category::Country => &["Country", "Location"],
            Category::Organization => &["Organization", "Company"],
            Category::Date => &["Date"],
            Category::Number => &["Number", "Quantity"],
            Category::Food => &["Food"],
            Category::Animal => &["Animal"],
            Category::Occupation => &["Occupation"],
            Category::Event => &["Event"],
            Category::Product => &["Product"],
        }
    }

    /// NER type in the held-out task, if the category is annotated there.
    pub fn ner_type(self) -> Option<&'static str> {
        match self {
            Category::Person => Some("Person"),
            Category::City | Category::Country => Some("Location"),
            Category::Organization => Some("Organization"),
            _ => None,
        }
    }
}

/// Entity types of the held-out NER task.
pub const NER_TYPES: [&str; 3] = ["Person", "Location", "Organization"];

const PRETRAIN_TEMPLATES: &[&str] = &[
    "{Person} moved to {City} in {Date} .",
    "{Organization} opened an office in {City} , {Country} .",
    "{Person} , a {Occupation} from {Country} , likes {Food} .",
    "The {Animal} near {City} ate some {Food} .",
    "{Person} joined {Organization} as a {Occupation} .",
    "{Event} drew {Number} visitors to {City} .",
    "{Organization} released the {Product} on {Date} .",
    "{Person} and {Person} visited {Country} during {Event} .",
    "In {Date} , {Organization} sold {Number} units of the {Product} .",
    "A {Occupation} in {Country} raised a {Animal} .",
    "{Person} cooked {Food} for the {Event} guests .",
    "The {Product} made by {Organization} costs {Number} dollars .",
    "{City} is the largest city of {Country} .",
    "{Person} wrote about the {Animal} of {Country} .",
    "Every {Date} , {City} hosts {Event} .",
    "{Organization} , based in {City} , employs {Number} people .",
];

const HELDOUT_TEMPLATES: &[&str] = &[
    "Yesterday {Person} flew from {City} to {Country} .",
    "{Organization} hired {Person} last year .",
    "Officials in {City} met leaders of {Organization} .",
    "According to {Person} , {Organization} will expand into {Country} .",
    "{Person} spoke at the {Organization} headquarters in {City} .",
    "Travelers said {Country} was cheaper than {City} .",
    "{Person} left {Organization} after ten years .",
    "Protests in {City} worried {Person} .",
    "The {Product} sold out in {Country} within {Number} hours .",
    "During {Event} , {Person} praised the {Food} .",
    "Since {Date} , {Organization} has owned a {Animal} farm .",
    "Critics of {Organization} gathered outside {Event} .",
    "A {Occupation} named {Person} opened a shop selling {Food} .",
    "Shares of {Organization} fell after the {Product} launch .",
    "{Country} signed a trade deal on {Date} .",
    "Most visitors to {Event} came from {City} .",
    "{Person} , who grew up in {Country} , now teaches in {City} .",
    "On {Date} a {Animal} escaped from a zoo near {City} .",
    "Investors expect {Organization} to buy {Organization} .",
    "The {Occupation} told {Person} about the {Product} .",
    "Rain delayed {Event} in {Country} for {Number} days .",
    "Last week {Person} and {Person} toured {City} .",
    "Neither {Organization} nor {Person} commented .",
    "Farmers in {Country} export {Food} to {City} .",
];

const FILLERS: &[&str] = &[
    "It was widely reported.",
    "Few people noticed at the time.",
    "The story spread quickly.",
    "Nobody expected this.",
];

const ONSETS: &[&str] =
    &["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "dr", "kl", "st", "tr", "sh"];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u", "ai", "ei", "ou"];
const CODAS: &[&str] = &["", "", "", "n", "r", "l", "s", "th", "x"];
const MONTHS: &[&str] = &["January", "March", "April", "June", "August", "October", "December"];
const ORG_SUFFIXES: &[&str] = &["Corp", "Group", "Labs", "Bank", "Motors", "Institute"];
const FOOD_HEADS: &[&str] = &["soup", "bread", "stew", "cake", "noodles"];
const EVENT_HEADS: &[&str] = &["Festival", "Fair", "Summit", "Games"];
const PRODUCT_HEADS: &[&str] = &["phone", "tablet", "scooter", "camera"];
const OCCUPATIONS: &[&str] = &[
    "teacher", "baker", "pilot", "lawyer", "farmer", "nurse", "engineer", "painter", "miner", "sailor", "chemist",
    "tailor",
];
const ANIMALS: &[&str] = &["fox", "heron", "goat", "otter", "falcon", "lynx", "badger", "camel", "tortoise", "beetle"];

fn pseudo_word(rng: &mut ChaCha8Rng) -> String {
    let syllables = rng.gen_range(2..=3);
    (0..syllables)
        .map(|_| {
            format!("{}{}{}", ONSETS.choose(rng).unwrap(), VOWELS.choose(rng).unwrap(), CODAS.choose(rng).unwrap())
        })
        .collect()
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexEntry {
    pub category: Category,
    pub text: String,
    /// Label the rule-based LLM emits for this entry.
    pub llm_label: String,
    /// Reserved for the held-out task.
    pub heldout: bool,
}

#[derive(Clone, Debug)]
pub struct ToyWorld {
    pub lexicon: Vec<LexEntry>,
}

impl ToyWorld {
    /// `per_category` entries per category; roughly a third of the named
    /// categories are held out.
    pub fn new(seed: u64, per_category: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut used = BTreeSet::new();
        let mut fresh = |rng: &mut ChaCha8Rng| loop {
            let w = pseudo_word(rng);
            if used.insert(w.clone()) {
                return w;
            }
        };
        let mut lexicon = Vec::new();
        for cat in Category::ALL {
            let n = match cat {
                Category::Occupation => OCCUPATIONS.len(),
                Category::Animal => ANIMALS.len(),
                _ => per_category,
            };
            for k in 0..n {
                let text = match cat {
                    Category::Person => format!("{} {}", capitalize(&fresh(&mut rng)), capitalize(&fresh(&mut rng))),
                    Category::City | Category::Country => capitalize(&fresh(&mut rng)),
                    Category::Organization => {
                        format!("{} {}", capitalize(&fresh(&mut rng)), ORG_SUFFIXES.choose(&mut rng).unwrap())
                    }
                    Category::Date => match rng.gen_bool(0.5) {
                        true => format!("{} {}", MONTHS.choose(&mut rng).unwrap(), rng.gen_range(1..=28)),
                        false => format!("{}", rng.gen_range(1950..2024)),
                    },
                    Category::Number => format!("{}", rng.gen_range(2..5000)),
                    Category::Food => format!("{} {}", fresh(&mut rng), FOOD_HEADS.choose(&mut rng).unwrap()),
                    Category::Animal => ANIMALS[k].to_string(),
                    Category::Occupation => OCCUPATIONS[k].to_string(),
                    Category::Event => {
                        format!("{} {}", capitalize(&fresh(&mut rng)), EVENT_HEADS.choose(&mut rng).unwrap())
                    }
                    Category::Product => {
                        format!("{} {}", capitalize(&fresh(&mut rng)), PRODUCT_HEADS.choose(&mut rng).unwrap())
                    }
                };
                let llm_label = cat.llm_labels().choose(&mut rng).unwrap().to_string();
                let heldout = cat.ner_type().is_some() && k % 3 == 2;
                lexicon.push(LexEntry { category: cat, text, llm_label, heldout });
            }
        }
        // Dates and numbers can repeat; keep the first of each surface form.
        let mut seen = BTreeSet::new();
        lexicon.retain(|e| seen.insert(e.text.clone()));
        Self { lexicon }
    }

    fn entries(&self, cat: Category, heldout: bool) -> Vec<&LexEntry> {
        self.lexicon.iter().filter(|e| e.category == cat && e.heldout == heldout).collect()
    }

    /// Fills `template`, returning tokens and the category of each filled slot.
    fn fill(&self, template: &str, heldout: bool, rng: &mut ChaCha8Rng) -> (Vec<String>, Vec<(Category, TokenRange)>) {
        let mut tokens = Vec::new();
        let mut slots = Vec::new();
        let mut used = BTreeSet::new();
        for piece in template.split(' ') {
            match Category::ALL.iter().find(|c| c.slot() == piece) {
                Some(&cat) => {
                    let pool = self.entries(cat, heldout && cat.ner_type().is_some());
                    let entry = loop {
                        let e = pool.choose(rng).expect("non-empty lexicon category");
                        if used.insert(e.text.as_str()) || pool.len() == 1 {
                            break e;
                        }
                    };
                    let start = tokens.len();
                    tokens.extend(crate::text::tokenize(&entry.text));
                    slots.push((cat, TokenRange::new(start, tokens.len())));
                }
                None => tokens.push(piece.to_string()),
            }
        }
        (tokens, slots)
    }

    /// Raw paragraphs: a generated first sentence plus a filler sentence.
    /// Held-out names never appear.
    pub fn corpus(&self, paragraphs: usize, seed: u64) -> Vec<String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..paragraphs)
            .map(|_| {
                let t = PRETRAIN_TEMPLATES.choose(&mut rng).unwrap();
                let (tokens, _) = self.fill(t, false, &mut rng);
                format!("{} {}", detokenize(&tokens), FILLERS.choose(&mut rng).unwrap())
            })
            .collect()
    }

    /// A mock LLM annotating every lexicon entry with its LLM label.
    pub fn mock_llm(&self) -> RuleBasedLlm {
        RuleBasedLlm::new(self.lexicon.iter().map(|e| (e.llm_label.clone(), e.text.clone())))
    }

    /// Held-out NER sentences over held-out names, typed with [`NER_TYPES`].
    pub fn ner_dataset(&self, n: usize, seed: u64, id_prefix: &str) -> Vec<TaskItem> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let t = HELDOUT_TEMPLATES.choose(&mut rng).unwrap();
                let (tokens, slots) = self.fill(t, true, &mut rng);
                let tuples = slots
                    .into_iter()
                    .filter_map(|(cat, span)| cat.ner_type().map(|k| TaskTuple::Entity { kind: k.into(), span }))
                    .collect();
                TaskItem { id: format!("{id_prefix}{i:05}"), tokens, tuples }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synthesize, SynthConfig};

    #[test]
    fn world_is_deterministic_and_split() {
        let a = ToyWorld::new(1, 30);
        let b = ToyWorld::new(1, 30);
        assert_eq!(a.lexicon, b.lexicon);
        assert_eq!(a.corpus(20, 2), b.corpus(20, 2));
        let held: BTreeSet<&str> = a.lexicon.iter().filter(|e| e.heldout).map(|e| e.text.as_str()).collect();
        assert!(!held.is_empty());
        for para in a.corpus(300, 3) {
            let toks = crate::text::tokenize(&para);
            for h in &held {
                let ht = crate::text::tokenize(h);
                assert!(!toks.windows(ht.len()).any(|w| w == &ht[..]), "{h} leaked into {para}");
            }
        }
    }

    #[test]
    fn ner_spans_match_names() {
        let w = ToyWorld::new(5, 30);
        for item in w.ner_dataset(50, 9, "t") {
            assert!(!item.tuples.is_empty());
            for t in &item.tuples {
                let TaskTuple::Entity { kind, span } = t else { panic!() };
                assert!(NER_TYPES.contains(&kind.as_str()));
                let text = detokenize(&item.tokens[span.start..span.end]);
                let entry = w.lexicon.iter().find(|e| e.text == text).unwrap();
                assert!(entry.heldout);
            }
        }
    }

    #[test]
    fn mock_llm_annotates_corpus() {
        let w = ToyWorld::new(2, 30);
        let config = SynthConfig { n: 50, parallelism: 2, ..Default::default() };
        let out = synthesize(w.corpus(80, 1), &w.mock_llm(), &config).unwrap();
        assert_eq!(out.records.len(), 50);
        assert_eq!(out.diagnostics.pairs_unaligned, 0);
        assert!(out.records.iter().all(|r| r.pairs.len() >= 2));
    }
}
