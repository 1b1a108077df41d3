//! Tables compiled into the binary. Each one can be overridden with a file
//! of the same format.

pub const VADER_LEXICON: &str = include_str!("../assets/vader_lexicon.tsv");
pub const BOOSTERS: &str = include_str!("../assets/boosters.tsv");
pub const NEGATIONS: &str = include_str!("../assets/negations.txt");
pub const SPECIAL_CASES: &str = include_str!("../assets/special_cases.tsv");
pub const EMOJI: &str = include_str!("../assets/emoji.tsv");
pub const STOPWORDS: &str = include_str!("../assets/stopwords.txt");
pub const NEGATION_WHITELIST: &str = include_str!("../assets/negation_whitelist.txt");
pub const LEMMAS: &str = include_str!("../assets/lemmas.tsv");
