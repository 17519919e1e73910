//! Tagger interface, training loop, the toy tagger, and dataset converters.

mod convert;
mod distill;
mod optim;
mod tagger;
mod toy;
mod train;

pub use convert::{
    convert_causal, convert_seq2seq, parse_causal, parse_seq2seq, CausalSample, ParsedExtraction, Seq2SeqPair,
    END_OF_TEXT, NO_SPANS, SPAN_JOINER,
};
pub use distill::distill_to_training;
pub use optim::{cosine_lr, AdamW, AdamWParams};
pub use tagger::{LookupTagger, Tagger, TrainableTagger};
pub use toy::{ToyCheckpoint, ToyTagger, ToyTaggerConfig};
pub use train::{fit_tagger, BatchRecord, TrainConfig, TrainLog};
