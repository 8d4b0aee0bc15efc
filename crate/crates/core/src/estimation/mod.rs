pub mod bayes;
pub mod fisher;
pub mod protocol;
