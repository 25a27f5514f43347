pub mod chat;
pub mod evaluate;
pub mod generate;
pub mod prepare;
pub mod train;
