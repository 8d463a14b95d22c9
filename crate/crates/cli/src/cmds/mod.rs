pub mod classify;
pub mod detect;
pub mod explain;
pub mod pipeline;
pub mod recommend;
pub mod train;
pub mod verify;
