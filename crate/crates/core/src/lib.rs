pub mod nat;
pub mod ordinals;
pub mod ktree;
pub mod erdos;
pub mod bounds;
pub mod termlang;
pub mod prcompile;
