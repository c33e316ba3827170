pub mod imageio;
pub mod imgcore;
pub mod post_assist;
pub mod pre_assist;
pub mod selector;
pub mod workbench;
pub mod synthetic;
