pub mod dynamics;
pub mod engine;
pub mod geo;
pub mod planner;
pub mod predict;
pub mod radio;
pub mod route;
pub mod safety;
pub mod server;
pub mod stl;
