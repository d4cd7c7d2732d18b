//! Teachable task automation: natural-language commands become typed scripts
//! whose unknown parts are taught through conversation and demonstration.

pub mod demo;
pub mod dialog;
pub mod dsl;
pub mod entities;
pub mod gateway;
pub mod kb;
pub mod parser;
pub mod screenworld;
pub mod text;
