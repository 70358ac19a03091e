#![allow(dead_code)]
pub mod mser_oracle;
