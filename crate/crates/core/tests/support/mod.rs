pub mod sdpa_reader;
