pub mod random_choreo;
