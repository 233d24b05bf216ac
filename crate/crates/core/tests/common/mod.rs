pub mod svd_oracle;
