"""Time-varying vector error correction and market-integration speed."""
