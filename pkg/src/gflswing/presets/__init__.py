"""Bundled scenario presets (TOML files)."""
