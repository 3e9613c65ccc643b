"""sonicgesture core module: models, configs, signal processing, and dataset plumbing."""
