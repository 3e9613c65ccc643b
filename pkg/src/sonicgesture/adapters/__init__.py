"""Corpus adapters: layout-specific ingestion into manifests."""
