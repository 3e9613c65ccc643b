"""Adapter for corpora written by the Doppler simulator (manifest.csv at the root)."""

from sonicgesture.adapters.synthetic.adapter import SyntheticCorpusAdapter

__all__ = ["SyntheticCorpusAdapter"]
