"""Adapter for corpora laid out as <split>/<gesture>/<clip>.wav."""

from sonicgesture.adapters.directory.adapter import DirectoryCorpusAdapter

__all__ = ["DirectoryCorpusAdapter"]
