"""Corpus adapter registry and discovery."""

from pathlib import Path
from typing import Any, Optional

from sonicgesture.core.interfaces import CorpusAdapter


class CorpusRegistry:
    """
    Registry for corpus adapters.

    Adapters are registered by source_id and tried in registration order.
    """

    def __init__(self) -> None:
        self._adapters: dict[str, CorpusAdapter] = {}

    def register(self, adapter: CorpusAdapter) -> None:
        """
        Register an adapter by its source_id.

        Raises:
            ValueError: If an adapter with the same source_id is already registered
        """
        source_id = adapter.source_id()
        if source_id in self._adapters:
            raise ValueError(f"Adapter with source_id='{source_id}' is already registered")
        self._adapters[source_id] = adapter

    def get(self, source_id: str) -> Optional[CorpusAdapter]:
        return self._adapters.get(source_id)

    def find_compatible(self, root: Path, metadata: dict[str, Any]) -> Optional[CorpusAdapter]:
        """Return the first adapter that recognises the corpus under ``root``, if any."""
        for adapter in self._adapters.values():
            if adapter.can_ingest(root, metadata):
                return adapter
        return None

    def list_all(self) -> dict[str, CorpusAdapter]:
        return dict(self._adapters)


def default_registry() -> CorpusRegistry:
    """Registry holding the built-in adapters, synthetic first."""
    from sonicgesture.adapters.directory import DirectoryCorpusAdapter
    from sonicgesture.adapters.synthetic import SyntheticCorpusAdapter

    registry = CorpusRegistry()
    registry.register(SyntheticCorpusAdapter())
    registry.register(DirectoryCorpusAdapter())
    return registry
