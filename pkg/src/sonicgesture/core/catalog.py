"""Gesture catalogue: display names, folder aliases and published reference accuracies."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import yaml
from rapidfuzz import fuzz

from sonicgesture.core.errors import UnknownGestureError
from sonicgesture.core.models import GestureClass, Split

logger = logging.getLogger(__name__)

DEFAULT_MATCH_THRESHOLD = 88.0


def _normalize_name(value: str) -> str:
    return " ".join(value.lower().replace("_", " ").replace("-", " ").split())


def _load_yaml(path: Path | None, resource_name: str) -> dict[str, Any]:
    if path:
        file_path = path / resource_name
        if not file_path.exists():
            return {}
        with file_path.open("r", encoding="utf-8") as handle:
            return yaml.safe_load(handle) or {}

    try:
        resource = resources.files("sonicgesture.templates").joinpath(resource_name)
        with resource.open("r", encoding="utf-8") as handle:
            return yaml.safe_load(handle) or {}
    except FileNotFoundError:
        return {}


@dataclass(frozen=True)
class ReferenceResult:
    """A published accuracy figure, shown beside local results in reports."""

    key: str
    name: str
    accuracy: float


@dataclass
class GestureEntry:
    gesture: GestureClass
    display_name: str
    aliases: list[str] = field(default_factory=list)


class GestureCatalog:
    """
    Resolves corpus folder names to gestures and splits.

    Exact codes (``LR``, ``UD``...) and exact aliases win outright; anything else
    goes through fuzzy matching against the alias list and must clear
    ``match_threshold`` with a unique best gesture.
    """

    def __init__(
        self,
        templates_path: str | Path | None = None,
        match_threshold: float = DEFAULT_MATCH_THRESHOLD,
    ) -> None:
        self.templates_path = Path(templates_path) if templates_path else None
        self.match_threshold = match_threshold
        data = _load_yaml(self.templates_path, "gestures.yaml")
        self.entries = self._load_entries(data)
        self.split_aliases = self._load_splits(data)
        self.references = self._load_references(data)

    def _load_entries(self, data: dict[str, Any]) -> dict[GestureClass, GestureEntry]:
        entries = {g: GestureEntry(gesture=g, display_name=g.value) for g in GestureClass}
        for raw in data.get("gestures", []) or []:
            if not isinstance(raw, dict) or "gesture" not in raw:
                continue
            gesture = GestureClass(raw["gesture"])
            entries[gesture] = GestureEntry(
                gesture=gesture,
                display_name=str(raw.get("display_name") or gesture.value),
                aliases=[_normalize_name(str(a)) for a in raw.get("aliases", []) or []],
            )
        return entries

    def _load_splits(self, data: dict[str, Any]) -> dict[str, Split]:
        aliases = {split.value: split for split in Split}
        for split_name, names in (data.get("splits") or {}).items():
            for name in names or []:
                aliases[_normalize_name(str(name))] = Split(split_name)
        return aliases

    def _load_references(self, data: dict[str, Any]) -> dict[str, ReferenceResult]:
        references: dict[str, ReferenceResult] = {}
        for key, raw in (data.get("reference_accuracy") or {}).items():
            references[key] = ReferenceResult(
                key=key, name=str(raw.get("name", key)), accuracy=float(raw["accuracy"])
            )
        return references

    def display_name(self, gesture: GestureClass) -> str:
        return self.entries[gesture].display_name

    def resolve_split(self, name: str) -> Split:
        split = self.split_aliases.get(_normalize_name(name))
        if split is None:
            raise UnknownGestureError(
                f"unknown split directory '{name}' (expected one of "
                f"{sorted(s.value for s in Split)})"
            )
        return split

    def resolve_gesture(self, name: str) -> GestureClass:
        stripped = name.strip()
        for gesture in GestureClass:
            if stripped.upper() == gesture.code:
                return gesture
        normalized = _normalize_name(stripped)
        for entry in self.entries.values():
            if normalized == _normalize_name(entry.gesture.value) or normalized in entry.aliases:
                return entry.gesture

        best = self._best_alias_match(normalized)
        if best is None:
            raise UnknownGestureError(
                f"unknown gesture directory '{name}' (codes: "
                f"{', '.join(g.code for g in GestureClass)})"
            )
        gesture, alias, score = best
        logger.info(
            "resolved folder '%s' to %s via alias '%s' (%.0f)", name, gesture.code, alias, score
        )
        return gesture

    def _best_alias_match(self, name: str) -> tuple[GestureClass, str, float] | None:
        if len(name) < 3:
            return None
        scores: dict[GestureClass, tuple[str, float]] = {}
        for entry in self.entries.values():
            for alias in entry.aliases:
                score = fuzz.WRatio(name, alias)
                if entry.gesture not in scores or score > scores[entry.gesture][1]:
                    scores[entry.gesture] = (alias, score)
        ranked = sorted(scores.items(), key=lambda item: item[1][1], reverse=True)
        if not ranked or ranked[0][1][1] < self.match_threshold:
            return None
        if len(ranked) > 1 and ranked[1][1][1] == ranked[0][1][1]:
            return None
        gesture, (alias, score) = ranked[0]
        return gesture, alias, score
