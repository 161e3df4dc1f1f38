"""Worker-facing task presenters: an HTML template plus an answer schema.

A presenter is identified by its version hash. Answers are only
interpretable under the presenter that elicited them, so the hash is
recorded in the store and re-publication under a changed presenter is
refused upstream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .canonical import fingerprint
from .errors import InvalidPresenter, SchemaViolation

PLACEHOLDER = "{{object}}"

SCHEMA_LABELS = "labels"
SCHEMA_TEXT = "text"


@dataclass(frozen=True)
class AnswerSchema:
    """Either an enumerated label set or free text."""

    type: str
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        if self.type not in (SCHEMA_LABELS, SCHEMA_TEXT):
            raise InvalidPresenter(f"unknown answer schema type {self.type!r}")
        if self.type == SCHEMA_LABELS:
            if len(set(self.labels)) < 2:
                raise InvalidPresenter("label schema needs >= 2 distinct labels")
            if len(set(self.labels)) != len(self.labels):
                raise InvalidPresenter("duplicate labels in schema")

    @property
    def enumerated(self) -> bool:
        return self.type == SCHEMA_LABELS

    def validate_answer(self, answer) -> None:
        if self.type == SCHEMA_LABELS:
            if answer not in self.labels:
                raise SchemaViolation(
                    f"answer {answer!r} not in labels {list(self.labels)}"
                )
        else:
            if not isinstance(answer, str) or not answer.strip():
                raise SchemaViolation("free-text answer must be a non-empty string")

    def to_dict(self) -> dict:
        if self.type == SCHEMA_LABELS:
            return {"type": SCHEMA_LABELS, "labels": list(self.labels)}
        return {"type": SCHEMA_TEXT}

    @staticmethod
    def from_dict(data: dict) -> "AnswerSchema":
        if not isinstance(data, dict) or "type" not in data:
            raise InvalidPresenter("answer schema must be an object with a 'type'")
        if data["type"] == SCHEMA_LABELS:
            labels = data.get("labels")
            if not isinstance(labels, list):
                raise InvalidPresenter("label schema needs a 'labels' list")
            return AnswerSchema(SCHEMA_LABELS, tuple(str(x) for x in labels))
        return AnswerSchema(data["type"])


@dataclass(frozen=True)
class Presenter:
    name: str
    template: str
    schema: AnswerSchema
    version_hash: str = field(init=False)

    def __post_init__(self):
        if not self.template.strip():
            raise InvalidPresenter("presenter template is empty")
        object.__setattr__(
            self,
            "version_hash",
            fingerprint({"template": self.template, "schema": self.schema.to_dict()}),
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "template": self.template,
            "schema": self.schema.to_dict(),
            "version_hash": self.version_hash,
        }

    @staticmethod
    def from_dict(data: dict) -> "Presenter":
        p = Presenter(
            name=data["name"],
            template=data["template"],
            schema=AnswerSchema.from_dict(data["schema"]),
        )
        if "version_hash" in data and data["version_hash"] != p.version_hash:
            raise InvalidPresenter("presenter version_hash does not match content")
        return p


def presenter_from_dir(path: str | Path, name: str | None = None) -> Presenter:
    """Load a presenter directory: ``template.html`` + ``schema.json``."""
    root = Path(path)
    template_file = root / "template.html"
    schema_file = root / "schema.json"
    if not template_file.is_file():
        raise InvalidPresenter(f"missing {template_file}")
    if not schema_file.is_file():
        raise InvalidPresenter(f"missing {schema_file}")
    try:
        schema_data = json.loads(schema_file.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise InvalidPresenter(f"invalid schema.json: {exc}")
    return Presenter(
        name=name or root.name,
        template=template_file.read_text(encoding="utf-8"),
        schema=AnswerSchema.from_dict(schema_data),
    )


def image_label_presenter(labels: tuple[str, ...] = ("Yes", "No")) -> Presenter:
    """Built-in presenter for the image labeling example app."""
    template = (
        "<div class=\"task\">\n"
        "  <p>Does the image match the description?</p>\n"
        f"  <img src=\"{PLACEHOLDER}\" alt=\"task image\" />\n"
        "</div>\n"
    )
    return Presenter("image-label", template, AnswerSchema(SCHEMA_LABELS, labels))


def pair_match_presenter() -> Presenter:
    """Built-in presenter for entity-resolution pair tasks."""
    template = (
        "<div class=\"task\">\n"
        "  <p>Do these two records refer to the same real-world entity?</p>\n"
        f"  <pre>{PLACEHOLDER}</pre>\n"
        "</div>\n"
    )
    return Presenter(
        "pair-match", template, AnswerSchema(SCHEMA_LABELS, ("match", "nonmatch"))
    )
