"""Relation templates that render edges as sentences."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .core import Edge
from .overlap import first_label

__all__ = [
    "FALLBACK_TEMPLATE",
    "TemplateError",
    "TemplateTable",
    "default_templates",
    "load_templates",
    "lexicalize_edge",
    "lexicalize_edges",
]

FALLBACK_TEMPLATE = "{head} {relation_label} {tail}"


class TemplateError(ValueError):
    pass


def _check_template(relation: str, template: str) -> None:
    for ph in ("{head}", "{tail}"):
        n = template.count(ph)
        if n != 1:
            raise TemplateError(
                f"template for {relation!r} must contain {ph} exactly once, found {n}: {template!r}"
            )


@dataclass(frozen=True)
class TemplateTable:
    templates: Mapping[str, str] = field(default_factory=dict)
    fallback: str = FALLBACK_TEMPLATE

    def __post_init__(self):
        for rel, tpl in self.templates.items():
            _check_template(rel, tpl)
        _check_template("<fallback>", self.fallback)

    def template_for(self, relation: str) -> str | None:
        return self.templates.get(relation)

    def updated(self, overrides: Mapping[str, str]) -> "TemplateTable":
        return TemplateTable({**self.templates, **overrides}, self.fallback)


_DEFAULTS = {
    # lexical
    "/r/FormOf": "{head} is a form of {tail}",
    "/r/DerivedFrom": "{head} is derived from {tail}",
    "/r/EtymologicallyDerivedFrom": "{head} is etymologically derived from {tail}",
    "fn:lexical_unit": "{head} has the lexical unit {tail}",
    "wn:lemma": "{head} has the lemma {tail}",
    "label": "{head} is labeled {tail}",
    # similarity
    "/r/Synonym": "{head} is a synonym of {tail}",
    "/r/SimilarTo": "{head} is similar to {tail}",
    "/r/DefinedAs": "{head} is defined as {tail}",
    "fn:reframing_mapping": "{head} is reframed as {tail}",
    "fn:metaphor": "{head} is a metaphor for {tail}",
    "wn:synonym": "{head} is a synonym of {tail}",
    "P460": "{head} is said to be the same as {tail}",
    # distinctness
    "/r/Antonym": "{head} is the opposite of {tail}",
    "/r/DistinctFrom": "{head} is distinct from {tail}",
    "wn:antonym": "{head} is the opposite of {tail}",
    "fn:excludes": "{head} excludes {tail}",
    "P1889": "{head} is different from {tail}",
    "P461": "{head} is the opposite of {tail}",
    # taxonomic
    "/r/IsA": "{head} is a {tail}",
    "/r/InstanceOf": "{head} is an instance of {tail}",
    "/r/MannerOf": "{head} is a manner of {tail}",
    "fn:perspective_on": "{head} is a perspective on {tail}",
    "fn:inheritance": "{head} inherits from {tail}",
    "wn:hypernym": "{head} is a kind of {tail}",
    "P279": "{head} is a subclass of {tail}",
    "P31": "{head} is an instance of {tail}",
    "description": "{head} is described as {tail}",
    # part-whole
    "/r/PartOf": "{head} is part of {tail}",
    "/r/HasA": "{head} has {tail}",
    "/r/MadeOf": "{head} is made of {tail}",
    "wn:meronym": "{head} has part {tail}",
    "wn:holonym": "{head} is part of {tail}",
    "P527": "{head} has part {tail}",
    "P463": "{head} is a member of {tail}",
    "P186": "{head} is made from {tail}",
    # spatial
    "/r/AtLocation": "{head} is located at {tail}",
    "/r/LocatedNear": "{head} is located near {tail}",
    "P276": "{head} is located at {tail}",
    "P927": "{head} is anatomically located in {tail}",
    # creation
    "/r/CreatedBy": "{head} is created by {tail}",
    "P170": "{head} is created by {tail}",
    # utility
    "/r/ReceivesAction": "{head} can be {tail}",
    "/r/UsedFor": "{head} is used for {tail}",
    "/r/CapableOf": "{head} is capable of {tail}",
    "/r/NotCapableOf": "{head} is not capable of {tail}",
    "fn:using": "{head} uses {tail}",
    "P1535": "{head} is used by {tail}",
    "P366": "{head} is used for {tail}",
    "P2283": "{head} uses {tail}",
    # desire-goal
    "/r/CausesDesire": "{head} causes the desire to {tail}",
    "/r/MotivatedByGoal": "{head} is motivated by {tail}",
    "/r/Desires": "{head} desires {tail}",
    "/r/NotDesires": "{head} does not desire {tail}",
    "/r/ObstructedBy": "{head} is obstructed by {tail}",
    "at:xIntent": "{head}. PersonX wanted {tail}",
    "at:xWant": "{head}. As a result, PersonX wants {tail}",
    "at:oWant": "{head}. As a result, others want {tail}",
    # quality
    "/r/HasProperty": "{head} has the property {tail}",
    "/r/NotHasProperty": "{head} does not have the property {tail}",
    "/r/SymbolOf": "{head} is a symbol of {tail}",
    "fn:frame_element": "{head} has the frame element {tail}",
    "P462": "{head} has the color {tail}",
    "P1552": "{head} has the quality {tail}",
    "at:xAttr": "{head}. PersonX is seen as {tail}",
    # temporal
    "/r/HasFirstSubevent": "{head} starts with {tail}",
    "/r/HasLastSubevent": "{head} ends with {tail}",
    "/r/HasSubevent": "{head} includes {tail}",
    "/r/HasPrerequisite": "{head} requires {tail}",
    "/r/Causes": "{head} causes {tail}",
    "/r/Entails": "{head} entails {tail}",
    "fn:subframe": "{head} has the subframe {tail}",
    "fn:precedes": "{head} precedes {tail}",
    "fn:inchoative_of": "{head} is the inchoative of {tail}",
    "fn:causative_of": "{head} is the causative of {tail}",
    "P828": "{head} has cause {tail}",
    "P1542": "{head} has effect {tail}",
    "at:xNeed": "{head}. Before, PersonX needed {tail}",
    "at:xEffect": "{head}. As a result, {tail}",
    "at:oEffect": "{head}. As a result, others {tail}",
    "at:xReact": "{head}. As a result, PersonX feels {tail}",
    "at:oReact": "{head}. As a result, others feel {tail}",
    # relational-other
    "/r/RelatedTo": "{head} is related to {tail}",
    "/r/HasContext": "{head} is used in the context of {tail}",
    "/r/EtymologicallyRelatedTo": "{head} is etymologically related to {tail}",
    "fn:see_also": "{head} see also {tail}",
    "fn:requires": "{head} requires {tail}",
    "P425": "{head} is the field of the occupation {tail}",
    "P180": "{head} depicts {tail}",
    "P1995": "{head} has the health specialty {tail}",
}


def default_templates() -> TemplateTable:
    return TemplateTable(dict(_DEFAULTS))


def load_templates(path: str | Path, base: TemplateTable | None = None) -> TemplateTable:
    """Read a ``relation<TAB>template`` file, overriding ``base`` (defaults when None).

    A header line ``relation<TAB>template`` is optional. The relation name
    ``*`` sets the fallback template.
    """
    base = base if base is not None else default_templates()
    overrides: dict[str, str] = {}
    fallback = base.fallback
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise TemplateError(f"{path}:{lineno}: expected 2 tab-separated fields")
            rel, tpl = parts
            if lineno == 1 and (rel, tpl) == ("relation", "template"):
                continue
            try:
                _check_template(rel, tpl)
            except TemplateError as exc:
                raise TemplateError(f"{path}:{lineno}: {exc}") from None
            if rel == "*":
                fallback = tpl
            else:
                overrides[rel] = tpl
    return TemplateTable({**base.templates, **overrides}, fallback)


def _render(template: str, head: str, tail: str, relation_label: str) -> str:
    # str.format would choke on braces inside labels
    out = template.replace("{relation_label}", relation_label)
    return out.replace("{head}", "\0H\0").replace("{tail}", "\0T\0").replace(
        "\0H\0", head
    ).replace("\0T\0", tail)


def edge_labels(edge: Edge) -> tuple[str, str]:
    head, tail = first_label(edge.node1_label), first_label(edge.node2_label)
    if not head or not tail:
        side = "head" if not head else "tail"
        raise ValueError(f"edge {edge.id!r} has an empty {side} label")
    return head, tail


def lexicalize_edge(edge: Edge, templates: TemplateTable | None = None, tail: str | None = None) -> str:
    """Render ``edge`` with its relation template.

    ``tail`` replaces the tail label in the output (used for question stems).
    """
    templates = templates if templates is not None else default_templates()
    head, real_tail = edge_labels(edge)
    template = templates.template_for(edge.relation) or templates.fallback
    rel_label = first_label(edge.relation_label) or edge.relation
    return _render(template, head, real_tail if tail is None else tail, rel_label)


def lexicalize_edges(edges: Iterable[Edge], templates: TemplateTable | None = None) -> Iterator[tuple[str, str]]:
    templates = templates if templates is not None else default_templates()
    for e in edges:
        yield e.id, lexicalize_edge(e, templates)
