"""Prompt templates and payload rendering.

Templates are plain text files with named ``{placeholder}`` tokens; only the
known placeholders are substituted, so literal braces (JSON examples) survive
untouched.  Rendered payloads embed machine-readable ``## section:`` blocks
that the deterministic mock parses back; real models simply read them as
clearly delimited input.
"""

from __future__ import annotations

import json
import re
from functools import lru_cache
from pathlib import Path

from .graph import Hierarchy, NodeId

TEMPLATES_DIR = Path(__file__).parent / "templates"

#: System instruction shared by every pipeline prompt.
SYSTEM_TAXONOMIST = (
    "You are an expert taxonomy curator for a knowledge graph. Follow the task "
    "instructions exactly and respond with a single JSON dictionary every time."
)

_PLACEHOLDER = re.compile(
    r"\{(existing_hierarchy|candidates|examples|categories|anchor|subtrees)\}"
)
_SECTION_HEADER = re.compile(r"^##\s*([a-z_-]+):\s*(.*)$")


@lru_cache(maxsize=None)
def load_template(name: str, templates_dir: str | None = None) -> str:
    directory = Path(templates_dir) if templates_dir else TEMPLATES_DIR
    return (directory / f"{name}.txt").read_text(encoding="utf-8")


def render(template_text: str, **values: str) -> str:
    """Substitute known placeholders; unknown braces are left alone."""

    def repl(match: re.Match[str]) -> str:
        name = match.group(1)
        if name not in values:
            raise KeyError(f"template placeholder {{{name}}} has no value")
        return values[name]

    return _PLACEHOLDER.sub(repl, template_text)


def render_template(name: str, templates_dir: str | None = None, **values: str) -> str:
    return render(load_template(name, templates_dir), **values)


def parse_sections(payload: str) -> dict[str, str]:
    """Recover the ``## name:`` sections from a rendered payload."""
    sections: dict[str, str] = {}
    current: str | None = None
    lines: list[str] = []

    def flush() -> None:
        if current is not None:
            sections[current] = "\n".join(lines).strip()

    for line in payload.splitlines():
        header = _SECTION_HEADER.match(line)
        if header:
            flush()
            current = header.group(1)
            lines = [header.group(2)] if header.group(2) else []
        elif current is not None:
            lines.append(line)
    flush()
    return sections


def json_list(labels: list[str]) -> str:
    """Render a label list as JSON, preserving order."""
    return json.dumps(labels, ensure_ascii=True)


def nested_tree(graph: Hierarchy, root: NodeId) -> dict:
    """Nested label dictionary for a branch; multi-parent nodes appear under
    each parent.  Children are sorted so rendering is deterministic."""

    def build(node_id: NodeId) -> dict:
        children = sorted(graph.children_of(node_id), key=lambda c: graph.node(c).label)
        return {graph.node(c).label: build(c) for c in children}

    return {graph.node(root).label: build(root)}


def render_branch(graph: Hierarchy, root: NodeId) -> str:
    return json.dumps(nested_tree(graph, root), ensure_ascii=True, sort_keys=True)
