"""Example programs shipped with the package, one per ``.fh`` file."""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources

from ..parser import SourceFile, parse_file

_EXPECT = re.compile(r"^#\s*expect:\s*(.+?)\s*$", re.M)


@dataclass(frozen=True)
class Program:
    name: str
    text: str
    source: SourceFile
    expect: str | None

    @property
    def term(self):
        return self.source.term

    @property
    def context(self):
        return self.source.context

    @property
    def signature(self):
        return self.source.signature


def program_names() -> list[str]:
    return sorted(p.name[:-3] for p in resources.files(__package__).iterdir() if p.name.endswith(".fh"))


def load(name: str) -> Program:
    text = resources.files(__package__).joinpath(f"{name}.fh").read_text(encoding="utf-8")
    m = _EXPECT.search(text)
    return Program(name, text, parse_file(text), m.group(1) if m else None)


def corpus_programs() -> list[Program]:
    return [load(n) for n in program_names()]
