"""Prompt construction from versioned template resources.

Templates live in ``templates/`` as plain text with ``{placeholder}``
slots. Substitution is literal string replacement, never ``str.format``:
sample payloads routinely contain braces (LaTeX, SQL) that must pass
through untouched.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Optional

from .errors import MissingField
from .types import Message, Role, Sample, TaskKind, REQUIRED_FIELDS

_DEFAULT_DIR = Path(__file__).parent / "templates"

# template file, then payload-field -> placeholder mapping per task
_TASK_TEMPLATES: Mapping[TaskKind, tuple[str, Mapping[str, str]]] = {
    TaskKind.TRANSLATION: ("translation.txt", {"target_language": "language", "source": "source"}),
    TaskKind.MATH_REASONING: ("math.txt", {"problem": "problem"}),
    TaskKind.TEXT_TO_SQL: ("sql.txt", {"schema_ddl": "table_name_and_schema", "question": "question"}),
    TaskKind.SENTIMENT: ("sentiment.txt", {"review": "review"}),
}

REFLECTION_TEMPLATE = "reflection.txt"
JUDGE_TEMPLATE = "judge.txt"


def _substitute(template: str, values: Mapping[str, str]) -> str:
    out = template
    for name, value in values.items():
        out = out.replace("{" + name + "}", value)
    return out


class PromptLibrary:
    """Loads templates from a directory; point at your own to override.

    The bundled SQL template hard-codes a reference date in its preamble;
    overriding the directory is the supported way to change it.
    """

    def __init__(self, template_dir: Optional[Path] = None):
        self.template_dir = Path(template_dir) if template_dir else _DEFAULT_DIR
        self._cache: dict[str, str] = {}

    def _load(self, name: str) -> str:
        if name not in self._cache:
            self._cache[name] = (self.template_dir / name).read_text(encoding="utf-8").rstrip("\n")
        return self._cache[name]

    def initial_prompt(self, sample: Sample) -> Message:
        """Render the task template for a sample into the opening user message."""
        template_name, field_map = _TASK_TEMPLATES[sample.task]
        values = {}
        for field_name in REQUIRED_FIELDS[sample.task]:
            value = sample.payload.get(field_name)
            if not value:
                raise MissingField(
                    f"sample {sample.id!r} ({sample.task.value}) is missing field {field_name!r}"
                )
            if field_name in field_map:
                # fields like db_path feed scoring, not the prompt
                values[field_map[field_name]] = value
        return Message(Role.USER, _substitute(self._load(template_name), values))

    def reflection_prompt(self, first_user_message: str, feedback_output: Optional[str] = None) -> Message:
        """Render the reflection turn; the feedback slot collapses to '' when absent."""
        text = _substitute(
            self._load(REFLECTION_TEMPLATE),
            {
                "feedback_mechanism_output": feedback_output or "",
                "first_user_message": first_user_message,
            },
        )
        return Message(Role.USER, text)

    def judge_prompt(self, user_query: str, candidate: str) -> Message:
        """Render the judge request: original question plus candidate answer only."""
        text = _substitute(
            self._load(JUDGE_TEMPLATE),
            {"user_query": user_query, "context": candidate},
        )
        return Message(Role.USER, text)


DEFAULT_LIBRARY = PromptLibrary()


def build_initial_prompt(sample: Sample, library: Optional[PromptLibrary] = None) -> Message:
    return (library or DEFAULT_LIBRARY).initial_prompt(sample)


def build_reflection_prompt(
    first_user_message: str,
    feedback_output: Optional[str] = None,
    library: Optional[PromptLibrary] = None,
) -> Message:
    return (library or DEFAULT_LIBRARY).reflection_prompt(first_user_message, feedback_output)


def build_judge_prompt(
    user_query: str, candidate: str, library: Optional[PromptLibrary] = None
) -> Message:
    return (library or DEFAULT_LIBRARY).judge_prompt(user_query, candidate)
