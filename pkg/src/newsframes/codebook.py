"""Frame taxonomy, coder guidance, and label-set validity rules.

Six codes cover the five generic news frames plus an explicit "no frame"
option. A paragraph may carry several frames at once, but exactly one of
them is marked as the main (most pronounced) frame, and "no frame" is
exclusive: it never co-occurs with any other code.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class FrameCode(str, Enum):
    """The six frame codes, in canonical index order."""

    AR01 = "AR01"  # attribution of responsibility
    HI02 = "HI02"  # human interest
    CF03 = "CF03"  # conflict
    MF04 = "MF04"  # morality
    EF05 = "EF05"  # economic
    NO06 = "NO06"  # no frame

    def __str__(self) -> str:
        return self.value


# Canonical order: classifier head indices, report columns, and CSV layout
# all follow this tuple.
FRAME_ORDER: tuple[FrameCode, ...] = (
    FrameCode.AR01,
    FrameCode.HI02,
    FrameCode.CF03,
    FrameCode.MF04,
    FrameCode.EF05,
    FrameCode.NO06,
)

NUM_FRAMES = len(FRAME_ORDER)

_INDEX_BY_CODE = {code: i for i, code in enumerate(FRAME_ORDER)}


class FrameCodeError(ValueError):
    """Raised for unknown frame codes or out-of-range frame indices."""


def frame_index(code: FrameCode) -> int:
    """Return the stable 0-5 index of a frame code."""
    try:
        return _INDEX_BY_CODE[FrameCode(code)]
    except (KeyError, ValueError):
        raise FrameCodeError(f"unknown frame code: {code!r}") from None


def frame_from_index(index: int) -> FrameCode:
    """Inverse of frame_index; raises FrameCodeError outside 0-5."""
    if not isinstance(index, int) or not 0 <= index < NUM_FRAMES:
        raise FrameCodeError(f"frame index out of range 0-{NUM_FRAMES - 1}: {index!r}")
    return FRAME_ORDER[index]


def parse_frame_code(raw: str) -> FrameCode:
    """Parse a serialized code string ("AR01" ... "NO06")."""
    try:
        return FrameCode(raw)
    except ValueError:
        raise FrameCodeError(f"unknown frame code: {raw!r}") from None


@dataclass(frozen=True)
class FrameDefinition:
    """One frame with the guiding questions coders answer to detect it."""

    code: FrameCode
    name: str
    guiding_questions: tuple[str, ...]


_DEFINITIONS: tuple[FrameDefinition, ...] = (
    FrameDefinition(
        code=FrameCode.AR01,
        name="Attribution of responsibility",
        guiding_questions=(
            "Does the paragraph suggest that an individual (e.g. a politician) or "
            "a group (e.g. a party, state, governmental departments, society, "
            "civilian groups) is responsible for the problem or can resolve it?",
            "Does the paragraph suggest a solution to the problem or call for "
            "urgent action over it?",
        ),
    ),
    FrameDefinition(
        code=FrameCode.HI02,
        name="Human interest",
        guiding_questions=(
            "Does the paragraph use a human example or emphasise the effect of a "
            "problem on humans? Is the human the central focus of the paragraph?",
            "Does the paragraph use emotive language that may invoke an emotional "
            "response in the reader (like outrage, empathy-caring, sympathy, or "
            "compassion)?",
        ),
    ),
    FrameDefinition(
        code=FrameCode.CF03,
        name="Conflict",
        guiding_questions=(
            "Does the paragraph refer to any form of negative interaction or "
            "framing (disagreement, confrontation, spat, etc.) between two sides "
            "of any kind (actors, problem, viewpoints)?",
        ),
    ),
    FrameDefinition(
        code=FrameCode.MF04,
        name="Morality",
        guiding_questions=(
            "Does the paragraph contain any form of morality (what is good or "
            "bad? Does it talk about Good and Evil? Does it talk about religious "
            "tenets or prescribe a socially apt behaviour or ethics?)",
        ),
    ),
    FrameDefinition(
        code=FrameCode.EF05,
        name="Economic",
        guiding_questions=(
            "Does the paragraph speak about economic changes in policy or law or "
            "refer to any form of economic loss/gain, expense, costs, or economic "
            "consequences of a current policy or law?",
        ),
    ),
    FrameDefinition(
        code=FrameCode.NO06,
        name="No frame",
        guiding_questions=(),
    ),
)


def codebook_text() -> list[FrameDefinition]:
    """All six frame definitions in canonical index order."""
    return list(_DEFINITIONS)


def codebook_markdown() -> str:
    """Render the codebook as a markdown document for coder training."""
    lines = ["# Generic news frame codebook", ""]
    lines.append(
        "The unit of coding is the paragraph. A paragraph may be labelled with "
        "several frames; mark the one that is most pronounced as the main frame. "
        "`NO06` (no frame) is exclusive: if it applies, no other code may be set."
    )
    lines.append("")
    for definition in _DEFINITIONS:
        lines.append(f"## {definition.name} ({definition.code.value})")
        lines.append("")
        if definition.guiding_questions:
            for i, question in enumerate(definition.guiding_questions, start=1):
                lines.append(f"{i}. {question}")
        else:
            lines.append(
                "Use when none of the five frames above is present in the paragraph."
            )
        lines.append("")
    return "\n".join(lines)


# Rule names are part of the wire contract: the HTTP service returns them in
# 422 bodies and the browser frontend mirrors them verbatim.
RULE_FRAMES_NONEMPTY = "frames must not be empty"
RULE_MAIN_IN_FRAMES = "main not in frames"
RULE_NO06_EXCLUSIVE = "NO06 must be exclusive"


@dataclass(frozen=True)
class LabelSet:
    """A paragraph's frame labels: the full set, plus the main frame."""

    frames: frozenset[FrameCode]
    main: FrameCode

    def __init__(self, frames, main: FrameCode):
        object.__setattr__(self, "frames", frozenset(FrameCode(f) for f in frames))
        object.__setattr__(self, "main", FrameCode(main))

    def sorted_frames(self) -> list[FrameCode]:
        """Frames in canonical index order (stable serialization order)."""
        return sorted(self.frames, key=frame_index)


def validate_label_set(labels: LabelSet) -> list[str]:
    """Check a LabelSet against the codebook rules.

    Returns the exhaustive list of violated rule names; an empty list means
    the label set is valid. Validation never raises.
    """
    violations = []
    if not labels.frames:
        violations.append(RULE_FRAMES_NONEMPTY)
    if labels.frames and labels.main not in labels.frames:
        violations.append(RULE_MAIN_IN_FRAMES)
    if FrameCode.NO06 in labels.frames and len(labels.frames) > 1:
        violations.append(RULE_NO06_EXCLUSIVE)
    return violations


class LabelValidationError(ValueError):
    """An invalid LabelSet reached an operation that requires a valid one."""

    def __init__(self, violations: list[str], para_id: str | None = None):
        self.violations = list(violations)
        self.para_id = para_id
        where = f" for paragraph {para_id!r}" if para_id else ""
        super().__init__(f"invalid label set{where}: " + "; ".join(self.violations))


def require_valid(labels: LabelSet, para_id: str | None = None) -> LabelSet:
    """Raise LabelValidationError unless the label set passes all rules."""
    violations = validate_label_set(labels)
    if violations:
        raise LabelValidationError(violations, para_id=para_id)
    return labels
