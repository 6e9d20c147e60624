"""Common result type for every attribute-reduction method."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class ReductionResult:
    """Surviving attribute identifiers plus method diagnostics.

    `kept` is empty for a degenerate selection; `diagnostics` carries
    method-specific numbers (eigenvalues, dependency degrees, ranks, gains).
    """

    method: str
    kept: tuple[str, ...]
    diagnostics: dict = field(default_factory=dict)

    def to_text(self) -> str:
        """Flat key = value rendering for export and inspection."""
        lines = [f"method = {self.method}", f"kept = {','.join(self.kept)}"]
        for key, value in self.diagnostics.items():
            lines.append(f"{key} = {_render(value)}")
        return "\n".join(lines) + "\n"


def _render(value) -> str:
    if isinstance(value, float):
        return "%.9g" % value
    if isinstance(value, (list, tuple)):
        return "; ".join(_render(v) for v in value)
    if isinstance(value, dict):
        return "; ".join(f"{k}: {_render(v)}" for k, v in value.items())
    return str(value)
