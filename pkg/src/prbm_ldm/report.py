"""Run reports and manifests.

Every command writes a machine-readable report.json and a human-readable
report.txt.  Reports are deterministic: keys are sorted, floats use their
shortest exact representation, and nothing time- or host-dependent goes in.
The same configuration and seed therefore produce byte-identical files.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

__all__ = ["sha256_of_file", "build_report", "write_report", "format_table"]


def sha256_of_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def build_report(command: str, config_echo: dict, seed: int | None,
                 results: dict, input_checksums: dict[str, str] | None = None,
                 ) -> dict:
    from . import __version__

    return {
        "command": command,
        "version": __version__,
        "seed": seed,
        "config": config_echo,
        "inputs_sha256": input_checksums or {},
        "results": results,
    }


def write_report(out_dir: str | Path, report: dict,
                 text_lines: list[str]) -> tuple[Path, Path]:
    """Write report.json and report.txt under out_dir; returns both paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / "report.json"
    txt_path = out_dir / "report.txt"
    with json_path.open("w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with txt_path.open("w") as fh:
        fh.write("\n".join(text_lines))
        fh.write("\n")
    return json_path, txt_path


def format_table(headers: list[str], rows: list[list[str]]) -> list[str]:
    """Fixed-width text table, right-aligned numbers left-aligned first column."""
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    def fmt(cells):
        parts = []
        for i, cell in enumerate(cells):
            parts.append(cell.ljust(widths[i]) if i == 0
                         else cell.rjust(widths[i]))
        return "  ".join(parts)
    lines = [fmt(headers), fmt(["-" * w for w in widths])]
    lines.extend(fmt(row) for row in rows)
    return lines
