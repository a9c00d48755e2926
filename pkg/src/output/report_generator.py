"""
report_generator.py  -  CSV / JSON experiment reports

Every report is one dict:
    schema_version, kind, provenance {version, seed, config_hash},
    summary {...}, rows [...], violation

JSON format writes <kind>.json.  CSV format writes the rows to <kind>.csv
and the rest of the report to <kind>_summary.json.  Reports carry no
timestamps, so identical config + seed gives byte-identical files.
"""

import json
import subprocess
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional

import pandas as pd

from src.orchestration.logger import setup_logger
from src.orchestration.state_manager import make_serializable
from src.output.report_validator import SCHEMA_VERSION, ReportValidator

logger = setup_logger()

FLOAT_FORMAT = "%.12g"


@lru_cache(maxsize=1)
def package_version() -> str:
    try:
        result = subprocess.run(
            ["git", "describe", "--tags", "--always", "--dirty"],
            capture_output=True, text=True, timeout=5,
            cwd=Path(__file__).resolve().parent,
        )
    except (OSError, subprocess.SubprocessError):
        return "unversioned"
    version = result.stdout.strip()
    return version if result.returncode == 0 and version else "unversioned"


def build_report(
    kind: str,
    summary: dict,
    rows: List[dict],
    violation: bool,
    seed: int,
    config_hash: str,
) -> dict:
    return make_serializable({
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "provenance": {"version": package_version(), "seed": int(seed), "config_hash": config_hash},
        "summary": summary,
        "rows": rows,
        "violation": bool(violation),
    })


class ReportGenerator:

    def __init__(self, output_dir="results"):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.validator = ReportValidator()

    # ======================================================
    # MAIN ENTRY POINT
    # ======================================================

    def generate(self, report: dict, fmt: str = "json",
                 extra_files: Optional[Dict[str, str]] = None) -> Dict[str, str]:
        """
        Validate, then write the report and any extra text files.

        Returns:
            dict: {label: path} for every file written
        """
        if fmt not in ("csv", "json"):
            raise ValueError(f"format must be csv or json (got '{fmt}')")

        self.validator.validate(report)
        kind = report["kind"]
        written = {}

        if fmt == "json":
            written["report"] = str(self._write_json(self.output_dir / f"{kind}.json", report))
        else:
            written["rows"] = str(self._write_csv(self.output_dir / f"{kind}.csv", report["rows"]))
            summary = {key: value for key, value in report.items() if key != "rows"}
            written["summary"] = str(self._write_json(self.output_dir / f"{kind}_summary.json", summary))

        for name, text in (extra_files or {}).items():
            path = self.output_dir / name
            path.write_text(text, encoding="utf-8")
            written[name] = str(path)

        logger.info(f"Report written for {kind}", extra={"context": written})
        return written

    @staticmethod
    def _write_json(path: Path, data: dict) -> Path:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(data, f, indent=2, sort_keys=True)
            f.write("\n")
        return path

    @staticmethod
    def _write_csv(path: Path, rows: List[dict]) -> Path:
        frame = pd.DataFrame(rows)
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        return path
