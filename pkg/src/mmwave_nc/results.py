"""CSV persistence with a commented metadata header."""

import csv
from pathlib import Path
from typing import Any, Iterable, Sequence

from mmwave_nc import __version__
from mmwave_nc.gf import get_field
from mmwave_nc.logging_config import get_logger
from mmwave_nc.models import ExperimentConfig
from mmwave_nc.types import Campaign
from mmwave_nc.utils import format_value

logger = get_logger(__name__)


def metadata_lines(config: ExperimentConfig, campaign: Campaign, description: str = "") -> list[str]:
    """`#`-prefixed lines identifying how a file was produced. No timestamps, so reruns match byte for byte."""
    field = get_field(config.field_size).describe()
    lines = [
        f"# tool: mmwave-nc {__version__}",
        f"# campaign: {campaign.name.lower()}",
        f"# seed: {config.seed}",
        f"# config_sha256: {config.config_hash()}",
        f"# field: GF({field['q']}) polynomial {field['polynomial_str']}",
    ]
    if description:
        lines.append(f"# {description}")
    return lines


def write_csv(
    path: str | Path,
    headers: Sequence[str],
    rows: Iterable[Sequence[Any]],
    config: ExperimentConfig,
    campaign: Campaign,
    description: str = "",
) -> Path:
    """Write one UTF-8 CSV: metadata lines, one header row, then the rows in order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "w", newline="", encoding="utf-8") as f:
        for line in metadata_lines(config, campaign, description):
            f.write(line + "\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(headers)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
            count += 1
    logger.info(f"Wrote {count} rows to {path}")
    return path


def read_csv(path: str | Path) -> tuple[list[str], list[dict[str, str]]]:
    """Metadata lines and data rows of a file written by write_csv."""
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    metadata = [line for line in lines if line.startswith("#")]
    body = [line for line in lines if not line.startswith("#")]
    return metadata, list(csv.DictReader(body))
