import asyncio
import json
import math
from pathlib import Path
from typing import Any, Iterable

import aiofiles
import numpy as np
import structlog

logger = structlog.get_logger()


def _clean(value: Any) -> Any:
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def dumps(value: Any) -> str:
    return json.dumps(_clean(value), sort_keys=True)


def jsonl(records: Iterable[dict]) -> str:
    return "".join(dumps(r) + "\n" for r in records)


def csv_columns(header: tuple[str, str], first: Iterable[float], second: Iterable[float]) -> str:
    rows = [",".join(header)]
    rows.extend(f"{float(a)!r},{float(b)!r}" for a, b in zip(first, second))
    return "\n".join(rows) + "\n"


async def _write(path: Path, content: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    async with aiofiles.open(path, "w", encoding="utf-8") as f:
        await f.write(content)


async def _write_all(files: dict[Path, str]) -> None:
    await asyncio.gather(*(_write(path, content) for path, content in files.items()))


def write_outputs(out_dir: Path, files: dict[str, str]) -> list[Path]:
    """Write ``{relative name: content}`` under ``out_dir``; existing files are overwritten."""
    targets = {Path(out_dir) / name: content for name, content in files.items()}
    asyncio.run(_write_all(targets))
    logger.info("outputs written", out_dir=str(out_dir), n_files=len(targets))
    return sorted(targets)
