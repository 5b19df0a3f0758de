"""
Frame dumps of window traces: ASCII grids ('#' active, '.' inactive) and
binary PGM images (active = 0, inactive = 255).
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Tuple, Union

import numpy as np
from PIL import Image

from netdiff.errors import NotWindowTrace

logger = logging.getLogger("netdiff.render")


def read_trace(path: Union[str, Path]) -> List[Dict[str, Any]]:
    try:
        with open(path, "r") as f:
            return [json.loads(line) for line in f if line.strip()]
    except (OSError, ValueError) as e:
        raise NotWindowTrace(f"cannot read trace {path}: {str(e)}")


def _bounds(record: Dict[str, Any]) -> Tuple[Tuple[int, int], Tuple[int, int]]:
    window = record.get("window")
    if not window or len(window.get("bounds") or []) != 2:
        raise NotWindowTrace(f"trace record at step {record.get('step')} does not come from a 2-d box window")
    (x0, x1), (y0, y1) = window["bounds"]
    return (x0, x1), (y0, y1)


def frame_array(record: Dict[str, Any]) -> np.ndarray:
    """Boolean grid, row 0 = largest y."""
    (x0, x1), (y0, y1) = _bounds(record)
    grid = np.zeros((y1 - y0 + 1, x1 - x0 + 1), dtype=bool)
    for x, y in record.get("active", []):
        grid[y1 - y, x - x0] = True
    if record.get("truncated"):
        logger.warning(f"Frame {record['step']} comes from a truncated trace record")
    return grid


def ascii_frames(records: Iterable[Dict[str, Any]]) -> List[str]:
    frames = []
    for record in records:
        grid = frame_array(record)
        rows = ["".join("#" if bit else "." for bit in row) for row in grid]
        frames.append(f"step {record['step']}\n" + "\n".join(rows))
    return frames


def write_pgm_frames(records: Iterable[Dict[str, Any]], out_dir: Union[str, Path]) -> List[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for record in records:
        pixels = np.where(frame_array(record), 0, 255).astype(np.uint8)
        path = out / f"frame_{record['step']:05d}.pgm"
        Image.fromarray(pixels).save(path, format="PPM")
        written.append(path)
    logger.info(f"Wrote {len(written)} PGM frames to {out}")
    return written
