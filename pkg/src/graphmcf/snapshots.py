"""Text snapshot persistence for flow states.

Format: header lines `manifold1=`, `manifold2=`, `shape=`, `time=`, `step=`
(plus `background=` when a torus-target field carries an affine background),
followed by one row per node in row-major order with the target components as
decimal literals that round-trip to full precision.
"""
from __future__ import annotations

import os

import numpy as np

from .errors import FormatError
from .field import FlowState, MapField, make_grid
from .manifolds import ManifoldSpec


def snapshot_write(state: FlowState, destination) -> None:
    """Write a state to a path or text file object (bit-exact round trip)."""
    own = isinstance(destination, (str, os.PathLike))
    fh = open(destination, "w") if own else destination
    try:
        field = state.field
        fh.write(f"manifold1={field.grid.spec.describe()}\n")
        fh.write(f"manifold2={field.target.describe()}\n")
        fh.write("shape=" + ",".join(str(s) for s in field.grid.shape) + "\n")
        fh.write(f"time={state.time!r}\n")
        fh.write(f"step={state.step_index}\n")
        if field.background is not None:
            fh.write("background=" + ",".join(repr(v) for v in field.background.ravel()) + "\n")
        for row in field.values:
            fh.write(" ".join(repr(v) for v in row) + "\n")
    finally:
        if own:
            fh.close()


def _read_lines_with_offsets(fh):
    offset = 0
    for line in fh:
        yield offset, line
        offset += len(line.encode("utf-8"))


def snapshot_read(source) -> FlowState:
    """Read a state previously written by snapshot_write."""
    own = isinstance(source, (str, os.PathLike))
    fh = open(source, "r") if own else source
    try:
        lines = _read_lines_with_offsets(fh)
        header: dict[str, str] = {}
        needed = ["manifold1", "manifold2", "shape", "time", "step"]
        pos = 0
        last_offset = 0
        for key in needed:
            try:
                last_offset, line = next(lines)
            except StopIteration:
                raise FormatError(
                    f"truncated snapshot: missing header line {key!r}", offset=last_offset
                )
            k, sep, v = line.rstrip("\n").partition("=")
            if not sep or k != key:
                raise FormatError(
                    f"malformed header at byte {last_offset}: expected {key!r}", offset=last_offset
                )
            header[k] = v
        try:
            spec1 = ManifoldSpec.parse(header["manifold1"])
            spec2 = ManifoldSpec.parse(header["manifold2"])
            shape = tuple(int(s) for s in header["shape"].split(","))
            time = float(header["time"])
            step = int(header["step"])
        except Exception as exc:
            raise FormatError(f"malformed header: {exc}", offset=0) from exc
        grid = make_grid(spec1, shape)
        ncomp = 2 if spec2.kind == "flat-torus" else 3
        background = None
        values = np.empty((grid.nnodes, ncomp))
        row = 0
        for off, line in lines:
            text = line.strip()
            if not text:
                continue
            if text.startswith("background="):
                try:
                    bg = np.array([float(x) for x in text.partition("=")[2].split(",")])
                    background = bg.reshape(grid.ndim, 2)
                except Exception as exc:
                    raise FormatError(f"malformed background at byte {off}: {exc}", offset=off)
                continue
            if row >= grid.nnodes:
                raise FormatError(
                    f"value-count mismatch at byte {off}: more than {grid.nnodes} rows",
                    offset=off,
                )
            parts = text.split()
            if len(parts) != ncomp:
                raise FormatError(
                    f"malformed value row at byte {off}: expected {ncomp} components",
                    offset=off,
                )
            try:
                values[row] = [float(p) for p in parts]
            except ValueError as exc:
                raise FormatError(f"malformed number at byte {off}: {exc}", offset=off)
            row += 1
            pos = off + len(line.encode("utf-8"))
        if row != grid.nnodes:
            raise FormatError(
                f"value-count mismatch at byte {pos}: got {row} rows, header "
                f"promises {grid.nnodes}",
                offset=pos,
            )
        field = MapField(grid=grid, target=spec2, values=values, background=background)
        return FlowState(time=time, field=field, step_index=step)
    finally:
        if own:
            fh.close()
