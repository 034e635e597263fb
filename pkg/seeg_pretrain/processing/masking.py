"""
Pretraining augmentation: interval masks sampled along time and frequency,
either with fixed width ranges (static scheme) or with frequency-dependent
widths (adaptive scheme, for superlet inputs), and their application with
keep / replace / zero actions.
"""
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from seeg_pretrain.entity.config_entity import MaskParams
from seeg_pretrain.entity.data_entity import (
    MaskAction,
    MaskAxis,
    MaskedSpectrogram,
    MaskInterval,
    MaskPlan,
    Spectrogram,
)
from seeg_pretrain.exception import ParameterError, RejectedPlanError


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def _choose_action(rng: np.random.Generator, params: MaskParams) -> MaskAction:
    q = rng.random()
    if q < params.p_id:
        return MaskAction.KEEP
    if q < params.p_id + params.p_replace:
        return MaskAction.REPLACE
    return MaskAction.ZERO


def _scan(
    rng: np.random.Generator,
    length: int,
    params: MaskParams,
    width_at: Callable[[int], int],
    shift_tail: bool = False,
) -> List[Tuple[int, int, MaskAction]]:
    """
    Left-to-right scan: at each position start an interval with probability
    p_mask and jump past it, otherwise move one step.

    An interval running past the end is clipped, or with ``shift_tail``
    moved back as far as the previous interval allows and clipped only if
    it still does not fit.
    """
    spans = []
    i = 0
    floor = 0
    while i < length:
        if rng.random() < params.p_mask:
            width = width_at(i)
            start = max(floor, min(i, length - width)) if shift_tail else i
            width = min(width, length - start)
            spans.append((start, width, _choose_action(rng, params)))
            i = floor = start + width
        else:
            i += 1
    return spans


def _overlaps(start: int, width: int, spans: Sequence[Tuple[int, int, MaskAction]]) -> bool:
    return any(start < s + w and s < start + width for s, w, _ in spans)


def _resolve_source(
    rng: np.random.Generator, length: int, width: int, spans, retries: int
) -> Optional[int]:
    """Uniform source start that overlaps no masked span on the axis, or None after ``retries`` misses."""
    if width > length:
        return None
    for _ in range(retries):
        source = int(rng.integers(0, length - width + 1))
        if not _overlaps(source, width, spans):
            return source
    return None


def _build_intervals(
    rng: np.random.Generator,
    axis: MaskAxis,
    length: int,
    spans: List[Tuple[int, int, MaskAction]],
    params: MaskParams,
    row_widths: Optional[Callable[[int], Tuple[int, ...]]] = None,
) -> List[MaskInterval]:
    intervals = []
    for start, width, action in spans:
        source = None
        if action is MaskAction.REPLACE:
            source = _resolve_source(rng, length, width, spans, params.replace_retries)
            if source is None:
                action = MaskAction.ZERO
        widths = row_widths(width) if row_widths is not None else None
        intervals.append(MaskInterval(axis, start, width, action, source, widths))
    return intervals


def sample_axis_masks(
    length: int, params: MaskParams = MaskParams(), axis: MaskAxis = MaskAxis.TIME, rng_seed=0
) -> List[MaskInterval]:
    """
    Static-scheme intervals along one axis.

    Widths are uniform in the axis step range (``time_step_range`` or
    ``freq_step_range``) and clipped to the remaining length.

    Args:
        length (int): number of frames (time) or bins (frequency), >= 1.
        rng_seed: integer seed or an existing ``np.random.Generator``.
    """
    if length < 1:
        raise ParameterError("mask sampling needs length >= 1")
    rng = np.random.default_rng(rng_seed)
    lo, hi = params.time_step_range if axis is MaskAxis.TIME else params.freq_step_range
    spans = _scan(rng, length, params, lambda _: int(rng.integers(lo, hi + 1)))
    return _build_intervals(rng, axis, length, spans, params)


def sample_static_plan(shape: Tuple[int, int], params: MaskParams = MaskParams(), rng_seed=0) -> MaskPlan:
    """Time intervals over the m columns, then frequency intervals over the n rows, from one stream."""
    n, m = shape
    rng = np.random.default_rng(rng_seed)
    intervals = sample_axis_masks(m, params, MaskAxis.TIME, rng) + sample_axis_masks(n, params, MaskAxis.FREQUENCY, rng)
    return MaskPlan(tuple(intervals), (n, m))


# ----------------- Adaptive scheme -----------------
def adaptive_time_width(f: float, m: int) -> float:
    """Time-mask width in frames at frequency ``f``: 2 * max(m, 200 / (20 + f))."""
    return 2.0 * max(m, 200.0 / (20.0 + f))


def adaptive_freq_width(f: float) -> int:
    """Frequency-mask height in rows when the mask starts at frequency ``f``."""
    return max(1, int(np.floor(4.9 * f / 250.0)))


def adaptive_row_widths(foi_hz: Sequence[float], m: int) -> Tuple[int, ...]:
    return tuple(max(1, _round_half_up(adaptive_time_width(f, m))) for f in foi_hz)


def sample_adaptive_masks(
    spec_shape: Tuple[int, int],
    foi_hz: Sequence[float],
    params: MaskParams = MaskParams(),
    rng_seed=0,
    min_width: Optional[int] = None,
) -> List[MaskInterval]:
    """
    Adaptive-scheme intervals: wedge-shaped time masks, wider at low
    frequencies, and frequency masks whose height grows with the start row's
    frequency.

    Each time wedge occupies a box as wide as its widest row; every row's
    extent is centered in the box. A wedge near the right edge is moved
    inward whole and cut only when the previous wedge leaves no room.
    ``min_width`` forces the per-example minimum width m, otherwise it is
    drawn from {1, 2}.
    """
    n, m_cols = spec_shape
    if len(foi_hz) != n:
        raise ParameterError(f"{len(foi_hz)} frequencies given for {n} rows")
    rng = np.random.default_rng(rng_seed)
    m = int(rng.integers(1, 3)) if min_width is None else int(min_width)
    if m not in (1, 2):
        raise ParameterError(f"adaptive minimum width must be 1 or 2, got {m}")
    full_widths = adaptive_row_widths(foi_hz, m)
    box = max(full_widths)

    def clipped(width: int) -> Tuple[int, ...]:
        return tuple(min(w, width) for w in full_widths)

    time_spans = _scan(rng, m_cols, params, lambda _: box, shift_tail=True)
    intervals = _build_intervals(rng, MaskAxis.TIME, m_cols, time_spans, params, clipped)
    freq_spans = _scan(rng, n, params, lambda r: adaptive_freq_width(foi_hz[r]))
    intervals += _build_intervals(rng, MaskAxis.FREQUENCY, n, freq_spans, params)
    return intervals


def sample_mask_plan(
    shape: Tuple[int, int],
    params: MaskParams,
    rng_seed,
    scheme: str = "static",
    foi_hz: Optional[Sequence[float]] = None,
) -> MaskPlan:
    if scheme == "static":
        return sample_static_plan(shape, params, rng_seed)
    if scheme == "adaptive":
        if foi_hz is None:
            raise ParameterError("the adaptive scheme needs the frequency axis")
        return MaskPlan(tuple(sample_adaptive_masks(shape, foi_hz, params, rng_seed)), tuple(shape))
    raise ParameterError(f"unknown mask scheme {scheme!r}")


# ----------------- Application -----------------
def _check_bounds(interval: MaskInterval, shape: Tuple[int, int]) -> int:
    n, m = shape
    length = m if interval.axis is MaskAxis.TIME else n
    if interval.stop > length:
        raise RejectedPlanError(f"{interval.axis.value} interval [{interval.start}, {interval.stop}) exceeds {length}")
    if interval.row_widths is not None and len(interval.row_widths) != n:
        raise RejectedPlanError(f"interval has {len(interval.row_widths)} row widths for {n} rows")
    return length


def apply_mask_values(values: np.ndarray, plan: MaskPlan, rng_seed=0) -> MaskedSpectrogram:
    """
    Array form of :func:`apply_masks`.

    Replace intervals copy from the original values, and source cells that
    fall inside the plan's masked set (from any axis) are written as 0, so
    no masked value ever reaches the augmented view. A replace interval
    without a source gets one drawn here from ``rng_seed``.
    """
    values = np.asarray(values)
    if tuple(values.shape) != tuple(plan.shape):
        raise RejectedPlanError(f"plan shape {plan.shape} does not match values {values.shape}")
    augmented = values.copy()
    rng = None
    for interval in plan.intervals:
        length = _check_bounds(interval, values.shape)
        target = interval.footprint(values.shape)
        if interval.action is MaskAction.KEEP:
            continue
        if interval.action is MaskAction.ZERO:
            augmented[target] = 0.0
            continue
        source = interval.replace_source
        if source is None:
            rng = rng if rng is not None else np.random.default_rng(rng_seed)
            spans = [(i.start, i.width, i.action) for i in plan.on_axis(interval.axis)]
            source = _resolve_source(rng, length, interval.width, spans, MaskParams().replace_retries)
            if source is None:
                augmented[target] = 0.0
                continue
        if source < 0 or source + interval.width > length:
            raise RejectedPlanError(f"replace source {source} falls outside the axis")
        if source < interval.stop and interval.start < source + interval.width:
            raise RejectedPlanError(f"replace source {source} overlaps its target interval at {interval.start}")
        cells = interval.footprint(values.shape, offset=source - interval.start)
        augmented[target] = np.where(plan.masked_set[cells], 0.0, values[cells])
    return MaskedSpectrogram(augmented, plan.masked_set.copy(), plan)


def apply_masks(spec: Spectrogram, plan: MaskPlan, rng_seed=0) -> MaskedSpectrogram:
    """
    Produce the augmented view: zero intervals become 0, replace intervals
    take an equal-footprint slice from their source, keep intervals stay
    untouched. The masked set M includes keep intervals.
    """
    return apply_mask_values(spec.values, plan, rng_seed)
