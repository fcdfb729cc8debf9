# records.py — NDJSON wire formats
"""
One JSON object per line. Every record carries `schema_version` and a `kind`
discriminator; files start with a `header` record holding the producing command
and the fully resolved run configuration.

Floats are written in shortest round-tripping form, so write-then-read is identity.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Annotated, Any, Dict, Iterable, List, Literal, Optional, Sequence, Tuple, Type, TypeVar, Union

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError

from arma import ArmaFit, CountSeries, Direction, RatioReport
from detector import FramePairObservation
from errors import RecordError
from geometry import BoundingBox
from simulator import DenseFrame, GroundTruth

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class _Record(_Model):
    schema_version: Literal[1] = SCHEMA_VERSION


# ─────────────────── record kinds ───────────────────
class DetectionRecord(_Model):
    x_min: float
    y_min: float
    x_max: float
    y_max: float
    confidence: float = 1.0
    class_tag: int = 0
    appearance: Optional[float] = None
    vehicle_id: Optional[int] = None


class HeaderRecord(_Record):
    kind: Literal["header"] = "header"
    command: str
    config: Dict[str, Any] = Field(default_factory=dict)


class FramePairRecord(_Record):
    kind: Literal["frame_pair"] = "frame_pair"
    sample_index: int
    t_k: float
    intra_pair_dt: float
    detections_1: List[DetectionRecord] = Field(default_factory=list)
    detections_2: List[DetectionRecord] = Field(default_factory=list)


class DenseFrameRecord(_Record):
    kind: Literal["dense_frame"] = "dense_frame"
    frame_index: int
    t: float
    detections: List[DetectionRecord] = Field(default_factory=list)


class GroundTruthRecord(_Record):
    kind: Literal["ground_truth"] = "ground_truth"
    n_right: int
    n_wrong: int
    true_ratio: Optional[float] = None
    per_minute_right: List[int] = Field(default_factory=list)
    per_minute_wrong: List[int] = Field(default_factory=list)


class CountsRecord(_Record):
    kind: Literal["counts"] = "counts"
    k: int
    t_k: float
    t_gap: float
    d_r: int
    d_w: int


class ArmaFitRecord(_Model):
    p: int
    q: int
    c: float
    phi: float
    theta: float
    sigma2: float
    log_objective: float
    n_obs: int = 0


class RatioReportRecord(_Record):
    kind: Literal["ratio_report"] = "ratio_report"
    ratio: float
    raw_ratio: float
    sum_r: float
    sum_w: float
    negative_mass_warning: bool = False
    fit_right: Optional[ArmaFitRecord] = None
    fit_wrong: Optional[ArmaFitRecord] = None


class BenchRowRecord(_Record):
    kind: Literal["bench_row"] = "bench_row"
    seed: Optional[int] = None
    method: str
    t_gap: Optional[float] = None
    frames_processed: Optional[int] = None
    wall_time_s: Optional[float] = None
    seconds_per_video_minute: Optional[float] = None
    estimated_ratio: Optional[float] = None
    true_ratio: Optional[float] = None
    abs_error: Optional[float] = None
    # summary rows only
    mean_abs_error: Optional[float] = None
    ensemble_win_fraction: Optional[float] = None
    note: str = ""


Record = Annotated[
    Union[HeaderRecord, FramePairRecord, DenseFrameRecord, GroundTruthRecord,
          CountsRecord, RatioReportRecord, BenchRowRecord],
    Field(discriminator="kind"),
]
_ADAPTER: TypeAdapter = TypeAdapter(Record)

R = TypeVar("R", bound=_Record)


# ─────────────────── file I/O ───────────────────
def dumps(record: _Record) -> str:
    return record.model_dump_json(exclude_none=True)


def parse_line(line: str, lineno: Optional[int] = None) -> _Record:
    try:
        return _ADAPTER.validate_json(line)
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(p) for p in first.get("loc", ()))
        raise RecordError(f"{where or 'record'}: {first.get('msg', 'invalid')}", lineno) from None


def write_records(path: Path | str, records: Iterable[_Record]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(dumps(rec))
            fh.write("\n")
            n += 1
    log.debug("wrote %d records to %s", n, path)
    return n


def read_records(path: Path | str) -> List[_Record]:
    out: List[_Record] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if line.strip():
                out.append(parse_line(line, lineno))
    return out


def split_header(records: Sequence[_Record]) -> Tuple[Optional[HeaderRecord], List[_Record]]:
    if records and isinstance(records[0], HeaderRecord):
        return records[0], list(records[1:])
    return None, list(records)


def only(records: Sequence[_Record], kind: Type[R], path: Any = "input", first_line: int = 1) -> List[R]:
    """All records must be of `kind`; the error names the line, counting from `first_line`."""
    for pos, rec in enumerate(records, start=first_line):
        if not isinstance(rec, kind):
            raise RecordError(f"{path}: expected {kind.model_fields['kind'].default!r} records, "
                              f"found {rec.kind!r}", pos)
    return list(records)


# ─────────────────── domain conversion ───────────────────
def _det(box: BoundingBox, appearance: Optional[float], vehicle_id: Optional[int]) -> DetectionRecord:
    return DetectionRecord(x_min=box.x_min, y_min=box.y_min, x_max=box.x_max, y_max=box.y_max,
                           confidence=box.confidence, class_tag=box.class_tag,
                           appearance=appearance, vehicle_id=vehicle_id)


def _box(d: DetectionRecord) -> BoundingBox:
    return BoundingBox(d.x_min, d.y_min, d.x_max, d.y_max, d.confidence, d.class_tag)


def _pad(values: Sequence[Any], n: int) -> Sequence[Any]:
    return values if values else (None,) * n


def frame_pair_to_record(obs: FramePairObservation) -> FramePairRecord:
    n1, n2 = len(obs.detections_1), len(obs.detections_2)
    return FramePairRecord(
        sample_index=obs.sample_index, t_k=obs.t_k, intra_pair_dt=obs.intra_pair_dt,
        detections_1=[_det(b, a, v) for b, a, v in zip(obs.detections_1, _pad(obs.appearance_1, n1),
                                                       _pad(obs.vehicle_ids_1, n1))],
        detections_2=[_det(b, a, v) for b, a, v in zip(obs.detections_2, _pad(obs.appearance_2, n2),
                                                       _pad(obs.vehicle_ids_2, n2))],
    )


def record_to_frame_pair(rec: FramePairRecord) -> FramePairObservation:
    return FramePairObservation(
        sample_index=rec.sample_index, t_k=rec.t_k, intra_pair_dt=rec.intra_pair_dt,
        detections_1=tuple(_box(d) for d in rec.detections_1),
        detections_2=tuple(_box(d) for d in rec.detections_2),
        vehicle_ids_1=tuple(d.vehicle_id for d in rec.detections_1),
        vehicle_ids_2=tuple(d.vehicle_id for d in rec.detections_2),
        appearance_1=tuple(d.appearance for d in rec.detections_1),
        appearance_2=tuple(d.appearance for d in rec.detections_2),
    )


def dense_frame_to_record(frame: DenseFrame) -> DenseFrameRecord:
    ids = _pad(frame.vehicle_ids, len(frame.detections))
    return DenseFrameRecord(frame_index=frame.frame_index, t=frame.t,
                            detections=[_det(b, None, v) for b, v in zip(frame.detections, ids)])


def record_to_dense_frame(rec: DenseFrameRecord) -> DenseFrame:
    return DenseFrame(rec.frame_index, rec.t, tuple(_box(d) for d in rec.detections),
                      tuple(d.vehicle_id for d in rec.detections))


def ground_truth_to_record(gt: GroundTruth) -> GroundTruthRecord:
    return GroundTruthRecord(n_right=gt.n_right, n_wrong=gt.n_wrong, true_ratio=gt.true_ratio,
                             per_minute_right=list(gt.per_minute_right),
                             per_minute_wrong=list(gt.per_minute_wrong))


def record_to_ground_truth(rec: GroundTruthRecord) -> GroundTruth:
    return GroundTruth(rec.n_right, rec.n_wrong, tuple(rec.per_minute_right), tuple(rec.per_minute_wrong))


def series_to_records(right: CountSeries, wrong: CountSeries) -> List[CountsRecord]:
    if len(right) != len(wrong):
        raise RecordError(f"count series not aligned: {len(right)} vs {len(wrong)}")
    return [CountsRecord(k=k, t_k=k * right.t_gap, t_gap=right.t_gap, d_r=r, d_w=w)
            for k, (r, w) in enumerate(zip(right.values, wrong.values))]


def records_to_series(
    recs: Sequence[CountsRecord], t_gap: Optional[float] = None, first_line: int = 1
) -> Tuple[CountSeries, CountSeries]:
    """
    Rebuild (right, wrong); records must be contiguous k = 0..K-1 with one t_gap.
    `first_line` is the file line of recs[0], for error messages.
    """
    for pos, rec in enumerate(recs):
        line = first_line + pos
        if rec.k != pos:
            raise RecordError(f"expected k={pos}, got k={rec.k}", line)
        if recs[0].t_gap != rec.t_gap:
            raise RecordError(f"t_gap changes from {recs[0].t_gap} to {rec.t_gap}", line)
        if rec.d_r < 0 or rec.d_w < 0:
            raise RecordError("counts must be non-negative", line)
    gap = recs[0].t_gap if recs else (t_gap or 2.0)
    return (CountSeries.of([r.d_r for r in recs], gap, Direction.RIGHT_WAY),
            CountSeries.of([r.d_w for r in recs], gap, Direction.WRONG_WAY))


def _fit_record(fit: Optional[ArmaFit]) -> Optional[ArmaFitRecord]:
    if fit is None:
        return None
    return ArmaFitRecord(p=fit.p, q=fit.q, c=fit.c, phi=fit.phi, theta=fit.theta, sigma2=fit.sigma2,
                         log_objective=fit.log_objective, n_obs=fit.n_obs)


def _fit(rec: Optional[ArmaFitRecord]) -> Optional[ArmaFit]:
    return None if rec is None else ArmaFit(**rec.model_dump())


def ratio_report_to_record(report: RatioReport) -> RatioReportRecord:
    return RatioReportRecord(ratio=report.ratio, raw_ratio=report.raw_ratio, sum_r=report.sum_r,
                             sum_w=report.sum_w, negative_mass_warning=report.negative_mass_warning,
                             fit_right=_fit_record(report.fit_right), fit_wrong=_fit_record(report.fit_wrong))


def record_to_ratio_report(rec: RatioReportRecord) -> RatioReport:
    return RatioReport(ratio=rec.ratio, sum_r=rec.sum_r, sum_w=rec.sum_w,
                       negative_mass_warning=rec.negative_mass_warning, raw_ratio=rec.raw_ratio,
                       fit_right=_fit(rec.fit_right), fit_wrong=_fit(rec.fit_wrong))
