"""Reading and writing curvature points and reports.

- Dense tensors and curvature points as JSON records
- Verification reports as JSON
- Shrinking-sphere sweeps as CSV tables
"""

from pathlib import Path
from typing import Dict, Type, TypeVar, Union

import numpy as np
import polars as pl
from pydantic import BaseModel

from harnack_verify.core.harnack import CurvaturePoint
from harnack_verify.schemas.data_models import (
    CurvaturePointRecord,
    DenseTensorRecord,
    SphereReport,
)

ReportT = TypeVar("ReportT", bound=BaseModel)

SPHERE_COLUMNS = ["t", "K", "z_min", "z_max", "traceZ", "mt_residual"]


def tensor_to_record(array: np.ndarray) -> DenseTensorRecord:
    """Converts an array with equal axis lengths to its JSON record.

    Raises:
        ValueError: If the axes do not all have the same length.
    """
    array = np.asarray(array, dtype=float)
    if array.ndim and len(set(array.shape)) != 1:
        raise ValueError(f"Every axis must have the same length, got shape {array.shape}")
    n = array.shape[0] if array.ndim else 1
    return DenseTensorRecord(n=n, rank=array.ndim, data=array.reshape(-1).tolist())


def tensor_from_record(record: DenseTensorRecord) -> np.ndarray:
    """Rebuilds the array of a record.

    Raises:
        ValueError: If the data length is not ``n ** rank``.
    """
    expected = record.n**record.rank
    if len(record.data) != expected:
        raise ValueError(
            f"Tensor record of dimension {record.n} and rank {record.rank} needs {expected} entries, "
            f"got {len(record.data)}"
        )
    return np.asarray(record.data, dtype=float).reshape((record.n,) * record.rank)


def point_to_record(pt: CurvaturePoint) -> CurvaturePointRecord:
    return CurvaturePointRecord(
        n=pt.n,
        t=pt.t,
        Rm=tensor_to_record(pt.Rm),
        Rc=tensor_to_record(pt.Rc),
        R=pt.R,
        gradRc=tensor_to_record(pt.gradRc),
        gradRm=tensor_to_record(pt.gradRm),
        lapRc=tensor_to_record(pt.lapRc),
        hessR=tensor_to_record(pt.hessR),
    )


def point_from_record(record: CurvaturePointRecord) -> CurvaturePoint:
    """Rebuilds a curvature point and checks its shapes and contractions.

    Raises:
        ValueError: Wrong shapes or inconsistent contractions.
    """
    arrays = {
        name: tensor_from_record(getattr(record, name))
        for name in ("Rm", "Rc", "gradRc", "gradRm", "lapRc", "hessR")
    }
    ranks = {"Rm": 4, "Rc": 2, "gradRc": 3, "gradRm": 5, "lapRc": 2, "hessR": 2}
    for name, rank in ranks.items():
        if arrays[name].shape != (record.n,) * rank:
            raise ValueError(f"'{name}' must have shape {(record.n,) * rank}, got {arrays[name].shape}")
    pt = CurvaturePoint(n=record.n, t=record.t, R=record.R, **arrays)
    pt.check()
    return pt


def save_curvature_point(pt: CurvaturePoint, output_path: Union[str, Path], indent: int = 2) -> Path:
    """Writes a curvature point as JSON, creating parent directories.

    Raises:
        IOError: If unable to write to the specified path.
    """
    return save_report(point_to_record(pt), output_path, indent)


def load_curvature_point(input_path: Union[str, Path]) -> CurvaturePoint:
    """Loads a curvature point from JSON.

    Raises:
        IOError: If the file does not exist or cannot be read.
        ValueError: If the data is malformed or inconsistent.

    Example:
        pt = load_curvature_point("points/sphere.json")
        print(pt.n, pt.t)
    """
    return point_from_record(load_report(input_path, CurvaturePointRecord))


def save_report(report: BaseModel, output_path: Union[str, Path], indent: int = 2) -> Path:
    """Serializes any report model to a JSON file, creating parent directories.

    Raises:
        IOError: If unable to write to the specified path.
    """
    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)

    try:
        output_path.write_text(report.model_dump_json(indent=indent), encoding="utf-8")
    except Exception as e:
        raise IOError(f"Failed to write JSON to {output_path}: {e}")

    return output_path


def load_report(input_path: Union[str, Path], model: Type[ReportT]) -> ReportT:
    """Loads a report of type ``model`` from JSON.

    Raises:
        IOError: If the file does not exist or cannot be read.
        ValueError: If the data does not validate against ``model``.
    """
    input_path = Path(input_path)

    if not input_path.exists():
        raise IOError(f"File not found: {input_path}")

    try:
        json_data = input_path.read_text(encoding="utf-8")
    except OSError as e:
        raise IOError(f"Failed to read {input_path}: {e}")

    try:
        return model.model_validate_json(json_data)
    except Exception as e:
        raise ValueError(f"Failed to parse {model.__name__} from {input_path}: {e}")


def sphere_frame(report: SphereReport) -> pl.DataFrame:
    """One row per sample with the columns ``t,K,z_min,z_max,traceZ,mt_residual``."""
    return pl.DataFrame(
        {column: [getattr(row, column) for row in report.rows] for column in SPHERE_COLUMNS},
        schema={column: pl.Float64 for column in SPHERE_COLUMNS},
    )


def sphere_csv(report: SphereReport) -> str:
    return sphere_frame(report).write_csv()


def write_sphere_csv(report: SphereReport, output_path: Union[str, Path]) -> Path:
    """Writes the sweep table as CSV.

    Raises:
        IOError: If unable to write to the specified path.
    """
    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)

    try:
        sphere_frame(report).write_csv(output_path)
    except Exception as e:
        raise IOError(f"Failed to write CSV file to {output_path}: {e}")

    return output_path


def get_output_summary(output_paths: Dict[str, Path]) -> str:
    """Human-readable list of written files and their sizes."""
    lines = ["Generated Files:", ""]
    for label, path in output_paths.items():
        if path and path.exists():
            lines.append(f"  {label}: {path.name} ({path.stat().st_size / 1024:.2f} KB)")
    return "\n".join(lines)


__all__ = [
    "SPHERE_COLUMNS",
    "get_output_summary",
    "load_curvature_point",
    "load_report",
    "point_from_record",
    "point_to_record",
    "save_curvature_point",
    "save_report",
    "sphere_csv",
    "sphere_frame",
    "tensor_from_record",
    "tensor_to_record",
    "write_sphere_csv",
]
