"""
File operations for inputs and result artifacts

This module reads channel, ensemble, vector-list, weight and policy documents
(JSON or YAML) and writes byte-stable JSON/YAML/CSV artifacts, returning the
sha256 digest of everything it writes so runs can be recorded in manifests.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd
import yaml
from cachetools import LRUCache

from config import Config
from models.channel_models import ChannelModel
from models.code_models import (
    CodeEnsembleVector, CodeIndexVector, RateUnit, WeightAssignment, vectors_from_list,
)
from models.simulation_models import ThresholdPolicy
from utils.exceptions import DmacError, DomainError, InputFormatError, WeightError
from utils.helpers import calculate_file_hash, calculate_text_hash, canonical_json
from utils.validation import VectorListValidator

logger = logging.getLogger(__name__)

CSV_SIGNIFICANT_DIGITS = Config.CSV_SIGNIFICANT_DIGITS
JSON_SUFFIXES = ('.json',)
YAML_SUFFIXES = ('.yaml', '.yml')


def csv_text(frame: pd.DataFrame, digits: int = CSV_SIGNIFICANT_DIGITS) -> str:
    """CSV text with a fixed number of significant digits and '\\n' line ends"""
    return frame.to_csv(index=False, float_format=f'%.{digits}g', lineterminator='\n')


class FileManager:
    """Write result artifacts below a base directory"""

    def __init__(self, base_directory: Optional[Union[str, Path]] = None):
        self.base_directory = Path(base_directory) if base_directory else Path.cwd()

    def resolve(self, filename: Union[str, Path]) -> Path:
        path = Path(filename)
        return path if path.is_absolute() else self.base_directory / path

    def ensure_directory_exists(self, directory: Union[str, Path]) -> None:
        try:
            Path(directory).mkdir(parents=True, exist_ok=True)
        except OSError as e:
            logger.error(f"Error creating directory {directory}: {e}")
            raise DmacError(f"cannot create directory {directory}: {e}") from e

    def save_text(self, text: str, filename: Union[str, Path]) -> str:
        """Write UTF-8 text and return its sha256 digest"""
        filepath = self.resolve(filename)
        self.ensure_directory_exists(filepath.parent)
        try:
            with open(filepath, 'w', encoding='utf-8', newline='\n') as f:
                f.write(text)
        except OSError as e:
            logger.error(f"Error writing {filepath}: {e}")
            raise DmacError(f"cannot write {filepath}: {e}") from e
        logger.debug(f"Wrote {filepath} ({len(text)} characters)")
        return calculate_text_hash(text)

    def save_json(self, data: Any, filename: Union[str, Path]) -> str:
        return self.save_text(canonical_json(data), filename)

    def save_yaml(self, data: Any, filename: Union[str, Path]) -> str:
        text = yaml.safe_dump(data, sort_keys=True, default_flow_style=False, allow_unicode=True)
        return self.save_text(text, filename)

    def save_csv(self, data: Union[pd.DataFrame, Sequence[Mapping[str, Any]]],
                 filename: Union[str, Path], digits: int = CSV_SIGNIFICANT_DIGITS) -> str:
        frame = data if isinstance(data, pd.DataFrame) else pd.DataFrame(list(data))
        return self.save_text(csv_text(frame, digits), filename)

    def save(self, data: Any, filename: Union[str, Path]) -> str:
        """Dispatch on the file extension (.json, .yaml/.yml, .csv)"""
        suffix = Path(filename).suffix.lower()
        if suffix in YAML_SUFFIXES:
            return self.save_yaml(data, filename)
        if suffix == '.csv':
            return self.save_csv(data, filename)
        return self.save_json(data, filename)

    def file_digest(self, filename: Union[str, Path]) -> str:
        return calculate_file_hash(str(self.resolve(filename)))


class InputLoader:
    """Load and cache input documents, turning syntax errors into InputFormatError"""

    def __init__(self, base_directory: Optional[Union[str, Path]] = None, use_cache: bool = True,
                 cache_size: int = Config.CACHE_SIZE):
        self.base_directory = Path(base_directory) if base_directory else None
        self.use_cache = use_cache
        self._document_cache: LRUCache = LRUCache(maxsize=cache_size)

    def resolve(self, filename: Union[str, Path]) -> Path:
        path = Path(filename)
        if self.base_directory is not None and not path.is_absolute():
            path = self.base_directory / path
        return path

    @staticmethod
    def parse_text(text: str, format_type: str = 'json', source: str = '<input>') -> Any:
        """Parse JSON or YAML text; format_type is 'json' or 'yaml'"""
        if format_type == 'json':
            try:
                return json.loads(text)
            except json.JSONDecodeError as e:
                raise InputFormatError(f"malformed JSON in {source}: {e.msg}", e.lineno, e.colno) from e
        if format_type == 'yaml':
            try:
                return yaml.safe_load(text)
            except yaml.YAMLError as e:
                mark = getattr(e, 'problem_mark', None)
                problem = getattr(e, 'problem', None) or str(e)
                if mark is not None:
                    raise InputFormatError(
                        f"malformed YAML in {source}: {problem}", mark.line + 1, mark.column + 1
                    ) from e
                raise InputFormatError(f"malformed YAML in {source}: {problem}") from e
        raise InputFormatError(f"unsupported input format {format_type!r} for {source}")

    def load_document(self, filename: Union[str, Path]) -> Any:
        """Read a .json/.yaml/.yml document (anything else is parsed as JSON)"""
        path = self.resolve(filename)
        try:
            stamp = path.stat().st_mtime_ns
            key = (str(path.resolve()), stamp)
            if self.use_cache and key in self._document_cache:
                return self._document_cache[key]
            text = path.read_text(encoding='utf-8')
        except OSError as e:
            raise InputFormatError(f"cannot read input file {path}: {e.strerror or e}") from e
        except UnicodeDecodeError as e:
            raise InputFormatError(f"input file {path} is not UTF-8 text") from e

        format_type = 'yaml' if path.suffix.lower() in YAML_SUFFIXES else 'json'
        document = self.parse_text(text, format_type, str(path))
        if self.use_cache:
            self._document_cache[key] = document
        logger.debug(f"Loaded {format_type} document {path}")
        return document

    def load_channel(self, filename: Union[str, Path]) -> ChannelModel:
        return ChannelModel.from_dict(self._require_mapping(filename, 'channel'))

    def load_ensemble(self, filename: Union[str, Path], channel: Optional[ChannelModel] = None,
                      units: RateUnit = RateUnit.NATS) -> CodeEnsembleVector:
        return CodeEnsembleVector.from_dict(self._require_mapping(filename, 'ensemble'), channel, units)

    def load_vectors(self, filename: Union[str, Path]) -> List[CodeIndexVector]:
        """Region or margin list: a JSON array, or an object with a 'vectors' array"""
        document = self.load_document(filename)
        if isinstance(document, Mapping):
            document = document.get('vectors', [])
        result = VectorListValidator.validate_description(document)
        if not result['valid']:
            raise DomainError(f"invalid vector list in {filename}: " + "; ".join(result['errors']))
        return vectors_from_list(document)

    def load_weights(self, filename: Union[str, Path], blocklength: Optional[int] = None) -> WeightAssignment:
        data = self._require_mapping(filename, 'weights')
        try:
            weights = WeightAssignment.from_dict(data)
        except (KeyError, TypeError) as e:
            raise WeightError(f"weights file {filename} needs 'N' and a 'weights' list: {e}") from e
        if blocklength is not None and weights.blocklength != blocklength:
            raise WeightError(f"weights in {filename} are for N={weights.blocklength}, run uses N={blocklength}")
        return weights

    def load_policy(self, filename: Union[str, Path]) -> ThresholdPolicy:
        return ThresholdPolicy.from_dict(self._require_mapping(filename, 'policy'))

    def reload(self, filename: Union[str, Path]) -> Any:
        self.clear_cache()
        return self.load_document(filename)

    def clear_cache(self) -> None:
        self._document_cache.clear()

    def _require_mapping(self, filename: Union[str, Path], what: str) -> Dict[str, Any]:
        document = self.load_document(filename)
        if not isinstance(document, Mapping):
            raise InputFormatError(f"{what} file {filename} must contain an object at the top level")
        return dict(document)


@dataclass(frozen=True)
class GridSpec:
    """Evenly spaced sweep points along one named axis"""
    axis: str
    start: float
    stop: float
    steps: int
    integer: bool = False

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 1:
            raise DomainError(f"grid over {self.axis!r} needs at least one step, got {self.steps}")
        if not (np.isfinite(self.start) and np.isfinite(self.stop)):
            raise DomainError(f"grid over {self.axis!r} has non-finite bounds")

    def points(self) -> List[Union[float, int]]:
        if self.steps == 1:
            values = [float(self.start)]
        else:
            values = [float(v) for v in np.linspace(self.start, self.stop, int(self.steps))]
        if not self.integer:
            return values
        points: List[int] = []
        for value in values:
            n = int(round(value))
            if n not in points:
                points.append(n)
        return points

    @classmethod
    def parse(cls, axis: str, text: str, integer: bool = False) -> 'GridSpec':
        """Parse ``START:STOP:STEPS``"""
        parts = text.split(':')
        if len(parts) != 3:
            raise DomainError(f"grid {text!r} must look like START:STOP:STEPS")
        try:
            start, stop = float(parts[0]), float(parts[1])
            steps = int(parts[2])
        except ValueError:
            raise DomainError(f"grid {text!r} must look like START:STOP:STEPS") from None
        return cls(axis, start, stop, steps, integer)

    def to_dict(self) -> Dict[str, Any]:
        return {'axis': self.axis, 'start': self.start, 'stop': self.stop, 'steps': self.steps}


class DataExporter:
    """Turn sweeps and reports into artifacts"""

    def __init__(self, file_manager: Optional[FileManager] = None,
                 digits: int = CSV_SIGNIFICANT_DIGITS):
        self.file_manager = file_manager or FileManager()
        self.digits = digits

    @staticmethod
    def sweep_frame(grid: GridSpec, evaluator: Callable[[Any], Mapping[str, Any]]) -> pd.DataFrame:
        """One row per grid point; the axis column first, then columns in first-seen order"""
        rows: List[Dict[str, Any]] = []
        columns: List[str] = [grid.axis]
        for value in grid.points():
            row = {grid.axis: value}
            row.update(evaluator(value))
            for name in row:
                if name not in columns:
                    columns.append(name)
            rows.append(row)
        logger.info(f"Sweep over {grid.axis}: {len(rows)} point(s)")
        return pd.DataFrame(rows, columns=columns)

    def sweep_emit(self, grid: GridSpec, evaluator: Callable[[Any], Mapping[str, Any]],
                   filename: Optional[Union[str, Path]] = None) -> str:
        """CSV text of the sweep, also written to ``filename`` when given"""
        text = csv_text(self.sweep_frame(grid, evaluator), self.digits)
        if filename is not None:
            self.file_manager.save_text(text, filename)
        return text

    def export_table(self, rows: Iterable[Mapping[str, Any]], filename: Union[str, Path]) -> str:
        return self.file_manager.save_csv(list(rows), filename, self.digits)

    def export_report(self, report: Mapping[str, Any], filename: Union[str, Path],
                      format_type: str = 'json') -> str:
        if format_type == 'json':
            return self.file_manager.save_json(dict(report), filename)
        if format_type in ('yaml', 'yml'):
            return self.file_manager.save_yaml(dict(report), filename)
        raise DomainError(f"unsupported report format {format_type!r}")
