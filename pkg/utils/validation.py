"""
Input validation utilities for the distributed MAC toolkit

Validators inspect channel and ensemble descriptions (as parsed JSON/YAML) or
constructed models and return ``{'valid': bool, 'errors': [...]}`` results
instead of raising, so the CLI can report every problem at once.
"""

import math
from typing import Any, Dict, List, Optional

import numpy as np
from jsonschema import Draft7Validator

from config import Config

CHANNEL_SCHEMA: Dict[str, Any] = {
    'type': 'object',
    'required': ['K', 'input_alphabets', 'output_alphabet', 'transition'],
    'properties': {
        'K': {'type': 'integer', 'minimum': 1, 'maximum': Config.MAX_USERS},
        'input_alphabets': {
            'type': 'array', 'minItems': 1,
            'items': {'type': 'integer', 'minimum': 1},
        },
        'output_alphabet': {'type': 'integer', 'minimum': 1},
        'interferer_options': {
            'type': 'array', 'minItems': 1, 'items': {'type': 'string'},
        },
        'transition': {
            'type': 'array',
            'items': {'type': 'array', 'items': {'type': 'number'}},
        },
    },
}

CODE_OPTION_SCHEMA: Dict[str, Any] = {
    'type': 'object',
    'required': ['input_dist'],
    'properties': {
        'rate_nats': {'type': 'number', 'minimum': 0},
        'rate': {'type': 'number', 'minimum': 0},
        'input_dist': {'type': 'array', 'minItems': 1, 'items': {'type': 'number'}},
    },
}

ENSEMBLE_SCHEMA: Dict[str, Any] = {
    'type': 'object',
    'required': ['users'],
    'properties': {
        'users': {
            'type': 'array', 'minItems': 1,
            'items': {'type': 'array', 'minItems': 1, 'items': CODE_OPTION_SCHEMA},
        },
        'interferer_options': {
            'type': 'array', 'minItems': 1, 'items': {'type': 'string'},
        },
    },
}

VECTOR_SCHEMA: Dict[str, Any] = {
    'oneOf': [
        {'type': 'array', 'items': {'type': 'integer', 'minimum': 0}},
        {
            'type': 'object',
            'required': ['options'],
            'properties': {
                'options': {'type': 'array', 'items': {'type': 'integer', 'minimum': 0}},
                'interferer': {'type': 'integer', 'minimum': 0},
            },
        },
    ],
}

VECTOR_LIST_SCHEMA: Dict[str, Any] = {'type': 'array', 'items': VECTOR_SCHEMA}


def _schema_errors(schema: Dict[str, Any], data: Any) -> List[str]:
    validator = Draft7Validator(schema)
    errors = []
    for error in sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path)):
        location = '/'.join(str(p) for p in error.absolute_path) or '<root>'
        errors.append(f"{location}: {error.message}")
    return errors


class ChannelValidator:
    """Validate channel descriptions and channel models"""

    TOLERANCE = Config.PROBABILITY_TOLERANCE
    MAX_REPORTED_ROWS = Config.MAX_REPORTED_ROWS

    @classmethod
    def validate_description(cls, data: Any) -> Dict[str, Any]:
        """Validate a parsed channel description"""
        result: Dict[str, Any] = {'valid': True, 'errors': [], 'violations': []}

        schema_errors = _schema_errors(CHANNEL_SCHEMA, data)
        if schema_errors:
            result['valid'] = False
            result['errors'].extend(schema_errors)
            return result

        sizes = list(data['input_alphabets'])
        if len(sizes) != data['K']:
            result['valid'] = False
            result['errors'].append(
                f"input_alphabets has {len(sizes)} entries but K={data['K']}"
            )
            return result

        num_options = len(data.get('interferer_options') or ['none'])
        expected_rows = num_options * math.prod(sizes)
        rows = data['transition']
        if len(rows) != expected_rows:
            result['valid'] = False
            result['errors'].append(
                f"dense tensor required: expected {expected_rows} rows "
                f"(g0, x) in row-major order, got {len(rows)}"
            )
            return result

        width = data['output_alphabet']
        bad_width = [i for i, row in enumerate(rows) if len(row) != width]
        if bad_width:
            result['valid'] = False
            result['errors'].append(
                f"dense tensor required: rows {bad_width[:cls.MAX_REPORTED_ROWS]} "
                f"do not have {width} entries"
            )
            return result

        tensor = np.array(rows, dtype=float).reshape([num_options] + sizes + [width])
        return cls._check_stochastic(tensor, result)

    @classmethod
    def validate_channel(cls, model: Any) -> Dict[str, Any]:
        """Validate a constructed ChannelModel"""
        result: Dict[str, Any] = {'valid': True, 'errors': [], 'violations': []}
        return cls._check_stochastic(np.asarray(model.transition, dtype=float), result)

    @classmethod
    def _check_stochastic(cls, tensor: np.ndarray, result: Dict[str, Any]) -> Dict[str, Any]:
        index_shape = tensor.shape[:-1]
        rows = tensor.reshape(-1, tensor.shape[-1])
        sums = rows.sum(axis=1)
        minima = rows.min(axis=1)
        bad = np.flatnonzero((np.abs(sums - 1.0) > cls.TOLERANCE) | (minima < 0)
                             | ~np.isfinite(sums))

        if bad.size:
            result['valid'] = False
            result['errors'].append(f"{bad.size} row(s) are not probability vectors")
        for index in bad[:cls.MAX_REPORTED_ROWS]:
            coordinates = np.unravel_index(int(index), index_shape)
            g0, x = int(coordinates[0]), tuple(int(v) for v in coordinates[1:])
            row_sum = float(sums[index])
            problems = []
            if abs(row_sum - 1.0) > cls.TOLERANCE or not math.isfinite(row_sum):
                problems.append(f"row sum {row_sum:.12g}")
            if minima[index] < 0:
                problems.append(f"negative entry {float(minima[index]):.12g}")
            result['violations'].append({
                'row': int(index), 'g0': g0, 'x': list(x), 'sum': row_sum,
            })
            result['errors'].append(f"row {int(index)} (g0={g0}, x={x}): " + ", ".join(problems))
        return result


class EnsembleValidator:
    """Validate code ensemble descriptions against a channel"""

    TOLERANCE = Config.PROBABILITY_TOLERANCE

    @classmethod
    def validate_description(cls, data: Any, channel: Optional[Any] = None) -> Dict[str, Any]:
        result: Dict[str, Any] = {'valid': True, 'errors': []}

        schema_errors = _schema_errors(ENSEMBLE_SCHEMA, data)
        if schema_errors:
            result['valid'] = False
            result['errors'].extend(schema_errors)
            return result

        users = data['users']
        if channel is not None and len(users) != channel.num_users:
            result['valid'] = False
            result['errors'].append(
                f"ensemble lists {len(users)} user(s), channel has K={channel.num_users}"
            )
            return result

        for k, options in enumerate(users, start=1):
            for j, option in enumerate(options):
                dist = np.asarray(option['input_dist'], dtype=float)
                if channel is not None and dist.size != channel.input_alphabet_sizes[k - 1]:
                    result['valid'] = False
                    result['errors'].append(
                        f"user {k} option {j}: input_dist has {dist.size} entries, "
                        f"alphabet size is {channel.input_alphabet_sizes[k - 1]}"
                    )
                if dist.size and (dist.min() < 0 or abs(dist.sum() - 1.0) > cls.TOLERANCE):
                    result['valid'] = False
                    result['errors'].append(
                        f"user {k} option {j}: input_dist is not a probability vector "
                        f"(sum {dist.sum():.12g})"
                    )

        labels = data.get('interferer_options')
        if labels is not None and channel is not None:
            unknown = [label for label in labels if label not in channel.interferer_options]
            if unknown:
                result['valid'] = False
                result['errors'].append(f"unknown interferer option label(s): {unknown}")
        return result


class VectorListValidator:
    """Validate region / margin vector lists"""

    @classmethod
    def validate_description(cls, data: Any) -> Dict[str, Any]:
        errors = _schema_errors(VECTOR_LIST_SCHEMA, data)
        return {'valid': not errors, 'errors': errors}
