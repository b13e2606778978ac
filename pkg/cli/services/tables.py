"""
Column tables (``{column name: values}``) rendered as CSV.

Floats are written with ``repr`` so that identical inputs give identical
bytes and values round-trip exactly.
"""
import enum
from decimal import Decimal

import numpy as np

from core.exceptions import PreconditionError
from ingest.services.csv_io import format_btc, render_csv


def format_cell(value):
    if value is None:
        return ''
    if isinstance(value, enum.Enum):
        return str(value.value)
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, Decimal):
        return format_btc(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def table_length(table):
    lengths = {name: len(values) for name, values in table.items()}
    if len(set(lengths.values())) > 1:
        raise PreconditionError(f"table columns differ in length: {lengths}")
    return next(iter(lengths.values()), 0)


def render_table(table) -> str:
    length = table_length(table)
    columns = list(table)
    rows = (
        [format_cell(table[name][i]) for name in columns]
        for i in range(length)
    )
    return render_csv(columns, rows)


def rows_to_table(rows, columns):
    """
    Turn a list of row dicts into a column table with the given column order.
    """
    return {name: [row.get(name) for row in rows] for name in columns}
