"""
Error hierarchy shared by every chainpulse app.

Each error carries a short machine-readable ``code`` next to its human
message; the CLI prints both on a single line.
"""


class ChainpulseError(Exception):
    default_detail = 'Pipeline error.'
    default_code = 'error'

    def __init__(self, detail=None, code=None):
        self.detail = detail if detail is not None else self.default_detail
        self.code = code if code is not None else self.default_code
        super().__init__(self.detail)

    def __str__(self):
        return str(self.detail)


class EmptySeriesError(ChainpulseError):
    default_detail = 'Series has too few records.'
    default_code = 'empty_series'


class SchemaError(ChainpulseError):
    default_detail = 'Record violates the dataset schema.'
    default_code = 'schema_error'


class HeaderMismatchError(SchemaError):
    default_detail = 'CSV header does not match the expected schema.'
    default_code = 'header_mismatch'

    def __init__(self, expected, found):
        self.expected = list(expected)
        self.found = list(found)
        super().__init__(
            f"expected header {','.join(self.expected)} but found {','.join(self.found)}"
        )


class ParseError(SchemaError):
    default_detail = 'Unparseable cell.'
    default_code = 'parse_error'

    def __init__(self, row, column, reason):
        self.row = row
        self.column = column
        super().__init__(f"row {row}, column {column}: {reason}")


class DuplicateHeightError(SchemaError):
    default_detail = 'Duplicate block height.'
    default_code = 'duplicate_height'


class PreconditionError(ChainpulseError):
    default_detail = 'Operation precondition violated.'
    default_code = 'precondition_failed'


class UnknownLabelError(PreconditionError):
    default_detail = 'Label is not known to the model.'
    default_code = 'unknown_label'


class BoostingError(ChainpulseError):
    default_detail = 'Every boosting round was discarded.'
    default_code = 'weak_learner_failure'


class PlotColumnError(PreconditionError):
    default_detail = 'Table columns do not match the plot kind.'
    default_code = 'plot_columns'


class NodeUnreachableError(ChainpulseError):
    default_detail = 'Bitcoin node is unreachable.'
    default_code = 'node_unreachable'


class NodeAuthError(ChainpulseError):
    default_detail = 'Bitcoin node rejected the RPC credentials.'
    default_code = 'node_auth_failed'


class HeightBeyondTipError(PreconditionError):
    default_detail = 'Requested height is beyond the node tip.'
    default_code = 'height_beyond_tip'

    def __init__(self, height, tip):
        self.height = height
        self.tip = tip
        super().__init__(f"height {height} is beyond the node tip {tip}")
