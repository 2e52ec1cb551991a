"""Exception hierarchy shared across the package.

Dataset errors map to CLI exit code 2, analysis errors to 3, and the
ValueError subclasses below signal bad arguments (CLI exit code 64).
"""


class LrgError(Exception):
    pass


class DatasetError(LrgError):
    """Problems reading or assembling a dataset directory."""


class MissingFile(DatasetError):
    def __init__(self, path):
        super().__init__(f"required file not found: {path}")
        self.path = path


class MalformedLine(DatasetError):
    def __init__(self, path, line_no, detail):
        super().__init__(f"{path}:{line_no}: {detail}")
        self.path = path
        self.line_no = line_no


class NodeIndexOutOfRange(DatasetError):
    def __init__(self, path, line_no, node_id, n_nodes):
        super().__init__(
            f"{path}:{line_no}: node id {node_id} outside [0, {n_nodes})"
        )
        self.path = path
        self.line_no = line_no
        self.node_id = node_id


class EmptyGraph(DatasetError):
    pass


class AnalysisError(LrgError):
    """Numerical analysis could not produce a result."""


class ConvergenceFailure(AnalysisError):
    pass


class NoPeak(AnalysisError):
    pass


class NegativeTau(LrgError, ValueError):
    pass


class InvalidRange(LrgError, ValueError):
    pass


class DimMismatch(LrgError, ValueError):
    pass


class SlotCountMismatch(LrgError, ValueError):
    pass


class EmptyMask(LrgError, ValueError):
    pass


class PartitionSizeMismatch(LrgError, ValueError):
    pass


class MisalignedTables(LrgError, ValueError):
    pass
