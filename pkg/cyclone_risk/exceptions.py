"""异常定义 - 每类错误对应一个命令行退出码"""
from typing import Optional


class CycloneRiskError(Exception):
    """所有业务异常的基类"""

    exit_code: int = 1

    def to_payload(self) -> dict:
        return {
            "error": type(self).__name__,
            "message": str(self),
            "exit_code": self.exit_code,
        }


class InputError(CycloneRiskError):
    """输入数据或参数错误 (退出码 2)"""

    exit_code = 2


class NumericalError(CycloneRiskError):
    """数值计算失败 (退出码 3)"""

    exit_code = 3


# ---- 输入错误 ----

class Hurdat2ParseError(InputError):
    """HURDAT2 行级解析错误, 带行号和列号"""

    def __init__(self, message: str, line: int, column: Optional[int] = None, source: str = "<hurdat2>"):
        self.line = line
        self.column = column
        self.source = source
        where = f"{source}:{line}" if column is None else f"{source}:{line}:{column}"
        super().__init__(f"{where}: {message}")

    def to_payload(self) -> dict:
        payload = super().to_payload()
        payload.update({"file": self.source, "line": self.line, "column": self.column})
        return payload


class RowCountMismatchError(Hurdat2ParseError):
    """头部声明的行数与实际数据行数不一致"""


class CoordinateError(Hurdat2ParseError):
    """经纬度字段格式错误"""


class MissingCovariateError(InputError):
    pass


class MissingYearError(InputError):
    pass


class DuplicateDamageError(InputError):
    pass


class InconsistentObservationError(InputError):
    pass


class IncompleteObservationError(InputError):
    pass


class InsufficientDataError(InputError):
    pass


class TooShortChainError(InputError):
    pass


class ArtifactMismatchError(InputError):
    """链文件与数据集哈希不匹配"""


class DimensionMismatchError(InputError):
    pass


# ---- 数值错误 ----

class DomainError(NumericalError, ValueError):
    """参数或自变量超出定义域"""


class InvalidParamsError(NumericalError, ValueError):
    pass


class DegenerateSeriesError(NumericalError, ValueError):
    pass


class SamplerError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    def __init__(self, message: str, report: Optional[dict] = None):
        self.report = report or {}
        super().__init__(message)

    def to_payload(self) -> dict:
        payload = super().to_payload()
        payload["report"] = self.report
        return payload
