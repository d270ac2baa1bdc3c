import io
import logging
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, List, Optional, TextIO, Tuple, Union

from ..exceptions import CoordinateError, Hurdat2ParseError, RowCountMismatchError

logger = logging.getLogger(__name__)

MISSING = -999
N_WIND_RADII = 12


@dataclass(frozen=True)
class StormHeader:
    """头部行: AL092017, HARVEY, 61,"""

    storm_id: str
    name: str
    expected_rows: int
    line_number: int = 0

    @property
    def basin(self) -> str:
        return self.storm_id[:2]

    @property
    def storm_number(self) -> int:
        return int(self.storm_id[2:4])

    @property
    def year(self) -> int:
        return int(self.storm_id[4:8])


@dataclass(frozen=True)
class TrackPoint:
    """六小时观测点; 缺测值 (-999) 为 None"""

    timestamp: datetime
    record_identifier: str
    system_status: str
    latitude: float
    longitude: float
    max_wind: Optional[int]
    min_pressure: Optional[int]
    wind_radii: Tuple[Optional[int], ...] = field(default_factory=tuple)
    radius_max_wind: Optional[int] = None


StormTrack = Tuple[StormHeader, List[TrackPoint]]


class Hurdat2Parser:
    """
    HURDAT2 best-track 文本解析器
    格式:
    - 头部: AL<nn><yyyy>, <NAME>, <rows>,
    - 数据: YYYYMMDD, HHMM, <id>, <status>, <lat>N, <lon>W, <wind>, <pressure>, <12 个风圈半径>[, <rmw>]
    """

    HEADER_PATTERN = re.compile(r'^[A-Z]{2}\d{6}$')
    COORD_PATTERN = re.compile(r'^(\d{1,3}(?:\.\d+)?)([NSEW])$')

    def __init__(self, source: str = "<hurdat2>"):
        self.source = source

    def parse_file(self, path: Union[str, Path]) -> List[StormTrack]:
        self.source = str(path)
        with open(path, "r", encoding="ascii") as f:
            return self.parse(f)

    def parse_text(self, text: str) -> List[StormTrack]:
        return self.parse(io.StringIO(text))

    def parse(self, stream: TextIO) -> List[StormTrack]:
        """单次遍历; 头部声明的行数必须与实际数据行一致"""
        storms: List[StormTrack] = []
        header: Optional[StormHeader] = None
        points: List[TrackPoint] = []

        line_number = 0
        for raw in stream:
            line_number += 1
            line = raw.rstrip("\r\n")
            if not line.strip():
                continue

            fields = self._split(line)
            if header is None or len(points) == header.expected_rows:
                if header is not None:
                    storms.append((header, points))
                if not self._is_header(fields):
                    if header is not None and self._looks_like_data(fields):
                        raise RowCountMismatchError(
                            f"{header.storm_id} 声明 {header.expected_rows} 行, 但实际数据行更多",
                            line_number, 1, self.source,
                        )
                    raise Hurdat2ParseError("应为头部行", line_number, 1, self.source)
                header = self._parse_header(fields, line_number)
                points = []
                continue

            if self._is_header(fields):
                raise RowCountMismatchError(
                    f"{header.storm_id} 声明 {header.expected_rows} 行, 实际只有 {len(points)} 行",
                    line_number, 1, self.source,
                )
            points.append(self._parse_point(fields, line_number))

        if header is not None:
            if len(points) != header.expected_rows:
                raise RowCountMismatchError(
                    f"{header.storm_id} 声明 {header.expected_rows} 行, 文件结束时只有 {len(points)} 行",
                    line_number, None, self.source,
                )
            storms.append((header, points))

        logger.info(f"解析完成: {len(storms)} 个风暴, 来源 {self.source}")
        return storms

    def _split(self, line: str) -> List[Tuple[str, int]]:
        """按逗号切分, 保留每个字段的起始列号 (从 1 开始)"""
        fields = []
        start = 0
        for part in line.split(","):
            stripped = part.strip()
            column = start + (len(part) - len(part.lstrip())) + 1
            fields.append((stripped, column))
            start += len(part) + 1
        # 行尾逗号产生的空字段
        while fields and fields[-1][0] == "":
            fields.pop()
        return fields

    def _is_header(self, fields) -> bool:
        return len(fields) == 3 and bool(self.HEADER_PATTERN.match(fields[0][0]))

    def _looks_like_data(self, fields) -> bool:
        return len(fields) >= 8 and fields[0][0].isdigit() and len(fields[0][0]) == 8

    def _parse_header(self, fields, line_number: int) -> StormHeader:
        count_text, count_col = fields[2]
        try:
            count = int(count_text)
        except ValueError:
            raise Hurdat2ParseError(f"行数字段无效: {count_text!r}", line_number, count_col, self.source)
        if count < 0:
            raise Hurdat2ParseError(f"行数不能为负: {count}", line_number, count_col, self.source)
        return StormHeader(
            storm_id=fields[0][0],
            name=fields[1][0],
            expected_rows=count,
            line_number=line_number,
        )

    def _parse_point(self, fields, line_number: int) -> TrackPoint:
        if len(fields) < 8:
            raise Hurdat2ParseError(
                f"数据行字段不足: {len(fields)} < 8", line_number, fields[-1][1] if fields else 1, self.source
            )

        (date_text, date_col), (time_text, _) = fields[0], fields[1]
        try:
            timestamp = datetime.strptime(date_text + time_text.zfill(4), "%Y%m%d%H%M").replace(
                tzinfo=timezone.utc
            )
        except ValueError:
            raise Hurdat2ParseError(
                f"日期时间无效: {date_text} {time_text}", line_number, date_col, self.source
            )

        latitude = self._parse_coordinate(fields[4], "NS", 90.0, line_number)
        longitude = self._parse_coordinate(fields[5], "EW", 180.0, line_number)

        radii = tuple(self._parse_int(f, line_number) for f in fields[8: 8 + N_WIND_RADII])
        rmw = self._parse_int(fields[8 + N_WIND_RADII], line_number) if len(fields) > 8 + N_WIND_RADII else None

        return TrackPoint(
            timestamp=timestamp,
            record_identifier=fields[2][0],
            system_status=fields[3][0],
            latitude=latitude,
            longitude=longitude,
            max_wind=self._parse_int(fields[6], line_number),
            min_pressure=self._parse_int(fields[7], line_number),
            wind_radii=radii,
            radius_max_wind=rmw,
        )

    def _parse_coordinate(self, field_, hemispheres: str, limit: float, line_number: int) -> float:
        """28.0N -> 28.0, 94.4W -> -94.4"""
        text, column = field_
        match = self.COORD_PATTERN.match(text)
        if not match or match.group(2) not in hemispheres:
            raise CoordinateError(f"坐标格式错误: {text!r}", line_number, column, self.source)
        value = float(match.group(1))
        if value > limit:
            raise CoordinateError(f"坐标越界: {text!r}", line_number, column, self.source)
        return -value if match.group(2) in "SW" else value

    def _parse_int(self, field_, line_number: int) -> Optional[int]:
        text, column = field_
        try:
            value = int(text)
        except ValueError:
            raise Hurdat2ParseError(f"整数字段无效: {text!r}", line_number, column, self.source)
        return None if value == MISSING else value


def parse_hurdat2(stream: TextIO, source: str = "<hurdat2>") -> List[StormTrack]:
    return Hurdat2Parser(source).parse(stream)


def _format_coordinate(value: float, positive: str, negative: str, width: int) -> str:
    hemisphere = positive if value >= 0 else negative
    return f"{abs(value):.1f}{hemisphere}".rjust(width)


def _format_int(value: Optional[int], width: int) -> str:
    return str(MISSING if value is None else value).rjust(width)


def serialize_hurdat2(storms: Iterable[StormTrack]) -> str:
    """按 HURDAT2 版式重新输出; 与解析互为逆操作"""
    lines = []
    for header, points in storms:
        lines.append(f"{header.storm_id}, {header.name.rjust(18)}, {str(len(points)).rjust(6)},")
        for p in points:
            parts = [
                p.timestamp.strftime("%Y%m%d"),
                p.timestamp.strftime(" %H%M"),
                p.record_identifier.rjust(2),
                p.system_status.rjust(3),
                _format_coordinate(p.latitude, "N", "S", 6),
                _format_coordinate(p.longitude, "E", "W", 7),
                _format_int(p.max_wind, 4),
                _format_int(p.min_pressure, 5),
            ]
            parts.extend(_format_int(r, 5) for r in p.wind_radii)
            if p.radius_max_wind is not None:
                parts.append(_format_int(p.radius_max_wind, 5))
            lines.append(",".join(parts) + ",")
    return "\n".join(lines) + "\n"
