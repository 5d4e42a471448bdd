import csv
import logging
from pathlib import Path
from typing import List, Optional, Tuple, Union

from app.core.netsim import Trajectory

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def csv_header(traj: Trajectory) -> List[str]:
    """t, x_<agent>_<component>..., w_..., u_..., disagreement（编号从 1 开始）"""
    _, N, n = traj.x.shape
    m = traj.u.shape[2]
    header = ["t"]
    for prefix, width in (("x", n), ("w", n), ("u", m)):
        header += [f"{prefix}_{agent + 1}_{comp + 1}" for agent in range(N) for comp in range(width)]
    header.append("disagreement")
    return header


def export_csv(traj: Trajectory, path: PathLike) -> Path:
    """
    导出轨迹 CSV，全精度
    Args:
        traj: 仿真轨迹（空轨迹只写表头）
        path: 输出路径
    Returns:
        Path: 写入的文件路径
    """
    path = Path(path)
    S = traj.sample_count
    try:
        with open(path, 'w', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(csv_header(traj))
            for k in range(S):
                row = [traj.times[k]]
                row += traj.x[k].ravel().tolist()
                row += traj.w[k].ravel().tolist()
                row += traj.u[k].ravel().tolist()
                row.append(traj.disagreement[k])
                writer.writerow([repr(float(v)) for v in row])
        logger.info(f"Trajectory with {S} samples written to {path}")
        return path
    except OSError as e:
        logger.error(f"Failed to write trajectory CSV {path}: {str(e)}")
        raise


def read_csv(path: PathLike) -> Tuple[List[str], List[List[float]]]:
    """读取 export_csv 生成的文件，返回 (表头, 数据行)"""
    with open(path, 'r', newline='') as f:
        reader = csv.reader(f)
        header = next(reader, [])
        rows = [[float(v) for v in row] for row in reader if row]
    return header, rows


def emit_gnuplot(traj: Trajectory, path: PathLike, csv_path: Optional[PathLike] = None) -> Path:
    """
    生成 gnuplot 脚本：每个状态分量一个面板，先 x 后 w
    Args:
        csv_path: 数据文件路径，默认与脚本同名的 .csv
    """
    path = Path(path)
    data = Path(csv_path) if csv_path is not None else path.with_suffix('.csv')
    _, N, n = traj.x.shape
    header = csv_header(traj)
    panels = [("x", comp) for comp in range(n)] + [("w", comp) for comp in range(n)]

    lines = [
        "set datafile separator ','",
        "set key outside right",
        "set xlabel 't'",
        f"set multiplot layout {len(panels)},1 title 'Agent and protocol states'",
    ]
    for prefix, comp in panels:
        series = []
        for agent in range(N):
            name = f"{prefix}_{agent + 1}_{comp + 1}"
            column = header.index(name) + 1
            series.append(f"'{data.name}' using 1:{column} with lines title '{name}'")
        lines.append(f"set ylabel '{prefix}_{{i,{comp + 1}}}'")
        lines.append("plot " + ", \\\n     ".join(series))
    lines.append("unset multiplot")

    try:
        path.write_text("\n".join(lines) + "\n")
        logger.info(f"Gnuplot script written to {path}")
        return path
    except OSError as e:
        logger.error(f"Failed to write gnuplot script {path}: {str(e)}")
        raise
