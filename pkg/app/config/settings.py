import os
from pathlib import Path
from dotenv import load_dotenv
from typing import Dict

# 加载环境变量
load_dotenv()

# 基础路径配置
BASE_DIR = Path(__file__).parent.parent
ASSETS_DIR = BASE_DIR / "assets"
FIXTURES_DIR = ASSETS_DIR / "fixtures"
NUMERICS_CONFIG_PATH = BASE_DIR / "config" / "numerics.yml"

# 应用配置
APP_NAME = "h2net"
APP_VERSION = "1.0.0"
APP_DESCRIPTION = "Suboptimal distributed H2 protocol design for homogeneous multi-agent networks"

# 数值参数覆盖（section.key=value,...）
NUM_TOL_ENV = "H2NET_NUM_TOL"

# 设计默认值（与仿真示例一致）
DEFAULT_EPS = 1e-3
DEFAULT_SIGMA = 1e-3
DEFAULT_NOISE_FORM = "EEt"

# 求积默认值
DEFAULT_QUADRATURE_T = 60.0
DEFAULT_QUADRATURE_DT = 0.005

# 仿真默认值
DEFAULT_PULSE_WIDTH = 1e-3

# 输出格式
PRINT_DIGITS = 6

# 退出码配置
EXIT_CODES: Dict[str, int] = {
    'SUCCESS': 0,
    'INTERNAL': 1,
    'INFEASIBLE': 2,
    'INVALID_INPUT': 3,
    'NUMERICAL': 4,
    'IO': 5,
}

# 错误消息配置
ERROR_MESSAGES = {
    'INVALID_INPUT': 'Invalid input',
    'NUMERICAL_FAILURE': 'Numerical failure',
    'INFEASIBLE': 'Design infeasible for the requested tolerance',
    'NOT_SUBOPTIMAL': 'Protocol does not meet the requested tolerance',
    'IO_FAILED': 'File operation failed',
    'INTERNAL': 'Internal error',
}

# 日志配置
LOG_LEVEL = os.getenv('H2NET_LOG_LEVEL', 'WARNING').upper()

LOG_CONFIG = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'standard': {
            'format': '%(asctime)s [%(levelname)s] %(name)s: %(message)s'
        },
    },
    'handlers': {
        'default': {
            'level': 'DEBUG',
            'formatter': 'standard',
            'class': 'logging.StreamHandler',
            'stream': 'ext://sys.stderr',
        },
    },
    'loggers': {
        '': {  # root logger
            'handlers': ['default'],
            'level': LOG_LEVEL,
            'propagate': True
        }
    }
}
