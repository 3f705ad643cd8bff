import platform

import numpy
import scipy


def get_system_info():
    try:
        return {
            "python": platform.python_version(),
            "numpy": numpy.__version__,
            "scipy": scipy.__version__,
            "machine": platform.machine() or "N/A",
        }
    except Exception as e:
        return {"python": f"Error: {e}", "numpy": "N/A", "scipy": "N/A", "machine": "N/A"}


def build_identifier(version):
    info = get_system_info()
    return f"honeydirac {version} (python {info['python']}, numpy {info['numpy']}, scipy {info['scipy']})"
