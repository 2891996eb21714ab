# main.py (source-tree runner)

import sys
from pathlib import Path

# 'src' must be importable before the package is loaded
try:
    project_root = Path(__file__).resolve().parent
    sys.path.insert(0, str(project_root / "src"))
    from opdpipe.cli import cli
except ImportError as e:
    print(f"FATAL: Could not bootstrap opdpipe. Ensure 'src' directory exists and is valid: {e}")
    sys.exit(1)


if __name__ == "__main__":
    cli()
